//! Solves a few small conic programs with known optima.

use robust_isac::conic::{solve, Cone, ProgramBuilder, Settings};

fn main() -> anyhow::Result<()> {
    // min t  s.t. ||(3, 4)|| <= t
    let mut pb = ProgramBuilder::new();
    let t = pb.add_block("t", Cone::Soc(3));
    pb.add_cost(t.col(0), 1.0);
    pb.add_row(vec![(t.col(1), 1.0)], 3.0);
    pb.add_row(vec![(t.col(2), 1.0)], 4.0);
    let sol = solve(&pb.build(), &Settings::default())?;
    println!("norm epigraph: {:?} objective {:.9} (expected 5)", sol.status, sol.primal_objective);

    // min <C, X>  s.t. tr X = 1, X psd, with C = [[2, 1], [1, 2]]
    let mut pb = ProgramBuilder::new();
    let x = pb.add_block("X", Cone::Psd(2));
    pb.add_cost(x.psd_index(0, 0), 2.0);
    pb.add_cost(x.psd_index(1, 1), 2.0);
    pb.add_cost(x.psd_index(1, 0), std::f64::consts::SQRT_2);
    pb.add_row(vec![(x.psd_index(0, 0), 1.0), (x.psd_index(1, 1), 1.0)], 1.0);
    let sol = solve(&pb.build(), &Settings::default())?;
    println!(
        "smallest eigenvalue: {:?} objective {:.9} (expected 1) in {} iterations",
        sol.status, sol.primal_objective, sol.iterations
    );

    // min x0 + 2 x1  s.t. x0 + x1 = 1, x >= 0
    let mut pb = ProgramBuilder::new();
    let v = pb.add_block("x", Cone::NonNeg(2));
    pb.add_cost(v.col(0), 1.0);
    pb.add_cost(v.col(1), 2.0);
    pb.add_row(vec![(v.col(0), 1.0), (v.col(1), 1.0)], 1.0);
    let sol = solve(&pb.build(), &Settings::default())?;
    println!("simplex LP: {:?} objective {:.9} (expected 1)", sol.status, sol.primal_objective);
    Ok(())
}
