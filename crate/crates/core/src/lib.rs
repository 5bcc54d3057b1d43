pub mod ao;
pub mod chance;
pub mod conic;
pub mod error;
pub mod gemm;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod scene;
pub mod sdr;

pub use error::{Error, Result};
