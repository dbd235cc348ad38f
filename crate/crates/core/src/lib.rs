pub mod cholesky;
pub mod cli;
pub mod coarse;
pub mod dgspace;
pub mod error;
pub mod krylov;
pub mod mesh;
pub mod partition;
pub mod schwarz;
pub mod sipg;
pub mod sparse;

pub use error::{Error, Result};
