pub mod cli;
pub mod covariance;
pub mod error;
pub mod field;
pub mod functionals;
pub mod hermite;
pub mod quadrature;
pub mod special;
pub mod study;
pub mod surface;

pub use error::{Error, Result};
