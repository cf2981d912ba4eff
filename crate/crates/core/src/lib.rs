pub mod boxexp;
pub mod catalog;
pub mod error;
pub mod expr;
pub mod hilbert;
pub mod optimizer;
pub mod quadrature;
pub mod sinc;
pub mod transform;

pub use error::{Error, Result};
