//! Quantum-scrambling diagnostics and training-error quantities for
//! brick-wall parameterized circuits on small registers.

pub mod error;
pub mod linalg;
pub mod pauli;
pub mod randmat;
pub mod circuit;
pub mod scrambling;
pub mod loss;
pub mod gradient;

pub use error::{Error, Result};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
