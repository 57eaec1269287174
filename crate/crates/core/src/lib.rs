pub mod coupling;
pub mod error;
pub mod fem;
pub mod harness;
pub mod heat;
pub mod flow;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod rheology;

pub use error::{Error, Result};
