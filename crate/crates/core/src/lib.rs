//! Sonine kernel pairs with variable exponents, and solvers for the
//! Volterra equations, nonlocal ODEs and subdiffusion problems built on them.

pub mod error;
pub mod expr;
pub mod kernels;
pub mod quadrature;

pub use error::{Error, Result};
pub mod sonine;
pub mod vie;
pub mod subdiffusion;
