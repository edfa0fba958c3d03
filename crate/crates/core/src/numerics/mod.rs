//! Numerical building blocks: special functions, root finding, quadrature.

pub mod bessel;
pub mod quadrature;
pub mod roots;
