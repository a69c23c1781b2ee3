//! Special functions, scalar optimisation and one-dimensional quadrature.

pub mod optimize;
pub mod quadrature;
pub mod special;
