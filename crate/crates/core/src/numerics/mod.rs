//! Numerical building blocks shared by the evaluators and the oracle.

pub mod minimize;
pub mod ode;
pub mod quadrature;
pub mod roots;
