//! Independent reference solutions: the effective Hamiltonian and a monotone
//! finite-difference solver for both the oscillatory and the effective problem.

pub mod effective;
pub mod fd;

pub use effective::{cell_momenta, effective_hamiltonian, flat_piece, EffectiveTable};
pub use fd::{fd_solve_effective, fd_solve_oscillatory, FdSettings, FdWindow, Flux, GridSolution};
