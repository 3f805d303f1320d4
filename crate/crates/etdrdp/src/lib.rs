//! Solvers for stiff nonlinear reaction-diffusion systems.
//!
//! The centerpiece is a second-order L-stable exponential time differencing
//! stepper whose matrix exponentials are replaced by a rational approximation
//! with real distinct poles, combined with integrating-factor dimensional
//! splitting so that every linear solve involves only a one-dimensional
//! operator. Supporting pieces: offset-banded Thomas and circulant/DFT linear
//! solvers, second-order IMEX baselines, a catalog of benchmark problems, and
//! a study harness with a small CLI.

pub mod bandsolve;
pub mod baselines;
pub mod config;
pub mod etd;
pub mod field;
pub mod harness;
pub mod operators;
pub mod oracle;
pub mod problems;

pub use num_complex::Complex64;
