//! Bayesian quantum state estimation.
//!
//! `qbayes-core` contains the numerical engine: Hermitian linear algebra and
//! quantum-information functionals, random-state ensembles (Ginibre, Haar,
//! Bures, Dirichlet mixtures), Pauli measurement simulation with the Born-rule
//! likelihood, Gaussian-reference parameterizations of several priors, a
//! preconditioned Crank–Nicolson sampler, and the Cholesky τ-vector codec used
//! by point estimators.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, wall clocks and
//! the command line live in the companion `qbayes` crate.

#![no_std]
#![deny(missing_debug_implementations)]

extern crate alloc;

mod error;

pub mod ensembles;
pub mod estimators;
pub mod linalg;
pub mod mcmc;
pub mod measurement;
pub mod priors;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{CMatrix, DensityMatrix, StateVector, C64};
pub use rng::{RngSeed, RngStream};
