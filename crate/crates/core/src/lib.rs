//! Stationary α-stable and α-semi-stable processes built as Poisson integrals
//! over the Maharam extension of a nonsingular system, with the diagnostics
//! that classify them (Koopman correlations, zero type, rigidity).

pub mod base;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod integrals;
pub mod levy;
pub mod maharam;
pub mod mc;
pub mod rng;
pub mod simulator;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
