//! Estimation of tail pairwise dependence matrices (TPDM) from heavy-tailed
//! multivariate data, their iterative approximate completely positive
//! decomposition into max-linear models, and analytic probabilities of
//! extreme failure regions, validated by seeded Monte Carlo simulation.

pub mod decomp;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod margins;
pub mod maxlin;
pub mod numeric;
pub mod regions;
pub mod rng;
pub mod synthetic;
pub mod tpdm;

pub use error::{Error, Result};
