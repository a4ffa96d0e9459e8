//! Off-the-grid estimation of mixtures shared by many signals.
//!
//! Each signal `z` in a finite population is observed as
//! `Y(z) = Σ_k B_k(z) φ(θ_k) + W(z)` with unit-norm features `φ(θ) ∈ ℝ^T`. The
//! estimator penalises the fit by `κ Σ_k ‖B_k‖_{L^p(ν)}`, which selects parameters
//! shared by the whole population.
//!
//! * [`measure`]: measures on signal labels, mixed norms, synthesis.
//! * [`dictionary`]: built-in feature maps with analytic derivatives.
//! * [`kernel`] and [`limit`]: kernel geometry and limit kernels.
//! * [`certificates`]: dual certificates, thresholds and assumption checks.
//! * [`solver`]: greedy insertion plus proximal and local refinement.
//! * [`noise`]: Gaussian noise, chi-square tail bounds and tuning constants.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod certificates;
pub mod dictionary;
mod error;
pub mod kernel;
pub mod limit;
pub mod measure;
pub mod noise;
mod quadrature;
mod search;
pub mod solver;

pub use error::{Error, Result};
