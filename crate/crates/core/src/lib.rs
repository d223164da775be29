//! Automatic Bayesian cubature on shifted rank-1 lattices.
//!
//! The integrand is modeled as a Gaussian process with a shift-invariant
//! product kernel built from even Bernoulli polynomials. Sampling on a
//! randomly shifted rank-1 lattice makes the kernel's Gram matrix circulant,
//! so the posterior mean and a Student-t credible interval for the integral
//! cost O(n log n) per step via the fast Fourier transform instead of the
//! O(n³) dense solves. [`fast::auto_cubature`] doubles the sample size,
//! re-fitting the kernel hyperparameters by empirical Bayes each step, until
//! the credible half-width is within the requested tolerance.
//!
//! Module map:
//! - [`kernel`]: the Bernoulli-polynomial product kernel and its parameters;
//! - [`lattice`]: extensible shifted rank-1 lattice node sets;
//! - [`transform`]: the FFT, spectral decomposition of the lattice Gram
//!   matrix, and the order-preserving sample mean;
//! - [`posterior`]: Student-t credible-interval machinery;
//! - [`dense`]: O(n³) reference implementations of every posterior formula,
//!   valid for arbitrary nodes — the oracle the fast path is tested against;
//! - [`fast`]: the O(n log n) spectral path and the automatic engine;
//! - [`integrands`]: test problems, including the Asian option benchmark;
//! - [`par`]: data-parallel helpers (sequential without the `parallel`
//!   feature, with identical results either way).

pub mod dense;
pub mod error;
pub mod fast;
pub mod integrands;
pub mod kernel;
pub mod lattice;
pub mod par;
pub mod posterior;
pub mod transform;

pub use error::{CubatureError, Result};
pub use fast::{auto_cubature, CubatureConfig, CubatureResult, StepTrace};
pub use kernel::KernelParams;
pub use lattice::LatticeRule;
pub use posterior::PosteriorSummary;
