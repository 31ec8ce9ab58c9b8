//! Zero-order (gradient-free) mini-batch SGD for objectives satisfying the
//! Polyak–Lojasiewicz condition.
//!
//! The crate is `no_std` (with `alloc`) and contains only the numerical core:
//!
//! - [`kernels`]: odd Legendre-type smoothing kernels and their moment certificates.
//! - [`noise`] and [`oracle`]: zero-order oracles with deterministic, stochastic
//!   and mixed adversarial noise, with exact call accounting.
//! - [`sampling`] and [`estimators`]: sphere sampling, reproducible substreams and
//!   the kernel / Gaussian / L2 randomized gradient estimators.
//! - [`benchmark`]: the nonlinear-equations test family and quadratic test objectives.
//! - [`optimizer`]: the mini-batch SGD loop driven by any gradient source,
//!   including a synthetic biased first-order oracle.
//! - [`theory`]: closed-form bound and complexity calculators.
//! - [`analysis`]: error-floor estimation and log-log slope fitting.
//!
//! File formats, configuration and the command line live in the companion
//! `zopl` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod benchmark;
mod error;
pub mod estimators;
pub mod kernels;
mod linalg;
pub mod noise;
pub mod optimizer;
pub mod oracle;
pub mod sampling;
pub mod theory;

pub use error::{Error, Result};
