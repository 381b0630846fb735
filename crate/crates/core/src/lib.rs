//! Empirical-prior Bayes posteriors with Monte Carlo concentration-rate studies.
//!
//! This crate builds data-dependent priors centered on sieve maximum
//! likelihood estimators for six model families (Gaussian location, random
//! histograms, finite kernel mixtures, sparse normal means, fixed-design
//! regression, and adaptive mixtures), forms the corresponding posteriors
//! (exact conjugate forms, subset enumeration, Gibbs, or independence
//! Metropolis-Hastings with an optional fractional likelihood power), and
//! measures how fast those posteriors concentrate around the truth as the
//! sample size grows.
//!
//! Everything here is deterministic given explicit seeds and free of I/O;
//! the companion `ebconc` crate supplies the CLI, file formats, and the
//! parallel replicate driver.
//!
//! # Example
//!
//! The parametric pipeline end to end: simulate, fit, center the prior on
//! the fit, form the exact posterior, draw from it.
//!
//! ```
//! use ebconc_core::model::{simulate, ModelFamily, ModelSpec, ParamPoint, SieveIndex};
//! use ebconc_core::posterior::{posterior_gaussian_location, PosteriorRep};
//! use ebconc_core::prior::{build_prior, EmpiricalPrior, Schedule};
//! use ebconc_core::sieve::sieve_mle;
//!
//! let model = ModelSpec::new(ModelFamily::GaussianLocation, 500)?;
//! let data = simulate(&model, &ParamPoint::location(0.7), 42)?;
//! let fit = sieve_mle(&model, &SieveIndex::Dimension(1), &data, None)?;
//! let schedule = Schedule::gaussian_location(model.n, 1.0)?;
//! let prior = match build_prior(&model, &fit.point, &schedule)? {
//!     EmpiricalPrior::Gaussian(g) => g,
//!     _ => unreachable!(),
//! };
//! let posterior = posterior_gaussian_location(&prior, &model, &data, 1.0)?;
//! let draws = PosteriorRep::ExactGaussian(posterior).sample_exact(1000, 7)?;
//! assert_eq!(draws.len(), 1000);
//! # Ok::<(), ebconc_core::Error>(())
//! ```

#![no_std]
// Guards written as `!(x > 0.0)` intentionally reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod basis;
pub mod divergence;
pub mod error;
pub mod linalg;
pub mod model;
pub mod posterior;
pub mod prior;
pub mod probe;
pub mod rate;
pub mod rng;
pub mod sieve;
pub mod special;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
