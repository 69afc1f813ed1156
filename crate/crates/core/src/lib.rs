//! Leave-one-out and cross-validation prediction intervals with
//! distribution-free coverage guarantees.
//!
//! The crate covers the whole family of residual-quantile interval
//! constructions for regression: naive, split conformal, jackknife,
//! jackknife+, jackknife-minmax, CV+, cross-conformal and (grid) full
//! conformal. Alongside the methods it ships
//!
//! * an [`oracle`] that rebuilds the pairwise-deleted residual tournament
//!   for a concrete instance and audits the combinatorial bounds behind the
//!   coverage guarantees,
//! * empirical [`stability`] estimation and the stability-based bounds,
//! * a seeded Monte Carlo harness in [`eval`], including the adversarial
//!   constructions on which the jackknife collapses.
//!
//! ```
//! use jackplus::data::Dataset;
//! use jackplus::intervals::{IntervalSpec, LooCache};
//! use jackplus::regress::ConstantMean;
//!
//! let train = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], &[0.0, 0.0, 3.0]).unwrap();
//! let cache = LooCache::leave_one_out(&train, &ConstantMean).unwrap();
//! let spec = IntervalSpec::symmetric(0.25).unwrap();
//! let pi = cache.jackknife_plus(&spec, &[5.0]).unwrap();
//! assert_eq!((pi.lower, pi.upper), (-3.0, 3.0));
//! ```

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod intervals;
pub mod oracle;
pub mod quantile;
pub mod regress;
pub mod rng;
pub mod stability;

pub use error::{Error, Result};
