//! Prediction intervals and prediction sets.
//!
//! The leave-out methods share a [`LooCache`]: the per-fold models, the
//! out-of-fold residuals and the full-data fit. Given a cache, every
//! interval at a test point costs model evaluations and two quantile
//! selections, no refitting.
//!
//! | method            | entry point                          |
//! |-------------------|--------------------------------------|
//! | naive             | [`LooCache::naive`] / [`naive_interval`] |
//! | split conformal   | [`SplitFit::interval`] / [`split_conformal`] |
//! | jackknife         | [`LooCache::jackknife`] / [`jackknife`] |
//! | jackknife+        | [`LooCache::jackknife_plus`]         |
//! | jackknife-minmax  | [`LooCache::jackknife_minmax`]       |
//! | CV+               | [`LooCache::cv_plus`]                |
//! | cross-conformal   | [`LooCache::cross_conformal_set`]    |
//! | full conformal    | [`full_conformal_set`]               |
//!
//! Intervals are closed. An interval whose lower end exceeds its upper end
//! is empty and is kept that way rather than swapped.

mod cache;
mod conformal;
mod split;

pub use cache::{FoldPlan, LooCache};
pub use conformal::{
    cross_conformal_includes, cross_conformal_score, full_conformal_includes, full_conformal_set,
    sweep_cross_conformal, GridSpec,
};
pub use split::SplitFit;

use std::fmt;

use crate::data::{Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::quantile::{lower_quantile, upper_quantile};
use crate::regress::Regressor;

/// Symmetric intervals use absolute residuals at level `alpha`; asymmetric
/// ones use signed residuals with `alpha_lo` in the lower tail and
/// `alpha_hi` in the upper tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Symmetric,
    Asymmetric { alpha_lo: f64, alpha_hi: f64 },
}

/// Target miscoverage, tail mode and additive inflation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSpec {
    pub alpha: f64,
    pub mode: Mode,
    pub inflation: f64,
}

impl IntervalSpec {
    pub fn symmetric(alpha: f64) -> Result<Self> {
        let spec = Self {
            alpha,
            mode: Mode::Symmetric,
            inflation: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `alpha = alpha_lo + alpha_hi`, both strictly positive.
    pub fn asymmetric(alpha_lo: f64, alpha_hi: f64) -> Result<Self> {
        let spec = Self {
            alpha: alpha_lo + alpha_hi,
            mode: Mode::Asymmetric { alpha_lo, alpha_hi },
            inflation: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_inflation(mut self, eps: f64) -> Result<Self> {
        self.inflation = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        if !(self.inflation >= 0.0) || !self.inflation.is_finite() {
            return Err(Error::param("inflation must be finite and >= 0"));
        }
        if let Mode::Asymmetric { alpha_lo, alpha_hi } = self.mode {
            if !(alpha_lo > 0.0 && alpha_hi > 0.0) {
                return Err(Error::param("asymmetric levels must both be positive"));
            }
            if (alpha_lo + alpha_hi - self.alpha).abs() > 1e-12 {
                return Err(Error::param("asymmetric levels must sum to alpha"));
            }
            if alpha_lo > 1.0 || alpha_hi > 1.0 {
                return Err(Error::param("asymmetric levels must not exceed 1"));
            }
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        self.mode == Mode::Symmetric
    }
}

/// A closed interval over the extended reals. Empty when `lower > upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
}

impl PredictionInterval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn everything() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn is_empty(&self) -> bool {
        self.lower > self.upper
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }

    /// `upper - lower`, `0` for an empty interval, `+inf` when unbounded.
    pub fn width(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.upper - self.lower
        }
    }

    pub fn inflate(self, eps: f64) -> Self {
        if eps == 0.0 {
            return self;
        }
        Self::new(self.lower - eps, self.upper + eps)
    }

    pub fn is_subset_of(&self, other: &PredictionInterval) -> bool {
        self.is_empty() || (other.lower <= self.lower && self.upper <= other.upper)
    }
}

impl fmt::Display for PredictionInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}

/// One maximal piece of a [`PredictionSet`]. Endpoints carry their own
/// closedness because the cross-conformal set can exclude isolated points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl Segment {
    pub fn closed(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            lower_closed: lower.is_finite(),
            upper_closed: upper.is_finite(),
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        let above = if self.lower_closed {
            self.lower <= y
        } else {
            self.lower < y
        };
        let below = if self.upper_closed {
            y <= self.upper
        } else {
            y < self.upper
        };
        above && below
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// A finite union of sorted, pairwise disjoint, non-adjacent segments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionSet {
    pub segments: Vec<Segment>,
}

impl PredictionSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn contains(&self, y: f64) -> bool {
        self.segments.iter().any(|s| s.contains(y))
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Smallest closed interval containing the set.
    pub fn hull(&self) -> Option<PredictionInterval> {
        Some(PredictionInterval::new(
            self.segments.first()?.lower,
            self.segments.last()?.upper,
        ))
    }

    pub fn is_subset_of(&self, outer: &PredictionInterval) -> bool {
        self.hull().is_none_or(|h| h.is_subset_of(outer))
    }

    /// Sorted, disjoint and maximal.
    pub fn is_canonical(&self) -> bool {
        self.segments.iter().all(|s| {
            s.lower < s.upper || (s.lower == s.upper && s.lower_closed && s.upper_closed)
        }) && self.segments.windows(2).all(|w| {
            w[0].upper < w[1].lower || (w[0].upper == w[1].lower && !w[0].upper_closed && !w[1].lower_closed)
        })
    }
}

/// Output of any method: an interval or a set.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Interval(PredictionInterval),
    Set(PredictionSet),
}

impl Prediction {
    pub fn contains(&self, y: f64) -> bool {
        match self {
            Prediction::Interval(i) => i.contains(y),
            Prediction::Set(s) => s.contains(y),
        }
    }

    /// Total length; sums component lengths for sets.
    pub fn width(&self) -> f64 {
        match self {
            Prediction::Interval(i) => i.width(),
            Prediction::Set(s) => s.total_length(),
        }
    }
}

/// Closed-interval membership for intervals and sets.
pub fn contains(prediction: &Prediction, y: f64) -> bool {
    prediction.contains(y)
}

/// `center +- q(residuals)`, or `center + [q_lo(signed), q_hi(signed)]` in
/// asymmetric mode. Inflation is applied afterwards.
pub(crate) fn centered(
    center: f64,
    abs_residuals: &[f64],
    signed_residuals: &[f64],
    spec: &IntervalSpec,
) -> Result<PredictionInterval> {
    let pi = match spec.mode {
        Mode::Symmetric => {
            let q = upper_quantile(abs_residuals, spec.alpha)?;
            PredictionInterval::new(center - q, center + q)
        }
        Mode::Asymmetric { alpha_lo, alpha_hi } => PredictionInterval::new(
            center + lower_quantile(signed_residuals, alpha_lo)?,
            center + upper_quantile(signed_residuals, alpha_hi)?,
        ),
    };
    Ok(pi.inflate(spec.inflation))
}

/// The jackknife+ / CV+ construction from per-point leave-out predictions
/// at the test point and the matching leave-out residuals.
pub fn plus_interval(
    loo_predictions: &[f64],
    abs_residuals: &[f64],
    signed_residuals: &[f64],
    spec: &IntervalSpec,
) -> Result<PredictionInterval> {
    let pi = match spec.mode {
        Mode::Symmetric => {
            let lo: Vec<f64> = loo_predictions
                .iter()
                .zip(abs_residuals)
                .map(|(m, r)| m - r)
                .collect();
            let hi: Vec<f64> = loo_predictions
                .iter()
                .zip(abs_residuals)
                .map(|(m, r)| m + r)
                .collect();
            PredictionInterval::new(
                lower_quantile(&lo, spec.alpha)?,
                upper_quantile(&hi, spec.alpha)?,
            )
        }
        Mode::Asymmetric { alpha_lo, alpha_hi } => {
            let shifted: Vec<f64> = loo_predictions
                .iter()
                .zip(signed_residuals)
                .map(|(m, r)| m + r)
                .collect();
            PredictionInterval::new(
                lower_quantile(&shifted, alpha_lo)?,
                upper_quantile(&shifted, alpha_hi)?,
            )
        }
    };
    Ok(pi.inflate(spec.inflation))
}

/// The jackknife-minmax construction.
pub fn minmax_interval(
    loo_predictions: &[f64],
    abs_residuals: &[f64],
    signed_residuals: &[f64],
    spec: &IntervalSpec,
) -> Result<PredictionInterval> {
    let lo_center = loo_predictions.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_center = loo_predictions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pi = match spec.mode {
        Mode::Symmetric => {
            let q = upper_quantile(abs_residuals, spec.alpha)?;
            PredictionInterval::new(lo_center - q, hi_center + q)
        }
        Mode::Asymmetric { alpha_lo, alpha_hi } => PredictionInterval::new(
            lo_center + lower_quantile(signed_residuals, alpha_lo)?,
            hi_center + upper_quantile(signed_residuals, alpha_hi)?,
        ),
    };
    Ok(pi.inflate(spec.inflation))
}

/// Naive interval: full-data fit, in-sample residual quantile.
pub fn naive_interval(
    train: &Dataset,
    reg: &dyn Regressor,
    spec: &IntervalSpec,
    x_test: &[f64],
) -> Result<PredictionInterval> {
    spec.validate()?;
    let model = reg.fit(train)?;
    let signed: Vec<f64> = (0..train.len())
        .map(|i| train.response(i) - model.predict(train.row(i)))
        .collect();
    let abs: Vec<f64> = signed.iter().map(|r| r.abs()).collect();
    centered(model.predict(x_test), &abs, &signed, spec)
}

/// Jackknife interval built from scratch (full fit plus `n` leave-one-out
/// fits).
pub fn jackknife(
    train: &Dataset,
    reg: &dyn Regressor,
    spec: &IntervalSpec,
    x_test: &[f64],
) -> Result<PredictionInterval> {
    if train.len() < 2 {
        return Err(Error::param("jackknife needs at least 2 training rows"));
    }
    LooCache::leave_one_out(train, reg)?.jackknife(spec, x_test)
}

/// Split conformal built from scratch.
pub fn split_conformal(
    train: &Dataset,
    reg: &dyn Regressor,
    spec: &IntervalSpec,
    split: &SplitSpec,
    x_test: &[f64],
) -> Result<PredictionInterval> {
    SplitFit::new(train, reg, split)?.interval(spec, x_test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::{ConstantMean, Memorizer};

    fn worked() -> Dataset {
        Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], &[0.0, 0.0, 3.0]).unwrap()
    }

    #[test]
    fn naive_worked_example() {
        let spec = IntervalSpec::symmetric(0.25).unwrap();
        let pi = naive_interval(&worked(), &ConstantMean, &spec, &[7.0]).unwrap();
        assert_eq!((pi.lower, pi.upper), (-1.0, 3.0));
        let inflated = naive_interval(&worked(), &ConstantMean, &spec.with_inflation(0.5).unwrap(), &[7.0]).unwrap();
        assert_eq!((inflated.lower, inflated.upper), (-1.5, 3.5));
    }

    #[test]
    fn naive_memorizer_has_zero_width() {
        let train = Dataset::from_rows(&[vec![0.3], vec![-1.2], vec![2.5], vec![0.9]], &[0.0; 4]).unwrap();
        for alpha in [0.2, 0.5, 0.9] {
            let spec = IntervalSpec::symmetric(alpha).unwrap();
            let pi = naive_interval(&train, &Memorizer::new(1.0).unwrap(), &spec, &[0.1]).unwrap();
            assert_eq!(pi.width(), 0.0);
        }
    }

    #[test]
    fn jackknife_worked_example() {
        let spec = IntervalSpec::symmetric(0.25).unwrap();
        let pi = jackknife(&worked(), &ConstantMean, &spec, &[7.0]).unwrap();
        assert_eq!((pi.lower, pi.upper), (-2.0, 4.0));
    }

    #[test]
    fn jackknife_memorizer_misses_zero() {
        let train = Dataset::from_rows(&[vec![0.3], vec![-1.2], vec![2.5]], &[0.0; 3]).unwrap();
        let spec = IntervalSpec::symmetric(0.25).unwrap();
        let pi = jackknife(&train, &Memorizer::new(1.0).unwrap(), &spec, &[0.7]).unwrap();
        assert_eq!((pi.lower, pi.upper), (2.0, 10.0));
        assert!(!pi.contains(0.0));
    }

    #[test]
    fn jackknife_needs_two_rows() {
        let one = Dataset::from_rows(&[vec![0.0]], &[1.0]).unwrap();
        let spec = IntervalSpec::symmetric(0.25).unwrap();
        assert!(jackknife(&one, &ConstantMean, &spec, &[0.0]).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(IntervalSpec::symmetric(1.2).is_err());
        assert!(IntervalSpec::asymmetric(0.0, 0.1).is_err());
        assert!(IntervalSpec::asymmetric(0.05, 0.05).is_ok());
        assert!(IntervalSpec::symmetric(0.1).unwrap().with_inflation(-1.0).is_err());
        let bad = IntervalSpec {
            alpha: 0.1,
            mode: Mode::Asymmetric {
                alpha_lo: 0.05,
                alpha_hi: 0.06,
            },
            inflation: 0.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn membership() {
        let pi = PredictionInterval::new(-3.0, 3.0);
        assert!(contains(&Prediction::Interval(pi), 3.0));
        let empty = PredictionInterval::new(1.0, 0.0);
        assert!(empty.is_empty());
        assert!(!contains(&Prediction::Interval(empty), 0.5));
        let set = PredictionSet {
            segments: vec![Segment::closed(0.0, 1.0), Segment::closed(2.0, 3.0)],
        };
        assert!(set.is_canonical());
        assert!(!contains(&Prediction::Set(set.clone()), 1.5));
        assert!(contains(&Prediction::Set(set.clone()), 1.0));
        assert_eq!(Prediction::Set(set).width(), 2.0);
    }

    #[test]
    fn inflation_is_monotone() {
        let pi = PredictionInterval::new(-1.0, 2.0);
        assert!(pi.inflate(0.1).is_subset_of(&pi.inflate(0.3)));
        assert_eq!(pi.inflate(0.0), pi);
    }
}
