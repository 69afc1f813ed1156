//! Cross-conformal and full conformal prediction sets.

use rayon::prelude::*;

use super::{IntervalSpec, PredictionSet, Segment};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::quantile::upper_quantile;
use crate::regress::Regressor;

/// Cross-conformal score at `y`: `(strict, equal)` counts over the
/// breakpoints `lo_i = m_i - R_i`, `hi_i = m_i + R_i`, where `strict`
/// counts `lo_i < y < hi_i` and `equal` counts `y` landing on `lo_i` or
/// `hi_i`.
pub fn cross_conformal_score(centers: &[f64], residuals: &[f64], y: f64) -> (usize, usize) {
    let mut strict = 0;
    let mut equal = 0;
    for (m, r) in centers.iter().zip(residuals) {
        let (lo, hi) = (m - r, m + r);
        if lo < y && y < hi {
            strict += 1;
        } else if y == lo || y == hi {
            equal += 1;
        }
    }
    (strict, equal)
}

/// Membership rule: `tau + strict + tau * equal > alpha (n + 1)`.
pub fn cross_conformal_includes(strict: usize, equal: usize, n: usize, alpha: f64, tau: f64) -> bool {
    strict as f64 + tau * (1 + equal) as f64 > alpha * (n + 1) as f64
}

fn count_le(sorted: &[f64], b: f64) -> usize {
    sorted.partition_point(|&v| v <= b)
}

fn count_lt(sorted: &[f64], b: f64) -> usize {
    sorted.partition_point(|&v| v < b)
}

/// Exact cross-conformal set by sweeping the sorted breakpoints.
///
/// The real line splits into the breakpoints themselves and the open cells
/// between them. Counts are constant on each piece, so the rule is
/// evaluated once per piece and included pieces are merged.
pub fn sweep_cross_conformal(centers: &[f64], residuals: &[f64], alpha: f64, tau: f64) -> Result<PredictionSet> {
    if centers.len() != residuals.len() || centers.is_empty() {
        return Err(Error::Shape("centers and residuals must be nonempty and equal length".into()));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::param(format!("tau = {tau} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("alpha = {alpha} outside [0, 1]")));
    }
    let n = centers.len();
    let mut lo: Vec<f64> = centers.iter().zip(residuals).map(|(m, r)| m - r).collect();
    let mut hi: Vec<f64> = centers.iter().zip(residuals).map(|(m, r)| m + r).collect();
    if lo.iter().chain(&hi).any(|v| v.is_nan()) {
        return Err(Error::param("breakpoint is NaN"));
    }
    let mut degenerate: Vec<f64> = lo.iter().zip(&hi).filter(|(a, b)| a == b).map(|(a, _)| *a).collect();
    lo.sort_by(f64::total_cmp);
    hi.sort_by(f64::total_cmp);
    degenerate.sort_by(f64::total_cmp);
    let mut breaks: Vec<f64> = lo.iter().chain(&hi).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let include = |s: usize, e: usize| cross_conformal_includes(s, e, n, alpha, tau);

    // Pieces in order: (-inf, b0), {b0}, (b0, b1), ..., {bL}, (bL, inf).
    // Each is (included, lower, lower_closed, upper, upper_closed).
    let mut pieces = Vec::with_capacity(2 * breaks.len() + 1);
    pieces.push((include(0, 0), f64::NEG_INFINITY, false, breaks[0], false));
    for (j, &b) in breaks.iter().enumerate() {
        let z = count_le(&degenerate, b) - count_lt(&degenerate, b);
        let strict = count_lt(&lo, b) + z - count_le(&hi, b);
        let equal = count_le(&lo, b) - count_lt(&lo, b) + count_le(&hi, b) - count_lt(&hi, b) - z;
        pieces.push((include(strict, equal), b, true, b, true));
        let next = breaks.get(j + 1).copied().unwrap_or(f64::INFINITY);
        let open = count_le(&lo, b) - count_le(&hi, b);
        pieces.push((include(open, 0), b, false, next, false));
    }

    let mut segments: Vec<Segment> = Vec::new();
    let mut current: Option<Segment> = None;
    for (inc, l, lc, u, uc) in pieces {
        if inc {
            match current.as_mut() {
                Some(seg) => {
                    seg.upper = u;
                    seg.upper_closed = uc;
                }
                None => {
                    current = Some(Segment {
                        lower: l,
                        upper: u,
                        lower_closed: lc,
                        upper_closed: uc,
                    })
                }
            }
        } else if let Some(seg) = current.take() {
            segments.push(seg);
        }
    }
    segments.extend(current);
    Ok(PredictionSet { segments })
}

/// Candidate responses for full conformal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points: usize,
    /// Defaults to the training response range.
    pub range: Option<(f64, f64)>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 200,
            range: None,
        }
    }
}

impl GridSpec {
    pub fn with_points(points: usize) -> Self {
        Self { points, range: None }
    }

    pub fn values(&self, train: &Dataset) -> Result<Vec<f64>> {
        if self.points < 2 {
            return Err(Error::param("grid needs at least 2 points"));
        }
        let (a, b) = match self.range {
            Some((a, b)) => {
                if !(a.is_finite() && b.is_finite() && a <= b) {
                    return Err(Error::param("grid range must be finite with lower <= upper"));
                }
                (a, b)
            }
            None => {
                let ys = train.responses();
                let a = ys.iter().copied().fold(f64::INFINITY, f64::min);
                let b = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (a, b)
            }
        };
        let steps = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|j| if j + 1 == self.points { b } else { a + (b - a) * (j as f64 / steps) })
            .collect())
    }
}

/// Whether `y` belongs to the full conformal set at `x`.
pub fn full_conformal_includes(train: &Dataset, reg: &dyn Regressor, alpha: f64, x: &[f64], y: f64) -> Result<bool> {
    let model = reg.fit(&train.augmented(x, y)?)?;
    let scores: Vec<f64> = (0..train.len())
        .map(|i| (train.response(i) - model.predict(train.row(i))).abs())
        .collect();
    Ok((y - model.predict(x)).abs() <= upper_quantile(&scores, alpha)?)
}

/// Full conformal set over a grid of candidate responses. Runs of included
/// grid values become closed segments.
pub fn full_conformal_set(
    train: &Dataset,
    reg: &dyn Regressor,
    spec: &IntervalSpec,
    x: &[f64],
    grid: GridSpec,
) -> Result<PredictionSet> {
    spec.validate()?;
    if !spec.is_symmetric() {
        return Err(Error::Unsupported("full conformal has no asymmetric variant".into()));
    }
    if spec.inflation != 0.0 {
        return Err(Error::Unsupported("full conformal does not take inflation".into()));
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let ys = grid.values(train)?;
    let included: Vec<bool> = ys
        .par_iter()
        .map(|&y| full_conformal_includes(train, reg, spec.alpha, x, y))
        .collect::<Result<_>>()?;
    let mut segments: Vec<Segment> = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for (&y, inc) in ys.iter().zip(included) {
        if inc {
            open = Some(match open {
                Some((a, _)) => (a, y),
                None => (y, y),
            });
        } else if let Some((a, b)) = open.take() {
            segments.push(Segment::closed(a, b));
        }
    }
    if let Some((a, b)) = open {
        segments.push(Segment::closed(a, b));
    }
    Ok(PredictionSet { segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervals::LooCache;
    use crate::regress::{ConstantMean, FittedModel};

    fn worked() -> Dataset {
        Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], &[0.0, 0.0, 3.0]).unwrap()
    }

    #[test]
    fn cross_conformal_worked_example() {
        let cache = LooCache::leave_one_out(&worked(), &ConstantMean).unwrap();
        let spec = IntervalSpec::symmetric(0.25).unwrap();
        let set = cache.cross_conformal_set(&spec, &[0.0], 1.0).unwrap();
        assert_eq!(set.segments, vec![Segment::closed(-3.0, 3.0)]);
        assert!(set.contains(3.0));
        assert!(!set.contains(3.1));
    }

    #[test]
    fn alpha_zero_gives_the_line() {
        let set = sweep_cross_conformal(&[1.0, 2.0], &[0.5, 0.5], 0.0, 0.3).unwrap();
        assert_eq!(set.segments.len(), 1);
        assert_eq!(set.segments[0].lower, f64::NEG_INFINITY);
        assert_eq!(set.segments[0].upper, f64::INFINITY);
        assert!(set.contains(1e300));
    }

    #[test]
    fn punctured_point() {
        // Two intervals touching at 1: strict count 1 on each side, 0 at
        // the shared endpoint, where only the tau terms count.
        let set = sweep_cross_conformal(&[0.0, 2.0], &[1.0, 1.0], 0.3, 0.0).unwrap();
        assert!(set.is_canonical());
        assert!(set.contains(0.5));
        assert!(set.contains(1.5));
        assert!(!set.contains(1.0));
        assert_eq!(set.segments.len(), 2);
    }

    #[test]
    fn sweep_matches_pointwise_rule() {
        let centers = [0.0, 0.5, 0.5, 2.0, -1.0];
        let residuals = [1.0, 0.5, 0.0, 1.5, 2.0];
        for &(alpha, tau) in &[(0.1, 0.2), (0.25, 0.9), (0.5, 0.5), (0.34, 0.0)] {
            let set = sweep_cross_conformal(&centers, &residuals, alpha, tau).unwrap();
            assert!(set.is_canonical());
            for j in -400..=400 {
                let y = j as f64 / 100.0;
                let (s, e) = cross_conformal_score(&centers, &residuals, y);
                assert_eq!(
                    set.contains(y),
                    cross_conformal_includes(s, e, centers.len(), alpha, tau),
                    "alpha={alpha} tau={tau} y={y}"
                );
            }
        }
    }

    #[derive(Debug)]
    struct Zero;
    #[derive(Debug)]
    struct ZeroModel(usize);
    impl FittedModel for ZeroModel {
        fn predict(&self, _: &[f64]) -> f64 {
            0.0
        }
        fn train_size(&self) -> usize {
            self.0
        }
    }
    impl Regressor for Zero {
        fn name(&self) -> String {
            "zero".into()
        }
        fn fit(&self, train: &Dataset) -> Result<Box<dyn FittedModel>> {
            Ok(Box::new(ZeroModel(train.len())))
        }
    }

    #[test]
    fn full_conformal_matches_predicate() {
        let train = worked();
        let spec = IntervalSpec::symmetric(0.25).unwrap();
        let grid = GridSpec {
            points: 31,
            range: Some((0.0, 3.0)),
        };
        let set = full_conformal_set(&train, &ConstantMean, &spec, &[0.5], grid).unwrap();
        for y in grid.values(&train).unwrap() {
            assert_eq!(
                set.contains(y),
                full_conformal_includes(&train, &ConstantMean, 0.25, &[0.5], y).unwrap()
            );
        }
    }

    #[test]
    fn full_conformal_ignoring_responses() {
        let train = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], &[-1.0, 0.5, 2.0]).unwrap();
        let spec = IntervalSpec::symmetric(0.25).unwrap();
        let set = full_conformal_set(&train, &Zero, &spec, &[0.0], GridSpec::with_points(31)).unwrap();
        let q = upper_quantile(&[1.0, 0.5, 2.0], 0.25).unwrap();
        for y in GridSpec::with_points(31).values(&train).unwrap() {
            assert_eq!(set.contains(y), y.abs() <= q);
        }
    }

    #[test]
    fn full_conformal_alpha_zero_takes_every_point() {
        let spec = IntervalSpec::symmetric(0.0).unwrap();
        let set = full_conformal_set(&worked(), &ConstantMean, &spec, &[0.0], GridSpec::default()).unwrap();
        assert_eq!(set.segments, vec![Segment::closed(0.0, 3.0)]);
    }
}
