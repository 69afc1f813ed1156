use rand::seq::SliceRandom;

use super::{centered, minmax_interval, plus_interval, sweep_cross_conformal};
use super::{IntervalSpec, PredictionInterval, PredictionSet};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::regress::{FittedModel, Regressor};
use crate::rng::rng_from_seed;

/// How to partition the training rows into folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Reject `k` that does not divide `n` instead of warning.
    pub strict: bool,
}

impl FoldPlan {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            strict: false,
        }
    }

    pub fn leave_one_out(n: usize) -> Self {
        Self::new(n, 0)
    }

    pub fn strict(mut self) -> Self {
        self.strict = true;
        self
    }

    /// Fold index lists for `train`.
    ///
    /// `k = n` gives singleton folds in row order. Otherwise rows are put
    /// in canonical order, shuffled with `seed` and cut into `k` contiguous
    /// blocks whose sizes differ by at most one, so the partition depends
    /// on the rows' contents and not on how they were listed.
    pub fn folds(&self, train: &Dataset) -> Result<Vec<Vec<usize>>> {
        let n = train.len();
        let k = self.k;
        if k < 2 || k > n {
            return Err(Error::param(format!(
                "fold count K = {k} must satisfy 2 <= K <= n = {n}"
            )));
        }
        if !n.is_multiple_of(k) {
            if self.strict {
                return Err(Error::param(format!("K = {k} does not divide n = {n}")));
            }
            log::warn!("K = {k} does not divide n = {n}; fold sizes will differ by one");
        }
        if k == n {
            return Ok((0..n).map(|i| vec![i]).collect());
        }
        let mut order = train.canonical_order();
        order.shuffle(&mut rng_from_seed(self.seed));
        let (base, extra) = (n / k, n % k);
        let mut folds = Vec::with_capacity(k);
        let mut start = 0;
        for f in 0..k {
            let len = base + usize::from(f < extra);
            let mut fold = order[start..start + len].to_vec();
            fold.sort_unstable();
            folds.push(fold);
            start += len;
        }
        Ok(folds)
    }
}

/// Leave-fold-out models and residuals for one training set.
#[derive(Debug)]
pub struct LooCache {
    folds: Vec<Vec<usize>>,
    fold_of: Vec<usize>,
    models: Vec<Box<dyn FittedModel>>,
    residuals: Vec<f64>,
    signed: Vec<f64>,
    full: Box<dyn FittedModel>,
    in_sample: Vec<f64>,
    in_sample_abs: Vec<f64>,
}

impl LooCache {
    /// Jackknife cache: one model per left-out row.
    pub fn leave_one_out(train: &Dataset, reg: &dyn Regressor) -> Result<Self> {
        Self::build(train, reg, FoldPlan::leave_one_out(train.len()))
    }

    pub fn build(train: &Dataset, reg: &dyn Regressor, plan: FoldPlan) -> Result<Self> {
        let folds = plan.folds(train)?;
        let mut fold_of = vec![0; train.len()];
        for (k, fold) in folds.iter().enumerate() {
            for &i in fold {
                fold_of[i] = k;
            }
        }
        let models = reg.fit_leave_out(train, &folds)?;
        let signed: Vec<f64> = (0..train.len())
            .map(|i| train.response(i) - models[fold_of[i]].predict(train.row(i)))
            .collect();
        let residuals = signed.iter().map(|r| r.abs()).collect();
        let full = reg.fit(train)?;
        let in_sample: Vec<f64> = (0..train.len())
            .map(|i| train.response(i) - full.predict(train.row(i)))
            .collect();
        let in_sample_abs = in_sample.iter().map(|r| r.abs()).collect();
        Ok(Self {
            folds,
            fold_of,
            models,
            residuals,
            signed,
            full,
            in_sample,
            in_sample_abs,
        })
    }

    pub fn len(&self) -> usize {
        self.fold_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold_of.is_empty()
    }

    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn folds(&self) -> &[Vec<usize>] {
        &self.folds
    }

    pub fn fold_of(&self, i: usize) -> usize {
        self.fold_of[i]
    }

    pub fn model(&self, fold: usize) -> &dyn FittedModel {
        self.models[fold].as_ref()
    }

    pub fn full_model(&self) -> &dyn FittedModel {
        self.full.as_ref()
    }

    /// `|Y_i - mu_{-k(i)}(X_i)|`.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// `Y_i - mu_{-k(i)}(X_i)`.
    pub fn signed_residuals(&self) -> &[f64] {
        &self.signed
    }

    pub fn is_leave_one_out(&self) -> bool {
        self.folds.len() == self.fold_of.len()
    }

    /// `mu_{-k(i)}(x)` for every training index `i`.
    pub fn loo_predictions(&self, x: &[f64]) -> Vec<f64> {
        let per_fold: Vec<f64> = self.models.iter().map(|m| m.predict(x)).collect();
        self.fold_of.iter().map(|&k| per_fold[k]).collect()
    }

    fn require_loo(&self, method: &str) -> Result<()> {
        if self.is_leave_one_out() {
            Ok(())
        } else {
            Err(Error::param(format!(
                "{method} needs a leave-one-out cache (K = n), got K = {}",
                self.k()
            )))
        }
    }

    pub fn naive(&self, spec: &IntervalSpec, x: &[f64]) -> Result<PredictionInterval> {
        spec.validate()?;
        centered(self.full.predict(x), &self.in_sample_abs, &self.in_sample, spec)
    }

    pub fn jackknife(&self, spec: &IntervalSpec, x: &[f64]) -> Result<PredictionInterval> {
        spec.validate()?;
        self.require_loo("jackknife")?;
        centered(self.full.predict(x), &self.residuals, &self.signed, spec)
    }

    pub fn jackknife_plus(&self, spec: &IntervalSpec, x: &[f64]) -> Result<PredictionInterval> {
        spec.validate()?;
        self.require_loo("jackknife+")?;
        plus_interval(&self.loo_predictions(x), &self.residuals, &self.signed, spec)
    }

    pub fn jackknife_minmax(&self, spec: &IntervalSpec, x: &[f64]) -> Result<PredictionInterval> {
        spec.validate()?;
        self.require_loo("jackknife-minmax")?;
        minmax_interval(&self.loo_predictions(x), &self.residuals, &self.signed, spec)
    }

    /// CV+. With `K = n` this is jackknife+ bit for bit.
    pub fn cv_plus(&self, spec: &IntervalSpec, x: &[f64]) -> Result<PredictionInterval> {
        spec.validate()?;
        plus_interval(&self.loo_predictions(x), &self.residuals, &self.signed, spec)
    }

    /// The exact cross-conformal set for randomization `tau` in `[0, 1]`.
    pub fn cross_conformal_set(&self, spec: &IntervalSpec, x: &[f64], tau: f64) -> Result<PredictionSet> {
        spec.validate()?;
        if !spec.is_symmetric() {
            return Err(Error::Unsupported(
                "cross-conformal has no asymmetric variant".into(),
            ));
        }
        if spec.inflation != 0.0 {
            return Err(Error::Unsupported("cross-conformal does not take inflation".into()));
        }
        sweep_cross_conformal(&self.loo_predictions(x), &self.residuals, spec.alpha, tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::ConstantMean;

    fn worked() -> Dataset {
        Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], &[0.0, 0.0, 3.0]).unwrap()
    }

    #[test]
    fn loo_residuals_worked_example() {
        let cache = LooCache::leave_one_out(&worked(), &ConstantMean).unwrap();
        assert_eq!(cache.k(), 3);
        assert_eq!(cache.folds(), &[vec![0], vec![1], vec![2]]);
        assert_eq!(cache.residuals(), &[1.5, 1.5, 3.0]);
        assert_eq!(cache.signed_residuals(), &[-1.5, -1.5, 3.0]);
    }

    #[test]
    fn residuals_recompute_from_models() {
        let data = Dataset::from_rows(
            &[vec![0.1], vec![0.5], vec![-0.3], vec![2.0], vec![1.1], vec![0.9]],
            &[1.0, 2.0, -1.0, 0.5, 4.0, 3.0],
        )
        .unwrap();
        let cache = LooCache::build(&data, &ConstantMean, FoldPlan::new(3, 11)).unwrap();
        for i in 0..data.len() {
            let m = cache.model(cache.fold_of(i));
            assert_eq!(cache.residuals()[i], (data.response(i) - m.predict(data.row(i))).abs());
        }
    }

    #[test]
    fn two_folds_of_two() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let folds = FoldPlan::new(2, 5).folds(&data).unwrap();
        assert_eq!(folds.len(), 2);
        assert!(folds.iter().all(|f| f.len() == 2));
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3]);
    }

    #[test]
    fn fold_validation() {
        let data = worked();
        assert!(FoldPlan::new(1, 0).folds(&data).is_err());
        assert!(FoldPlan::new(4, 0).folds(&data).is_err());
        let five = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]], &[0.0; 5]).unwrap();
        assert!(FoldPlan::new(2, 0).strict().folds(&five).is_err());
        let uneven = FoldPlan::new(2, 0).folds(&five).unwrap();
        let mut sizes: Vec<usize> = uneven.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 3]);
    }

    #[test]
    fn jackknife_plus_worked_example() {
        let cache = LooCache::leave_one_out(&worked(), &ConstantMean).unwrap();
        let spec = IntervalSpec::symmetric(0.25).unwrap();
        let pi = cache.jackknife_plus(&spec, &[5.0]).unwrap();
        assert_eq!((pi.lower, pi.upper), (-3.0, 3.0));
        let cv = cache.cv_plus(&spec, &[5.0]).unwrap();
        assert_eq!(pi, cv);
        let mm = cache.jackknife_minmax(&spec, &[5.0]).unwrap();
        assert_eq!((mm.lower, mm.upper), (-3.0, 4.5));
        let jk = cache.jackknife(&spec, &[5.0]).unwrap();
        assert_eq!((jk.lower, jk.upper), (-2.0, 4.0));
        let naive = cache.naive(&spec, &[5.0]).unwrap();
        assert_eq!((naive.lower, naive.upper), (-1.0, 3.0));
    }

    #[test]
    fn tiny_alpha_is_unbounded() {
        let cache = LooCache::leave_one_out(&worked(), &ConstantMean).unwrap();
        let spec = IntervalSpec::symmetric(0.2).unwrap();
        let pi = cache.jackknife_plus(&spec, &[0.0]).unwrap();
        assert_eq!((pi.lower, pi.upper), (f64::NEG_INFINITY, f64::INFINITY));
    }

    #[test]
    fn cv_plus_two_folds_by_hand() {
        // Rows 0..4 with responses 0, 2, 4, 10; folds fixed by the plan.
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], &[0.0, 2.0, 4.0, 10.0]).unwrap();
        let cache = LooCache::build(&data, &ConstantMean, FoldPlan::new(2, 3)).unwrap();
        let folds = cache.folds().to_vec();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for i in 0..4 {
            let other: Vec<usize> = (0..4).filter(|j| !folds[cache.fold_of(i)].contains(j)).collect();
            let mean = other.iter().map(|&j| data.response(j)).sum::<f64>() / other.len() as f64;
            let r = (data.response(i) - mean).abs();
            lo.push(mean - r);
            hi.push(mean + r);
        }
        lo.sort_by(f64::total_cmp);
        hi.sort_by(f64::total_cmp);
        // alpha = 0.2, n = 4: ranks floor(1) = 1 and 5 - 1 = 4.
        let spec = IntervalSpec::symmetric(0.2).unwrap();
        let pi = cache.cv_plus(&spec, &[0.0]).unwrap();
        assert_eq!((pi.lower, pi.upper), (lo[0], hi[3]));
        assert!(cache.jackknife_plus(&spec, &[0.0]).is_err());
    }

    #[test]
    fn median_of_loo_predictions_is_covered() {
        let data = Dataset::from_rows(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
            &[1.0, -2.0, 0.5, 7.0, 3.0],
        )
        .unwrap();
        let cache = LooCache::leave_one_out(&data, &ConstantMean).unwrap();
        let mut preds = cache.loo_predictions(&[0.0]);
        preds.sort_by(f64::total_cmp);
        let spec = IntervalSpec::symmetric(0.5).unwrap();
        assert!(cache.jackknife_plus(&spec, &[0.0]).unwrap().contains(preds[2]));
    }

    #[test]
    fn asymmetric_is_well_formed() {
        let cache = LooCache::leave_one_out(&worked(), &ConstantMean).unwrap();
        let spec = IntervalSpec::asymmetric(0.25, 0.25).unwrap();
        let pi = cache.jackknife_plus(&spec, &[0.0]).unwrap();
        assert!(!pi.lower.is_nan() && !pi.upper.is_nan());
        assert!(matches!(
            cache.cross_conformal_set(&spec, &[0.0], 0.5),
            Err(Error::Unsupported(_))
        ));
    }
}
