//! Regression algorithms.
//!
//! A [`Regressor`] maps a training set of any size to a [`FittedModel`]. Every
//! shipped regressor is deterministic and exactly symmetric: it reads its
//! training rows in [`Dataset::canonical_order`], so any permutation of the
//! training set yields a bit-identical model. The leave-out machinery and the
//! audit oracle depend on that.
//!
//! Fitting on an empty training set yields the zero function for the
//! regressors where that makes sense (least squares, ridge, mean).

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// A fitted regression function.
pub trait FittedModel: Send + Sync + fmt::Debug {
    fn predict(&self, x: &[f64]) -> f64;

    /// Number of rows the model was trained on.
    fn train_size(&self) -> usize;
}

/// A symmetric training algorithm.
pub trait Regressor: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn fit(&self, train: &Dataset) -> Result<Box<dyn FittedModel>>;

    /// Fits one model per fold on `train` minus that fold. Folds are index
    /// lists into `train`. The default refits from scratch, in parallel.
    fn fit_leave_out(
        &self,
        train: &Dataset,
        folds: &[Vec<usize>],
    ) -> Result<Vec<Box<dyn FittedModel>>> {
        folds
            .par_iter()
            .map(|fold| self.fit(&train.without(fold)))
            .collect()
    }
}

impl<R: Regressor + ?Sized> Regressor for Box<R> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn fit(&self, train: &Dataset) -> Result<Box<dyn FittedModel>> {
        (**self).fit(train)
    }
    fn fit_leave_out(
        &self,
        train: &Dataset,
        folds: &[Vec<usize>],
    ) -> Result<Vec<Box<dyn FittedModel>>> {
        (**self).fit_leave_out(train, folds)
    }
}

/// `x^T beta + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub m: usize,
}

impl FittedModel for LinearModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
    fn train_size(&self) -> usize {
        self.m
    }
}

fn design(train: &Dataset, order: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
    let m = order.len();
    let d = train.dim();
    let x = DMatrix::from_fn(m, d, |i, j| train.row(order[i])[j]);
    let y = DVector::from_fn(m, |i, _| train.response(order[i]));
    (x, y)
}

/// Solves `min 1/2 |y - X b|^2 + lambda |b|^2` through the SVD of `X`,
/// discarding singular values below `max(m, d) * eps * sigma_max`. With
/// `lambda = 0` this is the Moore-Penrose solution `X^+ y`.
fn spectral_solve(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let (m, d) = x.shape();
    if m == 0 {
        return DVector::zeros(d);
    }
    let svd = x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let tol = (m.max(d) as f64) * f64::EPSILON * smax;
    let mut uty = u.tr_mul(y);
    for (k, sigma) in s.iter().enumerate() {
        uty[k] = if *sigma > tol && *sigma > 0.0 {
            uty[k] * sigma / (sigma * sigma + 2.0 * lambda)
        } else {
            0.0
        };
    }
    v_t.tr_mul(&uty)
}

fn spectral_norm(x: &DMatrix<f64>) -> f64 {
    if x.nrows() == 0 {
        return 0.0;
    }
    x.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Least squares with the minimum-norm convention for underdetermined
/// systems; no intercept.
#[derive(Debug, Clone, Copy, Default)]
pub struct MinNormOls;

impl MinNormOls {
    pub fn fit_linear(&self, train: &Dataset) -> LinearModel {
        let order = train.canonical_order();
        let (x, y) = design(train, &order);
        let beta = spectral_solve(&x, &y, 0.0);
        LinearModel {
            coef: beta.iter().copied().collect(),
            intercept: 0.0,
            m: train.len(),
        }
    }
}

impl Regressor for MinNormOls {
    fn name(&self) -> String {
        "ols".into()
    }
    fn fit(&self, train: &Dataset) -> Result<Box<dyn FittedModel>> {
        Ok(Box::new(self.fit_linear(train)))
    }
}

/// Ridge regression minimising
/// `1/2 sum (y_i - b0 - x_i^T b)^2 + lambda |b|^2` with
/// `lambda = lambda_rel * |X|_2^2` (spectral norm of the raw covariates).
/// The intercept is unpenalised.
#[derive(Debug, Clone, Copy)]
pub struct Ridge {
    pub lambda_rel: f64,
    pub intercept: bool,
}

impl Ridge {
    pub fn new(lambda_rel: f64, intercept: bool) -> Result<Self> {
        if !(lambda_rel >= 0.0) || !lambda_rel.is_finite() {
            return Err(Error::param("ridge lambda_rel must be finite and >= 0"));
        }
        Ok(Self {
            lambda_rel,
            intercept,
        })
    }

    pub fn fit_linear(&self, train: &Dataset) -> LinearModel {
        let m = train.len();
        let d = train.dim();
        if m == 0 {
            return LinearModel {
                coef: vec![0.0; d],
                intercept: 0.0,
                m,
            };
        }
        let order = train.canonical_order();
        let (mut x, mut y) = design(train, &order);
        let lambda = self.lambda_rel * spectral_norm(&x).powi(2);
        let (x_mean, y_mean) = if self.intercept {
            let xm: Vec<f64> = (0..d).map(|j| x.column(j).sum() / m as f64).collect();
            let ym = y.sum() / m as f64;
            for j in 0..d {
                for i in 0..m {
                    x[(i, j)] -= xm[j];
                }
            }
            y.add_scalar_mut(-ym);
            (xm, ym)
        } else {
            (vec![0.0; d], 0.0)
        };
        let beta = spectral_solve(&x, &y, lambda);
        let intercept = y_mean - beta.iter().zip(&x_mean).map(|(b, xm)| b * xm).sum::<f64>();
        LinearModel {
            coef: beta.iter().copied().collect(),
            intercept,
            m,
        }
    }
}

impl Regressor for Ridge {
    fn name(&self) -> String {
        format!("ridge(lambda_rel={},intercept={})", self.lambda_rel, self.intercept)
    }
    fn fit(&self, train: &Dataset) -> Result<Box<dyn FittedModel>> {
        Ok(Box::new(self.fit_linear(train)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantModel {
    pub value: f64,
    pub m: usize,
}

impl FittedModel for ConstantModel {
    fn predict(&self, _x: &[f64]) -> f64 {
        self.value
    }
    fn train_size(&self) -> usize {
        self.m
    }
}

/// Predicts the mean training response everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantMean;

impl Regressor for ConstantMean {
    fn name(&self) -> String {
        "mean".into()
    }
    fn fit(&self, train: &Dataset) -> Result<Box<dyn FittedModel>> {
        let m = train.len();
        if m == 0 {
            return Ok(Box::new(ConstantModel { value: 0.0, m }));
        }
        let mut y = train.responses().to_vec();
        y.sort_by(f64::total_cmp);
        let value = y.iter().sum::<f64>() / m as f64;
        Ok(Box::new(ConstantModel { value, m }))
    }
}

/// Average response of the `k` nearest training rows in Euclidean distance.
/// Distance ties go to the row that comes first in canonical order.
#[derive(Debug, Clone, Copy)]
pub struct Knn {
    pub k: usize,
}

impl Knn {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k-NN needs k >= 1"));
        }
        Ok(Self { k })
    }
}

#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    d: usize,
    features: Vec<f64>,
    responses: Vec<f64>,
}

impl KnnModel {
    /// Ranks (canonical positions) of the `k` nearest rows, ascending.
    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        let m = self.responses.len();
        let mut dist: Vec<(f64, usize)> = (0..m)
            .map(|r| {
                let row = &self.features[r * self.d..(r + 1) * self.d];
                let d2 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                (d2, r)
            })
            .collect();
        let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < m {
            dist.select_nth_unstable_by(self.k - 1, by);
        }
        let mut chosen: Vec<usize> = dist[..self.k].iter().map(|p| p.1).collect();
        chosen.sort_unstable();
        chosen
    }
}

impl FittedModel for KnnModel {
    fn predict(&self, x: &[f64]) -> f64 {
        let nb = self.neighbors(x);
        nb.iter().map(|&r| self.responses[r]).sum::<f64>() / self.k as f64
    }
    fn train_size(&self) -> usize {
        self.responses.len()
    }
}

impl Regressor for Knn {
    fn name(&self) -> String {
        format!("knn(k={})", self.k)
    }
    fn fit(&self, train: &Dataset) -> Result<Box<dyn FittedModel>> {
        if self.k > train.len() {
            return Err(Error::param(format!(
                "k-NN with k={} needs at least k training rows, got {}",
                self.k,
                train.len()
            )));
        }
        let order = train.canonical_order();
        let canon = train.select(&order);
        Ok(Box::new(KnnModel {
            k: self.k,
            d: train.dim(),
            features: canon.features().to_vec(),
            responses: canon.responses().to_vec(),
        }))
    }
}

/// Adversarial regressor that is exact on its own training rows and badly
/// wrong everywhere else: `0` at any training feature row (bitwise match),
/// `(1 + eps) * m` elsewhere, `m` being the training size.
#[derive(Debug, Clone, Copy)]
pub struct Memorizer {
    pub eps: f64,
}

impl Memorizer {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::param("memorizer eps must be finite and > 0"));
        }
        Ok(Self { eps })
    }
}

#[derive(Debug, Clone)]
pub struct MemorizerModel {
    rows: HashSet<Vec<u64>>,
    eps: f64,
    m: usize,
}

impl FittedModel for MemorizerModel {
    fn predict(&self, x: &[f64]) -> f64 {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if self.rows.contains(&key) {
            0.0
        } else {
            (1.0 + self.eps) * self.m as f64
        }
    }
    fn train_size(&self) -> usize {
        self.m
    }
}

impl Regressor for Memorizer {
    fn name(&self) -> String {
        format!("memorizer(eps={})", self.eps)
    }
    fn fit(&self, train: &Dataset) -> Result<Box<dyn FittedModel>> {
        let rows = (0..train.len())
            .map(|i| train.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        Ok(Box::new(MemorizerModel {
            rows,
            eps: self.eps,
            m: train.len(),
        }))
    }
}

/// Adversarial regressor on rows `(a, b, c)` with `b` in `{-1, +1}`:
/// `tau * a * c * prod_j b_j` over the training rows.
#[derive(Debug, Clone, Copy)]
pub struct ParityAdversary {
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParityModel {
    pub tau: f64,
    /// Product of the training `b` values, `+1` or `-1`.
    pub sign: f64,
    pub m: usize,
}

impl FittedModel for ParityModel {
    fn predict(&self, x: &[f64]) -> f64 {
        self.tau * x[0] * x[2] * self.sign
    }
    fn train_size(&self) -> usize {
        self.m
    }
}

impl ParityAdversary {
    pub fn new(tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::param("parity tau must be finite"));
        }
        Ok(Self { tau })
    }

    fn signs(train: &Dataset) -> Result<Vec<bool>> {
        if train.dim() != 3 {
            return Err(Error::param(format!(
                "parity adversary needs 3 feature columns, got {}",
                train.dim()
            )));
        }
        (0..train.len())
            .map(|i| match train.row(i)[1] {
                b if b == 1.0 => Ok(false),
                b if b == -1.0 => Ok(true),
                b => Err(Error::param(format!(
                    "parity adversary: row {} has b = {b}, expected +1 or -1",
                    i + 1
                ))),
            })
            .collect()
    }
}

impl Regressor for ParityAdversary {
    fn name(&self) -> String {
        format!("parity(tau={})", self.tau)
    }

    fn fit(&self, train: &Dataset) -> Result<Box<dyn FittedModel>> {
        let negative = Self::signs(train)?.iter().filter(|&&s| s).count();
        Ok(Box::new(ParityModel {
            tau: self.tau,
            sign: if negative % 2 == 0 { 1.0 } else { -1.0 },
            m: train.len(),
        }))
    }

    /// Each leave-out product is the full product times the product over
    /// the removed fold, which is exact because every factor is `+-1`.
    fn fit_leave_out(
        &self,
        train: &Dataset,
        folds: &[Vec<usize>],
    ) -> Result<Vec<Box<dyn FittedModel>>> {
        let neg = Self::signs(train)?;
        let total = neg.iter().filter(|&&s| s).count() % 2;
        folds
            .iter()
            .map(|fold| {
                let removed = fold.iter().filter(|&&i| neg[i]).count() % 2;
                let sign = if (total + removed) % 2 == 0 { 1.0 } else { -1.0 };
                Ok(Box::new(ParityModel {
                    tau: self.tau,
                    sign,
                    m: train.len() - fold.len(),
                }) as Box<dyn FittedModel>)
            })
            .collect()
    }
}

/// Regressor selection by CLI token plus hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressorKind {
    Ols,
    Ridge { lambda_rel: f64, intercept: bool },
    Knn { k: usize },
    Mean,
    Memorizer { eps: f64 },
    Parity { tau: f64 },
}

impl RegressorKind {
    pub const TOKENS: [&'static str; 6] = ["ols", "ridge", "knn", "mean", "memorizer", "parity"];

    pub fn build(&self) -> Result<Box<dyn Regressor>> {
        Ok(match *self {
            RegressorKind::Ols => Box::new(MinNormOls),
            RegressorKind::Ridge {
                lambda_rel,
                intercept,
            } => Box::new(Ridge::new(lambda_rel, intercept)?),
            RegressorKind::Knn { k } => Box::new(Knn::new(k)?),
            RegressorKind::Mean => Box::new(ConstantMean),
            RegressorKind::Memorizer { eps } => Box::new(Memorizer::new(eps)?),
            RegressorKind::Parity { tau } => Box::new(ParityAdversary::new(tau)?),
        })
    }

    pub fn token(&self) -> &'static str {
        match self {
            RegressorKind::Ols => "ols",
            RegressorKind::Ridge { .. } => "ridge",
            RegressorKind::Knn { .. } => "knn",
            RegressorKind::Mean => "mean",
            RegressorKind::Memorizer { .. } => "memorizer",
            RegressorKind::Parity { .. } => "parity",
        }
    }
}

impl FromStr for RegressorKind {
    type Err = Error;

    /// Parses a bare token with default hyperparameters
    /// (ridge: `lambda_rel = 0.001`, intercept on; knn: `k = 5`;
    /// memorizer: `eps = 1`; parity: `tau = 1`).
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ols" => RegressorKind::Ols,
            "ridge" => RegressorKind::Ridge {
                lambda_rel: 0.001,
                intercept: true,
            },
            "knn" => RegressorKind::Knn { k: 5 },
            "mean" => RegressorKind::Mean,
            "memorizer" => RegressorKind::Memorizer { eps: 1.0 },
            "parity" => RegressorKind::Parity { tau: 1.0 },
            other => {
                return Err(Error::param(format!(
                    "unknown regressor '{other}' (expected one of {})",
                    Self::TOKENS.join(" | ")
                )))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(rows: &[&[f64]], y: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn ols_interpolates_identity_design() {
        let m = MinNormOls.fit(&ds(&[&[1.0, 0.0], &[0.0, 1.0]], &[2.0, 3.0])).unwrap();
        assert!((m.predict(&[1.0, 1.0]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn ols_min_norm_underdetermined() {
        let fit = MinNormOls.fit_linear(&ds(&[&[1.0, 1.0]], &[2.0]));
        assert!((fit.coef[0] - 1.0).abs() < 1e-12);
        assert!((fit.coef[1] - 1.0).abs() < 1e-12);
        assert!((fit.predict(&[2.0, 0.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ols_averages_repeated_design() {
        let fit = MinNormOls.fit_linear(&ds(&[&[1.0], &[1.0]], &[1.0, 3.0]));
        assert!((fit.coef[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_fit_is_zero_function() {
        let empty = Dataset::new(2, vec![], vec![]).unwrap();
        assert_eq!(MinNormOls.fit(&empty).unwrap().predict(&[3.0, 4.0]), 0.0);
        assert_eq!(ConstantMean.fit(&empty).unwrap().predict(&[3.0, 4.0]), 0.0);
        let r = Ridge::new(0.1, true).unwrap();
        assert_eq!(r.fit(&empty).unwrap().predict(&[3.0, 4.0]), 0.0);
    }

    #[test]
    fn ridge_scalar_first_order_condition() {
        // 1/2 (2 - b)^2 + b^2 is minimised at b = 2/3.
        let r = Ridge::new(1.0, false).unwrap();
        let fit = r.fit_linear(&ds(&[&[1.0]], &[2.0]));
        assert!((fit.coef[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_without_penalty_is_ols() {
        let rows: &[&[f64]] = &[&[1.0, 2.0], &[0.5, -1.0], &[3.0, 0.0], &[-2.0, 1.5]];
        let y = [1.0, 2.0, -1.0, 0.5];
        let ols = MinNormOls.fit_linear(&ds(rows, &y));
        let ridge = Ridge::new(0.0, false).unwrap().fit_linear(&ds(rows, &y));
        for (a, b) in ols.coef.iter().zip(&ridge.coef) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ridge_huge_penalty_predicts_mean() {
        let rows: &[&[f64]] = &[&[1.0, 2.0], &[0.5, -1.0], &[3.0, 0.0], &[-2.0, 1.5]];
        let y = [1.0, 2.0, -1.0, 0.5];
        let fit = Ridge::new(1e12, true).unwrap().fit_linear(&ds(rows, &y));
        for x in [[0.0, 0.0], [10.0, -3.0], [1.0, 1.0]] {
            assert!((fit.predict(&x) - 0.625).abs() < 1e-3);
        }
    }

    #[test]
    fn knn_examples() {
        let train = ds(&[&[0.0], &[10.0]], &[5.0, 7.0]);
        let one = Knn::new(1).unwrap().fit(&train).unwrap();
        assert_eq!(one.predict(&[1.0]), 5.0);
        assert_eq!(one.predict(&[5.0]), 5.0);
        let two = Knn::new(2).unwrap().fit(&train).unwrap();
        assert_eq!(two.predict(&[-40.0]), 6.0);
        assert_eq!(two.predict(&[7.3]), 6.0);
        assert!(Knn::new(3).unwrap().fit(&train).is_err());
    }

    #[test]
    fn mean_examples() {
        let m = ConstantMean.fit(&ds(&[&[0.0], &[1.0], &[2.0]], &[0.0, 0.0, 3.0])).unwrap();
        assert_eq!(m.predict(&[9.0]), 1.0);
        let m = ConstantMean.fit(&ds(&[&[0.0]], &[5.0])).unwrap();
        assert_eq!(m.predict(&[0.0]), 5.0);
    }

    #[test]
    fn memorizer_examples() {
        let mem = Memorizer::new(1.0).unwrap();
        let train = ds(&[&[0.1], &[0.2], &[0.3]], &[0.0, 0.0, 0.0]);
        let m = mem.fit(&train).unwrap();
        assert_eq!(m.predict(&[0.2]), 0.0);
        assert_eq!(m.predict(&[0.25]), 6.0);
        let loo = mem.fit(&train.without(&[0])).unwrap();
        assert_eq!(loo.predict(&[0.1]), 4.0);
    }

    #[test]
    fn parity_examples() {
        let p = ParityAdversary::new(10.0).unwrap();
        let train = ds(&[&[1.0, 1.0, 0.3], &[0.0, 1.0, -0.2]], &[10.0, 0.0]);
        let m = p.fit(&train).unwrap();
        assert_eq!(m.predict(&[1.0, 1.0, 0.5]), 5.0);
        assert_eq!(m.predict(&[0.0, -1.0, 0.9]), 0.0);
        let flipped = ds(&[&[1.0, -1.0, 0.3], &[0.0, 1.0, -0.2]], &[10.0, 0.0]);
        assert_eq!(p.fit(&flipped).unwrap().predict(&[1.0, 1.0, 0.5]), -5.0);
        let bad = ds(&[&[1.0, 0.5, 0.3]], &[10.0]);
        assert!(p.fit(&bad).is_err());
    }

    #[test]
    fn parity_leave_out_matches_refit() {
        let data = crate::data::gen_pathological_abc(50, 0.25, 0.1, 9)
            .unwrap()
            .attach_tau(3.0)
            .unwrap();
        let p = ParityAdversary::new(3.0).unwrap();
        let folds: Vec<Vec<usize>> = (0..50).map(|i| vec![i]).chain([vec![1, 2, 3]]).collect();
        let fast = p.fit_leave_out(&data, &folds).unwrap();
        for (fold, model) in folds.iter().zip(&fast) {
            let slow = p.fit(&data.without(fold)).unwrap();
            let x = [1.0, 1.0, 0.7];
            assert_eq!(model.predict(&x), slow.predict(&x));
            assert_eq!(model.train_size(), slow.train_size());
        }
    }

    #[test]
    fn tokens_round_trip() {
        for t in RegressorKind::TOKENS {
            let kind: RegressorKind = t.parse().unwrap();
            assert_eq!(kind.token(), t);
            kind.build().unwrap();
        }
        assert!("forest".parse::<RegressorKind>().is_err());
    }
}
