//! Pairwise-deletion residual tournament, used to audit interval
//! guarantees on concrete instances.
//!
//! For `n + 1` rows (training rows followed by the test row), each pair
//! `{i, j}` is deleted in turn and the model fit on the rest gives the
//! residuals `R_ij` (on row `i`) and `R_ji` (on row `j`). Row `i` beats row
//! `j` when `R_ij > R_ji`; rows that beat at least `(1 - alpha)(n + 1)`
//! others are *strange*. Few rows can be strange, and the test row must be
//! strange whenever the jackknife+ (or minmax) interval misses it. Both
//! facts are deterministic, so any violation is a bug.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::data::{format_exact, sample_beta, sample_gaussian_linear, Dataset};
use crate::error::{Error, Result};
use crate::intervals::{minmax_interval, plus_interval, IntervalSpec, PredictionInterval};
use crate::quantile::{exact_floor_mul, exact_mul_le};
use crate::regress::{Regressor, RegressorKind};
use crate::rng::{stream, Purpose};

/// Largest training size the audit accepts.
pub const MAX_AUDIT_N: usize = 30;

/// Which comparison defines "beats".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `A_ij = 1{R_ij > R_ji}`.
    Plus,
    /// `A_ij = 1{min_j' R_ij' > R_ji}`.
    Minmax,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Plus, Variant::Minmax];

    pub fn token(&self) -> &'static str {
        match self {
            Variant::Plus => "plus",
            Variant::Minmax => "minmax",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(Variant::Plus),
            "minmax" => Ok(Variant::Minmax),
            other => Err(Error::param(format!("unknown variant '{other}' (expected plus | minmax)"))),
        }
    }
}

/// `(n+1) x (n+1)` pairwise-deleted residuals with `+inf` on the diagonal,
/// plus the matching predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMatrix {
    size: usize,
    r: Vec<f64>,
    pred: Vec<f64>,
}

impl ResidualMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    /// `|Y_i - mu_{-(i,j)}(X_i)|`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.size + j]
    }

    /// `mu_{-(i,j)}(X_i)`; NaN on the diagonal.
    pub fn prediction(&self, i: usize, j: usize) -> f64 {
        self.pred[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.r[i * self.size..(i + 1) * self.size]
    }
}

/// Fits every pairwise-deleted model on `data` (training rows then the test
/// row) and records both residuals of each deleted pair.
pub fn residual_matrix(data: &Dataset, reg: &dyn Regressor) -> Result<ResidualMatrix> {
    let size = data.len();
    if size < 3 {
        return Err(Error::param("residual matrix needs at least 3 rows"));
    }
    let pairs: Vec<(usize, usize)> = (0..size)
        .flat_map(|i| (i + 1..size).map(move |j| (i, j)))
        .collect();
    let fitted: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let model = reg.fit(&data.without(&[i, j]))?;
            Ok((model.predict(data.row(i)), model.predict(data.row(j))))
        })
        .collect::<Result<_>>()?;
    let mut r = vec![f64::INFINITY; size * size];
    let mut pred = vec![f64::NAN; size * size];
    for (&(i, j), &(pi, pj)) in pairs.iter().zip(&fitted) {
        pred[i * size + j] = pi;
        pred[j * size + i] = pj;
        r[i * size + j] = (data.response(i) - pi).abs();
        r[j * size + i] = (data.response(j) - pj).abs();
    }
    Ok(ResidualMatrix { size, r, pred })
}

/// Binary tournament matrix built from a [`ResidualMatrix`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonMatrix {
    size: usize,
    a: Vec<bool>,
    pub variant: Variant,
}

impl ComparisonMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.a[i * self.size + j]
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.a.chunks(self.size).map(|row| row.iter().filter(|&&b| b).count()).collect()
    }
}

pub fn comparison_matrix(r: &ResidualMatrix, variant: Variant) -> ComparisonMatrix {
    let size = r.size();
    let mut a = vec![false; size * size];
    for i in 0..size {
        let row_min = r.row(i).iter().copied().fold(f64::INFINITY, f64::min);
        for j in 0..size {
            let lhs = match variant {
                Variant::Plus => r.get(i, j),
                Variant::Minmax => row_min,
            };
            a[i * size + j] = i != j && lhs > r.get(j, i);
        }
    }
    ComparisonMatrix { size, a, variant }
}

/// Minimum row sum of a strange row: `ceil((1 - alpha)(n + 1))`.
pub fn strange_threshold(size: usize, alpha: f64) -> usize {
    size - exact_floor_mul(alpha, size as u64) as usize
}

/// Indices whose row sum reaches `(1 - alpha)(n + 1)`, in increasing order.
pub fn strange_set(a: &ComparisonMatrix, alpha: f64) -> Vec<usize> {
    let threshold = strange_threshold(a.size(), alpha);
    a.row_sums()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= threshold)
        .map(|(i, _)| i)
        .collect()
}

/// One failed check.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `|S| < 2 alpha (n + 1)` failed for the plus variant.
    PlusStrangeSet { size: usize },
    /// `|S| <= alpha (n + 1)` failed for the minmax variant.
    MinmaxStrangeSet { size: usize },
    /// The interval missed the test response but the test row is not
    /// strange.
    NoncoverageNotStrange { interval: PredictionInterval, y: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PlusStrangeSet { size } => write!(f, "plus strange set has {size} rows, bound 2*alpha*(n+1)"),
            Violation::MinmaxStrangeSet { size } => write!(f, "minmax strange set has {size} rows, bound alpha*(n+1)"),
            Violation::NoncoverageNotStrange { interval, y } => {
                write!(f, "y = {y} outside {interval} but the test row is not strange")
            }
        }
    }
}

/// Outcome of auditing one instance for one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub variant: Variant,
    pub alpha: f64,
    /// Training size `n`; the instance has `n + 1` rows.
    pub n: usize,
    pub strange: Vec<usize>,
    /// Interval for the test row built from the same fits.
    pub interval: PredictionInterval,
    pub covered: bool,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn test_is_strange(&self) -> bool {
        self.strange.last() == Some(&self.n)
    }
}

/// Checks one variant against a precomputed residual matrix.
pub fn audit_matrix(r: &ResidualMatrix, y_test: f64, alpha: f64, variant: Variant) -> Result<AuditReport> {
    let spec = IntervalSpec::symmetric(alpha)?;
    let size = r.size();
    let n = size - 1;
    let a = comparison_matrix(r, variant);
    let strange = strange_set(&a, alpha);
    let s = strange.len() as u64;
    let mut violations = Vec::new();
    match variant {
        Variant::Plus => {
            if exact_mul_le(alpha, 2 * size as u64, s) {
                violations.push(Violation::PlusStrangeSet { size: strange.len() });
            }
        }
        Variant::Minmax => {
            if s > exact_floor_mul(alpha, size as u64) {
                violations.push(Violation::MinmaxStrangeSet { size: strange.len() });
            }
        }
    }
    let centers: Vec<f64> = (0..n).map(|i| r.prediction(n, i)).collect();
    let residuals: Vec<f64> = (0..n).map(|i| r.get(i, n)).collect();
    let interval = match variant {
        Variant::Plus => plus_interval(&centers, &residuals, &residuals, &spec)?,
        Variant::Minmax => minmax_interval(&centers, &residuals, &residuals, &spec)?,
    };
    let covered = interval.contains(y_test);
    let mut report = AuditReport {
        variant,
        alpha,
        n,
        strange,
        interval,
        covered,
        violations,
    };
    if !covered && !report.test_is_strange() {
        report.violations.push(Violation::NoncoverageNotStrange { interval, y: y_test });
    }
    Ok(report)
}

/// Audits `data` (training rows followed by one test row).
pub fn audit(data: &Dataset, reg: &dyn Regressor, alpha: f64, variant: Variant) -> Result<AuditReport> {
    let r = residual_matrix(data, reg)?;
    audit_matrix(&r, data.response(data.len() - 1), alpha, variant)
}

/// Audits both variants from a single set of fits.
pub fn audit_all(data: &Dataset, reg: &dyn Regressor, alpha: f64) -> Result<Vec<AuditReport>> {
    let r = residual_matrix(data, reg)?;
    let y = data.response(data.len() - 1);
    Variant::ALL.iter().map(|&v| audit_matrix(&r, y, alpha, v)).collect()
}

/// A self-contained text record of a failing instance: comment lines with
/// the configuration and violations, then the rows as CSV (last row is the
/// test point).
pub fn replay_record(data: &Dataset, regressor: &str, report: &AuditReport) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("# regressor={regressor}\n"));
    out.push_str(&format!("# alpha={}\n", format_exact(report.alpha)));
    out.push_str(&format!("# variant={}\n", report.variant));
    out.push_str(&format!("# strange={:?}\n", report.strange));
    for v in &report.violations {
        out.push_str(&format!("# violation: {v}\n"));
    }
    let mut buf = Vec::new();
    data.write_csv(&mut buf, "y")?;
    out.push_str(&String::from_utf8_lossy(&buf));
    Ok(out)
}

/// Randomized audit campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub d_max: usize,
    pub trials: usize,
    pub alphas: Vec<f64>,
    /// Regressor tokens; `knn` gets a random `k` per instance.
    pub regressors: Vec<String>,
    pub variants: Vec<Variant>,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            n_min: 4,
            n_max: 20,
            d_max: 3,
            trials: 1000,
            alphas: vec![0.1, 0.25, 0.5],
            regressors: vec!["mean".into(), "ols".into(), "knn".into()],
            variants: Variant::ALL.to_vec(),
            seed: 0,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max > MAX_AUDIT_N {
            return Err(Error::param(format!(
                "audit n = {} exceeds the limit of {MAX_AUDIT_N}",
                self.n_max
            )));
        }
        if self.n_min < 2 || self.n_min > self.n_max {
            return Err(Error::param("audit needs 2 <= n_min <= n_max"));
        }
        if self.d_max == 0 || self.trials == 0 {
            return Err(Error::param("audit needs d_max >= 1 and trials >= 1"));
        }
        if self.alphas.is_empty() || self.regressors.is_empty() || self.variants.is_empty() {
            return Err(Error::param("audit needs at least one alpha, regressor and variant"));
        }
        for a in &self.alphas {
            IntervalSpec::symmetric(*a)?;
        }
        for r in &self.regressors {
            if r == "parity" {
                return Err(Error::param("the parity regressor needs its own data and cannot be audited here"));
            }
            r.parse::<RegressorKind>()?;
        }
        Ok(())
    }
}

/// One randomly drawn audit case: `n + 1` Gaussian linear rows, the last
/// being the test point.
#[derive(Debug, Clone)]
pub struct AuditInstance {
    pub index: usize,
    pub data: Dataset,
    pub regressor: RegressorKind,
    pub alpha: f64,
}

impl AuditInstance {
    pub fn label(&self) -> String {
        match self.regressor {
            RegressorKind::Knn { k } => format!("knn(k={k})"),
            other => other.token().to_string(),
        }
    }
}

pub fn audit_instance(cfg: &AuditConfig, index: usize) -> Result<AuditInstance> {
    let mut rng = stream(cfg.seed, Purpose::Audit, index as u64);
    let n = rng.random_range(cfg.n_min..=cfg.n_max);
    let d = rng.random_range(1..=cfg.d_max);
    let alpha = cfg.alphas[rng.random_range(0..cfg.alphas.len())];
    let token = &cfg.regressors[rng.random_range(0..cfg.regressors.len())];
    let regressor = match token.parse::<RegressorKind>()? {
        RegressorKind::Knn { .. } => RegressorKind::Knn {
            k: rng.random_range(1..=3.min(n - 1)),
        },
        other => other,
    };
    let beta = sample_beta(d, &mut rng);
    let data = sample_gaussian_linear(n + 1, &beta, &mut rng)?;
    Ok(AuditInstance {
        index,
        data,
        regressor,
        alpha,
    })
}

/// Result of auditing one instance under every configured variant.
#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub instance: AuditInstance,
    pub reports: Vec<AuditReport>,
}

impl AuditOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(AuditReport::passed)
    }
}

/// Runs the campaign; outcomes are in instance order.
pub fn run_audit(cfg: &AuditConfig) -> Result<Vec<AuditOutcome>> {
    cfg.validate()?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|index| {
            let instance = audit_instance(cfg, index)?;
            let reg = instance.regressor.build()?;
            let r = residual_matrix(&instance.data, reg.as_ref())?;
            let y = instance.data.response(instance.data.len() - 1);
            let reports = cfg
                .variants
                .iter()
                .map(|&v| audit_matrix(&r, y, instance.alpha, v))
                .collect::<Result<_>>()?;
            Ok(AuditOutcome { instance, reports })
        })
        .collect()
}
