//! Monte Carlo coverage experiments.
//!
//! A trial draws a training set and a batch of test points, builds every
//! requested method once, and records the fraction of test responses
//! covered and the mean width. Trials run in parallel, each from its own
//! derived seed, and are collected in trial order, so results are
//! identical for any thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::data::{sample_beta, sample_gaussian_linear, sample_pathological_abc, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::intervals::{
    centered, full_conformal_set, FoldPlan, GridSpec, IntervalSpec, LooCache, Prediction, SplitFit,
};
use crate::regress::{FittedModel, Memorizer, MinNormOls, ParityAdversary, Regressor};
use crate::rng::{derive_seed, rng_from_seed, stream, Purpose};

/// Default fold count for CV+ and cross-conformal.
pub const DEFAULT_FOLDS: usize = 10;

/// An interval or set construction. `folds: None` means `K = n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Naive,
    Split,
    Jackknife,
    JackknifePlus,
    JackknifeMinmax,
    CvPlus { folds: Option<usize> },
    CrossConformal { folds: Option<usize> },
    FullConformal { grid: usize },
}

impl Method {
    pub const TOKENS: [&'static str; 8] = [
        "naive",
        "split",
        "jackknife",
        "jackknife+",
        "jackknife-mm",
        "cv+",
        "cross-conformal",
        "full-conformal",
    ];

    /// Methods evaluated by the figure-2 experiment when none are given.
    pub fn figure2_defaults() -> Vec<Method> {
        vec![
            Method::Naive,
            Method::Split,
            Method::Jackknife,
            Method::JackknifePlus,
            Method::JackknifeMinmax,
            Method::CvPlus {
                folds: Some(DEFAULT_FOLDS),
            },
        ]
    }

    pub fn is_set(&self) -> bool {
        matches!(self, Method::CrossConformal { .. } | Method::FullConformal { .. })
    }

    /// Parses a comma-separated list.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        s.split(',').map(|t| t.trim().parse()).collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let folds = |k: &Option<usize>| k.map_or("n".to_string(), |k| k.to_string());
        match self {
            Method::Naive => f.write_str("naive"),
            Method::Split => f.write_str("split"),
            Method::Jackknife => f.write_str("jackknife"),
            Method::JackknifePlus => f.write_str("jackknife+"),
            Method::JackknifeMinmax => f.write_str("jackknife-mm"),
            Method::CvPlus { folds: k } => write!(f, "cv+:{}", folds(k)),
            Method::CrossConformal { folds: k } => write!(f, "cross-conformal:{}", folds(k)),
            Method::FullConformal { grid } => write!(f, "full-conformal:{grid}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// `cv+` and `cross-conformal` take an optional `:K` (`:n` for
    /// leave-one-out, default 10); `full-conformal` an optional `:points`
    /// (default 200).
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let bad_arg = |a: &str| Error::param(format!("bad argument '{a}' in method '{s}'"));
        let folds = |arg: Option<&str>| -> Result<Option<usize>> {
            match arg {
                None => Ok(Some(DEFAULT_FOLDS)),
                Some("n") => Ok(None),
                Some(a) => a.parse().map(Some).map_err(|_| bad_arg(a)),
            }
        };
        let method = match name {
            "cv+" => Method::CvPlus { folds: folds(arg)? },
            "cross-conformal" => Method::CrossConformal { folds: folds(arg)? },
            "full-conformal" => Method::FullConformal {
                grid: match arg {
                    None => GridSpec::default().points,
                    Some(a) => a.parse().map_err(|_| bad_arg(a))?,
                },
            },
            _ if arg.is_some() => return Err(bad_arg(arg.unwrap_or_default())),
            "naive" => Method::Naive,
            "split" => Method::Split,
            "jackknife" => Method::Jackknife,
            "jackknife+" => Method::JackknifePlus,
            "jackknife-mm" => Method::JackknifeMinmax,
            other => {
                return Err(Error::param(format!(
                    "unknown method '{other}' (expected one of {})",
                    Method::TOKENS.join(" | ")
                )))
            }
        };
        Ok(method)
    }
}

/// Full-data model with its signed and absolute in-sample residuals.
type NaiveFit = (Box<dyn FittedModel>, Vec<f64>, Vec<f64>);

/// Fits shared by a list of methods on one training set.
pub struct Predictor<'a> {
    train: &'a Dataset,
    reg: &'a dyn Regressor,
    spec: IntervalSpec,
    naive: Option<NaiveFit>,
    loo: Option<LooCache>,
    folds: BTreeMap<usize, LooCache>,
    split: Option<SplitFit>,
}

impl<'a> Predictor<'a> {
    /// Builds everything `methods` need. `seed` fixes the fold partitions
    /// and the split.
    pub fn new(
        train: &'a Dataset,
        reg: &'a dyn Regressor,
        methods: &[Method],
        spec: &IntervalSpec,
        seed: u64,
    ) -> Result<Self> {
        spec.validate()?;
        let n = train.len();
        let resolve = |k: Option<usize>| k.unwrap_or(n);
        let needs_loo = methods.iter().any(|m| match m {
            Method::Jackknife | Method::JackknifePlus | Method::JackknifeMinmax => true,
            Method::CvPlus { folds } | Method::CrossConformal { folds } => resolve(*folds) == n,
            _ => false,
        });
        let loo = if needs_loo {
            Some(LooCache::leave_one_out(train, reg)?)
        } else {
            None
        };
        let mut folds = BTreeMap::new();
        for m in methods {
            if let Method::CvPlus { folds: k } | Method::CrossConformal { folds: k } = m {
                let k = resolve(*k);
                if k != n && !folds.contains_key(&k) {
                    let plan = FoldPlan::new(k, derive_seed(seed, Purpose::Folds, k as u64));
                    folds.insert(k, LooCache::build(train, reg, plan)?);
                }
            }
        }
        let naive = if methods.contains(&Method::Naive) && loo.is_none() {
            let model = reg.fit(train)?;
            let signed: Vec<f64> = (0..n)
                .map(|i| train.response(i) - model.predict(train.row(i)))
                .collect();
            let abs = signed.iter().map(|r| r.abs()).collect();
            Some((model, signed, abs))
        } else {
            None
        };
        let split = if methods.contains(&Method::Split) {
            Some(SplitFit::new(train, reg, &SplitSpec::half(derive_seed(seed, Purpose::Split, 0)))?)
        } else {
            None
        };
        Ok(Self {
            train,
            reg,
            spec: *spec,
            naive,
            loo,
            folds,
            split,
        })
    }

    fn cache(&self, k: Option<usize>) -> Result<&LooCache> {
        let k = k.unwrap_or(self.train.len());
        let found = if k == self.train.len() {
            self.loo.as_ref()
        } else {
            self.folds.get(&k)
        };
        found.ok_or_else(|| Error::param(format!("no cache for K = {k}; method not declared")))
    }

    /// Prediction of `method` at `x`. `tau` is used by cross-conformal only.
    pub fn predict(&self, method: Method, x: &[f64], tau: f64) -> Result<Prediction> {
        let spec = &self.spec;
        let missing = || Error::param(format!("method {method} not declared to the predictor"));
        Ok(match method {
            Method::Naive => Prediction::Interval(match (&self.naive, &self.loo) {
                (Some((model, signed, abs)), _) => centered(model.predict(x), abs, signed, spec)?,
                (None, Some(loo)) => loo.naive(spec, x)?,
                (None, None) => return Err(missing()),
            }),
            Method::Split => Prediction::Interval(self.split.as_ref().ok_or_else(missing)?.interval(spec, x)?),
            Method::Jackknife => Prediction::Interval(self.cache(None)?.jackknife(spec, x)?),
            Method::JackknifePlus => Prediction::Interval(self.cache(None)?.jackknife_plus(spec, x)?),
            Method::JackknifeMinmax => Prediction::Interval(self.cache(None)?.jackknife_minmax(spec, x)?),
            Method::CvPlus { folds } => Prediction::Interval(self.cache(folds)?.cv_plus(spec, x)?),
            Method::CrossConformal { folds } => Prediction::Set(self.cache(folds)?.cross_conformal_set(spec, x, tau)?),
            Method::FullConformal { grid } => {
                Prediction::Set(full_conformal_set(self.train, self.reg, spec, x, GridSpec::with_points(grid))?)
            }
        })
    }
}

/// Coverage and width of one method over one batch of test points.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub coverage: f64,
    /// Mean width over the test points with finite width; `None` if none.
    pub width: Option<f64>,
    /// Test points whose prediction had infinite width.
    pub infinite: usize,
    pub n_test: usize,
}

/// Evaluates `methods` on `test` after fitting on `train`.
pub fn run_trial(
    train: &Dataset,
    test: &Dataset,
    reg: &dyn Regressor,
    methods: &[Method],
    spec: &IntervalSpec,
    seed: u64,
) -> Result<Vec<TrialOutcome>> {
    if test.is_empty() {
        return Err(Error::param("test set is empty"));
    }
    let predictor = Predictor::new(train, reg, methods, spec, seed)?;
    let mut tau_rng = stream(seed, Purpose::Tau, 0);
    methods
        .iter()
        .map(|&method| {
            let mut covered = 0;
            let mut width_sum = 0.0;
            let mut finite = 0;
            for t in 0..test.len() {
                let tau = if matches!(method, Method::CrossConformal { .. }) {
                    tau_rng.random::<f64>()
                } else {
                    0.0
                };
                let p = predictor.predict(method, test.row(t), tau)?;
                if p.contains(test.response(t)) {
                    covered += 1;
                }
                let w = p.width();
                if w.is_finite() {
                    width_sum += w;
                    finite += 1;
                }
            }
            Ok(TrialOutcome {
                coverage: covered as f64 / test.len() as f64,
                width: (finite > 0).then(|| width_sum / finite as f64),
                infinite: test.len() - finite,
                n_test: test.len(),
            })
        })
        .collect()
}

/// Per-trial results of one method, with aggregates computed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub method: String,
    pub alpha: f64,
    pub trials: Vec<TrialOutcome>,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let t = values.len() as f64;
    let mean = values.iter().sum::<f64>() / t;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / t;
    (mean, (var / t).sqrt())
}

impl CoverageReport {
    pub fn coverage_mean(&self) -> f64 {
        mean_se(&self.coverages()).0
    }

    /// Standard error across trials, from the population standard
    /// deviation.
    pub fn coverage_se(&self) -> f64 {
        mean_se(&self.coverages()).1
    }

    /// Mean over trials of the per-trial mean finite width.
    pub fn width_mean(&self) -> f64 {
        mean_se(&self.widths()).0
    }

    pub fn width_se(&self) -> f64 {
        mean_se(&self.widths()).1
    }

    pub fn infinite_count(&self) -> usize {
        self.trials.iter().map(|t| t.infinite).sum()
    }

    pub fn coverages(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.coverage).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.trials.iter().filter_map(|t| t.width).collect()
    }
}

/// Pools reports of the same method and level.
pub fn aggregate(reports: &[CoverageReport]) -> Result<CoverageReport> {
    let first = reports.first().ok_or_else(|| Error::param("nothing to aggregate"))?;
    for r in reports {
        if r.method != first.method || r.alpha != first.alpha {
            return Err(Error::param(format!(
                "cannot pool {} at alpha {} with {} at alpha {}",
                r.method, r.alpha, first.method, first.alpha
            )));
        }
    }
    Ok(CoverageReport {
        method: first.method.clone(),
        alpha: first.alpha,
        trials: reports.iter().flat_map(|r| r.trials.iter().cloned()).collect(),
    })
}

/// Runs `trials` independent trials. `draw` maps a trial seed to
/// `(train, test)`; `reg` maps the trial seed to the regressor.
pub fn monte_carlo<D>(
    reg: &dyn Regressor,
    draw: D,
    methods: &[Method],
    spec: &IntervalSpec,
    trials: usize,
    seed: u64,
) -> Result<Vec<CoverageReport>>
where
    D: Fn(u64) -> Result<(Dataset, Dataset)> + Sync,
{
    if trials == 0 {
        return Err(Error::param("trials must be positive"));
    }
    if methods.is_empty() {
        return Err(Error::param("no methods requested"));
    }
    let outcomes: Vec<Vec<TrialOutcome>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive_seed(seed, Purpose::Trial, t as u64);
            let (train, test) = draw(trial_seed)?;
            run_trial(&train, &test, reg, methods, spec, trial_seed)
        })
        .collect::<Result<_>>()?;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(m, method)| CoverageReport {
            method: method.to_string(),
            alpha: spec.alpha,
            trials: outcomes.iter().map(|o| o[m].clone()).collect(),
        })
        .collect())
}

/// Gaussian linear draw with a fresh `beta` per trial.
pub fn gaussian_linear_draw(n: usize, d: usize, n_test: usize) -> impl Fn(u64) -> Result<(Dataset, Dataset)> + Sync {
    move |trial_seed| {
        let beta = sample_beta(d, &mut stream(trial_seed, Purpose::Beta, 0));
        let train = sample_gaussian_linear(n, &beta, &mut stream(trial_seed, Purpose::Train, 0))?;
        let test = sample_gaussian_linear(n_test, &beta, &mut stream(trial_seed, Purpose::Test, 0))?;
        Ok((train, test))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure2Config {
    pub n: usize,
    pub d_list: Vec<usize>,
    pub trials: usize,
    pub n_test: usize,
    pub alpha: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl Default for Figure2Config {
    fn default() -> Self {
        Self {
            n: 100,
            d_list: (1..=40).map(|j| 5 * j).collect(),
            trials: 50,
            n_test: 100,
            alpha: 0.1,
            seed: 0,
            methods: Method::figure2_defaults(),
        }
    }
}

/// Min-norm least squares on Gaussian linear data at each dimension.
/// Returns `(d, report)` rows in `d_list` order, methods in given order.
pub fn figure2_experiment(cfg: &Figure2Config) -> Result<Vec<(usize, CoverageReport)>> {
    if cfg.n < 2 || cfg.n_test == 0 || cfg.d_list.is_empty() || cfg.d_list.contains(&0) {
        return Err(Error::param("figure2 needs n >= 2, n_test >= 1 and positive dimensions"));
    }
    let spec = IntervalSpec::symmetric(cfg.alpha)?;
    let mut rows = Vec::new();
    for &d in &cfg.d_list {
        let d_seed = derive_seed(cfg.seed, Purpose::Trial, d as u64);
        let reports = monte_carlo(
            &MinNormOls,
            gaussian_linear_draw(cfg.n, d, cfg.n_test),
            &cfg.methods,
            &spec,
            cfg.trials,
            d_seed,
        )?;
        rows.extend(reports.into_iter().map(|r| (d, r)));
    }
    Ok(rows)
}

/// Shortest round-trip decimal; `inf`, `-inf` and `nan` spelled out.
pub fn format_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

pub fn write_figure2_csv<W: Write>(out: &mut W, rows: &[(usize, CoverageReport)]) -> std::io::Result<()> {
    writeln!(out, "d,method,coverage_mean,coverage_se,width_mean,width_se")?;
    for (d, r) in rows {
        writeln!(
            out,
            "{d},{},{},{},{},{}",
            r.method,
            format_value(r.coverage_mean()),
            format_value(r.coverage_se()),
            format_value(r.width_mean()),
            format_value(r.width_se())
        )?;
    }
    Ok(())
}

/// One row per report: method, level, trial count, aggregates and the
/// number of infinite-width predictions.
pub fn write_reports_csv<W: Write>(out: &mut W, reports: &[CoverageReport]) -> std::io::Result<()> {
    writeln!(out, "method,alpha,trials,coverage_mean,coverage_se,width_mean,width_se,infinite")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method,
            format_value(r.alpha),
            r.trials.len(),
            format_value(r.coverage_mean()),
            format_value(r.coverage_se()),
            format_value(r.width_mean()),
            format_value(r.width_se()),
            r.infinite_count()
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMcConfig {
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub n_test: usize,
    pub alpha: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl Default for CoverageMcConfig {
    fn default() -> Self {
        Self {
            n: 20,
            d: 5,
            trials: 500,
            n_test: 50,
            alpha: 0.1,
            seed: 0,
            methods: vec![
                Method::JackknifePlus,
                Method::JackknifeMinmax,
                Method::Split,
                Method::CvPlus { folds: Some(2) },
                Method::CvPlus { folds: Some(5) },
                Method::CvPlus { folds: None },
            ],
        }
    }
}

/// Coverage of `methods` with regressor `reg` on Gaussian linear data.
pub fn coverage_mc(reg: &dyn Regressor, cfg: &CoverageMcConfig) -> Result<Vec<CoverageReport>> {
    if cfg.n < 2 || cfg.d == 0 || cfg.n_test == 0 {
        return Err(Error::param("coverage-mc needs n >= 2, d >= 1, n_test >= 1"));
    }
    let spec = IntervalSpec::symmetric(cfg.alpha)?;
    monte_carlo(reg, gaussian_linear_draw(cfg.n, cfg.d, cfg.n_test), &cfg.methods, &spec, cfg.trials, cfg.seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathologyKind {
    Memorizer,
    Parity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathologyConfig {
    pub kind: PathologyKind,
    pub n: usize,
    pub alpha: f64,
    /// Memorizer offset, or the inflation (and `tau = epsilon * n`) for
    /// parity.
    pub epsilon: f64,
    pub trials: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl PathologyConfig {
    pub fn memorizer() -> Self {
        Self {
            kind: PathologyKind::Memorizer,
            n: 10,
            alpha: 0.1,
            epsilon: 1.0,
            trials: 50,
            n_test: 20,
            seed: 0,
        }
    }

    pub fn parity() -> Self {
        Self {
            kind: PathologyKind::Parity,
            n: 100_000,
            alpha: 0.25,
            epsilon: 0.01,
            trials: 10,
            n_test: 1000,
            seed: 0,
        }
    }
}

/// `6 sqrt(log n / n)`, the slack above `1 - 2 alpha` in the parity bound.
pub fn parity_slack(n: usize) -> f64 {
    let n = n as f64;
    6.0 * (n.ln() / n).sqrt()
}

/// `(2.15 / alpha) sqrt(log n / n)`.
pub fn parity_gamma(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    2.15 / alpha * (nf.ln() / nf).sqrt()
}

/// Rejects parity settings where the coverage bound `1 - 2 alpha + slack`
/// is not below the nominal `1 - alpha`.
pub fn check_parity_params(n: usize, alpha: f64) -> Result<()> {
    if n < 2 || !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::param("parity needs n >= 2 and 0 < alpha < 0.5"));
    }
    let slack = parity_slack(n);
    if slack >= alpha {
        return Err(Error::param(format!(
            "parity bound is vacuous at n = {n}, alpha = {alpha}: 6*sqrt(log n / n) = {slack:.4} >= alpha"
        )));
    }
    let gamma = parity_gamma(n, alpha);
    if !(gamma < 1.0) {
        return Err(Error::param(format!("gamma = {gamma} must be below 1")));
    }
    Ok(())
}

/// Memorizer: naive, jackknife and jackknife+ on `Y = 0` with Gaussian
/// features. Parity: `epsilon`-inflated jackknife+ on the `(A, B, C)`
/// construction.
pub fn pathology_experiment(cfg: &PathologyConfig) -> Result<Vec<CoverageReport>> {
    match cfg.kind {
        PathologyKind::Memorizer => {
            let reg = Memorizer::new(cfg.epsilon)?;
            let spec = IntervalSpec::symmetric(cfg.alpha)?;
            let (n, n_test) = (cfg.n, cfg.n_test);
            if n < 2 || n_test == 0 {
                return Err(Error::param("memorizer pathology needs n >= 2 and n_test >= 1"));
            }
            let draw = move |s: u64| {
                let zero = vec![0.0; 2];
                let train = sample_gaussian_linear(n, &zero, &mut stream(s, Purpose::Train, 0))?;
                let test = sample_gaussian_linear(n_test, &zero, &mut stream(s, Purpose::Test, 0))?;
                let y0 = |d: Dataset| Dataset::new(d.dim(), d.features().to_vec(), vec![0.0; d.len()]);
                Ok((y0(train)?, y0(test)?))
            };
            monte_carlo(
                &reg,
                draw,
                &[Method::Naive, Method::Jackknife, Method::JackknifePlus],
                &spec,
                cfg.trials,
                cfg.seed,
            )
        }
        PathologyKind::Parity => {
            check_parity_params(cfg.n, cfg.alpha)?;
            if !(cfg.epsilon > 0.0) || cfg.n_test == 0 {
                return Err(Error::param("parity needs epsilon > 0 and n_test >= 1"));
            }
            let gamma = parity_gamma(cfg.n, cfg.alpha);
            let tau = cfg.epsilon * cfg.n as f64;
            let reg = ParityAdversary::new(tau)?;
            let spec = IntervalSpec::symmetric(cfg.alpha)?.with_inflation(cfg.epsilon)?;
            let (n, n_test, alpha) = (cfg.n, cfg.n_test, cfg.alpha);
            let draw = move |s: u64| {
                let train = sample_pathological_abc(n, alpha, gamma, &mut stream(s, Purpose::Train, 0))?.attach_tau(tau)?;
                let test = sample_pathological_abc(n_test, alpha, gamma, &mut stream(s, Purpose::Test, 0))?.attach_tau(tau)?;
                Ok((train, test))
            };
            monte_carlo(&reg, draw, &[Method::JackknifePlus], &spec, cfg.trials, cfg.seed)
        }
    }
}

/// Draws a uniform `tau` for callers that evaluate cross-conformal outside
/// [`run_trial`].
pub fn draw_tau(seed: u64, index: u64) -> f64 {
    rng_from_seed(derive_seed(seed, Purpose::Tau, index)).random()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::ConstantMean;

    fn worked() -> Dataset {
        Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], &[0.0, 0.0, 3.0]).unwrap()
    }

    #[test]
    fn method_tokens_round_trip() {
        for t in ["naive", "split", "jackknife", "jackknife+", "jackknife-mm", "cv+:5", "cv+:n", "cross-conformal:10", "full-conformal:50"] {
            assert_eq!(t.parse::<Method>().unwrap().to_string(), t);
        }
        assert_eq!("cv+".parse::<Method>().unwrap(), Method::CvPlus { folds: Some(10) });
        assert!("cv+:x".parse::<Method>().is_err());
        assert!("naive:3".parse::<Method>().is_err());
        assert!("bogus".parse::<Method>().is_err());
        assert_eq!(Method::parse_list("naive, jackknife+").unwrap().len(), 2);
    }

    #[test]
    fn unbounded_intervals_cover_everything() {
        let test = Dataset::from_rows(&[vec![0.0], vec![5.0]], &[100.0, -7.0]).unwrap();
        let spec = IntervalSpec::symmetric(0.1).unwrap();
        let out = run_trial(&worked(), &test, &ConstantMean, &[Method::JackknifePlus], &spec, 0).unwrap();
        assert_eq!(out[0].coverage, 1.0);
        assert_eq!(out[0].infinite, 2);
        assert_eq!(out[0].width, None);
    }

    #[test]
    fn worked_jackknife_plus_covers() {
        let test = Dataset::from_rows(&[vec![9.0]], &[2.5]).unwrap();
        let spec = IntervalSpec::symmetric(0.25).unwrap();
        let out = run_trial(&worked(), &test, &ConstantMean, &[Method::JackknifePlus], &spec, 0).unwrap();
        assert_eq!(out[0].coverage, 1.0);
        assert_eq!(out[0].width, Some(6.0));
    }

    #[test]
    fn memorizer_pathology_is_exact() {
        let reports = pathology_experiment(&PathologyConfig::memorizer()).unwrap();
        let [naive, jk, jkp] = &reports[..] else { panic!() };
        assert!(naive.trials.iter().all(|t| t.coverage == 0.0));
        assert!(jk.trials.iter().all(|t| t.coverage == 0.0));
        assert!(jkp.trials.iter().all(|t| t.coverage == 1.0));
    }

    #[test]
    fn aggregate_rules() {
        let r = CoverageReport {
            method: "jackknife+".into(),
            alpha: 0.1,
            trials: vec![
                TrialOutcome { coverage: 0.8, width: Some(2.0), infinite: 0, n_test: 10 },
                TrialOutcome { coverage: 1.0, width: Some(3.0), infinite: 1, n_test: 10 },
                TrialOutcome { coverage: 0.9, width: None, infinite: 10, n_test: 10 },
            ],
        };
        assert_eq!(aggregate(std::slice::from_ref(&r)).unwrap(), r);
        let pooled = aggregate(&[r.clone(), r.clone()]).unwrap();
        assert!((pooled.coverage_mean() - r.coverage_mean()).abs() < 1e-15);
        assert!((pooled.coverage_se() - r.coverage_se() / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(pooled.infinite_count(), 22);
        assert_eq!(r.width_mean(), 2.5);
        let mut other = r.clone();
        other.alpha = 0.2;
        assert!(aggregate(&[r, other]).is_err());
    }

    #[test]
    fn parity_vacuity() {
        assert!(check_parity_params(1_000, 0.25).is_err());
        assert!(check_parity_params(10_000, 0.25).is_ok());
        assert!(check_parity_params(100_000, 0.25).is_ok());
        assert!((parity_gamma(100_000, 0.25) - 0.0923).abs() < 1e-3);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let cfg = CoverageMcConfig {
            trials: 6,
            n_test: 5,
            n: 10,
            methods: vec![Method::JackknifePlus, Method::CrossConformal { folds: Some(5) }, Method::Split],
            ..CoverageMcConfig::default()
        };
        let a = coverage_mc(&ConstantMean, &cfg).unwrap();
        let b = coverage_mc(&ConstantMean, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
