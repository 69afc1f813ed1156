//! Command-line front end.
//!
//! Every output file starts with `#` lines echoing the resolved
//! configuration, followed by a CSV table. Exit status is 0 on success,
//! 1 when an audit finds a violation, 2 for configuration errors and 3 for
//! data errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{GaussianLinear, Table};
use crate::error::{Error, Result};
use crate::eval::{
    coverage_mc, draw_tau, figure2_experiment, format_value, pathology_experiment, write_figure2_csv,
    write_reports_csv, CoverageMcConfig, Figure2Config, Method, PathologyConfig, PathologyKind, Predictor,
};
use crate::intervals::{IntervalSpec, Prediction};
use crate::oracle::{replay_record, run_audit, AuditConfig, Variant};
use crate::regress::RegressorKind;
use crate::stability::{coverage_lower_bounds, estimate_stability, StabilityKind};

#[derive(Debug, Parser)]
#[command(name = "jackplus", version, about = "Jackknife+, CV+ and conformal prediction intervals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prediction intervals for the rows of a test CSV.
    Intervals(IntervalsArgs),
    /// Monte Carlo experiments.
    Simulate(SimulateArgs),
    /// Audit the strange-set bounds on random small instances.
    Audit(AuditArgs),
    /// Estimate (epsilon, nu) stability of a regressor.
    Stability(StabilityArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RegressorArgs {
    /// ols | ridge | knn | mean | memorizer | parity
    #[arg(long, default_value = "ols")]
    pub regressor: String,
    /// Ridge penalty relative to the squared spectral norm of X.
    #[arg(long, default_value_t = 0.001)]
    pub lambda: f64,
    /// Fit ridge without an intercept.
    #[arg(long)]
    pub no_intercept: bool,
    /// Neighbours for knn.
    #[arg(long, default_value_t = 5)]
    pub knn_k: usize,
    /// Offset of the memorizer.
    #[arg(long, default_value_t = 1.0)]
    pub mem_eps: f64,
    /// Scale of the parity adversary.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
}

impl RegressorArgs {
    pub fn kind(&self) -> Result<RegressorKind> {
        Ok(match self.regressor.parse::<RegressorKind>()? {
            RegressorKind::Ridge { .. } => RegressorKind::Ridge {
                lambda_rel: self.lambda,
                intercept: !self.no_intercept,
            },
            RegressorKind::Knn { .. } => RegressorKind::Knn { k: self.knn_k },
            RegressorKind::Memorizer { .. } => RegressorKind::Memorizer { eps: self.mem_eps },
            RegressorKind::Parity { .. } => RegressorKind::Parity { tau: self.tau },
            other => other,
        })
    }

    fn echo(&self, kind: &RegressorKind) -> String {
        format!("{kind:?}").replace(' ', "")
    }
}

#[derive(Debug, Clone, Args)]
pub struct IntervalsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub regressor: RegressorArgs,
    /// Training CSV with header.
    #[arg(long)]
    pub train: PathBuf,
    /// Test CSV; the target column is optional.
    #[arg(long)]
    pub test: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    pub target: String,
    /// Comma-separated methods: naive, split, jackknife, jackknife+,
    /// jackknife-mm, cv+[:K|:n], cross-conformal[:K|:n],
    /// full-conformal[:points].
    #[arg(long, default_value = "jackknife+")]
    pub methods: String,
    /// Target miscoverage.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Lower-tail level; with --alpha-hi selects asymmetric intervals.
    #[arg(long, requires = "alpha_hi")]
    pub alpha_lo: Option<f64>,
    /// Upper-tail level.
    #[arg(long, requires = "alpha_lo")]
    pub alpha_hi: Option<f64>,
    /// Fold count for cv+ and cross-conformal given without `:K`.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Grid size for full-conformal given without `:points`.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Additive inflation of interval ends.
    #[arg(long, default_value_t = 0.0)]
    pub inflation: f64,
    /// Fail when K does not divide n.
    #[arg(long)]
    pub strict_folds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Experiment {
    Figure2,
    PathologyMemorizer,
    PathologyParity,
    CoverageMc,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    /// Training size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated dimensions (figure2).
    #[arg(long)]
    pub d_list: Option<String>,
    /// Dimension (coverage-mc).
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Memorizer offset or parity inflation.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Comma-separated methods (figure2, coverage-mc).
    #[arg(long)]
    pub methods: Option<String>,
    /// Regressor for coverage-mc.
    #[arg(long, default_value = "ols")]
    pub regressor: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VariantArg {
    Plus,
    Minmax,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest training size (at most 30).
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Smallest training size.
    #[arg(long, default_value_t = 4)]
    pub n_min: usize,
    /// Largest feature dimension.
    #[arg(long, default_value_t = 3)]
    pub d_max: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Comma-separated levels, one drawn per instance.
    #[arg(long, default_value = "0.1,0.25,0.5")]
    pub alpha: String,
    /// Comma-separated regressors, one drawn per instance.
    #[arg(long, default_value = "mean,ols,knn")]
    pub regressor: String,
    #[arg(long, value_enum, default_value_t = VariantArg::Both)]
    pub variant: VariantArg,
    /// Where failing instances are written.
    #[arg(long, default_value = "audit_violations.txt")]
    pub replay: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KindArg {
    InSample,
    OutOfSample,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub regressor: RegressorArgs,
    /// Training size of the full fit.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Dimension of the Gaussian linear data.
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = KindArg::OutOfSample)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Level used for the bound columns.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
}

/// Errors carry their exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_data_error() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn io_failure(path: Option<&Path>, e: io::Error) -> Failure {
    let target = path.map_or("standard output".to_string(), |p| p.display().to_string());
    Failure {
        code: 3,
        message: format!("cannot write {target}: {e}"),
    }
}

/// Buffers output and writes it in one go, so a failed run leaves no
/// partial file.
fn emit(path: Option<&Path>, echo: &[String], body: &[u8]) -> std::result::Result<(), Failure> {
    let mut buf = Vec::new();
    for line in echo {
        buf.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    buf.extend_from_slice(body);
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_failure(Some(p), e))?;
            let mut w = BufWriter::new(file);
            w.write_all(&buf).and_then(|_| w.flush()).map_err(|e| io_failure(Some(p), e))
        }
        None => io::stdout().write_all(&buf).map_err(|e| io_failure(None, e)),
    }
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::param(format!("bad {what} value '{t}'")))
        })
        .collect()
}

fn parse_usizes(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::param(format!("bad {what} value '{t}'")))
        })
        .collect()
}

/// Parses `--methods`, letting `--folds` and `--grid` fill in bare tokens.
fn resolve_methods(list: &str, folds: Option<usize>, grid: Option<usize>) -> Result<Vec<Method>> {
    list.split(',')
        .map(|token| {
            let token = token.trim();
            let method: Method = token.parse()?;
            if token.contains(':') {
                return Ok(method);
            }
            Ok(match method {
                Method::CvPlus { .. } if folds.is_some() => Method::CvPlus { folds },
                Method::CrossConformal { .. } if folds.is_some() => Method::CrossConformal { folds },
                Method::FullConformal { .. } if grid.is_some() => Method::FullConformal {
                    grid: grid.unwrap_or_default(),
                },
                m => m,
            })
        })
        .collect()
}

fn prediction_cells(p: &Prediction) -> (String, String) {
    match p {
        Prediction::Interval(i) => (format_value(i.lower), format_value(i.upper)),
        Prediction::Set(s) => (
            s.segments
                .iter()
                .map(|seg| format!("{}:{}", format_value(seg.lower), format_value(seg.upper)))
                .collect::<Vec<_>>()
                .join(";"),
            String::new(),
        ),
    }
}

pub fn cmd_intervals(args: &IntervalsArgs) -> std::result::Result<(), Failure> {
    let kind = args.regressor.kind()?;
    let reg = kind.build()?;
    let spec = match (args.alpha_lo, args.alpha_hi) {
        (Some(lo), Some(hi)) => IntervalSpec::asymmetric(lo, hi)?,
        _ => IntervalSpec::symmetric(args.alpha)?,
    }
    .with_inflation(args.inflation)?;
    let methods = resolve_methods(&args.methods, args.folds, args.grid)?;
    let train = Table::open(&args.train)?.into_parts(&args.target)?.0;
    let test_table = Table::open(&args.test)?;
    let has_target = test_table.column(&args.target).is_some();
    let (test, test_y) = if has_target {
        test_table.into_parts(&args.target)?
    } else {
        let mut header = test_table.header.clone();
        header.push(args.target.clone());
        let rows = test_table
            .rows
            .iter()
            .map(|r| r.iter().copied().chain(std::iter::once(0.0)).collect())
            .collect();
        let (ds, _) = Table { header, rows }.into_parts(&args.target)?;
        (ds, None)
    };
    if train.names() != test.names() {
        return Err(Error::ColumnMismatch {
            expected: train.names().join(","),
            found: test.names().join(","),
        }
        .into());
    }
    if args.strict_folds {
        for m in &methods {
            if let Method::CvPlus { folds: Some(k) } | Method::CrossConformal { folds: Some(k) } = m {
                if *k == 0 || train.len() % k != 0 {
                    return Err(Error::param(format!("K = {k} does not divide n = {}", train.len())).into());
                }
            }
        }
    }
    let predictor = Predictor::new(&train, reg.as_ref(), &methods, &spec, args.common.seed)?;

    let mut body = Vec::new();
    writeln!(body, "test_index,method,alpha,lower,upper,covered").map_err(|e| io_failure(None, e))?;
    for t in 0..test.len() {
        for (m, &method) in methods.iter().enumerate() {
            let tau = draw_tau(args.common.seed, (t * methods.len() + m) as u64);
            let p = predictor.predict(method, test.row(t), tau)?;
            let (lower, upper) = prediction_cells(&p);
            let covered = match &test_y {
                Some(y) => p.contains(y[t]).to_string(),
                None => String::new(),
            };
            writeln!(
                body,
                "{},{method},{},{lower},{upper},{covered}",
                t + 1,
                format_value(spec.alpha)
            )
            .map_err(|e| io_failure(None, e))?;
        }
    }
    let mut echo = vec![
        "command=intervals".to_string(),
        format!("train={}", args.train.display()),
        format!("test={}", args.test.display()),
        format!("target={}", args.target),
        format!("regressor={}", args.regressor.echo(&kind)),
        format!(
            "methods={}",
            methods.iter().map(Method::to_string).collect::<Vec<_>>().join(",")
        ),
        format!("alpha={}", format_value(spec.alpha)),
        format!("mode={:?}", spec.mode).replace(' ', ""),
        format!("inflation={}", format_value(spec.inflation)),
        format!("strict_folds={}", args.strict_folds),
        format!("seed={}", args.common.seed),
    ];
    echo.push(format!("n_train={} n_test={}", train.len(), test.len()));
    emit(args.common.out.as_deref(), &echo, &body)
}

pub fn cmd_simulate(args: &SimulateArgs) -> std::result::Result<(), Failure> {
    let seed = args.common.seed;
    let mut echo = vec![format!("command=simulate"), format!("seed={seed}")];
    let mut body = Vec::new();
    let methods = args.methods.as_deref().map(Method::parse_list).transpose()?;
    match args.experiment {
        Experiment::Figure2 => {
            let mut cfg = Figure2Config {
                seed,
                ..Figure2Config::default()
            };
            if let Some(n) = args.n {
                cfg.n = n;
            }
            if let Some(list) = &args.d_list {
                cfg.d_list = parse_usizes(list, "d-list")?;
            }
            if let Some(t) = args.trials {
                cfg.trials = t;
            }
            if let Some(t) = args.n_test {
                cfg.n_test = t;
            }
            if let Some(a) = args.alpha {
                cfg.alpha = a;
            }
            if let Some(m) = methods {
                cfg.methods = m;
            }
            echo.push("experiment=figure2".into());
            echo.push(format!("n={} trials={} n_test={}", cfg.n, cfg.trials, cfg.n_test));
            echo.push(format!("alpha={}", format_value(cfg.alpha)));
            echo.push(format!(
                "d_list={}",
                cfg.d_list.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
            ));
            echo.push(format!(
                "methods={}",
                cfg.methods.iter().map(Method::to_string).collect::<Vec<_>>().join(",")
            ));
            let rows = figure2_experiment(&cfg)?;
            write_figure2_csv(&mut body, &rows).map_err(|e| io_failure(None, e))?;
        }
        Experiment::CoverageMc => {
            let mut cfg = CoverageMcConfig {
                seed,
                ..CoverageMcConfig::default()
            };
            if let Some(n) = args.n {
                cfg.n = n;
            }
            if let Some(d) = args.d {
                cfg.d = d;
            }
            if let Some(t) = args.trials {
                cfg.trials = t;
            }
            if let Some(t) = args.n_test {
                cfg.n_test = t;
            }
            if let Some(a) = args.alpha {
                cfg.alpha = a;
            }
            if let Some(m) = methods {
                cfg.methods = m;
            }
            let kind: RegressorKind = args.regressor.parse()?;
            let reg = kind.build()?;
            echo.push("experiment=coverage-mc".into());
            echo.push(format!("regressor={}", kind.token()));
            echo.push(format!("n={} d={} trials={} n_test={}", cfg.n, cfg.d, cfg.trials, cfg.n_test));
            echo.push(format!("alpha={}", format_value(cfg.alpha)));
            echo.push(format!(
                "methods={}",
                cfg.methods.iter().map(Method::to_string).collect::<Vec<_>>().join(",")
            ));
            let reports = coverage_mc(reg.as_ref(), &cfg)?;
            write_reports_csv(&mut body, &reports).map_err(|e| io_failure(None, e))?;
        }
        Experiment::PathologyMemorizer | Experiment::PathologyParity => {
            if methods.is_some() {
                return Err(Error::param("pathology experiments fix their own methods").into());
            }
            let mut cfg = if args.experiment == Experiment::PathologyMemorizer {
                PathologyConfig::memorizer()
            } else {
                PathologyConfig::parity()
            };
            cfg.seed = seed;
            if let Some(n) = args.n {
                cfg.n = n;
            }
            if let Some(t) = args.trials {
                cfg.trials = t;
            }
            if let Some(t) = args.n_test {
                cfg.n_test = t;
            }
            if let Some(a) = args.alpha {
                cfg.alpha = a;
            }
            if let Some(e) = args.epsilon {
                cfg.epsilon = e;
            }
            let name = match cfg.kind {
                PathologyKind::Memorizer => "pathology-memorizer",
                PathologyKind::Parity => "pathology-parity",
            };
            echo.push(format!("experiment={name}"));
            echo.push(format!("n={} trials={} n_test={}", cfg.n, cfg.trials, cfg.n_test));
            echo.push(format!("alpha={}", format_value(cfg.alpha)));
            echo.push(format!("epsilon={}", format_value(cfg.epsilon)));
            let reports = pathology_experiment(&cfg)?;
            write_reports_csv(&mut body, &reports).map_err(|e| io_failure(None, e))?;
        }
    }
    emit(args.common.out.as_deref(), &echo, &body)
}

/// Returns `Ok(true)` when every instance passed.
pub fn cmd_audit(args: &AuditArgs) -> std::result::Result<bool, Failure> {
    let cfg = AuditConfig {
        n_min: args.n_min,
        n_max: args.n,
        d_max: args.d_max,
        trials: args.trials,
        alphas: parse_floats(&args.alpha, "alpha")?,
        regressors: args.regressor.split(',').map(|s| s.trim().to_string()).collect(),
        variants: match args.variant {
            VariantArg::Plus => vec![Variant::Plus],
            VariantArg::Minmax => vec![Variant::Minmax],
            VariantArg::Both => Variant::ALL.to_vec(),
        },
        seed: args.common.seed,
    };
    let outcomes = run_audit(&cfg)?;

    let mut body = Vec::new();
    let mut replay = String::new();
    let mut failures = 0;
    writeln!(body, "instance,n,d,regressor,alpha,variant,strange,test_strange,covered,violations")
        .map_err(|e| io_failure(None, e))?;
    for o in &outcomes {
        for r in &o.reports {
            writeln!(
                body,
                "{},{},{},{},{},{},{},{},{},{}",
                o.instance.index,
                r.n,
                o.instance.data.dim(),
                o.instance.label(),
                format_value(r.alpha),
                r.variant,
                r.strange.len(),
                r.test_is_strange(),
                r.covered,
                r.violations.len()
            )
            .map_err(|e| io_failure(None, e))?;
            if !r.passed() {
                failures += 1;
                replay.push_str(&format!("# instance={}\n", o.instance.index));
                replay.push_str(&replay_record(&o.instance.data, &o.instance.label(), r)?);
            }
        }
    }
    let echo = vec![
        "command=audit".to_string(),
        format!("n_min={} n_max={} d_max={}", cfg.n_min, cfg.n_max, cfg.d_max),
        format!("trials={}", cfg.trials),
        format!("alpha={}", args.alpha),
        format!("regressor={}", args.regressor),
        format!(
            "variant={}",
            cfg.variants.iter().map(Variant::token).collect::<Vec<_>>().join(",")
        ),
        format!("seed={}", cfg.seed),
    ];
    emit(args.common.out.as_deref(), &echo, &body)?;
    if failures > 0 {
        std::fs::write(&args.replay, replay).map_err(|e| io_failure(Some(&args.replay), e))?;
        eprintln!(
            "{failures} audit violations; failing instances written to {}",
            args.replay.display()
        );
    }
    Ok(failures == 0)
}

pub fn cmd_stability(args: &StabilityArgs) -> std::result::Result<(), Failure> {
    let kind = args.regressor.kind()?;
    let reg = kind.build()?;
    let stab_kind = match args.kind {
        KindArg::InSample => StabilityKind::InSample,
        KindArg::OutOfSample => StabilityKind::OutOfSample,
    };
    let sampler = GaussianLinear::random(args.d, args.common.seed)?;
    let est = estimate_stability(
        reg.as_ref(),
        &sampler,
        args.n,
        args.epsilon,
        stab_kind,
        args.trials,
        args.common.seed,
    )?;
    let bounds = coverage_lower_bounds(args.alpha, est.nu_hat, args.n, args.n)?;
    let mut body = Vec::new();
    writeln!(
        body,
        "epsilon,nu_hat,se,kind,n,trials,bound_jackknife,bound_jackknife_plus,bound_naive"
    )
    .and_then(|_| {
        writeln!(
            body,
            "{},{},{},{},{},{},{},{},{}",
            format_value(est.epsilon),
            format_value(est.nu_hat),
            format_value(est.se),
            est.kind,
            est.n,
            est.trials,
            format_value(bounds.jackknife_inflated),
            format_value(bounds.jackknife_plus_inflated),
            format_value(bounds.naive_inflated)
        )
    })
    .map_err(|e| io_failure(None, e))?;
    let echo = vec![
        "command=stability".to_string(),
        format!("regressor={}", args.regressor.echo(&kind)),
        format!("n={} d={} trials={}", args.n, args.d, args.trials),
        format!("epsilon={}", format_value(args.epsilon)),
        format!("kind={stab_kind}"),
        format!("alpha={}", format_value(args.alpha)),
        format!("seed={}", args.common.seed),
    ];
    emit(args.common.out.as_deref(), &echo, &body)
}

/// Runs the parsed command and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Intervals(a) => cmd_intervals(a).map(|_| 0),
        Command::Simulate(a) => cmd_simulate(a).map(|_| 0),
        Command::Audit(a) => cmd_audit(a).map(|ok| if ok { 0 } else { 1 }),
        Command::Stability(a) => cmd_stability(a).map(|_| 0),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
