//! Empirical `(epsilon, nu)` stability and the coverage bounds it implies.
//!
//! A regressor is out-of-sample stable at `(epsilon, nu)` when removing one
//! training row moves the prediction at a fresh point by more than
//! `epsilon` with probability at most `nu`; in-sample stability measures
//! the move at the removed row itself. By exchangeability it is enough to
//! remove the first row.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::Sampler;
use crate::error::{Error, Result};
use crate::regress::Regressor;
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilityKind {
    InSample,
    OutOfSample,
}

impl StabilityKind {
    pub fn token(&self) -> &'static str {
        match self {
            StabilityKind::InSample => "in-sample",
            StabilityKind::OutOfSample => "out-of-sample",
        }
    }
}

impl fmt::Display for StabilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for StabilityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-sample" | "in_sample" => Ok(StabilityKind::InSample),
            "out-of-sample" | "out_of_sample" => Ok(StabilityKind::OutOfSample),
            other => Err(Error::param(format!(
                "unknown stability kind '{other}' (expected in-sample | out-of-sample)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityEstimate {
    pub epsilon: f64,
    /// Fraction of trials whose deviation exceeded `epsilon`.
    pub nu_hat: f64,
    /// Binomial standard error of `nu_hat`.
    pub se: f64,
    pub kind: StabilityKind,
    pub trials: usize,
    /// Training size of the full fit; the leave-one-out fit uses `n - 1`.
    pub n: usize,
}

/// `|mu(x) - mu_{-1}(x)|` for each trial, where `x` is a fresh row or the
/// removed row depending on `kind`. Trial `t` draws from its own stream, so
/// the result does not depend on thread count.
pub fn stability_deviations(
    reg: &dyn Regressor,
    sampler: &dyn Sampler,
    n: usize,
    kind: StabilityKind,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::param("stability needs n >= 2"));
    }
    if trials == 0 {
        return Err(Error::param("stability needs at least one trial"));
    }
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, Purpose::Stability, t as u64);
            let data = sampler.sample(n + 1, &mut rng)?;
            let train = data.select(&(0..n).collect::<Vec<_>>());
            let full = reg.fit(&train)?;
            let reduced = reg.fit(&train.without(&[0]))?;
            let x = match kind {
                StabilityKind::OutOfSample => data.row(n),
                StabilityKind::InSample => data.row(0),
            };
            Ok((full.predict(x) - reduced.predict(x)).abs())
        })
        .collect()
}

/// Turns raw deviations into an estimate at threshold `epsilon`.
pub fn estimate_from_deviations(
    deviations: &[f64],
    epsilon: f64,
    kind: StabilityKind,
    n: usize,
) -> Result<StabilityEstimate> {
    if !(epsilon >= 0.0) {
        return Err(Error::param("epsilon must be >= 0"));
    }
    if deviations.is_empty() {
        return Err(Error::param("no deviations"));
    }
    let trials = deviations.len();
    let hits = deviations.iter().filter(|&&d| d > epsilon).count();
    let nu_hat = hits as f64 / trials as f64;
    Ok(StabilityEstimate {
        epsilon,
        nu_hat,
        se: (nu_hat * (1.0 - nu_hat) / trials as f64).sqrt(),
        kind,
        trials,
        n,
    })
}

pub fn estimate_stability(
    reg: &dyn Regressor,
    sampler: &dyn Sampler,
    n: usize,
    epsilon: f64,
    kind: StabilityKind,
    trials: usize,
    seed: u64,
) -> Result<StabilityEstimate> {
    if !(epsilon >= 0.0) {
        return Err(Error::param("epsilon must be >= 0"));
    }
    let devs = stability_deviations(reg, sampler, n, kind, trials, seed)?;
    estimate_from_deviations(&devs, epsilon, kind, n)
}

/// Lower bounds on coverage probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTable {
    /// `epsilon`-inflated jackknife: `1 - alpha - 2 sqrt(nu)`.
    pub jackknife_inflated: f64,
    /// `2 epsilon`-inflated jackknife+: `1 - alpha - 4 sqrt(nu)`.
    pub jackknife_plus_inflated: f64,
    /// `2 epsilon`-inflated naive: `1 - alpha - 4 sqrt(nu)`.
    pub naive_inflated: f64,
    /// `1 - 2 alpha`.
    pub jackknife_plus: f64,
    /// `1 - alpha`.
    pub minmax: f64,
    /// `1 - 2 alpha` minus the fold-count slack.
    pub cv_plus: f64,
    /// `1 - 2 alpha - sqrt(2 / n)`, below `cv_plus` for every `K`.
    pub cv_plus_floor: f64,
}

impl BoundTable {
    /// Subtracts the density term for a response density bounded by `c`:
    /// `2 epsilon c` from the jackknife bound and `4 epsilon c` from the
    /// doubly inflated ones.
    pub fn with_density_term(mut self, epsilon: f64, c: f64) -> Self {
        self.jackknife_inflated -= 2.0 * epsilon * c;
        self.jackknife_plus_inflated -= 4.0 * epsilon * c;
        self.naive_inflated -= 4.0 * epsilon * c;
        self
    }
}

/// `min{2(1 - 1/K)/(n/K + 1), (1 - K/n)/(K + 1)}`.
pub fn cv_plus_slack(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    let a = 2.0 * (1.0 - 1.0 / k) / (n / k + 1.0);
    let b = (1.0 - k / n) / (k + 1.0);
    a.min(b)
}

pub fn coverage_lower_bounds(alpha: f64, nu: f64, n: usize, k: usize) -> Result<BoundTable> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("alpha = {alpha} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::param(format!("nu = {nu} outside [0, 1]")));
    }
    if k < 2 || k > n {
        return Err(Error::param(format!("K = {k} must satisfy 2 <= K <= n = {n}")));
    }
    let root = nu.sqrt();
    Ok(BoundTable {
        jackknife_inflated: 1.0 - alpha - 2.0 * root,
        jackknife_plus_inflated: 1.0 - alpha - 4.0 * root,
        naive_inflated: 1.0 - alpha - 4.0 * root,
        jackknife_plus: 1.0 - 2.0 * alpha,
        minmax: 1.0 - alpha,
        cv_plus: 1.0 - 2.0 * alpha - cv_plus_slack(n, k),
        cv_plus_floor: 1.0 - 2.0 * alpha - (2.0 / n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GaussianLinear;
    use crate::regress::{ConstantMean, Knn, Memorizer};

    #[test]
    fn large_threshold_means_no_violations() {
        let sampler = GaussianLinear::new(vec![1.0]).unwrap();
        let est = estimate_stability(&ConstantMean, &sampler, 10, 1e6, StabilityKind::OutOfSample, 200, 1).unwrap();
        assert_eq!(est.nu_hat, 0.0);
        assert_eq!(est.se, 0.0);
    }

    #[test]
    fn nearest_neighbour_rarely_moves() {
        let sampler = GaussianLinear::new(vec![1.0, -0.5]).unwrap();
        let est = estimate_stability(&Knn::new(1).unwrap(), &sampler, 10, 0.0, StabilityKind::OutOfSample, 2000, 3).unwrap();
        let se = (0.1f64 * 0.9 / 2000.0).sqrt();
        assert!(est.nu_hat <= 0.1 + 3.0 * se, "nu_hat = {}", est.nu_hat);
    }

    #[test]
    fn memorizer_always_moves_by_one_plus_eps() {
        let sampler = GaussianLinear::new(vec![1.0]).unwrap();
        let mem = Memorizer::new(1.0).unwrap();
        let devs = stability_deviations(&mem, &sampler, 8, StabilityKind::OutOfSample, 50, 2).unwrap();
        assert!(devs.iter().all(|&d| d == 2.0));
        let est = estimate_from_deviations(&devs, 1.9, StabilityKind::OutOfSample, 8).unwrap();
        assert_eq!(est.nu_hat, 1.0);
    }

    #[test]
    fn bound_table_examples() {
        let b = coverage_lower_bounds(0.1, 0.0, 100, 10).unwrap();
        assert!((cv_plus_slack(100, 10) - 0.9 / 11.0).abs() < 1e-15);
        assert!((b.cv_plus - (0.8 - 0.9 / 11.0)).abs() < 1e-12);
        assert_eq!(b.jackknife_inflated, 0.9);
        assert_eq!(b.jackknife_plus_inflated, 0.9);
        assert_eq!(b.naive_inflated, 0.9);
        assert_eq!(b.minmax, 0.9);
        let full = coverage_lower_bounds(0.1, 0.0, 100, 100).unwrap();
        assert_eq!(full.cv_plus, full.jackknife_plus);
        assert!(coverage_lower_bounds(0.1, 0.0, 100, 1).is_err());
        let c = b.with_density_term(0.01, 2.0);
        assert!((c.jackknife_inflated - (0.9 - 0.04)).abs() < 1e-12);
        assert!((c.jackknife_plus_inflated - (0.9 - 0.08)).abs() < 1e-12);
    }

    #[test]
    fn kind_tokens() {
        for k in [StabilityKind::InSample, StabilityKind::OutOfSample] {
            assert_eq!(k.token().parse::<StabilityKind>().unwrap(), k);
        }
    }
}
