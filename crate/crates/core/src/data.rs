//! Datasets, CSV ingestion, train/holdout splitting and the synthetic
//! generators used by the experiments.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// A feature matrix (row-major, `n x d`) together with its response vector.
///
/// All entries are finite. Rows can be empty (`n = 0`), which is only ever
/// produced internally when leave-out fits run on tiny training sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    features: Vec<f64>,
    responses: Vec<f64>,
    names: Vec<String>,
}

fn default_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).collect()
}

impl Dataset {
    /// Builds a dataset from a flat row-major feature buffer.
    pub fn new(d: usize, features: Vec<f64>, responses: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Shape("feature dimension must be at least 1".into()));
        }
        if features.len() != d * responses.len() {
            return Err(Error::Shape(format!(
                "{} feature values do not form {} rows of dimension {d}",
                features.len(),
                responses.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d + 1,
                column: format!("x{}", pos % d + 1),
                value: features[pos].to_string(),
            });
        }
        if let Some(pos) = responses.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos + 1,
                column: "y".into(),
                value: responses[pos].to_string(),
            });
        }
        Ok(Self {
            n: responses.len(),
            d,
            features,
            responses,
            names: default_names(d),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], responses: &[f64]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.len() != responses.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} responses",
                rows.len(),
                responses.len()
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::Ragged {
                row: i + 1,
                expected: d,
                found: rows[i].len(),
            });
        }
        Self::new(d, rows.concat(), responses.to_vec())
    }

    /// Renames the feature columns; the count must match `d`.
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d {
            return Err(Error::Shape(format!(
                "{} names for {} feature columns",
                names.len(),
                self.d
            )));
        }
        self.names = names;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn response(&self, i: usize) -> f64 {
        self.responses[i]
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut responses = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            responses.push(self.responses[i]);
        }
        Dataset {
            n: indices.len(),
            d: self.d,
            features,
            responses,
            names: self.names.clone(),
        }
    }

    /// All rows except those in `excluded`, original order preserved.
    pub fn without(&self, excluded: &[usize]) -> Dataset {
        let drop: HashSet<usize> = excluded.iter().copied().collect();
        let keep: Vec<usize> = (0..self.n).filter(|i| !drop.contains(i)).collect();
        self.select(&keep)
    }

    /// Appends one row. Used by full conformal to add the hypothesised test
    /// point.
    pub fn augmented(&self, x: &[f64], y: f64) -> Result<Dataset> {
        if x.len() != self.d {
            return Err(Error::Shape(format!(
                "point has dimension {}, dataset has {}",
                x.len(),
                self.d
            )));
        }
        let mut out = self.clone();
        out.features.extend_from_slice(x);
        out.responses.push(y);
        out.n += 1;
        Ok(out)
    }

    /// Concatenates two datasets with the same dimension.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if other.d != self.d {
            return Err(Error::Shape("dimension mismatch in concat".into()));
        }
        let mut out = self.clone();
        out.features.extend_from_slice(&other.features);
        out.responses.extend_from_slice(&other.responses);
        out.n += other.n;
        Ok(out)
    }

    /// Sets every response to `tau * A` where `A` is the first feature
    /// column. Companion of [`gen_pathological_abc`].
    pub fn attach_tau(mut self, tau: f64) -> Result<Dataset> {
        if !tau.is_finite() {
            return Err(Error::param("tau must be finite"));
        }
        for i in 0..self.n {
            self.responses[i] = tau * self.features[i * self.d];
        }
        Ok(self)
    }

    /// Row indices sorted by the row contents (features lexicographically,
    /// then response). Two datasets that are permutations of each other have
    /// identical rows in this order, which is what the regressors rely on to
    /// be exactly symmetric.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n).collect();
        idx.sort_by(|&a, &b| self.compare_rows(a, b));
        idx
    }

    pub(crate) fn compare_rows(&self, a: usize, b: usize) -> Ordering {
        for (u, v) in self.row(a).iter().zip(self.row(b)) {
            match u.total_cmp(v) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.responses[a].total_cmp(&self.responses[b])
    }

    /// Writes the dataset as CSV with the response in a final column named
    /// `target`. Values use 17 significant digits so a reload is lossless.
    pub fn write_csv<W: Write>(&self, out: W, target: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.names.iter().map(String::as_str).collect();
        header.push(target);
        let io = |e: csv::Error| Error::Csv {
            row: 0,
            message: e.to_string(),
        };
        w.write_record(&header).map_err(io)?;
        for i in 0..self.n {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| format_exact(*v)).collect();
            rec.push(format_exact(self.responses[i]));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Csv {
            row: 0,
            message: e.to_string(),
        })?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, target: &str) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(file, target)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_exact(v: f64) -> String {
    format!("{v:.16e}")
}

/// A parsed numeric CSV table: header plus rows of finite numbers.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read<R: Read>(input: R) -> Result<Table> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(input);
        let header: Vec<String> = match reader.headers() {
            Ok(h) => h.iter().map(|s| s.trim().to_string()).collect(),
            Err(e) => {
                return Err(Error::Csv {
                    row: 0,
                    message: e.to_string(),
                })
            }
        };
        if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
            return Err(Error::EmptyDataset);
        }
        let mut seen = HashSet::new();
        for name in &header {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        let mut rows = Vec::new();
        for (k, record) in reader.records().enumerate() {
            let row = k + 1;
            let record = record.map_err(|e| Error::Csv {
                row,
                message: e.to_string(),
            })?;
            if record.len() != header.len() {
                return Err(Error::Ragged {
                    row,
                    expected: header.len(),
                    found: record.len(),
                });
            }
            let mut values = Vec::with_capacity(header.len());
            for (cell, name) in record.iter().zip(&header) {
                let cell = cell.trim();
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    column: name.clone(),
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        row,
                        column: name.clone(),
                        value: cell.to_string(),
                    });
                }
                values.push(v);
            }
            rows.push(values);
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Table { header, rows })
    }

    pub fn open(path: &Path) -> Result<Table> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Table::read(file)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Splits the table into features and, when present, the target column.
    pub fn into_parts(self, target: &str) -> Result<(Dataset, Option<Vec<f64>>)> {
        let t = self.column(target);
        let names: Vec<String> = self
            .header
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != t)
            .map(|(_, h)| h.clone())
            .collect();
        if names.is_empty() {
            return Err(Error::Shape("no feature columns besides the target".into()));
        }
        let mut features = Vec::with_capacity(self.rows.len() * names.len());
        let mut target_values = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            for (j, v) in row.iter().enumerate() {
                if Some(j) == t {
                    target_values.push(*v);
                } else {
                    features.push(*v);
                }
            }
        }
        let n = self.rows.len();
        let responses = if t.is_some() {
            target_values.clone()
        } else {
            vec![0.0; n]
        };
        let ds = Dataset::new(names.len(), features, responses)?.with_names(names)?;
        Ok((ds, t.map(|_| target_values)))
    }
}

/// Loads a CSV with a header row; `target` names the response column and
/// every other column becomes a feature, in file order.
pub fn load_csv(path: &Path, target: &str) -> Result<Dataset> {
    let table = Table::open(path)?;
    if table.column(target).is_none() {
        return Err(Error::MissingTarget(target.to_string()));
    }
    Ok(table.into_parts(target)?.0)
}

/// Same as [`load_csv`] but reads from any reader.
pub fn read_csv<R: Read>(input: R, target: &str) -> Result<Dataset> {
    let table = Table::read(input)?;
    if table.column(target).is_none() {
        return Err(Error::MissingTarget(target.to_string()));
    }
    Ok(table.into_parts(target)?.0)
}

/// How to divide `0..n` into a fitting part and a holdout part.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitSpec {
    /// Random split; `holdout_fraction` of the rows (rounded) go to the
    /// holdout set.
    Fraction { holdout_fraction: f64, seed: u64 },
    /// Explicit, 0-based index lists.
    Explicit { train: Vec<usize>, holdout: Vec<usize> },
}

impl SplitSpec {
    pub fn half(seed: u64) -> Self {
        SplitSpec::Fraction {
            holdout_fraction: 0.5,
            seed,
        }
    }

    /// Resolves into `(train, holdout)` index lists, both sorted.
    pub fn resolve(&self, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        match self {
            SplitSpec::Fraction {
                holdout_fraction,
                seed,
            } => {
                if !(0.0..=1.0).contains(holdout_fraction) {
                    return Err(Error::param("holdout fraction must lie in [0, 1]"));
                }
                let m = ((n as f64) * holdout_fraction).round() as usize;
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(&mut rng_from_seed(*seed));
                let mut holdout = idx[..m].to_vec();
                let mut train = idx[m..].to_vec();
                holdout.sort_unstable();
                train.sort_unstable();
                Ok((train, holdout))
            }
            SplitSpec::Explicit { train, holdout } => {
                let mut seen = vec![false; n];
                for &i in train.iter().chain(holdout) {
                    if i >= n {
                        return Err(Error::param(format!("split index {i} out of range for n={n}")));
                    }
                    if seen[i] {
                        return Err(Error::param(format!("split index {i} listed twice")));
                    }
                    seen[i] = true;
                }
                if seen.iter().any(|s| !s) {
                    return Err(Error::param("split does not cover every row"));
                }
                let mut t = train.clone();
                let mut h = holdout.clone();
                t.sort_unstable();
                h.sort_unstable();
                Ok((t, h))
            }
        }
    }
}

/// `X ~ N(0, I_d)`, `Y = X^T beta + N(0, 1)` with a given `beta`.
pub fn sample_gaussian_linear(n: usize, beta: &[f64], rng: &mut SimRng) -> Result<Dataset> {
    let d = beta.len();
    if d == 0 {
        return Err(Error::param("dimension must be at least 1"));
    }
    let mut features = Vec::with_capacity(n * d);
    let mut responses = Vec::with_capacity(n);
    for _ in 0..n {
        let start = features.len();
        for _ in 0..d {
            features.push(rng.sample::<f64, _>(StandardNormal));
        }
        let mean: f64 = features[start..].iter().zip(beta).map(|(x, b)| x * b).sum();
        responses.push(mean + rng.sample::<f64, _>(StandardNormal));
    }
    Dataset::new(d, features, responses)
}

/// `sqrt(10) * u` for `u` uniform on the unit sphere in `d` dimensions.
pub fn sample_beta(d: usize, rng: &mut SimRng) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            return g.iter().map(|v| 10f64.sqrt() * v / norm).collect();
        }
    }
}

/// Gaussian linear model with a freshly drawn coefficient vector of norm
/// `sqrt(10)`. Returns the data and the coefficients.
pub fn gen_gaussian_linear(n: usize, d: usize, seed: u64) -> Result<(Dataset, Vec<f64>)> {
    if n == 0 || d == 0 {
        return Err(Error::param("gen_gaussian_linear needs n >= 1 and d >= 1"));
    }
    let mut rng = rng_from_seed(seed);
    let beta = sample_beta(d, &mut rng);
    let data = sample_gaussian_linear(n, &beta, &mut rng)?;
    Ok((data, beta))
}

/// Rows `(A, B, C)` with `A ~ Bernoulli(2 alpha (1 - gamma))`,
/// `B ~ Unif{-1, +1}`, `C ~ Unif[-1, 1]`, independent. Responses are left at
/// zero; use [`Dataset::attach_tau`] to set `Y = tau * A`.
pub fn gen_pathological_abc(n: usize, alpha: f64, gamma: f64, seed: u64) -> Result<Dataset> {
    let mut rng = rng_from_seed(seed);
    sample_pathological_abc(n, alpha, gamma, &mut rng)
}

pub fn sample_pathological_abc(
    n: usize,
    alpha: f64,
    gamma: f64,
    rng: &mut SimRng,
) -> Result<Dataset> {
    let p = 2.0 * alpha * (1.0 - gamma);
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!(
            "2*alpha*(1-gamma) = {p} must lie strictly between 0 and 1"
        )));
    }
    let a = Bernoulli::new(p).map_err(|e| Error::param(e.to_string()))?;
    let c = Uniform::new_inclusive(-1.0, 1.0).map_err(|e| Error::param(e.to_string()))?;
    let mut features = Vec::with_capacity(3 * n);
    for _ in 0..n {
        features.push(if a.sample(rng) { 1.0 } else { 0.0 });
        features.push(if rng.random::<bool>() { 1.0 } else { -1.0 });
        features.push(c.sample(rng));
    }
    Dataset::new(3, features, vec![0.0; n])?.with_names(vec!["a".into(), "b".into(), "c".into()])
}

/// A source of i.i.d. rows.
pub trait Sampler: Send + Sync {
    fn sample(&self, n: usize, rng: &mut SimRng) -> Result<Dataset>;
}

/// Gaussian linear rows with a fixed coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLinear {
    pub beta: Vec<f64>,
}

impl GaussianLinear {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() || beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("beta must be nonempty and finite"));
        }
        Ok(Self { beta })
    }

    /// Coefficients drawn as in [`gen_gaussian_linear`].
    pub fn random(d: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        Self::new(sample_beta(d, &mut rng_from_seed(seed)))
    }
}

impl Sampler for GaussianLinear {
    fn sample(&self, n: usize, rng: &mut SimRng) -> Result<Dataset> {
        sample_gaussian_linear(n, &self.beta, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_csv() {
        let text = "x1,x2,y\n1,2,3\n4,5,6\n7,8,9\n";
        let ds = read_csv(text.as_bytes(), "y").unwrap();
        assert_eq!((ds.len(), ds.dim()), (3, 2));
        assert_eq!(ds.row(1), &[4.0, 5.0]);
        assert_eq!(ds.responses(), &[3.0, 6.0, 9.0]);
        assert_eq!(ds.names(), &["x1".to_string(), "x2".to_string()]);
    }

    #[test]
    fn target_may_sit_anywhere() {
        let ds = read_csv("y,a\n1,2\n".as_bytes(), "y").unwrap();
        assert_eq!(ds.row(0), &[2.0]);
        assert_eq!(ds.response(0), 1.0);
    }

    #[test]
    fn reports_bad_cell_location() {
        let text = "x1,y\n1,2\nabc,3\n";
        match read_csv(text.as_bytes(), "y") {
            Err(Error::Parse { row, column, value }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "x1");
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        assert!(matches!(
            read_csv("x1,y\n".as_bytes(), "y"),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(read_csv("".as_bytes(), "y"), Err(Error::EmptyDataset)));
    }

    #[test]
    fn rejects_missing_and_duplicate_target() {
        assert!(matches!(
            read_csv("a,b\n1,2\n".as_bytes(), "y"),
            Err(Error::MissingTarget(_))
        ));
        assert!(matches!(
            read_csv("y,y\n1,2\n".as_bytes(), "y"),
            Err(Error::DuplicateColumn(_))
        ));
    }

    #[test]
    fn rejects_infinity_tokens() {
        for tok in ["inf", "-inf", "NaN"] {
            let text = format!("x,y\n{tok},1\n");
            assert!(matches!(
                read_csv(text.as_bytes(), "y"),
                Err(Error::NonFinite { row: 1, .. })
            ));
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matches!(
            read_csv("x,y\n1,2\n3\n".as_bytes(), "y"),
            Err(Error::Ragged { row: 2, .. })
        ));
    }

    #[test]
    fn round_trip_is_lossless() {
        let (ds, _) = gen_gaussian_linear(20, 3, 11).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf, "y").unwrap();
        let back = read_csv(buf.as_slice(), "y").unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn beta_has_norm_sqrt10() {
        let (_, beta) = gen_gaussian_linear(100, 5, 1).unwrap();
        let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!((norm - 10f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn generator_is_deterministic() {
        let a = gen_gaussian_linear(30, 4, 99).unwrap();
        let b = gen_gaussian_linear(30, 4, 99).unwrap();
        assert_eq!(a, b);
        let c = gen_gaussian_linear(30, 4, 100).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn response_variance_matches_model() {
        // Var(Y) = beta_1^2 + 1 for d = 1.
        let (ds, beta) = gen_gaussian_linear(10_000, 1, 5).unwrap();
        let y = ds.responses();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
        let expected = beta[0] * beta[0] + 1.0;
        assert!((var - expected).abs() <= 0.2, "var {var} vs {expected}");
    }

    #[test]
    fn feature_covariance_near_identity() {
        let (ds, _) = gen_gaussian_linear(100_000, 3, 8).unwrap();
        let n = ds.len() as f64;
        let mut frob = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let mut s = 0.0;
                for i in 0..ds.len() {
                    s += ds.row(i)[a] * ds.row(i)[b];
                }
                let target = if a == b { 1.0 } else { 0.0 };
                frob += (s / n - target).powi(2);
            }
        }
        assert!(frob.sqrt() < 0.05, "frobenius distance {}", frob.sqrt());
    }

    #[test]
    fn pathological_rates_and_support() {
        let ds = gen_pathological_abc(100_000, 0.25, 0.09, 3).unwrap();
        let rate = (0..ds.len()).map(|i| ds.row(i)[0]).sum::<f64>() / ds.len() as f64;
        assert!((rate - 2.0 * 0.25 * (1.0 - 0.09)).abs() < 0.01, "rate {rate}");
        assert!((0..ds.len()).all(|i| ds.row(i)[1] == 1.0 || ds.row(i)[1] == -1.0));
        assert!((0..ds.len()).all(|i| ds.row(i)[2].abs() <= 1.0));
        let ds = ds.attach_tau(10.0).unwrap();
        assert!(ds.responses().iter().all(|&y| y == 0.0 || y == 10.0));
    }

    #[test]
    fn pathological_parameter_range() {
        assert!(gen_pathological_abc(10, 0.6, 0.0, 1).is_err());
        assert!(gen_pathological_abc(10, 0.25, 1.0, 1).is_err());
    }

    #[test]
    fn fraction_split_is_disjoint_cover() {
        let (train, holdout) = SplitSpec::half(4).resolve(100).unwrap();
        assert_eq!(train.len(), 50);
        assert_eq!(holdout.len(), 50);
        let mut all: Vec<usize> = train.iter().chain(&holdout).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn explicit_split_validation() {
        let ok = SplitSpec::Explicit {
            train: vec![2, 0],
            holdout: vec![1],
        };
        assert_eq!(ok.resolve(3).unwrap(), (vec![0, 2], vec![1]));
        let overlap = SplitSpec::Explicit {
            train: vec![0, 1],
            holdout: vec![1, 2],
        };
        assert!(overlap.resolve(3).is_err());
        let gap = SplitSpec::Explicit {
            train: vec![0],
            holdout: vec![2],
        };
        assert!(gap.resolve(3).is_err());
    }

    #[test]
    fn canonical_order_ignores_row_order() {
        let a = Dataset::from_rows(&[vec![2.0], vec![1.0], vec![1.0]], &[0.0, 5.0, 4.0]).unwrap();
        let order = a.canonical_order();
        assert_eq!(order, vec![2, 1, 0]);
    }
}
