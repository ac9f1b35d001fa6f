//! Problem configuration, the estimated functionals, regime selection and
//! synthetic data generation for the sparse normal means model
//! `y_i = theta_i + eps * xi_i`.

use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// One estimation problem: dimension, sparsity, noise level, exponent, and
/// the dense-zone tuning constant `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub d: usize,
    pub s: usize,
    pub eps: f64,
    pub gamma: f64,
    #[serde(default = "default_c")]
    pub c: f64,
}

/// Default dense-zone constant; small enough for every constraint the
/// dense-zone risk analysis puts on `c` (see [`ProblemConfig::new`]).
pub const DEFAULT_C: f64 = 0.01;

fn default_c() -> f64 {
    DEFAULT_C
}

impl ProblemConfig {
    /// Validates all invariants, including the three smallness constraints
    /// on `c`: `2c ln 6 <= 1/8`, `c ln 6 + c < 1/4` and `c ln(1 + 4/c) < 1/8`.
    pub fn new(d: usize, s: usize, eps: f64, gamma: f64, c: f64) -> Result<ProblemConfig> {
        if d == 0 {
            return Err(Error::InvalidParameter("d must be >= 1".into()));
        }
        if s == 0 || s > d {
            return Err(Error::InvalidParameter(format!(
                "s must satisfy 1 <= s <= d (got s = {s}, d = {d})"
            )));
        }
        if eps <= 0.0 || !eps.is_finite() || eps.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "eps must be a positive real (got {eps})"
            )));
        }
        if gamma <= 0.0 || !gamma.is_finite() || gamma.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be a positive real (got {gamma})"
            )));
        }
        let ln6 = 6.0f64.ln();
        if c <= 0.0
            || c.is_nan()
            || 2.0 * c * ln6 > 0.125
            || c * ln6 + c >= 0.25
            || c * (1.0 + 4.0 / c).ln() >= 0.125
        {
            return Err(Error::InvalidParameter(format!(
                "c = {c} violates the dense-zone smallness constraints \
                 (need 2c ln6 <= 1/8, c ln6 + c < 1/4, c ln(1+4/c) < 1/8)"
            )));
        }
        Ok(ProblemConfig { d, s, eps, gamma, c })
    }

    /// `new` with the default `c`.
    pub fn with_default_c(d: usize, s: usize, eps: f64, gamma: f64) -> Result<ProblemConfig> {
        ProblemConfig::new(d, s, eps, gamma, DEFAULT_C)
    }

    /// Parses either a JSON object or flat `key=value` lines with keys
    /// `d, s, eps, gamma, c` (`c` optional).
    pub fn parse(text: &str) -> Result<ProblemConfig> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let cfg: ProblemConfig = serde_json::from_str(trimmed)
                .map_err(|e| Error::Parse(format!("config JSON: {e}")))?;
            return ProblemConfig::new(cfg.d, cfg.s, cfg.eps, cfg.gamma, cfg.c);
        }
        let (mut d, mut s, mut eps, mut gamma, mut c) = (None, None, None, None, DEFAULT_C);
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {line:?}")))?;
            let value = value.trim();
            match key.trim() {
                "d" => d = Some(parse_num::<usize>(value, "d")?),
                "s" => s = Some(parse_num::<usize>(value, "s")?),
                "eps" => eps = Some(parse_num::<f64>(value, "eps")?),
                "gamma" => gamma = Some(parse_num::<f64>(value, "gamma")?),
                "c" => c = parse_num::<f64>(value, "c")?,
                other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("missing config key {k:?}"));
        ProblemConfig::new(
            d.ok_or_else(|| missing("d"))?,
            s.ok_or_else(|| missing("s"))?,
            eps.ok_or_else(|| missing("eps"))?,
            gamma.ok_or_else(|| missing("gamma"))?,
            c,
        )
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("invalid value {value:?} for key {key:?}")))
}

/// Parameter regimes of the two estimator families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Dense,
    Sparse,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Dense => write!(f, "dense"),
            Regime::Sparse => write!(f, "sparse"),
        }
    }
}

/// Dense iff `s^2 >= 4d`; the boundary `s^2 = 4d` counts as dense, which is
/// the side the dense-zone risk bound explicitly covers.
pub fn regime(cfg: &ProblemConfig) -> Regime {
    if cfg.s * cfg.s >= 4 * cfg.d {
        Regime::Dense
    } else {
        Regime::Sparse
    }
}

/// A parameter vector, with sparsity checks against its configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaVector {
    values: Vec<f64>,
}

impl ThetaVector {
    pub fn new(values: Vec<f64>) -> ThetaVector {
        ThetaVector { values }
    }

    pub fn zeros(d: usize) -> ThetaVector {
        ThetaVector {
            values: vec![0.0; d],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of nonzero entries.
    pub fn l0(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Membership in the sparsity class of the configuration.
    pub fn in_class(&self, cfg: &ProblemConfig) -> bool {
        self.len() == cfg.d && self.l0() <= cfg.s
    }

    /// Reads one decimal float per line (UTF-8, LF). Parse failures carry the
    /// 1-based line number.
    pub fn read_from(path: &Path) -> Result<ThetaVector> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        ThetaVector::parse_reader(BufReader::new(file), &path.display().to_string())
    }

    pub fn parse_reader<R: Read>(reader: BufReader<R>, path: &str) -> Result<ThetaVector> {
        let mut values = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| Error::Io {
                path: path.to_string(),
                source,
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let v: f64 = trimmed.parse().map_err(|_| Error::ParseAt {
                path: path.to_string(),
                line: idx + 1,
                msg: format!("invalid float {trimmed:?}"),
            })?;
            values.push(v);
        }
        Ok(ThetaVector { values })
    }

    /// Writes the line-per-entry format with LF endings.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for v in &self.values {
            out.push_str(&format_float(*v));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Shortest decimal that round-trips to the same f64.
pub(crate) fn format_float(v: f64) -> String {
    let mut s = format!("{v}");
    if !s.contains(['.', 'e', 'n', 'i']) {
        s.push_str(".0");
    }
    s
}

/// `N_gamma(theta) = sum_i |theta_i|^gamma`.
pub fn big_n_gamma(theta: &ThetaVector, gamma: f64) -> Result<f64> {
    if gamma <= 0.0 || gamma.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive (got {gamma})"
        )));
    }
    Ok(theta
        .values()
        .iter()
        .map(|t| t.abs().powf(gamma))
        .sum::<f64>())
}

/// `n_gamma`: the functional itself for `gamma <= 1`, the norm
/// `(sum |theta_i|^gamma)^{1/gamma}` for `gamma > 1`.
pub fn n_gamma(theta: &ThetaVector, gamma: f64) -> Result<f64> {
    let total = big_n_gamma(theta, gamma)?;
    if gamma > 1.0 {
        Ok(total.powf(1.0 / gamma))
    } else {
        Ok(total)
    }
}

/// Draws `y = theta + eps * xi` with i.i.d. standard normal `xi` from the
/// stream keyed by `seed`. Deterministic for a fixed seed.
pub fn simulate_observations(theta: &ThetaVector, eps: f64, seed: u64) -> Vec<f64> {
    let mut stream = Stream::from_key(&[seed, stream_ids::OBSERVATIONS]);
    theta
        .values()
        .iter()
        .map(|t| t + eps * stream.normal())
        .collect()
}

/// Sub-stream identifiers; keeping the ids distinct makes the randomized
/// estimators on the same data independent of each other.
pub(crate) mod stream_ids {
    pub const OBSERVATIONS: u64 = 1;
    pub const DUPLICATE: u64 = 2;
    pub const CLONE: u64 = 3;
    pub const PRIOR_DRAW: u64 = 4;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ProblemConfig::with_default_c(100, 5, 1.0, 1.0).is_ok());
        assert!(ProblemConfig::with_default_c(100, 0, 1.0, 1.0).is_err());
        assert!(ProblemConfig::with_default_c(100, 101, 1.0, 1.0).is_err());
        assert!(ProblemConfig::with_default_c(100, 5, 0.0, 1.0).is_err());
        assert!(ProblemConfig::with_default_c(100, 5, 1.0, -2.0).is_err());
        // c too large for the dense-zone constraints
        assert!(ProblemConfig::new(100, 5, 1.0, 1.0, 0.1).is_err());
        assert!(ProblemConfig::new(100, 5, 1.0, 1.0, 0.02).is_ok());
    }

    #[test]
    fn config_parse_forms() {
        let kv = ProblemConfig::parse("d = 100\ns = 5\neps = 1.0\ngamma = 2\n").unwrap();
        assert_eq!(kv.d, 100);
        assert_eq!(kv.c, DEFAULT_C);
        let js =
            ProblemConfig::parse(r#"{"d":100,"s":5,"eps":1.0,"gamma":2.0,"c":0.005}"#).unwrap();
        assert_eq!(js.c, 0.005);
        assert!(ProblemConfig::parse("d = 100").is_err());
        assert!(ProblemConfig::parse("bogus = 1").is_err());
    }

    #[test]
    fn regime_boundary() {
        let dense = ProblemConfig::with_default_c(100, 20, 1.0, 1.0).unwrap();
        assert_eq!(regime(&dense), Regime::Dense); // 400 = 400 resolves dense
        let sparse = ProblemConfig::with_default_c(100, 5, 1.0, 1.0).unwrap();
        assert_eq!(regime(&sparse), Regime::Sparse);
        let tiny = ProblemConfig::with_default_c(4, 4, 1.0, 1.0).unwrap();
        assert_eq!(regime(&tiny), Regime::Dense);
    }

    #[test]
    fn functional_values() {
        let zero = ThetaVector::zeros(7);
        assert_eq!(n_gamma(&zero, 0.7).unwrap(), 0.0);
        let ones = ThetaVector::new(vec![1.0, 1.0, 1.0, 1.0]);
        assert!((n_gamma(&ones, 2.0).unwrap() - 2.0).abs() < 1e-15);
        let v = ThetaVector::new(vec![3.0, -4.0, 0.0]);
        assert!((n_gamma(&v, 1.0).unwrap() - 7.0).abs() < 1e-15);
        let w = ThetaVector::new(vec![2.0, 0.0]);
        assert!((big_n_gamma(&w, 3.0).unwrap() - 8.0).abs() < 1e-15);
        let ones_d = ThetaVector::new(vec![1.0; 13]);
        assert!((big_n_gamma(&ones_d, 0.37).unwrap() - 13.0).abs() < 1e-12);
        assert!(n_gamma(&w, 0.0).is_err());
        assert!(big_n_gamma(&w, -1.0).is_err());
    }

    #[test]
    fn norm_is_root_of_functional() {
        let mut stream = Stream::new(99);
        for _ in 0..1000 {
            let gamma = 1.0 + 3.0 * stream.uniform();
            let theta = ThetaVector::new(stream.normals(8));
            let a = n_gamma(&theta, gamma).unwrap();
            let b = big_n_gamma(&theta, gamma).unwrap().powf(1.0 / gamma);
            // identical code path up to the final root: allow 4 ulps
            assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs().max(1.0));
        }
    }

    #[test]
    fn triangle_inequality_for_norms() {
        let mut stream = Stream::new(7);
        for _ in 0..200 {
            let gamma = 1.0 + 4.0 * stream.uniform();
            let a = stream.normals(10);
            let b = stream.normals(10);
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let na = n_gamma(&ThetaVector::new(a), gamma).unwrap();
            let nb = n_gamma(&ThetaVector::new(b), gamma).unwrap();
            let ns = n_gamma(&ThetaVector::new(sum), gamma).unwrap();
            assert!(ns <= na + nb + 1e-12);
        }
    }

    #[test]
    fn simulation_determinism_and_noise() {
        let theta = ThetaVector::new(vec![1.0, -2.0, 0.5]);
        let a = simulate_observations(&theta, 0.3, 42);
        let b = simulate_observations(&theta, 0.3, 42);
        assert_eq!(a, b);
        let c = simulate_observations(&theta, 0.3, 43);
        let differing = a.iter().zip(&c).filter(|(x, y)| x != y).count();
        assert_eq!(differing, 3);

        // noiseless limit
        let y = simulate_observations(&theta, 1e-12, 1);
        for (yi, ti) in y.iter().zip(theta.values()) {
            assert!((yi - ti).abs() < 1e-10);
        }
    }

    #[test]
    fn simulation_law_of_large_numbers() {
        let d = 100_000;
        let y = simulate_observations(&ThetaVector::zeros(d), 1.0, 2024);
        let mean = y.iter().sum::<f64>() / d as f64;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (d as f64 - 1.0);
        assert!(mean.abs() < 4.0 / (d as f64).sqrt());
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn distinct_seeds_decorrelate() {
        let d = 1000;
        let a = simulate_observations(&ThetaVector::zeros(d), 1.0, 5);
        let b = simulate_observations(&ThetaVector::zeros(d), 1.0, 6);
        let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        assert!(differing as f64 >= 0.95 * d as f64);
    }

    #[test]
    fn theta_file_roundtrip_and_errors() {
        let dir = std::env::temp_dir().join("ngamma-model-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("theta.txt");
        let theta = ThetaVector::new(vec![1.5, 0.0, -2.25e-3]);
        theta.write_to(&path).unwrap();
        let back = ThetaVector::read_from(&path).unwrap();
        assert_eq!(theta, back);

        let bad = dir.join("bad.txt");
        std::fs::write(&bad, "1.0\nnot-a-number\n3.0\n").unwrap();
        match ThetaVector::read_from(&bad) {
            Err(Error::ParseAt { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ParseAt, got {other:?}"),
        }
    }

    #[test]
    fn sparsity_class_check() {
        let cfg = ProblemConfig::with_default_c(5, 2, 1.0, 1.0).unwrap();
        assert!(ThetaVector::new(vec![0.0, 1.0, 0.0, -1.0, 0.0]).in_class(&cfg));
        assert!(!ThetaVector::new(vec![1.0, 1.0, 1.0, 0.0, 0.0]).in_class(&cfg));
        assert!(!ThetaVector::new(vec![0.0; 4]).in_class(&cfg)); // wrong length
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn norm_functional_consistency(
                values in proptest::collection::vec(-10.0f64..10.0, 1..12),
                gamma in 1.0f64..5.0,
            ) {
                let theta = ThetaVector::new(values);
                let a = n_gamma(&theta, gamma).unwrap();
                let b = big_n_gamma(&theta, gamma).unwrap().powf(1.0 / gamma);
                prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs().max(1.0));
            }

            #[test]
            fn triangle_inequality(
                a in proptest::collection::vec(-5.0f64..5.0, 8),
                b in proptest::collection::vec(-5.0f64..5.0, 8),
                gamma in 1.0f64..4.0,
            ) {
                let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
                let na = n_gamma(&ThetaVector::new(a), gamma).unwrap();
                let nb = n_gamma(&ThetaVector::new(b), gamma).unwrap();
                let ns = n_gamma(&ThetaVector::new(sum), gamma).unwrap();
                prop_assert!(ns <= na + nb + 1e-12);
            }
        }
    }
}
