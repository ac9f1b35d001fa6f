//! The three estimators of `N_gamma(theta)` and the regime-based selector.
//!
//! * [`estimate_sparse`]: deterministic thresholding with exact centering,
//!   for the sparse zone `s^2 < 4d`.
//! * [`estimate_dense`]: the blockwise polynomial-approximation estimator for
//!   the dense zone. The sample is duplicated into two independent copies;
//!   one copy selects a block by magnitude, the other feeds an unbiased
//!   Hermite-polynomial estimate of the block's approximating polynomial.
//!   Blocks grow exponentially in scale so the sharp logarithmic factor in
//!   the risk survives across the whole dense range of `s`.
//! * [`estimate_even`]: exactly unbiased sample-cloning estimator of
//!   `sum_i theta_i^gamma` for integer `gamma` (for even `gamma` this is
//!   `N_gamma`), the better choice in the dense zone when available.
//!
//! All randomized estimators take an explicit seed and derive their noise
//! from sub-streams keyed by `(seed, operation)`, so the dense and even
//! estimators applied to the same data are mutually independent and every
//! result is reproducible bit for bit.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::approx::{best_poly_approx, PolyApprox};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::model::{regime, stream_ids, ProblemConfig, Regime};
use crate::rng::Stream;
use crate::special::alpha_gamma;

/// Remez tolerance used for the estimator-internal approximations.
const POLY_TOL: f64 = 1e-9;

/// Which estimator produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorId {
    DenseBlock,
    EvenClone,
    SparseThreshold,
}

impl std::fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorId::DenseBlock => write!(f, "dense"),
            EstimatorId::EvenClone => write!(f, "even"),
            EstimatorId::SparseThreshold => write!(f, "sparse"),
        }
    }
}

/// A point estimate with diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimator_id: EstimatorId,
    /// Estimate of `N_gamma(theta)` (of `sum theta_i^gamma` for the cloning
    /// estimator with odd integer `gamma`).
    pub value: f64,
    /// `|value|^{1/gamma}`, present when `gamma >= 1` and the norm was
    /// requested; for `gamma < 1` the functional itself plays that role.
    pub norm_value: Option<f64>,
    pub seed: u64,
    /// Diagnostic counters (per-block term counts, threshold crossings).
    pub aux: BTreeMap<String, f64>,
}

impl EstimateResult {
    /// The estimate of `n_gamma`: the functional for `gamma <= 1`, the norm
    /// for `gamma > 1`.
    pub fn n_gamma_estimate(&self, gamma: f64) -> f64 {
        if gamma > 1.0 {
            self.norm_value
                .unwrap_or_else(|| self.value.abs().powf(1.0 / gamma))
        } else {
            self.value
        }
    }
}

/// The dense-zone block parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSchedule {
    /// Noise level after duplication: `sigma = sqrt(2) eps`.
    pub sigma: f64,
    pub c: f64,
    /// Largest block index; blocks run `l = 0..=levels`.
    pub levels: usize,
    /// Half-degrees `K_l = max(1, ceil(4^l c log(s^2/d)))`.
    pub half_degrees: Vec<usize>,
    /// Scale parameters `M_l = 2^{l+1} sigma sqrt(2 log(s^2/d))`.
    pub scales: Vec<f64>,
    /// Thresholds `t_l = 2^l sqrt(2 log(s^2/d))` (with `t_{-1} = 0`).
    pub thresholds: Vec<f64>,
}

/// Computes the dense-zone schedule. Natural logarithms throughout; requires
/// `s^2 >= 4d` so that `log(s^2/d) >= log 4 > 0`.
pub fn block_schedule(cfg: &ProblemConfig) -> Result<BlockSchedule> {
    require_regime(cfg, Regime::Dense, "block_schedule")?;
    let log_ratio = ((cfg.s * cfg.s) as f64 / cfg.d as f64).ln();
    let sigma = std::f64::consts::SQRT_2 * cfg.eps;
    // smallest L with 2^L >= 3 sqrt(log d / log(s^2/d))
    let target = 3.0 * ((cfg.d as f64).ln() / log_ratio).sqrt();
    let mut levels = 0usize;
    while ((1u64 << levels) as f64) < target {
        levels += 1;
    }
    let root = (2.0 * log_ratio).sqrt();
    let mut half_degrees = Vec::with_capacity(levels + 1);
    let mut scales = Vec::with_capacity(levels + 1);
    let mut thresholds = Vec::with_capacity(levels + 1);
    for l in 0..=levels {
        let four_l = 4.0f64.powi(l as i32);
        half_degrees.push((four_l * cfg.c * log_ratio).ceil().max(1.0) as usize);
        scales.push(2.0f64.powi(l as i32 + 1) * sigma * root);
        thresholds.push(2.0f64.powi(l as i32) * root);
    }
    Ok(BlockSchedule {
        sigma,
        c: cfg.c,
        levels,
        half_degrees,
        scales,
        thresholds,
    })
}

fn require_regime(cfg: &ProblemConfig, expected: Regime, op: &'static str) -> Result<()> {
    let actual = regime(cfg);
    if actual != expected {
        return Err(Error::WrongRegime {
            op,
            expected: match expected {
                Regime::Dense => "dense",
                Regime::Sparse => "sparse",
            },
            actual: match actual {
                Regime::Dense => "dense",
                Regime::Sparse => "sparse",
            },
            d: cfg.d,
            s: cfg.s,
        });
    }
    Ok(())
}

/// Duplicates `y` into two independent samples `(y + z, y - z)` with
/// `z ~ N(0, eps^2)` i.i.d.; each output coordinate is `N(theta_i, 2 eps^2)`.
pub fn duplicate_sample(y: &[f64], eps: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut stream = Stream::from_key(&[seed, stream_ids::DUPLICATE]);
    let mut first = Vec::with_capacity(y.len());
    let mut second = Vec::with_capacity(y.len());
    for &yi in y {
        let z = eps * stream.normal();
        first.push(yi + z);
        second.push(yi - z);
    }
    (first, second)
}

/// Clones `y` into `gamma` mutually independent samples of variance
/// `gamma eps^2`: column `m` is `y_i + sqrt(gamma) (g_{i,m} - mean_m g_{i,m})`
/// with `g ~ N(0, eps^2)`. For `gamma = 1` the correction vanishes exactly.
pub fn clone_sample(y: &[f64], eps: f64, gamma: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if gamma == 0 {
        return Err(Error::InvalidParameter(
            "cloning requires gamma >= 1".into(),
        ));
    }
    let mut stream = Stream::from_key(&[seed, stream_ids::CLONE]);
    let root = (gamma as f64).sqrt();
    let mut columns = vec![Vec::with_capacity(y.len()); gamma];
    let mut draws = vec![0.0; gamma];
    for &yi in y {
        let mut mean = 0.0;
        for g in draws.iter_mut() {
            *g = eps * stream.normal();
            mean += *g;
        }
        mean /= gamma as f64;
        for (column, g) in columns.iter_mut().zip(&draws) {
            column.push(yi + root * (g - mean));
        }
    }
    Ok(columns)
}

type PolyCache = RwLock<HashMap<(u64, usize), Arc<PolyApprox>>>;

/// Coefficient cache for the block polynomials, keyed by `(gamma, K)`.
/// Reads dominate; a racing construction of the same entry is idempotent.
static POLY_CACHE: Lazy<PolyCache> = Lazy::new(|| RwLock::new(HashMap::new()));

pub(crate) fn cached_poly(gamma: f64, k: usize) -> Result<Arc<PolyApprox>> {
    let key = (gamma.to_bits(), k);
    if let Some(hit) = POLY_CACHE.read().expect("poly cache lock").get(&key) {
        return Ok(hit.clone());
    }
    let poly = Arc::new(best_poly_approx(gamma, k, POLY_TOL)?);
    POLY_CACHE
        .write()
        .expect("poly cache lock")
        .insert(key, poly.clone());
    Ok(poly)
}

/// One block's Hermite estimator
/// `P_hat(u) = sum_{k=1}^K sigma^{2k} a_{gamma,2k} M^{gamma-2k} H_{2k}(u/sigma)`.
/// The constant term `a_{gamma,0}` is deliberately absent, matching the
/// blockwise estimator's definition. The products are precomputed in
/// extended precision; so is the evaluation, because the weights inherit
/// the `6^K`-scale alternating growth of the coefficients.
pub struct BlockPoly {
    /// `sigma^{2k} a_{gamma,2k} M^{gamma-2k}` for `k = 1..=K`.
    weights: Vec<Dd>,
    sigma: f64,
}

impl BlockPoly {
    pub fn new(poly: &PolyApprox, sigma: f64, scale: f64) -> BlockPoly {
        let sigma_dd = Dd::from_f64(sigma);
        let scale_dd = Dd::from_f64(scale);
        let gamma = poly.gamma();
        let weights = (1..=poly.half_degree())
            .map(|k| {
                sigma_dd.powi(2 * k as i32)
                    * poly.coeffs()[k]
                    * scale_dd.powf(Dd::from_f64(gamma - 2.0 * k as f64))
            })
            .collect();
        BlockPoly { weights, sigma }
    }

    /// `P_hat(u)`, accumulated in extended precision and rounded once.
    pub fn eval(&self, u: f64) -> f64 {
        let x = Dd::from_f64(u / self.sigma);
        let mut acc = Dd::ZERO;
        let mut h_prev = Dd::ONE; // H_0
        let mut h_cur = x; // H_1
        let mut degree = 1usize;
        for w in &self.weights {
            // advance the recurrence two degrees to the next even index
            for _ in 0..2 {
                let next = x * h_cur - Dd::from_f64(degree as f64) * h_prev;
                h_prev = h_cur;
                h_cur = next;
                degree += 1;
            }
            acc += *w * h_prev; // h_prev now holds H_{2k}
        }
        acc.to_f64()
    }
}

/// The per-coordinate dense-zone kernel `xi_gamma(u, v)`: the block is
/// chosen by `|v|`, the value comes from `u`. The intervals
/// `(sigma t_{l-1}, sigma t_l]` and `(sigma t_L, inf)` partition the line,
/// with `v = 0` falling into block 0.
pub(crate) fn xi_gamma(
    u: f64,
    v: f64,
    gamma: f64,
    schedule: &BlockSchedule,
    blocks: &[BlockPoly],
) -> (f64, usize) {
    let av = v.abs();
    let sigma = schedule.sigma;
    for (l, &t) in schedule.thresholds.iter().enumerate() {
        if av <= sigma * t {
            return (blocks[l].eval(u), l);
        }
    }
    (u.abs().powf(gamma), schedule.levels + 1)
}

/// Deterministic fixed-order pairwise sum; independent of any parallel
/// schedule because the reduction tree depends only on the index order.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Dense-zone blockwise estimator of `N_gamma(theta)`; requires
/// `s^2 >= 4d`. Randomized through the duplication device.
pub fn estimate_dense(y: &[f64], cfg: &ProblemConfig, seed: u64) -> Result<EstimateResult> {
    require_regime(cfg, Regime::Dense, "estimate_dense")?;
    check_data(y, cfg)?;
    let schedule = block_schedule(cfg)?;
    let blocks = build_blocks(cfg.gamma, &schedule)?;
    let (u_sample, v_sample) = duplicate_sample(y, cfg.eps, seed);
    let mut terms = Vec::with_capacity(y.len());
    let mut block_counts = vec![0usize; schedule.levels + 2];
    for (u, v) in u_sample.iter().zip(&v_sample) {
        let (term, block) = xi_gamma(*u, *v, cfg.gamma, &schedule, &blocks);
        terms.push(term);
        block_counts[block] += 1;
    }
    let mut aux = BTreeMap::new();
    for (l, count) in block_counts.iter().enumerate() {
        let key = if l <= schedule.levels {
            format!("block_{l}_count")
        } else {
            "plugin_count".to_string()
        };
        aux.insert(key, *count as f64);
    }
    Ok(EstimateResult {
        estimator_id: EstimatorId::DenseBlock,
        value: pairwise_sum(&terms),
        norm_value: None,
        seed,
        aux,
    })
}

pub(crate) fn build_blocks(gamma: f64, schedule: &BlockSchedule) -> Result<Vec<BlockPoly>> {
    schedule
        .half_degrees
        .iter()
        .zip(&schedule.scales)
        .map(|(&k, &m)| {
            let poly = cached_poly(gamma, k)?;
            Ok(BlockPoly::new(&poly, schedule.sigma, m))
        })
        .collect()
}

/// Cloning estimator of `sum_i theta_i^gamma` for positive integer `gamma`
/// (equal to `N_gamma(theta)` when `gamma` is even). Exactly unbiased.
pub fn estimate_even(y: &[f64], cfg: &ProblemConfig, seed: u64) -> Result<EstimateResult> {
    check_data(y, cfg)?;
    if cfg.gamma.fract() != 0.0 || cfg.gamma < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "cloning estimator needs a positive integer gamma (got {})",
            cfg.gamma
        )));
    }
    let gamma = cfg.gamma as usize;
    let columns = clone_sample(y, cfg.eps, gamma, seed)?;
    let terms: Vec<f64> = (0..y.len())
        .map(|i| columns.iter().map(|column| column[i]).product())
        .collect();
    let mut aux = BTreeMap::new();
    aux.insert("clones".to_string(), gamma as f64);
    Ok(EstimateResult {
        estimator_id: EstimatorId::EvenClone,
        value: pairwise_sum(&terms),
        norm_value: None,
        seed,
        aux,
    })
}

/// Sparse-zone thresholding estimator
/// `sum_i (|y_i|^gamma - eps^gamma alpha_gamma) 1_{y_i^2 > 2 eps^2 log(1+d/s^2)}`.
/// Deterministic; requires `s^2 < 4d`.
pub fn estimate_sparse(y: &[f64], cfg: &ProblemConfig) -> Result<EstimateResult> {
    require_regime(cfg, Regime::Sparse, "estimate_sparse")?;
    check_data(y, cfg)?;
    let alpha = alpha_gamma(cfg.gamma, cfg.d, cfg.s)?;
    let threshold_sq =
        2.0 * cfg.eps * cfg.eps * (1.0 + cfg.d as f64 / (cfg.s * cfg.s) as f64).ln();
    let centering = cfg.eps.powf(cfg.gamma) * alpha;
    let mut terms = Vec::new();
    for &yi in y {
        if yi * yi > threshold_sq {
            terms.push(yi.abs().powf(cfg.gamma) - centering);
        }
    }
    let mut aux = BTreeMap::new();
    aux.insert("threshold_crossings".to_string(), terms.len() as f64);
    aux.insert("alpha_gamma".to_string(), alpha);
    Ok(EstimateResult {
        estimator_id: EstimatorId::SparseThreshold,
        value: pairwise_sum(&terms),
        norm_value: None,
        seed: 0,
        aux,
    })
}

/// Regime-based selector: sparse zone takes the thresholding estimator; the
/// dense zone takes the cloning estimator when `gamma` is an even integer
/// (strictly better rate there) and the block estimator otherwise.
pub fn estimate_auto(y: &[f64], cfg: &ProblemConfig, seed: u64) -> Result<EstimateResult> {
    match regime(cfg) {
        Regime::Sparse => estimate_sparse(y, cfg),
        Regime::Dense => {
            if cfg.gamma.fract() == 0.0 && (cfg.gamma as u64).is_multiple_of(2) {
                estimate_even(y, cfg, seed)
            } else {
                estimate_dense(y, cfg, seed)
            }
        }
    }
}

/// Norm estimator: runs the selector and sets `norm_value = |value|^{1/gamma}`
/// for `gamma >= 1`. For `gamma < 1` the functional itself is the `n_gamma`
/// quantity and `norm_value` stays empty.
pub fn estimate_norm(y: &[f64], cfg: &ProblemConfig, seed: u64) -> Result<EstimateResult> {
    let mut result = estimate_auto(y, cfg, seed)?;
    if cfg.gamma >= 1.0 {
        result.norm_value = Some(result.value.abs().powf(1.0 / cfg.gamma));
    }
    Ok(result)
}

fn check_data(y: &[f64], cfg: &ProblemConfig) -> Result<()> {
    if y.len() != cfg.d {
        return Err(Error::InvalidParameter(format!(
            "data length {} does not match d = {}",
            y.len(),
            cfg.d
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::expect_normal;
    use crate::model::{simulate_observations, ThetaVector};
    use crate::special;

    fn cfg(d: usize, s: usize, eps: f64, gamma: f64) -> ProblemConfig {
        ProblemConfig::with_default_c(d, s, eps, gamma).unwrap()
    }

    #[test]
    fn duplicate_reconstructs_and_decorrelates() {
        let theta: Vec<f64> = (0..100_000).map(|i| (i % 7) as f64 - 3.0).collect();
        let y = simulate_observations(&ThetaVector::new(theta.clone()), 1.0, 55);
        let (y1, y2) = duplicate_sample(&y, 1.0, 11);
        for ((a, b), orig) in y1.iter().zip(&y2).zip(&y) {
            // reconstruction is exact up to the one rounding in y +- z
            let tol = f64::EPSILON * (a.abs() + b.abs()).max(1.0);
            assert!(((a + b) / 2.0 - orig).abs() <= tol);
        }
        // against the true means, each copy has variance 2 eps^2 and the
        // two copies are uncorrelated (the shared observation noise is
        // cancelled by the duplication noise)
        let n = y.len() as f64;
        let var1 = y1
            .iter()
            .zip(&theta)
            .map(|(a, t)| (a - t) * (a - t))
            .sum::<f64>()
            / n;
        assert!((var1 - 2.0).abs() < 0.05, "duplicate variance {var1}");
        let cov = y1
            .iter()
            .zip(&y2)
            .zip(&theta)
            .map(|((a, b), t)| (a - t) * (b - t))
            .sum::<f64>()
            / n;
        assert!(cov.abs() < 0.03, "duplicate covariance {cov}");
        // bit-identical rerun
        let (z1, z2) = duplicate_sample(&y, 1.0, 11);
        assert_eq!(y1, z1);
        assert_eq!(y2, z2);
    }

    #[test]
    fn clone_identity_and_moments() {
        let y = vec![0.5, -1.0, 2.0];
        let cols = clone_sample(&y, 0.7, 1, 3).unwrap();
        assert_eq!(cols.len(), 1);
        assert_eq!(cols[0], y);
        assert!(clone_sample(&y, 0.7, 0, 3).is_err());

        // the zero-covariance identity needs genuine observations: the
        // shared noise of y cancels the negative cloning correction
        let d = 100_000;
        let y = simulate_observations(&ThetaVector::zeros(d), 1.0, 81);
        let cols = clone_sample(&y, 1.0, 2, 5).unwrap();
        let cov = cols[0]
            .iter()
            .zip(&cols[1])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / d as f64;
        assert!(cov.abs() < 0.02, "clone covariance {cov}");

        let cols = clone_sample(&y, 1.0, 4, 6).unwrap();
        for column in &cols {
            let var = column.iter().map(|v| v * v).sum::<f64>() / d as f64;
            assert!((var - 4.0).abs() < 0.2, "clone variance {var}");
        }
    }

    #[test]
    fn schedule_examples() {
        // s = d: log(s^2/d) = log d, 2^L >= 3 gives L = 2
        let schedule = block_schedule(&cfg(100, 100, 1.0, 1.0)).unwrap();
        assert_eq!(schedule.levels, 2);
        // d=100, s=20: t_0 = sqrt(2 ln 4)
        let schedule = block_schedule(&cfg(100, 20, 1.0, 1.0)).unwrap();
        assert!((schedule.thresholds[0] - 1.6651092223153954).abs() < 1e-12);
        assert_eq!(schedule.half_degrees[0], 1); // ceil(0.01 ln 4) floored at 1
        for w in schedule.thresholds.windows(2) {
            assert!(w[1] > w[0]);
        }
        for w in schedule.scales.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(matches!(
            block_schedule(&cfg(100, 5, 1.0, 1.0)),
            Err(Error::WrongRegime { .. })
        ));
    }

    #[test]
    fn xi_partition_is_total_and_unique() {
        let config = cfg(64, 64, 1.0, 1.5);
        let schedule = block_schedule(&config).unwrap();
        let blocks = build_blocks(config.gamma, &schedule).unwrap();
        let sigma = schedule.sigma;
        let t = &schedule.thresholds;
        let last = schedule.levels;
        // v = 0 lands in block 0; boundaries close the left block
        assert_eq!(xi_gamma(0.3, 0.0, 1.5, &schedule, &blocks).1, 0);
        assert_eq!(xi_gamma(0.3, sigma * t[0], 1.5, &schedule, &blocks).1, 0);
        assert_eq!(xi_gamma(0.3, -(sigma * t[0]), 1.5, &schedule, &blocks).1, 0);
        let just_above = sigma * t[0] * (1.0 + 1e-12);
        assert_eq!(xi_gamma(0.3, just_above, 1.5, &schedule, &blocks).1, 1);
        assert_eq!(
            xi_gamma(0.3, sigma * t[last] * 1.01, 1.5, &schedule, &blocks).1,
            last + 1,
        );
        // plug-in branch returns |u|^gamma
        let (plug, _) = xi_gamma(-2.0, sigma * t[last] * 1.01, 1.5, &schedule, &blocks);
        assert!((plug - 2.0f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn block_poly_mean_identity() {
        // E P_hat(X) = sum_{k>=1} a_{gamma,2k} M^{gamma-2k} theta^{2k}
        // for X ~ N(theta, sigma^2), by quadrature.
        let gamma = 1.5;
        let sigma = 0.8;
        for &k in &[1usize, 3, 6] {
            let poly = cached_poly(gamma, k).unwrap();
            let scale = 2.5;
            let block = BlockPoly::new(&poly, sigma, scale);
            for &theta in &[0.3, 1.0, 2.2] {
                let quad = expect_normal(|x| block.eval(x), theta, sigma);
                let mut closed = 0.0;
                for kk in 1..=k {
                    closed += poly.coeffs()[kk].to_f64()
                        * scale.powf(gamma - 2.0 * kk as f64)
                        * theta.powi(2 * kk as i32);
                }
                assert!(
                    (quad - closed).abs() <= 1e-6 * closed.abs().max(1e-12),
                    "K={k} theta={theta}: {quad} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn block_bias_scales_like_m_over_k_to_gamma() {
        // |E P_hat(X) - |theta|^gamma| <= C (M/K)^gamma on |theta| <= M:
        // the bias scaled by (K/M)^gamma stays flat in K and theta. The
        // mean is closed-form (a_0 M^gamma is deliberately not part of the
        // estimator, so it shows up in the bias).
        let gamma = 1.5;
        let scale = 4.0;
        let mut all_scaled: Vec<f64> = Vec::new();
        for &k in &[4usize, 8, 16] {
            let poly = cached_poly(gamma, k).unwrap();
            for i in 0..=100 {
                let theta = scale * i as f64 / 100.0;
                let mut mean = 0.0;
                for kk in 1..=k {
                    mean += poly.coeffs()[kk].to_f64()
                        * scale.powf(gamma - 2.0 * kk as f64)
                        * theta.powi(2 * kk as i32);
                }
                let bias = (mean - theta.powf(gamma)).abs();
                all_scaled.push(bias * (k as f64 / scale).powf(gamma));
            }
        }
        let mut sorted = all_scaled.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        let max = *sorted.last().unwrap();
        assert!(
            max <= 10.0 * median,
            "scaled bias spread: max {max} vs median {median}"
        );
    }

    #[test]
    fn even_estimator_identity_at_gamma_one() {
        let config = cfg(50, 50, 1.0, 1.0);
        let y = simulate_observations(&ThetaVector::zeros(50), 1.0, 9);
        let result = estimate_even(&y, &config, 1).unwrap();
        assert_eq!(result.value, pairwise_sum(&y));
    }

    #[test]
    fn even_estimator_unbiased() {
        let theta: Vec<f64> = (0..20).map(|i| 0.2 * i as f64 - 2.0).collect();
        let config = cfg(20, 20, 0.5, 2.0);
        let truth: f64 = theta.iter().map(|t| t * t).sum();
        let replicates = 4000;
        let mut errors = Vec::with_capacity(replicates);
        for rep in 0..replicates {
            let y =
                simulate_observations(&ThetaVector::new(theta.clone()), 0.5, 1000 + rep as u64);
            let est = estimate_even(&y, &config, 2000 + rep as u64).unwrap();
            errors.push(est.value - truth);
        }
        let mean = errors.iter().sum::<f64>() / replicates as f64;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
            / (replicates as f64 - 1.0);
        let se = (var / replicates as f64).sqrt();
        assert!(mean.abs() <= 3.0 * se, "bias {mean} vs se {se}");
    }

    #[test]
    fn even_estimator_rejects_fractional_gamma() {
        let config = cfg(10, 10, 1.0, 1.5);
        let y = vec![0.0; 10];
        assert!(matches!(
            estimate_even(&y, &config, 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn sparse_estimator_empty_sum_and_regime() {
        let config = cfg(100, 5, 1.0, 1.0);
        let y = vec![0.01; 100]; // all far below threshold
        let result = estimate_sparse(&y, &config).unwrap();
        assert_eq!(result.value, 0.0);
        assert_eq!(result.aux["threshold_crossings"], 0.0);
        assert!(matches!(
            estimate_sparse(&vec![0.0; 100], &cfg(100, 20, 1.0, 1.0)),
            Err(Error::WrongRegime { .. })
        ));
    }

    #[test]
    fn sparse_estimator_centered_at_zero() {
        let config = cfg(400, 10, 1.0, 1.0);
        let replicates = 2000;
        let mut values = Vec::with_capacity(replicates);
        for rep in 0..replicates {
            let y = simulate_observations(&ThetaVector::zeros(400), 1.0, 777 + rep as u64);
            values.push(estimate_sparse(&y, &config).unwrap().value);
        }
        let mean = values.iter().sum::<f64>() / replicates as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (replicates as f64 - 1.0);
        let se = (var / replicates as f64).sqrt();
        assert!(mean.abs() <= 3.0 * se, "mean {mean} vs se {se}");
    }

    #[test]
    fn dense_estimator_mean_at_zero_signal() {
        // At theta = 0 the blocks are exactly mean-zero (Hermite means
        // vanish at zero shift), so E xi = sigma^g E|xi|^g P(|xi| > t_L);
        // with t_L = 13.3 that is numerically zero. MC mean within 3 SE.
        let config = cfg(400, 40, 1.0, 1.0);
        let schedule = block_schedule(&config).unwrap();
        let plug_mean = schedule.sigma
            * special::abs_moment(1.0)
            * special::gaussian_two_sided_tail(schedule.thresholds[schedule.levels]);
        let predicted = 400.0 * plug_mean;
        let replicates = 2000;
        let values: Vec<f64> = (0..replicates)
            .map(|rep| {
                let y = simulate_observations(&ThetaVector::zeros(400), 1.0, 300 + rep as u64);
                estimate_dense(&y, &config, 400 + rep as u64).unwrap().value
            })
            .collect();
        let mean = values.iter().sum::<f64>() / replicates as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (replicates as f64 - 1.0);
        let se = (var / replicates as f64).sqrt();
        assert!(
            (mean - predicted).abs() <= 3.0 * se,
            "mean {mean} vs predicted {predicted} (se {se})"
        );
    }

    #[test]
    fn sparse_estimator_single_spike_oracle() {
        // one spike at 10 eps: MC mean against the one-coordinate
        // quadrature oracle E[(|X| - eps alpha) 1_{X^2 > tau^2}]
        let config = cfg(100, 1, 1.0, 1.0);
        let mut theta = vec![0.0; 100];
        theta[0] = 10.0;
        let alpha = special::alpha_gamma(1.0, 100, 1).unwrap();
        let tau = special::sparse_threshold(100, 1);
        let spike_mean = expect_normal(
            |x| {
                if x * x > tau * tau {
                    x.abs() - alpha
                } else {
                    0.0
                }
            },
            10.0,
            1.0,
        );
        // the 99 null coordinates contribute zero mean by centering
        let replicates = 4000;
        let values: Vec<f64> = (0..replicates)
            .map(|rep| {
                let y =
                    simulate_observations(&ThetaVector::new(theta.clone()), 1.0, 600 + rep as u64);
                estimate_sparse(&y, &config).unwrap().value
            })
            .collect();
        let mean = values.iter().sum::<f64>() / replicates as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (replicates as f64 - 1.0);
        let se = (var / replicates as f64).sqrt();
        assert!(
            (mean - spike_mean).abs() <= 3.0 * se,
            "mean {mean} vs oracle {spike_mean} (se {se})"
        );
    }

    #[test]
    fn selector_rules() {
        let y100 = vec![0.0; 100];
        let auto = estimate_auto(&y100, &cfg(100, 5, 1.0, 1.0), 1).unwrap();
        assert_eq!(auto.estimator_id, EstimatorId::SparseThreshold);
        let auto = estimate_auto(&y100, &cfg(100, 20, 1.0, 2.0), 1).unwrap();
        assert_eq!(auto.estimator_id, EstimatorId::EvenClone);
        let auto = estimate_auto(&y100, &cfg(100, 20, 1.0, 1.5), 1).unwrap();
        assert_eq!(auto.estimator_id, EstimatorId::DenseBlock);
    }

    #[test]
    fn norm_semantics() {
        let config = cfg(100, 20, 1.0, 2.0);
        let y = simulate_observations(&ThetaVector::new(vec![1.0; 100]), 1.0, 4);
        let result = estimate_norm(&y, &config, 5).unwrap();
        let norm = result.norm_value.unwrap();
        assert_eq!(norm, result.value.abs().sqrt());
        assert_eq!(result.n_gamma_estimate(2.0), norm);

        // gamma = 1: identity power
        let config = cfg(100, 20, 1.0, 1.0);
        let result = estimate_norm(&y, &config, 5).unwrap();
        assert_eq!(result.norm_value.unwrap(), result.value.abs());
        assert_eq!(result.n_gamma_estimate(1.0), result.value);

        // gamma < 1: functional convention, no separate norm value
        let config = cfg(100, 20, 1.0, 0.5);
        let result = estimate_norm(&y, &config, 5).unwrap();
        assert!(result.norm_value.is_none());
        assert_eq!(result.n_gamma_estimate(0.5), result.value);
    }

    #[test]
    fn determinism_of_estimates() {
        let config = cfg(64, 16, 1.0, 1.5);
        let y = simulate_observations(&ThetaVector::zeros(64), 1.0, 10);
        let a = estimate_auto(&y, &config, 33).unwrap();
        let b = estimate_auto(&y, &config, 33).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.aux, b.aux);
        let dense_cfg = cfg(64, 64, 1.0, 1.5);
        let a = estimate_dense(&y, &dense_cfg, 33).unwrap();
        let b = estimate_dense(&y, &dense_cfg, 33).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn pairwise_sum_basics() {
        let values: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.01).collect();
        let naive: f64 = values.iter().sum();
        assert!((pairwise_sum(&values) - naive).abs() < 1e-9);
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[4.5]), 4.5);
    }
}
