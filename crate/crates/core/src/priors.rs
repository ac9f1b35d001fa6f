//! Moment-matching prior pairs and their indistinguishability certificates.
//!
//! The lower-bound construction rests on two symmetric probability measures
//! on `[-M, M]` that share all moments up to order `K` yet differ in the
//! `|t|^gamma`-mean by the largest possible amount, `2 M^gamma delta_{K,gamma}`.
//! Duality pins the optimal pair to the equioscillation set of the best
//! polynomial approximation: the extremal signed measure lives on the
//! alternation points with signs matching the residual. That turns the
//! construction into a small linear solve instead of a general LP, and ties
//! this module to [`crate::approx`]: the gap of the constructed pair must
//! reproduce the independently certified approximation error.
//!
//! Under the sparse Bernoulli lift (each coordinate nonzero with probability
//! `s/2d`, magnitude drawn from one of the measures), the chi-square
//! divergence between the two resulting mixtures stays below 1/4 whenever
//! `s^2 >= 4d` - that is the certificate that no test can tell the priors
//! apart, which is what forces the minimax rate.

use serde::Serialize;

use crate::approx::{alternation_set, best_poly_approx};
use crate::dd::{solve_linear, Dd};
use crate::error::{Error, Result};
use crate::model::{stream_ids, ThetaVector};
use crate::rng::Stream;
use crate::special::ln_gamma;

/// Remez tolerance for the underlying approximation.
const POLY_TOL: f64 = 1e-9;

/// A certified moment-matching pair `(mu0, mu1)` of symmetric probability
/// measures on `[-M, M]`.
#[derive(Clone, Debug, Serialize)]
pub struct MomentPrior {
    pub gamma: f64,
    /// Moment-matching order (an even integer; the polynomial degree).
    pub k: usize,
    /// Support scale `M`.
    pub m: f64,
    pub support0: Vec<f64>,
    pub weights0: Vec<f64>,
    pub support1: Vec<f64>,
    pub weights1: Vec<f64>,
    /// `int |t|^g d(mu1 - mu0) = 2 M^gamma delta_{K,gamma}`.
    pub gap: f64,
}

impl MomentPrior {
    /// Exact `l`-th moment of measure `side` as a finite weighted power sum
    /// in extended precision.
    pub fn moment(&self, side: MeasureSide, l: usize) -> f64 {
        let (support, weights) = self.side(side);
        let mut sum = Dd::ZERO;
        for (&x, &w) in support.iter().zip(weights) {
            sum += Dd::from_f64(w) * Dd::from_f64(x).powi(l as i32);
        }
        sum.to_f64()
    }

    pub fn side(&self, side: MeasureSide) -> (&[f64], &[f64]) {
        match side {
            MeasureSide::Null => (&self.support0, &self.weights0),
            MeasureSide::Separated => (&self.support1, &self.weights1),
        }
    }
}

/// Which of the two measures: `Null` is the small-`|t|^gamma`-mean side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureSide {
    Null,
    Separated,
}

/// Lower-bound prior parameters in the dense zone.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PriorConfig {
    /// `Lambda = sqrt(log(s^2/d))`.
    pub lambda: f64,
    /// Support scale `M = eps * Lambda`.
    pub m: f64,
    /// Moment-matching order: smallest even integer `>= (3/2) e log(s^2/d)`.
    pub k: usize,
}

/// Computes `(Lambda, M, K)`; requires the dense regime `s^2 >= 4d`.
pub fn prior_config(d: usize, s: usize, eps: f64) -> Result<PriorConfig> {
    if s == 0 || s > d {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= s <= d (got s = {s}, d = {d})"
        )));
    }
    if s * s < 4 * d {
        return Err(Error::WrongRegime {
            op: "prior_config",
            expected: "dense",
            actual: "sparse",
            d,
            s,
        });
    }
    let log_ratio = ((s * s) as f64 / d as f64).ln();
    let lambda = log_ratio.sqrt();
    let threshold = 1.5 * std::f64::consts::E * log_ratio;
    let mut k = threshold.ceil() as usize;
    if k % 2 == 1 {
        k += 1;
    }
    Ok(PriorConfig {
        lambda,
        m: eps * lambda,
        k,
    })
}

/// Constructs the extremal moment-matching pair for `f(x) = |x|^gamma`.
///
/// The alternation points `u_0 < ... < u_{m+1}` of the degree-`K` best
/// approximation (`m = K/2` in the `u = x^2` variable) carry the optimal
/// dual measure: positive masses `w_j` with the residual's signs, chosen to
/// annihilate all monomials up to degree `K` with total variation 2. That is
/// a linear system with `m + 2` unknowns; its positive part becomes the
/// separated measure and its negative part the null measure after
/// symmetrization to `±M sqrt(u_j)`.
pub fn matching_measures(gamma: f64, k: usize, m_scale: f64) -> Result<MomentPrior> {
    if k == 0 || !k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "moment-matching order K must be a positive even integer (got {k})"
        )));
    }
    if m_scale <= 0.0 || m_scale.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "scale M must be positive (got {m_scale})"
        )));
    }
    let half = k / 2;
    let poly = best_poly_approx(gamma, half, POLY_TOL)?;
    if poly.delta() == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delta_{{K,gamma}} = 0 for gamma = {gamma}, K = {k}: the measures degenerate"
        )));
    }
    let points = alternation_set(&poly)?;
    if points.len() != half + 2 {
        return Err(Error::PriorConstruction(format!(
            "expected {} alternation points, found {}",
            half + 2,
            points.len()
        )));
    }
    let signs: Vec<f64> = points
        .iter()
        .map(|&u| poly.residual_u(u).signum())
        .collect();

    // Annihilation system: sum_j sign_j w_j u_j^l = 0 for l = 0..=half,
    // total variation sum_j w_j = 2.
    let n = points.len();
    let mut matrix: Vec<Vec<Dd>> = Vec::with_capacity(n);
    let mut rhs = vec![Dd::ZERO; n];
    let u_dd: Vec<Dd> = points.iter().map(|&u| Dd::from_f64(u)).collect();
    let mut power = vec![Dd::ONE; n];
    for _l in 0..=half {
        let row: Vec<Dd> = power
            .iter()
            .zip(&signs)
            .map(|(p, &s)| *p * Dd::from_f64(s))
            .collect();
        matrix.push(row);
        for (p, u) in power.iter_mut().zip(&u_dd) {
            *p *= *u;
        }
    }
    matrix.push(vec![Dd::ONE; n]);
    rhs[n - 1] = Dd::from_f64(2.0);
    let masses = solve_linear(&mut matrix, &mut rhs).ok_or_else(|| {
        Error::PriorConstruction(format!(
            "alternation system is numerically singular for gamma = {gamma}, K = {k}; \
             try a different K"
        ))
    })?;
    if masses.iter().any(|w| w.to_f64() <= 0.0) {
        return Err(Error::PriorConstruction(format!(
            "negative dual mass for gamma = {gamma}, K = {k}; try a different K"
        )));
    }

    // Orientation: the separated side must carry the larger |t|^gamma mean.
    let mut signed_gap = Dd::ZERO;
    for ((&u, &sign), w) in points.iter().zip(&signs).zip(&masses) {
        let g = if u == 0.0 {
            Dd::ZERO
        } else {
            Dd::from_f64(u).powf(Dd::from_f64(gamma / 2.0))
        };
        signed_gap += Dd::from_f64(sign) * *w * g;
    }
    let flip = signed_gap.to_f64() < 0.0;

    let mut side0: Vec<(f64, f64)> = Vec::new();
    let mut side1: Vec<(f64, f64)> = Vec::new();
    for ((&u, &sign), w) in points.iter().zip(&signs).zip(&masses) {
        let positive = (sign > 0.0) != flip;
        let target = if positive { &mut side1 } else { &mut side0 };
        let x = m_scale * u.sqrt();
        let w = w.to_f64();
        if x == 0.0 {
            target.push((0.0, w));
        } else {
            target.push((-x, w / 2.0));
            target.push((x, w / 2.0));
        }
    }
    side0.sort_by(|a, b| a.0.total_cmp(&b.0));
    side1.sort_by(|a, b| a.0.total_cmp(&b.0));

    let gap = Dd::from_f64(m_scale).powf(Dd::from_f64(gamma)).to_f64()
        * signed_gap.abs().to_f64();
    let prior = MomentPrior {
        gamma,
        k,
        m: m_scale,
        support0: side0.iter().map(|e| e.0).collect(),
        weights0: side0.iter().map(|e| e.1).collect(),
        support1: side1.iter().map(|e| e.0).collect(),
        weights1: side1.iter().map(|e| e.1).collect(),
        gap,
    };
    certify(&prior, poly.delta())?;
    Ok(prior)
}

/// Verifies the three defining properties before a prior is released:
/// symmetry, moment matching to `1e-8 M^l`, and the gap identity
/// `gap = 2 M^gamma delta` to `1e-6` relative.
fn certify(prior: &MomentPrior, delta: f64) -> Result<()> {
    for side in [MeasureSide::Null, MeasureSide::Separated] {
        let (support, weights) = prior.side(side);
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::PriorCertification(format!(
                "total mass {total} differs from 1"
            )));
        }
        for (&x, &w) in support.iter().zip(weights) {
            if x != 0.0 {
                let mirrored = support
                    .iter()
                    .zip(weights)
                    .any(|(&y, &v)| y == -x && v == w);
                if !mirrored {
                    return Err(Error::PriorCertification(format!(
                        "support point {x} has no mirror image"
                    )));
                }
            }
        }
    }
    for l in 0..=prior.k {
        let diff =
            (prior.moment(MeasureSide::Null, l) - prior.moment(MeasureSide::Separated, l)).abs();
        let budget = 1e-8 * prior.m.powi(l as i32);
        if diff > budget {
            return Err(Error::PriorCertification(format!(
                "moment {l} mismatch {diff:.3e} exceeds {budget:.3e}"
            )));
        }
    }
    let want = 2.0 * prior.m.powf(prior.gamma) * delta;
    if ((prior.gap - want) / want).abs() > 1e-6 {
        return Err(Error::PriorCertification(format!(
            "gap {} differs from 2 M^gamma delta = {want}",
            prior.gap
        )));
    }
    Ok(())
}

/// Certified upper bound on the chi-square divergence between the two
/// `d`-coordinate mixtures, plus the per-coordinate series ingredient.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChiSquareBound {
    /// `exp((s^2/2d) * ingredient) - 1`.
    pub bound: f64,
    /// `sum_{k > K} Lambda^{2k} / k!`.
    pub ingredient: f64,
}

/// Evaluates the lower-bound proof's computable chi-square bound.
pub fn chi_square_bound(d: usize, s: usize, cfg: &PriorConfig) -> ChiSquareBound {
    let ingredient = lambda_series_tail(cfg.lambda, cfg.k);
    let scale = (s * s) as f64 / (2.0 * d as f64);
    ChiSquareBound {
        bound: (scale * ingredient).exp_m1(),
        ingredient,
    }
}

/// `sum_{k=K+1}^inf Lambda^{2k} / k!`, summed to relative `1e-15` with a
/// geometric remainder bound added once the term ratio drops below 1/2.
pub(crate) fn lambda_series_tail(lambda: f64, k: usize) -> f64 {
    let l2 = lambda * lambda;
    if l2 == 0.0 {
        return 0.0;
    }
    // first term Lambda^{2(K+1)}/(K+1)! via logs to dodge overflow
    let k1 = (k + 1) as f64;
    let mut term = ((k1 * l2.ln()) - ln_gamma(k1 + 1.0)).exp();
    let mut sum = term;
    let mut idx = k + 2;
    loop {
        let ratio = l2 / idx as f64;
        term *= ratio;
        sum += term;
        if ratio < 0.5 && term < 1e-15 * sum {
            // remainder <= term * ratio' / (1 - ratio') with decreasing ratio'
            sum += term * ratio / (1.0 - ratio);
            break;
        }
        idx += 1;
    }
    sum
}

/// Direct per-coordinate chi-square series
/// `sum_k (E_1(k) - E_0(k))^2 / k!` from the discrete measures, after
/// rescaling supports by `1/eps` (i.e. to `[-Lambda, Lambda]`). Serves as
/// the oracle for the ingredient of [`chi_square_bound`].
pub fn chi_square_exact_small(prior: &MomentPrior, cfg: &PriorConfig) -> f64 {
    let rescale = cfg.lambda / cfg.m;
    let scaled = |side: MeasureSide| -> (Vec<Dd>, Vec<Dd>) {
        let (support, weights) = prior.side(side);
        (
            support
                .iter()
                .map(|&x| Dd::from_f64(x) * Dd::from_f64(rescale))
                .collect(),
            weights.iter().map(|&w| Dd::from_f64(w)).collect(),
        )
    };
    let (x0, w0) = scaled(MeasureSide::Null);
    let (x1, w1) = scaled(MeasureSide::Separated);
    let mut pow0 = vec![Dd::ONE; x0.len()];
    let mut pow1 = vec![Dd::ONE; x1.len()];
    let mut inv_factorial = Dd::ONE;
    let mut sum = Dd::ZERO;
    let lambda2 = cfg.lambda * cfg.lambda;
    for k in 0..400usize {
        if k > 0 {
            inv_factorial = inv_factorial / Dd::from_f64(k as f64);
            for (p, x) in pow0.iter_mut().zip(&x0) {
                *p *= *x;
            }
            for (p, x) in pow1.iter_mut().zip(&x1) {
                *p *= *x;
            }
        }
        let e0: Dd = pow0
            .iter()
            .zip(&w0)
            .fold(Dd::ZERO, |acc, (p, w)| acc + *p * *w);
        let e1: Dd = pow1
            .iter()
            .zip(&w1)
            .fold(Dd::ZERO, |acc, (p, w)| acc + *p * *w);
        let diff = e1 - e0;
        sum += diff * diff * inv_factorial;
        // |E_i(k)| <= Lambda^k, so the residual tail is below the
        // Lambda^{2k}/k! series; stop once that is negligible.
        if k > prior.k && lambda2 / (k as f64 + 1.0) < 0.5 {
            let tail_bound = lambda_series_tail(cfg.lambda, k);
            if tail_bound < 1e-15 * sum.to_f64().max(1e-300) {
                break;
            }
        }
    }
    sum.to_f64()
}

/// Draws a sparse vector from the lifted prior: each coordinate is nonzero
/// with probability `s/2d`, with magnitude distributed per the chosen side.
pub fn sample_prior(
    prior: &MomentPrior,
    d: usize,
    s: usize,
    side: MeasureSide,
    seed: u64,
) -> ThetaVector {
    let mut stream = Stream::from_key(&[seed, stream_ids::PRIOR_DRAW]);
    let gate = s as f64 / (2.0 * d as f64);
    let (support, weights) = prior.side(side);
    let values = (0..d)
        .map(|_| {
            if stream.uniform() >= gate {
                return 0.0;
            }
            let mut u = stream.uniform();
            for (&x, &w) in support.iter().zip(weights) {
                if u < w {
                    return x;
                }
                u -= w;
            }
            *support.last().expect("nonempty support")
        })
        .collect();
    ThetaVector::new(values)
}

/// Exact binomial tail `P(Binomial(d, s/2d) > s)` by stable summation, and
/// the closed-form bound `exp(-s/16)`. The exact value never exceeds the
/// bound.
pub fn out_of_class_mass(d: usize, s: usize) -> Result<(f64, f64)> {
    if s == 0 || s > d {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= s <= d (got s = {s}, d = {d})"
        )));
    }
    let p = s as f64 / (2.0 * d as f64);
    let bound = (-(s as f64) / 16.0).exp();
    let mut exact = 0.0;
    // terms decrease beyond the mode s/2; accumulate ascending from s+1
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    let ln_choose_base = ln_gamma(d as f64 + 1.0);
    for k in (s + 1)..=d {
        let ln_term = ln_choose_base - ln_gamma(k as f64 + 1.0) - ln_gamma((d - k) as f64 + 1.0)
            + k as f64 * ln_p
            + (d - k) as f64 * ln_q;
        let term = ln_term.exp();
        exact += term;
        if term < 1e-18 * exact.max(1e-300) {
            break;
        }
    }
    Ok((exact, bound))
}
