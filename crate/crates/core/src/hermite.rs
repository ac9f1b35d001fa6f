//! Probabilists' Hermite polynomials and Gaussian-shift moment identities.
//!
//! The defining property used throughout the dense-zone estimator is
//! `E H_k(X) = theta^k` for `X ~ N(theta, 1)`: plugging Hermite values of
//! noisy observations into a polynomial gives an unbiased estimate of the
//! same polynomial in the unknown means. The physicists' normalization would
//! silently break this identity, hence the explicit three-term recurrence
//! `H_{k+1}(x) = x H_k(x) - k H_{k-1}(x)` here.
//!
//! The quadrature used as the independent oracle for those identities is
//! 200-node Gauss-Hermite, exact for polynomial integrands up to degree 399.

use once_cell::sync::Lazy;

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Degree cap for [`hermite_eval`].
pub const MAX_EVAL_DEGREE: usize = 512;
/// Degree cap for [`hermite_shifted_mean`].
pub const MAX_MEAN_DEGREE: usize = 64;

const QUADRATURE_NODES: usize = 200;

/// Value of the probabilists' Hermite polynomial `H_k` at `x`.
///
/// Upward recurrence in plain doubles; for `k > 40` with `|x| > 5` the
/// recurrence runs in extended precision before rounding, where the
/// alternating terms start losing digits.
pub fn hermite_eval(k: usize, x: f64) -> Result<f64> {
    if k > MAX_EVAL_DEGREE {
        return Err(Error::UnsupportedDegree {
            k,
            cap: MAX_EVAL_DEGREE,
        });
    }
    if k > 40 && x.abs() > 5.0 {
        return Ok(hermite_eval_dd(k, Dd::from_f64(x)).to_f64());
    }
    Ok(hermite_eval_f64(k, x))
}

fn hermite_eval_f64(k: usize, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = x;
    for j in 1..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Extended-precision recurrence; used by the dense-zone estimator where the
/// Hermite values are multiplied with coefficients of size `6^K`.
pub(crate) fn hermite_eval_dd(k: usize, x: Dd) -> Dd {
    if k == 0 {
        return Dd::ONE;
    }
    let mut prev = Dd::ONE;
    let mut cur = x;
    for j in 1..k {
        let next = x * cur - Dd::from_f64(j as f64) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Orthonormal Hermite value `p_n(z)` (weight `exp(-t^2)`) and the derivative
/// factor `p_n'(z) = sqrt(2n) p_{n-1}(z)`.
fn orthonormal_hermite(n: usize, z: f64) -> (f64, f64) {
    const PIM4: f64 = 0.7511255444649425; // pi^(-1/4)
    let mut p1 = PIM4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j as f64 - 1.0) / j as f64).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Gauss-Hermite nodes/weights for the weight `exp(-t^2)`.
///
/// All positive roots of `p_n` are bracketed by a sign scan (step well below
/// the minimal root gap `~pi/sqrt(2n)`), then polished by bisection plus two
/// Newton steps. Slower than asymptotic initial guesses but free of their
/// basin-of-attraction failures at large `n`, and it runs once per process.
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let zmax = (2.0 * n as f64 + 1.0).sqrt();
    let step = 0.5 / (2.0 * n as f64).sqrt();
    let mut roots = Vec::with_capacity(n / 2 + 1);
    let mut z_prev = if n % 2 == 1 {
        // zero is a root for odd n; start the scan just above it
        roots.push(0.0);
        step * 0.5
    } else {
        0.0
    };
    let mut f_prev = orthonormal_hermite(n, z_prev).0;
    let mut z = z_prev + step;
    while z_prev < zmax {
        let f = orthonormal_hermite(n, z).0;
        if f_prev != 0.0 && f.signum() != f_prev.signum() {
            // bisect, then two Newton polish steps
            let (mut lo, mut hi) = (z_prev, z);
            let mut flo = f_prev;
            for _ in 0..70 {
                let mid = 0.5 * (lo + hi);
                let fm = orthonormal_hermite(n, mid).0;
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let mut root = 0.5 * (lo + hi);
            for _ in 0..2 {
                let (p, dp) = orthonormal_hermite(n, root);
                root -= p / dp;
            }
            roots.push(root);
        }
        z_prev = z;
        f_prev = f;
        z += step;
    }
    assert_eq!(roots.len(), n.div_ceil(2), "missed Hermite roots");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for (i, &r) in roots.iter().rev().enumerate() {
        let (_, dp) = orthonormal_hermite(n, r);
        let w = 2.0 / (dp * dp);
        nodes[i] = r;
        nodes[n - 1 - i] = -r;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

static NODES_200: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| gauss_hermite(QUADRATURE_NODES));

/// Quadrature of `E f(X)` for `X ~ N(theta, sigma^2)`; exact for polynomial
/// `f` up to degree 399. This is oracle infrastructure for the moment
/// identities, not a general-purpose integrator.
pub fn expect_normal(f: impl Fn(f64) -> f64, theta: f64, sigma: f64) -> f64 {
    let (nodes, weights) = &*NODES_200;
    let scale = std::f64::consts::SQRT_2 * sigma;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let mut sum = 0.0;
    // fixed summation order: deterministic output
    for (t, w) in nodes.iter().zip(weights) {
        sum += w * f(theta + scale * t);
    }
    sum * inv_sqrt_pi
}

/// `E H_k(X)` for `X ~ N(theta, 1)` by quadrature. Equals `theta^k`; kept as
/// a quadrature so it can serve as the independent oracle of that identity.
pub fn hermite_shifted_mean(k: usize, theta: f64) -> Result<f64> {
    if k > MAX_MEAN_DEGREE {
        return Err(Error::UnsupportedDegree {
            k,
            cap: MAX_MEAN_DEGREE,
        });
    }
    Ok(expect_normal(
        |x| hermite_eval_f64(k, x),
        theta,
        1.0,
    ))
}
