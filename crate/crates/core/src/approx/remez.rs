//! Remez exchange on `g(u) = u^{gamma/2}` over `[0, 1]`.
//!
//! Approximating `|x|^gamma` on `[-1, 1]` by even polynomials of degree `2K`
//! is the same problem as approximating `g(u) = u^{gamma/2}` by degree-`K`
//! polynomials after `u = x^2`, which maps `[-1, 1]` onto `[0, 1]` without
//! changing sup norms. The substituted problem is an ordinary (non-even)
//! Chebyshev approximation, so the standard alternation count `K + 2`
//! applies and the classical exchange algorithm converges quadratically.
//!
//! Internals run in double-double precision with the polynomial carried in
//! the shifted-Chebyshev basis; the ill-conditioned conversion to canonical
//! monomial coefficients happens once, at the end. Residual scanning and
//! extremum bracketing run in f64 on the Chebyshev form (coefficients are
//! order one there, so f64 evaluation is accurate to ~1e-15), with final
//! residual values re-evaluated in double-double at the refined points.

use crate::dd::{solve_linear, Dd};
use crate::error::{Error, Result};

pub(crate) struct RemezOutcome {
    /// Canonical coefficients of `u^k` (equivalently `x^{2k}`).
    pub canonical: Vec<Dd>,
    /// Certified sup-norm error (grid maximum).
    pub delta: f64,
    /// Equioscillation abscissae in `[0, 1]`, ascending.
    pub alternation: Vec<f64>,
}

struct Extremum {
    u: f64,
    value: f64, // dd residual rounded; |value| close to delta at convergence
}

/// Residual certificate slack: every alternation value must sit within
/// `1e-10 * max(1, delta)` of the certified delta.
const CERT_TOL: f64 = 1e-10;
/// Uniform certification grid size (matches the documented invariant).
const CERT_GRID: usize = 100_001;

pub(crate) fn remez(gamma: f64, k: usize, tol: f64, max_iter: usize) -> Result<RemezOutcome> {
    let half_exp = gamma / 2.0;
    let g64 = |u: f64| u.powf(half_exp);
    let gdd = |u: Dd| {
        if u.is_zero() {
            Dd::ZERO
        } else {
            u.powf(Dd::from_f64(half_exp))
        }
    };

    // Levelness is required down to the user tolerance, and in any case far
    // enough that the per-point certificate can hold: all alternation values
    // lie in [level, max], so (max - level) must stay within a fraction of
    // the absolute certificate budget 1e-10 * max(1, delta). The budget is
    // re-expressed as a ratio against the current level inside the loop.
    let budget_ratio = |level_abs: f64| 0.3 * CERT_TOL * level_abs.max(1.0) / level_abs;

    // Initial reference: extrema of T_{K+1} mapped to [0, 1] (ascending;
    // includes both endpoints, in particular the singular point u = 0).
    let mut reference: Vec<f64> = (0..=k + 1)
        .map(|j| 0.5 * (1.0 + (std::f64::consts::PI * j as f64 / (k + 1) as f64).cos()))
        .rev()
        .collect();

    let mut last_profile: Vec<(f64, f64)> = Vec::new();
    let mut last_ratio = f64::INFINITY;

    for _iter in 0..max_iter {
        let (cheb, level) = solve_levelled(&reference, k, gdd)?;
        let cheb64: Vec<f64> = cheb.iter().map(|c| c.to_f64()).collect();
        let resid64 = |u: f64| g64(u) - clenshaw_f64(&cheb64, u);
        let resid_dd = |u: f64| (gdd(Dd::from_f64(u)) - clenshaw_dd(&cheb, Dd::from_f64(u))).to_f64();

        let mut extrema = find_extrema(k, resid64, resid_dd);
        enforce_alternation(&mut extrema);
        let level_abs = level.abs().to_f64();

        if extrema.len() < k + 2 {
            // Degenerate search (can happen far from convergence): fall back
            // to a single exchange of the worst point into the reference.
            if let Some(worst) = extrema
                .iter()
                .max_by(|a, b| a.value.abs().total_cmp(&b.value.abs()))
            {
                single_exchange(&mut reference, worst.u, worst.value, resid_dd);
                continue;
            }
            return Err(Error::RemezConvergence {
                gamma,
                k,
                iterations: max_iter,
                ratio: f64::INFINITY,
                profile: vec![],
            });
        }
        trim_to_reference(&mut extrema, k + 2);

        let max_abs = extrema
            .iter()
            .map(|e| e.value.abs())
            .fold(0.0f64, f64::max);
        let ratio = (max_abs - level_abs) / level_abs;
        last_ratio = ratio;

        if ratio <= tol.min(budget_ratio(level_abs)) {
            // Converged on the reference: certify against the dense grid.
            let mut delta = max_abs;
            let mut grid_argmax = None;
            for i in 0..CERT_GRID {
                let u = i as f64 / (CERT_GRID - 1) as f64;
                let r = resid64(u).abs();
                if r > delta {
                    // re-measure in extended precision before accepting
                    let rd = resid_dd(u).abs();
                    if rd > delta {
                        delta = rd;
                        grid_argmax = Some(u);
                    }
                }
            }
            let certified = extrema
                .iter()
                .all(|e| (e.value.abs() - delta).abs() <= CERT_TOL * delta.max(1.0));
            if certified {
                return Ok(RemezOutcome {
                    canonical: chebyshev_to_monomial(&cheb),
                    delta,
                    alternation: extrema.iter().map(|e| e.u).collect(),
                });
            }
            // The uniform grid saw an extremum the scan missed; push it into
            // the next reference so the iteration cannot stall.
            if let Some(u) = grid_argmax {
                let step = 1.0 / (CERT_GRID - 1) as f64;
                let refined = golden_max(
                    |t| resid64(t).abs(),
                    (u - step).max(0.0),
                    (u + step).min(1.0),
                );
                let mut refs: Vec<f64> = extrema.iter().map(|e| e.u).collect();
                single_exchange(&mut refs, refined, resid_dd(refined), resid_dd);
                last_profile = extrema.iter().map(|e| (e.u, e.value)).collect();
                reference = refs;
                continue;
            }
        }

        last_profile = extrema.iter().map(|e| (e.u, e.value)).collect();
        reference = extrema.iter().map(|e| e.u).collect();
    }

    Err(Error::RemezConvergence {
        gamma,
        k,
        iterations: max_iter,
        ratio: last_ratio,
        profile: last_profile,
    })
}

/// Solves the levelled interpolation system on the reference: polynomial of
/// degree `k` plus alternating level term matching `g` at `k + 2` points.
fn solve_levelled(
    reference: &[f64],
    k: usize,
    gdd: impl Fn(Dd) -> Dd,
) -> Result<(Vec<Dd>, Dd)> {
    let n = k + 2;
    debug_assert_eq!(reference.len(), n);
    let mut matrix: Vec<Vec<Dd>> = Vec::with_capacity(n);
    let mut rhs: Vec<Dd> = Vec::with_capacity(n);
    for (j, &u) in reference.iter().enumerate() {
        let mut row = chebyshev_row(k, Dd::from_f64(u));
        row.push(if j % 2 == 0 {
            Dd::ONE
        } else {
            Dd::from_f64(-1.0)
        });
        matrix.push(row);
        rhs.push(gdd(Dd::from_f64(u)));
    }
    let solution = solve_linear(&mut matrix, &mut rhs).ok_or_else(|| {
        Error::InvalidParameter("levelled Remez system is singular (collapsed reference)".into())
    })?;
    let mut cheb = solution;
    let level = cheb.pop().expect("level unknown present");
    Ok((cheb, level))
}

/// Values `T*_0(u) .. T*_k(u)` of the shifted Chebyshev basis.
fn chebyshev_row(k: usize, u: Dd) -> Vec<Dd> {
    let x = Dd::from_f64(2.0) * u - Dd::ONE;
    let mut row = Vec::with_capacity(k + 1);
    row.push(Dd::ONE);
    if k >= 1 {
        row.push(x);
    }
    for i in 2..=k {
        let next = Dd::from_f64(2.0) * x * row[i - 1] - row[i - 2];
        row.push(next);
    }
    row
}

pub(crate) fn clenshaw_f64(coeffs: &[f64], u: f64) -> f64 {
    let x = 2.0 * u - 1.0;
    let two_x = 2.0 * x;
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = c + two_x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + x * b1 - b2
}

fn clenshaw_dd(coeffs: &[Dd], u: Dd) -> Dd {
    let x = Dd::from_f64(2.0) * u - Dd::ONE;
    let two_x = Dd::from_f64(2.0) * x;
    let mut b1 = Dd::ZERO;
    let mut b2 = Dd::ZERO;
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = c + two_x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + x * b1 - b2
}

/// Locates the local extrema of the residual: the sign changes of `r` on a
/// Chebyshev-distributed scan grid split `[0, 1]` into brackets, and each
/// bracket is refined by golden-section search on `|r|` (the target is not
/// differentiable at 0, so no derivative-based refinement). Values at the
/// refined points are re-measured in extended precision.
fn find_extrema(
    k: usize,
    resid64: impl Fn(f64) -> f64 + Copy,
    resid_dd: impl Fn(f64) -> f64 + Copy,
) -> Vec<Extremum> {
    let n = (64 * (k + 2)).max(2048);
    let grid: Vec<f64> = (0..=n)
        .map(|i| 0.5 * (1.0 + (std::f64::consts::PI * i as f64 / n as f64).cos()))
        .rev()
        .collect();
    let values: Vec<f64> = grid.iter().map(|&u| resid64(u)).collect();

    // bracket boundaries at the sign changes
    let mut cuts = vec![0.0];
    for i in 1..values.len() {
        if values[i - 1] != 0.0 && values[i].signum() != values[i - 1].signum() {
            cuts.push(0.5 * (grid[i - 1] + grid[i]));
        }
    }
    cuts.push(1.0);

    let mut extrema = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let u = golden_max(|t| resid64(t).abs(), w[0], w[1]);
        let u = polish_extremum(u, w[0], w[1], resid_dd);
        let value = resid_dd(u);
        if value != 0.0 {
            extrema.push(Extremum { u, value });
        }
    }
    extrema
}

/// Parabolic vertex correction on the extended-precision residual. Golden
/// section on f64 values leaves ~1e-8 of position fuzz (value noise 1e-16
/// against quadratic curvature); one vertex fit through noise-free values
/// brings interior extrema to ~1e-12. Endpoint extrema are exact already.
fn polish_extremum(u: f64, lo: f64, hi: f64, resid_dd: impl Fn(f64) -> f64) -> f64 {
    let h = 1e-6f64.min(0.125 * (hi - lo)).min(0.5 * u);
    if h < 1e-9 || u - lo < h || hi - u < h {
        return u;
    }
    let left = resid_dd(u - h);
    let mid = resid_dd(u);
    let right = resid_dd(u + h);
    let denom = left - 2.0 * mid + right;
    if denom == 0.0 {
        return u;
    }
    let shift = 0.5 * h * (left - right) / denom;
    if shift.abs() < h {
        u + shift
    } else {
        u
    }
}

/// Golden-section maximization of `phi` on `[a, b]`, endpoints included.
fn golden_max(phi: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const INV_PHI: f64 = 0.6180339887498949;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = phi(x1);
    let mut f2 = phi(x2);
    while hi - lo > 1e-14 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = phi(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = phi(x1);
        }
    }
    // interior winner vs the original endpoints
    let mid = 0.5 * (lo + hi);
    let mut best = (phi(mid), mid);
    for cand in [a, b] {
        let v = phi(cand);
        if v > best.0 {
            best = (v, cand);
        }
    }
    best.1
}

/// Collapses runs of same-sign candidates, keeping the largest magnitude.
fn enforce_alternation(extrema: &mut Vec<Extremum>) {
    let mut out: Vec<Extremum> = Vec::with_capacity(extrema.len());
    for e in extrema.drain(..) {
        match out.last_mut() {
            Some(last) if last.value.signum() == e.value.signum() => {
                if e.value.abs() > last.value.abs() {
                    *last = e;
                }
            }
            _ => out.push(e),
        }
    }
    *extrema = out;
}

/// Drops surplus alternation points from whichever end carries the smaller
/// residual, preserving both alternation and the global maximum.
fn trim_to_reference(extrema: &mut Vec<Extremum>, target: usize) {
    while extrema.len() > target {
        let first = extrema.first().expect("nonempty").value.abs();
        let last = extrema.last().expect("nonempty").value.abs();
        if first <= last {
            extrema.remove(0);
        } else {
            extrema.pop();
        }
    }
}

/// Classical single exchange: swaps `u` into the reference in place of the
/// neighbour whose residual has the same sign.
fn single_exchange(
    reference: &mut [f64],
    u: f64,
    value: f64,
    resid_dd: impl Fn(f64) -> f64,
) {
    let pos = reference.partition_point(|&r| r < u);
    let sign = value.signum();
    let candidate = if pos == 0 {
        0
    } else if pos == reference.len() {
        reference.len() - 1
    } else if resid_dd(reference[pos - 1]).signum() == sign {
        pos - 1
    } else {
        pos
    };
    if resid_dd(reference[candidate]).signum() == sign {
        reference[candidate] = u;
        reference.sort_by(f64::total_cmp);
    }
}

/// Converts from the shifted-Chebyshev basis to monomials in `u`. The
/// monomial coefficients of `T*_j` are integers (exact in double-double up
/// to the degrees used here), so the only rounding is in the final
/// coefficient-weighted accumulation.
fn chebyshev_to_monomial(cheb: &[Dd]) -> Vec<Dd> {
    let k = cheb.len() - 1;
    let mut canonical = vec![Dd::ZERO; k + 1];
    let mut t_prev = vec![Dd::ONE]; // T*_0
    canonical[0] += cheb[0] * t_prev[0];
    if k == 0 {
        return canonical;
    }
    let mut t_cur = vec![Dd::from_f64(-1.0), Dd::from_f64(2.0)]; // T*_1 = 2u - 1
    for (i, &t) in t_cur.iter().enumerate() {
        canonical[i] += cheb[1] * t;
    }
    for coeff in cheb.iter().skip(2) {
        // T*_{j} = (4u - 2) T*_{j-1} - T*_{j-2}
        let mut t_next = vec![Dd::ZERO; t_cur.len() + 1];
        for (i, &t) in t_cur.iter().enumerate() {
            t_next[i + 1] += Dd::from_f64(4.0) * t;
            t_next[i] -= Dd::from_f64(2.0) * t;
        }
        for (i, &t) in t_prev.iter().enumerate() {
            t_next[i] -= t;
        }
        for (i, &t) in t_next.iter().enumerate() {
            canonical[i] += *coeff * t;
        }
        t_prev = t_cur;
        t_cur = t_next;
    }
    canonical
}
