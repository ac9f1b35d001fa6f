//! Best uniform approximation of `|x|^gamma` on `[-1, 1]` by even
//! polynomials of degree at most `2K`, with an equioscillation certificate.
//!
//! Only this one target family is supported; the estimators need nothing
//! else, and the singular behaviour of `|x|^gamma` at the origin is baked
//! into the search strategy (see [`remez`]). The canonical coefficients
//! `a_{gamma,2k}` grow like `6^K` with alternating signs, so they are kept
//! in extended precision end to end; JSON serialization writes them as
//! decimal strings to keep that precision through a round-trip.

mod remez;

use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Iteration cap of the exchange loop.
pub const DEFAULT_MAX_ITER: usize = 100;

/// A certified best even-polynomial approximation
/// `P(x) = sum_{k=0}^K a_{gamma,2k} x^{2k}` of `|x|^gamma` on `[-1, 1]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "PolyApproxRepr", into = "PolyApproxRepr")]
pub struct PolyApprox {
    gamma: f64,
    k: usize,
    coeffs: Vec<Dd>,
    delta: f64,
    alternation: Vec<f64>,
}

impl PolyApprox {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Half-degree `K` (the polynomial has degree `2K`).
    pub fn half_degree(&self) -> usize {
        self.k
    }

    /// Certified sup-norm error `delta_{K,gamma}`; zero exactly when
    /// `gamma` is an even integer with `gamma <= 2K`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Canonical coefficients `a_{gamma,0}, a_{gamma,2}, ..., a_{gamma,2K}`
    /// in extended precision.
    pub fn coeffs(&self) -> &[Dd] {
        &self.coeffs
    }

    /// Coefficients rounded to f64 (cancellation-prone; prefer
    /// [`PolyApprox::coeffs`] for arithmetic).
    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64()).collect()
    }

    /// Residual `|x|^gamma - P(x)` expressed in the `u = x^2` variable.
    pub fn residual_u(&self, u: f64) -> f64 {
        let ud = Dd::from_f64(u);
        let g = if u == 0.0 {
            Dd::ZERO
        } else {
            ud.powf(Dd::from_f64(self.gamma / 2.0))
        };
        (g - horner_dd(&self.coeffs, ud)).to_f64()
    }
}

fn horner_dd(coeffs: &[Dd], u: Dd) -> Dd {
    let mut acc = Dd::ZERO;
    for &c in coeffs.iter().rev() {
        acc = acc * u + c;
    }
    acc
}

fn is_even_integer(gamma: f64) -> bool {
    gamma.fract() == 0.0 && gamma >= 0.0 && (gamma as u64).is_multiple_of(2)
}

/// Computes the best even-polynomial approximation by Remez exchange.
///
/// `tol` bounds the accepted levelness ratio `(max residual - level) /
/// level`; the engine iterates to certificate quality (equioscillation
/// within `1e-10 * max(1, delta)`) regardless, so any `tol` in the accepted
/// range gives the same certified result. Even integer `gamma <= 2K` is
/// representable exactly and short-circuits with `delta = 0`.
pub fn best_poly_approx(gamma: f64, k: usize, tol: f64) -> Result<PolyApprox> {
    best_poly_approx_capped(gamma, k, tol, DEFAULT_MAX_ITER)
}

/// [`best_poly_approx`] with an explicit iteration cap.
pub fn best_poly_approx_capped(
    gamma: f64,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<PolyApprox> {
    if gamma <= 0.0 || !gamma.is_finite() || gamma.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "gamma must be a positive real (got {gamma})"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("K must be >= 1".into()));
    }
    if tol.is_nan() || tol <= 0.0 || tol > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "tol must lie in (0, 1e-6] (got {tol})"
        )));
    }
    if is_even_integer(gamma) && gamma as usize <= 2 * k {
        // |x|^gamma = x^gamma is itself an even polynomial of degree <= 2K.
        let mut coeffs = vec![Dd::ZERO; k + 1];
        coeffs[gamma as usize / 2] = Dd::ONE;
        return Ok(PolyApprox {
            gamma,
            k,
            coeffs,
            delta: 0.0,
            alternation: Vec::new(),
        });
    }
    let outcome = remez::remez(gamma, k, tol, max_iter)?;
    Ok(PolyApprox {
        gamma,
        k,
        coeffs: outcome.canonical,
        delta: outcome.delta,
        alternation: outcome.alternation,
    })
}

/// Evaluates `P(x)` by Horner's rule in `u = x^2`, in extended precision
/// internally. Defined for all real `x`; the approximation guarantee only
/// covers `[-1, 1]`.
pub fn eval_poly(p: &PolyApprox, x: f64) -> f64 {
    let u = Dd::from_f64(x) * Dd::from_f64(x);
    horner_dd(&p.coeffs, u).to_f64()
}

/// The equioscillation abscissae (in the `u = x^2` variable, ascending).
/// Errors when the approximation is exact, since no alternation set exists.
pub fn alternation_set(p: &PolyApprox) -> Result<Vec<f64>> {
    if p.delta == 0.0 {
        return Err(Error::DegenerateApproximation);
    }
    Ok(p.alternation.clone())
}

/// Serialized form: coefficients as decimal strings (36 significant digits,
/// which over-covers the 106-bit mantissa of the extended format).
#[derive(Serialize, Deserialize)]
struct PolyApproxRepr {
    gamma: f64,
    #[serde(rename = "K")]
    k: usize,
    delta: f64,
    coeffs: Vec<String>,
    alternation: Vec<f64>,
}

impl From<PolyApprox> for PolyApproxRepr {
    fn from(p: PolyApprox) -> PolyApproxRepr {
        PolyApproxRepr {
            gamma: p.gamma,
            k: p.k,
            delta: p.delta,
            coeffs: p.coeffs.iter().map(|c| c.to_decimal(36)).collect(),
            alternation: p.alternation,
        }
    }
}

impl TryFrom<PolyApproxRepr> for PolyApprox {
    type Error = String;

    fn try_from(r: PolyApproxRepr) -> std::result::Result<PolyApprox, String> {
        if r.coeffs.len() != r.k + 1 {
            return Err(format!(
                "expected {} coefficients for K = {}, got {}",
                r.k + 1,
                r.k,
                r.coeffs.len()
            ));
        }
        let coeffs = r
            .coeffs
            .iter()
            .map(|s| Dd::parse(s).ok_or_else(|| format!("bad decimal coefficient {s:?}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(PolyApprox {
            gamma: r.gamma,
            k: r.k,
            coeffs,
            delta: r.delta,
            alternation: r.alternation,
        })
    }
}
