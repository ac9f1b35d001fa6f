//! Double-double arithmetic: an unevaluated sum of two `f64` values giving
//! roughly 32 significant decimal digits (106-bit mantissa).
//!
//! The canonical coefficients of the best polynomial approximation grow like
//! `6^K` while their alternating-sign sums cancel back down to order one, so
//! plain doubles run out of digits around half-degree 12. All coefficient
//! arithmetic, the levelled Remez solves, and the prior moment sums therefore
//! run on this type.
//!
//! The error-free transformations are the classical ones (Knuth two-sum,
//! FMA-based two-product); the arithmetic kernels follow the "accurate"
//! variants of the QD library of Hida, Li and Bailey. `exp` uses argument
//! reduction by `ln 2` plus a Taylor tail; `ln` is Newton's method seeded by
//! the hardware logarithm.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Extended-precision value `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Requires `|a| >= |b|` (or a == 0).
#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// ln(2) to double-double precision.
    #[allow(clippy::approx_constant)]
    pub const LN_2: Dd = Dd {
        hi: 6.931471805599453e-1,
        lo: 2.3190468138462996e-17,
    };
    /// Unit roundoff of the format, 2^-106.
    pub const EPSILON: f64 = 1.232595164407831e-32;

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn from_i64(x: i64) -> Dd {
        // i64 always fits exactly in hi+lo (106 bits capacity)
        let hi = x as f64;
        let lo = (x - hi as i64) as f64;
        Dd::new(hi, lo)
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Exact scaling by a power of two.
    #[inline]
    pub fn ldexp(self, n: i32) -> Dd {
        Dd {
            hi: libm_ldexp(self.hi, n),
            lo: libm_ldexp(self.lo, n),
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.is_zero() {
            return Dd::ZERO;
        }
        debug_assert!(self.hi > 0.0, "sqrt of negative dd");
        // Karp's trick: one Newton step on the f64 seed done in dd.
        let x = self.hi.sqrt();
        let xd = Dd::from_f64(x);
        let err = (self - xd * xd).hi / (2.0 * x);
        xd + Dd::from_f64(err)
    }

    /// Integer power by binary exponentiation.
    pub fn powi(self, n: i32) -> Dd {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = if n < 0 { Dd::ONE / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// exp(x) via reduction x = m ln2 + r, |r| <= ln2/2, and a Taylor tail.
    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -709.0 {
            return Dd::ZERO;
        }
        let m = (self.hi / Dd::LN_2.hi).round();
        let r = self - Dd::LN_2 * Dd::from_f64(m);
        // Taylor sum of exp(r); |r| <= 0.347 needs < 30 terms for 2^-106.
        let mut term = r;
        let mut sum = Dd::ONE + r;
        for k in 2..40 {
            term = term * r / Dd::from_f64(k as f64);
            sum += term;
            if term.hi.abs() <= Dd::EPSILON * sum.hi.abs() {
                break;
            }
        }
        sum.ldexp(m as i32)
    }

    /// Natural logarithm; Newton iteration on exp, seeded with the f64 log.
    pub fn ln(self) -> Dd {
        debug_assert!(self.hi > 0.0, "ln of non-positive dd");
        let mut y = Dd::from_f64(self.hi.ln());
        // Two steps: 16 digits -> 32 digits -> saturated.
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    /// Real power for non-negative bases; `0^p = 0` for `p > 0`.
    pub fn powf(self, p: Dd) -> Dd {
        if self.is_zero() {
            debug_assert!(p.hi > 0.0, "0^p needs p > 0");
            return Dd::ZERO;
        }
        (p * self.ln()).exp()
    }

    /// Round-half-even decimal string with `digits` significant digits.
    ///
    /// Serialization keeps the full extended precision by using decimal
    /// strings instead of binary doubles; 36 digits over-covers the 106-bit
    /// mantissa so parse . to_decimal is a fixed point.
    pub fn to_decimal(self, digits: usize) -> String {
        if self.hi.is_nan() {
            return "nan".to_string();
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return "0".to_string();
        }
        if self.hi.is_infinite() {
            return if self.hi > 0.0 { "inf" } else { "-inf" }.to_string();
        }
        let neg = self.hi < 0.0;
        let mut x = self.abs();
        // Decimal exponent and normalization to [1, 10).
        let mut e = x.hi.abs().log10().floor() as i32;
        x = scale_pow10(x, -e);
        if x.hi >= 10.0 {
            x = x / Dd::from_f64(10.0);
            e += 1;
        } else if x.hi < 1.0 {
            x *= Dd::from_f64(10.0);
            e -= 1;
        }
        // Digit extraction; one guard digit for the final rounding.
        let n = digits + 1;
        let mut raw = Vec::with_capacity(n);
        for _ in 0..n {
            let d = x.hi.floor();
            raw.push(d as i32);
            x = (x - Dd::from_f64(d)) * Dd::from_f64(10.0);
        }
        // Fix digits that fell out of [0, 9] from rounding in the loop.
        for i in (1..n).rev() {
            if raw[i] < 0 {
                raw[i - 1] -= 1;
                raw[i] += 10;
            } else if raw[i] > 9 {
                raw[i - 1] += 1;
                raw[i] -= 10;
            }
        }
        // Round on the guard digit.
        if raw[n - 1] >= 5 {
            raw[n - 2] += 1;
            let mut i = n - 2;
            while i > 0 && raw[i] > 9 {
                raw[i] -= 10;
                raw[i - 1] += 1;
                i -= 1;
            }
        }
        raw.truncate(digits);
        if raw[0] > 9 {
            // 9.99... rounded all the way up
            raw[0] = 1;
            for d in raw.iter_mut().skip(1) {
                *d = 0;
            }
            e += 1;
        }
        debug_assert!(raw[0] >= 1 && raw[0] <= 9);
        let mut s = String::new();
        if neg {
            s.push('-');
        }
        s.push(char::from(b'0' + raw[0] as u8));
        s.push('.');
        for &d in &raw[1..] {
            s.push(char::from(b'0' + d as u8));
        }
        // Trim trailing zeros but keep one fractional digit.
        while s.ends_with('0') && !s.ends_with(".0") {
            s.pop();
        }
        s.push('e');
        s.push_str(&e.to_string());
        s
    }

    /// Parses a decimal string (as produced by [`Dd::to_decimal`], but any
    /// plain `[-]ddd[.ddd][e±dd]` form works). The mantissa is accumulated
    /// exactly in 128-bit integers, so the result is correct to within one
    /// unit of the format.
    pub fn parse(s: &str) -> Option<Dd> {
        let s = s.trim();
        match s {
            "nan" => return Some(Dd::from_f64(f64::NAN)),
            "inf" => return Some(Dd::from_f64(f64::INFINITY)),
            "-inf" => return Some(Dd::from_f64(f64::NEG_INFINITY)),
            _ => {}
        }
        let bytes = s.as_bytes();
        let mut i = 0;
        let neg = match bytes.first() {
            Some(b'-') => {
                i += 1;
                true
            }
            Some(b'+') => {
                i += 1;
                false
            }
            _ => false,
        };
        let mut mantissa: i128 = 0;
        let mut ndigits = 0usize;
        let mut frac_digits = 0i32;
        let mut seen_point = false;
        let mut seen_digit = false;
        while i < bytes.len() {
            match bytes[i] {
                b'0'..=b'9' => {
                    seen_digit = true;
                    // 38 digits saturate i128; further digits only shift the exponent.
                    if ndigits < 38 {
                        mantissa = mantissa * 10 + (bytes[i] - b'0') as i128;
                        ndigits += 1;
                        if seen_point {
                            frac_digits += 1;
                        }
                    } else if !seen_point {
                        frac_digits -= 1;
                    }
                    i += 1;
                }
                b'.' if !seen_point => {
                    seen_point = true;
                    i += 1;
                }
                b'e' | b'E' => break,
                _ => return None,
            }
        }
        if !seen_digit {
            return None;
        }
        let mut exp10: i32 = 0;
        if i < bytes.len() {
            // exponent part
            exp10 = s[i + 1..].parse::<i32>().ok()?;
        }
        let scale = exp10 - frac_digits;
        // Split the i128 mantissa into two exact f64 limbs.
        let hi = mantissa as f64;
        let rest = mantissa - hi as i128;
        let mid = rest as f64;
        let tail = (rest - mid as i128) as f64;
        let v = scale_pow10(Dd::new(hi, mid) + Dd::from_f64(tail), scale);
        Some(if neg { -v } else { v })
    }
}

/// `x * 10^e` computed against a positive power of ten (exact as a dd up to
/// `10^45`), so that one rounding covers the whole scaling. Scaling through
/// `0.1^k` would compound the inexactness of 1/10.
fn scale_pow10(x: Dd, e: i32) -> Dd {
    match e.cmp(&0) {
        Ordering::Equal => x,
        Ordering::Greater => {
            if e > 290 {
                // split to dodge overflow of the pure power
                x * Dd::from_f64(10.0).powi(290) * Dd::from_f64(10.0).powi(e - 290)
            } else {
                x * Dd::from_f64(10.0).powi(e)
            }
        }
        Ordering::Less => {
            if e < -290 {
                x / Dd::from_f64(10.0).powi(290) / Dd::from_f64(10.0).powi(-e - 290)
            } else {
                x / Dd::from_f64(10.0).powi(-e)
            }
        }
    }
}

#[inline]
fn libm_ldexp(x: f64, n: i32) -> f64 {
    // Exact for results in range; builds the power of two in up to three
    // in-range factors to avoid intermediate overflow/underflow.
    let mut r = x;
    let mut n = n;
    while n > 1023 {
        r *= f64::from_bits(0x7FE0000000000000); // 2^1023
        n -= 1023;
    }
    while n < -1022 {
        r *= f64::from_bits(0x0010000000000000); // 2^-1022
        n += 1022;
    }
    r * f64::from_bits(((1023 + n) as u64) << 52)
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (s1, s2) = quick_two_sum(s1, s2 + t2);
        Dd { hi: s1, lo: s2 }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        let p2 = p2 + self.hi * rhs.lo + self.lo * rhs.hi;
        let (s1, s2) = quick_two_sum(p1, p2);
        Dd { hi: s1, lo: s2 }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Dd::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (s1, s2) = quick_two_sum(q1, q2);
        Dd { hi: s1, lo: s2 } + Dd::from_f64(q3)
    }
}

impl AddAssign for Dd {
    #[inline]
    fn add_assign(&mut self, rhs: Dd) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dd {
    #[inline]
    fn sub_assign(&mut self, rhs: Dd) {
        *self = *self - rhs;
    }
}

impl MulAssign for Dd {
    #[inline]
    fn mul_assign(&mut self, rhs: Dd) {
        *self = *self * rhs;
    }
}

impl PartialEq for Dd {
    fn eq(&self, other: &Dd) -> bool {
        self.hi == other.hi && self.lo == other.lo
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd::from_f64(x)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(32))
    }
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot degenerates (singular to working precision).
pub fn solve_linear(a: &mut [Vec<Dd>], b: &mut [Dd]) -> Option<Vec<Dd>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .hi
                .abs()
                .partial_cmp(&a[j][col].hi.abs())
                .unwrap_or(Ordering::Equal)
        })?;
        if a[pivot][col].hi.abs() == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (pivot_rows, rest) = a.split_at_mut(row);
            let pivot_row = &pivot_rows[col];
            for (entry, pivot) in rest[0].iter_mut().zip(pivot_row).skip(col) {
                let t = *pivot * f;
                *entry -= t;
            }
            let t = b[col] * f;
            b[row] -= t;
        }
    }
    let mut x = vec![Dd::ZERO; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: Dd, b: f64, tol: f64) {
        assert!(
            (a.to_f64() - b).abs() <= tol,
            "{} vs {} (tol {})",
            a.to_f64(),
            b,
            tol
        );
    }

    #[test]
    fn add_tracks_cancelled_bits() {
        let a = Dd::from_f64(1.0) + Dd::from_f64(1e-25);
        let b = a - Dd::from_f64(1.0);
        assert_eq!(b.to_f64(), 1e-25);
    }

    #[test]
    fn mul_exact_on_integers() {
        let a = Dd::from_i64(94906265); // > 2^26, square exceeds 2^53
        assert_eq!(a * a, Dd::from_i64(94906265i64 * 94906265));
    }

    #[test]
    fn div_roundtrip() {
        let a = Dd::from_f64(3.7);
        let b = Dd::from_f64(11.3);
        let r = (a / b) * b - a;
        assert!(r.to_f64().abs() < 1e-31);
    }

    #[test]
    fn sqrt_squares_back() {
        for &x in &[2.0, 3.0, 1e10, 1e-12, 0.4939] {
            let s = Dd::from_f64(x).sqrt();
            let back = s * s - Dd::from_f64(x);
            assert!(back.to_f64().abs() <= 4.0 * Dd::EPSILON * x, "x = {x}");
        }
    }

    #[test]
    fn exp_ln_reference_values() {
        // exp(1) and ln(2) against 32-digit references.
        let e = Dd::ONE.exp();
        let e_ref = Dd::parse("2.7182818284590452353602874713526625").unwrap();
        assert!(((e - e_ref) / e_ref).to_f64().abs() < 1e-31);
        let l2 = Dd::from_f64(2.0).ln();
        let l2_ref = Dd::parse("6.9314718055994530941723212145817657e-1").unwrap();
        assert!(((l2 - l2_ref) / l2_ref).to_f64().abs() < 1e-31);
    }

    #[test]
    fn powf_matches_integer_powers() {
        let x = Dd::from_f64(1.73);
        let a = x.powf(Dd::from_f64(3.0));
        let b = x.powi(3);
        assert!(((a - b) / b).to_f64().abs() < 1e-30);
        // 0^p = 0
        assert!(Dd::ZERO.powf(Dd::from_f64(0.5)).is_zero());
    }

    #[test]
    fn powf_fractional_reference() {
        // (f64 0.3)^(1/4), 36 digits from mpmath
        let v = Dd::from_f64(0.3).powf(Dd::from_f64(0.25));
        let r = Dd::parse("7.40082804492285243719648552193059047e-1").unwrap();
        assert!(((v - r) / r).to_f64().abs() < 1e-30, "{v}");
    }

    #[test]
    fn decimal_roundtrip_is_fixed_point() {
        for &x in &[
            1.0 / 3.0,
            6.0f64.powi(20),
            -2.3e-15,
            0.125,
            1.0,
            9.999999999,
        ] {
            let v = Dd::from_f64(x) * Dd::from_f64(1.0 + 1e-17) + Dd::from_f64(1e-20 * x);
            let s = v.to_decimal(36);
            let w = Dd::parse(&s).unwrap();
            // round-trip error at the representation floor (parse and print
            // each round once)
            let diff = ((w - v) / v).to_f64().abs();
            assert!(diff < 4.0 * Dd::EPSILON, "{s}: rel {diff}");
        }
    }

    #[test]
    fn parse_plain_forms() {
        assert_eq!(Dd::parse("0.125").unwrap().to_f64(), 0.125);
        assert_eq!(Dd::parse("-42").unwrap().to_f64(), -42.0);
        assert_eq!(Dd::parse("1e3").unwrap().to_f64(), 1000.0);
        assert!(Dd::parse("12.5x").is_none());
        assert!(Dd::parse("").is_none());
    }

    #[test]
    fn linear_solve_hilbert_like() {
        // small system with known solution x = (1, ..., 1)
        let n = 8;
        let mut a: Vec<Vec<Dd>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Dd::ONE / Dd::from_f64((i + j + 1) as f64))
                    .collect()
            })
            .collect();
        let mut b: Vec<Dd> = (0..n)
            .map(|i| {
                let mut s = Dd::ZERO;
                for j in 0..n {
                    s += Dd::ONE / Dd::from_f64((i + j + 1) as f64);
                }
                s
            })
            .collect();
        let x = solve_linear(&mut a, &mut b).unwrap();
        for xi in x {
            assert_close(xi, 1.0, 1e-21); // Hilbert 8x8 cond ~ 1e10
        }
    }

    #[test]
    fn ldexp_scales_exactly() {
        let v = Dd::new(1.5, 1e-20);
        let w = v.ldexp(40).ldexp(-40);
        assert_eq!(v, w);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn dd_value() -> impl Strategy<Value = Dd> {
            // pairs with lo well inside hi's ulp, over a wide dynamic range
            (
                -1.0f64..1.0,
                -30i32..30,
                -1.0f64..1.0,
            )
                .prop_filter_map("nonzero", |(hi, exp, lo)| {
                    if hi.abs() < 1e-3 {
                        return None;
                    }
                    let scale = 10.0f64.powi(exp);
                    Some(Dd::from_f64(hi * scale) + Dd::from_f64(lo * scale * 1e-18))
                })
        }

        proptest! {
            #[test]
            fn add_sub_cancels(a in dd_value(), b in dd_value()) {
                let r = (a + b) - b - a;
                let scale = a.abs().to_f64().max(b.abs().to_f64());
                prop_assert!(r.to_f64().abs() <= 8.0 * Dd::EPSILON * scale);
            }

            #[test]
            fn mul_div_cancels(a in dd_value(), b in dd_value()) {
                let r = (a * b) / b - a;
                prop_assert!(r.to_f64().abs() <= 8.0 * Dd::EPSILON * a.abs().to_f64());
            }

            #[test]
            fn decimal_roundtrip(a in dd_value()) {
                let s = a.to_decimal(36);
                let b = Dd::parse(&s).unwrap();
                let rel = ((b - a) / a).to_f64().abs();
                prop_assert!(rel <= 4.0 * Dd::EPSILON, "{s}: rel {rel}");
            }
        }
    }
}
