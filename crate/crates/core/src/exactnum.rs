//! Exact arithmetic substrate: arbitrary-precision rationals, quadratic
//! surds `(p + q*sqrt(d))/r`, and integer 2x2 matrices acting as Moebius maps.
//!
//! Every interval endpoint produced by the solvers lives in a single real
//! quadratic field `Q(sqrt(d))`. Operations between two irrational values
//! with distinct radicands are rejected ([`ExactError::MixedRadicand`]);
//! comparisons, however, are total: they fall back to integer square-root
//! enclosures and a squaring argument, so values from different fields can
//! always be ordered exactly.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("operands lie in distinct quadratic fields (sqrt {0} vs sqrt {1})")]
    MixedRadicand(BigInt, BigInt),
    #[error("division by zero")]
    DivisionByZero,
    #[error("Moebius map has a pole at the input")]
    PoleAtInput,
    #[error("negative discriminant {0}")]
    NegativeDiscriminant(BigInt),
    #[error("degenerate quadratic: both leading coefficients vanish")]
    DegenerateQuadratic,
    #[error("negative radicand {0}")]
    NegativeRadicand(BigInt),
    #[error("cannot parse surd from {0:?}")]
    Parse(String),
}

pub fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(big(num), big(den))
}

/// Floor of an exact integer square root (Newton iteration on big integers).
pub fn isqrt(n: &BigInt) -> BigInt {
    debug_assert!(!n.is_negative());
    num_integer::Roots::sqrt(n)
}

/// Splits `n >= 0` as `f^2 * d` with `d` free of small square factors.
///
/// Trial division runs up to 10^4 (a cheap machine-word loop when `n` fits
/// u128, a short big-integer loop otherwise), then the remainder is tested
/// for being a perfect square. For `n < 10^8` the result is exactly
/// squarefree; the huge discriminants of deep period-doubling levels may
/// retain a square factor with prime divisors above the bound, which the
/// value-level comparison logic tolerates.
pub fn extract_square(n: &BigInt) -> (BigInt, BigInt) {
    if n.is_zero() {
        return (BigInt::one(), BigInt::zero());
    }
    // radicands certified square-factor-free earlier skip the scan; the
    // same few field discriminants recur throughout a tree walk
    thread_local! {
        static KNOWN_FREE: std::cell::RefCell<std::collections::HashSet<BigInt>> =
            std::cell::RefCell::new(std::collections::HashSet::new());
    }
    let known = KNOWN_FREE.with(|c| c.borrow().contains(n));
    if known {
        return (BigInt::one(), n.clone());
    }
    let (f, d) = extract_square_uncached(n);
    if f.is_one() {
        KNOWN_FREE.with(|c| {
            let mut cache = c.borrow_mut();
            if cache.len() < 100_000 {
                cache.insert(n.clone());
            }
        });
    }
    (f, d)
}

fn extract_square_uncached(n: &BigInt) -> (BigInt, BigInt) {
    if let Some(small) = n.to_u128() {
        let mut d = small;
        let mut f = 1u128;
        let mut p = 2u128;
        while p <= 10_000 && p * p <= d {
            let sq = p * p;
            while d % sq == 0 {
                d /= sq;
                f *= p;
            }
            p += if p == 2 { 1 } else { 2 };
        }
        let s = d.isqrt();
        if s * s == d {
            f *= s;
            d = 1;
        }
        return (BigInt::from(f), BigInt::from(d));
    }
    let mut d = n.clone();
    let mut f = BigInt::one();
    let mut p = 2u64;
    while p <= 1000 {
        let sq = big((p * p) as i64);
        while (&d % &sq).is_zero() {
            d /= &sq;
            f *= big(p as i64);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    let s = isqrt(&d);
    if &(&s * &s) == &d {
        f *= &s;
        d = BigInt::one();
    }
    (f, d)
}

/// Sign of `a + b*sqrt(d)` for `d >= 0` not a perfect square (or `b = 0`).
fn sign_linear_surd(a: &BigInt, b: &BigInt, d: &BigInt) -> i32 {
    if b.is_zero() || d.is_zero() {
        return sign_of(a);
    }
    if b.is_positive() {
        if !a.is_negative() {
            1
        } else {
            sign_of(&(b * b * d - a * a))
        }
    } else {
        -sign_linear_surd(&-a, &-b, d)
    }
}

fn sign_of(n: &BigInt) -> i32 {
    match n.sign() {
        num_bigint::Sign::Minus => -1,
        num_bigint::Sign::NoSign => 0,
        num_bigint::Sign::Plus => 1,
    }
}

/// Exact real of the form `(p + q*sqrt(d))/r`.
///
/// Invariants after construction: `r > 0`, `gcd(p, q, r) = 1`, `d` carries
/// no small square factor, and rational values are stored with `q = 0`,
/// `d = 0`. Equality and ordering are by real value.
#[derive(Clone)]
pub struct QuadSurd {
    p: BigInt,
    q: BigInt,
    r: BigInt,
    d: BigInt,
}

impl QuadSurd {
    pub fn new(p: BigInt, q: BigInt, r: BigInt, d: BigInt) -> Self {
        assert!(!r.is_zero(), "surd denominator must be nonzero");
        assert!(!d.is_negative(), "radicand must be nonnegative");
        let mut s = QuadSurd { p, q, r, d };
        s.normalize();
        s
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(big(n), BigInt::zero(), BigInt::one(), BigInt::zero())
    }

    pub fn from_ratio(x: &BigRational) -> Self {
        Self::new(
            x.numer().clone(),
            BigInt::zero(),
            x.denom().clone(),
            BigInt::zero(),
        )
    }

    pub fn from_parts(p: i64, q: i64, r: i64, d: i64) -> Self {
        Self::new(big(p), big(q), big(r), big(d))
    }

    pub fn sqrt_of(n: &BigInt) -> Result<Self, ExactError> {
        if n.is_negative() {
            return Err(ExactError::NegativeRadicand(n.clone()));
        }
        Ok(Self::new(BigInt::zero(), BigInt::one(), BigInt::one(), n.clone()))
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    fn normalize(&mut self) {
        if self.q.is_zero() {
            self.d = BigInt::zero();
        } else if self.d.is_zero() {
            self.q = BigInt::zero();
        } else {
            let (f, d) = extract_square(&self.d);
            if !f.is_one() {
                self.q *= &f;
            }
            self.d = d;
            if self.d.is_one() {
                let q = std::mem::take(&mut self.q);
                self.p += q;
                self.d = BigInt::zero();
            }
        }
        if self.r.is_negative() {
            self.p = -std::mem::take(&mut self.p);
            self.q = -std::mem::take(&mut self.q);
            self.r = -std::mem::take(&mut self.r);
        }
        let g = self.p.gcd(&self.q).gcd(&self.r);
        if !g.is_one() && !g.is_zero() {
            self.p /= &g;
            self.q /= &g;
            self.r /= &g;
        }
    }

    pub fn is_rational(&self) -> bool {
        self.q.is_zero()
    }

    pub fn is_zero_value(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    pub fn to_ratio(&self) -> Option<BigRational> {
        if self.is_rational() {
            Some(BigRational::new(self.p.clone(), self.r.clone()))
        } else {
            None
        }
    }

    pub fn parts(&self) -> (&BigInt, &BigInt, &BigInt, &BigInt) {
        (&self.p, &self.q, &self.r, &self.d)
    }

    /// Radicand shared by two operands, or an error when they live in
    /// genuinely different quadratic fields.
    fn shared_d(&self, other: &Self) -> Result<BigInt, ExactError> {
        if self.is_rational() {
            Ok(other.d.clone())
        } else if other.is_rational() || self.d == other.d {
            Ok(self.d.clone())
        } else {
            Err(ExactError::MixedRadicand(self.d.clone(), other.d.clone()))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, ExactError> {
        let d = self.shared_d(other)?;
        Ok(Self::new(
            &self.p * &other.r + &other.p * &self.r,
            &self.q * &other.r + &other.q * &self.r,
            &self.r * &other.r,
            d,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ExactError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, ExactError> {
        let d = self.shared_d(other)?;
        Ok(Self::new(
            &self.p * &other.p + &self.q * &other.q * &d,
            &self.p * &other.q + &self.q * &other.p,
            &self.r * &other.r,
            d,
        ))
    }

    pub fn neg(&self) -> Self {
        Self::new(-&self.p, -&self.q, self.r.clone(), self.d.clone())
    }

    pub fn abs(&self) -> Self {
        if self.sign() < 0 {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Multiplicative inverse, by conjugation: `r(p - q sqrt d)/(p^2 - q^2 d)`.
    pub fn inv(&self) -> Result<Self, ExactError> {
        if self.is_zero_value() {
            return Err(ExactError::DivisionByZero);
        }
        let norm = &self.p * &self.p - &self.q * &self.q * &self.d;
        debug_assert!(!norm.is_zero());
        Ok(Self::new(
            &self.r * &self.p,
            -(&self.r * &self.q),
            norm,
            self.d.clone(),
        ))
    }

    pub fn div(&self, other: &Self) -> Result<Self, ExactError> {
        self.mul(&other.inv()?)
    }

    pub fn add_int(&self, n: i64) -> Self {
        Self::new(
            &self.p + big(n) * &self.r,
            self.q.clone(),
            self.r.clone(),
            self.d.clone(),
        )
    }

    pub fn add_big(&self, n: &BigInt) -> Self {
        Self::new(
            &self.p + n * &self.r,
            self.q.clone(),
            self.r.clone(),
            self.d.clone(),
        )
    }

    pub fn scale_big(&self, n: &BigInt) -> Self {
        Self::new(
            &self.p * n,
            &self.q * n,
            self.r.clone(),
            self.d.clone(),
        )
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc.mul(self).expect("power stays in one field");
        }
        acc
    }

    pub fn sign(&self) -> i32 {
        sign_linear_surd(&self.p, &self.q, &self.d)
    }

    /// Total order on real values. Never fails: distinct radicands are
    /// resolved by comparing squares, which stays in integer arithmetic.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        // sign of  A + B sqrt(d1) - C sqrt(d2), all over positive r1 r2
        let a = &self.p * &other.r - &other.p * &self.r;
        let b = &self.q * &other.r;
        let c = &other.q * &self.r;
        let s = if b.is_zero() {
            sign_linear_surd(&a, &-&c, &other.d)
        } else if c.is_zero() {
            sign_linear_surd(&a, &b, &self.d)
        } else if self.d == other.d {
            sign_linear_surd(&a, &(&b - &c), &self.d)
        } else {
            let left = sign_linear_surd(&a, &b, &self.d);
            let right = sign_of(&c);
            if left != right {
                if left > right {
                    1
                } else {
                    -1
                }
            } else {
                // both sides share strict sign s; compare squares
                let rat = &a * &a + &b * &b * &self.d - &c * &c * &other.d;
                let t = sign_linear_surd(&rat, &(big(2) * &a * &b), &self.d);
                if left > 0 {
                    t
                } else {
                    -t
                }
            }
        };
        s.cmp(&0)
    }

    pub fn cmp_ratio(&self, other: &BigRational) -> Ordering {
        self.cmp_value(&Self::from_ratio(other))
    }

    /// Greatest integer `<= self`, decided by integer arithmetic only.
    pub fn floor(&self) -> BigInt {
        if self.q.is_zero() {
            return self.p.div_floor(&self.r);
        }
        let s = isqrt(&(&self.q * &self.q * &self.d));
        let num = if self.q.is_positive() {
            &self.p + s
        } else {
            &self.p - s - BigInt::one()
        };
        num.div_floor(&self.r)
    }

    /// Certified rational enclosure `[lo, hi]` with `hi - lo <= 10^-digits`.
    pub fn decimal_bounds(&self, digits: u32) -> (BigRational, BigRational) {
        if self.q.is_zero() {
            let v = BigRational::new(self.p.clone(), self.r.clone());
            return (v.clone(), v);
        }
        let scale = big(10).pow(digits);
        let den = &self.r * &scale;
        let t = self.q.abs() * &scale;
        let s = isqrt(&(&t * &t * &self.d));
        let (lo_num, hi_num) = if self.q.is_positive() {
            (&self.p * &scale + &s, &self.p * &scale + &s + BigInt::one())
        } else {
            (&self.p * &scale - &s - BigInt::one(), &self.p * &scale - &s)
        };
        (
            BigRational::new(lo_num, den.clone()),
            BigRational::new(hi_num, den),
        )
    }

    pub fn to_f64(&self) -> f64 {
        if self.q.is_zero() {
            return ratio_to_f64(&self.p, &self.r);
        }
        let (lo, _) = self.decimal_bounds(25);
        ratio_to_f64(lo.numer(), lo.denom())
    }

    /// Cheap float approximation without any big-integer square root; only
    /// good to ordinary f64 rounding, used for size estimates.
    pub fn to_f64_rough(&self) -> f64 {
        let rational = ratio_to_f64(&self.p, &self.r);
        if self.q.is_zero() {
            return rational;
        }
        rational + ratio_to_f64(&self.q, &self.r) * sqrt_f64(&self.d)
    }
}

/// `sqrt(n)` as f64 for a nonnegative big integer of any size.
fn sqrt_f64(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 52 {
        return n.to_f64().unwrap().sqrt();
    }
    let shift = (bits - 52) & !1; // even shift keeps the square root exact in scale
    let m = (n >> shift).to_f64().unwrap();
    m.sqrt() * 2f64.powi((shift / 2) as i32)
}

/// `n/d` as f64, robust to operands far outside f64 range.
pub fn ratio_to_f64(n: &BigInt, d: &BigInt) -> f64 {
    if n.is_zero() {
        return 0.0;
    }
    let bits = n.bits().max(d.bits());
    if bits <= 52 {
        return n.to_f64().unwrap() / d.to_f64().unwrap();
    }
    let shift = bits - 52;
    let nn = n >> shift;
    let dd = d >> shift;
    if dd.is_zero() {
        return if n.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    nn.to_f64().unwrap() / dd.to_f64().unwrap()
}

impl PartialEq for QuadSurd {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl Eq for QuadSurd {}

impl PartialOrd for QuadSurd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_value(other))
    }
}

impl Ord for QuadSurd {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
    }
}

impl fmt::Debug for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Canonical text form `(p+q*sqrt(d))/r`, parsed back losslessly.
impl fmt::Display for QuadSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_zero() {
            write!(f, "({})/{}", self.p, self.r)
        } else if self.q.is_negative() {
            write!(f, "({}-{}*sqrt({}))/{}", self.p, self.q.abs(), self.d, self.r)
        } else {
            write!(f, "({}+{}*sqrt({}))/{}", self.p, self.q, self.d, self.r)
        }
    }
}

impl FromStr for QuadSurd {
    type Err = ExactError;

    fn from_str(s: &str) -> Result<Self, ExactError> {
        let bad = || ExactError::Parse(s.to_string());
        let s = s.trim();
        let inner = s.strip_prefix('(').ok_or_else(bad)?;
        let close = inner.rfind(')').ok_or_else(bad)?;
        let (body, tail) = inner.split_at(close);
        let r: BigInt = tail
            .strip_prefix(")/")
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        if let Some(pos) = body.find("*sqrt(") {
            // body = p<sign>q*sqrt(d)
            let d_str = body[pos + 6..].strip_suffix(')').ok_or_else(bad)?;
            let d: BigInt = d_str.parse().map_err(|_| bad())?;
            let head = &body[..pos];
            // split p and signed q at the last +/- that is not a leading sign
            let mut split = None;
            for (i, ch) in head.char_indices().skip(1) {
                if ch == '+' || ch == '-' {
                    split = Some(i);
                }
            }
            let i = split.ok_or_else(bad)?;
            let p: BigInt = head[..i].parse().map_err(|_| bad())?;
            let q: BigInt = match &head[i..i + 1] {
                "+" => head[i + 1..].parse().map_err(|_| bad())?,
                _ => -head[i + 1..].parse::<BigInt>().map_err(|_| bad())?,
            };
            Ok(QuadSurd::new(p, q, r, d))
        } else {
            let p: BigInt = body.parse().map_err(|_| bad())?;
            Ok(QuadSurd::new(p, BigInt::zero(), r, BigInt::zero()))
        }
    }
}

/// Row-major integer 2x2 matrix, used projectively as a Moebius map.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntMatrix2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl IntMatrix2 {
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Self {
        IntMatrix2 { a, b, c, d }
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self::new(big(a), big(b), big(c), big(d))
    }

    pub fn identity() -> Self {
        Self::from_i64(1, 0, 0, 1)
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::new(
            &self.a * &o.a + &self.b * &o.c,
            &self.a * &o.b + &self.b * &o.d,
            &self.c * &o.a + &self.d * &o.c,
            &self.c * &o.b + &self.d * &o.d,
        )
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    /// Adjugate: projectively the inverse for any invertible matrix, and the
    /// exact inverse up to the sign of the determinant when `det = +-1`.
    pub fn adjugate(&self) -> Self {
        Self::new(self.d.clone(), -&self.b, -&self.c, self.a.clone())
    }

    pub fn neg(&self) -> Self {
        Self::new(-&self.a, -&self.b, -&self.c, -&self.d)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::identity();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn eq_mod_sign(&self, o: &Self) -> bool {
        *self == *o || *self == o.neg()
    }

    /// Exact image `(a x + b)/(c x + d)`; stays in the field of `x`.
    pub fn apply(&self, x: &QuadSurd) -> Result<QuadSurd, ExactError> {
        let num = x.scale_big(&self.a).add_big(&self.b);
        let den = x.scale_big(&self.c).add_big(&self.d);
        if den.is_zero_value() {
            return Err(ExactError::PoleAtInput);
        }
        num.div(&den)
    }

    pub fn apply_ratio(&self, x: &BigRational) -> Result<BigRational, ExactError> {
        let den = BigRational::from_integer(self.c.clone()) * x
            + BigRational::from_integer(self.d.clone());
        if den.is_zero() {
            return Err(ExactError::PoleAtInput);
        }
        let num = BigRational::from_integer(self.a.clone()) * x
            + BigRational::from_integer(self.b.clone());
        Ok(num / den)
    }
}

pub fn mobius_apply(m: &IntMatrix2, x: &QuadSurd) -> Result<QuadSurd, ExactError> {
    m.apply(x)
}

/// Exact roots of `A x^2 + B x + C = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Roots {
    /// Two real roots in ascending order (equal when the discriminant is 0).
    Pair(QuadSurd, QuadSurd),
    /// Degenerate linear case `A = 0, B != 0`.
    Single(QuadSurd),
}

pub fn quadratic_roots(a: &BigInt, b: &BigInt, c: &BigInt) -> Result<Roots, ExactError> {
    if a.is_zero() {
        if b.is_zero() {
            return Err(ExactError::DegenerateQuadratic);
        }
        return Ok(Roots::Single(QuadSurd::new(
            -c.clone(),
            BigInt::zero(),
            b.clone(),
            BigInt::zero(),
        )));
    }
    let disc = b * b - big(4) * a * c;
    if disc.is_negative() {
        return Err(ExactError::NegativeDiscriminant(disc));
    }
    let (f, d) = extract_square(&disc);
    let two_a = big(2) * a;
    let lo = QuadSurd::new(-b.clone(), -f.clone(), two_a.clone(), d.clone());
    let hi = QuadSurd::new(-b.clone(), f, two_a, d);
    if lo.cmp_value(&hi) == Ordering::Greater {
        Ok(Roots::Pair(hi, lo))
    } else {
        Ok(Roots::Pair(lo, hi))
    }
}

/// Some rational strictly inside the open interval `(lo, hi)`.
///
/// A float estimate of the width picks the starting denominator; the exact
/// checks below make the estimate harmless.
pub fn rational_between(lo: &QuadSurd, hi: &QuadSurd) -> BigRational {
    assert!(lo.cmp_value(hi) == Ordering::Less, "empty interval");
    let len = hi.to_f64_rough() - lo.to_f64_rough();
    let mut k: u64 = if len.is_finite() && len > 0.0 {
        (-len.log2()).ceil().max(0.0) as u64 + 1
    } else {
        60
    };
    loop {
        let scale = BigInt::one() << k;
        let m = lo.scale_big(&scale).floor() + BigInt::one();
        let cand = BigRational::new(m, scale);
        if hi.cmp_ratio(&cand) == Ordering::Greater && lo.cmp_ratio(&cand) == Ordering::Less {
            return cand;
        }
        k = (k + 1) * 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn sqrt2() -> QuadSurd {
        QuadSurd::from_parts(0, 1, 1, 2)
    }

    #[test]
    fn add_symmetric_cancellation() {
        let x = QuadSurd::from_parts(1, 1, 1, 2);
        let y = QuadSurd::from_parts(-1, 1, 1, 2);
        let s = x.add(&y).unwrap();
        assert_eq!(s, QuadSurd::from_parts(0, 2, 1, 2));
    }

    #[test]
    fn inv_times_self_is_one() {
        let x = QuadSurd::from_parts(-1, 1, 1, 2);
        let inv = x.inv().unwrap();
        assert_eq!(inv, QuadSurd::from_parts(1, 1, 1, 2));
        assert_eq!(x.mul(&inv).unwrap(), QuadSurd::one());
    }

    #[test]
    fn sqrt2_squared_is_two() {
        assert_eq!(sqrt2().mul(&sqrt2()).unwrap(), QuadSurd::from_int(2));
    }

    #[test]
    fn mixed_radicand_rejected_for_field_ops() {
        let x = sqrt2();
        let y = QuadSurd::from_parts(0, 1, 1, 3);
        assert!(matches!(x.add(&y), Err(ExactError::MixedRadicand(_, _))));
        assert!(matches!(x.mul(&y), Err(ExactError::MixedRadicand(_, _))));
    }

    #[test]
    fn cmp_across_radicands() {
        // sqrt2 - 1  <  (sqrt5 - 1)/2
        let a = QuadSurd::from_parts(-1, 1, 1, 2);
        let b = QuadSurd::from_parts(-1, 1, 2, 5);
        assert_eq!(a.cmp_value(&b), Ordering::Less);
        assert_eq!(a.cmp_value(&a), Ordering::Equal);
        // (-2 + sqrt10)/3 < sqrt2 - 1   (appendix row (3,3) is nonempty)
        let c = QuadSurd::from_parts(-2, 1, 3, 10);
        assert_eq!(c.cmp_value(&a), Ordering::Less);
    }

    #[test]
    fn cmp_equal_values_across_representations() {
        // 2*sqrt(2) == sqrt(8) before square extraction
        let a = QuadSurd::new(big(0), big(2), big(1), big(2));
        let b = QuadSurd::new(big(0), big(1), big(1), big(8));
        assert_eq!(a, b);
    }

    #[test]
    fn floor_examples() {
        assert_eq!(sqrt2().floor(), big(1));
        let golden_conj = QuadSurd::from_parts(-1, 1, 2, 5);
        assert_eq!(golden_conj.floor(), big(0));
        // 10/3 + 1/2 = 23/6; integer-division oracle
        let x = QuadSurd::from_ratio(&ratio(23, 6));
        assert_eq!(x.floor(), big(23).div_floor(&big(6)));
        assert_eq!(QuadSurd::from_parts(-3, -1, 2, 2).floor(), big(-3));
    }

    #[test]
    fn mobius_examples() {
        let x = QuadSurd::from_parts(-1, 1, 1, 2);
        assert_eq!(IntMatrix2::identity().apply(&x).unwrap(), x);
        let swap = IntMatrix2::from_i64(0, 1, 1, 0);
        assert_eq!(
            swap.apply(&QuadSurd::from_int(2)).unwrap(),
            QuadSurd::from_ratio(&ratio(1, 2))
        );
        let shift = IntMatrix2::from_i64(1, 1, 0, 1);
        assert_eq!(shift.apply(&x).unwrap(), sqrt2());
    }

    #[test]
    fn quadratic_root_examples() {
        // x^2 + 2x - 1 = 0  ->  -1 +- sqrt2
        let Roots::Pair(lo, hi) = quadratic_roots(&big(1), &big(2), &big(-1)).unwrap() else {
            panic!("expected pair")
        };
        assert_eq!(lo, QuadSurd::from_parts(-1, -1, 1, 2));
        assert_eq!(hi, QuadSurd::from_parts(-1, 1, 1, 2));
        // 2x^2 + 2x - 1 = 0 -> (-1 +- sqrt3)/2, discriminant 12 reduced to 3
        let Roots::Pair(lo, hi) = quadratic_roots(&big(2), &big(2), &big(-1)).unwrap() else {
            panic!("expected pair")
        };
        assert_eq!(lo, QuadSurd::from_parts(-1, -1, 2, 3));
        assert_eq!(hi, QuadSurd::from_parts(-1, 1, 2, 3));
        // x^2 - x = 0 -> {0, 1}
        let Roots::Pair(lo, hi) = quadratic_roots(&big(1), &big(-1), &big(0)).unwrap() else {
            panic!("expected pair")
        };
        assert_eq!(lo, QuadSurd::zero());
        assert_eq!(hi, QuadSurd::one());
        // degenerate linear
        match quadratic_roots(&big(0), &big(3), &big(-6)).unwrap() {
            Roots::Single(x) => assert_eq!(x, QuadSurd::from_int(2)),
            _ => panic!("expected single root"),
        }
        assert!(matches!(
            quadratic_roots(&big(1), &big(0), &big(1)),
            Err(ExactError::NegativeDiscriminant(_))
        ));
    }

    #[test]
    fn roots_substitute_to_exact_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let a = rng.gen_range(1..50i64);
            let b = rng.gen_range(-50..50i64);
            let c = rng.gen_range(-50..0i64);
            let Ok(Roots::Pair(lo, hi)) = quadratic_roots(&big(a), &big(b), &big(c)) else {
                continue;
            };
            for x in [lo, hi] {
                let val = x
                    .mul(&x)
                    .unwrap()
                    .scale_big(&big(a))
                    .add(&x.scale_big(&big(b)))
                    .unwrap()
                    .add_big(&big(c));
                assert!(val.is_zero_value(), "root does not satisfy quadratic");
            }
        }
    }

    #[test]
    fn cmp_agrees_with_rational_order() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let a = ratio(rng.gen_range(-1000..1000), rng.gen_range(1..1000));
            let b = ratio(rng.gen_range(-1000..1000), rng.gen_range(1..1000));
            let (x, y) = (QuadSurd::from_ratio(&a), QuadSurd::from_ratio(&b));
            assert_eq!(x.cmp_value(&y), a.cmp(&b));
        }
    }

    #[test]
    fn mobius_composition() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let m = IntMatrix2::from_i64(
                rng.gen_range(-9..10),
                rng.gen_range(-9..10),
                rng.gen_range(-9..10),
                rng.gen_range(-9..10),
            );
            let n = IntMatrix2::from_i64(
                rng.gen_range(-9..10),
                rng.gen_range(-9..10),
                rng.gen_range(-9..10),
                rng.gen_range(-9..10),
            );
            let x = QuadSurd::from_parts(rng.gen_range(-5..6), 1, rng.gen_range(1..5), 7);
            let inner = match n.apply(&x) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let (lhs, rhs) = match (m.mul(&n).apply(&x), m.apply(&inner)) {
                (Ok(l), Ok(r)) => (l, r),
                _ => continue,
            };
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn rational_between_is_strictly_inside() {
        let lo = QuadSurd::from_parts(-1, 1, 1, 2);
        let hi = QuadSurd::from_parts(-1, 1, 2, 5);
        let m = rational_between(&lo, &hi);
        assert_eq!(lo.cmp_ratio(&m), Ordering::Less);
        assert_eq!(hi.cmp_ratio(&m), Ordering::Greater);
    }

    #[test]
    fn display_parse_round_trip() {
        for s in [
            QuadSurd::from_parts(-2, 1, 3, 10),
            QuadSurd::from_parts(0, -3, 7, 5),
            QuadSurd::from_ratio(&ratio(-22, 7)),
            QuadSurd::zero(),
        ] {
            let text = s.to_string();
            let back: QuadSurd = text.parse().unwrap();
            assert_eq!(back, s);
            let (p, q, r, d) = s.parts();
            let (p2, q2, r2, d2) = back.parts();
            assert_eq!((p, q, r, d), (p2, q2, r2, d2));
        }
    }

    proptest! {
        #[test]
        fn floor_sandwich(p in -1_000_000i64..1_000_000, q in -1_000_000i64..1_000_000,
                          r in 1i64..1_000_000, d in 0i64..1000) {
            let x = QuadSurd::from_parts(p, q, r, d);
            let f = x.floor();
            let lo = QuadSurd::new(f.clone(), BigInt::zero(), BigInt::one(), BigInt::zero());
            let hi = QuadSurd::new(&f + 1, BigInt::zero(), BigInt::one(), BigInt::zero());
            prop_assert!(lo.cmp_value(&x) != Ordering::Greater);
            prop_assert!(hi.cmp_value(&x) == Ordering::Greater);
        }

        #[test]
        fn decimal_bounds_enclose(p in -1000i64..1000, q in -1000i64..1000, r in 1i64..1000,
                                  d in 0i64..500) {
            let x = QuadSurd::from_parts(p, q, r, d);
            let (lo, hi) = x.decimal_bounds(12);
            prop_assert!(x.cmp_ratio(&lo) != Ordering::Less);
            prop_assert!(x.cmp_ratio(&hi) != Ordering::Greater);
            prop_assert!(&hi - &lo <= ratio(1, 1_000_000_000_00));
        }
    }
}
