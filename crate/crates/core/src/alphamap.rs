//! The interval-map family `T(x) = 1/|x| - floor(1/|x| + 1 - alpha)` on
//! `[alpha-1, alpha]`, with two orbit engines sharing one digit rule:
//! exact (quadratic surds or rationals, for the matching machinery) and
//! floating point (for the Monte-Carlo estimators).
//!
//! Boundary convention: digits are extracted with a plain floor, so the
//! cylinder of a digit is half open and codings are right-continuous in `x`.
//! A tie `1/|x| + 1 - alpha` landing exactly on an integer only affects a
//! measure-zero set of inputs.

use crate::exactnum::{big, ExactError, IntMatrix2, QuadSurd};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("point {0} lies outside [alpha-1, alpha]")]
    OutOfDomain(String),
    #[error("alpha {0} outside (0, 1]")]
    BadAlpha(String),
    #[error("partial quotient does not fit in u64")]
    DigitOverflow,
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Orbit points with absolute value at or below this threshold are treated
/// as zero by the floating-point engine.
pub const ZERO_EPS: f64 = 1e-16;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// One step of the expansion: the pair `(a, eps)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Digit {
    pub a: u64,
    pub eps: Sign,
}

impl Digit {
    pub fn new(a: u64, eps: Sign) -> Self {
        debug_assert!(a >= 1);
        Digit { a, eps }
    }

    pub fn plus(a: u64) -> Self {
        Self::new(a, Sign::Plus)
    }

    pub fn minus(a: u64) -> Self {
        Self::new(a, Sign::Minus)
    }

    /// The factor `[[0, eps], [1, a]]` of the orbit matrix.
    pub fn matrix(&self) -> IntMatrix2 {
        IntMatrix2::new(
            BigInt::zero(),
            big(self.eps.value()),
            big(1),
            big(self.a as i64),
        )
    }
}

impl fmt::Display for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.eps {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(f, "({},{})", self.a, s)
    }
}

/// Digit-string text with run-length groups: `(3,+)(4,-)^2(2,-)`.
pub fn format_digits(digits: &[Digit]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < digits.len() {
        let mut j = i;
        while j < digits.len() && digits[j] == digits[i] {
            j += 1;
        }
        out.push_str(&digits[i].to_string());
        if j - i > 1 {
            out.push_str(&format!("^{}", j - i));
        }
        i = j;
    }
    out
}

/// The parameter, kept exact with a cached float approximation.
#[derive(Clone, Debug)]
pub struct AlphaParam {
    value: QuadSurd,
    float: f64,
}

impl AlphaParam {
    pub fn new(value: QuadSurd) -> Result<Self, MapError> {
        if value.sign() <= 0 || value.cmp_value(&QuadSurd::one()) == Ordering::Greater {
            return Err(MapError::BadAlpha(value.to_string()));
        }
        let float = value.to_f64();
        Ok(AlphaParam { value, float })
    }

    pub fn from_ratio(r: &BigRational) -> Result<Self, MapError> {
        Self::new(QuadSurd::from_ratio(r))
    }

    pub fn value(&self) -> &QuadSurd {
        &self.value
    }

    pub fn to_f64(&self) -> f64 {
        self.float
    }
}

/// One exact step. Returns the image and the digit consumed, or `None` for
/// the fixed point at zero.
pub fn t_alpha_step(
    alpha: &QuadSurd,
    x: &QuadSurd,
) -> Result<(QuadSurd, Option<Digit>), MapError> {
    let lo = alpha.add_int(-1);
    if x.cmp_value(&lo) == Ordering::Less || x.cmp_value(alpha) == Ordering::Greater {
        return Err(MapError::OutOfDomain(x.to_string()));
    }
    if x.is_zero_value() {
        return Ok((QuadSurd::zero(), None));
    }
    let inv = x.abs().inv()?;
    let a = inv.add_int(1).sub(alpha)?.floor();
    debug_assert!(a.is_positive());
    let eps = if x.sign() > 0 { Sign::Plus } else { Sign::Minus };
    debug_assert!(!(eps == Sign::Minus && a == big(1)), "digit (1,-) cannot arise in the domain");
    let next = inv.add_big(&-&a);
    let digit = Digit::new(a.to_u64().ok_or(MapError::DigitOverflow)?, eps);
    Ok((next, Some(digit)))
}

/// Same step over plain rationals, for the orbit-of-a-rational fast path.
pub fn t_alpha_step_ratio(
    alpha: &BigRational,
    x: &BigRational,
) -> Result<(BigRational, Option<Digit>), MapError> {
    let one = BigRational::from_integer(big(1));
    let lo = alpha - &one;
    if *x < lo || x > alpha {
        return Err(MapError::OutOfDomain(x.to_string()));
    }
    if x.is_zero() {
        return Ok((BigRational::zero(), None));
    }
    let inv = BigRational::new(x.denom().abs(), x.numer().abs());
    let a = (&inv + &one - alpha).floor().to_integer();
    debug_assert!(a.is_positive());
    let eps = if x.is_positive() { Sign::Plus } else { Sign::Minus };
    let next = &inv - BigRational::from_integer(a.clone());
    let digit = Digit::new(a.to_u64().ok_or(MapError::DigitOverflow)?, eps);
    Ok((next, Some(digit)))
}

/// Exact orbit record: `points[0] = x` and `points[i+1] = T(points[i])`,
/// with `digits[i]` the digit consumed at step `i+1`. The orbit stops early
/// when it reaches the fixed point 0.
#[derive(Clone, Debug)]
pub struct OrbitRecord {
    pub points: Vec<QuadSurd>,
    pub digits: Vec<Digit>,
}

impl OrbitRecord {
    pub fn hit_zero(&self) -> bool {
        self.points.last().map(|p| p.is_zero_value()).unwrap_or(false)
    }
}

pub fn expand(alpha: &QuadSurd, x: &QuadSurd, n: usize) -> Result<OrbitRecord, MapError> {
    let mut points = vec![x.clone()];
    let mut digits = Vec::new();
    for _ in 0..n {
        let current = points.last().unwrap();
        if current.is_zero_value() {
            break;
        }
        let (next, digit) = t_alpha_step(alpha, current)?;
        match digit {
            Some(d) => digits.push(d),
            None => break,
        }
        points.push(next);
    }
    Ok(OrbitRecord { points, digits })
}

/// Rational-orbit variant of [`expand`].
pub fn expand_ratio(
    alpha: &BigRational,
    x: &BigRational,
    n: usize,
) -> Result<(Vec<BigRational>, Vec<Digit>), MapError> {
    let mut points = vec![x.clone()];
    let mut digits = Vec::new();
    for _ in 0..n {
        let current = points.last().unwrap();
        if current.is_zero() {
            break;
        }
        let (next, digit) = t_alpha_step_ratio(alpha, current)?;
        match digit {
            Some(d) => digits.push(d),
            None => break,
        }
        points.push(next);
    }
    Ok((points, digits))
}

/// Convergents `p_n/q_n` from the recurrence
/// `p_{n+1} = eps_{n+1} p_{n-1} + a_{n+1} p_n` (and likewise for `q`),
/// seeded with `p_{-1} = 1, p_0 = 0, q_{-1} = 0, q_0 = 1`.
/// Entry `i` of the result is `p_i/q_i`, starting at `p_0/q_0 = 0/1`.
pub fn convergents(digits: &[Digit]) -> Vec<BigRational> {
    let (mut p_prev, mut p) = (big(1), big(0));
    let (mut q_prev, mut q) = (big(0), big(1));
    let mut out = vec![BigRational::new(p.clone(), q.clone())];
    for d in digits {
        let e = big(d.eps.value());
        let a = big(d.a as i64);
        let p_next = &e * &p_prev + &a * &p;
        let q_next = &e * &q_prev + &a * &q;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        debug_assert!(q.is_positive(), "q_n must stay positive");
        out.push(BigRational::new(p.clone(), q.clone()));
    }
    out
}

/// Product of the per-digit factors; satisfies `T^n(x) = M^{-1}(x)`.
pub fn orbit_matrix(digits: &[Digit]) -> IntMatrix2 {
    let mut m = IntMatrix2::identity();
    for d in digits {
        m = m.mul(&d.matrix());
    }
    m
}

/// One floating-point step; the caller is responsible for the zero cutoff.
#[inline]
pub fn step_f64(alpha: f64, x: f64) -> (f64, u64, i8) {
    let inv = 1.0 / x.abs();
    let a = (inv + 1.0 - alpha).floor();
    (inv - a, a as u64, if x > 0.0 { 1 } else { -1 })
}

/// Floating orbit `x, T(x), ..., T^n(x)`; stops after a point within
/// [`ZERO_EPS`] of the origin.
pub fn orbit_f64(alpha: f64, x0: f64, n: usize) -> Vec<f64> {
    let mut points = Vec::with_capacity(n + 1);
    points.push(x0);
    let mut x = x0;
    for _ in 0..n {
        if x.abs() <= ZERO_EPS {
            break;
        }
        x = step_f64(alpha, x).0;
        points.push(x);
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{quadratic_roots, ratio, Roots};
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn step_examples() {
        let half = QuadSurd::from_ratio(&ratio(1, 2));
        let (next, d) = t_alpha_step(&half, &QuadSurd::from_ratio(&ratio(3, 10))).unwrap();
        assert_eq!(next, QuadSurd::from_ratio(&ratio(1, 3)));
        assert_eq!(d, Some(Digit::plus(3)));

        let one = QuadSurd::one();
        let (next, d) = t_alpha_step(&one, &QuadSurd::from_ratio(&ratio(2, 7))).unwrap();
        assert_eq!(next, QuadSurd::from_ratio(&ratio(1, 2)));
        assert_eq!(d, Some(Digit::plus(3)));

        let a = ratio(2, 5);
        let (next, d) = t_alpha_step_ratio(&a, &ratio(2, 5)).unwrap();
        assert_eq!(next, ratio(-1, 2));
        assert_eq!(d, Some(Digit::plus(3)));

        assert!(t_alpha_step(&half, &QuadSurd::one()).is_err());
    }

    #[test]
    fn expand_examples() {
        let half = QuadSurd::from_ratio(&ratio(1, 2));
        let rec = expand(&half, &QuadSurd::from_ratio(&ratio(3, 10)), 2).unwrap();
        assert_eq!(rec.digits, vec![Digit::plus(3), Digit::plus(3)]);
        assert!(rec.hit_zero());

        let rec = expand(&half, &QuadSurd::zero(), 5).unwrap();
        assert!(rec.digits.is_empty());

        // alpha = 0.39 sits in I_{2/5}; the orbit of alpha starts (3,+),(2,-)
        let a = ratio(39, 100);
        let (_, digits) = expand_ratio(&a, &a, 2).unwrap();
        assert_eq!(digits, vec![Digit::plus(3), Digit::minus(2)]);
    }

    #[test]
    fn convergents_examples() {
        assert_eq!(convergents(&[]), vec![ratio(0, 1)]);
        let c = convergents(&[Digit::plus(3)]);
        assert_eq!(c.last().unwrap(), &ratio(1, 3));
        let c = convergents(&[Digit::plus(3), Digit::minus(2)]);
        assert_eq!(c.last().unwrap(), &ratio(2, 5));
    }

    #[test]
    fn orbit_matrix_examples() {
        assert_eq!(orbit_matrix(&[]), IntMatrix2::identity());
        assert_eq!(
            orbit_matrix(&[Digit::plus(3)]),
            IntMatrix2::from_i64(0, 1, 1, 3)
        );
        let m = orbit_matrix(&[Digit::plus(3), Digit::minus(2)]);
        let expect = IntMatrix2::from_i64(0, 1, 1, 3).mul(&IntMatrix2::from_i64(0, -1, 1, 2));
        assert_eq!(m, expect);
    }

    #[test]
    fn matrix_inverse_reproduces_orbit() {
        let alpha = QuadSurd::from_ratio(&ratio(41, 100));
        let x = QuadSurd::from_parts(-1, 1, 3, 3); // (-1 + sqrt3)/3 ~ 0.244
        let rec = expand(&alpha, &x, 12).unwrap();
        for n in 0..rec.digits.len() {
            let m = orbit_matrix(&rec.digits[..=n]);
            // adjugate is the projective inverse
            let back = m.adjugate().apply(&x).unwrap();
            assert_eq!(back, rec.points[n + 1], "mismatch at step {}", n + 1);
        }
    }

    #[test]
    fn convergents_match_matrix_columns() {
        let alpha = QuadSurd::from_ratio(&ratio(3, 10));
        let x = QuadSurd::from_parts(-1, 1, 8, 5); // ~0.1545
        let rec = expand(&alpha, &x, 10).unwrap();
        let convs = convergents(&rec.digits);
        for n in 1..=rec.digits.len() {
            let m = orbit_matrix(&rec.digits[..n]);
            let (pn, qn) = (convs[n].numer().clone(), convs[n].denom().clone());
            // second column is (p_n, q_n) up to sign
            assert!(
                (m.b == pn && m.d == qn) || (m.b == -&pn && m.d == -&qn),
                "column mismatch at {n}"
            );
        }
    }

    #[test]
    fn domain_invariance_random() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut tested = 0;
        while tested < 1000 {
            let a = rng.gen_range(1..20i64);
            let b = rng.gen_range(-20..20i64);
            let c = rng.gen_range(-20..0i64);
            let Ok(Roots::Pair(_, alpha)) = quadratic_roots(&big(a), &big(b), &big(c)) else {
                continue;
            };
            if alpha.sign() <= 0 || alpha.cmp_value(&QuadSurd::one()) != Ordering::Less {
                continue;
            }
            let lo = alpha.add_int(-1);
            // random x = alpha - t with rational t in [0, 1]
            let t = ratio(rng.gen_range(0..=100), 100);
            let x = alpha.sub(&QuadSurd::from_ratio(&t)).unwrap();
            let rec = expand(&alpha, &x, 15).unwrap();
            for p in &rec.points {
                assert!(p.cmp_value(&lo) != Ordering::Less, "below alpha-1");
                assert!(p.cmp_value(&alpha) != Ordering::Greater, "above alpha");
            }
            tested += 1;
        }
    }

    #[test]
    fn gauss_map_at_alpha_one() {
        let one = QuadSurd::one();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..200 {
            let den = rng.gen_range(2..500i64);
            let num = rng.gen_range(1..den);
            let x = ratio(num, den);
            let rec = expand(&one, &QuadSurd::from_ratio(&x), 64).unwrap();
            assert!(rec.digits.iter().all(|d| d.eps == Sign::Plus));
            let quots: Vec<u64> = rec.digits.iter().map(|d| d.a).collect();
            assert_eq!(quots, crate::cfrac::rational_quotients(&x));
        }
    }

    #[test]
    fn digit_text_format() {
        let digits = [
            Digit::plus(3),
            Digit::minus(4),
            Digit::minus(4),
            Digit::minus(2),
        ];
        assert_eq!(format_digits(&digits), "(3,+)(4,-)^2(2,-)");
    }
}
