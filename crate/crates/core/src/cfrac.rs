//! Regular continued fractions over exact types: expansion of quadratic
//! surds with period detection, evaluation of periodic expansions, conjugate
//! strings, and the pseudocenter (minimal-denominator rational) of an
//! interval.
//!
//! Labels and canonical periods are kept apart on purpose. A rational `r`
//! has two finite expansions `[0; a_1..a_m, 1]` and `[0; a_1..a_m + 1]`;
//! both strings act as *labels* of the interval `I_r`, even when the
//! endlessly repeated string is not a minimal period (`{1,1}` repeats to the
//! same value as `{1}`). The combinatorial rules downstream consume labels,
//! never canonical periods.

use crate::exactnum::{
    big, quadratic_roots, rational_between, ExactError, IntMatrix2, QuadSurd, Roots,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CfracError {
    #[error("interval is empty")]
    EmptyInterval,
    #[error("interval is a single point")]
    PointInterval,
    #[error("invalid continued-fraction string: {0}")]
    InvalidString(String),
    #[error("partial quotient does not fit in u64")]
    QuotientOverflow,
    #[error("value out of range (0,1)")]
    OutOfRange,
    #[error("expansion failed to cycle within the iteration cap")]
    ExpansionStuck,
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Finite string of positive partial quotients; the label type.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CFString(Vec<u64>);

impl CFString {
    pub fn new(quotients: Vec<u64>) -> Result<Self, CfracError> {
        if quotients.is_empty() || quotients.iter().any(|&a| a == 0) {
            return Err(CfracError::InvalidString(format!("{quotients:?}")));
        }
        Ok(CFString(quotients))
    }

    pub fn from_slice(quotients: &[u64]) -> Self {
        Self::new(quotients.to_vec()).expect("valid quotients")
    }

    pub fn quotients(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sum(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn concat(&self, other: &CFString) -> CFString {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        CFString(v)
    }

    /// Value of the finite continued fraction `[0; self]`.
    pub fn finite_value(&self) -> BigRational {
        let mut t = BigRational::zero();
        for &a in self.0.iter().rev() {
            t = (BigRational::from_integer(big(a as i64)) + t).recip();
        }
        t
    }
}

impl fmt::Display for CFString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for CFString {
    type Err = CfracError;

    fn from_str(s: &str) -> Result<Self, CfracError> {
        let quots: Result<Vec<u64>, _> = s.split(',').map(|t| t.trim().parse::<u64>()).collect();
        CFString::new(quots.map_err(|_| CfracError::InvalidString(s.to_string()))?)
    }
}

/// The conjugate of a label: `{a_1..a_m, 1} <-> {a_1..a_m + 1}`.
///
/// Both strings evaluate to the same rational. The singleton `{1}` is the
/// one degenerate case; it is mapped to `{2}`, matching the string recursion
/// `S_{n+1} = (S_n S_n)'` started from `{1}`.
pub fn conjugate_string(s: &CFString) -> CFString {
    let mut v = s.0.clone();
    if v == [1] {
        return CFString(vec![2]);
    }
    if *v.last().unwrap() == 1 {
        v.pop();
        *v.last_mut().unwrap() += 1;
    } else {
        *v.last_mut().unwrap() -= 1;
        v.push(1);
    }
    CFString(v)
}

/// Eventually periodic continued fraction `[0; pre, (per)^inf]` in canonical
/// form: the period is minimal and cannot be rotated back into the
/// preperiod. An empty period encodes a finite (rational) expansion.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PeriodicCF {
    preperiod: Vec<u64>,
    period: Vec<u64>,
}

impl PeriodicCF {
    pub fn new(preperiod: Vec<u64>, period: Vec<u64>) -> Self {
        let mut cf = PeriodicCF { preperiod, period };
        cf.canonicalize();
        cf
    }

    pub fn finite(quotients: Vec<u64>) -> Self {
        Self::new(quotients, Vec::new())
    }

    pub fn purely_periodic(period: &CFString) -> Self {
        Self::new(Vec::new(), period.0.clone())
    }

    pub fn preperiod(&self) -> &[u64] {
        &self.preperiod
    }

    pub fn period(&self) -> &[u64] {
        &self.period
    }

    pub fn is_finite(&self) -> bool {
        self.period.is_empty()
    }

    fn canonicalize(&mut self) {
        if self.period.is_empty() {
            return;
        }
        // minimal period: smallest divisor length that tiles the cycle
        let n = self.period.len();
        for len in 1..n {
            if n % len == 0 && (0..n).all(|i| self.period[i] == self.period[i % len]) {
                self.period.truncate(len);
                break;
            }
        }
        // absorb a preperiod tail that merely repeats the period
        while let Some(&last) = self.preperiod.last() {
            if last == *self.period.last().unwrap() {
                self.preperiod.pop();
                self.period.rotate_right(1);
            } else {
                break;
            }
        }
    }

    /// Quotient at 0-based position `i`; `None` means past the end of a
    /// finite expansion (the +infinity convention).
    pub fn quotient_at(&self, i: usize) -> Option<u64> {
        if i < self.preperiod.len() {
            Some(self.preperiod[i])
        } else if self.period.is_empty() {
            None
        } else {
            Some(self.period[(i - self.preperiod.len()) % self.period.len()])
        }
    }

    pub fn value(&self) -> QuadSurd {
        cf_value(self)
    }
}

impl fmt::Display for PeriodicCF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pre: Vec<String> = self.preperiod.iter().map(|a| a.to_string()).collect();
        let per: Vec<String> = self.period.iter().map(|a| a.to_string()).collect();
        match (pre.is_empty(), per.is_empty()) {
            (true, true) => write!(f, "[0]"),
            (false, true) => write!(f, "[0;{}]", pre.join(",")),
            (true, false) => write!(f, "[0;({})^inf]", per.join(",")),
            (false, false) => write!(f, "[0;{},({})^inf]", pre.join(","), per.join(",")),
        }
    }
}

fn digit_matrix(a: u64) -> IntMatrix2 {
    IntMatrix2::new(BigInt::zero(), BigInt::one(), BigInt::one(), big(a as i64))
}

fn product_matrix(quots: &[u64]) -> IntMatrix2 {
    let mut m = IntMatrix2::identity();
    for &a in quots {
        m = m.mul(&digit_matrix(a));
    }
    m
}

/// Exact value of an eventually periodic continued fraction.
///
/// The periodic tail is the fixed point in `(0,1)` of its quotient-product
/// Moebius map; the preperiod is then applied on top.
pub fn cf_value(c: &PeriodicCF) -> QuadSurd {
    let tail = if c.period.is_empty() {
        QuadSurd::zero()
    } else {
        let m = product_matrix(&c.period);
        // y = (a y + b)/(c y + d)  =>  c y^2 + (d - a) y - b = 0
        let roots = quadratic_roots(&m.c, &(&m.d - &m.a), &(-m.b.clone()))
            .expect("periodic quotient matrix yields a real quadratic");
        let (lo, hi) = match roots {
            Roots::Pair(lo, hi) => (lo, hi),
            Roots::Single(x) => (x.clone(), x),
        };
        let zero = QuadSurd::zero();
        let one = QuadSurd::one();
        let inside =
            |x: &QuadSurd| x.cmp_value(&zero) == Ordering::Greater && x.cmp_value(&one) != Ordering::Greater;
        if inside(&lo) {
            debug_assert!(!inside(&hi) || lo == hi, "fixed point in (0,1] must be unique");
            lo
        } else {
            debug_assert!(inside(&hi), "periodic CF value must lie in (0,1]");
            hi
        }
    };
    if c.preperiod.is_empty() {
        tail
    } else {
        product_matrix(&c.preperiod)
            .apply(&tail)
            .expect("preperiod map has no pole on (0,1)")
    }
}

/// Canonical finite expansion of `r` in `(0,1)`; last quotient is >= 2.
pub fn rational_quotients(r: &BigRational) -> Vec<u64> {
    assert!(r.is_positive() && *r < BigRational::one());
    let mut n = r.numer().clone();
    let mut d = r.denom().clone();
    let mut out = Vec::new();
    while !n.is_zero() {
        let (q, rem) = num_integer::Integer::div_rem(&d, &n);
        out.push(q.to_u64().expect("quotient fits u64"));
        d = std::mem::replace(&mut n, rem);
    }
    out
}

/// Regular continued fraction of `x` in `(0,1)`, with exact period
/// detection by first repetition of the remainder state.
pub fn cf_expand(x: &QuadSurd) -> Result<PeriodicCF, CfracError> {
    let zero = QuadSurd::zero();
    let one = QuadSurd::one();
    if x.cmp_value(&zero) != Ordering::Greater || x.cmp_value(&one) != Ordering::Less {
        return Err(CfracError::OutOfRange);
    }
    if let Some(r) = x.to_ratio() {
        return Ok(PeriodicCF::finite(rational_quotients(&r)));
    }
    let mut quots: Vec<u64> = Vec::new();
    let mut seen: HashMap<(BigInt, BigInt, BigInt, BigInt), usize> = HashMap::new();
    let mut state = x.clone();
    for _ in 0..100_000 {
        let (p, q, r, d) = state.parts();
        let key = (p.clone(), q.clone(), r.clone(), d.clone());
        if let Some(&first) = seen.get(&key) {
            let period = quots.split_off(first);
            return Ok(PeriodicCF::new(quots, period));
        }
        seen.insert(key, quots.len());
        let inv = state.inv()?;
        let a = inv.floor();
        quots.push(a.to_u64().ok_or(CfracError::QuotientOverflow)?);
        state = inv.add_big(&-a);
        debug_assert!(!state.is_rational());
    }
    Err(CfracError::ExpansionStuck)
}

/// Interval with exact endpoints and per-side closedness.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Interval {
    pub lo: QuadSurd,
    pub hi: QuadSurd,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: QuadSurd, hi: QuadSurd, lo_closed: bool, hi_closed: bool) -> Self {
        assert!(lo.cmp_value(&hi) != Ordering::Greater, "interval endpoints out of order");
        Interval { lo, hi, lo_closed, hi_closed }
    }

    pub fn open(lo: QuadSurd, hi: QuadSurd) -> Self {
        Self::new(lo, hi, false, false)
    }

    pub fn closed(lo: QuadSurd, hi: QuadSurd) -> Self {
        Self::new(lo, hi, true, true)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains_ratio(&self, r: &BigRational) -> bool {
        let lo = self.lo.cmp_ratio(r);
        let hi = self.hi.cmp_ratio(r);
        (lo == Ordering::Less || (self.lo_closed && lo == Ordering::Equal))
            && (hi == Ordering::Greater || (self.hi_closed && hi == Ordering::Equal))
    }

    pub fn contains(&self, x: &QuadSurd) -> bool {
        let lo = self.lo.cmp_value(x);
        let hi = self.hi.cmp_value(x);
        (lo == Ordering::Less || (self.lo_closed && lo == Ordering::Equal))
            && (hi == Ordering::Greater || (self.hi_closed && hi == Ordering::Equal))
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lo, lo_closed) = match self.lo.cmp_value(&other.lo) {
            Ordering::Less => (other.lo.clone(), other.lo_closed),
            Ordering::Greater => (self.lo.clone(), self.lo_closed),
            Ordering::Equal => (self.lo.clone(), self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.cmp_value(&other.hi) {
            Ordering::Less => (self.hi.clone(), self.hi_closed),
            Ordering::Greater => (other.hi.clone(), other.hi_closed),
            Ordering::Equal => (self.hi.clone(), self.hi_closed && other.hi_closed),
        };
        match lo.cmp_value(&hi) {
            Ordering::Greater => None,
            Ordering::Equal if !(lo_closed && hi_closed) => None,
            _ => Some(Interval { lo, hi, lo_closed, hi_closed }),
        }
    }

    /// Certified rational bounds on the length, `hi - lo`.
    pub fn length_bounds(&self, digits: u32) -> (BigRational, BigRational) {
        let (lo_lo, lo_hi) = self.lo.decimal_bounds(digits);
        let (hi_lo, hi_hi) = self.hi.decimal_bounds(digits);
        (hi_lo - lo_hi, hi_hi - lo_lo)
    }

    pub fn length_f64(&self) -> f64 {
        let (lo, hi) = self.length_bounds(30);
        crate::exactnum::ratio_to_f64(&(&lo + &hi).numer().clone(), &(&lo + &hi).denom().clone()) / 2.0
    }

    /// Some rational strictly between the endpoints.
    pub fn sample_rational(&self) -> BigRational {
        rational_between(&self.lo, &self.hi)
    }
}

/// `I_r`: the interval whose endpoints repeat the two expansions of `r`
/// endlessly, together with the two labels ordered as `(label_lo, label_hi)`.
pub fn interval_for_rational(r: &BigRational) -> (Interval, CFString, CFString) {
    let canonical = CFString(rational_quotients(r));
    let other = conjugate_string(&canonical);
    let v_canonical = cf_value(&PeriodicCF::purely_periodic(&canonical));
    let v_other = cf_value(&PeriodicCF::purely_periodic(&other));
    if v_canonical.cmp_value(&v_other) == Ordering::Less {
        (Interval::open(v_canonical, v_other), canonical, other)
    } else {
        (Interval::open(v_other, v_canonical), other, canonical)
    }
}

/// Quotient stream of an interval endpoint, with the side-dependent
/// expansion choice for rational endpoints:
/// for a left endpoint the even-length form is the limit from above, for a
/// right endpoint the odd-length form is the limit from below. A finite
/// stream continues with the +infinity quotient; the endpoint 0 is the pure
/// infinity stream.
enum QuotStream {
    Finite(Vec<u64>),
    Periodic(PeriodicCF),
}

impl QuotStream {
    fn for_endpoint(x: &QuadSurd, is_left: bool) -> Result<QuotStream, CfracError> {
        if x.is_zero_value() {
            return Ok(QuotStream::Finite(Vec::new()));
        }
        if x == &QuadSurd::one() {
            // 1 = [0;1]: odd form is itself; even form would be the empty
            // string of value 0, which never arises as a left endpoint.
            return Ok(QuotStream::Finite(vec![1]));
        }
        if let Some(r) = x.to_ratio() {
            let mut quots = rational_quotients(&r);
            let want_even = is_left;
            if (quots.len() % 2 == 0) != want_even {
                let last = quots.last_mut().unwrap();
                debug_assert!(*last >= 2);
                *last -= 1;
                quots.push(1);
            }
            Ok(QuotStream::Finite(quots))
        } else {
            Ok(QuotStream::Periodic(cf_expand(x)?))
        }
    }

    fn at(&self, i: usize) -> Option<u64> {
        match self {
            QuotStream::Finite(q) => q.get(i).copied(),
            QuotStream::Periodic(cf) => cf.quotient_at(i),
        }
    }
}

/// Alternating-order comparison of two quotient streams (`None` = infinite
/// quotient): at odd 1-based positions a larger quotient means a smaller
/// value, at even positions a larger one.
pub fn cf_cmp<F, G>(a: F, b: G) -> Ordering
where
    F: Fn(usize) -> Option<u64>,
    G: Fn(usize) -> Option<u64>,
{
    for i in 0..200_000 {
        let (qa, qb) = (a(i), b(i));
        if qa == qb {
            if qa.is_none() {
                return Ordering::Equal;
            }
            continue;
        }
        let direct = match (qa, qb) {
            (None, _) => Ordering::Greater,
            (_, None) => Ordering::Less,
            (Some(x), Some(y)) => x.cmp(&y),
        };
        return if i % 2 == 0 { direct.reverse() } else { direct };
    }
    Ordering::Equal
}

/// The unique rational of minimal denominator strictly inside `J`.
///
/// Computed from the common quotient prefix `S` of the two endpoint
/// expansions and the bisection rule `r = [0; S, min(a+, a-) + 1]`.
pub fn pseudocenter(j: &Interval) -> Result<BigRational, CfracError> {
    if j.lo.cmp_value(&j.hi) == Ordering::Greater {
        return Err(CfracError::EmptyInterval);
    }
    if j.is_point() {
        return Err(CfracError::PointInterval);
    }
    let lo_stream = QuotStream::for_endpoint(&j.lo, true)?;
    let hi_stream = QuotStream::for_endpoint(&j.hi, false)?;
    debug_assert_eq!(
        cf_cmp(|i| lo_stream.at(i), |i| hi_stream.at(i)),
        Ordering::Less
    );
    let mut prefix: Vec<u64> = Vec::new();
    for i in 0..200_000 {
        let (qa, qb) = (lo_stream.at(i), hi_stream.at(i));
        if qa == qb {
            prefix.push(qa.ok_or(CfracError::PointInterval)?);
            continue;
        }
        let a = match (qa, qb) {
            (Some(x), Some(y)) => x.min(y),
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => return Err(CfracError::PointInterval),
        };
        prefix.push(a + 1);
        let r = CFString(prefix).finite_value();
        debug_assert!(j.contains_ratio(&r));
        return Ok(r);
    }
    Err(CfracError::ExpansionStuck)
}
