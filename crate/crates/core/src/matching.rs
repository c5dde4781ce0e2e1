//! Detection and exact solving of matching intervals.
//!
//! A matching of exponents `(k1, k2)` at a parameter means the orbits of
//! `alpha` and `alpha - 1` merge: `T^k1(alpha) = T^k2(alpha - 1)`. The
//! combinatorial certificate is condition (II'), an identity between the
//! orbit matrices of the two codings up to sign; together with the orbit
//! disjointness (I) it is locally constant in the parameter, so it holds on
//! open intervals. This module solves those intervals exactly: the set of
//! parameters realizing a fixed coding is cut out by one pair of half-open
//! window constraints per digit, each of whose boundaries is a quadratic
//! equation in the parameter.

use crate::alphamap::{expand, expand_ratio, orbit_matrix, Digit, MapError, Sign};
use crate::cfrac::{interval_for_rational, pseudocenter, CFString, CfracError, Interval};
use crate::exactnum::{
    big, quadratic_roots, rational_between, ratio_to_f64, ExactError, IntMatrix2, QuadSurd, Roots,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("orbit reaches 0 before the coding is complete")]
    OrbitHitZero,
    #[error("no parameter realizes this coding")]
    EmptyCylinder,
    #[error("coding must be nonempty")]
    EmptyCoding,
    #[error("star transform needs partial quotients >= 2")]
    QuotientBelowTwo,
    #[error("constraint region is not an interval")]
    NonIntervalConstraint,
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

impl From<CfracError> for MatchError {
    fn from(e: CfracError) -> Self {
        match e {
            CfracError::Exact(inner) => MatchError::Exact(inner),
            other => MatchError::VerificationFailed(other.to_string()),
        }
    }
}

/// Which endpoint orbit a coding describes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    Alpha,
    AlphaMinusOne,
}

/// Which end of a matching interval a label names.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EndpointSide {
    Left,
    Right,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Monotonicity {
    Increasing,
    Constant,
    Decreasing,
}

impl Monotonicity {
    pub fn from_exponents(k1: u64, k2: u64) -> Self {
        match k1.cmp(&k2) {
            Ordering::Less => Monotonicity::Increasing,
            Ordering::Equal => Monotonicity::Constant,
            Ordering::Greater => Monotonicity::Decreasing,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Monotonicity::Increasing => "increasing",
            Monotonicity::Constant => "constant",
            Monotonicity::Decreasing => "decreasing",
        }
    }
}

#[derive(Clone, Debug)]
pub struct MatchingCandidate {
    pub seed: BigRational,
    pub k1: u64,
    pub k2: u64,
}

/// A solved and verified matching interval.
#[derive(Clone, Debug)]
pub struct MatchingInterval {
    /// Open interval of parameters sharing the combinatorics.
    pub interval: Interval,
    pub k1: u64,
    pub k2: u64,
    /// Digits of the alpha orbit up to step `k1 - 1`.
    pub coding_alpha: Vec<Digit>,
    /// Digits of the (alpha - 1) orbit up to step `k2 - 1`.
    pub coding_alpham1: Vec<Digit>,
    /// Continued-fraction labels of the endpoints, when the interval is of
    /// the `I_r` form.
    pub label_lo: Option<CFString>,
    pub label_hi: Option<CFString>,
    pub monotonicity: Monotonicity,
}

impl MatchingInterval {
    pub fn order(&self) -> u64 {
        self.k1 + self.k2
    }

    pub fn size_f64(&self) -> f64 {
        self.interval.length_f64()
    }

    /// Empirical sign structure of verified matchings: first digit of the
    /// alpha coding positive, every later digit of both codings negative.
    pub fn sign_structure_ok(&self) -> bool {
        let head_ok = self
            .coding_alpha
            .first()
            .map(|d| d.eps == Sign::Plus)
            .unwrap_or(true);
        head_ok
            && self.coding_alpha.iter().skip(1).all(|d| d.eps == Sign::Minus)
            && self.coding_alpham1.iter().all(|d| d.eps == Sign::Minus)
    }
}

/// Floating-point candidate scan: smallest `(k1 + k2, k1)` whose orbit
/// points approximately meet. Soundness always comes from the exact
/// verification afterwards; the tolerance only affects recall.
pub fn scan_candidate(alpha: &BigRational, kmax: u64, tol: f64) -> Option<MatchingCandidate> {
    const NEAR_ZERO: f64 = 1e-13;
    let af = ratio_to_f64(alpha.numer(), alpha.denom());
    let orbit = |x0: f64| -> Vec<f64> {
        let mut pts = vec![x0];
        let mut x = x0;
        for _ in 0..kmax {
            if x.abs() <= NEAR_ZERO {
                break;
            }
            x = crate::alphamap::step_f64(af, x).0;
            pts.push(x);
        }
        pts
    };
    let xs = orbit(af);
    let ys = orbit(af - 1.0);
    for order in 2..=(2 * kmax) {
        for k1 in 1..order {
            let k2 = order - k1;
            if k1 > kmax || k2 > kmax {
                continue;
            }
            if let (Some(&x), Some(&y)) = (xs.get(k1 as usize), ys.get(k2 as usize)) {
                if x.abs() < 1e-12 || y.abs() < 1e-12 {
                    continue;
                }
                if (x - y).abs() < tol {
                    return Some(MatchingCandidate {
                        seed: alpha.clone(),
                        k1,
                        k2,
                    });
                }
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug)]
pub struct ConditionReport {
    pub holds: bool,
    pub orbits_disjoint: bool,
    pub matrix_ok: bool,
}

fn shift_matrix() -> IntMatrix2 {
    IntMatrix2::from_i64(1, 1, 0, 1)
}

fn closing_matrix() -> IntMatrix2 {
    IntMatrix2::from_i64(1, 0, -1, -1)
}

/// The matrix identity of condition (II') on a pair of codings:
/// `M_alpha = +- [[1,1],[0,1]] * M_{alpha-1} * [[1,0],[-1,-1]]`.
pub fn matrix_condition(coding_alpha: &[Digit], coding_alpham1: &[Digit]) -> bool {
    let m1 = orbit_matrix(coding_alpha);
    let m2 = orbit_matrix(coding_alpham1);
    let rhs = shift_matrix().mul(&m2).mul(&closing_matrix());
    m1.eq_mod_sign(&rhs)
}

/// Conditions (I) and (II') at an exact parameter.
///
/// If either orbit terminates at 0 before its coding is complete, the
/// conditions cannot hold with these exponents and the report is negative.
pub fn check_conditions(
    alpha: &QuadSurd,
    k1: u64,
    k2: u64,
) -> Result<ConditionReport, MatchError> {
    assert!(k1 >= 1 && k2 >= 1);
    let rec_a = expand(alpha, alpha, k1 as usize)?;
    let rec_b = expand(alpha, &alpha.add_int(-1), k2 as usize)?;
    if (rec_a.digits.len() as u64) < k1 - 1 || (rec_b.digits.len() as u64) < k2 - 1 {
        return Ok(ConditionReport {
            holds: false,
            orbits_disjoint: false,
            matrix_ok: false,
        });
    }
    let matrix_ok = matrix_condition(
        &rec_a.digits[..(k1 - 1) as usize],
        &rec_b.digits[..(k2 - 1) as usize],
    );
    let pts_a = &rec_a.points[..rec_a.points.len().min(k1 as usize)];
    let pts_b = &rec_b.points[..rec_b.points.len().min(k2 as usize)];
    let orbits_disjoint = pts_a
        .iter()
        .all(|x| pts_b.iter().all(|y| x.cmp_value(y) != Ordering::Equal));
    if matrix_ok {
        // (II') implies 1/T^{k1-1}(a) + 1/T^{k2-1}(a-1) = -1, projectively
        let u = rec_a.points.get((k1 - 1) as usize);
        let v = rec_b.points.get((k2 - 1) as usize);
        if let (Some(u), Some(v)) = (u, v) {
            if u.is_zero_value() || v.is_zero_value() {
                assert!(u.is_zero_value() && v.is_zero_value());
            } else {
                let s = u.inv()?.add(&v.inv()?)?;
                assert_eq!(s, QuadSurd::from_int(-1), "reciprocal identity violated");
            }
        }
        if let (Some(x), Some(y)) = (rec_a.points.get(k1 as usize), rec_b.points.get(k2 as usize))
        {
            debug_assert_eq!(x, y, "matching equality violated under (II')");
        }
    }
    Ok(ConditionReport {
        holds: matrix_ok && orbits_disjoint,
        orbits_disjoint,
        matrix_ok,
    })
}

fn digit_map(d: &Digit) -> IntMatrix2 {
    // x -> eps/x - a
    IntMatrix2::new(
        big(-(d.a as i64)),
        big(d.eps.value()),
        BigInt::one(),
        BigInt::zero(),
    )
}

/// One window constraint: the orbit point `m(alpha)` compared against the
/// boundary `eps/(alpha + c)`.
struct Constraint {
    c: i64,
    eps: i64,
    want: i32,
    allow_eq: bool,
}

fn constraints_for(d: &Digit) -> [Constraint; 2] {
    let a = d.a as i64;
    match d.eps {
        // x in ( 1/(alpha+a), 1/(alpha+a-1) ]
        Sign::Plus => [
            Constraint { c: a, eps: 1, want: 1, allow_eq: false },
            Constraint { c: a - 1, eps: 1, want: -1, allow_eq: true },
        ],
        // x in [ -1/(alpha+a-1), -1/(alpha+a) )
        Sign::Minus => [
            Constraint { c: a - 1, eps: -1, want: 1, allow_eq: true },
            Constraint { c: a, eps: -1, want: -1, allow_eq: false },
        ],
    }
}

/// Sign of `m(t) - eps/(t + c)` at a rational sample point.
fn constraint_sign_at_ratio(m: &IntMatrix2, cons: &Constraint, t: &BigRational) -> i32 {
    let g = m.apply_ratio(t).expect("no pole inside the cylinder");
    let b = BigRational::new(
        big(cons.eps) * t.denom(),
        t.numer() + big(cons.c) * t.denom(),
    );
    match g.cmp(&b) {
        Ordering::Less => -1,
        Ordering::Equal => 0,
        Ordering::Greater => 1,
    }
}

/// Sign of the same expression at an exact endpoint.
fn constraint_sign_at_surd(m: &IntMatrix2, cons: &Constraint, x: &QuadSurd) -> i32 {
    let g = m.apply(x).expect("no pole on the cylinder closure");
    let b = QuadSurd::from_int(cons.eps)
        .div(&x.add_int(cons.c))
        .expect("boundary pole sits at -c <= 0");
    g.sub(&b)
        .expect("orbit point and boundary share the field of x")
        .sign()
}

/// Cuts `iv` down to the parameters satisfying one window constraint.
fn refine_by_constraint(
    iv: &Interval,
    m: &IntMatrix2,
    cons: &Constraint,
) -> Result<Interval, MatchError> {
    // boundary equality: (p t + q)(t + c) - eps (r t + s) = 0
    let a2 = m.a.clone();
    let b2 = &m.a * big(cons.c) + &m.b - big(cons.eps) * &m.c;
    let c2 = &m.b * big(cons.c) - big(cons.eps) * &m.d;
    let mut cuts: Vec<QuadSurd> = Vec::new();
    if a2.is_zero() && b2.is_zero() {
        if c2.is_zero() {
            // boundary coincides with the orbit map everywhere
            return if cons.allow_eq {
                Ok(iv.clone())
            } else {
                Err(MatchError::EmptyCylinder)
            };
        }
    } else {
        match quadratic_roots(&a2, &b2, &c2) {
            Ok(Roots::Pair(lo, hi)) => {
                cuts.push(lo);
                cuts.push(hi);
            }
            Ok(Roots::Single(x)) => cuts.push(x),
            Err(ExactError::NegativeDiscriminant(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    cuts.retain(|x| {
        iv.lo.cmp_value(x) == Ordering::Less && iv.hi.cmp_value(x) == Ordering::Greater
    });
    cuts.sort();
    cuts.dedup();

    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(iv.lo.clone());
    bounds.extend(cuts);
    bounds.push(iv.hi.clone());

    let mut kept = Vec::with_capacity(bounds.len() - 1);
    for w in bounds.windows(2) {
        if w[0].cmp_value(&w[1]) == Ordering::Equal {
            kept.push(false);
            continue;
        }
        let t = rational_between(&w[0], &w[1]);
        let s = constraint_sign_at_ratio(m, cons, &t);
        debug_assert!(s != 0, "sample hit a constraint boundary");
        kept.push(s == cons.want);
    }
    let first = kept.iter().position(|&k| k).ok_or(MatchError::EmptyCylinder)?;
    let last = kept.iter().rposition(|&k| k).unwrap();
    if kept[first..=last].iter().any(|&k| !k) {
        return Err(MatchError::NonIntervalConstraint);
    }

    let sign_ok = |s: i32| s == cons.want || (s == 0 && cons.allow_eq);
    let (lo, lo_closed) = if first == 0 {
        let closed = iv.lo_closed && sign_ok(constraint_sign_at_surd(m, cons, &iv.lo));
        (iv.lo.clone(), closed)
    } else {
        (bounds[first].clone(), cons.allow_eq)
    };
    let (hi, hi_closed) = if last == kept.len() - 1 {
        let closed = iv.hi_closed && sign_ok(constraint_sign_at_surd(m, cons, &iv.hi));
        (iv.hi.clone(), closed)
    } else {
        (bounds[last + 1].clone(), cons.allow_eq)
    };
    Ok(Interval::new(lo, hi, lo_closed, hi_closed))
}

/// The set of parameters whose `alpha` (or `alpha - 1`) orbit realizes
/// exactly this coding for its length. Endpoints are roots of the boundary
/// Moebius equalities.
pub fn cylinder_interval(coding: &[Digit], side: Side) -> Result<Interval, MatchError> {
    if coding.is_empty() {
        return Err(MatchError::EmptyCoding);
    }
    let mut iv = Interval::new(QuadSurd::zero(), QuadSurd::one(), false, true);
    let mut m = match side {
        Side::Alpha => IntMatrix2::identity(),
        Side::AlphaMinusOne => IntMatrix2::from_i64(1, -1, 0, 1),
    };
    for d in coding {
        for cons in constraints_for(d) {
            iv = refine_by_constraint(&iv, &m, &cons)?;
        }
        m = digit_map(d).mul(&m);
    }
    Ok(iv)
}

/// Exact codings of the two endpoint orbits at a rational seed.
pub fn codings_at_seed(
    seed: &BigRational,
    k1: u64,
    k2: u64,
) -> Result<(Vec<Digit>, Vec<Digit>), MatchError> {
    assert!(k1 >= 1 && k2 >= 1);
    let one = BigRational::one();
    let (_, da) = expand_ratio(seed, seed, (k1 - 1) as usize)?;
    let (_, db) = expand_ratio(seed, &(seed - one), (k2 - 1) as usize)?;
    if (da.len() as u64) < k1 - 1 || (db.len() as u64) < k2 - 1 {
        return Err(MatchError::OrbitHitZero);
    }
    Ok((da, db))
}

/// Full check at one generic rational inside the solved interval: the
/// codings are reproduced, condition (I) holds, the matching equality is
/// exact, and the closing digits have opposite signs.
fn verify_at_sample(
    s: &BigRational,
    coding_a: &[Digit],
    coding_b: &[Digit],
    k1: u64,
    k2: u64,
) -> Result<bool, MatchError> {
    let one = BigRational::one();
    let (pa, da) = expand_ratio(s, s, k1 as usize)?;
    let (pb, db) = expand_ratio(s, &(s - &one), k2 as usize)?;
    if da.len() < k1 as usize || db.len() < k2 as usize {
        // the pseudocenter itself: its orbit terminates early; retry
        return Ok(false);
    }
    if da[..coding_a.len()] != *coding_a || db[..coding_b.len()] != *coding_b {
        return Err(MatchError::VerificationFailed(format!(
            "sample {s} does not realize the solved coding"
        )));
    }
    if pa[k1 as usize] != pb[k2 as usize] {
        return Err(MatchError::VerificationFailed(format!(
            "matching equality fails at sample {s}"
        )));
    }
    if da[(k1 - 1) as usize].eps.value() * db[(k2 - 1) as usize].eps.value() != -1 {
        return Err(MatchError::VerificationFailed(format!(
            "closing digits at {s} do not have opposite signs"
        )));
    }
    // condition (I): the truncated orbits are disjoint
    Ok(pa[..k1 as usize]
        .iter()
        .all(|x| pb[..k2 as usize].iter().all(|y| x != y)))
}

/// Solves the cylinder intersection for a fixed pair of codings and
/// verifies the result from the inside.
pub fn solve_from_codings(
    coding_a: Vec<Digit>,
    coding_b: Vec<Digit>,
    k1: u64,
    k2: u64,
) -> Result<MatchingInterval, MatchError> {
    if !matrix_condition(&coding_a, &coding_b) {
        return Err(MatchError::VerificationFailed(
            "condition (II') fails on the codings".into(),
        ));
    }
    let whole = Interval::new(QuadSurd::zero(), QuadSurd::one(), false, true);
    let ia = if coding_a.is_empty() {
        whole.clone()
    } else {
        cylinder_interval(&coding_a, Side::Alpha)?
    };
    let ib = if coding_b.is_empty() {
        whole
    } else {
        cylinder_interval(&coding_b, Side::AlphaMinusOne)?
    };
    let iv = ia
        .intersect(&ib)
        .ok_or_else(|| MatchError::VerificationFailed("cylinders do not intersect".into()))?;
    if iv.is_point() {
        return Err(MatchError::VerificationFailed(
            "cylinder intersection degenerates to a point".into(),
        ));
    }

    // Condition (I) can fail at finitely many parameters inside (the
    // pseudocenter orbits merge at 0), so retry with fresh samples.
    let mut hi = iv.hi.clone();
    let mut verified = false;
    for _ in 0..6 {
        let s = rational_between(&iv.lo, &hi);
        if verify_at_sample(&s, &coding_a, &coding_b, k1, k2)? {
            verified = true;
            break;
        }
        hi = QuadSurd::from_ratio(&s);
    }
    if !verified {
        return Err(MatchError::VerificationFailed(
            "orbit disjointness failed at every sample".into(),
        ));
    }

    // labels, when the interval is of the I_r form
    let open = Interval::open(iv.lo.clone(), iv.hi.clone());
    let (label_lo, label_hi) = match pseudocenter(&open) {
        Ok(r) if r > BigRational::zero() && r < BigRational::one() => {
            let (ir, lab_lo, lab_hi) = interval_for_rational(&r);
            if ir.lo == open.lo && ir.hi == open.hi {
                (Some(lab_lo), Some(lab_hi))
            } else {
                (None, None)
            }
        }
        _ => (None, None),
    };
    Ok(MatchingInterval {
        interval: open,
        k1,
        k2,
        coding_alpha: coding_a,
        coding_alpham1: coding_b,
        label_lo,
        label_hi,
        monotonicity: Monotonicity::from_exponents(k1, k2),
    })
}

/// Solves the matching interval of a candidate from its seed's codings.
pub fn solve_matching(cand: &MatchingCandidate) -> Result<MatchingInterval, MatchError> {
    let (coding_a, coding_b) = codings_at_seed(&cand.seed, cand.k1, cand.k2)?;
    let mi = solve_from_codings(coding_a, coding_b, cand.k1, cand.k2)?;
    debug_assert!(mi.interval.contains_ratio(&cand.seed));
    Ok(mi)
}

/// Turns an alpha-side coding (its quotients, all >= 2) into the
/// `alpha - 1` coding predicted by the algebraic matching: numbers and
/// star runs swap roles.
pub fn star_transform(a: &CFString) -> Result<CFString, MatchError> {
    if a.quotients().iter().any(|&q| q < 2) {
        return Err(MatchError::QuotientBelowTwo);
    }
    #[derive(PartialEq, Clone, Copy)]
    enum Tok {
        Star,
        Num(u64),
    }
    // steps 1-2: subtract 2 everywhere, keep single-star separators
    let mut toks: Vec<Tok> = Vec::new();
    for (i, &q) in a.quotients().iter().enumerate() {
        if i > 0 {
            toks.push(Tok::Star);
        }
        if q > 2 {
            toks.push(Tok::Num(q - 2));
        }
    }
    // step 3: numbers become star runs, star runs become their length
    let mut swapped: Vec<Tok> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        match toks[i] {
            Tok::Num(n) => {
                swapped.extend(std::iter::repeat(Tok::Star).take(n as usize));
                i += 1;
            }
            Tok::Star => {
                let mut j = i;
                while j < toks.len() && toks[j] == Tok::Star {
                    j += 1;
                }
                swapped.push(Tok::Num((j - i) as u64));
                i = j;
            }
        }
    }
    // step 4: read entries between single stars, add 2 (empty slot = 0)
    let mut entries: Vec<u64> = vec![0];
    for t in swapped {
        match t {
            Tok::Star => entries.push(0),
            Tok::Num(n) => *entries.last_mut().unwrap() += n,
        }
    }
    CFString::new(entries.into_iter().map(|e| e + 2).collect()).map_err(MatchError::from)
}

/// Empirical rule recovering the matching exponents from an endpoint label.
pub fn k_from_label(s: &CFString, side: EndpointSide) -> (u64, u64) {
    let mut even_sum = 0u64;
    let mut odd_sum = 0u64;
    for (i, &a) in s.quotients().iter().enumerate() {
        if (i + 1) % 2 == 0 {
            even_sum += a;
        } else {
            odd_sum += a;
        }
    }
    match side {
        EndpointSide::Left => (2 + even_sum, odd_sum),
        EndpointSide::Right => (1 + even_sum, 1 + odd_sum),
    }
}

// ---------------------------------------------------------------------------
// Words in PGL(2, Z)
// ---------------------------------------------------------------------------

/// Letters of a word in the presentation
/// `{ S, T, V | S^2 = (ST)^3 = V^2 = I, VSV = S, VTV = T^-1 }`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Letter {
    S,
    T(i64),
    V,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GroupWord(pub Vec<Letter>);

impl GroupWord {
    pub fn matrix(&self) -> IntMatrix2 {
        let mut m = IntMatrix2::identity();
        for l in &self.0 {
            let f = match l {
                Letter::S => IntMatrix2::from_i64(0, -1, 1, 0),
                Letter::T(n) => IntMatrix2::from_i64(1, *n, 0, 1),
                Letter::V => IntMatrix2::from_i64(-1, 0, 0, 1),
            };
            m = m.mul(&f);
        }
        m
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum PslLetter {
    S,
    U(u8), // exponent 1 or 2 of the order-3 generator U = ST
}

fn reduce_push(stack: &mut Vec<PslLetter>, l: PslLetter) {
    match (stack.last().copied(), l) {
        (Some(PslLetter::S), PslLetter::S) => {
            stack.pop();
        }
        (Some(PslLetter::U(b)), PslLetter::U(a)) => {
            stack.pop();
            let c = (a + b) % 3;
            if c != 0 {
                stack.push(PslLetter::U(c));
            }
        }
        _ => stack.push(l),
    }
}

/// PSL(2,Z) free-product normal form plus the determinant parity, with all
/// `V`s pushed to the right end of the word.
fn to_psl(w: &GroupWord) -> (Vec<PslLetter>, bool) {
    let mut v = false;
    let mut stack: Vec<PslLetter> = Vec::new();
    for l in &w.0 {
        match l {
            Letter::V => v = !v,
            Letter::S => reduce_push(&mut stack, PslLetter::S),
            Letter::T(n) => {
                let n_eff = if v { -n } else { *n };
                if n_eff >= 0 {
                    for _ in 0..n_eff {
                        // T = SU
                        reduce_push(&mut stack, PslLetter::S);
                        reduce_push(&mut stack, PslLetter::U(1));
                    }
                } else {
                    for _ in 0..(-n_eff) {
                        // T^-1 = U^2 S
                        reduce_push(&mut stack, PslLetter::U(2));
                        reduce_push(&mut stack, PslLetter::S);
                    }
                }
            }
        }
    }
    (stack, v)
}

/// Canonical representative: the reduced alternating `S`/`U` word rendered
/// back into `{S, T, V}` letters, with `V` at most once at the right end.
/// Two words are equal in PGL(2, Z) iff their normal forms are identical.
pub fn word_normal_form(w: &GroupWord) -> GroupWord {
    let (psl, v) = to_psl(w);
    let mut letters: Vec<Letter> = Vec::new();
    for l in psl {
        match l {
            PslLetter::S => letters.push(Letter::S),
            PslLetter::U(1) => {
                letters.push(Letter::S);
                letters.push(Letter::T(1));
            }
            _ => {
                letters.push(Letter::T(-1));
                letters.push(Letter::S);
            }
        }
    }
    let mut merged: Vec<Letter> = Vec::new();
    for l in letters {
        match (merged.last_mut(), l) {
            (Some(Letter::S), Letter::S) => {
                merged.pop();
            }
            (Some(Letter::T(a)), Letter::T(b)) => {
                *a += b;
                if *a == 0 {
                    merged.pop();
                }
            }
            _ => merged.push(l),
        }
    }
    if v {
        merged.push(Letter::V);
    }
    GroupWord(merged)
}

pub fn words_equal(a: &GroupWord, b: &GroupWord) -> bool {
    to_psl(a) == to_psl(b)
}

/// The word form of condition (II'):
/// `T^-1 S T^-a_{k1-1} S ... T^-a_1 S V = V S T^-b_{k2-1} S ... T^-b_1 S T^-1`.
pub fn verify_algebraic_matching(a: &CFString, b: &CFString) -> bool {
    let mut lhs = vec![Letter::T(-1)];
    for &ai in a.quotients().iter().rev() {
        lhs.push(Letter::S);
        lhs.push(Letter::T(-(ai as i64)));
    }
    lhs.push(Letter::S);
    lhs.push(Letter::V);
    let mut rhs = vec![Letter::V];
    for &bi in b.quotients().iter().rev() {
        rhs.push(Letter::S);
        rhs.push(Letter::T(-(bi as i64)));
    }
    rhs.push(Letter::S);
    rhs.push(Letter::T(-1));
    words_equal(&GroupWord(lhs), &GroupWord(rhs))
}

/// The family of matching intervals accumulating at `(sqrt3 - 1)/2`:
/// the alpha cylinder `(3,+)(4,-)^n(2,-)` intersected with the
/// `alpha - 1` cylinder `((2,-)(3,-))^{n+1}`, of exponents `(n+3, 2n+3)`.
pub fn sqrt3_family(n: u32) -> Result<MatchingInterval, MatchError> {
    let mut coding_a = vec![Digit::plus(3)];
    coding_a.extend(std::iter::repeat(Digit::minus(4)).take(n as usize));
    coding_a.push(Digit::minus(2));
    let mut coding_b = Vec::new();
    for _ in 0..=n {
        coding_b.push(Digit::minus(2));
        coding_b.push(Digit::minus(3));
    }
    solve_from_codings(coding_a, coding_b, n as u64 + 3, 2 * n as u64 + 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::ratio;
    use rand::Rng;
    use rand::SeedableRng;

    fn surd(p: i64, q: i64, r: i64, d: i64) -> QuadSurd {
        QuadSurd::from_parts(p, q, r, d)
    }

    #[test]
    fn scan_examples() {
        // 0.45 lies in the (2,2) interval (-1+sqrt2, (-1+sqrt5)/2)
        let c = scan_candidate(&ratio(45, 100), 40, 1e-10).unwrap();
        assert_eq!((c.k1, c.k2), (2, 2));
        let c = scan_candidate(&ratio(7, 10), 40, 1e-10).unwrap();
        assert_eq!((c.k1, c.k2), (2, 1));
        let c = scan_candidate(&ratio(39, 100), 40, 1e-10).unwrap();
        assert_eq!((c.k1, c.k2), (3, 3));
    }

    #[test]
    fn check_conditions_examples() {
        let a = QuadSurd::from_ratio(&ratio(41, 100));
        let rep = check_conditions(&a, 3, 3).unwrap();
        assert!(rep.holds && rep.matrix_ok && rep.orbits_disjoint);

        let a = QuadSurd::from_ratio(&ratio(6, 10));
        let rep = check_conditions(&a, 2, 2).unwrap();
        assert!(rep.holds);

        let a = QuadSurd::from_ratio(&ratio(45, 100));
        let rep = check_conditions(&a, 2, 9).unwrap();
        assert!(!rep.holds);
    }

    #[test]
    fn single_digit_cylinders() {
        // first digit (2,+): alpha in (sqrt2 - 1, (sqrt5-1)/2]
        let iv = cylinder_interval(&[Digit::plus(2)], Side::Alpha).unwrap();
        assert_eq!(iv.lo, surd(-1, 1, 1, 2));
        assert_eq!(iv.hi, surd(-1, 1, 2, 5));
        assert!(!iv.lo_closed && iv.hi_closed);
        // first digit (1,+): alpha in ((sqrt5-1)/2, 1]
        let iv = cylinder_interval(&[Digit::plus(1)], Side::Alpha).unwrap();
        assert_eq!(iv.lo, surd(-1, 1, 2, 5));
        assert_eq!(iv.hi, QuadSurd::one());
        // first digit of alpha-1 equal to (2,-): alpha in (0, (sqrt5-1)/2)
        let iv = cylinder_interval(&[Digit::minus(2)], Side::AlphaMinusOne).unwrap();
        assert!(iv.lo.is_zero_value());
        assert_eq!(iv.hi, surd(-1, 1, 2, 5));
        assert!(!iv.hi_closed);
    }

    #[test]
    fn sqrt3_cylinder_left_endpoint() {
        // ((2,-)(3,-))^2 for the alpha-1 side starts exactly at (sqrt3-1)/2
        let coding = [
            Digit::minus(2),
            Digit::minus(3),
            Digit::minus(2),
            Digit::minus(3),
        ];
        let iv = cylinder_interval(&coding, Side::AlphaMinusOne).unwrap();
        assert_eq!(iv.lo, surd(-1, 1, 2, 3));
    }

    #[test]
    fn solve_matching_examples() {
        // (2,2): (-1+sqrt2, (-1+sqrt5)/2)
        let mi =
            solve_matching(&MatchingCandidate { seed: ratio(45, 100), k1: 2, k2: 2 }).unwrap();
        assert_eq!(mi.interval.lo, surd(-1, 1, 1, 2));
        assert_eq!(mi.interval.hi, surd(-1, 1, 2, 5));
        assert_eq!(mi.monotonicity, Monotonicity::Constant);
        assert_eq!(mi.label_lo, Some(CFString::from_slice(&[2])));
        assert_eq!(mi.label_hi, Some(CFString::from_slice(&[1, 1])));
        // (3,3): ((-2+sqrt10)/3, -1+sqrt2)
        let mi =
            solve_matching(&MatchingCandidate { seed: ratio(39, 100), k1: 3, k2: 3 }).unwrap();
        assert_eq!(mi.interval.lo, surd(-2, 1, 3, 10));
        assert_eq!(mi.interval.hi, surd(-1, 1, 1, 2));
        // (2,3): ((-3+sqrt13)/2, (-1+sqrt3)/2)
        let mi =
            solve_matching(&MatchingCandidate { seed: ratio(317, 1000), k1: 2, k2: 3 }).unwrap();
        assert_eq!(mi.interval.lo, surd(-3, 1, 2, 13));
        assert_eq!(mi.interval.hi, surd(-1, 1, 2, 3));
        assert_eq!(mi.monotonicity, Monotonicity::Increasing);
        // (2,1): ((-1+sqrt5)/2, 1]
        let mi = solve_matching(&MatchingCandidate { seed: ratio(7, 10), k1: 2, k2: 1 }).unwrap();
        assert_eq!(mi.interval.lo, surd(-1, 1, 2, 5));
        assert_eq!(mi.interval.hi, QuadSurd::one());
        assert_eq!(mi.monotonicity, Monotonicity::Decreasing);
        assert!(mi.sign_structure_ok());
    }

    #[test]
    fn conditions_fail_just_outside_solved_endpoints() {
        let eps = ratio(1, 1_000_000_000);
        for (seed, k1, k2) in [
            (ratio(45, 100), 2, 2),
            (ratio(39, 100), 3, 3),
            (ratio(317, 1000), 2, 3),
        ] {
            let mi = solve_matching(&MatchingCandidate { seed, k1, k2 }).unwrap();
            // a generic inside point: between lo and the pseudocenter, which
            // avoids landing on the pseudocenter itself
            let r = crate::cfrac::pseudocenter(&mi.interval).unwrap();
            let inside = QuadSurd::from_ratio(&rational_between(
                &mi.interval.lo,
                &QuadSurd::from_ratio(&r),
            ));
            assert!(check_conditions(&inside, k1, k2).unwrap().holds);
            let below = mi.interval.lo.decimal_bounds(30).0 - &eps;
            let rep = check_conditions(&QuadSurd::from_ratio(&below), k1, k2).unwrap();
            assert!(!rep.holds, "holds below lo for ({k1},{k2})");
            let above = mi.interval.hi.decimal_bounds(30).1 + &eps;
            if above < BigRational::one() {
                let rep = check_conditions(&QuadSurd::from_ratio(&above), k1, k2).unwrap();
                assert!(!rep.holds, "holds above hi for ({k1},{k2})");
            }
        }
    }

    #[test]
    fn star_transform_examples() {
        let s = |v: &[u64]| CFString::from_slice(v);
        assert_eq!(star_transform(&s(&[3, 4, 2])).unwrap(), s(&[2, 3, 2, 3]));
        assert_eq!(
            star_transform(&s(&[3, 4, 4, 2])).unwrap(),
            s(&[2, 3, 2, 3, 2, 3])
        );
        assert_eq!(star_transform(&s(&[2])).unwrap(), s(&[2]));
        assert_eq!(star_transform(&s(&[3, 2])).unwrap(), s(&[2, 3]));
        assert!(matches!(
            star_transform(&s(&[3, 1, 2])),
            Err(MatchError::QuotientBelowTwo)
        ));
    }

    #[test]
    fn star_transform_is_involutive() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..500 {
            let len = rng.gen_range(1..8);
            let q: Vec<u64> = (0..len).map(|_| rng.gen_range(2..7)).collect();
            let s = CFString::from_slice(&q);
            let t = star_transform(&s).unwrap();
            assert_eq!(star_transform(&t).unwrap(), s, "not involutive on {s}");
        }
    }

    #[test]
    fn k_rule_examples() {
        let s = |v: &[u64]| CFString::from_slice(v);
        assert_eq!(k_from_label(&s(&[2]), EndpointSide::Left), (2, 2));
        assert_eq!(k_from_label(&s(&[2, 1, 1]), EndpointSide::Left), (3, 3));
        assert_eq!(k_from_label(&s(&[1]), EndpointSide::Left), (2, 1));
        assert_eq!(k_from_label(&s(&[1, 1]), EndpointSide::Right), (2, 2));
        assert_eq!(k_from_label(&s(&[2, 1]), EndpointSide::Right), (2, 3));
        assert_eq!(k_from_label(&s(&[2, 2]), EndpointSide::Right), (3, 3));
    }

    #[test]
    fn word_examples() {
        let nf = |w: &[Letter]| word_normal_form(&GroupWord(w.to_vec()));
        assert_eq!(nf(&[Letter::S, Letter::S]).0, vec![]);
        assert_eq!(
            nf(&[Letter::V, Letter::T(1), Letter::V]).0,
            vec![Letter::T(-1)]
        );
        let st = [Letter::S, Letter::T(1)];
        let st3: Vec<Letter> = st.iter().copied().cycle().take(6).collect();
        assert_eq!(nf(&st3).0, vec![]);
    }

    #[test]
    fn words_faithful_to_matrices() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let mut mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let len = rng.gen_range(0..8);
                GroupWord(
                    (0..len)
                        .map(|_| match rng.gen_range(0..3) {
                            0 => Letter::S,
                            1 => Letter::T(rng.gen_range(-4..=4i64)),
                            _ => Letter::V,
                        })
                        .collect(),
                )
            };
            let (a, b) = (mk(&mut rng), mk(&mut rng));
            let same_word = words_equal(&a, &b);
            let same_matrix = a.matrix().eq_mod_sign(&b.matrix());
            assert_eq!(same_word, same_matrix, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn algebraic_matching_examples() {
        let s = |v: &[u64]| CFString::from_slice(v);
        let a = s(&[3, 4, 2]);
        assert!(verify_algebraic_matching(&a, &star_transform(&a).unwrap()));
        assert!(!verify_algebraic_matching(&a, &s(&[2, 3, 3, 2])));
        assert!(verify_algebraic_matching(&s(&[2]), &s(&[2])));
    }

    #[test]
    fn algebraic_matching_agrees_with_matrix_condition() {
        for n in 0..4u32 {
            let mi = sqrt3_family(n).unwrap();
            let a_quots: Vec<u64> = mi.coding_alpha.iter().map(|d| d.a).collect();
            let b_quots: Vec<u64> = mi.coding_alpham1.iter().map(|d| d.a).collect();
            let a = CFString::from_slice(&a_quots);
            let b = CFString::from_slice(&b_quots);
            assert_eq!(star_transform(&a).unwrap(), b);
            assert!(verify_algebraic_matching(&a, &b));
            assert!(matrix_condition(&mi.coding_alpha, &mi.coding_alpham1));
        }
    }

    #[test]
    fn sqrt3_family_structure() {
        let limit = surd(-1, 1, 2, 3);
        let mut prev_lo: Option<QuadSurd> = None;
        for n in 1..=4u32 {
            let mi = sqrt3_family(n).unwrap();
            assert_eq!((mi.k1, mi.k2), (n as u64 + 3, 2 * n as u64 + 3));
            assert_eq!(mi.monotonicity, Monotonicity::Increasing);
            assert!(mi.interval.lo.cmp_value(&limit) == Ordering::Greater);
            if let Some(prev) = prev_lo {
                // intervals march down toward the limit, pairwise disjoint
                assert!(mi.interval.hi.cmp_value(&prev) == Ordering::Less);
            }
            prev_lo = Some(mi.interval.lo.clone());
        }
    }
}
