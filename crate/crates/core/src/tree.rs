//! The matching tree: gap bisection via pseudocenters.
//!
//! Starting from the single gap `[0, (sqrt5-1)/2]`, each non-point gap is
//! split by removing the interval `I_r` of its pseudocenter `r`. Every
//! removed interval is verified on the spot — exponents from the label rule
//! must agree with the zero-hitting times of the orbits of `r` and `r - 1`,
//! and the cylinder-solved interval must coincide with `I_r` — so the tree
//! generator doubles as a tester of the bisection conjecture. A failure is
//! reported with the offending pseudocenter, never skipped.

use crate::alphamap::expand_ratio;
use crate::cfrac::{
    cf_value, conjugate_string, interval_for_rational, pseudocenter, CFString, CfracError,
    Interval, PeriodicCF,
};
use crate::exactnum::{big, QuadSurd};
use crate::matching::{
    codings_at_seed, k_from_label, solve_from_codings, EndpointSide, MatchError, MatchingInterval,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("conjecture counterexample at pseudocenter {seed}: {detail}")]
    Verification { seed: BigRational, detail: String },
    #[error("cannot refine a point gap")]
    PointGap,
    #[error("chain start label must have odd length")]
    InvalidChainStart,
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Cfrac(#[from] CfracError),
}

/// A closed interval left uncovered after removing matching intervals.
#[derive(Clone, Debug)]
pub struct Gap {
    pub interval: Interval,
    pub level: u32,
    pub is_point: bool,
    /// Label of the left endpoint; `None` for the endpoint 0.
    pub label_lo: Option<CFString>,
    pub label_hi: Option<CFString>,
}

/// The gap of level 0: everything left of the rightmost matching interval.
pub fn initial_gap() -> Gap {
    Gap {
        interval: Interval::closed(QuadSurd::zero(), QuadSurd::from_parts(-1, 1, 2, 5)),
        level: 0,
        is_point: false,
        label_lo: None,
        label_hi: Some(CFString::from_slice(&[1])),
    }
}

/// The rightmost matching interval `((sqrt5-1)/2, 1]`, removed before the
/// bisection starts: one-digit alpha coding, empty alpha-1 coding.
pub fn rightmost_interval() -> Result<MatchingInterval, TreeError> {
    let mut mi = solve_from_codings(vec![crate::alphamap::Digit::plus(1)], vec![], 2, 1)?;
    mi.label_lo = Some(CFString::from_slice(&[1]));
    mi.label_hi = None;
    Ok(mi)
}

/// Zero-hitting exponents at a pseudocenter: the orbits of `r` and `r - 1`
/// terminate at 0, and the matching exponents are one past those times.
fn exponents_from_orbits(r: &BigRational) -> Result<(u64, u64), TreeError> {
    let cap = 400;
    let fail = |which: &str| TreeError::Verification {
        seed: r.clone(),
        detail: format!("orbit of {which} does not reach 0 within {cap} steps"),
    };
    let (pa, _) = expand_ratio(r, r, cap).map_err(MatchError::from)?;
    if !pa.last().unwrap().is_zero() {
        return Err(fail("r"));
    }
    let (pb, _) = expand_ratio(r, &(r - BigRational::one()), cap).map_err(MatchError::from)?;
    if !pb.last().unwrap().is_zero() {
        return Err(fail("r-1"));
    }
    Ok((pa.len() as u64, pb.len() as u64))
}

/// Solves and fully verifies the matching interval `I_r`.
///
/// Checks, in order: the label rule gives the same exponents on both
/// endpoint labels, those agree with the zero-hitting times at `r`, and the
/// cylinder-solved interval equals `I_r` endpoint for endpoint.
pub fn solve_interval_for_rational(r: &BigRational) -> Result<MatchingInterval, TreeError> {
    let verr = |detail: String| TreeError::Verification {
        seed: r.clone(),
        detail,
    };
    let (ir, lab_lo, lab_hi) = interval_for_rational(r);
    let (k1, k2) = k_from_label(&lab_lo, EndpointSide::Left);
    let cross = k_from_label(&lab_hi, EndpointSide::Right);
    if (k1, k2) != cross {
        return Err(verr(format!(
            "label rule disagrees between endpoints: ({k1},{k2}) vs {cross:?}"
        )));
    }
    let orbit_ks = exponents_from_orbits(r)?;
    if orbit_ks != (k1, k2) {
        return Err(verr(format!(
            "label rule ({k1},{k2}) does not match orbit exponents {orbit_ks:?}"
        )));
    }
    let (ca, cb) = codings_at_seed(r, k1, k2).map_err(|e| verr(e.to_string()))?;
    let mut mi = solve_from_codings(ca, cb, k1, k2).map_err(|e| verr(e.to_string()))?;
    if mi.interval.lo != ir.lo || mi.interval.hi != ir.hi {
        return Err(verr(format!(
            "solved interval ({}, {}) differs from I_r ({}, {})",
            mi.interval.lo, mi.interval.hi, ir.lo, ir.hi
        )));
    }
    mi.label_lo = Some(lab_lo);
    mi.label_hi = Some(lab_hi);
    Ok(mi)
}

/// Removes the pseudocenter interval from a gap, returning it together with
/// the two child gaps (possibly point gaps).
pub fn refine_gap(g: &Gap) -> Result<(MatchingInterval, Gap, Gap), TreeError> {
    if g.is_point {
        return Err(TreeError::PointGap);
    }
    let r = pseudocenter(&g.interval)?;
    let mi = solve_interval_for_rational(&r)?;
    let (lab_lo, lab_hi) = (mi.label_lo.clone().unwrap(), mi.label_hi.clone().unwrap());
    let left = Gap {
        interval: Interval::closed(g.interval.lo.clone(), mi.interval.lo.clone()),
        level: g.level + 1,
        is_point: g.interval.lo == mi.interval.lo,
        label_lo: g.label_lo.clone(),
        label_hi: Some(lab_lo),
    };
    let right = Gap {
        interval: Interval::closed(mi.interval.hi.clone(), g.interval.hi.clone()),
        level: g.level + 1,
        is_point: mi.interval.hi == g.interval.hi,
        label_lo: Some(lab_hi),
        label_hi: g.label_hi.clone(),
    };
    Ok((mi, left, right))
}

#[derive(Clone, Debug)]
pub struct TreeResult {
    /// Gap families per level, 0 through the requested depth.
    pub gap_levels: Vec<Vec<Gap>>,
    /// All removed intervals, tagged with the level that produced them.
    pub intervals: Vec<(u32, MatchingInterval)>,
}

impl TreeResult {
    pub fn final_gaps(&self) -> &[Gap] {
        self.gap_levels.last().unwrap()
    }

    /// Intervals produced up to and including `depth`.
    pub fn intervals_up_to(&self, depth: u32) -> impl Iterator<Item = &MatchingInterval> {
        self.intervals
            .iter()
            .filter(move |(lvl, _)| *lvl <= depth)
            .map(|(_, mi)| mi)
    }
}

/// Runs the bisection for `depth` levels; every produced interval is
/// verified. Gaps within one level are refined in parallel.
///
/// For `depth >= 1` the result includes the rightmost interval
/// `((sqrt5-1)/2, 1]` at level 0, whose removal defines the initial gap;
/// `depth = 0` returns the pristine state of one gap and no intervals.
pub fn generate_tree(depth: u32) -> Result<TreeResult, TreeError> {
    let mut gap_levels = vec![vec![initial_gap()]];
    let mut intervals: Vec<(u32, MatchingInterval)> = if depth >= 1 {
        vec![(0, rightmost_interval()?)]
    } else {
        Vec::new()
    };
    for level in 1..=depth {
        let current = gap_levels.last().unwrap();
        let refined: Vec<Result<_, TreeError>> = current
            .par_iter()
            .map(|g| {
                if g.is_point {
                    let mut carried = g.clone();
                    carried.level = level;
                    Ok((None, vec![carried]))
                } else {
                    refine_gap(g).map(|(mi, l, r)| (Some(mi), vec![l, r]))
                }
            })
            .collect();
        let mut next: Vec<Gap> = Vec::with_capacity(current.len() * 2);
        for item in refined {
            let (mi, children) = item?;
            if let Some(mi) = mi {
                intervals.push((level, mi));
            }
            next.extend(children);
        }
        next.sort_by(|a, b| {
            a.interval
                .lo
                .cmp_value(&b.interval.lo)
                .then_with(|| a.interval.hi.cmp_value(&b.interval.hi))
        });
        gap_levels.push(next);
    }
    intervals.sort_by(|a, b| a.1.interval.lo.cmp_value(&b.1.interval.lo));
    Ok(TreeResult {
        gap_levels,
        intervals,
    })
}

/// Whether `I_r` contains `I_r'` for every rational `r'` inside it with
/// denominator at most `qmax` (a finite surrogate for maximality).
pub fn is_maximal(r: &BigRational, qmax: u64) -> bool {
    let (ir, _, _) = interval_for_rational(r);
    for q in 1..=qmax {
        let qi = big(q as i64);
        let mut p = ir.lo.scale_big(&qi).floor() + BigInt::one();
        loop {
            let cand = BigRational::new(p.clone(), qi.clone());
            if ir.hi.cmp_ratio(&cand) != Ordering::Greater {
                break;
            }
            if ir.lo.cmp_ratio(&cand) == Ordering::Less
                && cand != *r
                && p.gcd(&qi) == BigInt::one()
            {
                let (inner, _, _) = interval_for_rational(&cand);
                let contained = ir.lo.cmp_value(&inner.lo) != Ordering::Greater
                    && inner.hi.cmp_value(&ir.hi) != Ordering::Greater;
                if !contained {
                    return false;
                }
            }
            p += BigInt::one();
        }
    }
    true
}

/// One link of a period-doubling chain.
#[derive(Clone, Debug)]
pub struct ChainLink {
    pub label: CFString,
    pub matching: MatchingInterval,
}

fn solve_chain_link(s: &CFString) -> Result<MatchingInterval, TreeError> {
    if s.quotients() == [1] {
        return rightmost_interval();
    }
    let r = s.finite_value();
    let mi = solve_interval_for_rational(&r)?;
    // odd label length puts [0; (s)^inf] at the left endpoint
    debug_assert_eq!(mi.label_lo.as_ref(), Some(s));
    Ok(mi)
}

/// The chain `S_{n+1} = (S_n S_n)'` of adjacent matching intervals, links
/// `S_0` through `S_levels` inclusive.
pub fn doubling_chain(s0: &CFString, levels: u32) -> Result<Vec<ChainLink>, TreeError> {
    if s0.len() % 2 == 0 {
        return Err(TreeError::InvalidChainStart);
    }
    let mut s = s0.clone();
    let mut out = Vec::with_capacity(levels as usize + 1);
    for n in 0..=levels {
        let matching = solve_chain_link(&s)?;
        out.push(ChainLink {
            label: s.clone(),
            matching,
        });
        if n < levels {
            s = conjugate_string(&s.concat(&s));
            debug_assert!(s.len() % 2 == 1, "doubled conjugate keeps odd length");
        }
    }
    Ok(out)
}

/// Decimal digits of a chain's cluster point, certified by the rational
/// cylinder of the merged label prefix.
#[derive(Clone, Debug)]
pub struct ClusterPoint {
    /// `"0.dddd..."`, every digit certified by the enclosure.
    pub decimal: String,
    /// Continued-fraction prefix of the cluster point (the level's label).
    pub prefix: CFString,
    /// Width of the certifying rational enclosure.
    pub enclosure_width: BigRational,
}

pub fn cluster_point(s0: &CFString, levels: u32) -> Result<ClusterPoint, TreeError> {
    if s0.len() % 2 == 0 {
        return Err(TreeError::InvalidChainStart);
    }
    let mut s = s0.clone();
    for _ in 0..levels {
        s = conjugate_string(&s.concat(&s));
    }
    // convergents of the finite prefix bound the cylinder of all reals
    // whose expansion starts with it
    let (mut p_prev, mut p) = (BigInt::one(), BigInt::zero());
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    for &a in s.quotients() {
        let ai = big(a as i64);
        let p_next = &ai * &p + &p_prev;
        let q_next = &ai * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
    }
    let v1 = BigRational::new(p.clone(), q.clone());
    let v2 = BigRational::new(&p + &p_prev, &q + &q_prev);
    let (lo, hi) = if v1 < v2 { (v1, v2) } else { (v2, v1) };
    let width = &hi - &lo;
    // common decimal digits of the two bounds
    let digits = 400u32;
    let scale = big(10).pow(digits);
    let lo_scaled = (lo.numer() * &scale).div_floor(lo.denom());
    let hi_scaled = (hi.numer() * &scale).div_floor(hi.denom());
    let lo_str = format!("{:0>width$}", lo_scaled.to_string(), width = digits as usize);
    let hi_str = format!("{:0>width$}", hi_scaled.to_string(), width = digits as usize);
    let mut common = String::from("0.");
    for (a, b) in lo_str.chars().zip(hi_str.chars()) {
        if a == b {
            common.push(a);
        } else {
            break;
        }
    }
    Ok(ClusterPoint {
        decimal: common,
        prefix: s,
        enclosure_width: width,
    })
}

/// Fraction of `window` covered by the (disjoint) intervals, as a certified
/// rational enclosure `[lower, upper]`.
pub fn coverage(
    intervals: &[&Interval],
    window: (&BigRational, &BigRational),
) -> (BigRational, BigRational) {
    let (wlo, whi) = window;
    assert!(wlo < whi);
    let zero = BigRational::zero();
    let mut covered_lo = BigRational::zero();
    let mut covered_hi = BigRational::zero();
    for iv in intervals {
        let (a_lo, a_hi) = iv.lo.decimal_bounds(40);
        let (b_lo, b_hi) = iv.hi.decimal_bounds(40);
        let clip = |x: BigRational| -> BigRational { x.max(wlo.clone()).min(whi.clone()) };
        let (a_lo, a_hi) = (clip(a_lo), clip(a_hi));
        let (b_lo, b_hi) = (clip(b_lo), clip(b_hi));
        covered_lo += (&b_lo - &a_hi).max(zero.clone());
        covered_hi += (&b_hi - &a_lo).max(zero.clone());
    }
    let len = whi - wlo;
    (covered_lo / &len, covered_hi / &len)
}

/// Midpoint coverage as a plain float, for reports.
pub fn coverage_f64(intervals: &[&Interval], window: (&BigRational, &BigRational)) -> f64 {
    let (lo, hi) = coverage(intervals, window);
    let mid = (lo + hi) / BigRational::from_integer(big(2));
    crate::exactnum::ratio_to_f64(mid.numer(), mid.denom())
}

/// Every gap endpoint label produced inside `(1/(n+1), 1/n]` is expected to
/// have partial quotients bounded by `n`.
pub fn bounded_type_ok(gap: &Gap) -> bool {
    let lo_f = gap.interval.lo.to_f64();
    if lo_f <= 0.0 {
        return true;
    }
    let n = (1.0 / lo_f).ceil() as u64;
    let check = |label: &Option<CFString>| {
        label
            .as_ref()
            .map(|s| s.quotients().iter().all(|&a| a <= n))
            .unwrap_or(true)
    };
    check(&gap.label_lo) && check(&gap.label_hi)
}

/// Purely periodic value of a label.
pub fn label_value(s: &CFString) -> QuadSurd {
    cf_value(&PeriodicCF::purely_periodic(s))
}
