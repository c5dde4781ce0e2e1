//! Monte-Carlo entropy of the family: Birkhoff averages of
//! `f_eps(x) = -2 log|x|` (cut off below `eps`), per-orbit statistics for
//! the central-limit behaviour, invariant-density histograms with hyperbola
//! fits, the closed-form plateau value, and the logarithmic extrapolation
//! of the entropy across a matching interval.
//!
//! Everything here is plain `f64`; results never feed back into the exact
//! half, so rounding cannot corrupt interval certificates. Sampling is
//! deterministic: each orbit draws from its own stream seeded by
//! `(rng_seed, sample index)`, making estimates independent of the worker
//! count.

use crate::alphamap::step_f64;
use crate::exactnum::QuadSurd;
use crate::matching::MatchingInterval;
use num_rational::BigRational;
use num_traits::One;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    #[error("fit window spans a density jump (relative residual {0:.4})")]
    IllConditioned(f64),
    #[error("fit window covers fewer than {0} bins")]
    TooFewBins(usize),
    #[error("point lies outside the matching interval of the model")]
    OutsideMatchingInterval,
    #[error("alpha is not inside the supplied matching interval")]
    AlphaOutsideInterval,
}

/// What to do when an orbit lands within `epsilon` of the origin.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RestartPolicy {
    /// Count a zero contribution for that step and continue the pseudo-orbit
    /// from a fresh random point.
    RestartPoint,
    /// Throw the whole orbit away and start over.
    DiscardOrbit,
}

#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    /// Iterations per orbit (N).
    pub iterations: usize,
    /// Number of sample orbits (M).
    pub samples: usize,
    pub epsilon: f64,
    pub rng_seed: u64,
    pub restart_policy: RestartPolicy,
}

impl EstimatorConfig {
    pub fn new(iterations: usize, samples: usize, rng_seed: u64) -> Self {
        assert!(iterations >= 1 && samples >= 1);
        EstimatorConfig {
            iterations,
            samples,
            epsilon: 1e-16,
            rng_seed,
            restart_policy: RestartPolicy::RestartPoint,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EntropyEstimate {
    pub alpha: f64,
    /// Mean of the per-orbit Birkhoff averages.
    pub mean: f64,
    /// Spread of the per-orbit averages (population standard deviation).
    pub std: f64,
    pub iterations: usize,
    pub samples: usize,
}

impl EntropyEstimate {
    /// Standard error of `mean`.
    pub fn std_error(&self) -> f64 {
        self.std / (self.samples as f64).sqrt()
    }
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 round over the pair
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fresh_point(alpha: f64, rng: &mut ChaCha8Rng) -> f64 {
    alpha - 1.0 + rng.gen::<f64>()
}

fn orbit_average(alpha: f64, cfg: &EstimatorConfig, rng: &mut ChaCha8Rng) -> f64 {
    let n = cfg.iterations;
    match cfg.restart_policy {
        RestartPolicy::RestartPoint => {
            let mut x = fresh_point(alpha, rng);
            let mut sum = 0.0;
            for _ in 0..n {
                if x.abs() <= cfg.epsilon {
                    x = fresh_point(alpha, rng);
                } else {
                    sum += -2.0 * x.abs().ln();
                    x = step_f64(alpha, x).0;
                }
            }
            sum / n as f64
        }
        RestartPolicy::DiscardOrbit => 'orbit: loop {
            let mut x = fresh_point(alpha, rng);
            let mut sum = 0.0;
            for _ in 0..n {
                if x.abs() <= cfg.epsilon {
                    continue 'orbit;
                }
                sum += -2.0 * x.abs().ln();
                x = step_f64(alpha, x).0;
            }
            break sum / n as f64;
        },
    }
}

/// Entropy by Birkhoff averages over `M` independent orbits of length `N`.
pub fn birkhoff_entropy(alpha: f64, cfg: &EstimatorConfig) -> EntropyEstimate {
    let means: Vec<f64> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.rng_seed, i as u64));
            orbit_average(alpha, cfg, &mut rng)
        })
        .collect();
    // ordered reduction, independent of the parallel schedule
    let m = cfg.samples as f64;
    let mean = means.iter().sum::<f64>() / m;
    let var = means.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / m;
    EntropyEstimate {
        alpha,
        mean,
        std: var.sqrt(),
        iterations: cfg.iterations,
        samples: cfg.samples,
    }
}

/// Estimates on an evenly spaced grid over `window` (midpoint for a
/// single-point grid).
pub fn sigma_profile(window: (f64, f64), grid: usize, cfg: &EstimatorConfig) -> Vec<EntropyEstimate> {
    assert!(grid >= 1);
    let (lo, hi) = window;
    let alphas: Vec<f64> = if grid == 1 {
        vec![(lo + hi) / 2.0]
    } else {
        (0..grid)
            .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
            .collect()
    };
    alphas.into_iter().map(|a| birkhoff_entropy(a, cfg)).collect()
}

/// Occupation histogram of one long orbit over `[alpha-1, alpha]`.
#[derive(Clone, Debug)]
pub struct Histogram {
    pub alpha: f64,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        1.0 / self.counts.len() as f64
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.alpha - 1.0 + (i as f64 + 0.5) * self.bin_width()
    }

    /// Normalized so the piecewise-constant density integrates to 1.
    pub fn density(&self, i: usize) -> f64 {
        self.counts[i] as f64 / (self.total as f64 * self.bin_width())
    }

    pub fn total_mass(&self) -> f64 {
        (0..self.bins()).map(|i| self.density(i) * self.bin_width()).sum()
    }
}

/// Long-orbit simulation of the invariant density with a 10^3-step burn-in.
pub fn density_histogram(alpha: f64, points: usize, bins: usize, rng_seed: u64) -> Histogram {
    assert!(bins >= 10);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(rng_seed, 0xD15C));
    let mut counts = vec![0u64; bins];
    let mut x = fresh_point(alpha, &mut rng);
    for _ in 0..1000 {
        if x.abs() <= 1e-16 {
            x = fresh_point(alpha, &mut rng);
        } else {
            x = step_f64(alpha, x).0;
        }
    }
    let width = 1.0 / bins as f64;
    for _ in 0..points {
        if x.abs() <= 1e-16 {
            x = fresh_point(alpha, &mut rng);
        }
        let idx = (((x - (alpha - 1.0)) / width) as usize).min(bins - 1);
        counts[idx] += 1;
        x = step_f64(alpha, x).0;
    }
    Histogram {
        alpha,
        counts,
        total: points as u64,
    }
}

/// One hyperbola branch `rho(x) = A/(x + B)` fitted on a window.
#[derive(Clone, Copy, Debug)]
pub struct HyperbolaFit {
    pub a: f64,
    pub b: f64,
    pub window: (f64, f64),
    /// Relative RMS misfit of `1/rho` on the window.
    pub residual: f64,
}

impl HyperbolaFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.a / (x + self.b)
    }
}

/// Weighted least squares on the linearized model `1/rho = (x + B)/A`,
/// bin centers weighted by their counts.
pub fn fit_hyperbola(hist: &Histogram, window: (f64, f64)) -> Result<HyperbolaFit, EntropyError> {
    let (lo, hi) = window;
    let mut pts: Vec<(f64, f64, f64)> = Vec::new(); // (x, u = 1/rho, w)
    for i in 0..hist.bins() {
        let x = hist.bin_center(i);
        if x < lo || x > hi || hist.counts[i] == 0 {
            continue;
        }
        pts.push((x, 1.0 / hist.density(i), hist.counts[i] as f64));
    }
    if pts.len() < 5 {
        return Err(EntropyError::TooFewBins(5));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let sx: f64 = pts.iter().map(|p| p.0 * p.2).sum();
    let su: f64 = pts.iter().map(|p| p.1 * p.2).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0 * p.2).sum();
    let sxu: f64 = pts.iter().map(|p| p.0 * p.1 * p.2).sum();
    let denom = sw * sxx - sx * sx;
    let slope = (sw * sxu - sx * su) / denom;
    let intercept = (su - slope * sx) / sw;
    if !(slope.is_finite() && slope > 0.0) {
        return Err(EntropyError::IllConditioned(f64::INFINITY));
    }
    let mean_u = su / sw;
    let ss: f64 = pts
        .iter()
        .map(|(x, u, w)| {
            let e = u - (slope * x + intercept);
            w * e * e
        })
        .sum();
    let residual = (ss / sw).sqrt() / mean_u;
    let fit = HyperbolaFit {
        a: 1.0 / slope,
        b: intercept / slope,
        window,
        residual,
    };
    if residual > 0.05 {
        return Err(EntropyError::IllConditioned(residual));
    }
    Ok(fit)
}

/// Logarithmic entropy model across one matching interval.
#[derive(Clone, Copy, Debug)]
pub struct ExtrapolationModel {
    pub alpha0: f64,
    pub h0: f64,
    pub k1: u64,
    pub k2: u64,
    /// Hyperbola constants of the rightmost density branch at `alpha0`.
    pub a: f64,
    pub b: f64,
}

impl ExtrapolationModel {
    pub fn eval_unchecked(&self, x: f64) -> f64 {
        let dk = self.k2 as f64 - self.k1 as f64;
        self.h0 / (1.0 + dk * self.a * ((self.b + self.alpha0) / (self.b + x)).ln())
    }
}

/// `h(x) = h0 / (1 + (k2-k1) A log((B+alpha0)/(B+x)))`, valid only inside
/// the matching interval that produced the model.
pub fn entropy_extrapolate(
    model: &ExtrapolationModel,
    x: f64,
    within: &MatchingInterval,
) -> Result<f64, EntropyError> {
    let xr = BigRational::from_float(x).ok_or(EntropyError::OutsideMatchingInterval)?;
    if !within.interval.contains_ratio(&xr) {
        return Err(EntropyError::OutsideMatchingInterval);
    }
    Ok(model.eval_unchecked(x))
}

/// Closed-form plateau `pi^2 / (6 log((1+sqrt5)/2))`.
pub fn plateau_entropy() -> f64 {
    std::f64::consts::PI.powi(2) / (6.0 * ((1.0 + 5f64.sqrt()) / 2.0).ln())
}

/// Decimal expansion of the leftmost parameter with a certified closed-form
/// entropy (the cluster point of the rightmost period-doubling chain).
pub const PLATEAU_LEFT_DECIMAL: &str = "0.386749970714300706171524803485580939661";

fn plateau_left_bound() -> BigRational {
    let digits = &PLATEAU_LEFT_DECIMAL[2..];
    let num: num_bigint::BigInt = digits.parse().unwrap();
    BigRational::new(num, num_bigint::BigInt::from(10u8).pow(digits.len() as u32))
}

/// The exact entropy where it is known: the constant plateau on
/// `[0.38674997..., (sqrt5-1)/2]`. Elsewhere `None`.
pub fn closed_form_entropy(alpha: &QuadSurd) -> Option<f64> {
    let lower = plateau_left_bound();
    let upper = QuadSurd::from_parts(-1, 1, 2, 5);
    if alpha.cmp_ratio(&lower) != Ordering::Less && alpha.cmp_value(&upper) != Ordering::Greater {
        Some(plateau_entropy())
    } else {
        None
    }
}

/// Interior orbit points of a matching interval at `alpha`:
/// `{T^n(alpha): 1 <= n < k1} U {T^m(alpha-1): 1 <= m < k2}`, the jump set
/// of the invariant density minus the endpoints themselves.
pub fn interior_orbit_points(
    alpha: &BigRational,
    mi: &MatchingInterval,
) -> Result<Vec<f64>, EntropyError> {
    if !mi.interval.contains_ratio(alpha) {
        return Err(EntropyError::AlphaOutsideInterval);
    }
    let one = BigRational::one();
    let (pa, _) = crate::alphamap::expand_ratio(alpha, alpha, (mi.k1 - 1) as usize)
        .expect("alpha inside its matching interval");
    let (pb, _) = crate::alphamap::expand_ratio(alpha, &(alpha - &one), (mi.k2 - 1) as usize)
        .expect("alpha inside its matching interval");
    let mut pts: Vec<f64> = pa[1..]
        .iter()
        .chain(pb[1..].iter())
        .map(|r| crate::exactnum::ratio_to_f64(r.numer(), r.denom()))
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(pts)
}

/// The two hyperbola fit windows at `alpha`: `[max S, alpha]` and
/// `[alpha - 1, min S]`, with `S` the interior orbit-point set.
pub fn fit_windows(
    alpha: &BigRational,
    mi: &MatchingInterval,
) -> Result<((f64, f64), (f64, f64)), EntropyError> {
    let pts = interior_orbit_points(alpha, mi)?;
    let af = crate::exactnum::ratio_to_f64(alpha.numer(), alpha.denom());
    let max_s = *pts.last().expect("jump set is nonempty");
    let min_s = *pts.first().unwrap();
    Ok(((max_s, af), (af - 1.0, min_s)))
}

/// One-sided derivative comparison at a matching parameter.
#[derive(Clone, Copy, Debug)]
pub struct DerivativeReport {
    pub alpha: f64,
    pub k1: u64,
    pub k2: u64,
    /// Finite-difference slopes of the Birkhoff entropy.
    pub left_slope: f64,
    pub right_slope: f64,
    /// `h * (k2 - k1) * rho` with the density limit taken at `alpha^-`
    /// resp. `(alpha-1)^+` from the fitted hyperbola branches.
    pub predicted_left: f64,
    pub predicted_right: f64,
}

impl DerivativeReport {
    pub fn left_ratio(&self) -> f64 {
        self.left_slope / self.predicted_left
    }

    pub fn right_ratio(&self) -> f64 {
        self.right_slope / self.predicted_right
    }
}

/// Compares finite-difference entropy slopes against the density
/// prediction `h'(alpha) = h(alpha) (k2 - k1) rho(limit)`.
pub fn derivative_check(
    alpha: &BigRational,
    mi: &MatchingInterval,
    h_step: f64,
    cfg: &EstimatorConfig,
    density_points: usize,
    bins: usize,
) -> Result<DerivativeReport, EntropyError> {
    let af = crate::exactnum::ratio_to_f64(alpha.numer(), alpha.denom());
    let (right_window, left_window) = fit_windows(alpha, mi)?;
    let hist = density_histogram(af, density_points, bins, cfg.rng_seed);
    let fit_plus = fit_hyperbola(&hist, right_window)?;
    let fit_minus = fit_hyperbola(&hist, left_window)?;
    let h_mid = birkhoff_entropy(af, cfg).mean;
    let h_lo = birkhoff_entropy(af - h_step, cfg).mean;
    let h_hi = birkhoff_entropy(af + h_step, cfg).mean;
    let dk = mi.k2 as f64 - mi.k1 as f64;
    Ok(DerivativeReport {
        alpha: af,
        k1: mi.k1,
        k2: mi.k2,
        left_slope: (h_mid - h_lo) / h_step,
        right_slope: (h_hi - h_mid) / h_step,
        predicted_left: h_mid * dk * fit_plus.eval(af),
        predicted_right: h_mid * dk * fit_minus.eval(af - 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::ratio;
    use crate::matching::{solve_matching, MatchingCandidate};

    #[test]
    fn estimator_is_deterministic_across_worker_counts() {
        let cfg = EstimatorConfig::new(500, 400, 1234);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| birkhoff_entropy(0.53, &cfg));
        let quad = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| birkhoff_entropy(0.53, &cfg));
        assert_eq!(single.mean.to_bits(), quad.mean.to_bits());
        assert_eq!(single.std.to_bits(), quad.std.to_bits());
    }

    #[test]
    fn degenerate_single_sample_has_zero_std() {
        let cfg = EstimatorConfig::new(100, 1, 7);
        let est = birkhoff_entropy(0.5, &cfg);
        assert_eq!(est.std, 0.0);
    }

    #[test]
    fn restart_policies_agree_roughly() {
        let mut cfg = EstimatorConfig::new(2000, 500, 99);
        let a = birkhoff_entropy(0.47, &cfg);
        cfg.restart_policy = RestartPolicy::DiscardOrbit;
        let b = birkhoff_entropy(0.47, &cfg);
        assert!((a.mean - b.mean).abs() < 0.05, "{} vs {}", a.mean, b.mean);
    }

    #[test]
    fn plateau_smoke() {
        let cfg = EstimatorConfig::new(5000, 2000, 42);
        let est = birkhoff_entropy(0.5, &cfg);
        assert!(
            (est.mean - plateau_entropy()).abs() < 0.02,
            "mean {} vs plateau {}",
            est.mean,
            plateau_entropy()
        );
    }

    #[test]
    fn closed_form_range() {
        let val = plateau_entropy();
        assert!((val - 3.418315961).abs() < 1e-8);
        let some = |p, q, r, d| closed_form_entropy(&QuadSurd::from_parts(p, q, r, d));
        assert_eq!(some(42, 0, 100, 0), Some(val));
        assert_eq!(some(39, 0, 100, 0), Some(val));
        assert_eq!(some(2, 0, 10, 0), None);
        assert_eq!(some(-1, 1, 2, 5), Some(val)); // right end of the plateau
        assert_eq!(some(7, 0, 10, 0), None);
        // just below the certified left end
        assert_eq!(some(386749, 0, 1000000, 0), None);
    }

    #[test]
    fn histogram_mass_is_one() {
        let hist = density_histogram(0.338, 200_000, 500, 5);
        assert!((hist.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hyperbola_fit_recovers_synthetic_density() {
        // counts proportional to a true hyperbola A/(x+B)
        let (a_true, b_true) = (1.8, 1.6);
        let alpha = 0.34;
        let bins = 400;
        let width = 1.0 / bins as f64;
        let mut counts = vec![0u64; bins];
        let mut total = 0u64;
        for (i, c) in counts.iter_mut().enumerate() {
            let x = alpha - 1.0 + (i as f64 + 0.5) * width;
            let val = (1e7 * a_true / (x + b_true)) as u64;
            *c = val;
            total += val;
        }
        let hist = Histogram { alpha, counts, total };
        let norm = total as f64 * width; // density normalization constant
        let fit = fit_hyperbola(&hist, (0.05, 0.34)).unwrap();
        // fitted A is scaled by the normalization, B is invariant
        assert!((fit.b - b_true).abs() < 1e-3, "B = {}", fit.b);
        assert!((fit.a - a_true * 1e7 / norm).abs() < 1e-3 * fit.a);
        assert!(fit.residual < 1e-3);
    }

    #[test]
    fn extrapolation_examples() {
        let mi = solve_matching(&MatchingCandidate {
            seed: ratio(338, 1000),
            k1: 2,
            k2: 3,
        })
        .unwrap();
        let model = ExtrapolationModel {
            alpha0: 0.338,
            h0: 3.28311,
            k1: 2,
            k2: 3,
            a: 1.78963,
            b: 1.62987,
        };
        let at_alpha0 = entropy_extrapolate(&model, 0.338, &mi).unwrap();
        assert!((at_alpha0 - model.h0).abs() < 1e-12);
        assert!(entropy_extrapolate(&model, 0.25, &mi).is_err());
        // constant when k1 = k2
        let flat = ExtrapolationModel { k1: 3, k2: 3, ..model };
        let v = flat.eval_unchecked(0.36);
        assert_eq!(v, model.h0);
    }

    #[test]
    fn fit_windows_at_0338() {
        let mi = solve_matching(&MatchingCandidate {
            seed: ratio(338, 1000),
            k1: 2,
            k2: 3,
        })
        .unwrap();
        let ((wplus_lo, wplus_hi), (wminus_lo, wminus_hi)) =
            fit_windows(&ratio(338, 1000), &mi).unwrap();
        // S = {-7/169, -162/331, 7/162}
        assert!((wplus_lo - 7.0 / 162.0).abs() < 1e-12);
        assert!((wplus_hi - 0.338).abs() < 1e-12);
        assert!((wminus_lo - (0.338 - 1.0)).abs() < 1e-12);
        assert!((wminus_hi - (-162.0 / 331.0)).abs() < 1e-12);
    }

    #[test]
    fn derivative_sign_on_a_decreasing_interval() {
        // (2,1) interval: entropy strictly decreasing
        let mi = solve_matching(&MatchingCandidate { seed: ratio(8, 10), k1: 2, k2: 1 }).unwrap();
        let cfg = EstimatorConfig::new(4000, 1500, 11);
        let rep = derivative_check(&ratio(8, 10), &mi, 0.02, &cfg, 2_000_000, 400).unwrap();
        assert!(rep.left_slope < 0.0, "left slope {}", rep.left_slope);
        assert!(rep.right_slope < 0.0, "right slope {}", rep.right_slope);
        assert!(rep.predicted_left < 0.0 && rep.predicted_right < 0.0);
    }
}
