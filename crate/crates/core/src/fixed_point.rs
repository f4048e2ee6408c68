//! Monte-Carlo machinery for the SIS thermodynamic limit.
//!
//! `g(p)` is the infected fraction of the stationary output of an open SIS
//! reactor whose input has infected fraction `p`. The limit regime survives
//! iff `g` has a nonzero fixed point, iff `g'(0) > 1`. This module estimates
//! `g`, `g'(0)`, the fixed point and the critical density.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{air_amf_means, sis_threshold_bounds};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::reactor::{run_busy_cycles, CycleStats, ReactorKind, ReactorOptions};
use crate::rng::{RngSeed, SimRng};
use crate::stats::{mean_estimate, ratio_difference, ratio_estimate, z_quantile, Estimate, DEFAULT_CI_LEVEL};

/// Cycles per independently seeded block.
const CYCLE_BLOCK: usize = 2_000;
/// Excursions per independently seeded block.
const EXCURSION_BLOCK: usize = 5_000;
/// Safety cap on the events of one excursion.
const EXCURSION_EVENT_CAP: u64 = 50_000_000;

/// Which reactor the output map is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GMap {
    #[default]
    Sis,
    /// AIR reactor run at the self-consistent averaged infected level for `p`.
    AirAmf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GEstimate {
    pub p_in: f64,
    /// Cycle-ratio estimate `sum D_I / sum D`.
    pub p_out: Estimate,
    /// Time-average estimate `mu E[Y] / lambda` from the same cycles.
    pub time_average: Estimate,
    /// `p_out - time_average` with its joint standard error.
    pub discrepancy: Estimate,
    pub n_cycles: u64,
    pub params: ModelParams,
}

fn cycles_parallel(kind: ReactorKind, params: &ModelParams, n_cycles: usize, seed: RngSeed) -> Result<Vec<CycleStats>> {
    let blocks = n_cycles.div_ceil(CYCLE_BLOCK);
    let parts: Vec<Result<Vec<CycleStats>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let n = CYCLE_BLOCK.min(n_cycles - b * CYCLE_BLOCK);
            run_busy_cycles(kind, params, n, seed.substream(b as u64), &ReactorOptions::default())
        })
        .collect();
    let mut out = Vec::with_capacity(n_cycles);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Estimates `g(p)` from `n_cycles` busy cycles of the SIS reactor.
pub fn estimate_g(p: f64, params: &ModelParams, n_cycles: usize, seed: RngSeed) -> Result<GEstimate> {
    estimate_g_with(GMap::Sis, p, params, n_cycles, seed, DEFAULT_CI_LEVEL)
}

pub fn estimate_g_with(
    map: GMap,
    p: f64,
    params: &ModelParams,
    n_cycles: usize,
    seed: RngSeed,
    ci_level: f64,
) -> Result<GEstimate> {
    if n_cycles < 100 {
        return Err(Error::invalid("n_cycles", "need at least 100 cycles"));
    }
    let m = params.with_p(p)?;
    let kind = match map {
        GMap::Sis => ReactorKind::Sis,
        GMap::AirAmf => ReactorKind::Air {
            y_param: air_amf_means(&m)?.1.max(0.0),
        },
    };
    let cycles = cycles_parallel(kind, &m, n_cycles, seed)?;
    let d: Vec<f64> = cycles.iter().map(|c| c.departures as f64).collect();
    let di: Vec<f64> = cycles.iter().map(|c| c.infected_departures as f64).collect();
    let scale = m.mu() / m.lambda();
    let area: Vec<f64> = cycles.iter().map(|c| scale * c.infected_area).collect();
    let span: Vec<f64> = cycles.iter().map(|c| c.duration + c.idle_before).collect();
    Ok(GEstimate {
        p_in: p,
        p_out: ratio_estimate(&di, &d, ci_level)?,
        time_average: ratio_estimate(&area, &span, ci_level)?,
        discrepancy: ratio_difference(&di, &d, &area, &span, ci_level)?,
        n_cycles: n_cycles as u64,
        params: m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GPrimeMethod {
    /// Richardson-extrapolated difference quotient on coupled cycles.
    FiniteDifference,
    /// Mean infected departures caused by one infected arrival.
    Excursion,
}

/// Finite-difference step for density `eta`.
pub fn fd_step(eta: f64) -> f64 {
    0.05f64.min(1.0 / (10.0 * eta))
}

/// Per-cycle `(D, D_I at eps/2, D_I at eps)` for two SIS reactors with input
/// fractions `lo < hi` driven by shared clocks.
///
/// Customers are tracked as class counts: infected in both systems, infected
/// only in the `hi` system, and susceptible in both. Every clock acts on both
/// systems at once, so the departure sequence is common and the `lo` system's
/// infected set stays inside the `hi` system's.
fn coupled_cycle_counts(params: &ModelParams, lo: f64, hi: f64, n_cycles: usize, rng: &mut SimRng) -> Vec<[u64; 3]> {
    let (lam, mu, a, b) = (params.lambda(), params.mu(), params.alpha(), params.beta());
    let mut out = Vec::with_capacity(n_cycles);
    let mut c = [0u64; 3];
    let mut tally = [0u64; 3];
    while out.len() < n_cycles {
        let [c1, c2, c3] = c.map(|v| v as f64);
        let n = c1 + c2 + c3;
        let rates = [lam, mu * n, b * (c1 + c2), a * c1 * c2, a * c1 * c3, a * c2 * c3];
        let total: f64 = rates.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut ev = 5;
        for (i, r) in rates.iter().enumerate() {
            if *r > 0.0 && u < *r {
                ev = i;
                break;
            }
            u -= r;
        }
        if rates[ev] == 0.0 {
            ev = rates.iter().rposition(|&r| r > 0.0).unwrap_or(0);
        }
        match ev {
            0 => {
                if c == [0, 0, 0] {
                    tally = [0, 0, 0];
                }
                let v: f64 = rng.random();
                let k = if v < lo {
                    0
                } else if v < hi {
                    1
                } else {
                    2
                };
                c[k] += 1;
            }
            1 => {
                let v = rng.random::<f64>() * n;
                let k = if v < c1 {
                    0
                } else if v < c1 + c2 {
                    1
                } else {
                    2
                };
                let k = if c[k] == 0 { (0..3).rev().find(|&j| c[j] > 0).unwrap_or(0) } else { k };
                c[k] -= 1;
                tally[0] += 1;
                if k == 0 {
                    tally[1] += 1;
                }
                if k <= 1 {
                    tally[2] += 1;
                }
                if c == [0, 0, 0] {
                    out.push(tally);
                }
            }
            2 => {
                let k = if rng.random::<f64>() * (c1 + c2) < c1 && c[0] > 0 { 0 } else { 1 };
                let k = if c[k] == 0 { 1 - k } else { k };
                c[k] -= 1;
                c[2] += 1;
            }
            3 => {
                c[1] -= 1;
                c[0] += 1;
            }
            4 => {
                c[2] -= 1;
                c[0] += 1;
            }
            _ => {
                c[2] -= 1;
                c[1] += 1;
            }
        }
    }
    out
}

fn fd_samples(params: &ModelParams, n: usize, seed: RngSeed) -> (Vec<f64>, Vec<f64>) {
    let eps = fd_step(params.eta());
    let blocks = n.div_ceil(CYCLE_BLOCK);
    let parts: Vec<Vec<[u64; 3]>> = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let m = CYCLE_BLOCK.min(n - k * CYCLE_BLOCK);
            coupled_cycle_counts(params, 0.5 * eps, eps, m, &mut seed.substream(k as u64).rng())
        })
        .collect();
    let mut num = Vec::with_capacity(n);
    let mut den = Vec::with_capacity(n);
    for t in parts.into_iter().flatten() {
        num.push((4.0 * t[1] as f64 - t[2] as f64) / eps);
        den.push(t[0] as f64);
    }
    (num, den)
}

/// Infected departures generated by one infected customer joining the
/// stationary infection-free reactor.
fn excursion(params: &ModelParams, pois: &Option<Poisson<f64>>, rng: &mut SimRng) -> Result<u64> {
    let (lam, mu, a, b) = (params.lambda(), params.mu(), params.alpha(), params.beta());
    let mut x: u64 = pois.as_ref().map(|d| d.sample(rng) as u64).unwrap_or(0);
    let mut y: u64 = 1;
    let mut infected_out = 0u64;
    let mut steps = 0u64;
    while y > 0 {
        steps += 1;
        if steps > EXCURSION_EVENT_CAP {
            return Err(Error::Numerical(format!(
                "excursion exceeded {EXCURSION_EVENT_CAP} events; the local epidemic does not die out at these rates"
            )));
        }
        let (xf, yf) = (x as f64, y as f64);
        let r_arr = lam;
        let r_ds = mu * xf;
        let r_di = mu * yf;
        let r_rec = b * yf;
        let r_inf = a * xf * yf;
        let u = rng.random::<f64>() * (r_arr + r_ds + r_di + r_rec + r_inf);
        if u < r_arr {
            x += 1;
        } else if u < r_arr + r_ds {
            x = x.saturating_sub(1);
        } else if u < r_arr + r_ds + r_di {
            y -= 1;
            infected_out += 1;
        } else if u < r_arr + r_ds + r_di + r_rec {
            y -= 1;
            x += 1;
        } else if x > 0 {
            x -= 1;
            y += 1;
        }
    }
    Ok(infected_out)
}

fn excursion_samples(params: &ModelParams, n: usize, seed: RngSeed) -> Result<Vec<f64>> {
    let pois = if params.eta() > 0.0 {
        Some(Poisson::new(params.eta()).map_err(|e| Error::Numerical(e.to_string()))?)
    } else {
        None
    };
    let blocks = n.div_ceil(EXCURSION_BLOCK);
    let parts: Vec<Result<Vec<f64>>> = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let m = EXCURSION_BLOCK.min(n - k * EXCURSION_BLOCK);
            let mut rng = seed.substream(k as u64).rng();
            (0..m).map(|_| excursion(params, &pois, &mut rng).map(|v| v as f64)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Estimates `g'(0)` with `budget` cycles (finite difference) or excursions.
pub fn estimate_g_prime0(params: &ModelParams, method: GPrimeMethod, budget: usize, seed: RngSeed) -> Result<Estimate> {
    if budget < 10_000 {
        return Err(Error::invalid("budget", "need at least 10^4 cycles or excursions"));
    }
    let m = params.with_p(0.0)?;
    match method {
        GPrimeMethod::FiniteDifference => {
            let (num, den) = fd_samples(&m, budget, seed);
            ratio_estimate(&num, &den, DEFAULT_CI_LEVEL)
        }
        GPrimeMethod::Excursion => mean_estimate(&excursion_samples(&m, budget, seed)?, DEFAULT_CI_LEVEL),
    }
}

/// Both estimators of `g'(0)` on independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GPrimeCrossCheck {
    pub finite_difference: Estimate,
    pub excursion: Estimate,
    /// Difference over its joint standard error.
    pub z_score: f64,
}

/// Runs both estimators; disagreement beyond three joint standard errors is
/// an error.
pub fn cross_validate_g_prime0(params: &ModelParams, budget: usize, seed: RngSeed) -> Result<GPrimeCrossCheck> {
    let fd = estimate_g_prime0(params, GPrimeMethod::FiniteDifference, budget, seed.substream(0))?;
    let ex = estimate_g_prime0(params, GPrimeMethod::Excursion, budget, seed.substream(1))?;
    let se = (fd.std_error.powi(2) + ex.std_error.powi(2)).sqrt();
    let z = if se > 0.0 { (fd.value - ex.value) / se } else { 0.0 };
    if z.abs() > 3.0 {
        return Err(Error::Numerical(format!(
            "g'(0) estimators disagree: finite difference {} +/- {}, excursion {} +/- {}",
            fd.value, fd.std_error, ex.value, ex.std_error
        )));
    }
    Ok(GPrimeCrossCheck {
        finite_difference: fd,
        excursion: ex,
        z_score: z,
    })
}

/// Settings of the damped fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PStarConfig {
    pub tol: f64,
    pub cycles_per_step: usize,
    pub max_iter: usize,
    pub map: GMap,
}

impl Default for PStarConfig {
    fn default() -> Self {
        PStarConfig {
            tol: 1e-3,
            cycles_per_step: 50_000,
            max_iter: 200,
            map: GMap::Sis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PStarResult {
    pub p_star: Estimate,
    pub iterations: usize,
    /// `(p, g(p), se)` for every step.
    pub trace: Vec<(f64, f64, f64)>,
    pub subcritical: bool,
}

/// Largest fixed point of `g` with the default settings and tolerance `tol`.
pub fn find_p_star(params: &ModelParams, tol: f64, seed: RngSeed) -> Result<PStarResult> {
    find_p_star_with(
        params,
        &PStarConfig {
            tol,
            ..PStarConfig::default()
        },
        seed,
    )
}

/// Iterates `p <- g(p)` from `p = 1`. A step that moves up (only possible
/// through noise, since the iterates decrease towards the fixed point) is
/// halved.
pub fn find_p_star_with(params: &ModelParams, cfg: &PStarConfig, seed: RngSeed) -> Result<PStarResult> {
    if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
        return Err(Error::invalid("tol", "must lie in (0, 1)"));
    }
    let mut p = 1.0;
    let mut trace = Vec::new();
    for k in 0..cfg.max_iter {
        let g = estimate_g_with(cfg.map, p, params, cfg.cycles_per_step, seed.substream(k as u64), DEFAULT_CI_LEVEL)?;
        let gv = g.p_out.value;
        let se = g.p_out.std_error;
        trace.push((p, gv, se));
        if gv <= cfg.tol {
            return Ok(PStarResult {
                p_star: Estimate::new(0.0, 0.0, g.n_cycles, DEFAULT_CI_LEVEL),
                iterations: k + 1,
                trace,
                subcritical: true,
            });
        }
        if (p - gv).abs() < cfg.tol.max(3.0 * se) {
            return Ok(PStarResult {
                p_star: g.p_out,
                iterations: k + 1,
                trace,
                subcritical: false,
            });
        }
        p = if gv > p { p + 0.5 * (gv - p) } else { gv };
    }
    Err(Error::Numerical(format!(
        "fixed-point iteration did not settle in {} steps; last (p, g, se) = {:?}",
        cfg.max_iter,
        trace.last()
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `g'(0) > 1`: survival.
    Above,
    /// `g'(0) < 1`: extinction.
    Below,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub eta: f64,
    pub g_prime0: Estimate,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearchResult {
    /// Midpoint of the final bracket; its confidence interval is the bracket.
    pub eta_c: Estimate,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub verdicts: Vec<VerdictRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub ci_level: f64,
    /// Most samples spent at one density.
    pub budget_per_point: usize,
    /// First batch of samples at a density; later batches double.
    pub initial_chunk: usize,
    /// Stop once the bracket is narrower than this.
    pub precision: f64,
    pub max_points: usize,
    pub method: GPrimeMethod,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            ci_level: DEFAULT_CI_LEVEL,
            budget_per_point: 1_000_000,
            initial_chunk: 20_000,
            precision: 0.02,
            max_points: 40,
            method: GPrimeMethod::Excursion,
        }
    }
}

/// Samples `g'(0, eta)` in doubling batches until its confidence interval
/// excludes 1 or the budget runs out.
pub fn g_prime0_verdict(params: &ModelParams, cfg: &ThresholdConfig, seed: RngSeed) -> Result<VerdictRecord> {
    let m = params.with_p(0.0)?;
    let z = z_quantile(cfg.ci_level);
    let mut num: Vec<f64> = Vec::new();
    let mut den: Vec<f64> = Vec::new();
    let mut chunk = cfg.initial_chunk.max(10_000);
    let mut k = 0u64;
    loop {
        let take = chunk.min(cfg.budget_per_point - num.len());
        match cfg.method {
            GPrimeMethod::Excursion => {
                let s = excursion_samples(&m, take, seed.substream(k))?;
                den.extend(std::iter::repeat_n(1.0, s.len()));
                num.extend(s);
            }
            GPrimeMethod::FiniteDifference => {
                let (a, b) = fd_samples(&m, take, seed.substream(k));
                num.extend(a);
                den.extend(b);
            }
        }
        k += 1;
        let est = ratio_estimate(&num, &den, cfg.ci_level)?;
        let verdict = if est.value - z * est.std_error > 1.0 {
            Verdict::Above
        } else if est.value + z * est.std_error < 1.0 {
            Verdict::Below
        } else {
            Verdict::Indeterminate
        };
        if verdict != Verdict::Indeterminate || num.len() >= cfg.budget_per_point {
            return Ok(VerdictRecord {
                eta: m.eta(),
                g_prime0: est,
                verdict,
            });
        }
        chunk *= 2;
    }
}

/// Stochastic bisection for the SIS critical density between the proven
/// lower and upper bounds.
pub fn find_eta_c(mu: f64, alpha: f64, beta: f64, cfg: &ThresholdConfig, seed: RngSeed) -> Result<ThresholdSearchResult> {
    let (mut lo, mut hi) = sis_threshold_bounds(mu, alpha, beta)?;
    if cfg.budget_per_point < 10_000 {
        return Err(Error::invalid("budget_per_point", "need at least 10^4"));
    }
    let at = |eta: f64, idx: u64| -> Result<VerdictRecord> {
        let m = ModelParams::from_eta(eta, mu, alpha, beta, 0.0)?;
        g_prime0_verdict(&m, cfg, seed.substream(idx))
    };
    let mut verdicts = Vec::new();
    let v_lo = at(lo, 0)?;
    let v_hi = at(hi, 1)?;
    verdicts.push(v_lo);
    verdicts.push(v_hi);
    if v_lo.verdict != Verdict::Below || v_hi.verdict != Verdict::Above {
        return Err(Error::Numerical(format!(
            "threshold bounds not confirmed: {:?} at {lo}, {:?} at {hi}",
            v_lo.verdict, v_hi.verdict
        )));
    }
    // Span of densities with indeterminate verdicts inside (lo, hi).
    let mut gap: Option<(f64, f64)> = None;
    let mut left_turn = true;
    while verdicts.len() < cfg.max_points {
        let eta = match gap {
            None if hi - lo > cfg.precision => 0.5 * (lo + hi),
            None => break,
            Some((g0, g1)) => {
                let left_open = g0 - lo > cfg.precision;
                let right_open = hi - g1 > cfg.precision;
                match (left_open, right_open) {
                    (false, false) => break,
                    (true, false) => 0.5 * (lo + g0),
                    (false, true) => 0.5 * (g1 + hi),
                    (true, true) => {
                        left_turn = !left_turn;
                        if left_turn {
                            0.5 * (g1 + hi)
                        } else {
                            0.5 * (lo + g0)
                        }
                    }
                }
            }
        };
        let rec = at(eta, verdicts.len() as u64)?;
        verdicts.push(rec);
        match rec.verdict {
            Verdict::Below => lo = eta,
            Verdict::Above => hi = eta,
            Verdict::Indeterminate => {
                gap = Some(match gap {
                    None => (eta, eta),
                    Some((g0, g1)) => (g0.min(eta), g1.max(eta)),
                })
            }
        }
        if let Some((g0, g1)) = gap {
            let g0 = g0.max(lo);
            let g1 = g1.min(hi);
            gap = if g0 <= g1 && g0 > lo && g1 < hi { Some((g0, g1)) } else { None };
        }
    }
    let z = z_quantile(cfg.ci_level);
    Ok(ThresholdSearchResult {
        eta_c: Estimate::new(0.5 * (lo + hi), (hi - lo) / (2.0 * z), verdicts.len() as u64, cfg.ci_level),
        bracket: (lo, hi),
        iterations: verdicts.len(),
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_eta(eta: f64) -> ModelParams {
        ModelParams::from_eta(eta, 1.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn g_of_zero_is_exactly_zero() {
        let g = estimate_g(0.0, &at_eta(1.5), 500, RngSeed::new(1, 0)).unwrap();
        assert_eq!(g.p_out.value, 0.0);
        assert_eq!(g.p_out.std_error, 0.0);
    }

    #[test]
    fn g_of_one_is_below_one() {
        let g = estimate_g(1.0, &at_eta(1.5), 20_000, RngSeed::new(2, 0)).unwrap();
        let (_, hi) = g.p_out.ci();
        assert!(hi < 1.0);
    }

    #[test]
    fn cycle_and_time_average_estimators_agree() {
        let g = estimate_g(0.4, &at_eta(2.0), 40_000, RngSeed::new(3, 0)).unwrap();
        assert!(g.discrepancy.within_k_se(0.0, 3.0), "{:?}", g.discrepancy);
        assert!(g.discrepancy.std_error > 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = estimate_g(0.3, &at_eta(1.0), 4_100, RngSeed::new(4, 0)).unwrap();
        let b = estimate_g(0.3, &at_eta(1.0), 4_100, RngSeed::new(4, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sparse_limit_of_derivative() {
        // Nearly alone in the station, an infected customer leaves infected
        // with probability mu/(mu+beta).
        let m = derive(0.01, 1.0, 1.0, 1.0);
        let e = estimate_g_prime0(&m, GPrimeMethod::Excursion, 40_000, RngSeed::new(5, 0)).unwrap();
        assert!((e.value - 0.5).abs() < 0.02, "{e:?}");
    }

    fn derive(lam: f64, mu: f64, a: f64, b: f64) -> ModelParams {
        crate::params::derive_params(lam, mu, a, b, 0.0, None).unwrap()
    }

    #[test]
    fn two_derivative_estimators_agree() {
        for eta in [0.5, 1.5] {
            let c = cross_validate_g_prime0(&at_eta(eta), 200_000, RngSeed::new(6, 0)).unwrap();
            assert!(c.z_score.abs() < 3.0);
        }
    }

    #[test]
    fn coupled_counts_are_ordered_per_cycle() {
        let mut rng = RngSeed::new(7, 0).rng();
        for t in coupled_cycle_counts(&at_eta(2.0), 0.2, 0.5, 5_000, &mut rng) {
            assert!(t[1] <= t[2] && t[2] <= t[0] && t[0] >= 1);
        }
    }

    #[test]
    fn subcritical_fixed_point_is_zero() {
        // Below the proven lower bound beta/(2 mu + 5 beta) = 1/7.
        let r = find_p_star(&at_eta(0.1), 1e-3, RngSeed::new(8, 0)).unwrap();
        assert_eq!(r.p_star.value, 0.0);
        assert!(r.subcritical);
    }

    #[test]
    fn supercritical_fixed_point_is_positive() {
        let r = find_p_star(&at_eta(5.0), 1e-3, RngSeed::new(9, 0)).unwrap();
        let (lo, _) = r.p_star.ci();
        assert!(lo > 0.0, "{r:?}");
        assert!(r.p_star.value <= crate::analytic::p_star_upper_bound(&at_eta(5.0)) + 3.0 * r.p_star.std_error);
    }

    #[test]
    fn air_map_fixed_point() {
        let cfg = PStarConfig {
            map: GMap::AirAmf,
            ..PStarConfig::default()
        };
        let r = find_p_star_with(&at_eta(2.0), &cfg, RngSeed::new(10, 0)).unwrap();
        assert!((r.p_star.value - 0.5).abs() < 0.01_f64.max(4.0 * r.p_star.std_error), "{r:?}");
    }
}
