//! Slotted particle scheme for the SIS mean-field limit.
//!
//! `M` independent replicas of one station. In each slot of length `h`, every
//! replica receives Poisson(`h mu mean_x`) susceptible and Poisson(`h mu
//! mean_y`) infected arrivals, the means being taken over the ensemble at the
//! start of the slot. Each present customer resolves its competing exponential
//! clocks over the slot: a susceptible leaves or is infected at total rate
//! `mu + alpha y`, an infected leaves or recovers at total rate `mu + beta`.

use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelParams, ReactorState};
use crate::rng::{RngSeed, SimRng};
use crate::stats::{mean_estimate, Estimate, DEFAULT_CI_LEVEL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanFieldInit {
    /// Poisson(`eta`) customers per replica, each infected with probability `p0`.
    Poisson { p0: f64 },
    Explicit(Vec<ReactorState>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldConfig {
    /// Slot length; `None` uses `0.01` over the largest per-customer rate.
    pub h: Option<f64>,
    /// Fraction of slots discarded before time averaging.
    pub burn_in: f64,
    pub batches: usize,
    /// Number of trajectory rows (roughly).
    pub rows: usize,
}

impl Default for MeanFieldConfig {
    fn default() -> Self {
        MeanFieldConfig {
            h: None,
            burn_in: 0.1,
            batches: 50,
            rows: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldRow {
    pub t: f64,
    pub mean_x: f64,
    pub mean_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldRun {
    pub h: f64,
    pub slots: u64,
    pub trajectory: Vec<MeanFieldRow>,
    /// Post-burn-in time averages of the ensemble means.
    pub mean_x: Estimate,
    pub mean_y: Estimate,
    /// Set when `h` times a per-customer rate exceeded 0.5.
    pub warning: Option<String>,
}

struct Replica {
    s: ReactorState,
    rng: SimRng,
}

fn binomial(n: u32, p: f64, rng: &mut SimRng) -> Result<u32> {
    if n == 0 || p <= 0.0 {
        return Ok(0);
    }
    if p >= 1.0 {
        return Ok(n);
    }
    let d = Binomial::new(u64::from(n), p).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(d.sample(rng) as u32)
}

fn poisson(mean: f64, rng: &mut SimRng) -> Result<u32> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::Numerical(e.to_string()))?;
    let v = d.sample(rng);
    if v > f64::from(u32::MAX) {
        return Err(Error::Overflow("mean-field arrivals"));
    }
    Ok(v as u32)
}

impl Replica {
    fn step(&mut self, m: &ModelParams, h: f64, mean_x: f64, mean_y: f64) -> Result<()> {
        let (x, y) = (self.s.x, self.s.y);
        let rng = &mut self.rng;
        let r_s = m.mu() + m.alpha() * f64::from(y);
        let leave_s = binomial(x, 1.0 - (-h * r_s).exp(), rng)?;
        let dep_s = binomial(leave_s, m.mu() / r_s, rng)?;
        let infected = leave_s - dep_s;
        let r_i = m.mu() + m.beta();
        let leave_i = binomial(y, 1.0 - (-h * r_i).exp(), rng)?;
        let dep_i = binomial(leave_i, m.mu() / r_i, rng)?;
        let recovered = leave_i - dep_i;
        let arr_s = poisson(h * m.mu() * mean_x, rng)?;
        let arr_i = poisson(h * m.mu() * mean_y, rng)?;
        let nx = u64::from(x - leave_s) + u64::from(recovered) + u64::from(arr_s);
        let ny = u64::from(y - leave_i) + u64::from(infected) + u64::from(arr_i);
        self.s = ReactorState::new(
            u32::try_from(nx).map_err(|_| Error::Overflow("replica x"))?,
            u32::try_from(ny).map_err(|_| Error::Overflow("replica y"))?,
        );
        Ok(())
    }
}

fn ensemble_means(reps: &[Replica]) -> (f64, f64, u32) {
    let n = reps.len() as f64;
    let (mut sx, mut sy, mut my) = (0u64, 0u64, 0u32);
    for r in reps {
        sx += u64::from(r.s.x);
        sy += u64::from(r.s.y);
        my = my.max(r.s.y);
    }
    (sx as f64 / n, sy as f64 / n, my)
}

/// Runs the slotted scheme for `m` replicas over `[0, horizon]`.
pub fn simulate_meanfield(
    m: usize,
    params: &ModelParams,
    init: &MeanFieldInit,
    horizon: f64,
    seed: RngSeed,
    cfg: &MeanFieldConfig,
) -> Result<MeanFieldRun> {
    if m < 100 {
        return Err(Error::invalid("m", "need at least 100 replicas"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon", "must be > 0"));
    }
    let h = cfg
        .h
        .unwrap_or(0.01 / (params.mu() + params.beta().max(params.alpha() * params.eta().max(1.0))));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", "must be > 0"));
    }
    let mut init_rng = seed.substream(u64::MAX).rng();
    let states: Vec<ReactorState> = match init {
        MeanFieldInit::Explicit(v) => {
            if v.len() != m {
                return Err(Error::invalid("init", format!("expected {m} replicas, got {}", v.len())));
            }
            v.clone()
        }
        MeanFieldInit::Poisson { p0 } => {
            if !(0.0..=1.0).contains(p0) {
                return Err(Error::invalid("p0", format!("p out of range [0,1]: {p0}")));
            }
            (0..m)
                .map(|_| {
                    let n = poisson(params.eta(), &mut init_rng)?;
                    let y = binomial(n, *p0, &mut init_rng)?;
                    Ok(ReactorState::new(n - y, y))
                })
                .collect::<Result<_>>()?
        }
    };
    let mut reps: Vec<Replica> = states
        .into_iter()
        .enumerate()
        .map(|(i, s)| Replica {
            s,
            rng: seed.substream(i as u64).rng(),
        })
        .collect();
    let slots = (horizon / h).ceil().max(1.0) as u64;
    let every = (slots / cfg.rows.max(1) as u64).max(1);
    let burn = (cfg.burn_in * slots as f64) as u64;
    let mut trajectory = Vec::new();
    let mut series_x = Vec::new();
    let mut series_y = Vec::new();
    let mut warning = None;
    let (mut mx, mut my, mut ymax) = ensemble_means(&reps);
    for k in 0..slots {
        if k % every == 0 {
            trajectory.push(MeanFieldRow {
                t: k as f64 * h,
                mean_x: mx,
                mean_y: my,
            });
        }
        if k >= burn {
            series_x.push(mx);
            series_y.push(my);
        }
        let worst = h * (params.mu() + params.beta().max(params.alpha() * f64::from(ymax)));
        if worst > 0.5 && warning.is_none() {
            warning = Some(format!("slot length {h} gives per-customer slot hazard {worst:.3} > 0.5; discretization bias"));
        }
        reps.par_iter_mut().try_for_each(|r| r.step(params, h, mx, my))?;
        (mx, my, ymax) = ensemble_means(&reps);
    }
    trajectory.push(MeanFieldRow {
        t: slots as f64 * h,
        mean_x: mx,
        mean_y: my,
    });
    Ok(MeanFieldRun {
        h,
        slots,
        trajectory,
        mean_x: batch_estimate(&series_x, cfg.batches)?,
        mean_y: batch_estimate(&series_y, cfg.batches)?,
        warning,
    })
}

fn batch_estimate(series: &[f64], batches: usize) -> Result<Estimate> {
    let b = batches.max(2).min(series.len().max(1));
    let len = series.len() / b;
    if len == 0 {
        return Err(Error::invalid("horizon", "too few slots after burn-in"));
    }
    let means: Vec<f64> = series.chunks_exact(len).take(b).map(|c| c.iter().sum::<f64>() / len as f64).collect();
    mean_estimate(&means, DEFAULT_CI_LEVEL)
}
