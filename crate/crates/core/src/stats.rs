//! Point estimates with standard errors.
//!
//! Regenerative quantities use the delta method on a ratio of means; time
//! averages use batch means (see [`crate::observe`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CI_LEVEL: f64 = 0.95;

/// Monte-Carlo estimate. `n` counts the independent units behind the
/// standard error (cycles, excursions or batches).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
    pub ci_level: f64,
}

impl Estimate {
    /// A value known without sampling error.
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            std_error: 0.0,
            n: 0,
            ci_level: DEFAULT_CI_LEVEL,
        }
    }

    pub fn new(value: f64, std_error: f64, n: u64, ci_level: f64) -> Self {
        Estimate {
            value,
            std_error,
            n,
            ci_level,
        }
    }

    pub fn half_width(&self) -> f64 {
        z_quantile(self.ci_level) * self.std_error
    }

    pub fn ci(&self) -> (f64, f64) {
        let h = self.half_width();
        (self.value - h, self.value + h)
    }

    pub fn ci_contains(&self, v: f64) -> bool {
        let (lo, hi) = self.ci();
        lo <= v && v <= hi
    }

    /// True when `|value - target| <= k * std_error`.
    pub fn within_k_se(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }

    pub fn with_level(mut self, ci_level: f64) -> Self {
        self.ci_level = ci_level;
        self
    }
}

/// Two-sided standard normal quantile for a confidence level, i.e.
/// `Phi^{-1}((1 + level) / 2)`.
pub fn z_quantile(level: f64) -> f64 {
    const TABLE: [(f64, f64); 3] = [
        (0.90, 1.644_853_626_951_472_2),
        (0.95, 1.959_963_984_540_054),
        (0.99, 2.575_829_303_548_900_4),
    ];
    for (l, z) in TABLE {
        if (level - l).abs() < 1e-12 {
            return z;
        }
    }
    normal_quantile(0.5 * (1.0 + level))
}

/// Inverse standard normal CDF by Acklam's rational approximation
/// (relative error below 1.2e-9 on (0, 1)).
pub fn normal_quantile(u: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    const P_LOW: f64 = 0.024_25;
    if u < P_LOW {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if u <= 1.0 - P_LOW {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - u)
    }
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

/// Regenerative ratio-of-means estimator with a delta-method standard error.
pub fn ratio_estimate(numerators: &[f64], denominators: &[f64], ci_level: f64) -> Result<Estimate> {
    let n = numerators.len();
    if n != denominators.len() {
        return Err(Error::invalid(
            "samples",
            format!("length mismatch: {} numerators vs {} denominators", n, denominators.len()),
        ));
    }
    if n < 2 {
        return Err(Error::invalid("samples", "need at least 2 samples"));
    }
    let sum_num: f64 = numerators.iter().sum();
    let sum_den: f64 = denominators.iter().sum();
    if sum_den <= 0.0 || !sum_den.is_finite() {
        return Err(Error::invalid("denominators", "mean denominator must be > 0"));
    }
    let value = sum_num / sum_den;
    if is_constant(numerators) && is_constant(denominators) {
        return Ok(Estimate::new(value, 0.0, n as u64, ci_level));
    }
    let nf = n as f64;
    let ss: f64 = numerators
        .iter()
        .zip(denominators)
        .map(|(a, b)| {
            let r = a - value * b;
            r * r
        })
        .sum();
    let se = (ss / (nf - 1.0) / nf).sqrt() / (sum_den / nf);
    Ok(Estimate::new(value, se, n as u64, ci_level))
}

/// Sample mean with the usual iid standard error.
pub fn mean_estimate(samples: &[f64], ci_level: f64) -> Result<Estimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid("samples", "need at least 2 samples"));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    if is_constant(samples) {
        return Ok(Estimate::new(mean, 0.0, n as u64, ci_level));
    }
    let ss: f64 = samples.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(Estimate::new(mean, (ss / (nf - 1.0) / nf).sqrt(), n as u64, ci_level))
}

/// Difference `R_a - R_b` of two ratio-of-means estimators computed on the
/// same units, with the joint delta-method standard error.
pub fn ratio_difference(
    a_num: &[f64],
    a_den: &[f64],
    b_num: &[f64],
    b_den: &[f64],
    ci_level: f64,
) -> Result<Estimate> {
    let n = a_num.len();
    if a_den.len() != n || b_num.len() != n || b_den.len() != n {
        return Err(Error::invalid("samples", "length mismatch"));
    }
    if n < 2 {
        return Err(Error::invalid("samples", "need at least 2 samples"));
    }
    let nf = n as f64;
    let ma = a_den.iter().sum::<f64>() / nf;
    let mb = b_den.iter().sum::<f64>() / nf;
    if ma <= 0.0 || mb <= 0.0 {
        return Err(Error::invalid("denominators", "mean denominator must be > 0"));
    }
    let ra = a_num.iter().sum::<f64>() / nf / ma;
    let rb = b_num.iter().sum::<f64>() / nf / mb;
    let infl: Vec<f64> = (0..n)
        .map(|i| (a_num[i] - ra * a_den[i]) / ma - (b_num[i] - rb * b_den[i]) / mb)
        .collect();
    let ss: f64 = infl.iter().map(|v| v * v).sum();
    Ok(Estimate::new(ra - rb, (ss / (nf - 1.0) / nf).sqrt(), n as u64, ci_level))
}
