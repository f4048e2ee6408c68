//! Closed-form quantities: AIR product form and averaged-infection means,
//! the DOCS reactor mean and thermodynamic fixed point (by quadrature),
//! thresholds, SIS threshold bounds, branching ratios and the unconditional
//! upper bound on the SIS fixed point.

pub mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use quadrature::{integrate, Quadrature, MAX_PANELS};

/// Absolute tolerance used for the DOCS integrals.
pub const DOCS_TOL: f64 = 1e-10;

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

/// AIR survival threshold `beta / alpha`.
pub fn air_threshold(alpha: f64, beta: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    Ok(beta / alpha)
}

/// Stationary AIR thermodynamic-limit station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirTlStationary {
    pub mean_x: f64,
    pub mean_y: f64,
    pub p_star: f64,
    pub q_star: f64,
    pub survival: bool,
}

pub fn air_tl_stationary(params: &ModelParams) -> AirTlStationary {
    let eta = params.eta();
    let c = params.beta() / params.alpha();
    if eta > c {
        let q = c / eta;
        AirTlStationary {
            mean_x: c,
            mean_y: eta - c,
            p_star: 1.0 - q,
            q_star: q,
            survival: true,
        }
    } else {
        AirTlStationary {
            mean_x: eta,
            mean_y: 0.0,
            p_star: 0.0,
            q_star: 1.0,
            survival: false,
        }
    }
}

/// Traffic solution of the AIR tandem for a given infected level `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirTraffic {
    /// Total arrival rate into the susceptible station.
    pub lambda1: f64,
    /// Total arrival rate into the infected station.
    pub lambda2: f64,
    /// Mean occupancy of the susceptible station, `lambda1 / (mu + alpha*y)`.
    pub mean_station1: f64,
    /// Mean occupancy of the infected station, `lambda2 / (mu + beta)`.
    pub mean_station2: f64,
}

pub fn air_traffic(params: &ModelParams, y: f64) -> Result<AirTraffic> {
    if !(y.is_finite() && y >= 0.0) {
        return Err(Error::invalid("y", format!("must be finite and >= 0, got {y}")));
    }
    let (lam, mu, a, b) = (params.lambda(), params.mu(), params.alpha(), params.beta());
    let ay = a * y;
    let lambda1 = (mu + ay) * (b + mu * params.q()) * lam / ((mu + b) * (mu + ay) - b * ay);
    let lambda2 = lam * params.p() + lambda1 * ay / (mu + ay);
    Ok(AirTraffic {
        lambda1,
        lambda2,
        mean_station1: lambda1 / (mu + ay),
        mean_station2: lambda2 / (mu + b),
    })
}

/// Self-consistent AIR means `(E[X], E[Y])` for input fraction `p`: the
/// smaller root of `alpha x^2 - (mu + beta + alpha*eta) x + lambda*q + beta*eta`.
pub fn air_amf_means(params: &ModelParams) -> Result<(f64, f64)> {
    let (lam, mu, a, b) = (params.lambda(), params.mu(), params.alpha(), params.beta());
    let eta = params.eta();
    let bq = mu + b + a * eta;
    let c = lam * (params.q() + b / mu);
    let disc = bq * bq - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::Numerical(format!("negative discriminant {disc}")));
    }
    // Rationalized form of (bq - sqrt(disc)) / (2a), free of cancellation.
    let x = 2.0 * c / (bq + disc.sqrt());
    let y = eta - x;
    let lhs = lam * params.q();
    let rhs = mu * (eta - y) - b * y + a * y * (eta - y);
    let scale = lhs.abs().max(mu * eta).max(1.0);
    if (lhs - rhs).abs() > 1e-10 * scale {
        return Err(Error::Numerical(format!("AIR traffic residual {:e}", lhs - rhs)));
    }
    Ok((x, y))
}

/// `prefactor / c * integral_0^1 exp(-decay (1 - s^(1/c))) ds`, which equals
/// `prefactor * integral_0^1 exp(-decay (1 - t)) t^(c-1) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocsIntegralSpec {
    pub prefactor: f64,
    pub decay: f64,
    pub exponent: f64,
}

impl DocsIntegralSpec {
    pub fn evaluate(&self, tol: f64) -> Result<Quadrature> {
        let c = self.exponent;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Numerical(format!("integral exponent must be > 0, got {c}")));
        }
        if self.prefactor == 0.0 {
            return Ok(Quadrature {
                value: 0.0,
                error_bound: 0.0,
                panels: 0,
            });
        }
        let scale = self.prefactor / c;
        let inv_c = 1.0 / c;
        let a = self.decay;
        let q = integrate(|s: f64| (-a * (1.0 - s.powf(inv_c))).exp(), 0.0, 1.0, tol / scale.abs(), MAX_PANELS)?;
        Ok(Quadrature {
            value: scale * q.value,
            error_bound: scale.abs() * q.error_bound,
            panels: q.panels,
        })
    }
}

/// Integral representation of the DOCS reactor mean `E[X]`.
pub fn docs_integral_spec(params: &ModelParams) -> DocsIntegralSpec {
    let (lam, mu, a, nu) = (params.lambda(), params.mu(), params.alpha(), params.nu());
    let na = nu + a;
    DocsIntegralSpec {
        prefactor: lam * params.q() / na,
        decay: lam * params.p() * a * a / (nu * na * na),
        exponent: mu / na + lam * params.p() * a / (na * na),
    }
}

/// Stationary mean number of susceptible customers in the DOCS reactor.
pub fn docs_mean_x(params: &ModelParams) -> Result<f64> {
    Ok(docs_integral_spec(params).evaluate(DOCS_TOL)?.value)
}

/// DOCS thermodynamic threshold `(beta/alpha)(1 + alpha/(2 mu + beta))`.
pub fn docs_tl_threshold(mu: f64, alpha: f64, beta: f64) -> Result<f64> {
    positive("mu", mu)?;
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    Ok(beta / alpha * (1.0 + alpha / (2.0 * mu + beta)))
}

/// Integral form of the DOCS thermodynamic fixed-point map at input `p`.
///
/// The expression is analytic in `p`; values slightly below 0 are accepted
/// as long as the exponent stays positive, which central differences at 0
/// rely on.
pub fn docs_tl_rhs_spec(p: f64, params: &ModelParams) -> DocsIntegralSpec {
    let (mu, a, b) = (params.mu(), params.alpha(), params.beta());
    let eta = params.eta();
    let s = mu + b + a;
    DocsIntegralSpec {
        prefactor: ((1.0 - p) * mu + p * b) / s,
        decay: eta * p * a * a / (s * s),
        exponent: mu / s + eta * p * (mu + b) * a / (s * s),
    }
}

/// Right-hand side of the DOCS thermodynamic fixed-point relation `q = RHS(p)`.
pub fn docs_tl_rhs(p: f64, params: &ModelParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("p out of range [0,1]: {p}")));
    }
    Ok(docs_tl_rhs_spec(p, params).evaluate(DOCS_TOL)?.value)
}

/// Closed-form slope of the fixed-point map at `p = 0`.
pub fn docs_tl_rhs_slope0(params: &ModelParams) -> f64 {
    let (mu, a, b) = (params.mu(), params.alpha(), params.beta());
    b / mu - 1.0 - params.eta() * a / mu / (1.0 + a / (2.0 * mu + b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocsFixedPoint {
    pub p_star: f64,
    /// `|1 - p* - RHS(p*)|`.
    pub residual: f64,
    /// Every `[lo, hi]` on the scan grid where `p - 1 + RHS(p)` changes sign.
    pub sign_changes: Vec<(f64, f64)>,
    pub warning: Option<String>,
}

const FP_TOL: f64 = 1e-13;
const FP_EDGE: f64 = 1e-8;
const FP_GRID: usize = 200;

/// Nonzero solution of the DOCS thermodynamic fixed-point relation, or 0 at
/// or below the threshold.
pub fn docs_tl_fixed_point(params: &ModelParams) -> Result<DocsFixedPoint> {
    let eta_c = docs_tl_threshold(params.mu(), params.alpha(), params.beta())?;
    let uniqueness_warning = if params.beta() > params.mu() {
        Some("beta > mu: uniqueness of the positive root is not guaranteed".to_string())
    } else {
        None
    };
    let f = |p: f64| -> Result<f64> { Ok(p - 1.0 + docs_tl_rhs_spec(p, params).evaluate(FP_TOL)?.value) };
    if params.eta() <= eta_c {
        let r = f(0.0)?.abs();
        return Ok(DocsFixedPoint {
            p_star: 0.0,
            residual: r,
            sign_changes: Vec::new(),
            warning: uniqueness_warning,
        });
    }
    let grid: Vec<f64> = (0..=FP_GRID)
        .map(|k| FP_EDGE + (1.0 - 2.0 * FP_EDGE) * k as f64 / FP_GRID as f64)
        .collect();
    let vals = grid.iter().map(|&p| f(p)).collect::<Result<Vec<_>>>()?;
    let mut changes = Vec::new();
    for k in 0..FP_GRID {
        if (vals[k] < 0.0) != (vals[k + 1] < 0.0) {
            changes.push((grid[k], grid[k + 1]));
        }
    }
    let Some(&(mut lo, mut hi)) = changes.last() else {
        return Err(Error::Numerical(
            "no sign change of the DOCS fixed-point map above threshold".into(),
        ));
    };
    let mut flo = f(lo)?;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let p_star = 0.5 * (lo + hi);
    let residual = f(p_star)?.abs();
    if residual >= 1e-9 {
        return Err(Error::Numerical(format!("fixed-point residual {residual:e} above 1e-9")));
    }
    let warning = match (uniqueness_warning, changes.len()) {
        (w, 1) => w,
        (w, n) => Some(format!(
            "{n} sign changes found; returning the largest root{}",
            w.map(|s| format!(" ({s})")).unwrap_or_default()
        )),
    };
    Ok(DocsFixedPoint {
        p_star,
        residual,
        sign_changes: changes,
        warning,
    })
}

/// The constant `kappa` of the SIS upper threshold bound.
pub fn sis_kappa(mu: f64, alpha: f64, beta: f64) -> f64 {
    2.0 * alpha * mu / (2.0 * (mu + beta) * (alpha + 2.0 * mu + beta) - alpha * beta)
}

/// Bounds `(lower, upper)` on the SIS survival threshold.
pub fn sis_threshold_bounds(mu: f64, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    positive("mu", mu)?;
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    let lower = beta / (2.0 * mu + 5.0 * beta);
    let upper = beta / (mu + beta) / sis_kappa(mu, alpha, beta);
    Ok((lower, upper))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Air,
    Docs,
    SisLowerBound,
    SisUpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub eta_c: f64,
    pub kind: ThresholdKind,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn threshold(kind: ThresholdKind, mu: f64, alpha: f64, beta: f64) -> Result<ThresholdResult> {
    let eta_c = match kind {
        ThresholdKind::Air => air_threshold(alpha, beta)?,
        ThresholdKind::Docs => docs_tl_threshold(mu, alpha, beta)?,
        ThresholdKind::SisLowerBound => sis_threshold_bounds(mu, alpha, beta)?.0,
        ThresholdKind::SisUpperBound => sis_threshold_bounds(mu, alpha, beta)?.1,
    };
    Ok(ThresholdResult {
        eta_c,
        kind,
        mu,
        alpha,
        beta,
    })
}

/// Mean offspring numbers of the two limiting branching pictures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branching {
    /// `eta * alpha / beta`, fast-motion limit.
    pub n: f64,
    /// `eta * alpha / (alpha + beta)`, fast-epidemic limit.
    pub m: f64,
    pub n_above_one: bool,
    pub m_above_one: bool,
}

pub fn branching_quantities(params: &ModelParams) -> Branching {
    let (a, b) = (params.alpha(), params.beta());
    let n = params.eta() * a / b;
    let m = params.eta() * a / (a + b);
    Branching {
        n,
        m,
        n_above_one: n > 1.0,
        m_above_one: m > 1.0,
    }
}

/// Upper bound on the SIS fixed point that needs no correlation assumption.
pub fn p_star_upper_bound(params: &ModelParams) -> f64 {
    let eta = params.eta();
    let d = eta - params.beta() / params.alpha();
    ((d + (d * d + 2.0 * eta).sqrt()) / (2.0 * eta)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;
    use proptest::prelude::*;

    fn params(lam: f64, mu: f64, a: f64, b: f64, p: f64) -> ModelParams {
        derive_params(lam, mu, a, b, p, None).unwrap()
    }

    #[test]
    fn thresholds_by_substitution() {
        assert_eq!(air_threshold(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(air_threshold(20.0, 1.0).unwrap(), 0.05);
        assert_eq!(air_threshold(1.0, 10.0).unwrap(), 10.0);
        assert!((docs_tl_threshold(1.0, 1.0, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((docs_tl_threshold(1.0, 20.0, 1.0).unwrap() - 23.0 / 60.0).abs() < 1e-15);
        assert!((docs_tl_threshold(1.0, 1.0, 10.0).unwrap() - 65.0 / 6.0).abs() < 1e-13);
        assert!(air_threshold(0.0, 1.0).is_err());
    }

    #[test]
    fn sis_bounds_by_substitution() {
        let (lo, hi) = sis_threshold_bounds(1.0, 1.0, 1.0).unwrap();
        assert!((lo - 1.0 / 7.0).abs() < 1e-15);
        assert!((hi - 3.75).abs() < 1e-14);
        assert!((sis_kappa(1.0, 1.0, 1.0) - 2.0 / 15.0).abs() < 1e-16);
        let (lo, _) = sis_threshold_bounds(1.0, 1.0, 10.0).unwrap();
        assert!((lo - 10.0 / 52.0).abs() < 1e-15);
    }

    #[test]
    fn air_tl_cases() {
        let s = air_tl_stationary(&ModelParams::from_eta(2.0, 1.0, 1.0, 1.0, 0.0).unwrap());
        assert!(s.survival && s.mean_y == 1.0 && s.p_star == 0.5);
        let s = air_tl_stationary(&ModelParams::from_eta(0.5, 1.0, 1.0, 1.0, 0.0).unwrap());
        assert!(!s.survival && s.mean_y == 0.0 && s.q_star == 1.0);
        let s = air_tl_stationary(&ModelParams::from_eta(1.0, 1.0, 1.0, 1.0, 0.0).unwrap());
        assert!(!s.survival, "boundary is extinction");
    }

    #[test]
    fn air_traffic_examples() {
        let t = air_traffic(&params(1.0, 1.0, 1.0, 1.0, 0.0), 0.0).unwrap();
        assert!((t.lambda1 - 1.0).abs() < 1e-15);
        let t = air_traffic(&params(1.0, 1.0, 1.0, 1.0, 0.0), 1.0).unwrap();
        assert!((t.lambda1 - 4.0 / 3.0).abs() < 1e-15);
        assert!((t.mean_station1 - 2.0 / 3.0).abs() < 1e-15);
        assert!(air_traffic(&params(1.0, 1.0, 1.0, 1.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn air_amf_examples() {
        let (x, y) = air_amf_means(&params(1.0, 1.0, 1.0, 1.0, 0.0)).unwrap();
        assert!((x - 1.0).abs() < 1e-15 && y.abs() < 1e-15);
        let (x, _) = air_amf_means(&params(2.0, 1.0, 1.0, 1.0, 1.0)).unwrap();
        assert!((x - (2.0 - 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn docs_mean_endpoints() {
        let m = derive_params(1.3, 0.7, 1.1, 0.4, 0.0, Some(2.0)).unwrap();
        assert!((docs_mean_x(&m).unwrap() - 1.3 / 0.7).abs() < 1e-10);
        let m = derive_params(1.3, 0.7, 1.1, 0.4, 1.0, Some(2.0)).unwrap();
        assert_eq!(docs_mean_x(&m).unwrap(), 0.0);
    }

    #[test]
    fn docs_mean_matches_series_oracle() {
        // Independent oracle: expand exp(-a(1-t)) = e^{-a} sum a^k t^k / k!
        // so that the integral is e^{-a} sum_k a^k / (k! (c + k)).
        for &(lam, mu, a, nu, p) in &[(1.0, 1.0, 1.0, 2.0, 0.5), (3.0, 0.2, 5.0, 0.5, 0.9), (0.5, 4.0, 0.3, 7.0, 0.1)] {
            let m = derive_params(lam, mu, a, 1.0, p, Some(nu)).unwrap();
            let s = docs_integral_spec(&m);
            let mut term = 1.0;
            let mut sum = 0.0;
            for k in 0..400 {
                if k > 0 {
                    term *= s.decay / k as f64;
                }
                sum += term / (s.exponent + k as f64);
            }
            let oracle = s.prefactor * (-s.decay).exp() * sum;
            let got = docs_mean_x(&m).unwrap();
            assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
        }
    }

    #[test]
    fn docs_rhs_at_zero_is_one() {
        for &(eta, mu, a, b) in &[(1.0, 1.0, 1.0, 1.0), (3.0, 0.1, 20.0, 5.0), (0.2, 9.0, 0.1, 0.3)] {
            let m = ModelParams::from_eta(eta, mu, a, b, 0.0).unwrap();
            assert!((docs_tl_rhs(0.0, &m).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn docs_rhs_slope_matches_central_difference() {
        for &(eta, mu, a, b) in &[(1.0, 1.0, 1.0, 1.0), (2.5, 0.5, 3.0, 0.2), (0.7, 2.0, 0.4, 1.5)] {
            let m = ModelParams::from_eta(eta, mu, a, b, 0.0).unwrap();
            let h = 1e-4;
            let f = |p| docs_tl_rhs_spec(p, &m).evaluate(1e-14).unwrap().value;
            let fd = (f(h) - f(-h)) / (2.0 * h);
            assert!((fd - docs_tl_rhs_slope0(&m)).abs() < 1e-6, "{fd} vs {}", docs_tl_rhs_slope0(&m));
        }
        let m = ModelParams::from_eta(4.0 / 3.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert!((docs_tl_rhs_slope0(&m) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn docs_fixed_point_regimes() {
        let sub = ModelParams::from_eta(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(docs_tl_fixed_point(&sub).unwrap().p_star, 0.0);
        let sup = ModelParams::from_eta(2.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let fp = docs_tl_fixed_point(&sup).unwrap();
        assert!(fp.p_star > 0.0 && fp.p_star < 1.0);
        assert!(fp.residual < 1e-9);
        assert_eq!(fp.sign_changes.len(), 1);
        assert!(fp.warning.is_none());
    }

    #[test]
    fn docs_fixed_point_shrinks_towards_threshold() {
        let eta_c = 4.0 / 3.0;
        let mut last = f64::INFINITY;
        for k in (1..=8).rev() {
            let eta = eta_c + 0.1 * k as f64;
            let m = ModelParams::from_eta(eta, 1.0, 1.0, 1.0, 0.0).unwrap();
            let p = docs_tl_fixed_point(&m).unwrap().p_star;
            assert!(p < last, "p*({eta}) = {p} not below {last}");
            last = p;
        }
        assert!(last < 0.15);
    }

    #[test]
    fn docs_threshold_limits_in_mu() {
        let (a, b) = (2.0, 0.5);
        assert!((docs_tl_threshold(1e9, a, b).unwrap() - b / a).abs() < 1e-8);
        assert!((docs_tl_threshold(1e-9, a, b).unwrap() - (a + b) / a).abs() < 1e-8);
    }

    #[test]
    fn branching_examples() {
        let br = branching_quantities(&ModelParams::from_eta(4.0 / 3.0, 1.0, 1.0, 1.0, 0.0).unwrap());
        assert!((br.m - 2.0 / 3.0).abs() < 1e-15);
        let br = branching_quantities(&ModelParams::from_eta(2.0, 1.0, 3.0, 3.0, 0.0).unwrap());
        assert_eq!(br.m, 1.0);
        assert!(!br.m_above_one);
        let br = branching_quantities(&ModelParams::from_eta(1.0, 1.0, 1.0, 1.0, 0.0).unwrap());
        assert_eq!(br.n, 1.0);
    }

    #[test]
    fn p_star_bound_examples() {
        let m = ModelParams::from_eta(2.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert!((p_star_upper_bound(&m) - (1.0 + 5f64.sqrt()) / 4.0).abs() < 1e-15);
        let m = ModelParams::from_eta(0.5, 1.0, 2.0, 1.0, 0.0).unwrap();
        assert!((p_star_upper_bound(&m) - 1.0 / (2.0 * 0.5f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quadrature_tolerance_halving_is_stable() {
        let m = derive_params(2.0, 0.05, 8.0, 1.0, 0.7, Some(0.3)).unwrap();
        let s = docs_integral_spec(&m);
        let a = s.evaluate(1e-10).unwrap();
        let b = s.evaluate(5e-11).unwrap();
        assert!((a.value - b.value).abs() <= a.error_bound.max(1e-12));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn sis_bounds_are_ordered(mu in 0.01f64..50.0, a in 0.01f64..50.0, b in 0.01f64..50.0) {
            let (lo, hi) = sis_threshold_bounds(mu, a, b).unwrap();
            prop_assert!(lo < hi);
        }

        #[test]
        fn air_amf_sums_to_density(lam in 0.01f64..20.0, mu in 0.05f64..10.0, a in 0.01f64..20.0,
                                   b in 0.01f64..10.0, p in 0.0f64..=1.0) {
            let m = params(lam, mu, a, b, p);
            let (x, y) = air_amf_means(&m).unwrap();
            prop_assert!((x + y - m.eta()).abs() <= 1e-12 * m.eta().max(1.0));
            prop_assert!(x >= 0.0 && y >= -1e-12);
        }

        #[test]
        fn air_denominator_identity(mu in 0.01f64..10.0, b in 0.01f64..10.0, ay in 0.0f64..10.0) {
            let lhs = (mu + b) * (mu + ay) - b * ay;
            prop_assert!((lhs - mu * (mu + b + ay)).abs() <= 1e-12 * lhs);
        }

        #[test]
        fn docs_mean_decreases_in_p(lam in 0.1f64..5.0, mu in 0.1f64..5.0, a in 0.1f64..5.0, nu in 0.1f64..5.0) {
            let mut last = f64::INFINITY;
            for k in 0..=10 {
                let m = derive_params(lam, mu, a, 1.0, k as f64 / 10.0, Some(nu)).unwrap();
                let v = docs_mean_x(&m).unwrap();
                prop_assert!(v < last);
                last = v;
            }
        }

        #[test]
        fn docs_rhs_decreasing_convex_when_beta_le_mu(eta in 0.1f64..6.0, mu in 0.2f64..5.0,
                                                     a in 0.1f64..10.0, frac in 0.05f64..1.0) {
            let m = ModelParams::from_eta(eta, mu, a, mu * frac, 0.0).unwrap();
            let v: Vec<f64> = (0..=20).map(|k| docs_tl_rhs(k as f64 / 20.0, &m).unwrap()).collect();
            for k in 0..20 {
                prop_assert!(v[k + 1] < v[k]);
            }
            for k in 1..20 {
                prop_assert!(v[k - 1] + v[k + 1] - 2.0 * v[k] > -1e-9);
            }
        }
    }
}
