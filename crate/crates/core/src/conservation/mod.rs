//! Stationary rate-conservation identities checked against simulated
//! moments and event averages.
//!
//! An [`Identity`] is a pair of functionals of a [`Window`]. Applied to the
//! batch windows of a run it yields estimates of both sides and of their
//! difference; [`AuditConfig`] decides how many standard errors the residual
//! may be away from zero.

mod poly;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analytic::docs_mean_x;
use crate::error::{Error, Result};
use crate::network::{NetworkRun, RoutingDocsResult, RoutingMode, Variant};
use crate::observe::{BatchPlan, EventKind, Horizon, RunStats, Side, Window};
use crate::params::ModelParams;
use crate::reactor::{simulate_reactor, PalmEstimates, ReactorKind, RunConfig};
use crate::rng::RngSeed;
use crate::stats::{normal_quantile, Estimate};

pub use poly::{rcp, Poly, RcpRates};

/// Runs with fewer events are flagged as low confidence.
pub const MIN_EVENTS: u64 = 100_000;

type Side1 = Box<dyn Fn(&Window) -> f64 + Send + Sync>;
type Rate = Arc<dyn Fn(&Window) -> f64 + Send + Sync>;

/// `lhs(w) = rhs(w)` in stationarity.
pub struct Identity {
    pub name: String,
    lhs: Side1,
    rhs: Side1,
}

impl std::fmt::Debug for Identity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Identity").field("name", &self.name).finish_non_exhaustive()
    }
}

impl Identity {
    pub fn new(
        name: impl Into<String>,
        lhs: impl Fn(&Window) -> f64 + Send + Sync + 'static,
        rhs: impl Fn(&Window) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Identity {
            name: name.into(),
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    fn from_poly(name: impl Into<String>, lhs: Poly, rhs: Poly) -> Self {
        Identity::new(name, move |w| lhs.expect(w), move |w| rhs.expect(w))
    }

    pub fn lhs(&self, w: &Window) -> f64 {
        (self.lhs)(w)
    }

    pub fn rhs(&self, w: &Window) -> f64 {
        (self.rhs)(w)
    }

    pub fn residual(&self, w: &Window) -> f64 {
        self.lhs(w) - self.rhs(w)
    }

    /// Evaluates both sides on a run. When a side is undefined (an event
    /// average without events) and `vacuous` is set, both sides are taken as
    /// an exact zero.
    pub fn check(&self, stats: &RunStats, k: f64, vacuous: bool) -> IdentityCheck {
        let residual = stats.try_estimate(|w| self.residual(w));
        if residual.is_none() && vacuous {
            let z = Estimate::exact(0.0);
            return IdentityCheck::build(self.name.clone(), z, z, z, k);
        }
        let nan = Estimate::new(f64::NAN, f64::NAN, stats.batches.len() as u64, stats.ci_level);
        IdentityCheck::build(
            self.name.clone(),
            stats.try_estimate(|w| self.lhs(w)).unwrap_or(nan),
            stats.try_estimate(|w| self.rhs(w)).unwrap_or(nan),
            residual.unwrap_or(nan),
            k,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub residual: Estimate,
    /// Multiple of the residual's standard error allowed.
    pub k: f64,
    pub pass: bool,
}

impl IdentityCheck {
    fn build(name: String, lhs: Estimate, rhs: Estimate, residual: Estimate, k: f64) -> Self {
        let scale = lhs.value.abs().max(rhs.value.abs()).max(1.0);
        let pass = residual.value.is_finite()
            && residual.std_error.is_finite()
            && residual.value.abs() <= k * residual.std_error + 1e-12 * scale;
        IdentityCheck {
            name,
            lhs,
            rhs,
            residual,
            k,
            pass,
        }
    }

    /// Compares two independent estimates.
    pub fn independent(name: impl Into<String>, lhs: Estimate, rhs: Estimate, k: f64) -> Self {
        let se = lhs.std_error.hypot(rhs.std_error);
        let residual = Estimate::new(lhs.value - rhs.value, se, lhs.n.min(rhs.n), lhs.ci_level);
        IdentityCheck::build(name.into(), lhs, rhs, residual, k)
    }

    pub fn row(&self) -> AuditRow {
        AuditRow {
            name: self.name.clone(),
            lhs: self.lhs.value,
            rhs: self.rhs.value,
            residual: self.residual.value,
            se: self.residual.std_error,
            pass: self.pass,
        }
    }
}

/// Flat JSON form of an [`IdentityCheck`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub se: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Allowed residual in standard errors for a single identity.
    pub k: f64,
    /// Widen `k` so the whole list holds jointly at the level a single
    /// `k`-SE test has.
    pub bonferroni: bool,
    pub plan: BatchPlan,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            k: 3.0,
            bonferroni: false,
            plan: BatchPlan::default(),
        }
    }
}

impl AuditConfig {
    /// Threshold for a list of `m` identities.
    pub fn threshold(&self, m: usize) -> f64 {
        if !self.bonferroni || m <= 1 {
            return self.k;
        }
        let tail = 0.5 * libm::erfc(self.k / std::f64::consts::SQRT_2);
        normal_quantile(1.0 - tail / m as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<IdentityCheck>,
    pub events: u64,
    pub low_confidence: bool,
}

impl AuditReport {
    fn new(checks: Vec<IdentityCheck>, events: u64) -> Self {
        AuditReport {
            checks,
            events,
            low_confidence: events < MIN_EVENTS,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&IdentityCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn get(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn rows(&self) -> Vec<AuditRow> {
        self.checks.iter().map(IdentityCheck::row).collect()
    }

    /// Pretty JSON array of [`AuditRow`]s.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rows())?)
    }
}

fn total_events(stats: &RunStats) -> u64 {
    EventKind::ALL.iter().map(|&k| stats.event_count(k)).sum()
}

fn run_checks(ids: &[Identity], stats: &RunStats, cfg: &AuditConfig, vacuous: bool) -> AuditReport {
    let k = cfg.threshold(ids.len());
    AuditReport::new(ids.iter().map(|i| i.check(stats, k, vacuous)).collect(), total_events(stats))
}

fn m(w: &Window, a: usize, b: usize) -> f64 {
    w.moment(a, b)
}

fn palm(w: &Window, kind: EventKind, side: Side) -> f64 {
    w.palm(kind, side).unwrap_or(f64::NAN)
}

/// Identities of the stationary SIS reactor.
pub fn sis_identities(params: &ModelParams) -> Vec<Identity> {
    let (lam, p, q) = (params.lambda(), params.p(), params.q());
    let (mu, al, be) = (params.mu(), params.alpha(), params.beta());
    let (x, y) = (Poly::x(), Poly::y());
    let xy = x * y;
    let c = Poly::constant;
    let mut ids = vec![
        Identity::from_poly("first_order_y", c(lam * p) + xy.scale(al), y.scale(mu + be)),
        Identity::from_poly("first_order_x", c(lam * q) + y.scale(be), x.scale(mu) + xy.scale(al)),
        Identity::from_poly(
            "second_order_y",
            y.scale(lam * p + mu + be) + (xy * y).scale(al),
            (y * y).scale(mu + be),
        ),
        Identity::from_poly(
            "second_order_x",
            x.scale(lam * q + mu) + xy.scale(al + be),
            (x * xy).scale(al) + (x * x).scale(mu),
        ),
    ];
    let rates = RcpRates {
        lambda_p: lam * p,
        lambda_q: lam * q,
        mu,
        alpha: al,
        beta: be,
    };
    for (a, b) in [(1, 1), (2, 1), (1, 2)] {
        let (gain, loss) = rcp(a, b, &rates);
        ids.push(Identity::from_poly(format!("rcp_x{a}_y{b}"), gain, loss));
    }
    let eta = lam / mu;
    ids.push(Identity::from_poly("population_mean", x + y, c(eta)));
    ids.push(Identity::new(
        "population_variance",
        |w| {
            let s = m(w, 1, 0) + m(w, 0, 1);
            m(w, 2, 0) + 2.0 * m(w, 1, 1) + m(w, 0, 2) - s * s
        },
        move |_| eta,
    ));
    // Closed forms for E[X^2 Y] and E[X Y^2] after eliminating the lower
    // mixed moments with the first-order balances.
    let r = be / al;
    let cor_a = c(lam * (q + be / mu) * (1.0 + r)) + x.scale(lam * q - r * (mu + al + be)) - (x * x).scale(mu);
    ids.push(Identity::from_poly("closed_form_x2y", cor_a, (x * xy).scale(al)));
    let k0 = (lam / mu) * (lam * p + (mu + be) / (mu * al) * (2.0 * mu * (mu * q + be) - lam * al));
    let cor_b = c(k0) - x.scale(lam * p + mu + be + 2.0 * (mu + be) * (mu + be) / al) + (x * x).scale(mu + be);
    ids.push(Identity::from_poly("closed_form_xy2", cor_b, (xy * y).scale(-al)));
    ids
}

/// Identities of the stationary DOCS reactor.
pub fn docs_identities(params: &ModelParams) -> Result<Vec<Identity>> {
    let (lam, p, q) = (params.lambda(), params.p(), params.q());
    let (mu, al, nu) = (params.mu(), params.alpha(), params.nu());
    let ex = docs_mean_x(params)?;
    let (x, y) = (Poly::x(), Poly::y());
    let c = Poly::constant;
    Ok(vec![
        Identity::from_poly("infected_balance", c(lam * p), y.scale(nu)),
        Identity::from_poly("susceptible_balance", c(lam * q), x.scale(mu) + (x * y).scale(al)),
        Identity::new("y_variance_equals_mean", |w| m(w, 0, 2) - m(w, 0, 1).powi(2), |w| m(w, 0, 1)),
        Identity::new("mean_x_analytic", |w| m(w, 1, 0), move |_| ex),
    ])
}

/// Identities of the routing DOCS ensemble. In [`RoutingMode::ClosedTl`] the
/// external susceptible and infected input rates are the migration rates
/// `mu E[X]` and `mu E[Y]`, and `lambda / mu` is the customer density.
pub fn routing_docs_identities(params: &ModelParams, mode: RoutingMode, density: f64) -> Vec<Identity> {
    let (mu, al, be) = (params.mu(), params.alpha(), params.beta());
    let (lp, lq): (Rate, Rate) = match mode {
        RoutingMode::Open => {
            let (a, b) = (params.lambda() * params.p(), params.lambda() * params.q());
            (Arc::new(move |_| a), Arc::new(move |_| b))
        }
        RoutingMode::ClosedTl => (Arc::new(move |w| mu * m(w, 0, 1)), Arc::new(move |w| mu * m(w, 1, 0))),
    };
    let (lp1, lq1, lp2, lq2, lp3, lq3) = (lp.clone(), lq.clone(), lp.clone(), lq.clone(), lp, lq);
    vec![
        Identity::new(
            "routing_first_order_x",
            move |w| lq1(w) + be * m(w, 0, 1),
            move |w| mu * m(w, 1, 0) + al * m(w, 1, 1),
        ),
        Identity::new(
            "routing_first_order_y",
            move |w| lp1(w) + al * m(w, 1, 1),
            move |w| (be + mu) * m(w, 0, 1),
        ),
        Identity::new("routing_population", |w| m(w, 1, 0) + m(w, 0, 1), move |_| density),
        Identity::new(
            "routing_second_order_y",
            move |w| (lp2(w) + mu + be) * m(w, 0, 1) + al * m(w, 1, 1) * m(w, 0, 1),
            move |w| (be + mu) * m(w, 0, 2),
        ),
        Identity::new(
            "routing_second_order_x",
            move |w| (lq2(w) + mu) * m(w, 1, 0) + be * m(w, 0, 1) * m(w, 1, 0) + al * m(w, 1, 1),
            move |w| al * m(w, 2, 1) + mu * m(w, 2, 0),
        ),
        Identity::new(
            "routing_second_order_xy",
            move |w| (lq3(w) + be * m(w, 0, 1)) * m(w, 0, 1) + (lp3(w) + al * m(w, 1, 1)) * m(w, 1, 0),
            move |w| (be + 2.0 * mu) * m(w, 1, 1) + al * m(w, 1, 2),
        ),
    ]
}

/// Identities of the SIS thermodynamic limit, evaluated per station on a
/// large closed network. `E_I`, `E_R` and `E_D` are event averages at
/// infections, recoveries and departures; the state after an infection has
/// `X+ = X- - 1`.
pub fn tl_identities(params: &ModelParams) -> Vec<Identity> {
    use EventKind::{DepartureI, DepartureS, Infection, Recovery};
    let (mu, al, be) = (params.mu(), params.alpha(), params.beta());
    vec![
        Identity::new("tl_first_order", move |w| al * m(w, 1, 1), move |w| be * m(w, 0, 1)),
        Identity::new(
            "tl_second_order_y",
            move |w| (mu * m(w, 0, 1) + mu + be) * m(w, 0, 1) + al * m(w, 1, 2),
            move |w| (mu + be) * m(w, 0, 2),
        ),
        Identity::new(
            "tl_second_order_x",
            move |w| (mu * m(w, 1, 0) + mu) * m(w, 1, 0) + (al + be) * m(w, 1, 1),
            move |w| al * m(w, 2, 1) + mu * m(w, 2, 0),
        ),
        Identity::new(
            "tl_y_overdispersion",
            move |w| (mu + be) * (m(w, 0, 2) - m(w, 0, 1).powi(2) - m(w, 0, 1)),
            move |w| be * m(w, 0, 1) * (palm(w, Infection, Side::YBefore) - m(w, 0, 1)),
        ),
        Identity::new(
            "tl_x_overdispersion",
            move |w| mu * (m(w, 2, 0) - m(w, 1, 0).powi(2) - m(w, 1, 0)),
            move |w| al * m(w, 1, 1) * (be / al - palm(w, Infection, Side::XAfter)),
        ),
        Identity::new(
            "tl_palm_y",
            move |w| be * (palm(w, Infection, Side::YBefore) - palm(w, Recovery, Side::YAfter)),
            move |w| mu * palm(w, DepartureI, Side::YAfter) - mu * m(w, 0, 1),
        ),
        Identity::new(
            "tl_palm_x",
            move |w| be * (palm(w, Recovery, Side::XBefore) - palm(w, Infection, Side::XAfter)),
            move |w| {
                let ratio = m(w, 1, 0) / m(w, 0, 1);
                mu * ratio * palm(w, DepartureS, Side::XAfter) - mu * m(w, 1, 0) * ratio
            },
        ),
    ]
}

/// Audits a finished SIS reactor run.
pub fn audit_sis_stats(params: &ModelParams, stats: &RunStats, cfg: &AuditConfig) -> AuditReport {
    run_checks(&sis_identities(params), stats, cfg, false)
}

/// Simulates the SIS reactor over `horizon` and audits it.
pub fn audit_sis(params: &ModelParams, horizon: Horizon, seed: RngSeed, cfg: &AuditConfig) -> Result<AuditReport> {
    let run = simulate_reactor(ReactorKind::Sis, params, horizon, seed, false, &run_config(cfg))?;
    Ok(audit_sis_stats(params, &run.stats, cfg))
}

fn run_config(cfg: &AuditConfig) -> RunConfig {
    RunConfig {
        plan: cfg.plan,
        ..RunConfig::default()
    }
}

/// Simulates the DOCS reactor over `horizon` and audits it.
pub fn audit_docs(params: &ModelParams, horizon: Horizon, seed: RngSeed, cfg: &AuditConfig) -> Result<AuditReport> {
    let run = simulate_reactor(ReactorKind::Docs, params, horizon, seed, false, &run_config(cfg))?;
    Ok(run_checks(&docs_identities(params)?, &run.stats, cfg, false))
}

/// Audits a routing DOCS ensemble.
pub fn audit_routing_docs(result: &RoutingDocsResult, params: &ModelParams, cfg: &AuditConfig) -> AuditReport {
    let density = match result.mode {
        RoutingMode::Open => params.eta(),
        RoutingMode::ClosedTl => result.run.initial_customers as f64 / result.run.n as f64,
    };
    run_checks(&routing_docs_identities(params, result.mode, density), &result.run.stats, cfg, false)
}

fn check_tl_run(run: &NetworkRun) -> Result<()> {
    if run.variant != Variant::Sis {
        return Err(Error::invalid("variant", "thermodynamic-limit audit needs an SIS network"));
    }
    if run.stats.batches.is_empty() {
        return Err(Error::invalid("run", "no batch windows"));
    }
    Ok(())
}

/// Audits a stationary closed SIS network as a thermodynamic-limit sample.
///
/// With `p_star`, also compares `lambda p*` against `mu E[Y]`, where
/// `lambda = mu eta` and `eta` is the customer density of the run.
pub fn audit_tl(run: &NetworkRun, params: &ModelParams, p_star: Option<Estimate>, cfg: &AuditConfig) -> Result<AuditReport> {
    check_tl_run(run)?;
    let ids = tl_identities(params);
    let vacuous = run.stats.overall.moment(0, 1) == 0.0;
    let m_checks = ids.len() + usize::from(p_star.is_some());
    let k = cfg.threshold(m_checks);
    let mut checks: Vec<IdentityCheck> = ids.iter().map(|i| i.check(&run.stats, k, vacuous)).collect();
    if let Some(ps) = p_star {
        let lam = params.mu() * run.initial_customers as f64 / run.n as f64;
        let lhs = Estimate::new(lam * ps.value, lam * ps.std_error, ps.n, ps.ci_level);
        let mu = params.mu();
        let rhs = run.stats.estimate(|w| mu * w.moment(0, 1));
        checks.push(IdentityCheck::independent("tl_fixed_point", lhs, rhs, k));
    }
    Ok(AuditReport::new(checks, total_events(&run.stats)))
}

/// Sign read off a confidence interval: `Some(true)` above 0, `Some(false)`
/// below, `None` when it straddles 0.
fn sign_verdict(e: &Estimate, k: f64) -> Option<bool> {
    if !(e.value.is_finite() && e.std_error.is_finite()) {
        return None;
    }
    if e.value - k * e.std_error > 0.0 {
        Some(true)
    } else if e.value + k * e.std_error < 0.0 {
        Some(false)
    } else {
        None
    }
}

/// The bracket `lower <= E[X] <= lambda / mu` implied by negative correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegCorBracket {
    pub lower: f64,
    pub upper: f64,
    pub mean_x: Estimate,
    pub holds: bool,
}

/// Lower root of `alpha E[X]^2 - (mu + beta + alpha eta) E[X] + lambda (q + beta/mu) = 0`.
pub fn negcor_lower_bound(lambda: f64, mu: f64, alpha: f64, beta: f64, q: f64) -> Option<f64> {
    let b = mu + beta + alpha * lambda / mu;
    let disc = b * b - 4.0 * alpha * lambda * (q + beta / mu);
    (disc >= 0.0).then(|| (b - disc.sqrt()) / (2.0 * alpha))
}

/// Survival against the necessary condition `beta / alpha < eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCondition {
    pub beta_over_alpha: f64,
    pub eta: f64,
    pub survived: bool,
    /// Survival although `beta / alpha >= eta`.
    pub contradiction: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationProbe {
    pub cov_xy: Estimate,
    /// `E[X^2] - E[X]^2 - E[X]`.
    pub x_overdispersion: Estimate,
    pub y_overdispersion: Estimate,
    pub palm: PalmEstimates,
    /// `mu` times each overdispersion against its event-average form, the
    /// same for their sum, and the population-variance decomposition.
    pub identities: Vec<IdentityCheck>,
    pub x_more_variant: Option<bool>,
    pub y_more_variant: Option<bool>,
    pub negatively_correlated: Option<bool>,
    pub negcor_bracket: Option<NegCorBracket>,
    pub survival: Option<SurvivalCondition>,
    pub warnings: Vec<String>,
}

fn probe_identities(mu: f64, lp: f64, lq: f64, tl: bool) -> Vec<Identity> {
    use EventKind::{Infection, Recovery};
    let ox = |w: &Window| m(w, 2, 0) - m(w, 1, 0).powi(2) - m(w, 1, 0);
    let oy = |w: &Window| m(w, 0, 2) - m(w, 0, 1).powi(2) - m(w, 0, 1);
    let in_x = move |w: &Window| if tl { mu * m(w, 1, 0) } else { lq };
    let in_y = move |w: &Window| if tl { mu * m(w, 0, 1) } else { lp };
    let px = move |w: &Window| {
        in_x(w) * m(w, 1, 0) + w.flux(Recovery, Side::XBefore) - w.flux(Infection, Side::XAfter) - mu * m(w, 1, 0).powi(2)
    };
    let py = move |w: &Window| {
        in_y(w) * m(w, 0, 1) - mu * m(w, 0, 1).powi(2) + w.flux(Infection, Side::YBefore) - w.flux(Recovery, Side::YAfter)
    };
    vec![
        Identity::new("x_overdispersion_event_form", move |w| mu * ox(w), px),
        Identity::new("y_overdispersion_event_form", move |w| mu * oy(w), py),
        Identity::new("overdispersion_sum_event_form", move |w| mu * (ox(w) + oy(w)), move |w| px(w) + py(w)),
        Identity::new(
            "population_variance_split",
            move |w| 2.0 * (m(w, 1, 1) - m(w, 1, 0) * m(w, 0, 1)) + ox(w) + oy(w),
            |w| {
                let s = m(w, 1, 0) + m(w, 0, 1);
                m(w, 2, 0) + 2.0 * m(w, 1, 1) + m(w, 0, 2) - s * s - s
            },
        ),
    ]
}

fn probe_from_stats(stats: &RunStats, lambda: f64, params: &ModelParams, q: f64, tl: bool, k: f64) -> CorrelationProbe {
    let mu = params.mu();
    let cov_xy = stats.estimate(|w| m(w, 1, 1) - m(w, 1, 0) * m(w, 0, 1));
    let x_overdispersion = stats.estimate(|w| m(w, 2, 0) - m(w, 1, 0).powi(2) - m(w, 1, 0));
    let y_overdispersion = stats.estimate(|w| m(w, 0, 2) - m(w, 0, 1).powi(2) - m(w, 0, 1));
    let vacuous = stats.overall.moment(0, 1) == 0.0;
    let identities = probe_identities(mu, lambda * (1.0 - q), lambda * q, tl)
        .iter()
        .map(|i| i.check(stats, k, vacuous))
        .collect();
    let negatively_correlated = sign_verdict(&cov_xy, k).map(|pos| !pos);
    let mean_x = stats.moment(1, 0);
    let negcor_bracket = if negatively_correlated == Some(true) {
        negcor_lower_bound(lambda, mu, params.alpha(), params.beta(), q).map(|lower| {
            let upper = lambda / mu;
            let slack = k * mean_x.std_error;
            NegCorBracket {
                lower,
                upper,
                mean_x,
                holds: mean_x.value + slack >= lower && mean_x.value - slack <= upper,
            }
        })
    } else {
        None
    };
    let mut warnings = Vec::new();
    if let Some(b) = &negcor_bracket {
        if !b.holds {
            warnings.push(format!("E[X] = {} outside the negative-correlation bracket [{}, {}]", b.mean_x.value, b.lower, b.upper));
        }
    }
    CorrelationProbe {
        cov_xy,
        x_more_variant: sign_verdict(&x_overdispersion, k),
        y_more_variant: sign_verdict(&y_overdispersion, k),
        x_overdispersion,
        y_overdispersion,
        palm: PalmEstimates::from_stats(stats),
        identities,
        negatively_correlated,
        negcor_bracket,
        survival: None,
        warnings,
    }
}

/// Covariance and overdispersion measurements on a stationary SIS reactor.
/// Nothing here is asserted; verdicts are `None` when the interval
/// straddles zero.
pub fn correlation_probe(params: &ModelParams, horizon: Horizon, seed: RngSeed, cfg: &AuditConfig) -> Result<CorrelationProbe> {
    let run = simulate_reactor(ReactorKind::Sis, params, horizon, seed, false, &run_config(cfg))?;
    Ok(probe_from_stats(&run.stats, params.lambda(), params, params.q(), false, cfg.k))
}

/// [`correlation_probe`] on a closed SIS network read as a
/// thermodynamic-limit sample, with the survival check.
pub fn correlation_probe_tl(run: &NetworkRun, params: &ModelParams, cfg: &AuditConfig) -> Result<CorrelationProbe> {
    check_tl_run(run)?;
    let eta = run.initial_customers as f64 / run.n as f64;
    let lambda = params.mu() * eta;
    let ey = run.stats.overall.moment(0, 1);
    let q = if eta > 0.0 { 1.0 - ey / eta } else { 1.0 };
    let mut probe = probe_from_stats(&run.stats, lambda, params, q, true, cfg.k);
    let survived = run.final_state.infected() > 0;
    let ratio = params.beta() / params.alpha();
    let cond = SurvivalCondition {
        beta_over_alpha: ratio,
        eta,
        survived,
        contradiction: survived && ratio >= eta,
    };
    if cond.contradiction {
        probe.warnings.insert(
            0,
            format!("CONTRADICTION: infection survived with beta/alpha = {ratio} >= eta = {eta}"),
        );
    }
    probe.survival = Some(cond);
    Ok(probe)
}
