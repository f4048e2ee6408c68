//! Finite networks of infinite-server stations and mean-field ensembles.
//!
//! Customers migrate between `N` stations at rate `mu`. Within a station the
//! SIS, DOCS or AIR contagion rules apply. In the closed form the customer
//! count `K` is conserved; the open form adds external Poisson arrivals per
//! station and lets migrations leave the system.

mod meanfield;
mod tree;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observe::{BatchPlan, Clocked, EventKind, Horizon, MonomialTable, RunStats, MAX_DEGREE};
use crate::params::{ModelParams, ReactorState};
use crate::rng::{RngSeed, SimRng};
use crate::stats::Estimate;
use tree::SumTree;

pub use meanfield::{simulate_meanfield, MeanFieldConfig, MeanFieldInit, MeanFieldRow, MeanFieldRun};

const D1: usize = MAX_DEGREE + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Sis,
    Docs,
    Air,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Sis => "sis",
            Variant::Docs => "docs",
            Variant::Air => "air",
        }
    }

    /// SIS customers migrate to another station; DOCS and AIR customers are
    /// routed to any of the `N` stations.
    pub fn default_self_routing(self) -> bool {
        !matches!(self, Variant::Sis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Inflow {
    #[default]
    Closed,
    /// External arrivals at rate `lambda` per station, infected with
    /// probability `p`; migrations leave the system. DOCS reroutings stay.
    Open { lambda: f64, p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    #[default]
    AllInfected,
    /// Customers placed uniformly at random; the first `infected` are infected.
    Random { infected: u64 },
    Explicit(Vec<ReactorState>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// `None` picks [`Variant::default_self_routing`].
    pub self_routing: Option<bool>,
    pub inflow: Inflow,
    pub initial: Initial,
    pub plan: BatchPlan,
    /// Trajectory grid spacing; defaults to a thousandth of a time horizon.
    pub sample_interval: Option<f64>,
    /// DOCS with `nu = mu + beta`: infected customers migrate at `mu` and
    /// recover (rerouted as susceptible) at `beta`. Otherwise they migrate at
    /// `nu` and never recover.
    pub docs_recovery_split: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            self_routing: None,
            inflow: Inflow::Closed,
            initial: Initial::AllInfected,
            plan: BatchPlan::default(),
            sample_interval: None,
            docs_recovery_split: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkState {
    pub stations: Vec<ReactorState>,
    pub total: u64,
}

impl NetworkState {
    pub fn infected(&self) -> u64 {
        self.stations.iter().map(|s| u64::from(s.y)).sum()
    }
}

/// One row of the trajectory CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub total_infected: u64,
    pub mean_x: f64,
    pub mean_y: f64,
}

/// A station-level change caused by one network event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StationEvent {
    pub station: usize,
    pub kind: EventKind,
    pub before: ReactorState,
    pub after: ReactorState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NetEvent {
    pub time: f64,
    pub first: StationEvent,
    pub second: Option<StationEvent>,
}

#[derive(Clone, Copy)]
enum Local {
    MigrateS,
    MigrateI,
    Infect,
    Recover,
}

fn monomials_exact(s: ReactorState) -> [[i128; D1]; D1] {
    let (x, y) = (i128::from(s.x), i128::from(s.y));
    let mut t = [[0i128; D1]; D1];
    for a in 0..D1 {
        for b in 0..(D1 - a) {
            t[a][b] = x.pow(a as u32) * y.pow(b as u32);
        }
    }
    t
}

/// Event engine for one network trajectory.
pub(crate) struct Engine {
    variant: Variant,
    m: ModelParams,
    split: bool,
    self_routing: bool,
    inflow: Inflow,
    st: Vec<ReactorState>,
    local: SumTree,
    xs: SumTree,
    x_tot: u64,
    y_tot: u64,
    sums: [[i128; D1]; D1],
    rng: SimRng,
    pub time: f64,
}

impl Engine {
    pub fn new(variant: Variant, n: usize, k: u64, params: &ModelParams, seed: RngSeed, cfg: &NetworkConfig) -> Result<Self> {
        let self_routing = cfg.self_routing.unwrap_or(variant.default_self_routing());
        if n < 1 || (!self_routing && n < 2) {
            return Err(Error::invalid("n", "need at least 2 stations (1 with self routing)"));
        }
        if let Inflow::Open { lambda, p } = cfg.inflow {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(Error::invalid("lambda", "must be finite and > 0"));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid("p", format!("p out of range [0,1]: {p}")));
            }
        }
        let mut rng = seed.rng();
        let stations = match &cfg.initial {
            Initial::Explicit(v) => {
                if v.len() != n {
                    return Err(Error::invalid("initial", format!("expected {n} stations, got {}", v.len())));
                }
                if matches!(cfg.inflow, Inflow::Closed) && v.iter().map(|s| u64::from(s.total())).sum::<u64>() != k {
                    return Err(Error::invalid("initial", "station counts do not sum to K"));
                }
                v.clone()
            }
            init => {
                let infected = match init {
                    Initial::AllInfected => k,
                    Initial::Random { infected } => *infected,
                    Initial::Explicit(_) => unreachable!(),
                };
                if infected > k {
                    return Err(Error::invalid("initial", "more infected than customers"));
                }
                let mut v = vec![ReactorState::EMPTY; n];
                for c in 0..k {
                    let s = &mut v[rng.random_range(0..n)];
                    if c < infected {
                        s.inc_y()?;
                    } else {
                        s.inc_x()?;
                    }
                }
                v
            }
        };
        let mut e = Engine {
            variant,
            m: *params,
            split: cfg.docs_recovery_split && params.nu_is_default(),
            self_routing,
            inflow: cfg.inflow,
            st: vec![ReactorState::EMPTY; n],
            local: SumTree::new(n),
            xs: SumTree::new(n),
            x_tot: 0,
            y_tot: 0,
            sums: [[0; D1]; D1],
            rng,
            time: 0.0,
        };
        for (i, s) in stations.into_iter().enumerate() {
            e.set(i, s);
        }
        Ok(e)
    }

    pub fn n(&self) -> usize {
        self.st.len()
    }

    pub fn infected(&self) -> u64 {
        self.y_tot
    }

    pub fn customers(&self) -> u64 {
        self.x_tot + self.y_tot
    }

    pub fn state(&self) -> NetworkState {
        NetworkState {
            stations: self.st.clone(),
            total: self.customers(),
        }
    }

    /// Per-station sums of `x^a y^b`.
    pub fn sums(&self) -> MonomialTable {
        let mut t = [[0.0; D1]; D1];
        for a in 0..D1 {
            for b in 0..D1 {
                t[a][b] = self.sums[a][b] as f64;
            }
        }
        t
    }

    fn station_rates(&self, s: ReactorState) -> [f64; 4] {
        let m = &self.m;
        let (x, y) = (f64::from(s.x), f64::from(s.y));
        let inf = if self.variant == Variant::Air { 0.0 } else { m.alpha() * x * y };
        if self.variant == Variant::Docs && !self.split {
            [m.mu() * x, m.nu() * y, inf, 0.0]
        } else {
            [m.mu() * x, m.mu() * y, inf, m.beta() * y]
        }
    }

    fn set(&mut self, i: usize, s: ReactorState) {
        let old = self.st[i];
        let (mo, mn) = (monomials_exact(old), monomials_exact(s));
        for a in 0..D1 {
            for b in 0..D1 {
                self.sums[a][b] += mn[a][b] - mo[a][b];
            }
        }
        self.x_tot = self.x_tot + u64::from(s.x) - u64::from(old.x);
        self.y_tot = self.y_tot + u64::from(s.y) - u64::from(old.y);
        self.st[i] = s;
        self.local.set(i, self.station_rates(s).iter().sum());
        if self.variant == Variant::Air {
            self.xs.set(i, f64::from(s.x));
        }
    }

    fn air_rate(&self) -> f64 {
        if self.variant == Variant::Air {
            self.m.alpha() * self.y_tot as f64 / self.n() as f64 * self.x_tot as f64
        } else {
            0.0
        }
    }

    fn external_rate(&self) -> f64 {
        match self.inflow {
            Inflow::Closed => 0.0,
            Inflow::Open { lambda, .. } => lambda * self.n() as f64,
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.local.total() + self.air_rate() + self.external_rate()
    }

    fn destination(&mut self, from: usize) -> usize {
        let n = self.n();
        if self.self_routing {
            self.rng.random_range(0..n)
        } else {
            let j = self.rng.random_range(0..n - 1);
            if j >= from {
                j + 1
            } else {
                j
            }
        }
    }

    fn change(&mut self, i: usize, kind: EventKind, f: impl FnOnce(&mut ReactorState) -> Result<()>) -> Result<StationEvent> {
        let before = self.st[i];
        let mut after = before;
        f(&mut after)?;
        self.set(i, after);
        Ok(StationEvent {
            station: i,
            kind,
            before,
            after,
        })
    }

    /// Moves a customer into a random station (or out of an open system).
    fn route(&mut self, from: usize, infected: bool, internal: bool) -> Result<Option<StationEvent>> {
        if !internal && matches!(self.inflow, Inflow::Open { .. }) {
            return Ok(None);
        }
        let j = self.destination(from);
        let ev = if infected {
            self.change(j, EventKind::ArrivalI, |s| s.inc_y())?
        } else {
            self.change(j, EventKind::ArrivalS, |s| s.inc_x())?
        };
        Ok(Some(ev))
    }

    /// Time of the next event, or `None` if no event can occur.
    pub fn next_time(&mut self) -> Option<(f64, f64)> {
        let total = self.total_rate();
        if total > 0.0 {
            let e: f64 = self.rng.sample(Exp1);
            Some((self.time + e / total, total))
        } else {
            None
        }
    }

    /// Applies one event at time `t` with current total rate `total`.
    pub fn apply_at(&mut self, t: f64, total: f64) -> Result<NetEvent> {
        self.time = t;
        let mut u = self.rng.random::<f64>() * total;
        let local = self.local.total();
        if u < local || (self.air_rate() + self.external_rate() == 0.0) {
            let i = self.local.find(u.min(local));
            let r = self.station_rates(self.st[i]);
            let mut v = self.rng.random::<f64>() * r.iter().sum::<f64>();
            let mut pick = Local::MigrateS;
            for (k, &rk) in r.iter().enumerate() {
                if rk > 0.0 {
                    pick = [Local::MigrateS, Local::MigrateI, Local::Infect, Local::Recover][k];
                    if v < rk {
                        break;
                    }
                    v -= rk;
                }
            }
            return self.local_event(i, pick, t);
        }
        u -= local;
        let air = self.air_rate();
        if u < air {
            let i = self.xs.find(self.rng.random::<f64>() * self.xs.total());
            let first = self.change(i, EventKind::Infection, |s| {
                s.x -= 1;
                s.inc_y()
            })?;
            return Ok(NetEvent {
                time: t,
                first,
                second: None,
            });
        }
        let p = match self.inflow {
            Inflow::Open { p, .. } => p,
            Inflow::Closed => 0.0,
        };
        let i = self.rng.random_range(0..self.n());
        let first = if self.rng.random::<f64>() < p {
            self.change(i, EventKind::ArrivalI, |s| s.inc_y())?
        } else {
            self.change(i, EventKind::ArrivalS, |s| s.inc_x())?
        };
        Ok(NetEvent {
            time: t,
            first,
            second: None,
        })
    }

    fn local_event(&mut self, i: usize, pick: Local, t: f64) -> Result<NetEvent> {
        let docs = self.variant == Variant::Docs;
        let (first, second) = match pick {
            Local::MigrateS => {
                let a = self.change(i, EventKind::DepartureS, |s| {
                    s.x -= 1;
                    Ok(())
                })?;
                (a, self.route(i, false, false)?)
            }
            Local::MigrateI => {
                let a = self.change(i, EventKind::DepartureI, |s| {
                    s.y -= 1;
                    Ok(())
                })?;
                (a, self.route(i, true, false)?)
            }
            Local::Infect if docs => {
                let a = self.change(i, EventKind::Infection, |s| {
                    s.x -= 1;
                    Ok(())
                })?;
                (a, self.route(i, true, true)?)
            }
            Local::Recover if docs => {
                let a = self.change(i, EventKind::Recovery, |s| {
                    s.y -= 1;
                    Ok(())
                })?;
                (a, self.route(i, false, true)?)
            }
            Local::Infect => (
                self.change(i, EventKind::Infection, |s| {
                    s.x -= 1;
                    s.inc_y()
                })?,
                None,
            ),
            Local::Recover => (
                self.change(i, EventKind::Recovery, |s| {
                    s.y -= 1;
                    s.inc_x()
                })?,
                None,
            ),
        };
        Ok(NetEvent { time: t, first, second })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRun {
    pub variant: Variant,
    pub n: usize,
    pub initial_customers: u64,
    pub self_routing: bool,
    /// Per-station time averages and event tallies.
    pub stats: RunStats,
    pub trajectory: Vec<TrajectoryRow>,
    pub n_events: u64,
    pub end_time: f64,
    pub final_state: NetworkState,
}

impl NetworkRun {
    /// Time-averaged fraction of customers that are infected.
    pub fn infected_fraction(&self) -> Estimate {
        self.stats.estimate(|w| w.moment(0, 1) / (w.moment(1, 0) + w.moment(0, 1)))
    }

    pub fn mean_x(&self) -> Estimate {
        self.stats.moment(1, 0)
    }

    pub fn mean_y(&self) -> Estimate {
        self.stats.moment(0, 1)
    }
}

fn row(e: &Engine, t: f64) -> TrajectoryRow {
    let n = e.n() as f64;
    TrajectoryRow {
        t,
        total_infected: e.infected(),
        mean_x: e.x_tot as f64 / n,
        mean_y: e.y_tot as f64 / n,
    }
}

/// Simulates a network of `n` stations starting with `k` customers.
pub fn simulate_network(
    variant: Variant,
    n: usize,
    k: u64,
    params: &ModelParams,
    horizon: Horizon,
    seed: RngSeed,
    cfg: &NetworkConfig,
) -> Result<NetworkRun> {
    if !horizon.is_positive() {
        return Err(Error::invalid("horizon", "must be > 0"));
    }
    let mut e = Engine::new(variant, n, k, params, seed, cfg)?;
    let initial_customers = e.customers();
    let mut clock = Clocked::new(horizon, &cfg.plan, n as f64, 0.0);
    let interval = cfg.sample_interval.or(match horizon {
        Horizon::Time(t) => Some(t / 1000.0),
        Horizon::Events(_) => None,
    });
    if let Some(dt) = interval {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("sample_interval", "must be > 0"));
        }
    }
    let mut trajectory = vec![row(&e, 0.0)];
    let mut sample_idx = 1u64;
    let next_sample = |i: u64| interval.map(|dt| i as f64 * dt).unwrap_or(f64::INFINITY);
    let mut n_events = 0u64;
    loop {
        let from = e.time;
        let sums = e.sums();
        let next = e.next_time();
        let t = next.map(|(t, _)| t).unwrap_or(f64::INFINITY);
        let stop_at = t.min(clock.end_time());
        while next_sample(sample_idx) <= stop_at {
            trajectory.push(row(&e, next_sample(sample_idx)));
            sample_idx += 1;
        }
        let Some((t, total)) = next.filter(|&(t, _)| t < clock.end_time()) else {
            if clock.end_time().is_finite() {
                clock.advance(from, clock.end_time(), &sums);
                e.time = clock.end_time();
            }
            break;
        };
        clock.advance(from, t, &sums);
        let ev = e.apply_at(t, total)?;
        n_events += 1;
        for s in std::iter::once(ev.first).chain(ev.second) {
            clock.event(t, s.kind, s.before, s.after);
        }
        if clock.done(t) {
            break;
        }
    }
    if trajectory.last().map(|r| r.t) != Some(e.time) {
        trajectory.push(row(&e, e.time));
    }
    Ok(NetworkRun {
        variant,
        n,
        initial_customers,
        self_routing: e.self_routing,
        stats: clock.finish(cfg.plan.ci_level),
        trajectory,
        n_events,
        end_time: e.time,
        final_state: e.state(),
    })
}

/// Closed network of `n` stations holding `k` customers.
pub fn simulate_closed(
    variant: Variant,
    n: usize,
    k: u64,
    params: &ModelParams,
    horizon: Horizon,
    seed: RngSeed,
    cfg: &NetworkConfig,
) -> Result<NetworkRun> {
    if k < 1 {
        return Err(Error::invalid("k", "need at least one customer"));
    }
    let cfg = NetworkConfig {
        inflow: Inflow::Closed,
        ..cfg.clone()
    };
    simulate_network(variant, n, k, params, horizon, seed, &cfg)
}

/// `K = round(eta N)`.
pub fn customers_for(eta: f64, n: usize) -> u64 {
    (eta * n as f64).round() as u64
}

/// One row of the extinction CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionRep {
    pub rep: usize,
    /// Absorption time, or the cap when censored.
    pub absorption_time: f64,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionResult {
    pub n: usize,
    pub k: u64,
    pub cap: f64,
    pub reps: Vec<ExtinctionRep>,
    pub survived_at_cap: usize,
}

impl ExtinctionResult {
    /// Median absorption time, censored reps counting as the cap.
    pub fn median(&self) -> f64 {
        let mut v: Vec<f64> = self.reps.iter().map(|r| r.absorption_time).collect();
        v.sort_by(f64::total_cmp);
        let m = v.len();
        if m == 0 {
            f64::NAN
        } else if m % 2 == 1 {
            v[m / 2]
        } else {
            0.5 * (v[m / 2 - 1] + v[m / 2])
        }
    }
}

/// First time the total infected count hits 0, per replication, censored at
/// `cap`.
#[allow(clippy::too_many_arguments)]
pub fn extinction_time(
    variant: Variant,
    n: usize,
    k: u64,
    params: &ModelParams,
    reps: usize,
    cap: f64,
    seed: RngSeed,
    cfg: &NetworkConfig,
) -> Result<ExtinctionResult> {
    if !(cap > 0.0) {
        return Err(Error::invalid("cap", "must be > 0"));
    }
    let cfg = NetworkConfig {
        inflow: Inflow::Closed,
        ..cfg.clone()
    };
    let out: Vec<Result<ExtinctionRep>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut e = Engine::new(variant, n, k, params, seed.substream(rep as u64), &cfg)?;
            loop {
                if e.infected() == 0 {
                    return Ok(ExtinctionRep {
                        rep,
                        absorption_time: e.time,
                        censored: false,
                    });
                }
                match e.next_time() {
                    Some((t, total)) if t < cap => {
                        e.apply_at(t, total)?;
                    }
                    _ => {
                        return Ok(ExtinctionRep {
                            rep,
                            absorption_time: cap,
                            censored: true,
                        })
                    }
                }
            }
        })
        .collect();
    let reps: Vec<ExtinctionRep> = out.into_iter().collect::<Result<_>>()?;
    let survived_at_cap = reps.iter().filter(|r| r.censored).count();
    Ok(ExtinctionResult {
        n,
        k,
        cap,
        reps,
        survived_at_cap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RoutingMode {
    /// External arrivals at `lambda` with infected fraction `p`; migrations
    /// leave, infections and recoveries are rerouted inside.
    #[default]
    Open,
    /// Closed DOCS network with `K = round(eta M)`; the infected input
    /// fraction is produced by the network itself.
    ClosedTl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDocsResult {
    pub mode: RoutingMode,
    pub mean_x: Estimate,
    pub mean_y: Estimate,
    pub mean_xy: Estimate,
    /// Infected share of the migration stream, `mu E[Y] / lambda`.
    pub p_star: Estimate,
    pub run: NetworkRun,
}

/// Ensemble of `m` DOCS stations exchanging rerouted customers uniformly.
pub fn simulate_routing_docs_meanfield(
    m: usize,
    params: &ModelParams,
    mode: RoutingMode,
    horizon: Horizon,
    seed: RngSeed,
    plan: &BatchPlan,
) -> Result<RoutingDocsResult> {
    if m < 100 {
        return Err(Error::invalid("m", "need at least 100 stations"));
    }
    let (k, inflow, initial) = match mode {
        RoutingMode::Open => (
            0,
            Inflow::Open {
                lambda: params.lambda(),
                p: params.p(),
            },
            Initial::Explicit(vec![ReactorState::EMPTY; m]),
        ),
        RoutingMode::ClosedTl => {
            let k = customers_for(params.eta(), m);
            (k, Inflow::Closed, Initial::Random { infected: k / 2 })
        }
    };
    let cfg = NetworkConfig {
        self_routing: Some(true),
        inflow,
        initial,
        plan: *plan,
        sample_interval: None,
        docs_recovery_split: true,
    };
    let run = simulate_network(Variant::Docs, m, k, params, horizon, seed, &cfg)?;
    let lambda_eff = match mode {
        RoutingMode::Open => params.lambda(),
        RoutingMode::ClosedTl => params.mu() * k as f64 / m as f64,
    };
    let mu = params.mu();
    Ok(RoutingDocsResult {
        mode,
        mean_x: run.stats.moment(1, 0),
        mean_y: run.stats.moment(0, 1),
        mean_xy: run.stats.moment(1, 1),
        p_star: run.stats.estimate(|w| mu * w.moment(0, 1) / lambda_eff),
        run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(eta: f64) -> ModelParams {
        ModelParams::from_eta(eta, 1.0, 1.0, 1.0, 0.0).unwrap()
    }

    fn conserved(variant: Variant, n: usize, k: u64, seed: u64) {
        let mut e = Engine::new(variant, n, k, &params(2.0), RngSeed::new(seed, 0), &NetworkConfig::default()).unwrap();
        for _ in 0..2_000 {
            let Some((t, total)) = e.next_time() else { break };
            e.apply_at(t, total).unwrap();
            let s = e.state();
            let sum: u64 = s.stations.iter().map(|r| u64::from(r.total())).sum();
            assert_eq!(sum, k);
            assert_eq!(e.customers(), k);
            let exact = s.stations.iter().map(|r| i128::from(r.x) * i128::from(r.y).pow(2)).sum::<i128>();
            assert_eq!(e.sums[1][2], exact);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn customers_are_conserved(n in 2usize..12, k in 1u64..40, seed in 0u64..1000, v in 0usize..3) {
            conserved([Variant::Sis, Variant::Docs, Variant::Air][v], n, k, seed);
        }
    }

    #[test]
    fn infection_free_start_stays_free() {
        for v in [Variant::Sis, Variant::Docs, Variant::Air] {
            let cfg = NetworkConfig {
                initial: Initial::Random { infected: 0 },
                ..NetworkConfig::default()
            };
            let r = simulate_closed(v, 10, 30, &params(3.0), Horizon::Events(5_000), RngSeed::new(1, 0), &cfg).unwrap();
            assert!(r.trajectory.iter().all(|row| row.total_infected == 0));
            assert_eq!(r.final_state.infected(), 0);
        }
    }

    #[test]
    fn sis_migration_avoids_origin() {
        let cfg = NetworkConfig {
            initial: Initial::Explicit(vec![ReactorState::new(1, 0), ReactorState::EMPTY]),
            ..NetworkConfig::default()
        };
        let mut e = Engine::new(Variant::Sis, 2, 1, &params(1.0), RngSeed::new(2, 0), &cfg).unwrap();
        for _ in 0..50 {
            let (t, total) = e.next_time().unwrap();
            let ev = e.apply_at(t, total).unwrap();
            assert_ne!(ev.first.station, ev.second.unwrap().station);
        }
    }

    #[test]
    fn zero_customers_go_extinct_at_once() {
        let r = extinction_time(Variant::Sis, 5, 0, &params(1.0), 3, 10.0, RngSeed::new(3, 0), &NetworkConfig::default()).unwrap();
        assert!(r.reps.iter().all(|x| x.absorption_time == 0.0 && !x.censored));
    }

    #[test]
    fn subcritical_extinction_before_cap() {
        let k = customers_for(0.1, 20);
        let r = extinction_time(Variant::Sis, 20, k, &params(0.1), 10, 1_000.0, RngSeed::new(4, 0), &NetworkConfig::default()).unwrap();
        assert_eq!(r.survived_at_cap, 0);
    }

    #[test]
    fn air_closed_matches_limit_fraction() {
        // Supercritical AIR: infected fraction 1 - beta/(eta alpha) = 0.5.
        let n = 400;
        let k = customers_for(2.0, n);
        let cfg = NetworkConfig {
            initial: Initial::Random { infected: k / 2 },
            ..NetworkConfig::default()
        };
        let r = simulate_closed(Variant::Air, n, k, &params(2.0), Horizon::Time(200.0), RngSeed::new(5, 0), &cfg).unwrap();
        let f = r.infected_fraction();
        // Finite-N drift is O(1/N).
        assert!((f.value - 0.5).abs() < 3.0 * f.std_error + 0.01, "{f:?}");
    }

    #[test]
    fn open_routing_docs_total_mean() {
        let m = ModelParams::from_eta(1.5, 1.0, 1.0, 1.0, 0.3).unwrap();
        let r = simulate_routing_docs_meanfield(200, &m, RoutingMode::Open, Horizon::Time(200.0), RngSeed::new(6, 0), &BatchPlan::default())
            .unwrap();
        let tot = r.run.stats.estimate(|w| w.moment(1, 0) + w.moment(0, 1));
        assert!(tot.within_k_se(1.5, 3.0), "{tot:?}");
    }

    #[test]
    fn trajectory_is_on_grid() {
        let r = simulate_closed(Variant::Sis, 10, 20, &params(2.0), Horizon::Time(10.0), RngSeed::new(7, 0), &NetworkConfig::default()).unwrap();
        assert_eq!(r.trajectory.len(), 1001);
        assert!((r.trajectory[1].t - 0.01).abs() < 1e-12);
        assert_eq!(r.end_time, 10.0);
    }
}
