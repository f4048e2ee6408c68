//! Exact event simulation of the open SIS, DOCS and AIR reactors.
//!
//! A reactor is a single infinite-server station fed by Poisson arrivals
//! (susceptible at rate `lambda*q`, infected at rate `lambda*p`) in which every
//! customer leaves after an exponential time of rate `mu`.
//!
//! * SIS: each susceptible is infected at rate `alpha*Y`, each infected
//!   recovers at rate `beta` and stays.
//! * DOCS: an infected susceptible leaves at once (an infected departure);
//!   infected customers leave at rate `nu`.
//! * AIR: a two-station tandem where station 1 (susceptible) serves at rate
//!   `mu + alpha*y` with `y` a fixed parameter and station 2 (infected) serves
//!   at rate `mu + beta`; service completions either leave or switch station.
//!
//! Event selection uses the direct method: one exponential clock for the
//! total rate, then a categorical draw over the six event kinds.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observe::{monomials, BatchPlan, Clocked, EventKind, EventRecord, Horizon, RunStats, Side};
use crate::params::{ModelParams, ReactorState};
use crate::rng::{RngSeed, SimRng};
use crate::stats::{ratio_estimate, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ReactorKind {
    Sis,
    Docs,
    /// `y_param` is the constant infected level driving station-1 infections.
    Air { y_param: f64 },
}

impl ReactorKind {
    pub fn name(&self) -> &'static str {
        match self {
            ReactorKind::Sis => "sis",
            ReactorKind::Docs => "docs",
            ReactorKind::Air { .. } => "air",
        }
    }

    fn validate(&self) -> Result<()> {
        if let ReactorKind::Air { y_param } = *self {
            if !(y_param.is_finite() && y_param >= 0.0) {
                return Err(Error::invalid("y_param", format!("must be finite and >= 0, got {y_param}")));
            }
        }
        Ok(())
    }

    /// For departures, whether the leaving customer counts as infected.
    /// `None` for events that are not departures.
    pub fn departure_tag(&self, kind: EventKind) -> Option<bool> {
        match (self, kind) {
            (_, EventKind::DepartureS) => Some(false),
            (_, EventKind::DepartureI) => Some(true),
            (ReactorKind::Docs, EventKind::Infection) => Some(true),
            (ReactorKind::Docs, EventKind::Recovery) => Some(false),
            _ => None,
        }
    }
}

/// Simulation options beyond the model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactorOptions {
    /// DOCS with `nu = mu + beta`: split the rate-`nu` departures into an
    /// infected departure (weight `mu`) and a recovery-departure tagged
    /// susceptible (weight `beta`). With any other `nu`, or when false, every
    /// rate-`nu` departure is tagged infected.
    pub docs_recovery_split: bool,
    pub initial: ReactorState,
}

impl Default for ReactorOptions {
    fn default() -> Self {
        ReactorOptions {
            docs_recovery_split: true,
            initial: ReactorState::EMPTY,
        }
    }
}

/// A reactor trajectory, advanced one event at a time.
#[derive(Debug, Clone)]
pub struct Reactor {
    kind: ReactorKind,
    params: ModelParams,
    state: ReactorState,
    time: f64,
    rng: SimRng,
    split: bool,
}

impl Reactor {
    pub fn new(kind: ReactorKind, params: ModelParams, seed: RngSeed, options: &ReactorOptions) -> Result<Self> {
        kind.validate()?;
        Ok(Reactor {
            kind,
            params,
            state: options.initial,
            time: 0.0,
            rng: seed.rng(),
            split: options.docs_recovery_split && params.nu_is_default(),
        })
    }

    pub fn state(&self) -> ReactorState {
        self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn kind(&self) -> ReactorKind {
        self.kind
    }

    /// Per-kind event rates in [`EventKind::ALL`] order.
    pub fn rates(&self) -> [f64; 6] {
        let m = &self.params;
        let x = f64::from(self.state.x);
        let y = f64::from(self.state.y);
        let lam = m.lambda();
        match self.kind {
            ReactorKind::Sis => [lam * m.q(), lam * m.p(), m.mu() * x, m.mu() * y, m.alpha() * x * y, m.beta() * y],
            ReactorKind::Docs => {
                let (dep_i, rec) = if self.split {
                    let w = m.mu() / (m.mu() + m.beta());
                    (m.nu() * y * w, m.nu() * y * (1.0 - w))
                } else {
                    (m.nu() * y, 0.0)
                };
                [lam * m.q(), lam * m.p(), m.mu() * x, dep_i, m.alpha() * x * y, rec]
            }
            ReactorKind::Air { y_param } => {
                [lam * m.q(), lam * m.p(), m.mu() * x, m.mu() * y, m.alpha() * y_param * x, m.beta() * y]
            }
        }
    }

    /// Samples the next event time and kind without applying it.
    fn draw(&mut self) -> (f64, EventKind) {
        let r = self.rates();
        let total: f64 = r.iter().sum();
        let e: f64 = self.rng.sample(Exp1);
        let dt = e / total;
        let mut u = self.rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &ri) in r.iter().enumerate() {
            if ri > 0.0 {
                pick = Some(i);
                if u < ri {
                    break;
                }
                u -= ri;
            }
        }
        // lambda > 0 guarantees at least one positive rate.
        (self.time + dt, EventKind::ALL[pick.expect("positive arrival rate")])
    }

    fn apply(&mut self, kind: EventKind) -> Result<()> {
        let s = &mut self.state;
        match kind {
            EventKind::ArrivalS => s.inc_x()?,
            EventKind::ArrivalI => s.inc_y()?,
            EventKind::DepartureS => s.x -= 1,
            EventKind::DepartureI => s.y -= 1,
            EventKind::Infection => {
                s.x -= 1;
                if !matches!(self.kind, ReactorKind::Docs) {
                    s.inc_y()?;
                }
            }
            EventKind::Recovery => {
                s.y -= 1;
                if !matches!(self.kind, ReactorKind::Docs) {
                    s.inc_x()?;
                }
            }
        }
        Ok(())
    }

    /// Advances to and applies the next event.
    pub fn step(&mut self) -> Result<EventRecord> {
        let (t, kind) = self.draw();
        let before = self.state;
        self.apply(kind)?;
        self.time = t;
        Ok(EventRecord {
            time: t,
            kind,
            state_before: before,
            state_after: self.state,
        })
    }
}

/// Configuration of a long stationary run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RunConfig {
    pub plan: BatchPlan,
    pub options: ReactorOptions,
}

/// Result of [`simulate_reactor`].
#[derive(Debug, Clone)]
pub struct ReactorRun {
    pub kind: ReactorKind,
    pub params: ModelParams,
    pub stats: RunStats,
    pub events: Vec<EventRecord>,
    pub n_events: u64,
    pub end_time: f64,
    pub final_state: ReactorState,
}

impl ReactorRun {
    pub fn mean_x(&self) -> Estimate {
        self.stats.moment(1, 0)
    }
    pub fn mean_y(&self) -> Estimate {
        self.stats.moment(0, 1)
    }
    pub fn mean_x2(&self) -> Estimate {
        self.stats.moment(2, 0)
    }
    pub fn mean_y2(&self) -> Estimate {
        self.stats.moment(0, 2)
    }
    pub fn mean_xy(&self) -> Estimate {
        self.stats.moment(1, 1)
    }
    pub fn mean_x2y(&self) -> Estimate {
        self.stats.moment(2, 1)
    }
    pub fn mean_xy2(&self) -> Estimate {
        self.stats.moment(1, 2)
    }
}

/// Runs a reactor over `horizon`, handing every event to `sink` as it occurs.
pub fn simulate_reactor_streaming(
    kind: ReactorKind,
    params: &ModelParams,
    horizon: Horizon,
    seed: RngSeed,
    config: &RunConfig,
    mut sink: impl FnMut(&EventRecord),
) -> Result<ReactorRun> {
    if !horizon.is_positive() {
        return Err(Error::invalid("horizon", "must be > 0"));
    }
    let mut r = Reactor::new(kind, *params, seed, &config.options)?;
    let mut clock = Clocked::new(horizon, &config.plan, 1.0, 0.0);
    let mut n = 0u64;
    loop {
        let from = r.time();
        let s = r.state();
        let m = monomials(f64::from(s.x), f64::from(s.y));
        let (t, kind_next) = r.draw();
        if t >= clock.end_time() {
            clock.advance(from, clock.end_time(), &m);
            break;
        }
        clock.advance(from, t, &m);
        let before = r.state;
        r.apply(kind_next)?;
        r.time = t;
        let ev = EventRecord {
            time: t,
            kind: kind_next,
            state_before: before,
            state_after: r.state,
        };
        n += 1;
        clock.event(t, kind_next, before, r.state);
        sink(&ev);
        if clock.done(t) {
            break;
        }
    }
    let end_time = r.time().max(if clock.end_time().is_finite() { clock.end_time() } else { 0.0 });
    Ok(ReactorRun {
        kind,
        params: *params,
        stats: clock.finish(config.plan.ci_level),
        events: Vec::new(),
        n_events: n,
        end_time,
        final_state: r.state(),
    })
}

/// Long-run simulation with time-average moments; events are kept when
/// `record` is set.
pub fn simulate_reactor(
    kind: ReactorKind,
    params: &ModelParams,
    horizon: Horizon,
    seed: RngSeed,
    record: bool,
    config: &RunConfig,
) -> Result<ReactorRun> {
    let mut events = Vec::new();
    let mut run = simulate_reactor_streaming(kind, params, horizon, seed, config, |e| {
        if record {
            events.push(*e);
        }
    })?;
    run.events = events;
    Ok(run)
}

/// Tallies of one busy cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    /// Length of the busy period.
    pub duration: f64,
    pub departures: u64,
    pub infected_departures: u64,
    /// Idle time that preceded the cycle.
    pub idle_before: f64,
    /// Integral of the infected count over the busy period.
    pub infected_area: f64,
}

/// Consecutive busy cycles of a reactor started empty.
pub fn run_busy_cycles(
    kind: ReactorKind,
    params: &ModelParams,
    n_cycles: usize,
    seed: RngSeed,
    options: &ReactorOptions,
) -> Result<Vec<CycleStats>> {
    if n_cycles == 0 {
        return Err(Error::invalid("n_cycles", "must be >= 1"));
    }
    let opts = ReactorOptions {
        initial: ReactorState::EMPTY,
        ..*options
    };
    let mut r = Reactor::new(kind, *params, seed, &opts)?;
    let mut out = Vec::with_capacity(n_cycles);
    let mut empty_since = 0.0;
    let mut start = 0.0;
    let mut d = 0u64;
    let mut di = 0u64;
    let mut area = 0.0;
    while out.len() < n_cycles {
        let from = r.time();
        let ev = r.step()?;
        if ev.state_before.is_empty() {
            start = ev.time;
            d = 0;
            di = 0;
            area = 0.0;
        } else {
            area += f64::from(ev.state_before.y) * (ev.time - from);
        }
        if let Some(inf) = kind.departure_tag(ev.kind) {
            d += 1;
            if inf {
                di += 1;
            }
        }
        if ev.state_after.is_empty() {
            out.push(CycleStats {
                duration: ev.time - start,
                departures: d,
                infected_departures: di,
                idle_before: start - empty_since,
                infected_area: area,
            });
            empty_since = ev.time;
        }
    }
    Ok(out)
}

/// Event averages around infection and recovery epochs of the SIS reactor.
///
/// `*_minus` is the state just before the event and `*_plus` just after. An
/// estimate is `None` when its event kind never occurred.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PalmEstimates {
    pub e_i_y_minus: Option<Estimate>,
    pub e_i_x_plus: Option<Estimate>,
    pub e_i_y_plus: Option<Estimate>,
    pub e_i_x_minus: Option<Estimate>,
    pub e_r_y_plus: Option<Estimate>,
    pub e_r_x_minus: Option<Estimate>,
    pub e_r_x_plus: Option<Estimate>,
    /// Infection events per unit time.
    pub a_i: Estimate,
    /// Recovery events per unit time.
    pub a_r: Estimate,
    pub infection_events: u64,
    pub recovery_events: u64,
    /// Fewer than 100 infection or recovery events.
    pub low_confidence: bool,
}

/// Palm average of `side` at events of `kind`, with a ratio-of-means error
/// over batches.
pub fn palm_average(stats: &RunStats, kind: EventKind, side: Side) -> Option<Estimate> {
    if stats.overall.count(kind) == 0.0 {
        return None;
    }
    let num: Vec<f64> = stats.batches.iter().map(|w| w.flux(kind, side) * w.time * w.units).collect();
    let den: Vec<f64> = stats.batches.iter().map(|w| w.count(kind)).collect();
    ratio_estimate(&num, &den, stats.ci_level).ok()
}

impl PalmEstimates {
    pub fn from_stats(stats: &RunStats) -> Self {
        let ni = stats.event_count(EventKind::Infection);
        let nr = stats.event_count(EventKind::Recovery);
        PalmEstimates {
            e_i_y_minus: palm_average(stats, EventKind::Infection, Side::YBefore),
            e_i_x_plus: palm_average(stats, EventKind::Infection, Side::XAfter),
            e_i_y_plus: palm_average(stats, EventKind::Infection, Side::YAfter),
            e_i_x_minus: palm_average(stats, EventKind::Infection, Side::XBefore),
            e_r_y_plus: palm_average(stats, EventKind::Recovery, Side::YAfter),
            e_r_x_minus: palm_average(stats, EventKind::Recovery, Side::XBefore),
            e_r_x_plus: palm_average(stats, EventKind::Recovery, Side::XAfter),
            a_i: stats.estimate(|w| w.rate(EventKind::Infection)),
            a_r: stats.estimate(|w| w.rate(EventKind::Recovery)),
            infection_events: ni,
            recovery_events: nr,
            low_confidence: ni < 100 || nr < 100,
        }
    }
}

/// Palm estimates from a stationary SIS run.
pub fn palm_estimates(
    params: &ModelParams,
    horizon: Horizon,
    seed: RngSeed,
    config: &RunConfig,
) -> Result<(PalmEstimates, ReactorRun)> {
    let run = simulate_reactor(ReactorKind::Sis, params, horizon, seed, false, config)?;
    Ok((PalmEstimates::from_stats(&run.stats), run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_params;
    use proptest::prelude::*;

    fn unit(p: f64) -> ModelParams {
        derive_params(1.0, 1.0, 1.0, 1.0, p, None).unwrap()
    }

    #[test]
    fn transitions_match_kind() {
        for kind in [ReactorKind::Sis, ReactorKind::Docs, ReactorKind::Air { y_param: 0.7 }] {
            let run = simulate_reactor(kind, &unit(0.5), Horizon::Events(20_000), RngSeed::new(1, 0), true, &RunConfig::default())
                .unwrap();
            for e in &run.events {
                let (b, a) = (e.state_before, e.state_after);
                let dx = i64::from(a.x) - i64::from(b.x);
                let dy = i64::from(a.y) - i64::from(b.y);
                let docs = matches!(kind, ReactorKind::Docs);
                let expect = match e.kind {
                    EventKind::ArrivalS => (1, 0),
                    EventKind::ArrivalI => (0, 1),
                    EventKind::DepartureS => (-1, 0),
                    EventKind::DepartureI => (0, -1),
                    EventKind::Infection => (-1, if docs { 0 } else { 1 }),
                    EventKind::Recovery => (if docs { 0 } else { 1 }, -1),
                };
                assert_eq!((dx, dy), expect, "{kind:?} {e:?}");
            }
        }
    }

    #[test]
    fn no_infection_source_means_no_infections() {
        let run = simulate_reactor(ReactorKind::Sis, &unit(0.0), Horizon::Events(50_000), RngSeed::new(3, 0), true, &RunConfig::default())
            .unwrap();
        assert!(run.events.iter().all(|e| e.state_after.y == 0));
        assert!(run.events.iter().all(|e| e.kind != EventKind::Infection));
        assert_eq!(run.mean_y().value, 0.0);
    }

    #[test]
    fn deterministic_streams() {
        let go = || {
            simulate_reactor(ReactorKind::Sis, &unit(0.3), Horizon::Events(5_000), RngSeed::new(11, 2), true, &RunConfig::default())
                .unwrap()
                .events
        };
        assert_eq!(go(), go());
        let c1 = run_busy_cycles(ReactorKind::Sis, &unit(0.3), 200, RngSeed::new(5, 5), &ReactorOptions::default()).unwrap();
        let c2 = run_busy_cycles(ReactorKind::Sis, &unit(0.3), 200, RngSeed::new(5, 5), &ReactorOptions::default()).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn zero_input_cycles_have_no_infected_departures() {
        let c = run_busy_cycles(ReactorKind::Sis, &unit(0.0), 2_000, RngSeed::new(9, 0), &ReactorOptions::default()).unwrap();
        assert!(c.iter().all(|s| s.infected_departures == 0));
    }

    #[test]
    fn single_departure_cycles_when_sparse() {
        // lambda = 0.05, mu = 1: a cycle is a single customer unless another
        // arrives before it leaves, which has probability lambda/(lambda+mu).
        let m = derive_params(0.05, 1.0, 1.0, 1.0, 1.0, None).unwrap();
        let c = run_busy_cycles(ReactorKind::Sis, &m, 20_000, RngSeed::new(4, 0), &ReactorOptions::default()).unwrap();
        let frac = c.iter().filter(|s| s.departures == 1).count() as f64 / c.len() as f64;
        let expect = 1.0 / 1.05;
        let se = (expect * (1.0 - expect) / c.len() as f64).sqrt();
        assert!((frac - expect).abs() < 4.0 * se, "{frac} vs {expect}");
    }

    #[test]
    fn cycle_tallies_sum_to_total_departures() {
        let m = unit(0.4);
        let opts = ReactorOptions::default();
        let cycles = run_busy_cycles(ReactorKind::Docs, &m, 500, RngSeed::new(8, 1), &opts).unwrap();
        // Replay the same stream and count departures independently.
        let mut r = Reactor::new(ReactorKind::Docs, m, RngSeed::new(8, 1), &opts).unwrap();
        let mut done = 0;
        let mut deps = 0u64;
        while done < 500 {
            let e = r.step().unwrap();
            if ReactorKind::Docs.departure_tag(e.kind).is_some() {
                deps += 1;
            }
            if e.state_after.is_empty() {
                done += 1;
            }
        }
        assert_eq!(cycles.iter().map(|c| c.departures).sum::<u64>(), deps);
        for c in &cycles {
            assert!(c.duration > 0.0 && c.departures >= 1 && c.infected_departures <= c.departures);
        }
    }

    #[test]
    fn palm_plus_minus_offsets() {
        let (palm, _) = palm_estimates(&unit(0.5), Horizon::Events(200_000), RngSeed::new(2, 0), &RunConfig::default()).unwrap();
        let ym = palm.e_i_y_minus.unwrap().value;
        let yp = palm.e_i_y_plus.unwrap().value;
        assert!((yp - ym - 1.0).abs() < 1e-9);
        let xm = palm.e_i_x_minus.unwrap().value;
        let xp = palm.e_i_x_plus.unwrap().value;
        assert!((xm - xp - 1.0).abs() < 1e-9);
        assert!(!palm.low_confidence);
    }

    #[test]
    fn palm_undefined_without_infected() {
        let (palm, _) = palm_estimates(&unit(0.0), Horizon::Events(20_000), RngSeed::new(2, 0), &RunConfig::default()).unwrap();
        assert!(palm.e_i_y_minus.is_none());
        assert!(palm.e_r_x_minus.is_none());
        assert_eq!(palm.a_i.value, 0.0);
        assert!(palm.low_confidence);
    }

    #[test]
    fn air_rejects_negative_level() {
        let r = Reactor::new(ReactorKind::Air { y_param: -1.0 }, unit(0.5), RngSeed::new(0, 0), &ReactorOptions::default());
        assert!(r.is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn states_stay_nonnegative_and_rates_consistent(
            lam in 0.1f64..5.0, mu in 0.1f64..3.0, a in 0.1f64..5.0, b in 0.1f64..3.0,
            p in 0.0f64..=1.0, seed in any::<u64>(), which in 0usize..3,
        ) {
            let m = derive_params(lam, mu, a, b, p, None).unwrap();
            let kind = [ReactorKind::Sis, ReactorKind::Docs, ReactorKind::Air { y_param: 1.3 }][which];
            let mut r = Reactor::new(kind, m, RngSeed::new(seed, 0), &ReactorOptions::default()).unwrap();
            for _ in 0..2_000 {
                let before_rates = r.rates();
                let e = r.step().unwrap();
                // The chosen kind had a positive rate.
                prop_assert!(before_rates[e.kind.index()] > 0.0);
                if kind == ReactorKind::Sis {
                    prop_assert!((before_rates.iter().sum::<f64>()
                        - (lam + mu * e.state_before.total() as f64
                           + b * f64::from(e.state_before.y)
                           + a * f64::from(e.state_before.x) * f64::from(e.state_before.y))).abs() < 1e-9);
                }
            }
        }
    }
}
