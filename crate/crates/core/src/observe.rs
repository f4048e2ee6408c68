//! Event records and the time-average / event-average accumulators shared by
//! the reactor, network and mean-field simulators.
//!
//! A [`Window`] holds, over one stretch of simulated time, the integrals of
//! every monomial `x^a y^b` with `a + b <= 4` and per-kind event tallies of the
//! state just before and after each event. [`RunStats`] keeps the windows of a
//! batch-means partition; any smooth functional of a window becomes an
//! [`Estimate`] through [`RunStats::estimate`].

use serde::{Deserialize, Serialize};

use crate::params::ReactorState;
use crate::stats::{Estimate, DEFAULT_CI_LEVEL};

/// Largest total degree of the tracked monomials.
pub const MAX_DEGREE: usize = 4;
const D1: usize = MAX_DEGREE + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "arrival_S")]
    ArrivalS,
    #[serde(rename = "arrival_I")]
    ArrivalI,
    #[serde(rename = "departure_S")]
    DepartureS,
    #[serde(rename = "departure_I")]
    DepartureI,
    #[serde(rename = "infection")]
    Infection,
    #[serde(rename = "recovery")]
    Recovery,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::ArrivalS,
        EventKind::ArrivalI,
        EventKind::DepartureS,
        EventKind::DepartureI,
        EventKind::Infection,
        EventKind::Recovery,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ArrivalS => "arrival_S",
            EventKind::ArrivalI => "arrival_I",
            EventKind::DepartureS => "departure_S",
            EventKind::DepartureI => "departure_I",
            EventKind::Infection => "infection",
            EventKind::Recovery => "recovery",
        }
    }
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One transition of a station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub state_before: ReactorState,
    pub state_after: ReactorState,
}

/// Flat CSV row for event logs: `time,kind,x_before,y_before,x_after,y_after`.
#[derive(Debug, Clone, Serialize)]
pub struct EventRow {
    pub time: f64,
    pub kind: &'static str,
    pub x_before: u32,
    pub y_before: u32,
    pub x_after: u32,
    pub y_after: u32,
}

impl From<&EventRecord> for EventRow {
    fn from(e: &EventRecord) -> Self {
        EventRow {
            time: e.time,
            kind: e.kind.as_str(),
            x_before: e.state_before.x,
            y_before: e.state_before.y,
            x_after: e.state_after.x,
            y_after: e.state_after.y,
        }
    }
}

/// Which coordinate of an event tally to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    XBefore,
    YBefore,
    XAfter,
    YAfter,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EventTally {
    pub count: f64,
    pub x_before: f64,
    pub y_before: f64,
    pub x_after: f64,
    pub y_after: f64,
}

impl EventTally {
    fn get(&self, side: Side) -> f64 {
        match side {
            Side::XBefore => self.x_before,
            Side::YBefore => self.y_before,
            Side::XAfter => self.x_after,
            Side::YAfter => self.y_after,
        }
    }

    fn add(&mut self, o: &EventTally) {
        self.count += o.count;
        self.x_before += o.x_before;
        self.y_before += o.y_before;
        self.x_after += o.x_after;
        self.y_after += o.y_after;
    }
}

/// Monomials `x^a y^b` laid out as `[a][b]`; entries with `a + b > 4` are 0.
pub type MonomialTable = [[f64; D1]; D1];

pub fn monomials(x: f64, y: f64) -> MonomialTable {
    let mut px = [1.0; D1];
    let mut py = [1.0; D1];
    for k in 1..D1 {
        px[k] = px[k - 1] * x;
        py[k] = py[k - 1] * y;
    }
    let mut t = [[0.0; D1]; D1];
    for a in 0..D1 {
        for b in 0..(D1 - a) {
            t[a][b] = px[a] * py[b];
        }
    }
    t
}

/// Time integrals and event tallies over one stretch of time.
///
/// `units` is the number of stations the integrals are summed over (1 for a
/// single reactor); all per-station quantities divide by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub time: f64,
    pub units: f64,
    pub area: MonomialTable,
    pub events: [EventTally; 6],
}

impl Window {
    pub fn new(units: f64) -> Self {
        Window {
            time: 0.0,
            units,
            area: [[0.0; D1]; D1],
            events: [EventTally::default(); 6],
        }
    }

    /// A window whose moments are the given expectations and which has no
    /// events; used to evaluate moment identities on exact distributions.
    pub fn from_moments(moments: MonomialTable) -> Self {
        Window {
            time: 1.0,
            units: 1.0,
            area: moments,
            events: [EventTally::default(); 6],
        }
    }

    /// Time-average of `x^a y^b` per station.
    pub fn moment(&self, a: usize, b: usize) -> f64 {
        assert!(a + b <= MAX_DEGREE, "moment degree {a}+{b} not tracked");
        self.area[a][b] / (self.time * self.units)
    }

    /// Events of `kind` per unit time per station.
    pub fn rate(&self, kind: EventKind) -> f64 {
        self.events[kind.index()].count / (self.time * self.units)
    }

    /// Sum of a state coordinate over events of `kind`, per unit time per
    /// station (rate times Palm mean).
    pub fn flux(&self, kind: EventKind, side: Side) -> f64 {
        self.events[kind.index()].get(side) / (self.time * self.units)
    }

    /// Palm (event) average of a state coordinate; `None` without events.
    pub fn palm(&self, kind: EventKind, side: Side) -> Option<f64> {
        let t = &self.events[kind.index()];
        if t.count > 0.0 {
            Some(t.get(side) / t.count)
        } else {
            None
        }
    }

    pub fn count(&self, kind: EventKind) -> f64 {
        self.events[kind.index()].count
    }

    fn add(&mut self, o: &Window) {
        self.time += o.time;
        for a in 0..D1 {
            for b in 0..D1 {
                self.area[a][b] += o.area[a][b];
            }
        }
        for (t, u) in self.events.iter_mut().zip(o.events.iter()) {
            t.add(u);
        }
    }
}

/// Batch-means container for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub overall: Window,
    pub batches: Vec<Window>,
    pub ci_level: f64,
}

impl RunStats {
    /// Estimate of `f` applied to the whole run; the standard error is the
    /// spread of `f` across batches over `sqrt(batches)`.
    ///
    /// Returns `None` when `f` is not finite on the run or on some batch.
    pub fn try_estimate(&self, f: impl Fn(&Window) -> f64) -> Option<Estimate> {
        let value = f(&self.overall);
        if !value.is_finite() {
            return None;
        }
        let vals: Vec<f64> = self.batches.iter().map(&f).collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let b = vals.len();
        if b < 2 {
            return Some(Estimate::new(value, f64::NAN, b as u64, self.ci_level));
        }
        let se = if vals.iter().all(|&v| v == vals[0]) {
            0.0
        } else {
            let m = vals.iter().sum::<f64>() / b as f64;
            let ss: f64 = vals.iter().map(|v| (v - m) * (v - m)).sum();
            (ss / (b as f64 - 1.0) / b as f64).sqrt()
        };
        Some(Estimate::new(value, se, b as u64, self.ci_level))
    }

    /// Like [`try_estimate`](Self::try_estimate) but NaN-filled when undefined.
    pub fn estimate(&self, f: impl Fn(&Window) -> f64) -> Estimate {
        self.try_estimate(f)
            .unwrap_or(Estimate::new(f64::NAN, f64::NAN, self.batches.len() as u64, self.ci_level))
    }

    pub fn moment(&self, a: usize, b: usize) -> Estimate {
        self.estimate(|w| w.moment(a, b))
    }

    pub fn elapsed(&self) -> f64 {
        self.overall.time
    }

    pub fn event_count(&self, kind: EventKind) -> u64 {
        self.overall.count(kind) as u64
    }
}

/// Incremental builder of [`RunStats`].
#[derive(Debug, Clone)]
pub struct Accumulator {
    units: f64,
    current: Window,
    batches: Vec<Window>,
}

impl Accumulator {
    pub fn new(units: f64) -> Self {
        Accumulator {
            units,
            current: Window::new(units),
            batches: Vec::new(),
        }
    }

    /// Adds `dt` time units during which the summed monomials were `sums`.
    #[inline]
    pub fn integrate(&mut self, dt: f64, sums: &MonomialTable) {
        if dt <= 0.0 {
            return;
        }
        self.current.time += dt;
        for a in 0..D1 {
            for b in 0..(D1 - a) {
                self.current.area[a][b] += dt * sums[a][b];
            }
        }
    }

    #[inline]
    pub fn record(&mut self, kind: EventKind, before: ReactorState, after: ReactorState) {
        let t = &mut self.current.events[kind.index()];
        t.count += 1.0;
        t.x_before += f64::from(before.x);
        t.y_before += f64::from(before.y);
        t.x_after += f64::from(after.x);
        t.y_after += f64::from(after.y);
    }

    pub fn close_batch(&mut self) {
        let w = std::mem::replace(&mut self.current, Window::new(self.units));
        if w.time > 0.0 {
            self.batches.push(w);
        }
    }

    pub fn batches_closed(&self) -> usize {
        self.batches.len()
    }

    pub fn finish(mut self, ci_level: f64) -> RunStats {
        self.close_batch();
        let mut overall = Window::new(self.units);
        for b in &self.batches {
            overall.add(b);
        }
        RunStats {
            overall,
            batches: self.batches,
            ci_level,
        }
    }
}

/// How a run is measured: burn-in followed by equal batches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchPlan {
    /// Fraction of the horizon discarded before measuring.
    pub burn_in: f64,
    pub batches: usize,
    pub ci_level: f64,
}

impl Default for BatchPlan {
    fn default() -> Self {
        BatchPlan {
            burn_in: 0.1,
            batches: 100,
            ci_level: DEFAULT_CI_LEVEL,
        }
    }
}

/// Run length, in simulated time or in events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Horizon {
    Time(f64),
    Events(u64),
}

impl Horizon {
    pub fn is_positive(&self) -> bool {
        match *self {
            Horizon::Time(t) => t > 0.0 && t.is_finite(),
            Horizon::Events(n) => n > 0,
        }
    }
}

/// Drives batch boundaries for a run under a [`Horizon`] and [`BatchPlan`].
///
/// The simulator reports each inter-event interval and event through
/// [`Clocked::advance`] and [`Clocked::event`]; the schedule splits intervals
/// at batch boundaries (time horizons) or closes batches after a fixed number
/// of events (event horizons).
#[derive(Debug, Clone)]
pub struct Clocked {
    horizon: Horizon,
    burn_end: f64,
    batch_len: f64,
    next_boundary: f64,
    batches: usize,
    events_seen: u64,
    start_time: f64,
    pub acc: Accumulator,
}

impl Clocked {
    pub fn new(horizon: Horizon, plan: &BatchPlan, units: f64, start_time: f64) -> Self {
        let batches = plan.batches.max(1);
        let (burn_end, batch_len) = match horizon {
            Horizon::Time(t) => {
                let b = t * plan.burn_in;
                (start_time + b, (t - b) / batches as f64)
            }
            Horizon::Events(n) => {
                let b = (n as f64 * plan.burn_in).floor();
                (b, ((n as f64 - b) / batches as f64).max(1.0))
            }
        };
        Clocked {
            horizon,
            burn_end,
            batch_len,
            next_boundary: burn_end + batch_len,
            batches,
            events_seen: 0,
            start_time,
            acc: Accumulator::new(units),
        }
    }

    /// True once the horizon is reached.
    pub fn done(&self, now: f64) -> bool {
        match self.horizon {
            Horizon::Time(t) => now >= self.start_time + t,
            Horizon::Events(n) => self.events_seen >= n,
        }
    }

    /// Time at which the run ends, for time horizons.
    pub fn end_time(&self) -> f64 {
        match self.horizon {
            Horizon::Time(t) => self.start_time + t,
            Horizon::Events(_) => f64::INFINITY,
        }
    }

    /// Accounts for the interval `[from, to)` during which `sums` held.
    pub fn advance(&mut self, mut from: f64, to: f64, sums: &MonomialTable) {
        match self.horizon {
            Horizon::Time(_) => {
                let to = to.min(self.end_time());
                if to <= self.burn_end {
                    return;
                }
                from = from.max(self.burn_end);
                while to > self.next_boundary && self.acc.batches_closed() + 1 < self.batches {
                    self.acc.integrate(self.next_boundary - from, sums);
                    from = self.next_boundary;
                    self.acc.close_batch();
                    self.next_boundary += self.batch_len;
                }
                self.acc.integrate(to - from, sums);
            }
            Horizon::Events(_) => {
                if (self.events_seen as f64) < self.burn_end {
                    return;
                }
                self.acc.integrate(to - from, sums);
            }
        }
    }

    /// Records an event occurring at `now`.
    pub fn event(&mut self, now: f64, kind: EventKind, before: ReactorState, after: ReactorState) {
        self.events_seen += 1;
        match self.horizon {
            Horizon::Time(_) => {
                if now >= self.burn_end && now < self.end_time() {
                    self.acc.record(kind, before, after);
                }
            }
            Horizon::Events(_) => {
                let k = self.events_seen as f64;
                if k > self.burn_end {
                    self.acc.record(kind, before, after);
                    let into = k - self.burn_end;
                    if into >= self.next_boundary - self.burn_end
                        && self.acc.batches_closed() + 1 < self.batches
                    {
                        self.acc.close_batch();
                        self.next_boundary += self.batch_len;
                    }
                }
            }
        }
    }

    pub fn events_seen(&self) -> u64 {
        self.events_seen
    }

    pub fn finish(self, ci_level: f64) -> RunStats {
        self.acc.finish(ci_level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_layout() {
        let t = monomials(2.0, 3.0);
        assert_eq!(t[0][0], 1.0);
        assert_eq!(t[2][1], 12.0);
        assert_eq!(t[1][3], 54.0);
        assert_eq!(t[4][0], 16.0);
        assert_eq!(t[3][2], 0.0);
    }

    #[test]
    fn time_batches_cover_measured_span() {
        let plan = BatchPlan {
            burn_in: 0.2,
            batches: 4,
            ci_level: 0.95,
        };
        let mut c = Clocked::new(Horizon::Time(10.0), &plan, 1.0, 0.0);
        let m = monomials(1.0, 2.0);
        c.advance(0.0, 3.3, &m);
        c.advance(3.3, 12.0, &m);
        let s = c.finish(0.95);
        assert_eq!(s.batches.len(), 4);
        assert!((s.elapsed() - 8.0).abs() < 1e-12);
        for b in &s.batches {
            assert!((b.time - 2.0).abs() < 1e-12);
            assert!((b.moment(1, 1) - 2.0).abs() < 1e-12);
        }
        let e = s.moment(0, 1);
        assert_eq!(e.value, 2.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn palm_undefined_without_events() {
        let w = Window::new(1.0);
        assert!(w.palm(EventKind::Infection, Side::YBefore).is_none());
    }
}
