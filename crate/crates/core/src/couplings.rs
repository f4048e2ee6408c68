//! Shared-clock couplings of several SIS systems, checked pathwise.
//!
//! Every customer is present in all coupled systems at once and carries one
//! color per system. The systems share:
//!
//! * the arrival clock and its uniform mark `u`, which each system maps to a
//!   color through its own intervals;
//! * one departure clock of rate `mu` per customer (closed networks: the same
//!   destination station in every system);
//! * one recovery clock of rate `beta_max` per customer, accepted in a system
//!   with rate `beta_s` when a shared uniform falls below `beta_s / beta_max`;
//! * one infection clock of rate `alpha_max` per ordered pair of customers at
//!   the same station, thinned the same way with `alpha_s / alpha_max`.
//!
//! Colors: green is susceptible. A red infector turns its target red. A
//! magenta infector turns a green or magenta target magenta and leaves a red
//! one red. Recovery makes any customer green. Two-color systems only use
//! green and red.
//!
//! Clocks that cannot change any system (a green-everywhere infector, a
//! red-everywhere target, recovery of a green-everywhere customer) are never
//! drawn; dropping no-op events leaves the law of the coupled path unchanged.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::{RngSeed, SimRng};
use crate::stats::{ratio_difference, ratio_estimate, Estimate, DEFAULT_CI_LEVEL};

const MAX_SYSTEMS: usize = 4;
const NONE: usize = usize::MAX;
/// Events kept for a violation report.
const TRACE_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Green,
    Magenta,
    Red,
}

/// Arrival coloring and contagion rates of one coupled system.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Rule {
    magenta: (f64, f64),
    red: (f64, f64),
    alpha: f64,
    beta: f64,
}

impl Rule {
    fn two_color(p: f64, alpha: f64, beta: f64) -> Self {
        Rule {
            magenta: (0.0, 0.0),
            red: (0.0, p),
            alpha,
            beta,
        }
    }

    fn color(&self, u: f64) -> Color {
        if self.magenta.0 <= u && u < self.magenta.1 {
            Color::Magenta
        } else if self.red.0 <= u && u < self.red.1 {
            Color::Red
        } else {
            Color::Green
        }
    }
}

fn infect(infector: Color, target: Color) -> Color {
    match (infector, target) {
        (Color::Green, t) => t,
        (Color::Red, _) => Color::Red,
        (Color::Magenta, Color::Red) => Color::Red,
        (Color::Magenta, _) => Color::Magenta,
    }
}

/// Per-station index sets over customer ids with O(1) insert, remove and
/// uniform sampling.
#[derive(Debug, Clone)]
struct StationSets {
    items: Vec<Vec<usize>>,
    pos: Vec<usize>,
}

impl StationSets {
    fn new(stations: usize) -> Self {
        StationSets {
            items: vec![Vec::new(); stations],
            pos: Vec::new(),
        }
    }

    fn contains(&self, c: usize) -> bool {
        self.pos.get(c).is_some_and(|&p| p != NONE)
    }

    fn insert(&mut self, st: usize, c: usize) {
        if self.pos.len() <= c {
            self.pos.resize(c + 1, NONE);
        }
        self.pos[c] = self.items[st].len();
        self.items[st].push(c);
    }

    fn remove(&mut self, st: usize, c: usize) {
        let p = self.pos[c];
        let v = &mut self.items[st];
        let last = *v.last().expect("member of a non-empty set");
        v.swap_remove(p);
        if last != c {
            self.pos[last] = p;
        }
        self.pos[c] = NONE;
    }

    fn rename(&mut self, st: usize, old: usize, new: usize) {
        if self.contains(old) {
            let p = self.pos[old];
            self.items[st][p] = new;
            if self.pos.len() <= new {
                self.pos.resize(new + 1, NONE);
            }
            self.pos[new] = p;
            self.pos[old] = NONE;
        }
    }

    fn len(&self, st: usize) -> usize {
        self.items[st].len()
    }

    fn total(&self) -> usize {
        self.items.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ev {
    Arrival,
    Departure,
    Recovery,
    Infection,
}

impl Ev {
    fn as_str(self) -> &'static str {
        match self {
            Ev::Arrival => "arrival",
            Ev::Departure => "departure",
            Ev::Recovery => "recovery",
            Ev::Infection => "infection",
        }
    }
}

/// Departures of one busy cycle, per system.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct CycleTally {
    d: u64,
    infected: [u64; MAX_SYSTEMS],
    magenta: [u64; MAX_SYSTEMS],
}

struct Engine {
    rules: Vec<Rule>,
    alpha_max: f64,
    beta_max: f64,
    mu: f64,
    /// `Some(lambda)` for an open reactor.
    lambda: Option<f64>,
    self_routing: bool,
    colors: Vec<[Color; MAX_SYSTEMS]>,
    station: Vec<usize>,
    inf: StationSets,
    tgt: StationSets,
    both: Vec<usize>,
    n_infected: [u64; MAX_SYSTEMS],
    n_magenta: [u64; MAX_SYSTEMS],
    tally: CycleTally,
    rng: SimRng,
    time: f64,
    step: u64,
    trace: VecDeque<String>,
}

impl Engine {
    fn new(rules: Vec<Rule>, mu: f64, lambda: Option<f64>, stations: usize, self_routing: bool, seed: RngSeed) -> Self {
        let alpha_max = rules.iter().map(|r| r.alpha).fold(0.0, f64::max);
        let beta_max = rules.iter().map(|r| r.beta).fold(0.0, f64::max);
        Engine {
            rules,
            alpha_max,
            beta_max,
            mu,
            lambda,
            self_routing,
            colors: Vec::new(),
            station: Vec::new(),
            inf: StationSets::new(stations),
            tgt: StationSets::new(stations),
            both: vec![0; stations],
            n_infected: [0; MAX_SYSTEMS],
            n_magenta: [0; MAX_SYSTEMS],
            tally: CycleTally::default(),
            rng: seed.rng(),
            time: 0.0,
            step: 0,
            trace: VecDeque::with_capacity(TRACE_LEN),
        }
    }

    fn systems(&self) -> usize {
        self.rules.len()
    }

    fn stations(&self) -> usize {
        self.both.len()
    }

    fn customers(&self) -> usize {
        self.colors.len()
    }

    fn counts(&mut self, c: usize, sign: i64) {
        for s in 0..self.systems() {
            let col = self.colors[c][s];
            if col != Color::Green {
                self.n_infected[s] = self.n_infected[s].wrapping_add_signed(sign);
            }
            if col == Color::Magenta {
                self.n_magenta[s] = self.n_magenta[s].wrapping_add_signed(sign);
            }
        }
    }

    fn unlink(&mut self, c: usize) {
        let st = self.station[c];
        let (i, t) = (self.inf.contains(c), self.tgt.contains(c));
        if i {
            self.inf.remove(st, c);
        }
        if t {
            self.tgt.remove(st, c);
        }
        if i && t {
            self.both[st] -= 1;
        }
        self.counts(c, -1);
    }

    fn link(&mut self, c: usize) {
        let st = self.station[c];
        let cols = &self.colors[c][..self.systems()];
        let i = cols.iter().any(|&x| x != Color::Green);
        let t = cols.iter().any(|&x| x != Color::Red);
        if i {
            self.inf.insert(st, c);
        }
        if t {
            self.tgt.insert(st, c);
        }
        if i && t {
            self.both[st] += 1;
        }
        self.counts(c, 1);
    }

    fn add(&mut self, colors: [Color; MAX_SYSTEMS], station: usize) -> usize {
        let c = self.colors.len();
        self.colors.push(colors);
        self.station.push(station);
        self.link(c);
        c
    }

    fn remove(&mut self, c: usize) {
        self.unlink(c);
        let last = self.colors.len() - 1;
        if c != last {
            let st = self.station[last];
            self.inf.rename(st, last, c);
            self.tgt.rename(st, last, c);
        }
        self.colors.swap_remove(c);
        self.station.swap_remove(c);
    }

    fn recolor(&mut self, c: usize, f: impl Fn(usize, Color) -> Color) {
        self.unlink(c);
        for s in 0..self.systems() {
            self.colors[c][s] = f(s, self.colors[c][s]);
        }
        self.link(c);
    }

    fn pairs(&self, st: usize) -> f64 {
        (self.inf.len(st) * self.tgt.len(st) - self.both[st]) as f64
    }

    /// Applies the next event; returns the customers whose colors may have
    /// changed (a departed customer is not returned).
    fn step(&mut self) -> Result<(Ev, Vec<usize>)> {
        let r_arr = self.lambda.unwrap_or(0.0);
        let r_dep = self.mu * self.customers() as f64;
        let r_rec = self.beta_max * self.inf.total() as f64;
        let pair_w: Vec<f64> = (0..self.stations()).map(|k| self.pairs(k)).collect();
        let r_inf = self.alpha_max * pair_w.iter().sum::<f64>();
        let total = r_arr + r_dep + r_rec + r_inf;
        if !(total > 0.0) {
            return Err(Error::Numerical("coupled systems have no possible event".into()));
        }
        let e: f64 = self.rng.sample(Exp1);
        self.time += e / total;
        self.step += 1;
        let u = self.rng.random::<f64>() * total;
        let (ev, touched) = if u < r_arr {
            let mark: f64 = self.rng.random();
            let mut cols = [Color::Green; MAX_SYSTEMS];
            for (s, r) in self.rules.iter().enumerate() {
                cols[s] = r.color(mark);
            }
            (Ev::Arrival, vec![self.add(cols, 0)])
        } else if u < r_arr + r_dep {
            let c = self.rng.random_range(0..self.customers());
            if self.lambda.is_some() {
                self.tally.d += 1;
                for s in 0..self.systems() {
                    match self.colors[c][s] {
                        Color::Green => {}
                        Color::Magenta => {
                            self.tally.infected[s] += 1;
                            self.tally.magenta[s] += 1;
                        }
                        Color::Red => self.tally.infected[s] += 1,
                    }
                }
                self.remove(c);
                (Ev::Departure, vec![])
            } else {
                let from = self.station[c];
                let n = self.stations();
                let to = if self.self_routing || n < 2 {
                    self.rng.random_range(0..n)
                } else {
                    let j = self.rng.random_range(0..n - 1);
                    if j >= from {
                        j + 1
                    } else {
                        j
                    }
                };
                self.unlink(c);
                self.station[c] = to;
                self.link(c);
                (Ev::Departure, vec![c])
            }
        } else if u < r_arr + r_dep + r_rec {
            let mut k = self.rng.random_range(0..self.inf.total());
            let mut st = 0;
            while k >= self.inf.len(st) {
                k -= self.inf.len(st);
                st += 1;
            }
            let c = self.inf.items[st][k];
            let v: f64 = self.rng.random::<f64>() * self.beta_max;
            let rules = self.rules.clone();
            self.recolor(c, |s, col| if v < rules[s].beta { Color::Green } else { col });
            (Ev::Recovery, vec![c])
        } else {
            let mut w = self.rng.random::<f64>() * (r_inf / self.alpha_max);
            let mut st = 0;
            while st + 1 < pair_w.len() && (w >= pair_w[st] || pair_w[st] == 0.0) {
                w -= pair_w[st];
                st += 1;
            }
            let (i, j) = loop {
                let i = self.inf.items[st][self.rng.random_range(0..self.inf.len(st))];
                let j = self.tgt.items[st][self.rng.random_range(0..self.tgt.len(st))];
                if i != j {
                    break (i, j);
                }
            };
            let a: f64 = self.rng.random::<f64>() * self.alpha_max;
            let rules = self.rules.clone();
            let src = self.colors[i];
            self.recolor(j, |s, col| if a < rules[s].alpha { infect(src[s], col) } else { col });
            (Ev::Infection, vec![j])
        };
        self.log(ev);
        Ok((ev, touched))
    }

    fn log(&mut self, ev: Ev) {
        if self.trace.len() == TRACE_LEN {
            self.trace.pop_front();
        }
        let mut row = format!("{},{:.9},{},{}", self.step, self.time, ev.as_str(), self.customers());
        for s in 0..self.systems() {
            let _ = write!(row, ",{},{}", self.n_infected[s], self.n_magenta[s]);
        }
        self.trace.push_back(row);
    }

    fn violation(&self, message: String) -> Error {
        let mut csv = String::from("step,time,event,n");
        for s in 0..self.systems() {
            let _ = write!(csv, ",infected_{s},magenta_{s}");
        }
        csv.push('\n');
        for r in &self.trace {
            csv.push_str(r);
            csv.push('\n');
        }
        Error::CouplingViolation {
            message,
            trace_csv: csv,
        }
    }

    /// Infected in `lo` implies infected in `hi`, per customer and in count.
    fn check_nested(&self, lo: usize, hi: usize, touched: &[usize]) -> Result<()> {
        for &c in touched {
            if self.colors[c][lo] != Color::Green && self.colors[c][hi] == Color::Green {
                return Err(self.violation(format!(
                    "customer infected in system {lo} but not in system {hi} at step {}",
                    self.step
                )));
            }
        }
        if self.n_infected[lo] > self.n_infected[hi] {
            return Err(self.violation(format!(
                "infected count {} in system {lo} exceeds {} in system {hi} at step {}",
                self.n_infected[lo], self.n_infected[hi], self.step
            )));
        }
        Ok(())
    }
}

/// Outcome of a two-system monotonicity coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub events: u64,
    pub cycles: u64,
    /// Events after which the dominated system had strictly fewer infected.
    pub strict_events: u64,
    /// Busy cycles with strictly fewer infected departures in the dominated
    /// system.
    pub strict_cycles: u64,
    /// Whether both systems had identical infected sets after every event.
    pub identical: bool,
    /// `(D, D_I low, D_I high)` per busy cycle.
    pub cycle_pairs: Vec<(u64, u64, u64)>,
}

impl CouplingSummary {
    pub fn strict_event_fraction(&self) -> f64 {
        self.strict_events as f64 / self.events.max(1) as f64
    }
}

/// Closed-network setting for the rate couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedSpec {
    pub n: usize,
    pub k: u64,
    pub initial_infected: u64,
    pub self_routing: bool,
}

impl ClosedSpec {
    /// `n` stations, `2n` customers, half of them infected.
    pub fn with_stations(n: usize) -> Self {
        ClosedSpec {
            n,
            k: 2 * n as u64,
            initial_infected: n as u64,
            self_routing: false,
        }
    }
}

fn check_prob(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("p out of range [0,1]: {p}")))
    }
}

fn check_rate(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

/// Drives a two-system coupling where system 0 is dominated by system 1.
fn run_pair(mut e: Engine, cycles_wanted: Option<u64>, events_wanted: Option<u64>) -> Result<CouplingSummary> {
    let mut out = CouplingSummary {
        events: 0,
        cycles: 0,
        strict_events: 0,
        strict_cycles: 0,
        identical: true,
        cycle_pairs: Vec::new(),
    };
    loop {
        if cycles_wanted.is_some_and(|c| out.cycles >= c) || events_wanted.is_some_and(|n| out.events >= n) {
            return Ok(out);
        }
        let (_, touched) = e.step()?;
        out.events += 1;
        e.check_nested(0, 1, &touched)?;
        if e.n_infected[0] < e.n_infected[1] {
            out.strict_events += 1;
        }
        if touched.iter().any(|&c| e.colors[c][0] != e.colors[c][1]) || e.n_infected[0] != e.n_infected[1] {
            out.identical = false;
        }
        if e.lambda.is_some() && e.customers() == 0 {
            let t = std::mem::take(&mut e.tally);
            if t.infected[0] > t.infected[1] {
                return Err(e.violation(format!(
                    "cycle {} has {} infected departures in the dominated system and {} in the dominating one",
                    out.cycles, t.infected[0], t.infected[1]
                )));
            }
            if t.infected[0] < t.infected[1] {
                out.strict_cycles += 1;
            }
            out.cycle_pairs.push((t.d, t.infected[0], t.infected[1]));
            out.cycles += 1;
        }
    }
}

fn seed_closed(e: &mut Engine, spec: &ClosedSpec) -> Result<()> {
    if spec.n < 2 || spec.k < 1 || spec.initial_infected > spec.k {
        return Err(Error::invalid("closed", "need n >= 2, k >= 1 and initial_infected <= k"));
    }
    for c in 0..spec.k {
        let st = e.rng.random_range(0..spec.n);
        let col = if c < spec.initial_infected { Color::Red } else { Color::Green };
        e.add([col; MAX_SYSTEMS], st);
    }
    Ok(())
}

/// Open SIS reactors with input fractions `p <= p_hat` over `n_cycles`
/// busy cycles; infected sets must stay nested.
pub fn coupled_p_monotonicity(p: f64, p_hat: f64, params: &ModelParams, n_cycles: u64, seed: RngSeed) -> Result<CouplingSummary> {
    check_prob("p", p)?;
    check_prob("p_hat", p_hat)?;
    if p > p_hat {
        return Err(Error::invalid("p", "need p <= p_hat"));
    }
    let (a, b) = (params.alpha(), params.beta());
    let rules = vec![Rule::two_color(p, a, b), Rule::two_color(p_hat, a, b)];
    let e = Engine::new(rules, params.mu(), Some(params.lambda()), 1, false, seed);
    run_pair(e, Some(n_cycles), None)
}

fn rate_coupling(rules: Vec<Rule>, params: &ModelParams, events: u64, seed: RngSeed, closed: Option<ClosedSpec>) -> Result<CouplingSummary> {
    match closed {
        None => {
            let e = Engine::new(rules, params.mu(), Some(params.lambda()), 1, false, seed);
            run_pair(e, None, Some(events))
        }
        Some(spec) => {
            let mut e = Engine::new(rules, params.mu(), None, spec.n, spec.self_routing, seed);
            seed_closed(&mut e, &spec)?;
            run_pair(e, None, Some(events))
        }
    }
}

/// Infection rates `alpha1 <= alpha2` (system 0 has `alpha1`); the
/// `alpha2` pair clocks are thinned by `alpha1 / alpha2` for system 0.
pub fn coupled_alpha_monotonicity(
    alpha1: f64,
    alpha2: f64,
    params: &ModelParams,
    events: u64,
    seed: RngSeed,
    closed: Option<ClosedSpec>,
) -> Result<CouplingSummary> {
    check_rate("alpha1", alpha1)?;
    check_rate("alpha2", alpha2)?;
    if alpha1 > alpha2 {
        return Err(Error::invalid("alpha1", "need alpha1 <= alpha2"));
    }
    let (p, b) = (params.p(), params.beta());
    let rules = vec![Rule::two_color(p, alpha1, b), Rule::two_color(p, alpha2, b)];
    rate_coupling(rules, params, events, seed, closed)
}

/// Recovery rates `beta1 >= beta2` (system 0 has `beta1`, so fewer
/// infected); the `beta1` clocks are thinned by `beta2 / beta1` for system 1.
pub fn coupled_beta_monotonicity(
    beta1: f64,
    beta2: f64,
    params: &ModelParams,
    events: u64,
    seed: RngSeed,
    closed: Option<ClosedSpec>,
) -> Result<CouplingSummary> {
    check_rate("beta1", beta1)?;
    check_rate("beta2", beta2)?;
    if beta1 < beta2 {
        return Err(Error::invalid("beta1", "need beta1 >= beta2"));
    }
    let (p, a) = (params.p(), params.alpha());
    let rules = vec![Rule::two_color(p, a, beta1), Rule::two_color(p, a, beta2)];
    rate_coupling(rules, params, events, seed, closed)
}

/// Departure tallies of one busy cycle in the three-color comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeColorCycle {
    pub d: u64,
    /// Red departures at `p` and at `p_hat`.
    pub d_red: (u64, u64),
    /// Magenta departures at `p` and at `p_hat`.
    pub d_magenta: (u64, u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeColorSummary {
    pub cycles: Vec<ThreeColorCycle>,
    pub events: u64,
    /// `g(p + r) - g(p)` as magenta departures over departures.
    pub increment_low: Estimate,
    /// `g(p_hat + r) - g(p_hat)`.
    pub increment_high: Estimate,
    /// `increment_low - increment_high` with its joint standard error.
    pub concavity_gap: Estimate,
    /// Cycles with strictly more magenta departures at `p`.
    pub strict_cycles: u64,
}

/// Two three-color reactors `(r, p)` and `(r, p_hat)` plus the two
/// two-color merges of the first, all on shared clocks.
///
/// Checked after every event: merging magenta into green reproduces the
/// `p` two-color system, merging magenta into red reproduces the `p + r`
/// one, and the magenta set at `p_hat` is contained in the one at `p`.
pub fn three_color_run(p: f64, p_hat: f64, r: f64, params: &ModelParams, n_cycles: u64, seed: RngSeed) -> Result<ThreeColorSummary> {
    check_prob("p", p)?;
    check_prob("p_hat", p_hat)?;
    if !(r > 0.0 && p <= p_hat && p_hat + r <= 1.0) {
        return Err(Error::invalid("r", "need r > 0, p <= p_hat and p_hat + r <= 1"));
    }
    if n_cycles == 0 {
        return Err(Error::invalid("n_cycles", "must be >= 1"));
    }
    let (a, b) = (params.alpha(), params.beta());
    let three = |p: f64| Rule {
        magenta: (0.0, r),
        red: (r, r + p),
        alpha: a,
        beta: b,
    };
    let rules = vec![
        three(p),
        three(p_hat),
        Rule {
            magenta: (0.0, 0.0),
            red: (r, r + p),
            alpha: a,
            beta: b,
        },
        Rule::two_color(r + p, a, b),
    ];
    let mut e = Engine::new(rules, params.mu(), Some(params.lambda()), 1, false, seed);
    let mut cycles = Vec::with_capacity(n_cycles as usize);
    let mut events = 0u64;
    while (cycles.len() as u64) < n_cycles {
        let (_, touched) = e.step()?;
        events += 1;
        for &c in &touched {
            let col = e.colors[c];
            let as_green = if col[0] == Color::Red { Color::Red } else { Color::Green };
            let as_red = if col[0] == Color::Green { Color::Green } else { Color::Red };
            if as_green != col[2] || as_red != col[3] {
                return Err(e.violation(format!("merged colors differ from the two-color systems at step {}", e.step)));
            }
            if col[1] == Color::Magenta && col[0] != Color::Magenta {
                return Err(e.violation(format!("magenta at p_hat but not at p at step {}", e.step)));
            }
        }
        if e.n_magenta[1] > e.n_magenta[0] {
            return Err(e.violation(format!("more magenta at p_hat than at p at step {}", e.step)));
        }
        if e.customers() == 0 {
            let t = std::mem::take(&mut e.tally);
            if t.magenta[1] > t.magenta[0] {
                return Err(e.violation(format!("cycle {} has more magenta departures at p_hat", cycles.len())));
            }
            cycles.push(ThreeColorCycle {
                d: t.d,
                d_red: (t.infected[0] - t.magenta[0], t.infected[1] - t.magenta[1]),
                d_magenta: (t.magenta[0], t.magenta[1]),
            });
        }
    }
    let d: Vec<f64> = cycles.iter().map(|c| c.d as f64).collect();
    let m0: Vec<f64> = cycles.iter().map(|c| c.d_magenta.0 as f64).collect();
    let m1: Vec<f64> = cycles.iter().map(|c| c.d_magenta.1 as f64).collect();
    let strict_cycles = cycles.iter().filter(|c| c.d_magenta.0 > c.d_magenta.1).count() as u64;
    Ok(ThreeColorSummary {
        increment_low: ratio_estimate(&m0, &d, DEFAULT_CI_LEVEL)?,
        increment_high: ratio_estimate(&m1, &d, DEFAULT_CI_LEVEL)?,
        concavity_gap: ratio_difference(&m0, &d, &m1, &d, DEFAULT_CI_LEVEL)?,
        strict_cycles,
        cycles,
        events,
    })
}
