//! The `migrasim` command line.
//!
//! Every subcommand accepts `--config FILE` (JSON with the same keys as the
//! flags; flags win), `--out PATH` (stdout otherwise), `--manifest PATH` and
//! `--seed N`. A run with an output path also writes `manifest.json` next to
//! it; passing that manifest back as `--config` repeats the run.

mod grid;
mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analytic::{
    air_amf_means, air_threshold, air_tl_stationary, branching_quantities, docs_mean_x, docs_tl_fixed_point, docs_tl_threshold,
    p_star_upper_bound, sis_kappa, sis_threshold_bounds,
};
use crate::conservation::{audit_docs, audit_routing_docs, audit_sis, audit_tl, correlation_probe, correlation_probe_tl, AuditConfig};
use crate::couplings::{coupled_alpha_monotonicity, coupled_beta_monotonicity, coupled_p_monotonicity, three_color_run, ClosedSpec};
use crate::error::{Error, Result};
use crate::fixed_point::{
    cross_validate_g_prime0, estimate_g_prime0, estimate_g_with, find_eta_c, find_p_star_with, GMap, GPrimeMethod, PStarConfig,
    ThresholdConfig,
};
use crate::network::{
    customers_for, extinction_time, simulate_closed, simulate_meanfield, simulate_routing_docs_meanfield, Initial, MeanFieldConfig,
    MeanFieldInit, NetworkConfig, RoutingMode, Variant,
};
use crate::observe::{BatchPlan, EventRow, Horizon};
use crate::params::{derive_params, ModelParams};
use crate::reactor::{run_busy_cycles, simulate_reactor_streaming, ReactorKind, ReactorOptions, RunConfig};
use crate::rng::RngSeed;
use crate::stats::DEFAULT_CI_LEVEL;

pub use grid::parse_grid;
use io::{csv_text, emit, merge_config, num, object, to_json, write_manifest};

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "MIGRASIM_THREADS";

fn count(s: &str) -> std::result::Result<u64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s}"))?;
    if !(v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63)) {
        return Err(format!("not a non-negative integer: {s}"));
    }
    Ok(v as u64)
}

#[derive(Parser, Debug)]
#[command(name = "migrasim", version, about = "Contagion among customers migrating through infinite-server networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Long stationary run of one reactor.
    Simulate(SimulateArgs),
    /// Per-cycle tallies of consecutive busy cycles.
    Cycles(CyclesArgs),
    /// Output infected fraction g(p), or its slope at 0.
    Gmap(GmapArgs),
    /// Largest fixed point of g.
    Pstar(PstarArgs),
    /// Critical density of one variant.
    Threshold(ThresholdArgs),
    /// All closed-form quantities at one parameter point.
    Analytic(AnalyticArgs),
    /// Closed network trajectory or extinction times.
    Closed(ClosedArgs),
    /// Mean-field ensembles.
    Meanfield(MeanfieldArgs),
    /// Conservation identities against simulation.
    Audit(AuditArgs),
    /// Pathwise coupling checks.
    Couple(CoupleArgs),
    /// Thresholds or g'(0) over a parameter grid.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct Common {
    /// JSON config with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults to manifest.json beside --out.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Common {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct ParamArgs {
    /// Arrival rate; defaults to eta * mu.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Density lambda / mu (default 1).
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Infected fraction of arrivals (default 0.5).
    #[arg(long)]
    pub p: Option<f64>,
    /// DOCS infected departure rate (default mu + beta).
    #[arg(long)]
    pub nu: Option<f64>,
}

impl ParamArgs {
    pub fn resolve(&self) -> Result<ModelParams> {
        let mu = self.mu.unwrap_or(1.0);
        let lambda = match (self.lambda, self.eta) {
            (Some(l), Some(e)) if (l - e * mu).abs() > 1e-12 * l.abs().max(1.0) => {
                return Err(Error::invalid("lambda", format!("lambda = {l} conflicts with eta * mu = {}", e * mu)))
            }
            (Some(l), _) => l,
            (None, e) => e.unwrap_or(1.0) * mu,
        };
        derive_params(lambda, mu, self.alpha.unwrap_or(1.0), self.beta.unwrap_or(1.0), self.p.unwrap_or(0.5), self.nu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    #[default]
    Sis,
    Docs,
    Air,
}

impl VariantArg {
    fn network(self) -> Variant {
        match self {
            VariantArg::Sis => Variant::Sis,
            VariantArg::Docs => Variant::Docs,
            VariantArg::Air => Variant::Air,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MapArg {
    #[default]
    Sis,
    AirAmf,
}

impl From<MapArg> for GMap {
    fn from(m: MapArg) -> Self {
        match m {
            MapArg::Sis => GMap::Sis,
            MapArg::AirAmf => GMap::AirAmf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    #[default]
    Excursion,
    Fd,
    /// Both estimators, failing when they disagree.
    Both,
}

impl MethodArg {
    fn single(self) -> GPrimeMethod {
        match self {
            MethodArg::Fd => GPrimeMethod::FiniteDifference,
            _ => GPrimeMethod::Excursion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    #[default]
    Open,
    ClosedTl,
}

impl From<ModeArg> for RoutingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Open => RoutingMode::Open,
            ModeArg::ClosedTl => RoutingMode::ClosedTl,
        }
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Event budget (default 1e6) unless --time is given.
    #[arg(long, value_parser = count)]
    pub events: Option<u64>,
    #[arg(long)]
    pub time: Option<f64>,
    /// AIR infected level; defaults to the averaged-infection solution.
    #[arg(long)]
    pub y_param: Option<f64>,
    /// Event log CSV.
    #[arg(long)]
    pub event_log: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct CyclesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long, value_parser = count)]
    pub cycles: Option<u64>,
    #[arg(long)]
    pub y_param: Option<f64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct GmapArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// Input fractions to evaluate (grid syntax); defaults to --p.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_parser = count)]
    pub cycles: Option<u64>,
    #[arg(long, value_enum)]
    pub map: Option<MapArg>,
    /// Estimate g'(0) instead.
    #[arg(long)]
    pub derivative: bool,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Excursions (or coupled cycles) for g'(0); default 1e6.
    #[arg(long, value_parser = count)]
    pub budget: Option<u64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct PstarArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_parser = count)]
    pub cycles: Option<u64>,
    #[arg(long, value_enum)]
    pub map: Option<MapArg>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct ThresholdArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Largest g'(0) budget per density (SIS).
    #[arg(long, value_parser = count)]
    pub budget: Option<u64>,
    /// Target bracket width (SIS).
    #[arg(long)]
    pub precision: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct AnalyticArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct ClosedArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Stations (default 100).
    #[arg(long)]
    pub n: Option<usize>,
    /// Customers; defaults to round(eta n).
    #[arg(long, value_parser = count)]
    pub k: Option<u64>,
    /// Initially infected customers placed at random; all infected otherwise.
    #[arg(long, value_parser = count)]
    pub infected: Option<u64>,
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long)]
    pub self_routing: Option<bool>,
    #[arg(long)]
    pub sample_interval: Option<f64>,
    /// Extinction times instead of a trajectory.
    #[arg(long)]
    pub extinction: bool,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub cap: Option<f64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct MeanfieldArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// `sis` runs the slotted scheme, `docs` the routing ensemble.
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long)]
    pub p0: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AuditVariant {
    #[default]
    Sis,
    Docs,
    Routing,
    Tl,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct AuditArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum)]
    pub variant: Option<AuditVariant>,
    /// Reactor event budget (default 1e6).
    #[arg(long, value_parser = count)]
    pub events: Option<u64>,
    /// Simulated time; the default for ensembles is 200.
    #[arg(long)]
    pub time: Option<f64>,
    /// Ensemble stations (default 1000).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Residual allowance in standard errors (default 3).
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub bonferroni: bool,
    /// Add the fixed-point check from an independent p* search (tl).
    #[arg(long)]
    pub with_p_star: bool,
    /// Report covariance and overdispersion measurements instead (sis, tl).
    #[arg(long)]
    pub probe: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CoupleKind {
    #[default]
    P,
    Alpha,
    Beta,
    ThreeColor,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct CoupleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum)]
    pub kind: Option<CoupleKind>,
    /// Larger input fraction (default min(p + 0.2, 1)).
    #[arg(long)]
    pub p_hat: Option<f64>,
    /// Second infection rate (default 2 alpha).
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// Second recovery rate (default beta / 2).
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Magenta width of the three-color layout (default 0.1).
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, value_parser = count)]
    pub cycles: Option<u64>,
    #[arg(long, value_parser = count)]
    pub events: Option<u64>,
    /// Run the rate couplings on a closed network of this many stations.
    #[arg(long)]
    pub closed_n: Option<usize>,
    /// Where to dump the event trace of a violation.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Mu,
    Alpha,
    Beta,
    Eta,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::Mu => "mu",
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::Eta => "eta",
        }
    }

    fn apply(self, base: &ParamArgs, v: f64) -> ParamArgs {
        let mut a = base.clone();
        match self {
            SweepParam::Mu => a.mu = Some(v),
            SweepParam::Alpha => a.alpha = Some(v),
            SweepParam::Beta => a.beta = Some(v),
            SweepParam::Eta => {
                a.eta = Some(v);
                a.lambda = None;
            }
        }
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    #[default]
    EtaC,
    GPrime0,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// Variant whose threshold is searched by simulation (sis); the DOCS and
    /// AIR closed forms are always reported.
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    pub sweep: Option<SweepParam>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_enum)]
    pub quantity: Option<Quantity>,
    /// Per-point g'(0) budget (default 1e6).
    #[arg(long, value_parser = count)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub precision: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    configure_threads();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // Fails only when the pool already exists, e.g. on repeated calls.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(merged(&a, &a.common)?),
        Command::Cycles(a) => cycles(merged(&a, &a.common)?),
        Command::Gmap(a) => gmap(merged(&a, &a.common)?),
        Command::Pstar(a) => pstar(merged(&a, &a.common)?),
        Command::Threshold(a) => threshold(merged(&a, &a.common)?),
        Command::Analytic(a) => analytic(merged(&a, &a.common)?),
        Command::Closed(a) => closed(merged(&a, &a.common)?),
        Command::Meanfield(a) => meanfield(merged(&a, &a.common)?),
        Command::Audit(a) => audit(merged(&a, &a.common)?),
        Command::Couple(a) => couple(merged(&a, &a.common)?),
        Command::Sweep(a) => sweep(merged(&a, &a.common)?),
    }
}

fn merged<T: Serialize + serde::de::DeserializeOwned>(a: &T, common: &Common) -> Result<T> {
    merge_config(a, common.config.as_deref())
}

/// Writes the output and the manifest.
fn finish<A: Serialize>(command: &str, common: &Common, args: &A, params: Option<&ModelParams>, text: &str) -> Result<()> {
    emit(common.out.as_deref(), text)?;
    write_manifest(
        common.manifest.as_deref(),
        common.out.as_deref(),
        command,
        common.seed(),
        args,
        json!({ "params": params }),
    )?;
    Ok(())
}

fn seed(common: &Common) -> RngSeed {
    RngSeed::new(common.seed(), 0)
}

fn reactor_kind(v: VariantArg, params: &ModelParams, y_param: Option<f64>) -> Result<ReactorKind> {
    Ok(match v {
        VariantArg::Sis => ReactorKind::Sis,
        VariantArg::Docs => ReactorKind::Docs,
        VariantArg::Air => ReactorKind::Air {
            y_param: match y_param {
                Some(y) => y,
                None => air_amf_means(params)?.1,
            },
        },
    })
}

fn usize_of(v: u64, field: &'static str) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::invalid(field, "too large"))
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let params = a.params.resolve()?;
    let kind = reactor_kind(a.variant.unwrap_or_default(), &params, a.y_param)?;
    let horizon = match a.time {
        Some(t) => Horizon::Time(t),
        None => Horizon::Events(a.events.unwrap_or(1_000_000)),
    };
    let mut log = match &a.event_log {
        Some(p) => Some(csv::Writer::from_path(p)?),
        None => None,
    };
    let mut log_err = None;
    let run = simulate_reactor_streaming(kind, &params, horizon, seed(&a.common), &RunConfig::default(), |e| {
        if let (Some(w), None) = (log.as_mut(), log_err.as_ref()) {
            if let Err(err) = w.serialize(EventRow::from(e)) {
                log_err = Some(err);
            }
        }
    })?;
    if let Some(e) = log_err {
        return Err(e.into());
    }
    if let Some(mut w) = log {
        w.flush()?;
    }
    let v = object(vec![
        ("variant", json!(kind.name())),
        ("params", serde_json::to_value(params)?),
        ("n_events", json!(run.n_events)),
        ("end_time", json!(run.end_time)),
        ("mean_x", serde_json::to_value(run.mean_x())?),
        ("mean_y", serde_json::to_value(run.mean_y())?),
        ("mean_xy", serde_json::to_value(run.mean_xy())?),
        ("mean_x2", serde_json::to_value(run.mean_x2())?),
        ("mean_y2", serde_json::to_value(run.mean_y2())?),
        ("final_state", serde_json::to_value(run.final_state)?),
    ]);
    finish("simulate", &a.common, &a, Some(&params), &to_json(&v)?)
}

fn cycles(a: CyclesArgs) -> Result<()> {
    let params = a.params.resolve()?;
    let kind = reactor_kind(a.variant.unwrap_or_default(), &params, a.y_param)?;
    let n = usize_of(a.cycles.unwrap_or(1_000), "cycles")?;
    let cs = run_busy_cycles(kind, &params, n, seed(&a.common), &ReactorOptions::default())?;
    let text = csv_text(
        &["cycle", "duration", "departures", "infected_departures", "idle_before", "infected_area"],
        cs.iter().enumerate().map(|(i, c)| {
            vec![
                i.to_string(),
                num(Some(c.duration)),
                c.departures.to_string(),
                c.infected_departures.to_string(),
                num(Some(c.idle_before)),
                num(Some(c.infected_area)),
            ]
        }),
    )?;
    finish("cycles", &a.common, &a, Some(&params), &text)
}

fn gmap(a: GmapArgs) -> Result<()> {
    let params = a.params.resolve()?;
    let s = seed(&a.common);
    if a.derivative {
        let budget = usize_of(a.budget.unwrap_or(1_000_000), "budget")?;
        let v = match a.method.unwrap_or_default() {
            MethodArg::Both => serde_json::to_value(cross_validate_g_prime0(&params, budget, s)?)?,
            m => object(vec![
                ("method", serde_json::to_value(m.single())?),
                ("g_prime0", serde_json::to_value(estimate_g_prime0(&params, m.single(), budget, s)?)?),
            ]),
        };
        return finish("gmap", &a.common, &a, Some(&params), &to_json(&v)?);
    }
    let ps = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => vec![params.p()],
    };
    let n = usize_of(a.cycles.unwrap_or(50_000), "cycles")?;
    let map: GMap = a.map.unwrap_or_default().into();
    let rows = ps
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let g = estimate_g_with(map, p, &params, n, s.substream(i as u64), DEFAULT_CI_LEVEL)?;
            Ok(vec![
                num(Some(p)),
                num(Some(g.p_out.value)),
                num(Some(g.p_out.std_error)),
                num(Some(g.time_average.value)),
                num(Some(g.time_average.std_error)),
                num(Some(g.discrepancy.value)),
                num(Some(g.discrepancy.std_error)),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let text = csv_text(&["p", "g", "g_se", "time_average", "time_average_se", "discrepancy", "discrepancy_se"], rows)?;
    finish("gmap", &a.common, &a, Some(&params), &text)
}

fn pstar(a: PstarArgs) -> Result<()> {
    let params = a.params.resolve()?;
    let mut cfg = PStarConfig::default();
    if let Some(t) = a.tol {
        cfg.tol = t;
    }
    if let Some(c) = a.cycles {
        cfg.cycles_per_step = usize_of(c, "cycles")?;
    }
    cfg.map = a.map.unwrap_or_default().into();
    let r = find_p_star_with(&params, &cfg, seed(&a.common))?;
    let v = object(vec![
        ("p_star", serde_json::to_value(r.p_star)?),
        ("iterations", json!(r.iterations)),
        ("subcritical", json!(r.subcritical)),
        ("upper_bound", json!(p_star_upper_bound(&params))),
        ("trace", serde_json::to_value(&r.trace)?),
    ]);
    finish("pstar", &a.common, &a, Some(&params), &to_json(&v)?)
}

fn threshold_config(budget: Option<u64>, precision: Option<f64>, method: Option<MethodArg>) -> Result<ThresholdConfig> {
    let mut cfg = ThresholdConfig::default();
    if let Some(b) = budget {
        cfg.budget_per_point = usize_of(b, "budget")?;
    }
    if let Some(p) = precision {
        cfg.precision = p;
    }
    cfg.method = method.unwrap_or_default().single();
    Ok(cfg)
}

fn threshold(a: ThresholdArgs) -> Result<()> {
    let (mu, alpha, beta) = (a.params.mu.unwrap_or(1.0), a.params.alpha.unwrap_or(1.0), a.params.beta.unwrap_or(1.0));
    let (line, v) = match a.variant.unwrap_or_default() {
        VariantArg::Docs => {
            let e = docs_tl_threshold(mu, alpha, beta)?;
            (format!("{e}"), json!({ "variant": "docs", "eta_c": e }))
        }
        VariantArg::Air => {
            let e = air_threshold(alpha, beta)?;
            (format!("{e}"), json!({ "variant": "air", "eta_c": e }))
        }
        VariantArg::Sis => {
            let cfg = threshold_config(a.budget, a.precision, a.method)?;
            let r = find_eta_c(mu, alpha, beta, &cfg, seed(&a.common))?;
            (format!("{} {}", r.eta_c.value, r.eta_c.std_error), serde_json::to_value(&r)?)
        }
    };
    match &a.common.out {
        Some(_) => finish("threshold", &a.common, &a, None, &to_json(&v)?),
        None => finish("threshold", &a.common, &a, None, &(line + "\n")),
    }
}

fn analytic(a: AnalyticArgs) -> Result<()> {
    let params = a.params.resolve()?;
    let (mu, al, be) = (params.mu(), params.alpha(), params.beta());
    let bounds = sis_threshold_bounds(mu, al, be)?;
    let ok = |r: Result<Value>| r.unwrap_or(Value::Null);
    let v = object(vec![
        ("params", serde_json::to_value(params)?),
        ("eta_c_air", json!(air_threshold(al, be)?)),
        ("eta_c_docs", json!(docs_tl_threshold(mu, al, be)?)),
        ("sis_lower_bound", json!(bounds.0)),
        ("sis_upper_bound", json!(bounds.1)),
        ("sis_kappa", json!(sis_kappa(mu, al, be))),
        ("p_star_upper_bound", json!(p_star_upper_bound(&params))),
        ("branching", serde_json::to_value(branching_quantities(&params))?),
        ("docs_mean_x", ok(docs_mean_x(&params).map(|x| json!(x)))),
        ("docs_tl_fixed_point", ok(docs_tl_fixed_point(&params).and_then(|f| Ok(serde_json::to_value(f)?)))),
        ("air_tl_stationary", serde_json::to_value(air_tl_stationary(&params))?),
        ("air_amf_means", ok(air_amf_means(&params).map(|(x, y)| json!({ "mean_x": x, "mean_y": y })))),
    ]);
    finish("analytic", &a.common, &a, Some(&params), &to_json(&v)?)
}

fn closed(a: ClosedArgs) -> Result<()> {
    let params = a.params.resolve()?;
    let variant = a.variant.unwrap_or_default().network();
    let n = a.n.unwrap_or(100);
    let k = a.k.unwrap_or_else(|| customers_for(params.eta(), n));
    let cfg = NetworkConfig {
        self_routing: a.self_routing,
        initial: match a.infected {
            Some(i) => Initial::Random { infected: i },
            None => Initial::AllInfected,
        },
        sample_interval: a.sample_interval,
        ..NetworkConfig::default()
    };
    let text = if a.extinction {
        let r = extinction_time(variant, n, k, &params, a.reps.unwrap_or(5), a.cap.unwrap_or(1e6), seed(&a.common), &cfg)?;
        csv_text(
            &["rep", "absorption_time", "censored"],
            r.reps
                .iter()
                .map(|x| vec![x.rep.to_string(), num(Some(x.absorption_time)), x.censored.to_string()]),
        )?
    } else {
        let run = simulate_closed(variant, n, k, &params, Horizon::Time(a.time.unwrap_or(100.0)), seed(&a.common), &cfg)?;
        csv_text(
            &["t", "total_infected", "mean_x", "mean_y"],
            run.trajectory
                .iter()
                .map(|r| vec![num(Some(r.t)), r.total_infected.to_string(), num(Some(r.mean_x)), num(Some(r.mean_y))]),
        )?
    };
    finish("closed", &a.common, &a, Some(&params), &text)
}

fn meanfield(a: MeanfieldArgs) -> Result<()> {
    let params = a.params.resolve()?;
    let m = a.m.unwrap_or(1_000);
    let t = a.time.unwrap_or(100.0);
    let text = match a.variant.unwrap_or_default() {
        VariantArg::Sis => {
            let cfg = MeanFieldConfig {
                h: a.h,
                ..MeanFieldConfig::default()
            };
            let r = simulate_meanfield(m, &params, &MeanFieldInit::Poisson { p0: a.p0.unwrap_or(0.5) }, t, seed(&a.common), &cfg)?;
            if let Some(w) = &r.warning {
                eprintln!("warning: {w}");
            }
            csv_text(
                &["t", "mean_x", "mean_y"],
                r.trajectory.iter().map(|row| vec![num(Some(row.t)), num(Some(row.mean_x)), num(Some(row.mean_y))]),
            )?
        }
        VariantArg::Docs => {
            let mode: RoutingMode = a.mode.unwrap_or_default().into();
            let r = simulate_routing_docs_meanfield(m, &params, mode, Horizon::Time(t), seed(&a.common), &BatchPlan::default())?;
            let analytic = docs_tl_fixed_point(&params).ok().map(|f| f.p_star);
            to_json(&json!({
                "mode": mode,
                "mean_x": r.mean_x,
                "mean_y": r.mean_y,
                "mean_xy": r.mean_xy,
                "p_star": r.p_star,
                "p_star_analytic": analytic,
                "n_events": r.run.n_events,
            }))?
        }
        VariantArg::Air => return Err(Error::invalid("variant", "meanfield supports sis and docs")),
    };
    finish("meanfield", &a.common, &a, Some(&params), &text)
}

fn tl_network(params: &ModelParams, m: usize, t: f64, s: RngSeed) -> Result<crate::network::NetworkRun> {
    let k = customers_for(params.eta(), m);
    let cfg = NetworkConfig {
        self_routing: Some(true),
        initial: Initial::Random { infected: k / 2 },
        ..NetworkConfig::default()
    };
    simulate_closed(Variant::Sis, m, k, params, Horizon::Time(t), s, &cfg)
}

fn audit(a: AuditArgs) -> Result<()> {
    let params = a.params.resolve()?;
    let cfg = AuditConfig {
        k: a.k.unwrap_or(3.0),
        bonferroni: a.bonferroni,
        ..AuditConfig::default()
    };
    let s = seed(&a.common);
    let reactor_horizon = match a.time {
        Some(t) => Horizon::Time(t),
        None => Horizon::Events(a.events.unwrap_or(1_000_000)),
    };
    let m = a.m.unwrap_or(1_000);
    let t = a.time.unwrap_or(200.0);
    let variant = a.variant.unwrap_or_default();
    if a.probe {
        let probe = match variant {
            AuditVariant::Sis => correlation_probe(&params, reactor_horizon, s, &cfg)?,
            AuditVariant::Tl => correlation_probe_tl(&tl_network(&params, m, t, s)?, &params, &cfg)?,
            _ => return Err(Error::invalid("variant", "--probe supports sis and tl")),
        };
        for w in &probe.warnings {
            eprintln!("warning: {w}");
        }
        return finish("audit", &a.common, &a, Some(&params), &to_json(&probe)?);
    }
    let report = match variant {
        AuditVariant::Sis => audit_sis(&params, reactor_horizon, s, &cfg)?,
        AuditVariant::Docs => audit_docs(&params, reactor_horizon, s, &cfg)?,
        AuditVariant::Routing => {
            let mode: RoutingMode = a.mode.unwrap_or_default().into();
            let r = simulate_routing_docs_meanfield(m, &params, mode, Horizon::Time(t), s, &cfg.plan)?;
            audit_routing_docs(&r, &params, &cfg)
        }
        AuditVariant::Tl => {
            let run = tl_network(&params, m, t, s)?;
            let p_star = if a.with_p_star {
                Some(find_p_star_with(&params, &PStarConfig::default(), s.substream(1))?.p_star)
            } else {
                None
            };
            audit_tl(&run, &params, p_star, &cfg)?
        }
    };
    if report.low_confidence {
        eprintln!("warning: only {} events; low confidence", report.events);
    }
    let passed = report.checks.iter().filter(|c| c.pass).count();
    eprintln!("{passed}/{} identities within tolerance", report.checks.len());
    finish("audit", &a.common, &a, Some(&params), &(report.to_json()? + "\n"))
}

fn couple(a: CoupleArgs) -> Result<()> {
    let params = a.params.resolve()?;
    let s = seed(&a.common);
    let closed = a.closed_n.map(ClosedSpec::with_stations);
    let events = a.events.unwrap_or(10_000);
    let cycles = a.cycles.unwrap_or(10_000);
    let p_hat = a.p_hat.unwrap_or((params.p() + 0.2).min(1.0));
    let result = match a.kind.unwrap_or_default() {
        CoupleKind::P => coupled_p_monotonicity(params.p(), p_hat, &params, cycles, s).map(summary_json),
        CoupleKind::Alpha => {
            coupled_alpha_monotonicity(params.alpha(), a.alpha2.unwrap_or(2.0 * params.alpha()), &params, events, s, closed).map(summary_json)
        }
        CoupleKind::Beta => {
            coupled_beta_monotonicity(params.beta(), a.beta2.unwrap_or(0.5 * params.beta()), &params, events, s, closed).map(summary_json)
        }
        CoupleKind::ThreeColor => three_color_run(params.p(), p_hat, a.r.unwrap_or(0.1), &params, cycles, s).map(|r| {
            json!({
                "cycles": r.cycles.len(),
                "events": r.events,
                "increment_low": r.increment_low,
                "increment_high": r.increment_high,
                "concavity_gap": r.concavity_gap,
                "strict_cycles": r.strict_cycles,
                "violations": 0,
            })
        }),
    };
    let v = match result {
        Ok(v) => v,
        Err(Error::CouplingViolation { message, trace_csv }) => {
            match &a.trace_out {
                Some(p) => std::fs::write(p, &trace_csv)?,
                None => eprint!("{trace_csv}"),
            }
            return Err(Error::CouplingViolation { message, trace_csv });
        }
        Err(e) => return Err(e),
    };
    finish("couple", &a.common, &a, Some(&params), &to_json(&v)?)
}

fn summary_json(s: crate::couplings::CouplingSummary) -> Value {
    json!({
        "events": s.events,
        "cycles": s.cycles,
        "strict_events": s.strict_events,
        "strict_event_fraction": s.strict_event_fraction(),
        "strict_cycles": s.strict_cycles,
        "identical": s.identical,
        "violations": 0,
    })
}

fn sweep(a: SweepArgs) -> Result<()> {
    let param = a.sweep.ok_or_else(|| Error::invalid("sweep", "required (mu, alpha, beta or eta)"))?;
    let grid = parse_grid(a.grid.as_deref().ok_or_else(|| Error::invalid("grid", "required"))?)?;
    let s = seed(&a.common);
    let quantity = a.quantity.unwrap_or_default();
    let variant = a.variant.unwrap_or_default();
    let name = param.name();
    let text = match quantity {
        Quantity::EtaC => {
            if param == SweepParam::Eta {
                return Err(Error::invalid("sweep", "thresholds cannot be swept over eta"));
            }
            let cfg = threshold_config(a.budget, a.precision, a.method)?;
            let rows: Vec<Vec<String>> = grid
                .par_iter()
                .enumerate()
                .map(|(i, &v)| {
                    let pa = param.apply(&a.params, v);
                    let (mu, al, be) = (pa.mu.unwrap_or(1.0), pa.alpha.unwrap_or(1.0), pa.beta.unwrap_or(1.0));
                    let sis = if variant == VariantArg::Sis {
                        Some(find_eta_c(mu, al, be, &cfg, s.substream(i as u64))?.eta_c)
                    } else {
                        None
                    };
                    Ok(vec![
                        num(Some(v)),
                        num(sis.map(|e| e.value)),
                        num(sis.map(|e| e.std_error)),
                        num(Some(docs_tl_threshold(mu, al, be)?)),
                        num(Some(air_threshold(al, be)?)),
                    ])
                })
                .collect::<Result<_>>()?;
            csv_text(&[name, "eta_c_sis", "eta_c_sis_se", "eta_c_docs", "eta_c_air"], rows)?
        }
        Quantity::GPrime0 => {
            let budget = usize_of(a.budget.unwrap_or(1_000_000), "budget")?;
            let method = a.method.unwrap_or_default().single();
            let rows: Vec<Vec<String>> = grid
                .par_iter()
                .enumerate()
                .map(|(i, &v)| {
                    let params = param.apply(&a.params, v).resolve()?;
                    let g = estimate_g_prime0(&params, method, budget, s.substream(i as u64))?;
                    Ok(vec![num(Some(v)), num(Some(g.value)), num(Some(g.std_error))])
                })
                .collect::<Result<_>>()?;
            csv_text(&[name, "g_prime0", "g_prime0_se"], rows)?
        }
    };
    finish("sweep", &a.common, &a, None, &text)
}
