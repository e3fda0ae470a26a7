//! The `evw` command line.
//!
//! Exit codes: 0 on success (for `solve`, a certified equilibrium), 2 when the
//! solver stops without a certified equilibrium (partial results are still
//! written), 3 when an input fails to parse or validate, 1 otherwise.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use evw_core::charging::Degeneracy;
use evw_core::equilibrium::{solve_equilibrium, solve_equilibrium_from, EquilibriumConfig, EquilibriumResult};
use evw_core::incentives::EnvWeights;
use evw_core::loaddata::{monthly_increasing_fraction, overall_fraction, Binning, EtaPolicy};
use evw_core::network::{three_arc_network, ArcId, Class, ClassParams, PathFlow, RoadNetwork};
use evw_core::{ChargingScenario, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{EvwError, Result};
use crate::formats::{load_network, load_params, load_scenario, EtaSpec, NetworkFile, ScenarioFile};
use crate::output::{csv_text, ensure_dir, fmt, json_text, write_file, Meta};
use crate::{loadcsv, parallel};

#[derive(Debug, Parser)]
#[command(
    name = "evw",
    version,
    about = "Wardrop equilibria of electric and gasoline traffic with a water-filling charging price"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Network JSON file (default: the built-in three-arc city network).
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Charging scenario JSON file (default: two slots, 16.7 and 25.6 kWh, η = 0.01, n = 2).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Class parameter JSON file; its fields override the network's `class_params`.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Output directory. Without it, `solve` writes to the current directory
    /// and the other commands print to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Relative duality gap target (default 1e-6; 1e-8 for toll sweeps).
    #[arg(long = "gap-tol")]
    pub gap_tol: Option<f64>,
    /// Iteration cap of each equilibrium solve (default 100000).
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the equilibrium; writes equilibrium.json and flows.csv.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Also solve from this many random starting points and report the spread.
        #[arg(long = "multi-start", default_value_t = 0)]
        multi_start: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Optimal charging schedule for a given charging need.
    Schedule {
        #[command(flatten)]
        common: Common,
        /// Aggregated charging need L_e (kWh).
        #[arg(long = "charging-need")]
        charging_need: f64,
    },
    /// Whether the charging unit price is increasing.
    CheckLambda {
        #[command(flatten)]
        common: Common,
    },
    /// Monthly share of days with an increasing charging price.
    Loadstats {
        #[command(flatten)]
        common: Common,
        /// Load CSV (`date,h0..h23` or `date,hour,kwh`).
        #[arg(long)]
        data: PathBuf,
        /// Slot counts.
        #[arg(long = "T", value_delimiter = ',', default_values_t = [2usize, 4, 8, 24])]
        slots: Vec<usize>,
        /// Cost exponent.
        #[arg(long, default_value_t = 2)]
        n: u32,
        /// Uniform cost coefficient (€/kWh^n).
        #[arg(long, default_value_t = 0.01)]
        eta: f64,
        /// Bin hours in clock order instead of sorted order.
        #[arg(long)]
        chrono: bool,
    },
    /// Grid search of the gasoline toll on one arc.
    SweepToll {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        toll: TollArgs,
    },
    /// Equilibria along a fuel-price grid.
    SweepFuel {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5)]
        min: f64,
        #[arg(long, default_value_t = 1.6)]
        max: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Optimal toll and environmental gain along an EV-share grid.
    SweepPenetration {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        toll: TollArgs,
        #[arg(long = "x-min", default_value_t = 0.05)]
        x_min: f64,
        #[arg(long = "x-max", default_value_t = 0.95)]
        x_max: f64,
        #[arg(long = "x-step", default_value_t = 0.05)]
        x_step: f64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct TollArgs {
    /// Label of the tolled arc.
    #[arg(long, default_value = "a")]
    pub arc: String,
    /// Largest toll (€).
    #[arg(long, default_value_t = 5.0)]
    pub max: f64,
    /// Toll increment (€).
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Environmental weight of the tolled arc.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("evw: error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            e.exit_code()
        }
    }
}

struct Inputs {
    net: RoadNetwork,
    params: ClassParams,
    sc: ChargingScenario,
    cfg: EquilibriumConfig,
    meta: Meta,
}

/// Gap tolerance of toll sweeps when `--gap-tol` is absent. Near-flat cost
/// curves need solves well below the tie tolerance of the grid search.
pub const TOLL_SWEEP_GAP: f64 = 1e-8;

fn load_inputs(c: &Common) -> Result<Inputs> {
    let mut meta = Meta::default();
    let (net, mut params) = match &c.network {
        Some(path) => {
            let (net, params, bytes) = load_network(path)?;
            meta.input("network", path, &bytes);
            (net, params)
        }
        None => {
            let net = three_arc_network();
            let params = ClassParams::default();
            let text = serde_json::to_string(&NetworkFile::from_network(&net, &params)).expect("serializable");
            meta.input("network", Path::new("<built-in three-arc>"), text.as_bytes());
            (net, params)
        }
    };
    if let Some(path) = &c.params {
        let (file, bytes) = load_params(path)?;
        params = file.apply(params);
        params.validate().map_err(|source| EvwError::Invalid {
            path: path.clone(),
            source,
        })?;
        meta.input("params", path, &bytes);
    }
    let sc = load_scenario_or_default(c, &mut meta)?;
    let mut cfg = EquilibriumConfig::default();
    if let Some(g) = c.gap_tol {
        cfg.gap_tolerance = g;
    }
    if let Some(m) = c.max_iter {
        cfg.max_iterations = m;
    }
    cfg.validate()?;
    Ok(Inputs {
        net,
        params,
        sc,
        cfg,
        meta,
    })
}

fn load_scenario_or_default(c: &Common, meta: &mut Meta) -> Result<ChargingScenario> {
    match &c.scenario {
        Some(path) => {
            let (sc, bytes) = load_scenario(path)?;
            meta.input("scenario", path, &bytes);
            Ok(sc)
        }
        None => {
            let sc = ChargingScenario::two_slot_reference();
            let file = ScenarioFile {
                n: sc.exponent(),
                eta: EtaSpec::PerSlot(sc.eta().to_vec()),
                ell0: sc.ell0().to_vec(),
            };
            let text = serde_json::to_string(&file).expect("serializable");
            meta.input("scenario", Path::new("<built-in two-slot>"), text.as_bytes());
            Ok(sc)
        }
    }
}

/// Writes `name` into the output directory, or prints it when there is none.
fn emit(out: &Option<PathBuf>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => write_file(&ensure_dir(dir)?.join(name), text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Solve {
            common,
            multi_start,
            seed,
        } => cmd_solve(&common, multi_start, seed),
        Command::Schedule { common, charging_need } => cmd_schedule(&common, charging_need),
        Command::CheckLambda { common } => cmd_check_lambda(&common),
        Command::Loadstats {
            common,
            data,
            slots,
            n,
            eta,
            chrono,
        } => cmd_loadstats(&common, &data, &slots, n, eta, chrono),
        Command::SweepToll { common, toll } => cmd_sweep_toll(&common, &toll),
        Command::SweepFuel { common, min, max, step } => cmd_sweep_fuel(&common, min, max, step),
        Command::SweepPenetration {
            common,
            toll,
            x_min,
            x_max,
            x_step,
        } => cmd_sweep_penetration(&common, &toll, x_min, x_max, x_step),
    }
}

fn random_start(net: &RoadNetwork, params: &ClassParams, rng: &mut ChaCha8Rng) -> Vec<PathFlow> {
    let mut out = Vec::new();
    for (k, od) in net.od_pairs().iter().enumerate() {
        let paths: Vec<_> = net.paths().iter().filter(|p| p.od == k).collect();
        for class in Class::ALL {
            let demand = params.share(class) * od.demand;
            if demand <= 0.0 {
                continue;
            }
            let w: Vec<f64> = paths.iter().map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let sum: f64 = w.iter().sum();
            for (p, wi) in paths.iter().zip(&w) {
                out.push(PathFlow {
                    od: k,
                    class,
                    arcs: p.arcs.clone(),
                    flow: demand * wi / sum,
                });
            }
        }
    }
    out
}

fn arc_rows(net: &RoadNetwork, params: &ClassParams, r: &EquilibriumResult) -> Result<(Vec<Value>, Vec<Vec<String>>)> {
    let mut json_rows = Vec::new();
    let mut csv_rows = Vec::new();
    for (i, arc) in net.arcs().iter().enumerate() {
        let x = r.flows.arc[i];
        let time = arc.travel_time(x.total())?;
        let cost_ev = net.arc_cost(ArcId(i), x.total(), Class::Ev, params, r.unit_price)?;
        let cost_gv = net.arc_cost(ArcId(i), x.total(), Class::Gv, params, r.unit_price)?;
        json_rows.push(json!({
            "id": arc.label,
            "flow_ev": x.ev,
            "flow_gv": x.gv,
            "flow_total": x.total(),
            "travel_time_h": time,
            "cost_ev_eur": cost_ev,
            "cost_gv_eur": cost_gv,
        }));
        for (class, flow, cost) in [(Class::Ev, x.ev, cost_ev), (Class::Gv, x.gv, cost_gv)] {
            csv_rows.push(vec![
                arc.label.clone(),
                class.as_str().to_string(),
                fmt(flow),
                fmt(time),
                fmt(cost),
            ]);
        }
    }
    Ok((json_rows, csv_rows))
}

fn cmd_solve(c: &Common, multi_start: usize, seed: u64) -> Result<i32> {
    let inp = load_inputs(c)?;
    let out_dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let (result, converged) = match solve_equilibrium(&inp.net, &inp.params, &inp.sc, &inp.cfg) {
        Ok(r) => (r, true),
        Err(Error::NotConverged(r)) => (*r, false),
        Err(e) => return Err(e.into()),
    };

    let mut spread = Value::Null;
    if multi_start > 0 && converged {
        let net = inp.net.clone().with_enumerated_paths()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut d_flow, mut d_need) = (0.0f64, 0.0f64);
        for _ in 0..multi_start {
            let start = random_start(&net, &inp.params, &mut rng);
            let r = solve_equilibrium_from(&net, &inp.params, &inp.sc, &inp.cfg, Some(&start))?;
            for (a, b) in r.flows.arc.iter().zip(&result.flows.arc) {
                d_flow = d_flow.max((a.total() - b.total()).abs());
            }
            d_need = d_need.max((r.charging_need - result.charging_need).abs());
        }
        spread = json!({
            "starts": multi_start,
            "seed": seed,
            "max_arc_total_deviation": d_flow,
            "max_charging_need_deviation_kwh": d_need,
        });
    }

    let (arcs, rows) = arc_rows(&inp.net, &inp.params, &result)?;
    let label = |a: &ArcId| inp.net.arcs()[a.0].label.clone();
    let paths: Vec<Value> = result
        .flows
        .paths
        .iter()
        .flatten()
        .map(|p| {
            json!({
                "od": p.od,
                "class": p.class.as_str(),
                "arcs": p.arcs.iter().map(label).collect::<Vec<_>>(),
                "flow": p.flow,
            })
        })
        .collect();
    let mut warnings = Vec::new();
    if !result.unique_regime {
        warnings.push(
            "charging unit price is not increasing: the equilibrium may not be unique; compare --multi-start runs",
        );
    }
    if converged && !result.certified {
        warnings.push("gap tolerance met but the Wardrop residual exceeds its epsilon");
    }
    let report = json!({
        "meta": inp.meta,
        "converged": converged,
        "certified": result.certified,
        "unique_regime": result.unique_regime,
        "warnings": warnings,
        "iterations": result.iterations,
        "relative_gap": result.relative_gap,
        "potential": result.potential,
        "wardrop_residual": result.wardrop_residual,
        "wardrop_epsilon": inp.cfg.wardrop_epsilon,
        "charging_need_kwh": result.charging_need,
        "unit_price_eur_per_kwh": result.unit_price,
        "fallback_steps": result.fallback_steps,
        "arcs": arcs,
        "paths": paths,
        "multi_start": spread,
    });
    let dir = ensure_dir(&out_dir)?;
    write_file(&dir.join("equilibrium.json"), &json_text(report))?;
    let header: Vec<String> = ["arc_id", "class", "flow", "travel_time_h", "cost_eur"]
        .map(String::from)
        .into();
    write_file(&dir.join("flows.csv"), &csv_text(&inp.meta, &[], &header, &rows))?;

    if !converged {
        eprintln!(
            "evw: no convergence after {} iterations (relative gap {:e}); partial result written",
            result.iterations, result.relative_gap
        );
        return Ok(2);
    }
    if !result.certified {
        eprintln!(
            "evw: Wardrop residual {:e} exceeds {:e}",
            result.wardrop_residual, inp.cfg.wardrop_epsilon
        );
        return Ok(2);
    }
    Ok(0)
}

fn cmd_schedule(c: &Common, charging_need: f64) -> Result<i32> {
    let mut meta = Meta::default();
    let sc = load_scenario_or_default(c, &mut meta)?;
    let s = sc.schedule(charging_need)?;
    let thresholds: Vec<f64> = sc.energy_thresholds().into_iter().filter(|t| t.is_finite()).collect();
    let report = json!({
        "meta": meta,
        "n": sc.exponent(),
        "slots": sc.slot_count(),
        "charging_need_kwh": charging_need,
        "ell_e_kwh": s.ell_e,
        "value_eur": s.value,
        "unit_price_eur_per_kwh": s.unit_price,
        "active_slot_count": s.active_slot_count,
        "marginal_cost": s.marginal_cost,
        "thresholds_kwh": thresholds,
    });
    emit(&c.out, "schedule.json", &json_text(report))?;
    Ok(0)
}

fn cmd_check_lambda(c: &Common) -> Result<i32> {
    let mut meta = Meta::default();
    let sc = load_scenario_or_default(c, &mut meta)?;
    let m = sc.price_monotonicity();
    let report = json!({
        "meta": meta,
        "ratio": m.ratio,
        "n": sc.exponent(),
        "increasing": m.increasing,
        "degeneracy": m.degeneracy.map(|d| match d {
            Degeneracy::NoNonflexibleLoad => "no_nonflexible_load",
            Degeneracy::ZeroFirstSlot => "zero_first_slot",
        }),
    });
    emit(&c.out, "check_lambda.json", &json_text(report))?;
    Ok(0)
}

fn cmd_loadstats(c: &Common, data: &Path, slots: &[usize], n: u32, eta: f64, chrono: bool) -> Result<i32> {
    let mut meta = Meta::default();
    let bytes = crate::formats::read(data)?;
    let ds = loadcsv::parse_load_bytes(data, &bytes)?;
    meta.input("data", data, &bytes);
    let binning = if chrono {
        Binning::Chronological
    } else {
        Binning::Sorted
    };
    let policy = EtaPolicy::Uniform(eta);
    // Validate every slot count before computing anything.
    for &t in slots {
        if !(1..=24).contains(&t) {
            return Err(EvwError::Usage(format!("--T values must lie in 1..=24, got {t}")));
        }
    }
    ChargingScenario::uniform(n, eta, vec![1.0])?;
    let mut rows = Vec::new();
    let mut comments = vec![format!(
        "binning={} n={n} eta={} days={}",
        if chrono { "chronological" } else { "sorted" },
        fmt(eta),
        ds.len()
    )];
    for &t in slots {
        let stats = monthly_increasing_fraction(&ds, t, n, &policy, binning)?;
        let zero: usize = stats.iter().map(|s| s.zero_days).sum();
        comments.push(format!(
            "T={t} yearly_fraction={} zero_consumption_days_counted_increasing={zero}",
            overall_fraction(&stats).map_or(String::new(), fmt)
        ));
        for s in stats {
            rows.push(vec![
                s.month.to_string(),
                t.to_string(),
                s.fraction.map_or(String::new(), fmt),
                s.days_counted.to_string(),
            ]);
        }
    }
    let header: Vec<String> = ["month", "T", "fraction", "days_counted"].map(String::from).into();
    emit(&c.out, "loadstats.csv", &csv_text(&meta, &comments, &header, &rows))?;
    Ok(0)
}

fn flow_header(net: &RoadNetwork) -> Vec<String> {
    net.arcs()
        .iter()
        .flat_map(|a| [format!("x_{}_ev", a.label), format!("x_{}_gv", a.label)])
        .collect()
}

fn flow_fields(flows: &[evw_core::PerClass<f64>]) -> Vec<String> {
    flows.iter().flat_map(|x| [fmt(x.ev), fmt(x.gv)]).collect()
}

fn tolled_arc(net: &RoadNetwork, t: &TollArgs) -> Result<(ArcId, EnvWeights)> {
    let arc = net
        .arc_by_label(&t.arc)
        .ok_or_else(|| EvwError::Usage(format!("--arc: no arc labelled `{}`", t.arc)))?;
    let weights = EnvWeights::uniform(net.arcs().len()).with(arc, t.gamma)?;
    evw_core::incentives::toll_grid(t.max, t.step)?;
    Ok((arc, weights))
}

/// `{min, min + step, …}` up to `max`, values rounded to 10 significant digits.
pub fn value_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && max >= min) {
        return Err(EvwError::Usage(format!(
            "grid bounds must satisfy min <= max, got {min} and {max}"
        )));
    }
    let offsets = evw_core::incentives::toll_grid(max - min, step)?;
    Ok(offsets.into_iter().map(|o| crate::output::round_sig(min + o)).collect())
}

fn toll_sweep_common(c: &Common) -> Common {
    Common {
        gap_tol: c.gap_tol.or(Some(TOLL_SWEEP_GAP)),
        ..c.clone()
    }
}

fn cmd_sweep_toll(c: &Common, t: &TollArgs) -> Result<i32> {
    let inp = load_inputs(&toll_sweep_common(c))?;
    let (arc, weights) = tolled_arc(&inp.net, t)?;
    let threads = parallel::threads_from_env()?;
    let r = parallel::optimize_toll(
        &inp.net,
        &inp.params,
        &inp.sc,
        &inp.cfg,
        &weights,
        arc,
        t.max,
        t.step,
        threads,
    )?;
    let mut header = vec!["toll".to_string()];
    header.extend(flow_header(&inp.net));
    header.extend(["lambda_e", "c_env"].map(String::from));
    let rows: Vec<Vec<String>> = r
        .points
        .iter()
        .map(|p| {
            let mut row = vec![fmt(p.toll)];
            row.extend(flow_fields(&p.arc_flows));
            row.push(fmt(p.unit_price));
            row.push(fmt(p.env_cost));
            row
        })
        .collect();
    let comments = vec![
        format!(
            "arc={} gamma={} max={} step={}",
            t.arc,
            fmt(t.gamma),
            fmt(t.max),
            fmt(t.step)
        ),
        format!(
            "t_star={} c_env_star={} delta={}",
            fmt(r.best_toll),
            fmt(r.best_cost),
            fmt(r.gain)
        ),
    ];
    emit(
        &c.out,
        "toll_sweep.csv",
        &csv_text(&inp.meta, &comments, &header, &rows),
    )?;
    Ok(0)
}

fn cmd_sweep_fuel(c: &Common, min: f64, max: f64, step: f64) -> Result<i32> {
    let inp = load_inputs(c)?;
    let grid = value_grid(min, max, step)?;
    let threads = parallel::threads_from_env()?;
    let results = parallel::sweep_fuel_price(&inp.net, &inp.params, &inp.sc, &inp.cfg, &grid, threads)?;
    let mut header = vec!["lambda_g".to_string()];
    header.extend(flow_header(&inp.net));
    header.extend(["lambda_e", "relative_gap", "wardrop_residual"].map(String::from));
    let rows: Vec<Vec<String>> = grid
        .iter()
        .zip(&results)
        .map(|(lg, r)| {
            let mut row = vec![fmt(*lg)];
            row.extend(flow_fields(&r.flows.arc));
            row.extend([fmt(r.unit_price), fmt(r.relative_gap), fmt(r.wardrop_residual)]);
            row
        })
        .collect();
    emit(&c.out, "fuel_sweep.csv", &csv_text(&inp.meta, &[], &header, &rows))?;
    Ok(0)
}

fn cmd_sweep_penetration(c: &Common, t: &TollArgs, x_min: f64, x_max: f64, x_step: f64) -> Result<i32> {
    let inp = load_inputs(&toll_sweep_common(c))?;
    let (arc, weights) = tolled_arc(&inp.net, t)?;
    let grid = value_grid(x_min, x_max, x_step)?;
    let threads = parallel::threads_from_env()?;
    let points = parallel::sweep_ev_penetration(
        &inp.net,
        &inp.params,
        &inp.sc,
        &inp.cfg,
        &weights,
        &grid,
        arc,
        t.max,
        t.step,
        threads,
    )?;
    let mut header: Vec<String> = ["x_e", "t_star", "delta", "c_env_star", "c_env_zero_toll"]
        .map(String::from)
        .into();
    header.extend(flow_header(&inp.net));
    header.push("lambda_e".to_string());
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let best = &p.sweep.points[p.sweep.best_index];
            let mut row = vec![
                fmt(p.x_e),
                fmt(p.sweep.best_toll),
                fmt(p.sweep.gain),
                fmt(p.sweep.best_cost),
                fmt(p.sweep.points[0].env_cost),
            ];
            row.extend(flow_fields(&best.arc_flows));
            row.push(fmt(best.unit_price));
            row
        })
        .collect();
    let comments = vec![format!(
        "arc={} gamma={} max={} step={}",
        t.arc,
        fmt(t.gamma),
        fmt(t.max),
        fmt(t.step)
    )];
    emit(
        &c.out,
        "penetration_sweep.csv",
        &csv_text(&inp.meta, &comments, &header, &rows),
    )?;
    Ok(0)
}
