//! Scenario runner: ingest order logs and graph fixtures, run dispatch
//! modes and parameter sweeps, emit reports and debug dumps.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
//! violation.

mod config;
mod ingest;
mod output;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use dispatch_core::netgraph::{build_grid, DistanceOracle};
use dispatch_core::simulator::{run_in_world, Mode, OrderStream, SimError, SimWorld};

use config::{manifest_echo, predictor_from, resolve, ConfigFile, ResolvedConfig};

const USAGE: &str = "\
usage: dispatch <command> [flags]

commands:
  run            run the configured scenario on an order log
  sweep          run a relocation/capacity parameter sweep
  gen-synthetic  emit a seeded synthetic order log
  validate       check config and input files
  geo-to-cell    convert latitude/longitude to a grid cell index

flags:
  --config <file>             config file (required)
  --orders <file>             order log (run, sweep; optional for validate)
  --graph <file>              per-edge distance overrides
  --out <path>                output directory (run, sweep) or file (gen-synthetic)
  --mode <m>                  proposed | greedy | bundling | all (default proposed)
  --seed <n>                  override simulator seed
  --sweep-relocation <list>   comma-separated d_m values (sweep)
  --sweep-capacity <list>     comma-separated capacities (sweep)
  --dump-flow                 capture per-interval flow network dumps
  --exclude-repositioning-cost  drop repositioning distance from profit
  --lat <deg> --lon <deg>     coordinates (geo-to-cell)
";

/// Error class that maps to exit code 1; everything else is data (2) unless
/// an internal invariant broke (3).
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run_cli(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if err.downcast_ref::<UsageError>().is_some() {
                1
            } else if err
                .chain()
                .any(|c| matches!(c.downcast_ref::<SimError>(), Some(SimError::Invariant(_))))
            {
                3
            } else {
                2
            };
            ExitCode::from(code)
        }
    }
}

#[derive(Debug, Default, Clone)]
struct Flags {
    config: Option<PathBuf>,
    orders: Option<PathBuf>,
    graph: Option<PathBuf>,
    out: Option<PathBuf>,
    mode: Option<String>,
    seed: Option<u64>,
    sweep_relocation: Option<Vec<f64>>,
    sweep_capacity: Option<Vec<u32>>,
    dump_flow: bool,
    exclude_repositioning_cost: bool,
    lat: Option<f64>,
    lon: Option<f64>,
}

fn parse_flags(args: &[String]) -> Result<Flags> {
    let mut flags = Flags::default();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let mut value = || {
            it.next()
                .ok_or_else(|| usage(format!("flag {flag} expects a value")))
        };
        match flag.as_str() {
            "--config" => flags.config = Some(PathBuf::from(value()?)),
            "--orders" => flags.orders = Some(PathBuf::from(value()?)),
            "--graph" => flags.graph = Some(PathBuf::from(value()?)),
            "--out" => flags.out = Some(PathBuf::from(value()?)),
            "--mode" => flags.mode = Some(value()?.clone()),
            "--seed" => {
                flags.seed = Some(value()?.parse().map_err(|e| usage(format!("--seed: {e}")))?)
            }
            "--sweep-relocation" => {
                flags.sweep_relocation =
                    Some(parse_list(value()?).map_err(|e| usage(e.to_string()))?)
            }
            "--sweep-capacity" => {
                flags.sweep_capacity =
                    Some(parse_list(value()?).map_err(|e| usage(e.to_string()))?)
            }
            "--dump-flow" => flags.dump_flow = true,
            "--exclude-repositioning-cost" => flags.exclude_repositioning_cost = true,
            "--lat" => {
                flags.lat = Some(value()?.parse().map_err(|e| usage(format!("--lat: {e}")))?)
            }
            "--lon" => {
                flags.lon = Some(value()?.parse().map_err(|e| usage(format!("--lon: {e}")))?)
            }
            other => return Err(usage(format!("unknown flag {other}"))),
        }
    }
    Ok(flags)
}

fn parse_list<T: std::str::FromStr>(raw: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let list = raw
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<T>()
                .map_err(|e| anyhow!("bad list entry \"{tok}\": {e}"))
        })
        .collect::<Result<Vec<T>>>()?;
    if list.is_empty() {
        bail!("empty list");
    }
    Ok(list)
}

fn run_cli(args: &[String]) -> Result<()> {
    let Some(command) = args.first() else {
        return Err(usage(USAGE));
    };
    let flags = parse_flags(&args[1..])?;
    match command.as_str() {
        "run" => cmd_run(&flags),
        "sweep" => cmd_sweep(&flags),
        "gen-synthetic" => cmd_gen_synthetic(&flags),
        "validate" => cmd_validate(&flags),
        "geo-to-cell" => cmd_geo_to_cell(&flags),
        "--help" | "help" | "-h" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(usage(format!("unknown command \"{other}\"\n\n{USAGE}"))),
    }
}

fn require_config(flags: &Flags) -> Result<(ConfigFile, ResolvedConfig)> {
    let path = flags
        .config
        .as_ref()
        .ok_or_else(|| usage("--config is required"))?;
    let file = ConfigFile::load(path)?;
    let resolved = resolve(&file)?;
    Ok((file, resolved))
}

/// Loads predictor rates when the config names a table, resolving the path
/// relative to the config file's directory.
fn load_predictor(
    file: &ConfigFile,
    resolved: &ResolvedConfig,
) -> Result<(dispatch_core::demand::PredictorSpec, String)> {
    let rates = match &resolved.rates_file {
        Some(raw) => {
            let path = if raw.is_absolute() {
                raw.clone()
            } else {
                file.path.parent().unwrap_or(Path::new(".")).join(raw)
            };
            let (grid, _) =
                build_grid(resolved.sim.rows, resolved.sim.cols, resolved.sim.cell_size_km)?;
            Some(ingest::load_rates(&path, &grid)?)
        }
        None => None,
    };
    let spec = predictor_from(file, rates)?;
    let kind = match &spec {
        dispatch_core::demand::PredictorSpec::ReplayPrevious => "replay_previous",
        dispatch_core::demand::PredictorSpec::ReplayOracle => "replay_oracle",
        dispatch_core::demand::PredictorSpec::SyntheticPoisson(_) => "synthetic_poisson",
    };
    Ok((spec, kind.to_string()))
}

struct Scenario {
    resolved: ResolvedConfig,
    world: SimWorld,
    stream: OrderStream,
    predictor_kind: String,
    inputs: Vec<(&'static str, String)>,
}

fn prepare_scenario(flags: &Flags) -> Result<Scenario> {
    let (file, mut resolved) = require_config(flags)?;
    let (predictor, predictor_kind) = load_predictor(&file, &resolved)?;
    resolved.sim.predictor = predictor;
    if let Some(seed) = flags.seed {
        resolved.sim.seed = seed;
    }
    resolved.sim.exclude_repositioning_cost |= flags.exclude_repositioning_cost;
    resolved.sim.capture_flow_dumps = flags.dump_flow;

    let orders_path = flags
        .orders
        .as_ref()
        .ok_or_else(|| usage("--orders is required"))?;
    let (grid, mut distance) =
        build_grid(resolved.sim.rows, resolved.sim.cols, resolved.sim.cell_size_km)?;
    let mut inputs: Vec<(&'static str, String)> = vec![
        ("config", file.path.display().to_string()),
        ("orders", orders_path.display().to_string()),
    ];
    if let Some(graph_path) = &flags.graph {
        let applied = ingest::apply_graph_overrides(graph_path, &grid, &mut distance)?;
        inputs.push(("graph", format!("{} ({applied} edges)", graph_path.display())));
    }
    let stream = ingest::ingest_orders(orders_path, &grid, resolved.sim.interval_minutes)?;
    let world = SimWorld::with_distance(grid, distance, stream.restaurants.clone())?;
    Ok(Scenario { resolved, world, stream, predictor_kind, inputs })
}

fn parse_modes(flags: &Flags) -> Result<Vec<Mode>> {
    match flags.mode.as_deref().unwrap_or("proposed") {
        "proposed" => Ok(vec![Mode::Proposed]),
        "greedy" => Ok(vec![Mode::Greedy]),
        "bundling" => Ok(vec![Mode::Bundling]),
        "all" => Ok(vec![Mode::Proposed, Mode::Greedy, Mode::Bundling]),
        other => Err(usage(format!("unknown mode \"{other}\""))),
    }
}

fn cmd_run(flags: &Flags) -> Result<()> {
    let modes = parse_modes(flags)?;
    let scenario = prepare_scenario(flags)?;
    let out_dir = flags.out.as_ref().ok_or_else(|| usage("--out is required"))?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;

    let mut reports = BTreeMap::new();
    for &mode in &modes {
        let report =
            run_in_world(&scenario.resolved.sim, &scenario.world, &scenario.stream, mode)?;
        output::write_mode_files(
            out_dir,
            "",
            &report,
            &scenario.stream,
            &scenario.world.oracle,
            flags.dump_flow,
        )?;
        println!(
            "{}: vehicles {} delivered {} profit {:.2}",
            mode.name(),
            report.vehicle_count,
            report.efficiency_delivered,
            report.profit
        );
        reports.insert(mode.name(), report);
    }
    if modes.len() == 3 {
        let table = output::improvement_table(
            &reports["proposed"],
            &[&reports["greedy"], &reports["bundling"]],
        );
        output::write(&out_dir.join("improvements.csv"), &table)?;
    }
    let manifest = manifest_echo(&scenario.resolved, &scenario.predictor_kind, &scenario.inputs);
    output::write(&out_dir.join("manifest.txt"), &manifest)?;
    Ok(())
}

fn suffix_token(value: f64) -> String {
    format!("{value}").replace('.', "p")
}

fn cmd_sweep(flags: &Flags) -> Result<()> {
    let modes = parse_modes(flags)?;
    let scenario = prepare_scenario(flags)?;
    let out_dir = flags.out.as_ref().ok_or_else(|| usage("--out is required"))?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;

    let relocations = flags
        .sweep_relocation
        .clone()
        .unwrap_or_else(|| vec![scenario.resolved.sim.relocation_distance_km]);
    let capacities = flags
        .sweep_capacity
        .clone()
        .unwrap_or_else(|| vec![scenario.resolved.sim.courier_capacity]);

    let metrics = [
        ("vehicle_count", dispatch_core::simulator::MetricKind::VehicleCount),
        ("efficiency", dispatch_core::simulator::MetricKind::Efficiency),
        ("profit", dispatch_core::simulator::MetricKind::Profit),
        ("service_time", dispatch_core::simulator::MetricKind::ServiceTime),
    ];
    let mut summary = String::from(
        "mode,relocation_km,capacity,vehicle_count,orders_delivered,orders_assigned,expired,profit,mean_service_minutes\n",
    );
    let mut improvements = String::from(
        "relocation_km,capacity,metric,baseline,baseline_value,proposed_value,improvement_pct\n",
    );
    for &relocation in &relocations {
        for &capacity in &capacities {
            let mut cell_reports = BTreeMap::new();
            for &mode in &modes {
                let mut sim = scenario.resolved.sim.clone();
                sim.relocation_distance_km = relocation;
                sim.courier_capacity = capacity;
                let report = run_in_world(&sim, &scenario.world, &scenario.stream, mode)?;
                let _ = writeln!(
                    summary,
                    "{},{},{},{},{},{},{},{:.4},{:.4}",
                    mode.name(),
                    relocation,
                    capacity,
                    report.vehicle_count,
                    report.efficiency_delivered,
                    report.efficiency_assigned,
                    report.expired_orders,
                    report.profit,
                    report.mean_service_time_minutes
                );
                let suffix = format!("_rel{}_cap{}", suffix_token(relocation), capacity);
                output::write_mode_files(
                    out_dir,
                    &suffix,
                    &report,
                    &scenario.stream,
                    &scenario.world.oracle,
                    flags.dump_flow,
                )?;
                cell_reports.insert(mode.name(), report);
            }
            if modes.len() == 3 {
                let proposed = &cell_reports["proposed"];
                for baseline_name in ["greedy", "bundling"] {
                    let baseline = &cell_reports[baseline_name];
                    for (metric_name, kind) in metrics {
                        let a = baseline.metric(kind);
                        let p = proposed.metric(kind);
                        let cell = match dispatch_core::simulator::improvement(kind, a, p) {
                            Some(v) => format!("{v:.4}"),
                            None => "undefined".into(),
                        };
                        let _ = writeln!(
                            improvements,
                            "{relocation},{capacity},{metric_name},{baseline_name},{a:.4},{p:.4},{cell}"
                        );
                    }
                }
            }
        }
    }
    output::write(&out_dir.join("sweep_summary.csv"), &summary)?;
    if modes.len() == 3 {
        output::write(&out_dir.join("sweep_improvements.csv"), &improvements)?;
    }
    let manifest = manifest_echo(&scenario.resolved, &scenario.predictor_kind, &scenario.inputs);
    output::write(&out_dir.join("manifest.txt"), &manifest)?;
    println!(
        "swept {} relocation x {} capacity cells across {} mode(s)",
        relocations.len(),
        capacities.len(),
        modes.len()
    );
    Ok(())
}

fn cmd_gen_synthetic(flags: &Flags) -> Result<()> {
    let (file, mut resolved) = require_config(flags)?;
    if let Some(seed) = flags.seed {
        resolved.sim.seed = seed;
    }
    let out = flags.out.as_ref().ok_or_else(|| usage("--out is required"))?;
    let rates_path = resolved
        .rates_file
        .clone()
        .ok_or_else(|| usage("gen-synthetic requires demand.rates_file in the config"))?;
    let rates_path = if rates_path.is_absolute() {
        rates_path
    } else {
        file.path.parent().unwrap_or(Path::new(".")).join(rates_path)
    };
    let (grid, distance) =
        build_grid(resolved.sim.rows, resolved.sim.cols, resolved.sim.cell_size_km)?;
    let rates = ingest::load_rates(&rates_path, &grid)?;
    let oracle = DistanceOracle::new(&distance);
    let parse_or = |key: &str, default: f64| -> Result<f64> {
        file.get(key)
            .map_or(Ok(default), |v| v.parse().map_err(|e| anyhow!("{key}: {e}")))
    };
    let spec = dispatch_core::simulator::SyntheticStreamSpec {
        poisson: dispatch_core::demand::PoissonParams {
            rates,
            lunch_multiplier: parse_or("demand.lunch_multiplier", 3.0)?,
            dinner_multiplier: parse_or("demand.dinner_multiplier", 2.5)?,
            seed: resolved.sim.seed,
            expected_counts: false,
            open_hour: parse_or("demand.open_hour", 0.0)? as u32,
        },
        intervals: resolved.synthetic_intervals,
        base_fee: resolved.base_fee,
        fee_per_km: resolved.fee_per_km,
    };
    let stream = dispatch_core::simulator::synthesize_stream(
        &oracle,
        resolved.sim.interval_minutes,
        &spec,
    )?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    output::write(out, &ingest::render_orders(&stream))?;
    println!(
        "wrote {} orders across {} intervals to {}",
        stream.total_orders(),
        stream.intervals.len(),
        out.display()
    );
    Ok(())
}

fn cmd_validate(flags: &Flags) -> Result<()> {
    let (file, resolved) = require_config(flags)?;
    resolved.sim.validate()?;
    println!(
        "config ok: {}x{} grid, fleet {}, capacity {}",
        resolved.sim.rows,
        resolved.sim.cols,
        resolved.sim.fleet_size,
        resolved.sim.courier_capacity
    );
    let (_, kind) = load_predictor(&file, &resolved)?;
    println!("predictor ok: {kind}");
    let (grid, mut distance) =
        build_grid(resolved.sim.rows, resolved.sim.cols, resolved.sim.cell_size_km)?;
    if let Some(orders) = &flags.orders {
        let stream = ingest::ingest_orders(orders, &grid, resolved.sim.interval_minutes)?;
        stream.validate(resolved.sim.interval_minutes)?;
        println!(
            "orders ok: {} orders, {} intervals, {} restaurants",
            stream.total_orders(),
            stream.intervals.len(),
            stream.restaurants.len()
        );
    }
    if let Some(graph) = &flags.graph {
        let applied = ingest::apply_graph_overrides(graph, &grid, &mut distance)?;
        println!("graph ok: {applied} edge overrides");
    }
    Ok(())
}

fn cmd_geo_to_cell(flags: &Flags) -> Result<()> {
    let (_, resolved) = require_config(flags)?;
    let lat = flags.lat.ok_or_else(|| usage("--lat is required"))?;
    let lon = flags.lon.ok_or_else(|| usage("--lon is required"))?;
    const KM_PER_DEG_LAT: f64 = 110.574;
    const KM_PER_DEG_LON_EQUATOR: f64 = 111.320;
    let dy_km = (lat - resolved.origin_lat) * KM_PER_DEG_LAT;
    let dx_km = (lon - resolved.origin_lon)
        * KM_PER_DEG_LON_EQUATOR
        * resolved.origin_lat.to_radians().cos();
    if dy_km < 0.0 || dx_km < 0.0 {
        bail!("coordinates fall south/west of the grid origin");
    }
    let row = (dy_km / resolved.sim.cell_size_km).floor() as u32;
    let col = (dx_km / resolved.sim.cell_size_km).floor() as u32;
    if row >= resolved.sim.rows || col >= resolved.sim.cols {
        bail!(
            "coordinates map to row {row}, col {col}, outside the {}x{} grid",
            resolved.sim.rows,
            resolved.sim.cols
        );
    }
    let cell = row * resolved.sim.cols + col;
    println!("cell {cell} (row {row}, col {col})");
    Ok(())
}
