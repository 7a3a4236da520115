//! Flat key-value config file with one section per module, plus the resolved
//! manifest echo that makes every run reproducible.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use dispatch_core::demand::{PoissonParams, PredictorSpec};
use dispatch_core::netgraph::CellId;
use dispatch_core::simulator::SimConfig;

/// Parsed `[section] key = value` file; keys are `section.key`.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    pub path: PathBuf,
}

impl ConfigFile {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| anyhow!("{}:{}: unclosed section header", path.display(), lineno + 1))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                anyhow!("{}:{}: expected key = value", path.display(), lineno + 1)
            })?;
            let full = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            values.insert(full, value.trim().to_string());
        }
        Ok(ConfigFile { values, path: path.to_path_buf() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(path, &text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("config key {key}: {e} (got \"{raw}\")")),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.parse_as::<f64>(key)?.unwrap_or(default))
    }

    fn u32_or(&self, key: &str, default: u32) -> Result<u32> {
        Ok(self.parse_as::<u32>(key)?.unwrap_or(default))
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.parse_as::<u64>(key)?.unwrap_or(default))
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        Ok(self.parse_as::<bool>(key)?.unwrap_or(default))
    }
}

/// Everything a run needs beyond the core SimConfig.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub sim: SimConfig,
    pub origin_lat: f64,
    pub origin_lon: f64,
    /// SLA minutes are exposed but proxied by the distance thresholds.
    pub sla_minutes: Option<f64>,
    pub rates_file: Option<PathBuf>,
    pub synthetic_intervals: u32,
    pub base_fee: f64,
    pub fee_per_km: f64,
}

pub fn resolve(file: &ConfigFile) -> Result<ResolvedConfig> {
    let rows = file.u32_or("grid.rows", 10)?;
    let cols = file.u32_or("grid.cols", 10)?;
    let fleet = file.u32_or("simulator.fleet_size", 40)?;
    let mut sim = SimConfig::new(rows, cols, fleet);
    sim.cell_size_km = file.f64_or("grid.cell_size_km", 2.0)?;
    sim.interval_minutes = file.u32_or("simulator.interval_minutes", 15)?;
    sim.relocation_distance_km = file.f64_or("routing.relocation_distance_km", 5.0)?;
    sim.courier_capacity = file.u32_or("simulator.courier_capacity", 3)?;
    sim.pickup_threshold_km = file.f64_or("allocation.pickup_threshold_km", 6.0)?;
    sim.delivery_radius_km = file.f64_or("allocation.delivery_radius_km", 8.0)?;
    sim.detour_threshold = file.f64_or("allocation.detour_threshold", 1.5)?;
    sim.cost_scalar = file.f64_or("allocation.cost_scalar", 1.0)?;
    sim.two_phase = file.bool_or("allocation.two_phase", false)?;
    sim.speed_km_per_min = file.f64_or("simulator.speed_km_per_min", 0.5)?;
    sim.seed = file.u64_or("simulator.seed", 0)?;
    sim.max_wait_intervals = file.u32_or("simulator.max_wait_intervals", 4)?;
    sim.reposition_demand_floor = file.f64_or("simulator.reposition_demand_floor", 1.0)?;
    sim.prediction_horizon = file.u32_or("demand.prediction_horizon", 1)?;
    sim.exclude_repositioning_cost =
        file.bool_or("simulator.exclude_repositioning_cost", false)?;
    if let Some(raw) = file.get("simulator.spawn_cells") {
        if !raw.is_empty() {
            let cells = raw
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<u32>()
                        .map(CellId)
                        .map_err(|e| anyhow!("simulator.spawn_cells: {e} (got \"{tok}\")"))
                })
                .collect::<Result<Vec<_>>>()?;
            sim.spawn_cells = Some(cells);
        }
    }

    let resolved = ResolvedConfig {
        sim,
        origin_lat: file.f64_or("grid.origin_lat", 0.0)?,
        origin_lon: file.f64_or("grid.origin_lon", 0.0)?,
        sla_minutes: file.parse_as::<f64>("allocation.sla_minutes")?,
        rates_file: file.get("demand.rates_file").map(PathBuf::from),
        synthetic_intervals: file.u32_or("synthetic.intervals", 96)?,
        base_fee: file.f64_or("synthetic.base_fee", 12.0)?,
        fee_per_km: file.f64_or("synthetic.fee_per_km", 1.0)?,
    };
    Ok(resolved)
}

/// Builds the predictor from the `[demand]` section; `rates` must already be
/// loaded when the synthetic kind is selected.
pub fn predictor_from(
    file: &ConfigFile,
    rates: Option<BTreeMap<(CellId, CellId), f64>>,
) -> Result<PredictorSpec> {
    let kind = file.get("demand.predictor").unwrap_or("replay_previous");
    match kind {
        "replay_previous" => Ok(PredictorSpec::ReplayPrevious),
        "replay_oracle" => Ok(PredictorSpec::ReplayOracle),
        "synthetic_poisson" => {
            let rates = rates
                .ok_or_else(|| anyhow!("demand.predictor = synthetic_poisson requires demand.rates_file"))?;
            Ok(PredictorSpec::SyntheticPoisson(PoissonParams {
                rates,
                lunch_multiplier: file.f64_or("demand.lunch_multiplier", 3.0)?,
                dinner_multiplier: file.f64_or("demand.dinner_multiplier", 2.5)?,
                seed: file.u64_or("demand.seed", 0)?,
                expected_counts: file.bool_or("demand.expected_counts", false)?,
                open_hour: file.u32_or("demand.open_hour", 0)?,
            }))
        }
        other => bail!("unknown demand.predictor \"{other}\""),
    }
}

/// Deterministic echo of the fully-resolved configuration.
pub fn manifest_echo(
    config: &ResolvedConfig,
    predictor_kind: &str,
    inputs: &[(&str, String)],
) -> String {
    let mut out = String::new();
    let sim = &config.sim;
    for (key, value) in inputs {
        let _ = writeln!(out, "input.{key} = {value}");
    }
    let _ = writeln!(out, "grid.rows = {}", sim.rows);
    let _ = writeln!(out, "grid.cols = {}", sim.cols);
    let _ = writeln!(out, "grid.cell_size_km = {}", sim.cell_size_km);
    let _ = writeln!(out, "grid.origin_lat = {}", config.origin_lat);
    let _ = writeln!(out, "grid.origin_lon = {}", config.origin_lon);
    let _ = writeln!(out, "demand.predictor = {predictor_kind}");
    let _ = writeln!(out, "demand.prediction_horizon = {}", sim.prediction_horizon);
    let _ = writeln!(out, "routing.relocation_distance_km = {}", sim.relocation_distance_km);
    let _ = writeln!(out, "allocation.pickup_threshold_km = {}", sim.pickup_threshold_km);
    let _ = writeln!(out, "allocation.delivery_radius_km = {}", sim.delivery_radius_km);
    let _ = writeln!(out, "allocation.detour_threshold = {}", sim.detour_threshold);
    let _ = writeln!(out, "allocation.cost_scalar = {}", sim.cost_scalar);
    let _ = writeln!(out, "allocation.two_phase = {}", sim.two_phase);
    if let Some(sla) = config.sla_minutes {
        let _ = writeln!(out, "allocation.sla_minutes = {sla} (proxied by distance thresholds)");
    }
    let _ = writeln!(out, "simulator.interval_minutes = {}", sim.interval_minutes);
    let _ = writeln!(out, "simulator.fleet_size = {}", sim.fleet_size);
    let _ = writeln!(out, "simulator.courier_capacity = {}", sim.courier_capacity);
    let _ = writeln!(out, "simulator.speed_km_per_min = {}", sim.speed_km_per_min);
    let _ = writeln!(out, "simulator.max_wait_intervals = {}", sim.max_wait_intervals);
    let _ = writeln!(out, "simulator.reposition_demand_floor = {}", sim.reposition_demand_floor);
    let _ = writeln!(out, "simulator.seed = {}", sim.seed);
    let _ = writeln!(
        out,
        "simulator.exclude_repositioning_cost = {}",
        sim.exclude_repositioning_cost
    );
    if let Some(spawn) = &sim.spawn_cells {
        let cells: Vec<String> = spawn.iter().map(|c| c.0.to_string()).collect();
        let _ = writeln!(out, "simulator.spawn_cells = {}", cells.join(","));
    }
    out
}
