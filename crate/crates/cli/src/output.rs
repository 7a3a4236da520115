//! Report and export writers. Every file is deterministic for a fixed seed
//! and inputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use dispatch_core::allocation::{Order, OrderId, RestaurantId};
use dispatch_core::netgraph::{CellId, DistanceOracle};
use dispatch_core::simulator::{improvement, MetricKind, MetricsReport, OrderStream};

pub fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
}

/// Route trace export: `courier_id,step,from_cell,to_cell,gain`.
pub fn route_trace_csv(report: &MetricsReport) -> String {
    let mut out = String::from("courier_id,step,from_cell,to_cell,gain\n");
    for t in &report.route_trace {
        let _ = writeln!(out, "{},{},{},{},{}", t.courier_id, t.step, t.from_cell, t.to_cell, t.gain);
    }
    out
}

/// Plan export:
/// `interval,courier_id,restaurant_id,order_id,seq_in_batch,pickup_km,leg_km,fee`.
pub fn plan_csv(
    report: &MetricsReport,
    stream: &OrderStream,
    oracle: &DistanceOracle,
) -> String {
    let order_by_id: BTreeMap<OrderId, &Order> = stream
        .intervals
        .iter()
        .flatten()
        .map(|o| (o.id, o))
        .collect();
    let cell_of: BTreeMap<RestaurantId, CellId> =
        stream.restaurants.iter().map(|r| (r.id, r.cell)).collect();
    let mut out =
        String::from("interval,courier_id,restaurant_id,order_id,seq_in_batch,pickup_km,leg_km,fee\n");
    for (interval, assignment) in &report.assignment_log {
        let mut from = cell_of[&assignment.batch.restaurant_id];
        for (seq, order_id) in assignment.batch.orders.iter().enumerate() {
            let order = order_by_id[order_id];
            let leg = oracle.distance(from, order.dropoff);
            from = order.dropoff;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                interval,
                assignment.courier_id.0,
                assignment.batch.restaurant_id.0,
                order_id.0,
                seq,
                assignment.pickup_distance_km,
                leg,
                order.fee
            );
        }
    }
    out
}

/// Flow dumps captured per interval, concatenated with section markers.
pub fn flow_dump_text(report: &MetricsReport) -> String {
    let mut out = String::new();
    for (interval, dump) in &report.flow_dumps {
        let _ = writeln!(out, "## interval {interval}");
        out.push_str(dump);
    }
    out
}

/// Improvement table of the proposed run over each baseline.
pub fn improvement_table(proposed: &MetricsReport, baselines: &[&MetricsReport]) -> String {
    let mut out = String::from("metric,baseline,baseline_value,proposed_value,improvement_pct\n");
    let metrics = [
        ("vehicle_count", MetricKind::VehicleCount),
        ("efficiency", MetricKind::Efficiency),
        ("profit", MetricKind::Profit),
        ("service_time", MetricKind::ServiceTime),
    ];
    for baseline in baselines {
        for (name, kind) in metrics {
            let a = baseline.metric(kind);
            let p = proposed.metric(kind);
            let cell = match improvement(kind, a, p) {
                Some(v) => format!("{v:.4}"),
                None => "undefined".to_string(),
            };
            let _ = writeln!(
                out,
                "{name},{},{a:.4},{p:.4},{cell}",
                baseline.mode.name()
            );
        }
    }
    out
}

/// Writes the full per-mode file set into `out_dir`; sweep cells pass a
/// `suffix` to disambiguate their files.
pub fn write_mode_files(
    out_dir: &Path,
    suffix: &str,
    report: &MetricsReport,
    stream: &OrderStream,
    oracle: &DistanceOracle,
    dump_flow: bool,
) -> Result<()> {
    let mode = report.mode.name();
    write(&out_dir.join(format!("report_{mode}{suffix}.txt")), &report.render())?;
    write(&out_dir.join(format!("series_{mode}{suffix}.csv")), &report.series_csv())?;
    write(
        &out_dir.join(format!("plan_{mode}{suffix}.csv")),
        &plan_csv(report, stream, oracle),
    )?;
    if !report.route_trace.is_empty() {
        write(
            &out_dir.join(format!("routes_{mode}{suffix}.csv")),
            &route_trace_csv(report),
        )?;
    }
    if dump_flow && !report.flow_dumps.is_empty() {
        write(
            &out_dir.join(format!("flow_{mode}{suffix}.txt")),
            &flow_dump_text(report),
        )?;
    }
    Ok(())
}
