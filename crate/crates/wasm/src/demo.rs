//! Interactive demo operations behind JSON string boundaries so the browser
//! glue stays a thin wrapper and everything here runs host-side in tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use dispatch_core::allocation::{
    allocate, build_allocation_network, AllocationParams, Courier, CourierId, CourierStatus,
    Order, OrderId, Restaurant, RestaurantId,
};
use dispatch_core::demand::{
    gravity_rate_table, predict, PoissonParams, PredictorSpec, TimeInterval,
};
use dispatch_core::netgraph::{
    build_grid, order_subgraph_from_matrix, CellId, DistanceOracle, GraphFamily,
};
use dispatch_core::routing::{
    brute_force_route, greedy_route, marginal_gain_trace, RouteRequest,
};
use dispatch_core::simulator::{
    improvement, run, synthesize_stream, MetricKind, Mode, SyntheticStreamSpec,
};

fn err_json(message: String) -> String {
    serde_json::json!({ "error": message }).to_string()
}

fn centers_or_default(centers: &[(u32, f64)], cells: u32) -> Vec<(CellId, f64)> {
    if centers.is_empty() {
        vec![(CellId(cells / 3), 1.0), (CellId(cells - 1 - cells / 4), 0.8)]
    } else {
        centers.iter().map(|&(c, w)| (CellId(c), w)).collect()
    }
}

// ---------------------------------------------------------------------------
// Route explorer
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct RouteParams {
    #[serde(default = "default_dim")]
    rows: u32,
    #[serde(default = "default_dim")]
    cols: u32,
    #[serde(default = "default_cell_size")]
    cell_size_km: f64,
    start_cell: u32,
    #[serde(default = "default_budget")]
    max_distance_km: f64,
    #[serde(default)]
    centers: Vec<(u32, f64)>,
    #[serde(default = "default_rate")]
    total_rate: f64,
}

fn default_dim() -> u32 {
    8
}
fn default_cell_size() -> f64 {
    1.0
}
fn default_budget() -> f64 {
    5.0
}
fn default_rate() -> f64 {
    30.0
}

#[derive(Serialize)]
struct RouteCell {
    cell: u32,
    row: u32,
    col: u32,
    outgoing_demand: f64,
}

#[derive(Serialize)]
struct RouteStep {
    from: u32,
    to: u32,
    gain: f64,
}

#[derive(Serialize)]
struct RouteOutput {
    rows: u32,
    cols: u32,
    cells: Vec<RouteCell>,
    route: Vec<u32>,
    trace: Vec<RouteStep>,
    distance_km: f64,
    objective: f64,
    oracle_objective: Option<f64>,
}

/// Greedy repositioning route over a gravity demand field, with the
/// exhaustive optimum alongside on small grids.
pub fn route_demo(params_json: &str) -> String {
    let params: RouteParams = match serde_json::from_str(params_json) {
        Ok(p) => p,
        Err(e) => return err_json(format!("bad params: {e}")),
    };
    match route_demo_inner(&params) {
        Ok(out) => serde_json::to_string(&out).unwrap_or_else(|e| err_json(e.to_string())),
        Err(message) => err_json(message),
    }
}

fn route_demo_inner(params: &RouteParams) -> Result<RouteOutput, String> {
    let (grid, dist) = build_grid(params.rows, params.cols, params.cell_size_km)
        .map_err(|e| e.to_string())?;
    let oracle = DistanceOracle::new(&dist);
    let cells = grid.cell_count();
    let centers = centers_or_default(&params.centers, cells);
    let rates = gravity_rate_table(
        &oracle,
        &centers,
        2.0 * params.cell_size_km,
        2.5 * params.cell_size_km,
        5.0 * params.cell_size_km,
        params.total_rate,
        1e-6,
    );
    let interval = TimeInterval::new(48, 15).map_err(|e| e.to_string())?;
    let matrix = predict(
        &PredictorSpec::SyntheticPoisson(PoissonParams {
            rates,
            lunch_multiplier: 1.0,
            dinner_multiplier: 1.0,
            seed: 0,
            expected_counts: true,
            open_hour: 0,
        }),
        &[],
        interval,
    )
    .map_err(|e| e.to_string())?;
    let orders = order_subgraph_from_matrix(&matrix, cells).map_err(|e| e.to_string())?;
    let family = GraphFamily::new(grid, dist, orders).map_err(|e| e.to_string())?;

    let req = RouteRequest::new(CellId(params.start_cell), params.max_distance_km)
        .map_err(|e| e.to_string())?;
    let path = greedy_route(&family, &req).map_err(|e| e.to_string())?;
    let trace = marginal_gain_trace(&family, &req).map_err(|e| e.to_string())?;
    let oracle_objective = if cells <= 16 {
        Some(
            brute_force_route(&family, &req)
                .map_err(|e| e.to_string())?
                .objective_value,
        )
    } else {
        None
    };

    let cells_out = (0..cells)
        .map(|c| {
            let (row, col) = family.grid.coords(CellId(c)).expect("cell in range");
            RouteCell {
                cell: c,
                row,
                col,
                outgoing_demand: family.orders.outgoing_demand(CellId(c)),
            }
        })
        .collect();
    Ok(RouteOutput {
        rows: params.rows,
        cols: params.cols,
        cells: cells_out,
        route: path.vertices.iter().map(|v| v.0).collect(),
        trace: trace
            .iter()
            .map(|&((from, to), gain)| RouteStep { from: from.0, to: to.0, gain })
            .collect(),
        distance_km: path.cumulative_distance_km,
        objective: path.objective_value,
        oracle_objective,
    })
}

// ---------------------------------------------------------------------------
// Allocation explorer
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct AllocationParamsIn {
    #[serde(default = "default_dim")]
    rows: u32,
    #[serde(default = "default_dim")]
    cols: u32,
    #[serde(default = "default_cell_size")]
    cell_size_km: f64,
    #[serde(default = "default_couriers")]
    couriers: u32,
    #[serde(default = "default_restaurants")]
    restaurants: u32,
    #[serde(default = "default_orders")]
    orders: u32,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_capacity")]
    capacity: u32,
    #[serde(default = "default_pickup")]
    pickup_threshold_km: f64,
    #[serde(default = "default_radius")]
    delivery_radius_km: f64,
    #[serde(default = "default_detour")]
    detour_threshold: f64,
}

fn default_couriers() -> u32 {
    4
}
fn default_restaurants() -> u32 {
    3
}
fn default_orders() -> u32 {
    8
}
fn default_capacity() -> u32 {
    2
}
fn default_pickup() -> f64 {
    4.0
}
fn default_radius() -> f64 {
    6.0
}
fn default_detour() -> f64 {
    1.6
}

#[derive(Serialize)]
struct ArcOut {
    src: String,
    dst: String,
    capacity: f64,
    cost: f64,
    flow: f64,
}

#[derive(Serialize)]
struct AssignmentOut {
    courier: u32,
    restaurant: u32,
    orders: Vec<u64>,
    pickup_km: f64,
    route_km: f64,
    fee: f64,
    max_detour_ratio: f64,
}

#[derive(Serialize)]
struct EntityOut {
    id: u64,
    cell: u32,
}

#[derive(Serialize)]
struct OrderOut {
    id: u64,
    restaurant: u32,
    dropoff: u32,
    fee: f64,
}

#[derive(Serialize)]
struct AllocationOutput {
    rows: u32,
    cols: u32,
    couriers: Vec<EntityOut>,
    restaurants: Vec<EntityOut>,
    orders: Vec<OrderOut>,
    arcs: Vec<ArcOut>,
    assignments: Vec<AssignmentOut>,
    unassigned: Vec<u64>,
    assigned_count: usize,
    total_fee: f64,
}

/// Seeded random snapshot allocated through the three-layer flow network.
pub fn allocation_demo(params_json: &str) -> String {
    let params: AllocationParamsIn = match serde_json::from_str(params_json) {
        Ok(p) => p,
        Err(e) => return err_json(format!("bad params: {e}")),
    };
    match allocation_demo_inner(&params) {
        Ok(out) => serde_json::to_string(&out).unwrap_or_else(|e| err_json(e.to_string())),
        Err(message) => err_json(message),
    }
}

fn allocation_demo_inner(params: &AllocationParamsIn) -> Result<AllocationOutput, String> {
    use rand::{Rng, SeedableRng};
    let (grid, dist) = build_grid(params.rows, params.cols, params.cell_size_km)
        .map_err(|e| e.to_string())?;
    let oracle = DistanceOracle::new(&dist);
    let cells = grid.cell_count();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(17));

    let couriers: Vec<Courier> = (0..params.couriers.max(1))
        .map(|k| Courier {
            id: CourierId(k),
            location: CellId(rng.gen_range(0..cells)),
            capacity: params.capacity.max(1),
            status: CourierStatus::Idle,
        })
        .collect();
    let restaurants: Vec<Restaurant> = (0..params.restaurants.max(1))
        .map(|k| Restaurant { id: RestaurantId(k), cell: CellId(rng.gen_range(0..cells)) })
        .collect();
    let interval = TimeInterval::new(0, 15).map_err(|e| e.to_string())?;
    let orders: Vec<Order> = (0..params.orders)
        .map(|k| {
            let restaurant = &restaurants[rng.gen_range(0..restaurants.len())];
            Order {
                id: OrderId(k as u64),
                restaurant_id: restaurant.id,
                dropoff: CellId(rng.gen_range(0..cells)),
                fee: rng.gen_range(8..25) as f64,
                placed_at: interval,
                delivered_at: None,
            }
        })
        .collect();

    let alloc_params = AllocationParams {
        pickup_threshold_km: params.pickup_threshold_km,
        delivery_radius_km: params.delivery_radius_km,
        detour_threshold: params.detour_threshold,
        cost_scalar: 1.0,
        two_phase: false,
    };
    let mut build =
        build_allocation_network(&oracle, &couriers, &restaurants, &orders, &alloc_params)
            .map_err(|e| e.to_string())?;
    let plan = allocate(&mut build, &oracle, &alloc_params).map_err(|e| e.to_string())?;

    let arcs = build
        .network
        .arcs()
        .map(|(_, a)| ArcOut {
            src: build.network.label(a.src).to_string(),
            dst: build.network.label(a.dst).to_string(),
            capacity: a.capacity,
            cost: a.unit_cost,
            flow: a.flow,
        })
        .collect();
    let assignments: Vec<AssignmentOut> = plan
        .assignments
        .iter()
        .map(|a| AssignmentOut {
            courier: a.courier_id.0,
            restaurant: a.batch.restaurant_id.0,
            orders: a.batch.orders.iter().map(|o| o.0).collect(),
            pickup_km: a.pickup_distance_km,
            route_km: a.route_distance_km,
            fee: a.total_fee,
            max_detour_ratio: a.batch.max_detour_ratio,
        })
        .collect();
    let total_fee = assignments.iter().map(|a| a.fee).sum();
    Ok(AllocationOutput {
        rows: params.rows,
        cols: params.cols,
        couriers: couriers
            .iter()
            .map(|c| EntityOut { id: c.id.0 as u64, cell: c.location.0 })
            .collect(),
        restaurants: restaurants
            .iter()
            .map(|r| EntityOut { id: r.id.0 as u64, cell: r.cell.0 })
            .collect(),
        orders: orders
            .iter()
            .map(|o| OrderOut {
                id: o.id.0,
                restaurant: o.restaurant_id.0,
                dropoff: o.dropoff.0,
                fee: o.fee,
            })
            .collect(),
        arcs,
        assigned_count: plan.assigned_order_count(),
        assignments,
        unassigned: plan.unassigned_orders.iter().map(|o| o.0).collect(),
        total_fee,
    })
}

// ---------------------------------------------------------------------------
// Simulation comparison
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct SimulateParams {
    #[serde(default = "default_dim")]
    rows: u32,
    #[serde(default = "default_dim")]
    cols: u32,
    #[serde(default = "default_fleet")]
    fleet: u32,
    #[serde(default = "default_intervals")]
    intervals: u32,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_capacity")]
    capacity: u32,
    #[serde(default = "default_budget")]
    relocation_km: f64,
    #[serde(default = "default_sim_rate")]
    total_rate: f64,
}

fn default_fleet() -> u32 {
    8
}
fn default_intervals() -> u32 {
    24
}
fn default_sim_rate() -> f64 {
    6.0
}

#[derive(Serialize)]
struct SeriesPoint {
    interval: u32,
    served: u64,
    profit: f64,
}

#[derive(Serialize)]
struct ModeOutput {
    name: String,
    vehicle_count: u32,
    delivered: u64,
    assigned: u64,
    expired: u64,
    profit: f64,
    mean_service_minutes: f64,
    series: Vec<SeriesPoint>,
}

#[derive(Serialize)]
struct ImprovementOut {
    baseline: String,
    efficiency_pct: Option<f64>,
    profit_pct: Option<f64>,
    service_time_pct: Option<f64>,
}

#[derive(Serialize)]
struct SimulateOutput {
    total_orders: usize,
    modes: Vec<ModeOutput>,
    improvements: Vec<ImprovementOut>,
}

/// Runs the full pipeline against both baselines on one seeded stream.
pub fn simulate_demo(params_json: &str) -> String {
    let params: SimulateParams = match serde_json::from_str(params_json) {
        Ok(p) => p,
        Err(e) => return err_json(format!("bad params: {e}")),
    };
    match simulate_demo_inner(&params) {
        Ok(out) => serde_json::to_string(&out).unwrap_or_else(|e| err_json(e.to_string())),
        Err(message) => err_json(message),
    }
}

fn simulate_demo_inner(params: &SimulateParams) -> Result<SimulateOutput, String> {
    let mut config = dispatch_core::simulator::SimConfig::new(
        params.rows,
        params.cols,
        params.fleet.max(1),
    );
    config.cell_size_km = 1.0;
    config.courier_capacity = params.capacity.max(1);
    config.relocation_distance_km = params.relocation_km.max(1.0);
    config.pickup_threshold_km = 4.0;
    config.delivery_radius_km = 6.0;
    config.detour_threshold = 1.6;
    config.speed_km_per_min = 0.6;
    config.seed = params.seed.wrapping_add(100);
    config.reposition_demand_floor = 0.3;

    let (_, dist) = build_grid(params.rows, params.cols, config.cell_size_km)
        .map_err(|e| e.to_string())?;
    let oracle = DistanceOracle::new(&dist);
    let cells = params.rows * params.cols;
    let centers = centers_or_default(&[], cells);
    let rates = gravity_rate_table(&oracle, &centers, 2.0, 2.0, 4.0, params.total_rate, 1e-5);
    config.predictor = PredictorSpec::SyntheticPoisson(PoissonParams {
        rates: rates.clone(),
        lunch_multiplier: 2.0,
        dinner_multiplier: 2.0,
        seed: 0,
        expected_counts: true,
        open_hour: 0,
    });
    let stream = synthesize_stream(
        &oracle,
        config.interval_minutes,
        &SyntheticStreamSpec {
            poisson: PoissonParams {
                rates,
                lunch_multiplier: 2.0,
                dinner_multiplier: 2.0,
                seed: params.seed.wrapping_add(7),
                expected_counts: false,
                open_hour: 0,
            },
            intervals: params.intervals.clamp(4, 96),
            base_fee: 10.0,
            fee_per_km: 1.0,
        },
    )
    .map_err(|e| e.to_string())?;

    let mut by_mode: BTreeMap<&str, dispatch_core::simulator::MetricsReport> = BTreeMap::new();
    let mut modes_out = Vec::new();
    for mode in [Mode::Proposed, Mode::Greedy, Mode::Bundling] {
        let report = run(&config, &stream, mode).map_err(|e| e.to_string())?;
        modes_out.push(ModeOutput {
            name: mode.name().to_string(),
            vehicle_count: report.vehicle_count,
            delivered: report.efficiency_delivered,
            assigned: report.efficiency_assigned,
            expired: report.expired_orders,
            profit: report.profit,
            mean_service_minutes: report.mean_service_time_minutes,
            series: report
                .per_interval
                .iter()
                .map(|row| SeriesPoint {
                    interval: row.interval,
                    served: row.orders_delivered,
                    profit: row.profit,
                })
                .collect(),
        });
        by_mode.insert(mode.name(), report);
    }
    let proposed = &by_mode["proposed"];
    let improvements = ["greedy", "bundling"]
        .into_iter()
        .map(|name| {
            let baseline = &by_mode[name];
            ImprovementOut {
                baseline: name.to_string(),
                efficiency_pct: improvement(
                    MetricKind::Efficiency,
                    baseline.efficiency_delivered as f64,
                    proposed.efficiency_delivered as f64,
                ),
                profit_pct: improvement(MetricKind::Profit, baseline.profit, proposed.profit),
                service_time_pct: improvement(
                    MetricKind::ServiceTime,
                    baseline.mean_service_time_minutes,
                    proposed.mean_service_time_minutes,
                ),
            }
        })
        .collect();
    Ok(SimulateOutput { total_orders: stream.total_orders(), modes: modes_out, improvements })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn route_demo_round_trips_and_respects_budget() {
        let out = route_demo(r#"{"start_cell": 0, "max_distance_km": 3.0, "rows": 4, "cols": 4}"#);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v.get("error").is_none(), "{out}");
        assert!(v["distance_km"].as_f64().unwrap() <= 3.0);
        assert!(!v["route"].as_array().unwrap().is_empty());
        assert_eq!(v["cells"].as_array().unwrap().len(), 16);
        // 16 cells -> the exhaustive oracle runs and dominates.
        let oracle = v["oracle_objective"].as_f64().unwrap();
        assert!(v["objective"].as_f64().unwrap() <= oracle + 1e-9);
    }

    #[test]
    fn route_demo_rejects_garbage() {
        let out = route_demo("not json");
        assert!(out.contains("error"));
        let out = route_demo(r#"{"start_cell": 999}"#);
        assert!(out.contains("error"), "{out}");
    }

    #[test]
    fn allocation_demo_is_deterministic_and_balanced() {
        let params = r#"{"seed": 3, "orders": 10, "couriers": 4}"#;
        let a = allocation_demo(params);
        let b = allocation_demo(params);
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert!(v.get("error").is_none(), "{a}");
        let assigned = v["assigned_count"].as_u64().unwrap();
        let unassigned = v["unassigned"].as_array().unwrap().len() as u64;
        assert_eq!(assigned + unassigned, 10);
        // Flow on courier arcs never exceeds capacity.
        for arc in v["arcs"].as_array().unwrap() {
            assert!(arc["flow"].as_f64().unwrap() <= arc["capacity"].as_f64().unwrap() + 1e-9);
        }
    }

    #[test]
    fn simulate_demo_reports_three_modes() {
        let out = simulate_demo(r#"{"seed": 5, "intervals": 12, "fleet": 6}"#);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v.get("error").is_none(), "{out}");
        let modes = v["modes"].as_array().unwrap();
        assert_eq!(modes.len(), 3);
        for mode in modes {
            let delivered = mode["delivered"].as_u64().unwrap();
            let assigned = mode["assigned"].as_u64().unwrap();
            assert!(delivered <= assigned);
            assert_eq!(mode["series"].as_array().unwrap().len(), 12);
        }
        assert_eq!(v["improvements"].as_array().unwrap().len(), 2);
    }
}
