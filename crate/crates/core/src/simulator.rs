//! Discrete-interval dispatch simulator.
//!
//! Each tick runs the pipeline: predict next demand, reposition idle couriers
//! along greedy routes toward it, materialize realized orders, allocate them
//! through the flow network, then account deliveries, fees, and distances.
//! Baseline dispatchers (nearest-courier greedy and same-restaurant bundling)
//! consume the identical realized order stream for paired comparison.
//!
//! Time model: a global clock in minutes, constant courier speed. A courier
//! assigned work starts when its previous work ends (never before the
//! interval opens); an order's service time is the intervals it waited plus
//! the courier's in-interval start offset plus travel to its drop-off.
//! Orders unassigned after `max_wait_intervals` allocation rounds expire.
//! An assigned order counts as delivered when its drop-off completes within
//! the simulated horizon; both assigned and delivered totals are reported.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::allocation::{
    allocate, build_allocation_network, AllocError, AllocationParams, AllocationPlan,
    Assignment, Batch, Courier, CourierId, CourierStatus, Order, OrderId, Restaurant,
    RestaurantId,
};
use crate::demand::{
    interval_rng, predict, DemandError, DemandMatrix, PoissonParams, PredictorSpec,
    TimeInterval,
};
use crate::netgraph::{
    build_grid, order_subgraph_from_matrix, CellId, DistanceOracle, DistanceSubgraph,
    GraphError, GraphFamily, Grid,
};
use crate::routing::{greedy_route, marginal_gain_trace, RouteError, RouteRequest};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error("order stream: {0}")]
    BadStream(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Proposed,
    Greedy,
    Bundling,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Proposed => "proposed",
            Mode::Greedy => "greedy",
            Mode::Bundling => "bundling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    VehicleCount,
    Efficiency,
    Profit,
    ServiceTime,
}

/// Signed percentage improvement of the proposed value `p` over baseline `a`;
/// service time flips the direction because lower is better. `None` when the
/// proposed value is zero.
pub fn improvement(kind: MetricKind, a: f64, p: f64) -> Option<f64> {
    if p == 0.0 {
        return None;
    }
    Some(match kind {
        MetricKind::ServiceTime => (a - p) / p * 100.0,
        _ => (p - a) / p * 100.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub rows: u32,
    pub cols: u32,
    pub cell_size_km: f64,
    pub interval_minutes: u32,
    /// Relocation budget d_m for repositioning routes.
    pub relocation_distance_km: f64,
    pub courier_capacity: u32,
    pub fleet_size: u32,
    pub pickup_threshold_km: f64,
    pub delivery_radius_km: f64,
    pub detour_threshold: f64,
    /// Cost units per km; shared by allocation arcs and profit accounting.
    pub cost_scalar: f64,
    pub speed_km_per_min: f64,
    pub predictor: PredictorSpec,
    pub seed: u64,
    pub max_wait_intervals: u32,
    /// Idle couriers reposition only when their cell's predicted outgoing
    /// demand falls below this floor.
    pub reposition_demand_floor: f64,
    /// Predict demand this many intervals ahead for repositioning (>= 1).
    pub prediction_horizon: u32,
    pub exclude_repositioning_cost: bool,
    pub two_phase: bool,
    /// Capture a flow-network dump per interval (proposed mode).
    pub capture_flow_dumps: bool,
    /// Cells couriers may start their shift in; `None` = anywhere.
    pub spawn_cells: Option<Vec<CellId>>,
}

impl SimConfig {
    pub fn new(rows: u32, cols: u32, fleet_size: u32) -> Self {
        SimConfig {
            rows,
            cols,
            cell_size_km: 2.0,
            interval_minutes: 15,
            relocation_distance_km: 5.0,
            courier_capacity: 3,
            fleet_size,
            pickup_threshold_km: 6.0,
            delivery_radius_km: 8.0,
            detour_threshold: 1.5,
            cost_scalar: 1.0,
            speed_km_per_min: 0.5,
            predictor: PredictorSpec::ReplayPrevious,
            seed: 0,
            max_wait_intervals: 4,
            reposition_demand_floor: 1.0,
            prediction_horizon: 1,
            exclude_repositioning_cost: false,
            two_phase: false,
            capture_flow_dumps: false,
            spawn_cells: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("cell_size_km", self.cell_size_km),
            ("relocation_distance_km", self.relocation_distance_km),
            ("pickup_threshold_km", self.pickup_threshold_km),
            ("delivery_radius_km", self.delivery_radius_km),
            ("cost_scalar", self.cost_scalar),
            ("speed_km_per_min", self.speed_km_per_min),
        ];
        for (name, v) in positive {
            if v <= 0.0 || !v.is_finite() {
                return Err(SimError::InvalidConfig(format!("{name} must be positive (got {v})")));
            }
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(SimError::InvalidConfig("grid dimensions must be positive".into()));
        }
        if self.fleet_size == 0 {
            return Err(SimError::InvalidConfig("fleet_size must be positive".into()));
        }
        if self.courier_capacity == 0 {
            return Err(SimError::InvalidConfig("courier_capacity must be positive".into()));
        }
        if self.detour_threshold < 1.0 {
            return Err(SimError::InvalidConfig("detour_threshold must be >= 1".into()));
        }
        if self.prediction_horizon == 0 {
            return Err(SimError::InvalidConfig("prediction_horizon must be >= 1".into()));
        }
        if self.max_wait_intervals == 0 {
            return Err(SimError::InvalidConfig("max_wait_intervals must be >= 1".into()));
        }
        TimeInterval::new(0, self.interval_minutes)?;
        Ok(())
    }
}

/// Immutable geography shared by every interval of one scenario.
#[derive(Debug, Clone)]
pub struct SimWorld {
    pub grid: Grid,
    pub distance: DistanceSubgraph,
    pub oracle: DistanceOracle,
    pub restaurants: Vec<Restaurant>,
}

impl SimWorld {
    pub fn new(config: &SimConfig, restaurants: Vec<Restaurant>) -> Result<Self, SimError> {
        let (grid, distance) = build_grid(config.rows, config.cols, config.cell_size_km)?;
        Self::with_distance(grid, distance, restaurants)
    }

    /// World over a custom distance subgraph (per-edge weight overrides).
    pub fn with_distance(
        grid: Grid,
        distance: DistanceSubgraph,
        restaurants: Vec<Restaurant>,
    ) -> Result<Self, SimError> {
        for r in &restaurants {
            if !grid.contains(r.cell) {
                return Err(SimError::BadStream(format!(
                    "restaurant {} sits outside the grid",
                    r.id.0
                )));
            }
        }
        let oracle = DistanceOracle::new(&distance);
        Ok(SimWorld { grid, distance, oracle, restaurants })
    }
}

/// Realized orders bucketed by interval; `intervals[k]` holds the orders
/// placed during interval `k` in arrival sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderStream {
    pub restaurants: Vec<Restaurant>,
    pub intervals: Vec<Vec<Order>>,
}

impl OrderStream {
    pub fn total_orders(&self) -> usize {
        self.intervals.iter().map(Vec::len).sum()
    }

    pub fn validate(&self, interval_minutes: u32) -> Result<(), SimError> {
        let known: BTreeMap<RestaurantId, CellId> =
            self.restaurants.iter().map(|r| (r.id, r.cell)).collect();
        let mut seen_ids = std::collections::BTreeSet::new();
        for (k, bucket) in self.intervals.iter().enumerate() {
            for o in bucket {
                if o.placed_at.index as usize != k {
                    return Err(SimError::BadStream(format!(
                        "order {} bucketed at interval {k} but placed at {}",
                        o.id.0, o.placed_at.index
                    )));
                }
                if o.placed_at.length_minutes != interval_minutes {
                    return Err(SimError::BadStream(format!(
                        "order {} uses a {}-minute interval, scenario uses {}",
                        o.id.0, o.placed_at.length_minutes, interval_minutes
                    )));
                }
                if !known.contains_key(&o.restaurant_id) {
                    return Err(SimError::BadStream(format!(
                        "order {} references unknown restaurant {}",
                        o.id.0, o.restaurant_id.0
                    )));
                }
                if !seen_ids.insert(o.id) {
                    return Err(SimError::BadStream(format!("duplicate order id {}", o.id.0)));
                }
            }
        }
        Ok(())
    }
}

/// Parameters for seeded synthetic order streams.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticStreamSpec {
    pub poisson: PoissonParams,
    pub intervals: u32,
    pub base_fee: f64,
    pub fee_per_km: f64,
}

/// Draws a realized order stream from the Poisson spec. Restaurants are one
/// per distinct origin cell in the rate table (id = cell index); fees are
/// base fee plus a per-km component of the direct delivery distance.
pub fn synthesize_stream(
    oracle: &DistanceOracle,
    interval_minutes: u32,
    spec: &SyntheticStreamSpec,
) -> Result<OrderStream, SimError> {
    if spec.base_fee <= 0.0 || spec.fee_per_km < 0.0 {
        return Err(SimError::InvalidConfig(
            "base_fee must be positive and fee_per_km non-negative".into(),
        ));
    }
    let mut origin_cells: Vec<CellId> = spec.poisson.rates.keys().map(|&(o, _)| o).collect();
    origin_cells.sort();
    origin_cells.dedup();
    let restaurants: Vec<Restaurant> = origin_cells
        .iter()
        .map(|&cell| Restaurant { id: RestaurantId(cell.0), cell })
        .collect();

    let predictor = PredictorSpec::SyntheticPoisson(spec.poisson.clone());
    let mut intervals = Vec::with_capacity(spec.intervals as usize);
    let mut next_id = 0u64;
    for k in 0..spec.intervals {
        let interval = TimeInterval::new(k, interval_minutes)?;
        let matrix = predict(&predictor, &[], interval)?;
        let mut bucket = Vec::new();
        for ((from, to), count) in matrix.iter() {
            let d = oracle.distance(from, to);
            if !d.is_finite() {
                continue;
            }
            for _ in 0..(count as u64) {
                bucket.push(Order {
                    id: OrderId(next_id),
                    restaurant_id: RestaurantId(from.0),
                    dropoff: to,
                    fee: spec.base_fee + spec.fee_per_km * d,
                    placed_at: interval,
                    delivered_at: None,
                });
                next_id += 1;
            }
        }
        intervals.push(bucket);
    }
    Ok(OrderStream { restaurants, intervals })
}

#[derive(Debug, Clone)]
struct SimCourier {
    id: CourierId,
    position: CellId,
    busy_until_min: f64,
    status: CourierStatus,
    assignments: u64,
    distance_km: f64,
    repositioning_km: f64,
    /// Last interval this courier repositioned or served (for idle streaks).
    last_active: i64,
}

/// One completed (or in-flight) delivery commitment.
#[derive(Debug, Clone)]
pub struct DeliveryRecord {
    pub order_id: OrderId,
    pub courier_id: CourierId,
    pub fee: f64,
    pub assigned_interval: u32,
    pub placed_interval: u32,
    pub service_minutes: f64,
    pub completion_min: f64,
}

/// One step of a repositioning route, exportable as
/// `courier_id,step,from_cell,to_cell,gain`.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteTraceRecord {
    pub interval: u32,
    pub courier_id: u32,
    pub step: u32,
    pub from_cell: u32,
    pub to_cell: u32,
    pub gain: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioState {
    pub clock: u32,
    couriers: Vec<SimCourier>,
    pending: Vec<Order>,
    history: Vec<DemandMatrix>,
    deliveries: Vec<DeliveryRecord>,
    expired: Vec<OrderId>,
    assignment_log: Vec<(u32, Assignment)>,
    traces: Vec<RouteTraceRecord>,
    flow_dumps: Vec<(u32, String)>,
    total_orders: u64,
}

impl ScenarioState {
    /// Fleet spread over the spawn region (whole grid by default) by the
    /// scenario seed.
    pub fn new(config: &SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let cells = config.rows * config.cols;
        if let Some(spawn) = &config.spawn_cells {
            if spawn.is_empty() {
                return Err(SimError::InvalidConfig("spawn_cells must not be empty".into()));
            }
            if let Some(bad) = spawn.iter().find(|c| c.0 >= cells) {
                return Err(SimError::InvalidConfig(format!(
                    "spawn cell {bad} outside the grid"
                )));
            }
        }
        let mut rng = interval_rng(config.seed, u32::MAX);
        let couriers = (0..config.fleet_size)
            .map(|k| SimCourier {
                id: CourierId(k),
                position: match &config.spawn_cells {
                    Some(spawn) => spawn[rng.gen_range(0..spawn.len())],
                    None => CellId(rng.gen_range(0..cells)),
                },
                busy_until_min: 0.0,
                status: CourierStatus::Idle,
                assignments: 0,
                distance_km: 0.0,
                repositioning_km: 0.0,
                last_active: -2,
            })
            .collect();
        Ok(ScenarioState {
            clock: 0,
            couriers,
            pending: Vec::new(),
            history: Vec::new(),
            deliveries: Vec::new(),
            expired: Vec::new(),
            assignment_log: Vec::new(),
            traces: Vec::new(),
            flow_dumps: Vec::new(),
            total_orders: 0,
        })
    }

    pub fn pending_orders(&self) -> &[Order] {
        &self.pending
    }

    pub fn deliveries(&self) -> &[DeliveryRecord] {
        &self.deliveries
    }
}

/// Per-interval slice of the final report.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMetrics {
    pub interval: u32,
    pub active_vehicles: u32,
    pub orders_assigned: u64,
    pub orders_delivered: u64,
    pub profit: f64,
    pub mean_service_minutes: f64,
}

#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub mode: Mode,
    /// Couriers that performed at least one delivery over the horizon.
    pub vehicle_count: u32,
    /// Orders whose drop-off completed within the horizon.
    pub efficiency_delivered: u64,
    /// Orders assigned to a courier (delivery committed).
    pub efficiency_assigned: u64,
    pub profit: f64,
    pub mean_service_time_minutes: f64,
    pub total_orders: u64,
    pub expired_orders: u64,
    pub pending_at_end: u64,
    pub fees_collected: f64,
    pub total_distance_km: f64,
    pub repositioning_km: f64,
    pub per_interval: Vec<IntervalMetrics>,
    pub route_trace: Vec<RouteTraceRecord>,
    pub flow_dumps: Vec<(u32, String)>,
    /// (interval, assignment) audit log of every applied batch.
    pub assignment_log: Vec<(u32, Assignment)>,
    /// Every delivery commitment with its timing, for audits and exports.
    pub deliveries: Vec<DeliveryRecord>,
}

impl MetricsReport {
    pub fn metric(&self, kind: MetricKind) -> f64 {
        match kind {
            MetricKind::VehicleCount => self.vehicle_count as f64,
            MetricKind::Efficiency => self.efficiency_delivered as f64,
            MetricKind::Profit => self.profit,
            MetricKind::ServiceTime => self.mean_service_time_minutes,
        }
    }

    /// Human-readable report; stable formatting so identical runs render
    /// byte-identically.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("mode: {}\n", self.mode.name()));
        out.push_str(&format!("vehicle_count: {}\n", self.vehicle_count));
        out.push_str(&format!("efficiency_delivered: {}\n", self.efficiency_delivered));
        out.push_str(&format!("efficiency_assigned: {}\n", self.efficiency_assigned));
        out.push_str(&format!("profit: {:.4}\n", self.profit));
        out.push_str(&format!(
            "mean_service_time_minutes: {:.4}\n",
            self.mean_service_time_minutes
        ));
        out.push_str(&format!("total_orders: {}\n", self.total_orders));
        out.push_str(&format!("expired_orders: {}\n", self.expired_orders));
        out.push_str(&format!("pending_at_end: {}\n", self.pending_at_end));
        out.push_str(&format!("fees_collected: {:.4}\n", self.fees_collected));
        out.push_str(&format!("total_distance_km: {:.4}\n", self.total_distance_km));
        out.push_str(&format!("repositioning_km: {:.4}\n", self.repositioning_km));
        out.push_str("interval,vehicle_count,orders_assigned,orders_served,profit,mean_service_minutes\n");
        for row in &self.per_interval {
            out.push_str(&format!(
                "{},{},{},{},{:.4},{:.4}\n",
                row.interval,
                row.active_vehicles,
                row.orders_assigned,
                row.orders_delivered,
                row.profit,
                row.mean_service_minutes
            ));
        }
        out
    }

    /// Machine-readable per-interval series.
    pub fn series_csv(&self) -> String {
        let mut out = String::from("interval,vehicle_count,orders_served,profit,mean_service_minutes\n");
        for row in &self.per_interval {
            out.push_str(&format!(
                "{},{},{},{:.4},{:.4}\n",
                row.interval,
                row.active_vehicles,
                row.orders_delivered,
                row.profit,
                row.mean_service_minutes
            ));
        }
        out
    }
}

fn courier_views(state: &ScenarioState, config: &SimConfig, eligible: &[usize]) -> Vec<Courier> {
    eligible
        .iter()
        .map(|&i| {
            let c = &state.couriers[i];
            Courier {
                id: c.id,
                location: c.position,
                capacity: config.courier_capacity,
                status: c.status,
            }
        })
        .collect()
}

/// Advances one interval: reposition (proposed mode), allocate, account.
/// `realized` must be the orders placed during `state.clock`.
pub fn step(
    state: &mut ScenarioState,
    world: &SimWorld,
    config: &SimConfig,
    mode: Mode,
    realized: &[Order],
) -> Result<IntervalMetrics, SimError> {
    let clock = state.clock;
    let interval = TimeInterval::new(clock, config.interval_minutes)?;
    let interval_start = interval.start_minutes();

    // Realized demand matrix feeds the replay predictors.
    let restaurant_cell: BTreeMap<RestaurantId, CellId> =
        world.restaurants.iter().map(|r| (r.id, r.cell)).collect();
    let mut realized_matrix = DemandMatrix::zeros(interval);
    for o in realized {
        let from = restaurant_cell
            .get(&o.restaurant_id)
            .copied()
            .ok_or_else(|| {
                SimError::BadStream(format!(
                    "order {} references unknown restaurant {}",
                    o.id.0, o.restaurant_id.0
                ))
            })?;
        realized_matrix.accumulate(from, o.dropoff, 1.0)?;
    }
    state.history.push(realized_matrix);

    // Couriers free when the interval opens.
    let eligible: Vec<usize> = (0..state.couriers.len())
        .filter(|&i| state.couriers[i].busy_until_min <= interval_start)
        .collect();
    for &i in &eligible {
        state.couriers[i].status = CourierStatus::Idle;
    }

    if mode == Mode::Proposed {
        let target =
            TimeInterval::new(clock + config.prediction_horizon - 1, config.interval_minutes)?;
        let predicted = predict(&config.predictor, &state.history, target)?;
        let orders_graph = order_subgraph_from_matrix(&predicted, world.grid.cell_count())?;
        let family =
            GraphFamily::new(world.grid.clone(), world.distance.clone(), orders_graph)?;
        for &i in &eligible {
            let here = state.couriers[i].position;
            let local = family.orders.outgoing_demand(here);
            if local >= config.reposition_demand_floor {
                continue;
            }
            let req = RouteRequest::new(here, config.relocation_distance_km)?;
            let route = greedy_route(&family, &req)?;
            // The courier stops at the first demand-rich cell along the
            // recommended route (or the best cell seen, when none clears the
            // floor) rather than walking the full budget past the peak, and
            // moves only on a strict ascent of the predicted demand field.
            // Ascent cannot cycle, so couriers converge to demand-rich cells
            // in a few interval steps and then hold.
            let demands: Vec<f64> = route
                .vertices
                .iter()
                .map(|&v| family.orders.outgoing_demand(v))
                .collect();
            let best_idx = demands
                .iter()
                .position(|&d| d >= config.reposition_demand_floor && d > local)
                .unwrap_or_else(|| {
                    demands
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                        .map(|(idx, _)| idx)
                        .unwrap()
                });
            let dest_demand = demands[best_idx];
            if best_idx == 0 || dest_demand <= local {
                continue;
            }
            let destination = route.vertices[best_idx];
            let walked: f64 = route.vertices[..=best_idx]
                .windows(2)
                .map(|pair| {
                    world
                        .distance
                        .edge_weight(pair[0], pair[1])
                        .expect("route follows distance edges")
                })
                .sum();
            let trace = marginal_gain_trace(&family, &req)?;
            for (step_idx, ((from, to), gain)) in trace.iter().take(best_idx).enumerate() {
                state.traces.push(RouteTraceRecord {
                    interval: clock,
                    courier_id: state.couriers[i].id.0,
                    step: step_idx as u32,
                    from_cell: from.0,
                    to_cell: to.0,
                    gain: *gain,
                });
            }
            let c = &mut state.couriers[i];
            c.position = destination;
            c.busy_until_min = interval_start + walked / config.speed_km_per_min;
            c.status = CourierStatus::Repositioning;
            c.distance_km += walked;
            c.repositioning_km += walked;
            c.last_active = clock as i64;
        }
    }

    // Materialize realized orders.
    state.total_orders += realized.len() as u64;
    state.pending.extend(realized.iter().cloned());
    state.pending.sort_by_key(|o| (o.placed_at.index, o.id));

    let views = courier_views(state, config, &eligible);
    // Restaurants with no pending orders are dead nodes; keep them out.
    let active_ids: std::collections::BTreeSet<RestaurantId> =
        state.pending.iter().map(|o| o.restaurant_id).collect();
    let active_restaurants: Vec<Restaurant> = world
        .restaurants
        .iter()
        .filter(|r| active_ids.contains(&r.id))
        .cloned()
        .collect();
    let plan = match mode {
        Mode::Proposed => {
            let params = AllocationParams {
                pickup_threshold_km: config.pickup_threshold_km,
                delivery_radius_km: config.delivery_radius_km,
                detour_threshold: config.detour_threshold,
                cost_scalar: config.cost_scalar,
                two_phase: config.two_phase,
            };
            let mut build = build_allocation_network(
                &world.oracle,
                &views,
                &active_restaurants,
                &state.pending,
                &params,
            )?;
            let plan = allocate(&mut build, &world.oracle, &params)?;
            if config.capture_flow_dumps {
                state.flow_dumps.push((clock, build.network.dump()));
            }
            plan
        }
        Mode::Greedy => baseline_greedy(
            &views,
            &world.oracle,
            &restaurant_cell,
            &state.pending,
            config.pickup_threshold_km,
        ),
        Mode::Bundling => baseline_bundling(
            &views,
            &world.oracle,
            &restaurant_cell,
            &state.pending,
            config.courier_capacity,
            config.pickup_threshold_km,
        ),
    };

    // Apply the plan: busy times, movement, delivery records.
    let order_by_id: BTreeMap<OrderId, Order> =
        state.pending.iter().map(|o| (o.id, o.clone())).collect();
    let index_of: BTreeMap<CourierId, usize> = state
        .couriers
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id, i))
        .collect();
    let mut assigned_ids: Vec<OrderId> = Vec::new();
    for assignment in &plan.assignments {
        let i = *index_of.get(&assignment.courier_id).ok_or_else(|| {
            SimError::Invariant(format!("plan names unknown courier {}", assignment.courier_id.0))
        })?;
        let speed = config.speed_km_per_min;
        let start = state.couriers[i].busy_until_min.max(interval_start);
        let offset = start - interval_start;
        let r_cell = restaurant_cell[&assignment.batch.restaurant_id];
        let mut travelled = assignment.pickup_distance_km;
        let mut leg_from = r_cell;
        for order_id in &assignment.batch.orders {
            let order = order_by_id.get(order_id).ok_or_else(|| {
                SimError::Invariant(format!("plan names unknown order {}", order_id.0))
            })?;
            travelled += world.oracle.distance(leg_from, order.dropoff);
            leg_from = order.dropoff;
            let travel_minutes = travelled / speed;
            state.deliveries.push(DeliveryRecord {
                order_id: *order_id,
                courier_id: assignment.courier_id,
                fee: order.fee,
                assigned_interval: clock,
                placed_interval: order.placed_at.index,
                service_minutes: (clock - order.placed_at.index) as f64
                    * config.interval_minutes as f64
                    + offset
                    + travel_minutes,
                completion_min: start + travel_minutes,
            });
            assigned_ids.push(*order_id);
        }
        let trip = assignment.pickup_distance_km + assignment.route_distance_km;
        let c = &mut state.couriers[i];
        c.busy_until_min = start + trip / speed;
        c.status = CourierStatus::Delivering;
        c.position = leg_from;
        c.distance_km += trip;
        c.assignments += 1;
        c.last_active = clock as i64;
        state.assignment_log.push((clock, assignment.clone()));
    }
    assigned_ids.sort();
    state
        .pending
        .retain(|o| assigned_ids.binary_search(&o.id).is_err());

    // Expire orders that have exhausted their allocation rounds.
    let max_wait = config.max_wait_intervals;
    let mut expired_now: Vec<OrderId> = Vec::new();
    state.pending.retain(|o| {
        if clock - o.placed_at.index + 1 >= max_wait {
            expired_now.push(o.id);
            false
        } else {
            true
        }
    });
    state.expired.extend(expired_now);

    state.clock += 1;
    Ok(summarize_interval(state, clock, f64::INFINITY))
}

/// Interval metrics row derived from the records of `clock`; deliveries
/// completing after `horizon_end_min` do not count as served.
fn summarize_interval(
    state: &ScenarioState,
    clock: u32,
    horizon_end_min: f64,
) -> IntervalMetrics {
    let rows: Vec<&DeliveryRecord> = state
        .deliveries
        .iter()
        .filter(|d| d.assigned_interval == clock)
        .collect();
    let delivered: Vec<&&DeliveryRecord> = rows
        .iter()
        .filter(|d| d.completion_min <= horizon_end_min)
        .collect();
    let mut vehicles: Vec<CourierId> = rows.iter().map(|d| d.courier_id).collect();
    vehicles.sort();
    vehicles.dedup();
    let fees: f64 = delivered.iter().map(|d| d.fee).sum();
    let mean_service = if delivered.is_empty() {
        0.0
    } else {
        delivered.iter().map(|d| d.service_minutes).sum::<f64>() / delivered.len() as f64
    };
    // The profit column here carries fees only; `run` subtracts the interval's
    // distance cost from courier deltas, since batch legs are shared between
    // orders and cannot be recovered from delivery records alone.
    IntervalMetrics {
        interval: clock,
        active_vehicles: vehicles.len() as u32,
        orders_assigned: rows.len() as u64,
        orders_delivered: delivered.len() as u64,
        profit: fees,
        mean_service_minutes: mean_service,
    }
}

/// Runs the full horizon and assembles the report. Identical config and
/// stream produce identical reports.
pub fn run(config: &SimConfig, stream: &OrderStream, mode: Mode) -> Result<MetricsReport, SimError> {
    config.validate()?;
    stream.validate(config.interval_minutes)?;
    let world = SimWorld::new(config, stream.restaurants.clone())?;
    run_in_world(config, &world, stream, mode)
}

/// As [`run`] but over a prebuilt world (custom distance weights).
pub fn run_in_world(
    config: &SimConfig,
    world: &SimWorld,
    stream: &OrderStream,
    mode: Mode,
) -> Result<MetricsReport, SimError> {
    config.validate()?;
    stream.validate(config.interval_minutes)?;
    let mut state = ScenarioState::new(config)?;
    let horizon_end_min =
        stream.intervals.len() as f64 * config.interval_minutes as f64;

    let mut distance_per_interval: Vec<f64> = Vec::with_capacity(stream.intervals.len());
    let mut reposition_per_interval: Vec<f64> = Vec::with_capacity(stream.intervals.len());
    for bucket in &stream.intervals {
        let before_dist: f64 = state.couriers.iter().map(|c| c.distance_km).sum();
        let before_repo: f64 = state.couriers.iter().map(|c| c.repositioning_km).sum();
        step(&mut state, world, config, mode, bucket)?;
        let after_dist: f64 = state.couriers.iter().map(|c| c.distance_km).sum();
        let after_repo: f64 = state.couriers.iter().map(|c| c.repositioning_km).sum();
        distance_per_interval.push(after_dist - before_dist);
        reposition_per_interval.push(after_repo - before_repo);
    }

    // Conservation: every realized order is assigned, expired, or pending.
    let assigned = state.deliveries.len() as u64;
    let expired = state.expired.len() as u64;
    let pending = state.pending.len() as u64;
    if assigned + expired + pending != state.total_orders {
        return Err(SimError::Invariant(format!(
            "order conservation broken: {assigned} assigned + {expired} expired + {pending} pending != {}",
            state.total_orders
        )));
    }

    let delivered: Vec<&DeliveryRecord> = state
        .deliveries
        .iter()
        .filter(|d| d.completion_min <= horizon_end_min)
        .collect();
    let fees_collected: f64 = delivered.iter().map(|d| d.fee).sum();
    let total_distance: f64 = state.couriers.iter().map(|c| c.distance_km).sum();
    let repositioning: f64 = state.couriers.iter().map(|c| c.repositioning_km).sum();
    let billed_distance = if config.exclude_repositioning_cost {
        total_distance - repositioning
    } else {
        total_distance
    };
    let profit = fees_collected - config.cost_scalar * billed_distance;
    let mean_service = if delivered.is_empty() {
        0.0
    } else {
        delivered.iter().map(|d| d.service_minutes).sum::<f64>() / delivered.len() as f64
    };
    let mut active: Vec<CourierId> = state.deliveries.iter().map(|d| d.courier_id).collect();
    active.sort();
    active.dedup();

    let per_interval: Vec<IntervalMetrics> = (0..stream.intervals.len() as u32)
        .map(|k| {
            let mut row = summarize_interval(&state, k, horizon_end_min);
            let billed = if config.exclude_repositioning_cost {
                distance_per_interval[k as usize] - reposition_per_interval[k as usize]
            } else {
                distance_per_interval[k as usize]
            };
            row.profit -= config.cost_scalar * billed;
            row
        })
        .collect();

    Ok(MetricsReport {
        mode,
        vehicle_count: active.len() as u32,
        efficiency_delivered: delivered.len() as u64,
        efficiency_assigned: assigned,
        profit,
        mean_service_time_minutes: mean_service,
        total_orders: state.total_orders,
        expired_orders: expired,
        pending_at_end: pending,
        fees_collected,
        total_distance_km: total_distance,
        repositioning_km: repositioning,
        per_interval,
        route_trace: state.traces.clone(),
        flow_dumps: state.flow_dumps.clone(),
        assignment_log: state.assignment_log.clone(),
        deliveries: state.deliveries.clone(),
    })
}

/// Nearest-available-courier baseline: orders in arrival sequence each go to
/// the closest courier with remaining capacity inside the pickup threshold;
/// every trip carries one order; no repositioning.
pub fn baseline_greedy(
    couriers: &[Courier],
    oracle: &DistanceOracle,
    restaurant_cell: &BTreeMap<RestaurantId, CellId>,
    pending: &[Order],
    pickup_threshold_km: f64,
) -> AllocationPlan {
    // Matching uses interval-start positions (the dispatcher's snapshot);
    // trips still execute sequentially, so pickup distances chain.
    let matching_pos: BTreeMap<CourierId, CellId> =
        couriers.iter().map(|c| (c.id, c.location)).collect();
    let mut position: BTreeMap<CourierId, CellId> =
        couriers.iter().map(|c| (c.id, c.location)).collect();
    let mut remaining: BTreeMap<CourierId, u32> =
        couriers.iter().map(|c| (c.id, c.capacity)).collect();
    let mut assignments: Vec<Assignment> = Vec::new();
    let mut unassigned: Vec<OrderId> = Vec::new();
    for order in pending {
        let r_cell = match restaurant_cell.get(&order.restaurant_id) {
            Some(&cell) => cell,
            None => {
                unassigned.push(order.id);
                continue;
            }
        };
        let pick = couriers
            .iter()
            .filter(|c| remaining[&c.id] > 0)
            .filter(|c| oracle.distance(matching_pos[&c.id], r_cell) <= pickup_threshold_km)
            .min_by(|a, b| {
                oracle
                    .distance(matching_pos[&a.id], r_cell)
                    .total_cmp(&oracle.distance(matching_pos[&b.id], r_cell))
                    .then(a.id.cmp(&b.id))
            });
        match pick {
            Some(c) => {
                let pickup = oracle.distance(position[&c.id], r_cell);
                let leg = oracle.distance(r_cell, order.dropoff);
                if !leg.is_finite() {
                    unassigned.push(order.id);
                    continue;
                }
                assignments.push(Assignment {
                    courier_id: c.id,
                    batch: Batch {
                        restaurant_id: order.restaurant_id,
                        orders: vec![order.id],
                        max_detour_ratio: 1.0,
                    },
                    pickup_distance_km: pickup,
                    route_distance_km: leg,
                    total_fee: order.fee,
                });
                position.insert(c.id, order.dropoff);
                *remaining.get_mut(&c.id).unwrap() -= 1;
            }
            None => unassigned.push(order.id),
        }
    }
    AllocationPlan { assignments, unassigned_orders: unassigned }
}

/// Order-bundling baseline: same-restaurant orders chunked into
/// capacity-bounded bundles in arrival order (no detour filter), each bundle
/// handed to the nearest courier inside the pickup threshold that can still
/// take it whole; no repositioning. With capacity 1 this reduces exactly to
/// [`baseline_greedy`].
pub fn baseline_bundling(
    couriers: &[Courier],
    oracle: &DistanceOracle,
    restaurant_cell: &BTreeMap<RestaurantId, CellId>,
    pending: &[Order],
    capacity: u32,
    pickup_threshold_km: f64,
) -> AllocationPlan {
    // Chunk per restaurant in arrival order.
    let mut by_restaurant: BTreeMap<RestaurantId, Vec<&Order>> = BTreeMap::new();
    for order in pending {
        by_restaurant.entry(order.restaurant_id).or_default().push(order);
    }
    let mut bundles: Vec<Vec<&Order>> = Vec::new();
    for (_, orders) in by_restaurant {
        for chunk in orders.chunks(capacity.max(1) as usize) {
            bundles.push(chunk.to_vec());
        }
    }
    // Bundles processed in the arrival sequence of their first member.
    bundles.sort_by_key(|b| (b[0].placed_at.index, b[0].id));

    let matching_pos: BTreeMap<CourierId, CellId> =
        couriers.iter().map(|c| (c.id, c.location)).collect();
    let mut position: BTreeMap<CourierId, CellId> =
        couriers.iter().map(|c| (c.id, c.location)).collect();
    let mut remaining: BTreeMap<CourierId, u32> =
        couriers.iter().map(|c| (c.id, c.capacity)).collect();
    let mut assignments: Vec<Assignment> = Vec::new();
    let mut unassigned: Vec<OrderId> = Vec::new();
    for bundle in bundles {
        let restaurant_id = bundle[0].restaurant_id;
        let r_cell = match restaurant_cell.get(&restaurant_id) {
            Some(&cell) => cell,
            None => {
                unassigned.extend(bundle.iter().map(|o| o.id));
                continue;
            }
        };
        let size = bundle.len() as u32;
        let pick = couriers
            .iter()
            .filter(|c| remaining[&c.id] >= size)
            .filter(|c| oracle.distance(matching_pos[&c.id], r_cell) <= pickup_threshold_km)
            .min_by(|a, b| {
                oracle
                    .distance(matching_pos[&a.id], r_cell)
                    .total_cmp(&oracle.distance(matching_pos[&b.id], r_cell))
                    .then(a.id.cmp(&b.id))
            });
        match pick {
            Some(c) => {
                // Drop-offs visited in arrival order (no re-sequencing).
                let mut route = 0.0;
                let mut here = r_cell;
                let mut reachable = true;
                for o in &bundle {
                    let leg = oracle.distance(here, o.dropoff);
                    if !leg.is_finite() {
                        reachable = false;
                        break;
                    }
                    route += leg;
                    here = o.dropoff;
                }
                if !reachable {
                    unassigned.extend(bundle.iter().map(|o| o.id));
                    continue;
                }
                let pickup = oracle.distance(position[&c.id], r_cell);
                assignments.push(Assignment {
                    courier_id: c.id,
                    batch: Batch {
                        restaurant_id,
                        orders: bundle.iter().map(|o| o.id).collect(),
                        max_detour_ratio: 1.0,
                    },
                    pickup_distance_km: pickup,
                    route_distance_km: route,
                    total_fee: bundle.iter().map(|o| o.fee).sum(),
                });
                position.insert(c.id, here);
                *remaining.get_mut(&c.id).unwrap() -= size;
            }
            None => unassigned.extend(bundle.iter().map(|o| o.id)),
        }
    }
    AllocationPlan { assignments, unassigned_orders: unassigned }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap as Map;

    fn tiny_config() -> SimConfig {
        let mut config = SimConfig::new(3, 3, 2);
        config.cell_size_km = 1.0;
        config.pickup_threshold_km = 4.0;
        config.delivery_radius_km = 4.0;
        config.relocation_distance_km = 2.0;
        config.speed_km_per_min = 1.0;
        config.seed = 11;
        config
    }

    fn order_at(id: u64, restaurant: u32, dropoff: u32, fee: f64, k: u32) -> Order {
        Order {
            id: OrderId(id),
            restaurant_id: RestaurantId(restaurant),
            dropoff: CellId(dropoff),
            fee,
            placed_at: TimeInterval::new(k, 15).unwrap(),
            delivered_at: None,
        }
    }

    fn restaurants() -> Vec<Restaurant> {
        vec![Restaurant { id: RestaurantId(0), cell: CellId(4) }]
    }

    #[test]
    fn zero_demand_horizon_serves_nothing() {
        let config = tiny_config();
        let stream = OrderStream {
            restaurants: restaurants(),
            intervals: vec![vec![], vec![], vec![]],
        };
        let report = run(&config, &stream, Mode::Proposed).unwrap();
        assert_eq!(report.efficiency_delivered, 0);
        assert_eq!(report.vehicle_count, 0);
        assert!(report.profit <= 0.0);
        assert_eq!(report.total_orders, 0);
    }

    #[test]
    fn single_order_profit_and_service_time_hand_computed() {
        let mut config = tiny_config();
        config.fleet_size = 1;
        config.courier_capacity = 1;
        // Zero prediction floor keeps the courier in place.
        config.reposition_demand_floor = 0.0;
        let stream = OrderStream {
            restaurants: restaurants(),
            intervals: vec![vec![order_at(0, 0, 5, 20.0, 0)]],
        };
        let report = run(&config, &stream, Mode::Proposed).unwrap();
        assert_eq!(report.efficiency_assigned, 1);
        assert_eq!(report.efficiency_delivered, 1);
        // Courier seeded somewhere on the 3x3 grid; pickup distance is its
        // cell-to-restaurant distance, the leg is 4 -> 5 (1 km).
        let (_, dist) = build_grid(3, 3, 1.0).unwrap();
        let oracle = DistanceOracle::new(&dist);
        let mut rng = interval_rng(config.seed, u32::MAX);
        let start = CellId(rng.gen_range(0..9));
        let pickup = oracle.distance(start, CellId(4));
        let leg = 1.0;
        let expected_profit = 20.0 - config.cost_scalar * (pickup + leg);
        assert!((report.profit - expected_profit).abs() < 1e-9);
        // Service time: assigned in its placement interval, courier idle, so
        // it is pure travel at 1 km/min.
        assert!((report.mean_service_time_minutes - (pickup + leg)).abs() < 1e-9);
    }

    #[test]
    fn profit_identity_reconciles() {
        let mut config = tiny_config();
        config.seed = 3;
        let stream = OrderStream {
            restaurants: restaurants(),
            intervals: vec![
                vec![order_at(0, 0, 1, 10.0, 0), order_at(1, 0, 7, 12.0, 0)],
                vec![order_at(2, 0, 3, 8.0, 1)],
                vec![],
            ],
        };
        for mode in [Mode::Proposed, Mode::Greedy, Mode::Bundling] {
            let report = run(&config, &stream, mode).unwrap();
            let expected =
                report.fees_collected - config.cost_scalar * report.total_distance_km;
            assert!((report.profit - expected).abs() < 1e-9, "{mode:?}");
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let config = tiny_config();
        let stream = OrderStream {
            restaurants: restaurants(),
            intervals: vec![
                vec![order_at(0, 0, 1, 10.0, 0), order_at(1, 0, 2, 10.0, 0)],
                vec![order_at(2, 0, 8, 9.0, 1)],
            ],
        };
        for mode in [Mode::Proposed, Mode::Greedy, Mode::Bundling] {
            let a = run(&config, &stream, mode).unwrap();
            let b = run(&config, &stream, mode).unwrap();
            assert_eq!(a.render(), b.render());
            assert_eq!(a.series_csv(), b.series_csv());
        }
    }

    #[test]
    fn unassignable_orders_expire_after_max_wait() {
        let mut config = tiny_config();
        config.fleet_size = 1;
        config.max_wait_intervals = 2;
        // Pickup threshold of 0.0 is invalid; use a tiny one instead and park
        // the restaurant far from the only courier cell by shrinking reach.
        config.pickup_threshold_km = 0.5;
        config.cell_size_km = 1.0;
        let stream = OrderStream {
            restaurants: vec![Restaurant { id: RestaurantId(0), cell: CellId(8) }],
            intervals: vec![vec![order_at(0, 0, 0, 10.0, 0)], vec![], vec![]],
        };
        let report = run(&config, &stream, Mode::Proposed).unwrap();
        // The lone courier is seeded at some cell; unless it happens to sit
        // on the restaurant cell the order can never be picked up.
        if report.efficiency_assigned == 0 {
            assert_eq!(report.expired_orders, 1);
            assert_eq!(report.pending_at_end, 0);
        }
        assert_eq!(
            report.efficiency_assigned + report.expired_orders + report.pending_at_end,
            1
        );
    }

    #[test]
    fn improvement_formula_examples() {
        assert_eq!(improvement(MetricKind::ServiceTime, 12.0, 10.0), Some(20.0));
        assert_eq!(improvement(MetricKind::Profit, 5.0, 5.0), Some(0.0));
        assert_eq!(improvement(MetricKind::Efficiency, 80.0, 100.0), Some(20.0));
        assert_eq!(improvement(MetricKind::Efficiency, 80.0, 0.0), None);
    }

    fn idle_courier(id: u32, cell: u32, capacity: u32) -> Courier {
        Courier {
            id: CourierId(id),
            location: CellId(cell),
            capacity,
            status: CourierStatus::Idle,
        }
    }

    #[test]
    fn greedy_baseline_picks_nearest_courier() {
        let (_, dist) = build_grid(1, 6, 1.0).unwrap();
        let oracle = DistanceOracle::new(&dist);
        let couriers = vec![idle_courier(0, 0, 1), idle_courier(1, 4, 1)];
        let cells: Map<RestaurantId, CellId> = [(RestaurantId(0), CellId(3))].into();
        let pending = vec![order_at(0, 0, 5, 10.0, 0)];
        let plan = baseline_greedy(&couriers, &oracle, &cells, &pending, 99.0);
        assert_eq!(plan.assignments.len(), 1);
        assert_eq!(plan.assignments[0].courier_id, CourierId(1));
    }

    #[test]
    fn greedy_baseline_queues_when_no_courier_free() {
        let (_, dist) = build_grid(1, 4, 1.0).unwrap();
        let oracle = DistanceOracle::new(&dist);
        let couriers = vec![idle_courier(0, 0, 1)];
        let cells: Map<RestaurantId, CellId> = [(RestaurantId(0), CellId(1))].into();
        let pending = vec![order_at(0, 0, 2, 10.0, 0), order_at(1, 0, 3, 10.0, 0)];
        let plan = baseline_greedy(&couriers, &oracle, &cells, &pending, 99.0);
        assert_eq!(plan.assignments.len(), 1);
        assert_eq!(plan.unassigned_orders, vec![OrderId(1)]);
    }

    #[test]
    fn bundles_never_mix_restaurants() {
        let (_, dist) = build_grid(2, 3, 1.0).unwrap();
        let oracle = DistanceOracle::new(&dist);
        let couriers = vec![idle_courier(0, 0, 3), idle_courier(1, 5, 3)];
        let cells: Map<RestaurantId, CellId> =
            [(RestaurantId(0), CellId(1)), (RestaurantId(1), CellId(4))].into();
        let pending = vec![
            order_at(0, 0, 2, 10.0, 0),
            order_at(1, 1, 3, 10.0, 0),
            order_at(2, 0, 5, 10.0, 0),
        ];
        let plan = baseline_bundling(&couriers, &oracle, &cells, &pending, 3, 99.0);
        for a in &plan.assignments {
            let r = a.batch.restaurant_id;
            assert!(a.batch.orders.iter().all(|id| {
                pending.iter().find(|o| o.id == *id).unwrap().restaurant_id == r
            }));
        }
        // Two same-restaurant orders share one bundle.
        assert!(plan
            .assignments
            .iter()
            .any(|a| a.batch.orders == vec![OrderId(0), OrderId(2)]));
    }

    #[test]
    fn bundling_with_capacity_one_equals_greedy() {
        use rand::{Rng, SeedableRng};
        for seed in 0..10u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (_, dist) = build_grid(3, 4, 1.0).unwrap();
            let oracle = DistanceOracle::new(&dist);
            let couriers: Vec<Courier> =
                (0..3).map(|k| idle_courier(k, rng.gen_range(0..12), 1)).collect();
            let cells: Map<RestaurantId, CellId> = (0..2)
                .map(|k| (RestaurantId(k), CellId(rng.gen_range(0..12))))
                .collect();
            let pending: Vec<Order> = (0..5)
                .map(|k| order_at(k, rng.gen_range(0..2), rng.gen_range(0..12), 10.0, 0))
                .collect();
            let greedy = baseline_greedy(&couriers, &oracle, &cells, &pending, 99.0);
            let bundling = baseline_bundling(&couriers, &oracle, &cells, &pending, 1, 99.0);
            assert_eq!(greedy, bundling, "seed {seed}");
        }
    }

    #[test]
    fn synthetic_stream_is_deterministic_and_valid() {
        let (_, dist) = build_grid(3, 3, 1.0).unwrap();
        let oracle = DistanceOracle::new(&dist);
        let mut rates = Map::new();
        rates.insert((CellId(0), CellId(4)), 1.2);
        rates.insert((CellId(8), CellId(2)), 0.7);
        let spec = SyntheticStreamSpec {
            poisson: PoissonParams {
                rates,
                lunch_multiplier: 3.0,
                dinner_multiplier: 2.5,
                seed: 7,
                expected_counts: false,
                open_hour: 0,
            },
            intervals: 12,
            base_fee: 10.0,
            fee_per_km: 1.0,
        };
        let a = synthesize_stream(&oracle, 15, &spec).unwrap();
        let b = synthesize_stream(&oracle, 15, &spec).unwrap();
        assert_eq!(a, b);
        a.validate(15).unwrap();
        assert_eq!(a.restaurants.len(), 2);
        for bucket in &a.intervals {
            for o in bucket {
                assert!(o.fee > 0.0);
            }
        }
    }

    #[test]
    fn service_time_definition_plumbs_through() {
        // Courier at the restaurant cell, order waits one interval before a
        // courier frees up: service = 1 interval + travel.
        let mut config = tiny_config();
        config.fleet_size = 1;
        config.courier_capacity = 1;
        config.reposition_demand_floor = 0.0;
        config.speed_km_per_min = 0.25; // 1 km leg = 4 minutes
        let stream = OrderStream {
            restaurants: restaurants(),
            intervals: vec![
                vec![order_at(0, 0, 5, 20.0, 0), order_at(1, 0, 3, 20.0, 0)],
                vec![],
                vec![],
                vec![],
            ],
        };
        let report = run(&config, &stream, Mode::Greedy).unwrap();
        assert_eq!(report.efficiency_assigned, 2);
        let records = &report.per_interval;
        assert_eq!(records[0].orders_assigned, 1);
        // Second order is assigned in a later interval once the courier is free.
        let waited: Vec<&IntervalMetrics> =
            records.iter().filter(|r| r.interval > 0 && r.orders_assigned > 0).collect();
        assert_eq!(waited.len(), 1);
    }

    #[test]
    fn excluding_repositioning_cost_raises_profit_by_its_distance() {
        let mut config = tiny_config();
        config.reposition_demand_floor = 2.0;
        let (_, dist) = build_grid(3, 3, 1.0).unwrap();
        let oracle = DistanceOracle::new(&dist);
        let rates =
            crate::demand::gravity_rate_table(&oracle, &[(CellId(4), 1.0)], 1.0, 1.0, 2.0, 8.0, 0.0);
        config.predictor = PredictorSpec::SyntheticPoisson(crate::demand::PoissonParams {
            rates,
            lunch_multiplier: 1.0,
            dinner_multiplier: 1.0,
            seed: 0,
            expected_counts: true,
            open_hour: 0,
        });
        let stream = OrderStream {
            restaurants: restaurants(),
            intervals: vec![
                vec![order_at(0, 0, 5, 20.0, 0)],
                vec![order_at(1, 0, 3, 15.0, 1)],
                vec![],
            ],
        };
        let with_cost = run(&config, &stream, Mode::Proposed).unwrap();
        let mut config2 = config.clone();
        config2.exclude_repositioning_cost = true;
        let without_cost = run(&config2, &stream, Mode::Proposed).unwrap();
        assert!(with_cost.repositioning_km > 0.0, "scenario should reposition");
        assert!(
            (without_cost.profit - with_cost.profit
                - config.cost_scalar * with_cost.repositioning_km)
                .abs()
                < 1e-9
        );
    }

    #[test]
    fn oracle_predictor_runs_with_perfect_hindsight() {
        let mut config = tiny_config();
        config.predictor = PredictorSpec::ReplayOracle;
        let stream = OrderStream {
            restaurants: restaurants(),
            intervals: vec![
                vec![order_at(0, 0, 1, 10.0, 0)],
                vec![order_at(1, 0, 7, 11.0, 1)],
            ],
        };
        let report = run(&config, &stream, Mode::Proposed).unwrap();
        assert_eq!(report.total_orders, 2);
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let mut config = tiny_config();
        config.speed_km_per_min = 0.0;
        assert!(config.validate().is_err());
        let mut config = tiny_config();
        config.detour_threshold = 0.5;
        assert!(config.validate().is_err());
        let mut config = tiny_config();
        config.interval_minutes = 7;
        assert!(config.validate().is_err());
    }
}
