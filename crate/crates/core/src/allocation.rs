//! Three-layer order allocation: couriers -> pickup restaurants -> drop-off
//! cells, solved as one min-cost max-flow over a DAG.
//!
//! Arc semantics follow the layered model: a super source feeds each courier
//! with its carrying capacity; courier-to-restaurant arcs exist inside the
//! pickup distance threshold and cost the scaled travel distance;
//! restaurant-to-drop-off arcs exist inside the delivery radius, carry the
//! pending order count as capacity, and cost the negative delivery fee so
//! minimizing cost maximizes profit; drop-off cells drain into a super sink
//! at the realized demand. Maximum flow therefore serves as many orders as
//! capacity and demand admit, and minimum cost picks the cheapest, most
//! profitable way to do it.
//!
//! Restaurant-to-drop-off arcs are keyed by (restaurant, cell, fee): orders
//! on one OD pair with different fees get separate arcs so the negated cost
//! of the layer equals the exact fee total of the assigned orders.
//!
//! Batching happens after the solve: orders routed to one courier from one
//! restaurant are sequenced (exact for up to four drop-offs, nearest-neighbor
//! chaining beyond) and split whenever a detour ratio would exceed the
//! threshold.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::demand::TimeInterval;
use crate::flow::{ArcId, FlowError, FlowNetwork, NodeId};
use crate::netgraph::{CellId, DistanceOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CourierId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RestaurantId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderId(pub u64);

#[derive(Debug, Error, PartialEq)]
pub enum AllocError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("courier {0:?} must have capacity >= 1")]
    ZeroCapacity(CourierId),
    #[error("duplicate courier id {0:?}")]
    DuplicateCourier(CourierId),
    #[error("duplicate restaurant id {0:?}")]
    DuplicateRestaurant(RestaurantId),
    #[error("duplicate order id {0:?}")]
    DuplicateOrder(OrderId),
    #[error("order {0:?} references unknown restaurant {1:?}")]
    UnknownRestaurant(OrderId, RestaurantId),
    #[error("order {0:?} must have a positive finite fee (got {1})")]
    InvalidFee(OrderId, f64),
    #[error("cell {0} outside the distance oracle")]
    UnknownCell(CellId),
    #[error("detour ratio index {index} out of range 2..={len}")]
    DetourIndex { index: usize, len: usize },
    #[error("detour threshold must be >= 1 (got {0})")]
    InvalidThreshold(f64),
    #[error("order {0:?} does not belong to restaurant {1:?}")]
    ForeignOrder(OrderId, RestaurantId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CourierStatus {
    Idle,
    Repositioning,
    Delivering,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Courier {
    pub id: CourierId,
    pub location: CellId,
    pub capacity: u32,
    pub status: CourierStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Restaurant {
    pub id: RestaurantId,
    pub cell: CellId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub id: OrderId,
    pub restaurant_id: RestaurantId,
    pub dropoff: CellId,
    pub fee: f64,
    pub placed_at: TimeInterval,
    pub delivered_at: Option<TimeInterval>,
}

/// Ordered same-restaurant drop-off run; `orders` is the delivery sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub restaurant_id: RestaurantId,
    pub orders: Vec<OrderId>,
    pub max_detour_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub courier_id: CourierId,
    pub batch: Batch,
    pub pickup_distance_km: f64,
    pub route_distance_km: f64,
    pub total_fee: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AllocationPlan {
    pub assignments: Vec<Assignment>,
    pub unassigned_orders: Vec<OrderId>,
}

impl AllocationPlan {
    pub fn assigned_order_count(&self) -> usize {
        self.assignments.iter().map(|a| a.batch.orders.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationParams {
    pub pickup_threshold_km: f64,
    pub delivery_radius_km: f64,
    pub detour_threshold: f64,
    /// Converts km of travel into cost units on courier-to-restaurant arcs.
    pub cost_scalar: f64,
    /// Solve layer 1->2 and 2->3 as two sequential flows instead of one.
    pub two_phase: bool,
}

/// Detour ratio of the order at 1-based position `i >= 2` in the drop-off
/// sequence: distance travelled from the restaurant through the preceding
/// drop-offs to this one, over the direct restaurant-to-drop-off distance.
/// A drop-off in the restaurant's own cell cannot deviate, so the ratio is 1.
/// Unreachable legs yield the infinite infeasibility sentinel.
pub fn detour_ratio(
    oracle: &DistanceOracle,
    restaurant: &Restaurant,
    dropoffs: &[CellId],
    i: usize,
) -> Result<f64, AllocError> {
    if i < 2 || i > dropoffs.len() {
        return Err(AllocError::DetourIndex { index: i, len: dropoffs.len() });
    }
    for &cell in dropoffs.iter().chain([restaurant.cell].iter()) {
        if !oracle.contains(cell) {
            return Err(AllocError::UnknownCell(cell));
        }
    }
    let mut travelled = oracle.distance(restaurant.cell, dropoffs[0]);
    for leg in dropoffs.windows(2).take(i - 1) {
        travelled += oracle.distance(leg[0], leg[1]);
    }
    let direct = oracle.distance(restaurant.cell, dropoffs[i - 1]);
    if direct == 0.0 {
        return Ok(1.0);
    }
    Ok(travelled / direct)
}

/// Route length of a sequenced batch: restaurant to first drop-off plus the
/// chained legs.
fn route_length(oracle: &DistanceOracle, restaurant_cell: CellId, dropoffs: &[CellId]) -> f64 {
    if dropoffs.is_empty() {
        return 0.0;
    }
    let mut total = oracle.distance(restaurant_cell, dropoffs[0]);
    for leg in dropoffs.windows(2) {
        total += oracle.distance(leg[0], leg[1]);
    }
    total
}

/// Orders a set of drop-offs from the restaurant: exact shortest route by
/// permutation for up to four orders, nearest-neighbor chaining beyond.
/// Ties prefer the lexicographically smaller order-id sequence.
fn sequence_orders<'a>(
    oracle: &DistanceOracle,
    restaurant_cell: CellId,
    orders: &[&'a Order],
) -> Vec<&'a Order> {
    if orders.len() <= 1 {
        return orders.to_vec();
    }
    if orders.len() <= 4 {
        let mut indices: Vec<usize> = (0..orders.len()).collect();
        let mut best: Option<(f64, Vec<usize>)> = None;
        permute(&mut indices, 0, &mut |perm| {
            let cells: Vec<CellId> = perm.iter().map(|&k| orders[k].dropoff).collect();
            let len = route_length(oracle, restaurant_cell, &cells);
            let ids: Vec<OrderId> = perm.iter().map(|&k| orders[k].id).collect();
            let better = match &best {
                None => true,
                Some((bl, bperm)) => {
                    len < *bl
                        || (len == *bl
                            && ids < bperm.iter().map(|&k| orders[k].id).collect::<Vec<_>>())
                }
            };
            if better {
                best = Some((len, perm.to_vec()));
            }
        });
        let (_, perm) = best.expect("at least one permutation");
        return perm.into_iter().map(|k| orders[k]).collect();
    }
    // Nearest-neighbor chain from the restaurant; order id breaks ties.
    let mut remaining: Vec<&Order> = orders.to_vec();
    remaining.sort_by_key(|o| o.id);
    let mut seq = Vec::with_capacity(remaining.len());
    let mut here = restaurant_cell;
    while !remaining.is_empty() {
        let next = remaining
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                oracle
                    .distance(here, a.dropoff)
                    .total_cmp(&oracle.distance(here, b.dropoff))
                    .then(a.id.cmp(&b.id))
            })
            .map(|(k, _)| k)
            .unwrap();
        let order = remaining.remove(next);
        here = order.dropoff;
        seq.push(order);
    }
    seq
}

fn permute<F: FnMut(&[usize])>(items: &mut Vec<usize>, k: usize, visit: &mut F) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

fn ratios_ok(
    oracle: &DistanceOracle,
    restaurant: &Restaurant,
    seq: &[&Order],
    threshold: f64,
) -> Result<(f64, bool), AllocError> {
    let cells: Vec<CellId> = seq.iter().map(|o| o.dropoff).collect();
    let mut max_ratio: f64 = 1.0;
    for i in 2..=cells.len() {
        let r = detour_ratio(oracle, restaurant, &cells, i)?;
        max_ratio = max_ratio.max(r);
        if r > threshold {
            return Ok((max_ratio, false));
        }
    }
    Ok((max_ratio, true))
}

/// Greedily packs pending same-restaurant orders into detour-compliant,
/// capacity-bounded batches. Every order lands in exactly one batch;
/// singletons are always valid.
pub fn build_batches(
    oracle: &DistanceOracle,
    restaurant: &Restaurant,
    pending: &[Order],
    capacity: u32,
    threshold: f64,
) -> Result<Vec<Batch>, AllocError> {
    if threshold < 1.0 || !threshold.is_finite() {
        return Err(AllocError::InvalidThreshold(threshold));
    }
    for order in pending {
        if order.restaurant_id != restaurant.id {
            return Err(AllocError::ForeignOrder(order.id, restaurant.id));
        }
        if !oracle.contains(order.dropoff) {
            return Err(AllocError::UnknownCell(order.dropoff));
        }
    }
    let capacity = capacity.max(1) as usize;
    // Seeds picked nearest-first from the restaurant; order id breaks ties.
    let mut remaining: Vec<&Order> = pending.iter().collect();
    remaining.sort_by(|a, b| {
        oracle
            .distance(restaurant.cell, a.dropoff)
            .total_cmp(&oracle.distance(restaurant.cell, b.dropoff))
            .then(a.id.cmp(&b.id))
    });

    let mut batches = Vec::new();
    while !remaining.is_empty() {
        let mut members = vec![remaining.remove(0)];
        'grow: while members.len() < capacity && !remaining.is_empty() {
            let seq_now = sequence_orders(oracle, restaurant.cell, &members);
            let tail = seq_now.last().unwrap().dropoff;
            // Candidates nearest to the current chain tail first.
            let mut candidate_idx: Vec<usize> = (0..remaining.len()).collect();
            candidate_idx.sort_by(|&x, &y| {
                oracle
                    .distance(tail, remaining[x].dropoff)
                    .total_cmp(&oracle.distance(tail, remaining[y].dropoff))
                    .then(remaining[x].id.cmp(&remaining[y].id))
            });
            for idx in candidate_idx {
                let mut trial: Vec<&Order> = members.clone();
                trial.push(remaining[idx]);
                let seq = sequence_orders(oracle, restaurant.cell, &trial);
                let (_, ok) = ratios_ok(oracle, restaurant, &seq, threshold)?;
                if ok {
                    members = seq;
                    remaining.remove(idx);
                    continue 'grow;
                }
            }
            break;
        }
        let seq = sequence_orders(oracle, restaurant.cell, &members);
        let (max_ratio, ok) = ratios_ok(oracle, restaurant, &seq, threshold)?;
        debug_assert!(ok, "grown batch must stay detour-compliant");
        batches.push(Batch {
            restaurant_id: restaurant.id,
            orders: seq.iter().map(|o| o.id).collect(),
            max_detour_ratio: max_ratio,
        });
    }
    Ok(batches)
}

/// The layered network plus everything needed to read a plan back out of its
/// flows.
/// Layer 1->2 arc bookkeeping: (arc, courier, restaurant, distance km).
type CourierArc = (ArcId, CourierId, RestaurantId, f64);
/// Layer 2->3 arc bookkeeping: (arc, restaurant, drop-off cell, fee, members).
type GroupArc = (ArcId, RestaurantId, CellId, f64, Vec<OrderId>);

#[derive(Debug, Clone)]
pub struct AllocationBuild {
    pub network: FlowNetwork,
    /// Solved phase networks when the two-phase variant ran (for dumps).
    pub phase_networks: Vec<FlowNetwork>,
    couriers: Vec<Courier>,
    restaurants: Vec<Restaurant>,
    orders: Vec<Order>,
    courier_arcs: Vec<CourierArc>,
    group_arcs: Vec<GroupArc>,
}

/// Fee grouping key; fees are validated positive and finite so the bit
/// pattern orders like the number.
fn fee_key(fee: f64) -> u64 {
    fee.to_bits()
}

/// Constructs the three-layer allocation network:
/// source -> courier (capacity, cost 0); courier -> restaurant inside the
/// pickup threshold (capacity, scaled distance); restaurant -> drop-off cell
/// inside the delivery radius (order count, negative fee); drop-off cell ->
/// sink (realized demand, cost 0). Empty courier or order sets produce a
/// valid degenerate network.
pub fn build_allocation_network(
    oracle: &DistanceOracle,
    couriers: &[Courier],
    restaurants: &[Restaurant],
    orders: &[Order],
    params: &AllocationParams,
) -> Result<AllocationBuild, AllocError> {
    let mut couriers = couriers.to_vec();
    couriers.sort_by_key(|c| c.id);
    let mut restaurants = restaurants.to_vec();
    restaurants.sort_by_key(|r| r.id);
    let mut orders = orders.to_vec();
    orders.sort_by_key(|o| o.id);

    for pair in couriers.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(AllocError::DuplicateCourier(pair[0].id));
        }
    }
    for pair in restaurants.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(AllocError::DuplicateRestaurant(pair[0].id));
        }
    }
    for pair in orders.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(AllocError::DuplicateOrder(pair[0].id));
        }
    }
    let restaurant_cell: BTreeMap<RestaurantId, CellId> =
        restaurants.iter().map(|r| (r.id, r.cell)).collect();
    for c in &couriers {
        if c.capacity == 0 {
            return Err(AllocError::ZeroCapacity(c.id));
        }
        if !oracle.contains(c.location) {
            return Err(AllocError::UnknownCell(c.location));
        }
    }
    for r in &restaurants {
        if !oracle.contains(r.cell) {
            return Err(AllocError::UnknownCell(r.cell));
        }
    }
    for o in &orders {
        if !restaurant_cell.contains_key(&o.restaurant_id) {
            return Err(AllocError::UnknownRestaurant(o.id, o.restaurant_id));
        }
        if o.fee <= 0.0 || !o.fee.is_finite() {
            return Err(AllocError::InvalidFee(o.id, o.fee));
        }
        if !oracle.contains(o.dropoff) {
            return Err(AllocError::UnknownCell(o.dropoff));
        }
    }

    let mut net = FlowNetwork::new("S", "T");
    let mut courier_nodes: Vec<(CourierId, NodeId)> = Vec::new();
    for c in &couriers {
        let node = net.add_node(&format!("courier:{}", c.id.0));
        courier_nodes.push((c.id, node));
    }
    let mut restaurant_nodes: BTreeMap<RestaurantId, NodeId> = BTreeMap::new();
    for r in &restaurants {
        let node = net.add_node(&format!("restaurant:{}", r.id.0));
        restaurant_nodes.insert(r.id, node);
    }

    // (restaurant, cell, fee) -> member orders, ascending by id.
    let mut groups: BTreeMap<(RestaurantId, CellId, u64), Vec<OrderId>> = BTreeMap::new();
    let mut cell_demand: BTreeMap<CellId, f64> = BTreeMap::new();
    for o in &orders {
        groups
            .entry((o.restaurant_id, o.dropoff, fee_key(o.fee)))
            .or_default()
            .push(o.id);
        *cell_demand.entry(o.dropoff).or_insert(0.0) += 1.0;
    }
    let mut dropoff_nodes: BTreeMap<CellId, NodeId> = BTreeMap::new();
    for &cell in cell_demand.keys() {
        let node = net.add_node(&format!("cell:{}", cell.0));
        dropoff_nodes.insert(cell, node);
    }

    let mut courier_arcs = Vec::new();
    for (c, &(id, node)) in couriers.iter().zip(courier_nodes.iter()) {
        net.add_arc(net.source(), node, c.capacity as f64, 0.0)?;
        for r in &restaurants {
            let d = oracle.distance(c.location, r.cell);
            if d.is_finite() && d <= params.pickup_threshold_km {
                let arc = net.add_arc(
                    node,
                    restaurant_nodes[&r.id],
                    c.capacity as f64,
                    params.cost_scalar * d,
                )?;
                courier_arcs.push((arc, id, r.id, d));
            }
        }
    }

    let mut group_arcs = Vec::new();
    for (&(rid, cell, fee_bits), members) in &groups {
        let d = oracle.distance(restaurant_cell[&rid], cell);
        if !d.is_finite() || d > params.delivery_radius_km {
            continue;
        }
        let fee = f64::from_bits(fee_bits);
        let arc = net.add_arc(
            restaurant_nodes[&rid],
            dropoff_nodes[&cell],
            members.len() as f64,
            -fee,
        )?;
        group_arcs.push((arc, rid, cell, fee, members.clone()));
    }
    for (&cell, &node) in &dropoff_nodes {
        net.add_arc(node, net.sink(), cell_demand[&cell], 0.0)?;
    }

    Ok(AllocationBuild {
        network: net,
        phase_networks: Vec::new(),
        couriers,
        restaurants,
        orders,
        courier_arcs,
        group_arcs,
    })
}

/// Per-restaurant unit streams read back from solved flows.
struct UnitStreams {
    courier_units: BTreeMap<RestaurantId, Vec<CourierId>>,
    order_units: BTreeMap<RestaurantId, Vec<OrderId>>,
}

fn units(flow: f64) -> usize {
    flow.round() as usize
}

/// Min-cost flows are rarely unique: when distances tie, successive shortest
/// paths scatter one courier's units across several restaurants, which later
/// fragments into several physical trips. This pass exchanges units between
/// courier pairs whenever the swap does not increase the distance cost and
/// strictly reduces (cost, distinct courier-restaurant pairs), converging on
/// an equally-optimal flow whose units batch into fewer trips.
fn consolidate_units(
    streams: &mut UnitStreams,
    build: &AllocationBuild,
    oracle: &DistanceOracle,
    params: &AllocationParams,
) {
    let courier_cell: BTreeMap<CourierId, CellId> =
        build.couriers.iter().map(|c| (c.id, c.location)).collect();
    let restaurant_cell: BTreeMap<RestaurantId, CellId> =
        build.restaurants.iter().map(|r| (r.id, r.cell)).collect();
    let mut assign: BTreeMap<(CourierId, RestaurantId), u32> = BTreeMap::new();
    for (&r, couriers) in &streams.courier_units {
        for &k in couriers {
            *assign.entry((k, r)).or_insert(0) += 1;
        }
    }
    let dist = |k: CourierId, r: RestaurantId| -> f64 {
        oracle.distance(courier_cell[&k], restaurant_cell[&r])
    };

    for _ in 0..6 {
        let mut changed = false;
        let couriers: Vec<CourierId> = assign
            .keys()
            .map(|&(k, _)| k)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        for &k1 in &couriers {
            let mut mine: Vec<RestaurantId> = assign
                .iter()
                .filter(|(&(k, _), &n)| k == k1 && n > 0)
                .map(|(&(_, r), _)| r)
                .collect();
            if mine.len() <= 1 {
                continue;
            }
            mine.sort_by(|a, b| dist(k1, *a).total_cmp(&dist(k1, *b)).then(a.cmp(b)));
            let target = mine[0];
            for &victim in mine[1..].iter().rev() {
                let holders: Vec<CourierId> = assign
                    .iter()
                    .filter(|(&(k, r), &n)| r == target && n > 0 && k != k1)
                    .map(|(&(k, _), _)| k)
                    .collect();
                for k2 in holders {
                    if dist(k2, victim) > params.pickup_threshold_km {
                        continue;
                    }
                    let delta = dist(k1, target) + dist(k2, victim)
                        - dist(k1, victim)
                        - dist(k2, target);
                    let pairs_now = pair_count(&assign);
                    if delta > 1e-9 {
                        continue;
                    }
                    let mut trial = assign.clone();
                    *trial.get_mut(&(k1, victim)).unwrap() -= 1;
                    *trial.entry((k1, target)).or_insert(0) += 1;
                    *trial.get_mut(&(k2, target)).unwrap() -= 1;
                    *trial.entry((k2, victim)).or_insert(0) += 1;
                    trial.retain(|_, &mut n| n > 0);
                    let improves = delta < -1e-9 || pair_count(&trial) < pairs_now;
                    if improves {
                        assign = trial;
                        changed = true;
                        break;
                    }
                }
                if changed {
                    break;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut rebuilt: BTreeMap<RestaurantId, Vec<CourierId>> = BTreeMap::new();
    for (&(k, r), &n) in &assign {
        for _ in 0..n {
            rebuilt.entry(r).or_default().push(k);
        }
    }
    streams.courier_units = rebuilt;
}

fn pair_count(assign: &BTreeMap<(CourierId, RestaurantId), u32>) -> usize {
    assign.values().filter(|&&n| n > 0).count()
}

/// Solves the network and materializes the flow as courier assignments.
/// With `two_phase` the literal sequential variant runs instead: first
/// couriers-to-restaurants (distance cost only), then restaurants-to-drop-offs
/// (fee cost only) bounded by the phase-one inflow.
pub fn allocate(
    build: &mut AllocationBuild,
    oracle: &DistanceOracle,
    params: &AllocationParams,
) -> Result<AllocationPlan, AllocError> {
    let mut streams = if params.two_phase {
        solve_two_phase(build, params)?
    } else {
        build.network.min_cost_max_flow()?;
        let mut courier_units: BTreeMap<RestaurantId, Vec<CourierId>> = BTreeMap::new();
        for &(arc, courier, restaurant, _) in &build.courier_arcs {
            for _ in 0..units(build.network.flow(arc)) {
                courier_units.entry(restaurant).or_default().push(courier);
            }
        }
        let mut order_units: BTreeMap<RestaurantId, Vec<OrderId>> = BTreeMap::new();
        for (arc, restaurant, _, _, members) in &build.group_arcs {
            let n = units(build.network.flow(*arc));
            order_units
                .entry(*restaurant)
                .or_default()
                .extend(members.iter().take(n).copied());
        }
        UnitStreams { courier_units, order_units }
    };
    consolidate_units(&mut streams, build, oracle, params);
    extract_plan(build, oracle, params, streams)
}

fn solve_two_phase(
    build: &mut AllocationBuild,
    params: &AllocationParams,
) -> Result<UnitStreams, AllocError> {
    // Phase 1: couriers to restaurants, distance cost, absorbed by each
    // restaurant's deliverable order count.
    let mut phase1 = FlowNetwork::new("S", "T");
    let mut courier_nodes: BTreeMap<CourierId, NodeId> = BTreeMap::new();
    for c in &build.couriers {
        courier_nodes.insert(c.id, phase1.add_node(&format!("courier:{}", c.id.0)));
    }
    let mut deliverable: BTreeMap<RestaurantId, f64> = BTreeMap::new();
    for (_, rid, _, _, members) in &build.group_arcs {
        *deliverable.entry(*rid).or_insert(0.0) += members.len() as f64;
    }
    let mut restaurant_nodes: BTreeMap<RestaurantId, NodeId> = BTreeMap::new();
    for r in &build.restaurants {
        if deliverable.contains_key(&r.id) {
            restaurant_nodes.insert(r.id, phase1.add_node(&format!("restaurant:{}", r.id.0)));
        }
    }
    for c in &build.couriers {
        phase1.add_arc(phase1.source(), courier_nodes[&c.id], c.capacity as f64, 0.0)?;
    }
    let mut phase1_arcs: Vec<(ArcId, CourierId, RestaurantId)> = Vec::new();
    for &(_, courier, restaurant, d) in &build.courier_arcs {
        if let Some(&rnode) = restaurant_nodes.get(&restaurant) {
            let arc = phase1.add_arc(
                courier_nodes[&courier],
                rnode,
                build
                    .couriers
                    .iter()
                    .find(|c| c.id == courier)
                    .map(|c| c.capacity as f64)
                    .unwrap_or(0.0),
                params.cost_scalar * d,
            )?;
            phase1_arcs.push((arc, courier, restaurant));
        }
    }
    for (&rid, &rnode) in &restaurant_nodes {
        phase1.add_arc(rnode, phase1.sink(), deliverable[&rid], 0.0)?;
    }
    phase1.min_cost_max_flow()?;

    let mut courier_units: BTreeMap<RestaurantId, Vec<CourierId>> = BTreeMap::new();
    let mut inflow: BTreeMap<RestaurantId, f64> = BTreeMap::new();
    for &(arc, courier, restaurant) in &phase1_arcs {
        let f = phase1.flow(arc);
        for _ in 0..units(f) {
            courier_units.entry(restaurant).or_default().push(courier);
        }
        *inflow.entry(restaurant).or_insert(0.0) += f;
    }

    // Phase 2: restaurants to drop-offs, fee cost, bounded by phase-1 inflow.
    let mut phase2 = FlowNetwork::new("S", "T");
    let mut r2_nodes: BTreeMap<RestaurantId, NodeId> = BTreeMap::new();
    for &rid in restaurant_nodes.keys() {
        r2_nodes.insert(rid, phase2.add_node(&format!("restaurant:{}", rid.0)));
    }
    let mut cell_nodes: BTreeMap<CellId, NodeId> = BTreeMap::new();
    let mut cell_demand: BTreeMap<CellId, f64> = BTreeMap::new();
    for (_, _, cell, _, members) in &build.group_arcs {
        *cell_demand.entry(*cell).or_insert(0.0) += members.len() as f64;
    }
    for &cell in cell_demand.keys() {
        cell_nodes.insert(cell, phase2.add_node(&format!("cell:{}", cell.0)));
    }
    for (&rid, &rnode) in &r2_nodes {
        let cap = inflow.get(&rid).copied().unwrap_or(0.0);
        phase2.add_arc(phase2.source(), rnode, cap, 0.0)?;
    }
    let mut phase2_arcs: Vec<(ArcId, RestaurantId, Vec<OrderId>)> = Vec::new();
    for (_, rid, cell, fee, members) in &build.group_arcs {
        let arc = phase2.add_arc(
            r2_nodes[rid],
            cell_nodes[cell],
            members.len() as f64,
            -fee,
        )?;
        phase2_arcs.push((arc, *rid, members.clone()));
    }
    for (&cell, &node) in &cell_nodes {
        phase2.add_arc(node, phase2.sink(), cell_demand[&cell], 0.0)?;
    }
    phase2.min_cost_max_flow()?;

    let mut order_units: BTreeMap<RestaurantId, Vec<OrderId>> = BTreeMap::new();
    for (arc, rid, members) in &phase2_arcs {
        let n = units(phase2.flow(*arc));
        order_units
            .entry(*rid)
            .or_default()
            .extend(members.iter().take(n).copied());
    }
    build.phase_networks = vec![phase1, phase2];
    Ok(UnitStreams { courier_units, order_units })
}

fn extract_plan(
    build: &AllocationBuild,
    oracle: &DistanceOracle,
    params: &AllocationParams,
    streams: UnitStreams,
) -> Result<AllocationPlan, AllocError> {
    let order_by_id: BTreeMap<OrderId, &Order> =
        build.orders.iter().map(|o| (o.id, o)).collect();
    let restaurant_by_id: BTreeMap<RestaurantId, &Restaurant> =
        build.restaurants.iter().map(|r| (r.id, r)).collect();
    let courier_by_id: BTreeMap<CourierId, &Courier> =
        build.couriers.iter().map(|c| (c.id, c)).collect();

    // Pair courier units with order units restaurant by restaurant.
    let mut per_courier: BTreeMap<CourierId, BTreeMap<RestaurantId, Vec<OrderId>>> =
        BTreeMap::new();
    let mut assigned_ids: Vec<OrderId> = Vec::new();
    for (restaurant, couriers) in &streams.courier_units {
        let orders = match streams.order_units.get(restaurant) {
            Some(o) => o,
            None => continue,
        };
        for (courier, order) in couriers.iter().zip(orders.iter()) {
            per_courier
                .entry(*courier)
                .or_default()
                .entry(*restaurant)
                .or_default()
                .push(*order);
            assigned_ids.push(*order);
        }
    }

    let mut assignments = Vec::new();
    for (courier_id, by_restaurant) in &per_courier {
        let courier = courier_by_id[courier_id];
        // Trips chain: each pickup starts where the previous trip ended.
        let mut position = courier.location;
        for (restaurant_id, order_ids) in by_restaurant {
            let restaurant = restaurant_by_id[restaurant_id];
            let members: Vec<Order> =
                order_ids.iter().map(|id| order_by_id[id].clone()).collect();
            let batches = build_batches(
                oracle,
                restaurant,
                &members,
                courier.capacity,
                params.detour_threshold,
            )?;
            for batch in batches {
                let cells: Vec<CellId> = batch
                    .orders
                    .iter()
                    .map(|id| order_by_id[id].dropoff)
                    .collect();
                let pickup = oracle.distance(position, restaurant.cell);
                let route = route_length(oracle, restaurant.cell, &cells);
                let total_fee: f64 =
                    batch.orders.iter().map(|id| order_by_id[id].fee).sum();
                position = *cells.last().expect("batch is non-empty");
                assignments.push(Assignment {
                    courier_id: *courier_id,
                    batch,
                    pickup_distance_km: pickup,
                    route_distance_km: route,
                    total_fee,
                });
            }
        }
    }

    assigned_ids.sort();
    let unassigned_orders: Vec<OrderId> = build
        .orders
        .iter()
        .map(|o| o.id)
        .filter(|id| assigned_ids.binary_search(id).is_err())
        .collect();
    Ok(AllocationPlan { assignments, unassigned_orders })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{build_grid, DistanceOracle};

    fn line_oracle(cells: u32, step_km: f64) -> DistanceOracle {
        let (_, dist) = build_grid(1, cells, step_km).unwrap();
        DistanceOracle::new(&dist)
    }

    fn interval() -> TimeInterval {
        TimeInterval::new(0, 15).unwrap()
    }

    fn order(id: u64, restaurant: u32, dropoff: u32, fee: f64) -> Order {
        Order {
            id: OrderId(id),
            restaurant_id: RestaurantId(restaurant),
            dropoff: CellId(dropoff),
            fee,
            placed_at: interval(),
            delivered_at: None,
        }
    }

    fn courier(id: u32, cell: u32, capacity: u32) -> Courier {
        Courier {
            id: CourierId(id),
            location: CellId(cell),
            capacity,
            status: CourierStatus::Idle,
        }
    }

    fn params(pickup: f64, radius: f64, detour: f64) -> AllocationParams {
        AllocationParams {
            pickup_threshold_km: pickup,
            delivery_radius_km: radius,
            detour_threshold: detour,
            cost_scalar: 1.0,
            two_phase: false,
        }
    }

    #[test]
    fn detour_ratio_collinear_is_one() {
        // r at cell 0, o1 at cell 1 (2 km), o2 at cell 2 (4 km): (2+2)/4 = 1.
        let oracle = line_oracle(3, 2.0);
        let r = Restaurant { id: RestaurantId(0), cell: CellId(0) };
        let ratio = detour_ratio(&oracle, &r, &[CellId(1), CellId(2)], 2).unwrap();
        assert_eq!(ratio, 1.0);
    }

    #[test]
    fn detour_ratio_backtracking_dropoff() {
        // r at 2, o1 at 4 (2 km), o2 at 0: legs 2 + 4 over direct 2 = 3.
        let oracle = line_oracle(6, 1.0);
        let r = Restaurant { id: RestaurantId(0), cell: CellId(2) };
        let ratio = detour_ratio(&oracle, &r, &[CellId(4), CellId(0)], 2).unwrap();
        assert_eq!(ratio, 3.0);
    }

    #[test]
    fn detour_ratio_same_cell_dropoffs() {
        let oracle = line_oracle(4, 2.0);
        let r = Restaurant { id: RestaurantId(0), cell: CellId(0) };
        let ratio = detour_ratio(&oracle, &r, &[CellId(2), CellId(2)], 2).unwrap();
        assert_eq!(ratio, 1.0);
    }

    #[test]
    fn detour_ratio_zero_direct_distance_is_one() {
        let oracle = line_oracle(4, 2.0);
        let r = Restaurant { id: RestaurantId(0), cell: CellId(1) };
        // Second drop-off in the restaurant's own cell.
        let ratio = detour_ratio(&oracle, &r, &[CellId(2), CellId(1)], 2).unwrap();
        assert_eq!(ratio, 1.0);
    }

    #[test]
    fn detour_ratio_index_bounds() {
        let oracle = line_oracle(4, 2.0);
        let r = Restaurant { id: RestaurantId(0), cell: CellId(0) };
        assert!(detour_ratio(&oracle, &r, &[CellId(1), CellId(2)], 1).is_err());
        assert!(detour_ratio(&oracle, &r, &[CellId(1), CellId(2)], 3).is_err());
    }

    #[test]
    fn single_order_forms_singleton_batch() {
        let oracle = line_oracle(5, 1.0);
        let r = Restaurant { id: RestaurantId(0), cell: CellId(0) };
        let pending = vec![order(1, 0, 3, 10.0)];
        let batches = build_batches(&oracle, &r, &pending, 3, 1.5).unwrap();
        assert_eq!(batches.len(), 1);
        assert_eq!(batches[0].orders, vec![OrderId(1)]);
        assert_eq!(batches[0].max_detour_ratio, 1.0);
    }

    #[test]
    fn opposite_directions_stay_singletons_at_tight_threshold() {
        // r at 3 of a 7-cell line; drop-offs at 1 and 5 point opposite ways.
        let oracle = line_oracle(7, 1.0);
        let r = Restaurant { id: RestaurantId(0), cell: CellId(3) };
        let pending = vec![order(1, 0, 1, 10.0), order(2, 0, 5, 10.0)];
        let batches = build_batches(&oracle, &r, &pending, 2, 1.0).unwrap();
        assert_eq!(batches.len(), 2);
        for b in &batches {
            assert_eq!(b.orders.len(), 1);
        }
    }

    #[test]
    fn collinear_orders_batch_in_line_order() {
        let oracle = line_oracle(5, 1.0);
        let r = Restaurant { id: RestaurantId(0), cell: CellId(0) };
        let pending = vec![order(3, 0, 3, 10.0), order(1, 0, 1, 10.0), order(2, 0, 2, 10.0)];
        let batches = build_batches(&oracle, &r, &pending, 3, 1.5).unwrap();
        assert_eq!(batches.len(), 1);
        assert_eq!(batches[0].orders, vec![OrderId(1), OrderId(2), OrderId(3)]);
        // The chosen sequence's worst detour ratio is minimal over every
        // permutation of the three drop-offs.
        let cells = [CellId(1), CellId(2), CellId(3)];
        let chosen_worst = batches[0].max_detour_ratio;
        let perms = [
            [0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0],
        ];
        for p in perms {
            let seq: Vec<CellId> = p.iter().map(|&i| cells[i]).collect();
            let worst = (2..=3)
                .map(|i| detour_ratio(&oracle, &r, &seq, i).unwrap())
                .fold(1.0f64, f64::max);
            assert!(chosen_worst <= worst + 1e-12);
        }
    }

    #[test]
    fn batches_never_exceed_capacity() {
        let oracle = line_oracle(9, 1.0);
        let r = Restaurant { id: RestaurantId(0), cell: CellId(0) };
        let pending: Vec<Order> = (1..=6).map(|k| order(k, 0, k as u32, 5.0)).collect();
        let batches = build_batches(&oracle, &r, &pending, 2, 4.0).unwrap();
        let total: usize = batches.iter().map(|b| b.orders.len()).sum();
        assert_eq!(total, 6);
        for b in &batches {
            assert!(b.orders.len() <= 2);
        }
    }

    #[test]
    fn build_batches_rejects_bad_inputs() {
        let oracle = line_oracle(4, 1.0);
        let r = Restaurant { id: RestaurantId(0), cell: CellId(0) };
        assert_eq!(
            build_batches(&oracle, &r, &[], 2, 0.5).unwrap_err(),
            AllocError::InvalidThreshold(0.5)
        );
        let foreign = vec![order(1, 9, 2, 10.0)];
        assert_eq!(
            build_batches(&oracle, &r, &foreign, 2, 1.5).unwrap_err(),
            AllocError::ForeignOrder(OrderId(1), RestaurantId(0))
        );
    }

    /// Reference fixture: courier d1 three cells from restaurant r1 with
    /// capacity 2, and six fee-60 orders from restaurant r2 to cell 6.
    fn reference_allocation_fixture() -> (DistanceOracle, Vec<Courier>, Vec<Restaurant>, Vec<Order>)
    {
        let oracle = line_oracle(8, 1.0);
        let couriers = vec![courier(1, 0, 2)];
        let restaurants = vec![
            Restaurant { id: RestaurantId(1), cell: CellId(3) },
            Restaurant { id: RestaurantId(2), cell: CellId(5) },
        ];
        let orders: Vec<Order> = (1..=6).map(|k| order(k, 2, 6, 60.0)).collect();
        (oracle, couriers, restaurants, orders)
    }

    #[test]
    fn network_reproduces_reference_arcs() {
        let (oracle, couriers, restaurants, orders) = reference_allocation_fixture();
        let build = build_allocation_network(
            &oracle,
            &couriers,
            &restaurants,
            &orders,
            &params(10.0, 10.0, 1.5),
        )
        .unwrap();
        let net = &build.network;
        let mut courier_to_r1 = None;
        let mut r2_to_c6 = None;
        for (_, arc) in net.arcs() {
            let src = net.label(arc.src).to_string();
            let dst = net.label(arc.dst).to_string();
            if src == "courier:1" && dst == "restaurant:1" {
                courier_to_r1 = Some(arc.clone());
            }
            if src == "restaurant:2" && dst == "cell:6" {
                r2_to_c6 = Some(arc.clone());
            }
        }
        let d1r1 = courier_to_r1.expect("courier arc present");
        assert_eq!(d1r1.unit_cost, 3.0);
        assert_eq!(d1r1.capacity, 2.0);
        let r2c2 = r2_to_c6.expect("order arc present");
        assert_eq!(r2c2.unit_cost, -60.0);
        assert_eq!(r2c2.capacity, 6.0);
    }

    #[test]
    fn courier_beyond_threshold_has_no_outgoing_arcs() {
        let (oracle, couriers, restaurants, orders) = reference_allocation_fixture();
        let build = build_allocation_network(
            &oracle,
            &couriers,
            &restaurants,
            &orders,
            &params(2.0, 10.0, 1.5),
        )
        .unwrap();
        // Pickup threshold 2 km excludes both restaurants (3 and 5 km away).
        assert!(build.courier_arcs.is_empty());
        let mut build = build;
        let plan = allocate(&mut build, &oracle, &params(2.0, 10.0, 1.5)).unwrap();
        assert!(plan.assignments.is_empty());
        assert_eq!(plan.unassigned_orders.len(), 6);
    }

    #[test]
    fn zero_demand_leaves_everyone_idle() {
        let oracle = line_oracle(4, 1.0);
        let couriers = vec![courier(0, 0, 2)];
        let restaurants = vec![Restaurant { id: RestaurantId(0), cell: CellId(1) }];
        let p = params(5.0, 5.0, 1.5);
        let mut build =
            build_allocation_network(&oracle, &couriers, &restaurants, &[], &p).unwrap();
        let plan = allocate(&mut build, &oracle, &p).unwrap();
        assert!(plan.assignments.is_empty());
        assert!(plan.unassigned_orders.is_empty());
    }

    #[test]
    fn nearer_order_wins_with_single_capacity() {
        // One courier at cell 0 with capacity 1; equal fees; restaurants at
        // distance 2 and 4. Cost 2 - fee beats 4 - fee.
        let oracle = line_oracle(8, 1.0);
        let couriers = vec![courier(0, 0, 1)];
        let restaurants = vec![
            Restaurant { id: RestaurantId(0), cell: CellId(2) },
            Restaurant { id: RestaurantId(1), cell: CellId(4) },
        ];
        let orders = vec![order(1, 0, 3, 20.0), order(2, 1, 5, 20.0)];
        let p = params(10.0, 10.0, 1.5);
        let mut build =
            build_allocation_network(&oracle, &couriers, &restaurants, &orders, &p).unwrap();
        let plan = allocate(&mut build, &oracle, &p).unwrap();
        assert_eq!(plan.assigned_order_count(), 1);
        assert_eq!(plan.assignments[0].batch.orders, vec![OrderId(1)]);
        assert_eq!(plan.unassigned_orders, vec![OrderId(2)]);
    }

    /// Exhaustive assignment oracle: every order goes to one courier or
    /// none; feasibility mirrors the network gates; ranks by (assigned
    /// count desc, unit cost asc) where unit cost is scaled courier-to-
    /// restaurant distance minus fee per order.
    fn enumerate_best(
        oracle: &DistanceOracle,
        couriers: &[Courier],
        restaurants: &[Restaurant],
        orders: &[Order],
        p: &AllocationParams,
    ) -> (usize, f64) {
        let r_cell: BTreeMap<RestaurantId, CellId> =
            restaurants.iter().map(|r| (r.id, r.cell)).collect();
        let n = orders.len();
        let choices = couriers.len() + 1;
        let mut best = (0usize, 0.0f64);
        let mut pick = vec![0usize; n];
        loop {
            let mut load: BTreeMap<CourierId, u32> = BTreeMap::new();
            let mut feasible = true;
            let mut count = 0usize;
            let mut cost = 0.0;
            for (o, &choice) in orders.iter().zip(pick.iter()) {
                if choice == 0 {
                    continue;
                }
                let c = &couriers[choice - 1];
                let d_pickup = oracle.distance(c.location, r_cell[&o.restaurant_id]);
                let d_drop = oracle.distance(r_cell[&o.restaurant_id], o.dropoff);
                if d_pickup > p.pickup_threshold_km || d_drop > p.delivery_radius_km {
                    feasible = false;
                    break;
                }
                *load.entry(c.id).or_insert(0) += 1;
                if load[&c.id] > c.capacity {
                    feasible = false;
                    break;
                }
                count += 1;
                cost += p.cost_scalar * d_pickup - o.fee;
            }
            if feasible && (count > best.0 || (count == best.0 && cost < best.1)) {
                best = (count, cost);
            }
            // Next assignment vector.
            let mut i = 0;
            while i < n {
                pick[i] += 1;
                if pick[i] < choices {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        best
    }

    fn plan_cost(
        plan: &AllocationPlan,
        oracle: &DistanceOracle,
        couriers: &[Courier],
        restaurants: &[Restaurant],
        p: &AllocationParams,
    ) -> f64 {
        let c_cell: BTreeMap<CourierId, CellId> =
            couriers.iter().map(|c| (c.id, c.location)).collect();
        let r_cell: BTreeMap<RestaurantId, CellId> =
            restaurants.iter().map(|r| (r.id, r.cell)).collect();
        plan.assignments
            .iter()
            .map(|a| {
                let d = oracle
                    .distance(c_cell[&a.courier_id], r_cell[&a.batch.restaurant_id]);
                a.batch.orders.len() as f64 * p.cost_scalar * d - a.total_fee
            })
            .sum()
    }

    #[test]
    fn small_plans_match_exhaustive_enumeration() {
        use rand::{Rng, SeedableRng};
        for seed in 0..12u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (_, dist) = build_grid(3, 3, 1.0).unwrap();
            let oracle = DistanceOracle::new(&dist);
            let couriers = vec![
                courier(0, rng.gen_range(0..9), rng.gen_range(1..3)),
                courier(1, rng.gen_range(0..9), rng.gen_range(1..3)),
            ];
            let restaurants = vec![
                Restaurant { id: RestaurantId(0), cell: CellId(rng.gen_range(0..9)) },
                Restaurant { id: RestaurantId(1), cell: CellId(rng.gen_range(0..9)) },
            ];
            let orders: Vec<Order> = (0..2)
                .map(|k| {
                    order(
                        k,
                        rng.gen_range(0..2),
                        rng.gen_range(0..9),
                        rng.gen_range(1..5) as f64 * 10.0,
                    )
                })
                .collect();
            let p = params(3.0, 3.0, 10.0);
            let mut build =
                build_allocation_network(&oracle, &couriers, &restaurants, &orders, &p)
                    .unwrap();
            let plan = allocate(&mut build, &oracle, &p).unwrap();
            let (best_count, best_cost) =
                enumerate_best(&oracle, &couriers, &restaurants, &orders, &p);
            assert_eq!(plan.assigned_order_count(), best_count, "seed {seed}");
            let got = plan_cost(&plan, &oracle, &couriers, &restaurants, &p);
            assert!(
                (got - best_cost).abs() < 1e-9,
                "seed {seed}: plan cost {got} vs oracle {best_cost}"
            );
        }
    }

    #[test]
    fn plan_partitions_orders_and_respects_capacity() {
        use rand::{Rng, SeedableRng};
        for seed in 20..35u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (_, dist) = build_grid(4, 4, 1.0).unwrap();
            let oracle = DistanceOracle::new(&dist);
            let couriers: Vec<Courier> = (0..3)
                .map(|k| courier(k, rng.gen_range(0..16), rng.gen_range(1..4)))
                .collect();
            let restaurants: Vec<Restaurant> = (0..3)
                .map(|k| Restaurant { id: RestaurantId(k), cell: CellId(rng.gen_range(0..16)) })
                .collect();
            let orders: Vec<Order> = (0..8)
                .map(|k| {
                    order(k, rng.gen_range(0..3), rng.gen_range(0..16), 15.0)
                })
                .collect();
            let p = params(4.0, 5.0, 2.0);
            let mut build =
                build_allocation_network(&oracle, &couriers, &restaurants, &orders, &p)
                    .unwrap();
            let plan = allocate(&mut build, &oracle, &p).unwrap();

            let mut seen: Vec<OrderId> = plan
                .assignments
                .iter()
                .flat_map(|a| a.batch.orders.iter().copied())
                .chain(plan.unassigned_orders.iter().copied())
                .collect();
            seen.sort();
            let mut expected: Vec<OrderId> = orders.iter().map(|o| o.id).collect();
            expected.sort();
            assert_eq!(seen, expected, "seed {seed}: partition broken");

            let mut load: BTreeMap<CourierId, usize> = BTreeMap::new();
            for a in &plan.assignments {
                *load.entry(a.courier_id).or_insert(0) += a.batch.orders.len();
                assert!(a.batch.max_detour_ratio <= p.detour_threshold + 1e-12);
            }
            for c in &couriers {
                assert!(load.get(&c.id).copied().unwrap_or(0) <= c.capacity as usize);
            }
        }
    }

    #[test]
    fn layer_two_cost_equals_negated_fee_total() {
        let (oracle, couriers, restaurants, orders) = reference_allocation_fixture();
        let p = params(10.0, 10.0, 1.5);
        let mut build =
            build_allocation_network(&oracle, &couriers, &restaurants, &orders, &p).unwrap();
        let plan = allocate(&mut build, &oracle, &p).unwrap();
        let assigned_fees: f64 = plan.assignments.iter().map(|a| a.total_fee).sum();
        let layer2_cost: f64 = build
            .group_arcs
            .iter()
            .map(|(arc, _, _, _, _)| {
                let view = build.network.arc(*arc);
                view.flow * view.unit_cost
            })
            .sum();
        assert_eq!(-layer2_cost, assigned_fees);
        assert!(assigned_fees > 0.0);
    }

    #[test]
    fn two_phase_variant_produces_valid_plan() {
        let (oracle, couriers, restaurants, orders) = reference_allocation_fixture();
        let mut p = params(10.0, 10.0, 1.5);
        p.two_phase = true;
        let mut build =
            build_allocation_network(&oracle, &couriers, &restaurants, &orders, &p).unwrap();
        let plan = allocate(&mut build, &oracle, &p).unwrap();
        assert_eq!(build.phase_networks.len(), 2);
        // Courier capacity 2 bounds the served orders either way.
        assert_eq!(plan.assigned_order_count(), 2);
        assert_eq!(plan.unassigned_orders.len(), 4);
    }

    #[test]
    fn allocation_is_deterministic() {
        let (oracle, couriers, restaurants, orders) = reference_allocation_fixture();
        let p = params(10.0, 10.0, 1.5);
        let run = || {
            let mut build =
                build_allocation_network(&oracle, &couriers, &restaurants, &orders, &p)
                    .unwrap();
            allocate(&mut build, &oracle, &p).unwrap()
        };
        assert_eq!(run(), run());
    }
}
