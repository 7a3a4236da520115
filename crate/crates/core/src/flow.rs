//! Minimum-cost maximum-flow over a directed network with non-negative
//! capacities and signed unit costs.
//!
//! The solver repeats: find the cheapest source-to-sink path in the residual
//! graph with Bellman-Ford (negative costs arise from profit arcs, so
//! Dijkstra is out), take the bottleneck residual capacity along it, and
//! augment. Residual arcs are kept as standard twin pairs: the forward twin
//! carries `capacity - flow` at cost `c`, the reverse twin carries `flow` at
//! cost `-c`.
//!
//! Negative-cost cycles are construction bugs here, not runtime conditions:
//! the layered allocation networks are DAGs. The solver therefore refuses
//! with a diagnostic naming the cycle arcs instead of cancelling cycles.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Index of an original (forward) arc in insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcId(pub usize);

/// One step of a residual path: an original arc traversed forward (pushing
/// flow) or backward (cancelling flow).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidualStep {
    pub arc: ArcId,
    pub forward: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("unknown node id {0}")]
    UnknownNode(usize),
    #[error("source and sink must differ")]
    SourceIsSink,
    #[error("arc capacity must be non-negative and finite (got {0})")]
    InvalidCapacity(f64),
    #[error("arc cost must be finite (got {0})")]
    InvalidCost(f64),
    #[error("arcs may not enter the source (node {0})")]
    ArcIntoSource(usize),
    #[error("arcs may not leave the sink (node {0})")]
    ArcOutOfSink(usize),
    #[error("empty augmenting path")]
    EmptyPath,
    #[error("augmentation delta {delta} exceeds bottleneck {bottleneck}")]
    DeltaExceedsBottleneck { delta: f64, bottleneck: f64 },
    #[error("path step has no residual capacity")]
    SaturatedStep,
    #[error("negative-cost cycle in residual graph: {0}")]
    NegativeCycle(String),
}

/// Snapshot of one arc's state.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcView {
    pub src: NodeId,
    pub dst: NodeId,
    pub capacity: f64,
    pub unit_cost: f64,
    pub flow: f64,
}

/// Result of a full solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub flow_value: f64,
    pub total_cost: f64,
    pub arc_flows: Vec<ArcView>,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    labels: Vec<String>,
    source: NodeId,
    sink: NodeId,
    // Twin residual arcs: index 2k forward for original arc k, 2k+1 reverse.
    tail: Vec<usize>,
    head: Vec<usize>,
    residual: Vec<f64>,
    cost: Vec<f64>,
    capacity: Vec<f64>,
}

impl FlowNetwork {
    /// Network seeded with its source and sink nodes (ids 0 and 1).
    pub fn new(source_label: &str, sink_label: &str) -> Self {
        FlowNetwork {
            labels: vec![source_label.to_string(), sink_label.to_string()],
            source: NodeId(0),
            sink: NodeId(1),
            tail: Vec::new(),
            head: Vec::new(),
            residual: Vec::new(),
            cost: Vec::new(),
            capacity: Vec::new(),
        }
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn arc_count(&self) -> usize {
        self.capacity.len()
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.labels[node.0]
    }

    pub fn add_node(&mut self, label: &str) -> NodeId {
        self.labels.push(label.to_string());
        NodeId(self.labels.len() - 1)
    }

    fn check_node(&self, node: NodeId) -> Result<(), FlowError> {
        if node.0 < self.labels.len() {
            Ok(())
        } else {
            Err(FlowError::UnknownNode(node.0))
        }
    }

    pub fn add_arc(
        &mut self,
        src: NodeId,
        dst: NodeId,
        capacity: f64,
        unit_cost: f64,
    ) -> Result<ArcId, FlowError> {
        self.check_node(src)?;
        self.check_node(dst)?;
        if capacity < 0.0 || !capacity.is_finite() {
            return Err(FlowError::InvalidCapacity(capacity));
        }
        if !unit_cost.is_finite() {
            return Err(FlowError::InvalidCost(unit_cost));
        }
        if dst == self.source {
            return Err(FlowError::ArcIntoSource(dst.0));
        }
        if src == self.sink {
            return Err(FlowError::ArcOutOfSink(src.0));
        }
        let id = ArcId(self.capacity.len());
        self.tail.extend([src.0, dst.0]);
        self.head.extend([dst.0, src.0]);
        self.residual.extend([capacity, 0.0]);
        self.cost.extend([unit_cost, -unit_cost]);
        self.capacity.push(capacity);
        Ok(id)
    }

    pub fn flow(&self, arc: ArcId) -> f64 {
        self.residual[2 * arc.0 + 1]
    }

    pub fn arc(&self, arc: ArcId) -> ArcView {
        ArcView {
            src: NodeId(self.tail[2 * arc.0]),
            dst: NodeId(self.head[2 * arc.0]),
            capacity: self.capacity[arc.0],
            unit_cost: self.cost[2 * arc.0],
            flow: self.flow(arc),
        }
    }

    pub fn arcs(&self) -> impl Iterator<Item = (ArcId, ArcView)> + '_ {
        (0..self.capacity.len()).map(|k| (ArcId(k), self.arc(ArcId(k))))
    }

    fn residual_index(step: ResidualStep) -> usize {
         2 * step.arc.0 + usize::from(!step.forward)
    }

    pub fn residual_capacity(&self, step: ResidualStep) -> f64 {
        self.residual[Self::residual_index(step)]
    }

    /// Relaxation order fixed as arcs sorted by (src, dst, twin parity) so
    /// equal-cost shortest paths resolve deterministically.
    fn relaxation_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.residual.len()).collect();
        order.sort_by_key(|&e| (self.tail[e], self.head[e], e));
        order
    }

    /// Cheapest source-to-sink path in the residual graph, or `None` when the
    /// sink is unreachable. A negative-cost cycle reachable from the source
    /// is reported as an error naming the cycle arcs.
    pub fn bellman_ford_min_cost_path(&self) -> Result<Option<Vec<ResidualStep>>, FlowError> {
        let n = self.labels.len();
        let order = self.relaxation_order();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent: Vec<Option<usize>> = vec![None; n];
        dist[self.source.0] = 0.0;

        let mut settled = false;
        for _ in 0..n.saturating_sub(1) {
            let mut changed = false;
            for &e in &order {
                if self.residual[e] <= 0.0 || dist[self.tail[e]].is_infinite() {
                    continue;
                }
                let candidate = dist[self.tail[e]] + self.cost[e];
                if candidate < dist[self.head[e]] {
                    dist[self.head[e]] = candidate;
                    parent[self.head[e]] = Some(e);
                    changed = true;
                }
            }
            if !changed {
                settled = true;
                break;
            }
        }

        if !settled {
            // One extra pass: any further improvement proves a negative cycle.
            for &e in &order {
                if self.residual[e] <= 0.0 || dist[self.tail[e]].is_infinite() {
                    continue;
                }
                if dist[self.tail[e]] + self.cost[e] < dist[self.head[e]] {
                    parent[self.head[e]] = Some(e);
                    return Err(FlowError::NegativeCycle(
                        self.describe_cycle(self.head[e], &parent),
                    ));
                }
            }
        }

        if dist[self.sink.0].is_infinite() {
            return Ok(None);
        }
        let mut steps = Vec::new();
        let mut node = self.sink.0;
        while node != self.source.0 {
            let e = parent[node].expect("finite distance implies a parent chain");
            steps.push(ResidualStep { arc: ArcId(e / 2), forward: e.is_multiple_of(2) });
            node = self.tail[e];
        }
        steps.reverse();
        Ok(Some(steps))
    }

    fn describe_cycle(&self, improved: usize, parent: &[Option<usize>]) -> String {
        // Walking n parent links from the improved node lands inside the cycle.
        let n = self.labels.len();
        let mut node = improved;
        for _ in 0..n {
            if let Some(e) = parent[node] {
                node = self.tail[e];
            }
        }
        let anchor = node;
        let mut arcs = Vec::new();
        while let Some(e) = parent[node] {
            arcs.push(format!(
                "{}->{} (cost {})",
                self.labels[self.tail[e]],
                self.labels[self.head[e]],
                self.cost[e]
            ));
            node = self.tail[e];
            if node == anchor || arcs.len() > n {
                break;
            }
        }
        arcs.reverse();
        arcs.join(", ")
    }

    /// Minimum residual capacity along the path.
    pub fn bottleneck(&self, path: &[ResidualStep]) -> Result<f64, FlowError> {
        if path.is_empty() {
            return Err(FlowError::EmptyPath);
        }
        Ok(path
            .iter()
            .map(|&s| self.residual_capacity(s))
            .fold(f64::INFINITY, f64::min))
    }

    /// Pushes `delta` units along the path: forward steps gain flow, reverse
    /// steps cancel it, and both twins' residuals are updated.
    pub fn augment(&mut self, path: &[ResidualStep], delta: f64) -> Result<(), FlowError> {
        let bottleneck = self.bottleneck(path)?;
        if delta > bottleneck {
            return Err(FlowError::DeltaExceedsBottleneck { delta, bottleneck });
        }
        if bottleneck <= 0.0 {
            return Err(FlowError::SaturatedStep);
        }
        for &step in path {
            let e = Self::residual_index(step);
            self.residual[e] -= delta;
            self.residual[e ^ 1] += delta;
        }
        Ok(())
    }

    /// Runs successive shortest paths until the sink is unreachable and
    /// reports the maximum flow, its total cost over original arcs, and every
    /// arc's final flow.
    pub fn min_cost_max_flow(&mut self) -> Result<FlowSolution, FlowError> {
        if self.source == self.sink {
            return Err(FlowError::SourceIsSink);
        }
        let mut flow_value = 0.0;
        while let Some(path) = self.bellman_ford_min_cost_path()? {
            let delta = self.bottleneck(&path)?;
            self.augment(&path, delta)?;
            flow_value += delta;
            debug_assert!(self.invariants_hold(), "flow invariants violated mid-solve");
        }
        let arc_flows: Vec<ArcView> = self.arcs().map(|(_, v)| v).collect();
        let total_cost = arc_flows.iter().map(|a| a.flow * a.unit_cost).sum();
        Ok(FlowSolution { flow_value, total_cost, arc_flows })
    }

    /// Capacity feasibility on every arc plus conservation at every interior
    /// node.
    pub fn invariants_hold(&self) -> bool {
        for k in 0..self.capacity.len() {
            let f = self.flow(ArcId(k));
            if f < -1e-9 || f > self.capacity[k] + 1e-9 {
                return false;
            }
        }
        let mut net = vec![0.0f64; self.labels.len()];
        for (_, view) in self.arcs() {
            net[view.src.0] -= view.flow;
            net[view.dst.0] += view.flow;
        }
        net.iter().enumerate().all(|(node, &balance)| {
            node == self.source.0 || node == self.sink.0 || balance.abs() < 1e-9
        })
    }

    /// Debug dump: one `src,dst,capacity,cost,flow` record per arc plus a
    /// summary line.
    pub fn dump(&self) -> String {
        let mut out = String::from("src,dst,capacity,cost,flow\n");
        for (_, a) in self.arcs() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                a.src.0, a.dst.0, a.capacity, a.unit_cost, a.flow
            ));
        }
        let total_flow: f64 = self
            .arcs()
            .filter(|(_, a)| a.src == self.source)
            .map(|(_, a)| a.flow)
            .sum();
        let total_cost: f64 = self.arcs().map(|(_, a)| a.flow * a.unit_cost).sum();
        out.push_str(&format!("# max_flow={total_flow} total_cost={total_cost}\n"));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_arc_net(capacity: f64, cost: f64) -> (FlowNetwork, ArcId) {
        let mut net = FlowNetwork::new("s", "t");
        let arc = net.add_arc(net.source(), net.sink(), capacity, cost).unwrap();
        (net, arc)
    }

    #[test]
    fn single_arc_path_and_cost() {
        let (net, arc) = single_arc_net(1.0, 7.0);
        let path = net.bellman_ford_min_cost_path().unwrap().unwrap();
        assert_eq!(path, vec![ResidualStep { arc, forward: true }]);
        let mut net = net;
        let solution = net.min_cost_max_flow().unwrap();
        assert_eq!(solution.flow_value, 1.0);
        assert_eq!(solution.total_cost, 7.0);
    }

    #[test]
    fn saturated_arc_has_no_path() {
        let (mut net, arc) = single_arc_net(1.0, 7.0);
        net.augment(&[ResidualStep { arc, forward: true }], 1.0).unwrap();
        assert_eq!(net.bellman_ford_min_cost_path().unwrap(), None);
    }

    #[test]
    fn parallel_arcs_pick_cheaper() {
        let mut net = FlowNetwork::new("s", "t");
        let _pricey = net.add_arc(net.source(), net.sink(), 1.0, 5.0).unwrap();
        let cheap = net.add_arc(net.source(), net.sink(), 1.0, 3.0).unwrap();
        let path = net.bellman_ford_min_cost_path().unwrap().unwrap();
        assert_eq!(path, vec![ResidualStep { arc: cheap, forward: true }]);
    }

    #[test]
    fn bottleneck_is_min_residual() {
        let mut net = FlowNetwork::new("s", "t");
        let a = net.add_node("a");
        let b = net.add_node("b");
        let e1 = net.add_arc(net.source(), a, 2.0, 0.0).unwrap();
        let e2 = net.add_arc(a, b, 5.0, 0.0).unwrap();
        let e3 = net.add_arc(b, net.sink(), 1.0, 0.0).unwrap();
        let path: Vec<ResidualStep> = [e1, e2, e3]
            .into_iter()
            .map(|arc| ResidualStep { arc, forward: true })
            .collect();
        assert_eq!(net.bottleneck(&path).unwrap(), 1.0);
        net.augment(&path, 1.0).unwrap();
        assert!(path.iter().any(|&s| net.residual_capacity(s) == 0.0));
        assert!(net.bottleneck(&[]).is_err());
    }

    #[test]
    fn augment_then_reverse_augment_is_identity() {
        let mut net = FlowNetwork::new("s", "t");
        let a = net.add_node("a");
        let e1 = net.add_arc(net.source(), a, 3.0, 1.0).unwrap();
        let e2 = net.add_arc(a, net.sink(), 3.0, 2.0).unwrap();
        let forward: Vec<ResidualStep> = [e1, e2]
            .into_iter()
            .map(|arc| ResidualStep { arc, forward: true })
            .collect();
        net.augment(&forward, 2.0).unwrap();
        assert_eq!(net.flow(e1), 2.0);
        let backward: Vec<ResidualStep> = [e2, e1]
            .into_iter()
            .map(|arc| ResidualStep { arc, forward: false })
            .collect();
        net.augment(&backward, 2.0).unwrap();
        assert_eq!(net.flow(e1), 0.0);
        assert_eq!(net.flow(e2), 0.0);
    }

    #[test]
    fn augment_rejects_excessive_delta() {
        let (mut net, arc) = single_arc_net(1.0, 0.0);
        let err = net.augment(&[ResidualStep { arc, forward: true }], 2.0).unwrap_err();
        assert_eq!(err, FlowError::DeltaExceedsBottleneck { delta: 2.0, bottleneck: 1.0 });
    }

    #[test]
    fn conservation_holds_after_each_augmentation() {
        let mut net = FlowNetwork::new("s", "t");
        let a = net.add_node("a");
        let b = net.add_node("b");
        net.add_arc(net.source(), a, 2.0, 1.0).unwrap();
        net.add_arc(net.source(), b, 2.0, 2.0).unwrap();
        net.add_arc(a, b, 1.0, 0.0).unwrap();
        net.add_arc(a, net.sink(), 1.0, 3.0).unwrap();
        net.add_arc(b, net.sink(), 3.0, 1.0).unwrap();
        let mut value = 0.0;
        while let Some(path) = net.bellman_ford_min_cost_path().unwrap() {
            let delta = net.bottleneck(&path).unwrap();
            net.augment(&path, delta).unwrap();
            value += delta;
            assert!(net.invariants_hold());
            let out_of_source: f64 = net
                .arcs()
                .filter(|(_, a)| a.src == net.source())
                .map(|(_, a)| a.flow)
                .sum();
            assert_eq!(out_of_source, value);
        }
        assert_eq!(value, 4.0);
    }

    #[test]
    fn diamond_network_min_cost_max_flow() {
        // Enumerating all feasible integral flows on the 4 arcs puts the
        // cost-minimal maximum flow at value 2, cost 5.
        let mut net = FlowNetwork::new("s", "t");
        let a = net.add_node("a");
        let b = net.add_node("b");
        net.add_arc(net.source(), a, 1.0, 1.0).unwrap();
        net.add_arc(net.source(), b, 1.0, 2.0).unwrap();
        net.add_arc(a, net.sink(), 1.0, 1.0).unwrap();
        net.add_arc(b, net.sink(), 1.0, 1.0).unwrap();
        let solution = net.min_cost_max_flow().unwrap();
        assert_eq!(solution.flow_value, 2.0);
        assert_eq!(solution.total_cost, 5.0);
    }

    #[test]
    fn empty_network_routes_nothing() {
        let mut net = FlowNetwork::new("s", "t");
        net.add_node("lonely");
        let solution = net.min_cost_max_flow().unwrap();
        assert_eq!(solution.flow_value, 0.0);
        assert_eq!(solution.total_cost, 0.0);
    }

    #[test]
    fn reverse_arcs_enable_rerouting() {
        // Cheap path shares an arc with the only route to a second unit; the
        // solver must push back flow along a reverse arc to reach max flow.
        let mut net = FlowNetwork::new("s", "t");
        let a = net.add_node("a");
        let b = net.add_node("b");
        net.add_arc(net.source(), a, 1.0, 0.0).unwrap();
        net.add_arc(a, b, 1.0, 0.0).unwrap();
        net.add_arc(b, net.sink(), 1.0, 0.0).unwrap();
        net.add_arc(net.source(), b, 1.0, 10.0).unwrap();
        net.add_arc(a, net.sink(), 1.0, 10.0).unwrap();
        let solution = net.min_cost_max_flow().unwrap();
        assert_eq!(solution.flow_value, 2.0);
        assert_eq!(solution.total_cost, 20.0);
    }

    #[test]
    fn negative_cycle_is_refused_with_diagnostic() {
        let mut net = FlowNetwork::new("s", "t");
        let a = net.add_node("a");
        let b = net.add_node("b");
        net.add_arc(net.source(), a, 1.0, 1.0).unwrap();
        net.add_arc(a, b, 1.0, -5.0).unwrap();
        net.add_arc(b, a, 1.0, -5.0).unwrap();
        net.add_arc(b, net.sink(), 1.0, 1.0).unwrap();
        match net.min_cost_max_flow() {
            Err(FlowError::NegativeCycle(desc)) => {
                assert!(desc.contains("a") && desc.contains("b"), "diagnostic: {desc}");
            }
            other => panic!("expected negative cycle, got {other:?}"),
        }
    }

    #[test]
    fn arcs_touching_endpoints_wrong_way_are_rejected() {
        let mut net = FlowNetwork::new("s", "t");
        let a = net.add_node("a");
        assert_eq!(
            net.add_arc(a, net.source(), 1.0, 0.0),
            Err(FlowError::ArcIntoSource(0))
        );
        assert_eq!(
            net.add_arc(net.sink(), a, 1.0, 0.0),
            Err(FlowError::ArcOutOfSink(1))
        );
        assert_eq!(net.add_arc(a, a, -1.0, 0.0), Err(FlowError::InvalidCapacity(-1.0)));
    }

    #[test]
    fn integral_capacities_give_integral_flows() {
        let mut net = FlowNetwork::new("s", "t");
        let a = net.add_node("a");
        let b = net.add_node("b");
        net.add_arc(net.source(), a, 3.0, -2.0).unwrap();
        net.add_arc(net.source(), b, 2.0, 1.0).unwrap();
        net.add_arc(a, b, 2.0, -1.0).unwrap();
        net.add_arc(a, net.sink(), 2.0, 4.0).unwrap();
        net.add_arc(b, net.sink(), 3.0, 0.0).unwrap();
        let solution = net.min_cost_max_flow().unwrap();
        for arc in &solution.arc_flows {
            assert_eq!(arc.flow.fract(), 0.0, "non-integral flow on {arc:?}");
        }
        let recomputed: f64 = solution.arc_flows.iter().map(|a| a.flow * a.unit_cost).sum();
        assert_eq!(recomputed, solution.total_cost);
    }

    #[test]
    fn fractional_capacities_are_supported() {
        let mut net = FlowNetwork::new("s", "t");
        let a = net.add_node("a");
        net.add_arc(net.source(), a, 1.5, 2.0).unwrap();
        net.add_arc(a, net.sink(), 2.25, -1.0).unwrap();
        let solution = net.min_cost_max_flow().unwrap();
        assert_eq!(solution.flow_value, 1.5);
        assert_eq!(solution.total_cost, 1.5 * 2.0 - 1.5);
        assert!(net.invariants_hold());
    }

    #[test]
    fn dump_lists_arcs_and_summary() {
        let (mut net, _) = single_arc_net(2.0, 3.0);
        net.min_cost_max_flow().unwrap();
        let dump = net.dump();
        assert!(dump.starts_with("src,dst,capacity,cost,flow\n"));
        assert!(dump.contains("0,1,2,3,2"));
        assert!(dump.contains("# max_flow=2 total_cost=6"));
    }
}
