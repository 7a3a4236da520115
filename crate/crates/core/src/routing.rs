//! Budgeted route recommendation over the subgraph family.
//!
//! A recommended path maximizes the predicted order count collected along it
//! (the sum of customer-order weights from every path vertex to every later
//! path vertex) subject to a hard cumulative-distance budget on the distance
//! subgraph. Selecting the optimum is NP-hard, so [`greedy_route`] extends
//! the path one feasible edge at a time by the largest next-edge weight;
//! [`brute_force_route`] enumerates every simple path on small instances and
//! serves as the oracle.
//!
//! The greedy step's marginal gain is the single next-edge weight. That is a
//! lower bound on the true objective increment (which also counts edges from
//! earlier path vertices to the new one); both quantities are exposed so the
//! gap is measurable: [`marginal_gain_trace`] reports the per-step gains
//! while [`Path::objective_value`] carries the full objective.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::netgraph::{CellId, GraphFamily};

/// Per-step greedy decision: the chosen edge and its marginal gain.
pub type GainStep = ((CellId, CellId), f64);

/// Exhaustive search refuses instances with more vertices than this.
pub const BRUTE_FORCE_VERTEX_LIMIT: u32 = 16;

#[derive(Debug, Error, PartialEq)]
pub enum RouteError {
    #[error("unknown cell {0}")]
    UnknownCell(CellId),
    #[error("route budget must be positive (got {0})")]
    InvalidBudget(f64),
    #[error("path is empty")]
    EmptyPath,
    #[error("path revisits {0}")]
    RepeatedVertex(CellId),
    #[error("consecutive path vertices {0} and {1} share no distance edge")]
    NoEdge(CellId, CellId),
    #[error("instance too large for exhaustive search ({cells} cells, limit {limit})")]
    InstanceTooLarge { cells: u32, limit: u32 },
}

/// A simple path through the grid with its travelled distance and the
/// predicted order count it collects.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub vertices: Vec<CellId>,
    pub cumulative_distance_km: f64,
    pub objective_value: f64,
}

/// Repositioning request: where the courier stands and how far it may travel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteRequest {
    pub start: CellId,
    pub max_distance_km: f64,
}

impl RouteRequest {
    pub fn new(start: CellId, max_distance_km: f64) -> Result<Self, RouteError> {
        if max_distance_km <= 0.0 || !max_distance_km.is_finite() {
            return Err(RouteError::InvalidBudget(max_distance_km));
        }
        Ok(RouteRequest { start, max_distance_km })
    }
}

fn check_vertex(family: &GraphFamily, v: CellId) -> Result<(), RouteError> {
    if v.0 < family.distance.vertex_count() {
        Ok(())
    } else {
        Err(RouteError::UnknownCell(v))
    }
}

/// Predicted order count collected by `path`: the sum of customer-order
/// weights from each vertex to every vertex appearing later in the path.
/// `path` must be a simple path in the distance subgraph.
pub fn objective_value(family: &GraphFamily, path: &[CellId]) -> Result<f64, RouteError> {
    if path.is_empty() {
        return Err(RouteError::EmptyPath);
    }
    let mut seen = BTreeSet::new();
    for &v in path {
        check_vertex(family, v)?;
        if !seen.insert(v) {
            return Err(RouteError::RepeatedVertex(v));
        }
    }
    for pair in path.windows(2) {
        if family.distance.edge_weight(pair[0], pair[1]).is_none() {
            return Err(RouteError::NoEdge(pair[0], pair[1]));
        }
    }
    let mut total = 0.0;
    for (i, &from) in path.iter().enumerate() {
        for &to in &path[i + 1..] {
            total += family.orders.weight(from, to);
        }
    }
    Ok(total)
}

/// Distance edges (current, v) whose traversal keeps the budget satisfied and
/// whose head has not been visited. Ascending by destination id.
pub fn feasible_edges(
    family: &GraphFamily,
    current: CellId,
    spent_km: f64,
    budget_km: f64,
    visited: &BTreeSet<CellId>,
) -> Vec<(CellId, CellId)> {
    family
        .distance
        .neighbors(current)
        .iter()
        .filter(|&&(to, w)| spent_km + w <= budget_km && !visited.contains(&to))
        .map(|&(to, _)| (current, to))
        .collect()
}

fn greedy_walk(
    family: &GraphFamily,
    req: &RouteRequest,
) -> Result<(Path, Vec<GainStep>), RouteError> {
    check_vertex(family, req.start)?;
    let mut vertices = vec![req.start];
    let mut visited: BTreeSet<CellId> = BTreeSet::new();
    visited.insert(req.start);
    let mut current = req.start;
    let mut spent = 0.0;
    let mut trace = Vec::new();
    loop {
        let candidates = feasible_edges(family, current, spent, req.max_distance_km, &visited);
        if candidates.is_empty() {
            break;
        }
        // Highest next-edge order weight wins; candidates arrive in ascending
        // destination order, so strict improvement keeps the lowest id on ties.
        let mut best = candidates[0].1;
        let mut best_gain = family.orders.weight(current, best);
        for &(_, to) in &candidates[1..] {
            let gain = family.orders.weight(current, to);
            if gain > best_gain {
                best = to;
                best_gain = gain;
            }
        }
        let hop = family
            .distance
            .edge_weight(current, best)
            .expect("feasible edge exists in the distance subgraph");
        trace.push(((current, best), best_gain));
        vertices.push(best);
        visited.insert(best);
        spent += hop;
        current = best;
    }
    let objective = objective_value(family, &vertices)?;
    Ok((
        Path { vertices, cumulative_distance_km: spent, objective_value: objective },
        trace,
    ))
}

/// Greedy route construction: repeatedly append the feasible edge with the
/// highest predicted order weight until no extension fits the budget.
/// Revisits are excluded so the walk cannot oscillate between two
/// high-weight cells. A start with no feasible extension yields the trivial
/// single-vertex path.
pub fn greedy_route(family: &GraphFamily, req: &RouteRequest) -> Result<Path, RouteError> {
    Ok(greedy_walk(family, req)?.0)
}

/// The per-step (edge, gain) decisions taken by [`greedy_route`].
pub fn marginal_gain_trace(
    family: &GraphFamily,
    req: &RouteRequest,
) -> Result<Vec<GainStep>, RouteError> {
    Ok(greedy_walk(family, req)?.1)
}

/// Exhaustive oracle: enumerates every simple path from the start within the
/// budget and returns one maximizing the objective; ties broken by shorter
/// distance, then lexicographically smaller vertex sequence. Refuses
/// instances above [`BRUTE_FORCE_VERTEX_LIMIT`] vertices.
pub fn brute_force_route(family: &GraphFamily, req: &RouteRequest) -> Result<Path, RouteError> {
    check_vertex(family, req.start)?;
    let cells = family.distance.vertex_count();
    if cells > BRUTE_FORCE_VERTEX_LIMIT {
        return Err(RouteError::InstanceTooLarge { cells, limit: BRUTE_FORCE_VERTEX_LIMIT });
    }

    struct Search<'a> {
        family: &'a GraphFamily,
        budget: f64,
        path: Vec<CellId>,
        on_path: Vec<bool>,
        best: Path,
    }

    impl Search<'_> {
        fn better(&self, objective: f64, distance: f64) -> bool {
            if objective != self.best.objective_value {
                return objective > self.best.objective_value;
            }
            if distance != self.best.cumulative_distance_km {
                return distance < self.best.cumulative_distance_km;
            }
            self.path < self.best.vertices
        }

        fn visit(&mut self, current: CellId, spent: f64, objective: f64) {
            if self.better(objective, spent) {
                self.best = Path {
                    vertices: self.path.clone(),
                    cumulative_distance_km: spent,
                    objective_value: objective,
                };
            }
            let neighbors: Vec<(CellId, f64)> =
                self.family.distance.neighbors(current).to_vec();
            for (to, w) in neighbors {
                if self.on_path[to.0 as usize] || spent + w > self.budget {
                    continue;
                }
                // Appending `to` adds the order weights from every vertex
                // already on the path toward it.
                let gained: f64 = self
                    .path
                    .iter()
                    .map(|&u| self.family.orders.weight(u, to))
                    .sum();
                self.path.push(to);
                self.on_path[to.0 as usize] = true;
                self.visit(to, spent + w, objective + gained);
                self.on_path[to.0 as usize] = false;
                self.path.pop();
            }
        }
    }

    let mut search = Search {
        family,
        budget: req.max_distance_km,
        path: vec![req.start],
        on_path: vec![false; cells as usize],
        best: Path {
            vertices: vec![req.start],
            cumulative_distance_km: 0.0,
            objective_value: 0.0,
        },
    };
    search.on_path[req.start.0 as usize] = true;
    search.visit(req.start, 0.0, 0.0);
    Ok(search.best)
}
