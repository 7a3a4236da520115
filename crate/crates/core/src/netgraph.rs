//! Grid world and the paired subgraph family: a distance subgraph over
//! adjacent cells and a customer-order subgraph whose directed edges carry
//! predicted order counts.
//!
//! Cells are addressed row-major. The distance subgraph connects lateral
//! (4-neighborhood) neighbors only, so every shortest distance is a metric;
//! non-adjacent pairs are resolved by Dijkstra over the lattice. Disconnected
//! pairs report `f64::INFINITY` rather than an error so feasibility filters
//! can skip them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::demand::DemandMatrix;

/// Row-major index of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId(pub u32);

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("grid dimensions must be positive (got {rows}x{cols})")]
    InvalidDimensions { rows: u32, cols: u32 },
    #[error("cell size must be positive (got {0})")]
    InvalidCellSize(f64),
    #[error("unknown cell {0} (graph has {1} cells)")]
    UnknownCell(CellId, u32),
    #[error("no edge between {0} and {1}")]
    NoSuchEdge(CellId, CellId),
    #[error("edge weight must be positive (got {0})")]
    NonPositiveWeight(f64),
    #[error("demand entry {0} -> {1} is negative: {2}")]
    NegativeDemand(CellId, CellId, f64),
    #[error("subgraph vertex sets differ ({0} vs {1} cells)")]
    VertexSetMismatch(u32, u32),
}

/// Rectangular grid of `rows * cols` non-overlapping cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rows: u32,
    cols: u32,
    cell_size_km: f64,
}

impl Grid {
    pub fn new(rows: u32, cols: u32, cell_size_km: f64) -> Result<Self, GraphError> {
        if rows == 0 || cols == 0 {
            return Err(GraphError::InvalidDimensions { rows, cols });
        }
        if cell_size_km <= 0.0 || !cell_size_km.is_finite() {
            return Err(GraphError::InvalidCellSize(cell_size_km));
        }
        Ok(Grid { rows, cols, cell_size_km })
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn cell_size_km(&self) -> f64 {
        self.cell_size_km
    }

    pub fn cell_count(&self) -> u32 {
        self.rows * self.cols
    }

    pub fn contains(&self, cell: CellId) -> bool {
        cell.0 < self.cell_count()
    }

    /// (row, col) coordinates of a cell.
    pub fn coords(&self, cell: CellId) -> Result<(u32, u32), GraphError> {
        if !self.contains(cell) {
            return Err(GraphError::UnknownCell(cell, self.cell_count()));
        }
        Ok((cell.0 / self.cols, cell.0 % self.cols))
    }

    pub fn cell_at(&self, row: u32, col: u32) -> Option<CellId> {
        if row < self.rows && col < self.cols {
            Some(CellId(row * self.cols + col))
        } else {
            None
        }
    }
}

/// Symmetric distance subgraph over grid cells; edge weights are km between
/// adjacent cell centers.
#[derive(Debug, Clone)]
pub struct DistanceSubgraph {
    /// Out-neighbors per vertex, ascending by neighbor id.
    adj: Vec<Vec<(CellId, f64)>>,
}

impl DistanceSubgraph {
    /// Graph with `n` vertices and no edges.
    pub fn empty(n: u32) -> Self {
        DistanceSubgraph { adj: vec![Vec::new(); n as usize] }
    }

    pub fn vertex_count(&self) -> u32 {
        self.adj.len() as u32
    }

    fn check_vertex(&self, v: CellId) -> Result<(), GraphError> {
        if (v.0 as usize) < self.adj.len() {
            Ok(())
        } else {
            Err(GraphError::UnknownCell(v, self.vertex_count()))
        }
    }

    /// Inserts the symmetric edge pair (a, b) and (b, a) with weight `w`,
    /// replacing any previous weight.
    pub fn set_edge(&mut self, a: CellId, b: CellId, w: f64) -> Result<(), GraphError> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        if w <= 0.0 || !w.is_finite() {
            return Err(GraphError::NonPositiveWeight(w));
        }
        for (u, v) in [(a, b), (b, a)] {
            let list = &mut self.adj[u.0 as usize];
            match list.binary_search_by_key(&v, |&(to, _)| to) {
                Ok(i) => list[i].1 = w,
                Err(i) => list.insert(i, (v, w)),
            }
        }
        Ok(())
    }

    /// Reweights an existing edge pair; the edge must already be present.
    pub fn override_edge_weight(&mut self, a: CellId, b: CellId, w: f64) -> Result<(), GraphError> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        if self.edge_weight(a, b).is_none() {
            return Err(GraphError::NoSuchEdge(a, b));
        }
        self.set_edge(a, b, w)
    }

    pub fn edge_weight(&self, a: CellId, b: CellId) -> Option<f64> {
        self.adj
            .get(a.0 as usize)?
            .binary_search_by_key(&b, |&(to, _)| to)
            .ok()
            .map(|i| self.adj[a.0 as usize][i].1)
    }

    /// Out-edges of `v`, ascending by destination id.
    pub fn neighbors(&self, v: CellId) -> &[(CellId, f64)] {
        self.adj.get(v.0 as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All directed edges, ascending by (src, dst).
    pub fn edges(&self) -> impl Iterator<Item = (CellId, CellId, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            list.iter().map(move |&(v, w)| (CellId(u as u32), v, w))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    /// Length of the minimum-weight path from `a` to `b`; 0 when `a == b`,
    /// `f64::INFINITY` when `b` is unreachable.
    pub fn shortest_distance(&self, a: CellId, b: CellId) -> Result<f64, GraphError> {
        self.check_vertex(b)?;
        Ok(self.shortest_distances_from(a)?[b.0 as usize])
    }

    /// Dijkstra from `a` to every vertex. Unreachable vertices hold
    /// `f64::INFINITY`.
    pub fn shortest_distances_from(&self, a: CellId) -> Result<Vec<f64>, GraphError> {
        self.check_vertex(a)?;
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        dist[a.0 as usize] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapEntry { dist: 0.0, node: a });
        while let Some(HeapEntry { dist: d, node }) = heap.pop() {
            if d > dist[node.0 as usize] {
                continue;
            }
            for &(to, w) in &self.adj[node.0 as usize] {
                let nd = d + w;
                if nd < dist[to.0 as usize] {
                    dist[to.0 as usize] = nd;
                    heap.push(HeapEntry { dist: nd, node: to });
                }
            }
        }
        Ok(dist)
    }
}

/// Min-heap entry; weights are positive and finite so the ordering is total.
struct HeapEntry {
    dist: f64,
    node: CellId,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed on distance for a min-heap; node id breaks ties.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Builds the grid plus its lateral-neighbor distance subgraph. Every edge
/// weight starts at `cell_size_km`; callers may override per-edge weights
/// afterwards to model non-uniform road distances.
pub fn build_grid(
    rows: u32,
    cols: u32,
    cell_size_km: f64,
) -> Result<(Grid, DistanceSubgraph), GraphError> {
    let grid = Grid::new(rows, cols, cell_size_km)?;
    let mut dist = DistanceSubgraph::empty(grid.cell_count());
    for row in 0..rows {
        for col in 0..cols {
            let here = grid.cell_at(row, col).unwrap();
            if let Some(right) = grid.cell_at(row, col + 1) {
                dist.set_edge(here, right, cell_size_km)?;
            }
            if let Some(down) = grid.cell_at(row + 1, col) {
                dist.set_edge(here, down, cell_size_km)?;
            }
        }
    }
    Ok((grid, dist))
}

/// Directed customer-order subgraph; edge (i, j) carries the predicted
/// number of orders placed at restaurant cell i for delivery to cell j.
///
/// Self-loop demand (order and delivery in the same cell) is admitted with
/// weight >= 0.
#[derive(Debug, Clone, Default)]
pub struct OrderSubgraph {
    out: Vec<Vec<(CellId, f64)>>,
}

impl OrderSubgraph {
    pub fn empty(n: u32) -> Self {
        OrderSubgraph { out: vec![Vec::new(); n as usize] }
    }

    pub fn vertex_count(&self) -> u32 {
        self.out.len() as u32
    }

    pub fn set_weight(&mut self, from: CellId, to: CellId, w: f64) -> Result<(), GraphError> {
        let n = self.vertex_count();
        if (from.0 as usize) >= self.out.len() {
            return Err(GraphError::UnknownCell(from, n));
        }
        if (to.0 as usize) >= self.out.len() {
            return Err(GraphError::UnknownCell(to, n));
        }
        if w < 0.0 || !w.is_finite() {
            return Err(GraphError::NegativeDemand(from, to, w));
        }
        let list = &mut self.out[from.0 as usize];
        match list.binary_search_by_key(&to, |&(v, _)| v) {
            Ok(i) => list[i].1 = w,
            Err(i) => list.insert(i, (to, w)),
        }
        Ok(())
    }

    /// Predicted orders from `from` to `to`; 0 when no edge exists.
    pub fn weight(&self, from: CellId, to: CellId) -> f64 {
        self.out
            .get(from.0 as usize)
            .and_then(|list| {
                list.binary_search_by_key(&to, |&(v, _)| v)
                    .ok()
                    .map(|i| list[i].1)
            })
            .unwrap_or(0.0)
    }

    /// Out-edges of `from`, ascending by destination id.
    pub fn out_edges(&self, from: CellId) -> &[(CellId, f64)] {
        self.out.get(from.0 as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Total predicted orders leaving `from` (self-loop demand included).
    pub fn outgoing_demand(&self, from: CellId) -> f64 {
        self.out_edges(from).iter().map(|&(_, w)| w).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.out.iter().flatten().map(|&(_, w)| w).sum()
    }
}

/// One directed edge per strictly positive matrix entry; weight = entry.
pub fn order_subgraph_from_matrix(
    m: &DemandMatrix,
    cell_count: u32,
) -> Result<OrderSubgraph, GraphError> {
    let mut g = OrderSubgraph::empty(cell_count);
    for ((from, to), count) in m.iter() {
        if count < 0.0 {
            return Err(GraphError::NegativeDemand(from, to, count));
        }
        if count > 0.0 {
            g.set_weight(from, to, count)?;
        }
    }
    Ok(g)
}

/// All-pairs shortest distances, computed eagerly so feasibility filters and
/// detour ratios are O(1) lookups. Immutable after construction; safe to
/// share across workers.
#[derive(Debug, Clone)]
pub struct DistanceOracle {
    rows: Vec<Vec<f64>>,
}

impl DistanceOracle {
    pub fn new(g: &DistanceSubgraph) -> Self {
        let rows = (0..g.vertex_count())
            .map(|a| g.shortest_distances_from(CellId(a)).expect("vertex in range"))
            .collect();
        DistanceOracle { rows }
    }

    pub fn vertex_count(&self) -> u32 {
        self.rows.len() as u32
    }

    /// Shortest distance in km; `f64::INFINITY` for unreachable pairs.
    /// Panics when a cell is outside the graph.
    pub fn distance(&self, a: CellId, b: CellId) -> f64 {
        self.rows[a.0 as usize][b.0 as usize]
    }

    pub fn contains(&self, cell: CellId) -> bool {
        (cell.0 as usize) < self.rows.len()
    }
}

/// The paired subgraph family over one grid. Both subgraphs share the
/// identical vertex set.
#[derive(Debug, Clone)]
pub struct GraphFamily {
    pub grid: Grid,
    pub distance: DistanceSubgraph,
    pub orders: OrderSubgraph,
}

impl GraphFamily {
    pub fn new(
        grid: Grid,
        distance: DistanceSubgraph,
        orders: OrderSubgraph,
    ) -> Result<Self, GraphError> {
        if grid.cell_count() != distance.vertex_count() {
            return Err(GraphError::VertexSetMismatch(
                grid.cell_count(),
                distance.vertex_count(),
            ));
        }
        if distance.vertex_count() != orders.vertex_count() {
            return Err(GraphError::VertexSetMismatch(
                distance.vertex_count(),
                orders.vertex_count(),
            ));
        }
        Ok(GraphFamily { grid, distance, orders })
    }
}
