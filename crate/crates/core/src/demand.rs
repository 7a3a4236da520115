//! Per-interval origin-destination demand prediction.
//!
//! The real predictor behind the pipeline is an external learned model; here
//! it is a pluggable interface with replay and synthetic implementations.
//! `ReplayPrevious` is the causal default (last interval's realized demand),
//! `ReplayOracle` is perfect hindsight for upper-bound experiments, and
//! `SyntheticPoisson` draws seeded counts from a per-OD rate table with
//! lunch/dinner peak multipliers.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::netgraph::CellId;

pub const MINUTES_PER_DAY: u32 = 1440;

#[derive(Debug, Error, PartialEq)]
pub enum DemandError {
    #[error("interval length must be positive and divide 1440 (got {0})")]
    InvalidIntervalLength(u32),
    #[error("negative demand count for {0} -> {1}: {2}")]
    NegativeCount(CellId, CellId, f64),
    #[error("replay history does not cover interval {0}")]
    MissingHistory(u32),
    #[error("synthetic predictor requires a non-empty rate table")]
    MissingRates,
    #[error("negative base rate for {0} -> {1}: {2}")]
    NegativeRate(CellId, CellId, f64),
    #[error("peak multiplier must be positive and finite (got {0})")]
    InvalidMultiplier(f64),
}

/// One slot of the discretized day; `length_minutes` must divide 1440 so
/// interval indices align with wall-clock hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeInterval {
    pub index: u32,
    pub length_minutes: u32,
}

impl TimeInterval {
    pub fn new(index: u32, length_minutes: u32) -> Result<Self, DemandError> {
        if length_minutes == 0 || !MINUTES_PER_DAY.is_multiple_of(length_minutes) {
            return Err(DemandError::InvalidIntervalLength(length_minutes));
        }
        Ok(TimeInterval { index, length_minutes })
    }

    pub fn intervals_per_day(&self) -> u32 {
        MINUTES_PER_DAY / self.length_minutes
    }

    /// Hour of day (0..24) this interval starts in.
    pub fn hour_of_day(&self) -> u32 {
        (self.index % self.intervals_per_day()) * self.length_minutes / 60
    }

    /// Minutes from scenario start to the beginning of this interval.
    pub fn start_minutes(&self) -> f64 {
        self.index as f64 * self.length_minutes as f64
    }
}

/// Predicted (or realized) order counts per (origin cell, destination cell)
/// for one interval. Counts may be fractional in predictive mode; realized
/// matrices hold integers.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix {
    pub interval: TimeInterval,
    counts: BTreeMap<(CellId, CellId), f64>,
}

impl DemandMatrix {
    pub fn zeros(interval: TimeInterval) -> Self {
        DemandMatrix { interval, counts: BTreeMap::new() }
    }

    pub fn set(&mut self, from: CellId, to: CellId, count: f64) -> Result<(), DemandError> {
        if count < 0.0 || !count.is_finite() {
            return Err(DemandError::NegativeCount(from, to, count));
        }
        if count == 0.0 {
            self.counts.remove(&(from, to));
        } else {
            self.counts.insert((from, to), count);
        }
        Ok(())
    }

    pub fn accumulate(&mut self, from: CellId, to: CellId, amount: f64) -> Result<(), DemandError> {
        let next = self.get(from, to) + amount;
        self.set(from, to, next)
    }

    pub fn get(&self, from: CellId, to: CellId) -> f64 {
        self.counts.get(&(from, to)).copied().unwrap_or(0.0)
    }

    /// Non-zero entries, ascending by (origin, destination).
    pub fn iter(&self) -> impl Iterator<Item = ((CellId, CellId), f64)> + '_ {
        self.counts.iter().map(|(&k, &v)| (k, v))
    }

    pub fn total(&self) -> f64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Rate table and peak shape for the synthetic generator. Base rates are
/// expected orders per interval on each OD pair; the multipliers scale rates
/// during the lunch (11:00-13:59) and dinner (19:00-21:59) windows.
///
/// With `expected_counts` the predictor returns the scaled rates themselves
/// (fractional expected values, the well-calibrated-predictor setting)
/// instead of seeded integer draws. `open_hour` models restaurant opening
/// time: intervals before it carry zero demand (0 = always open).
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonParams {
    pub rates: BTreeMap<(CellId, CellId), f64>,
    pub lunch_multiplier: f64,
    pub dinner_multiplier: f64,
    pub seed: u64,
    pub expected_counts: bool,
    pub open_hour: u32,
}

impl PoissonParams {
    fn validate(&self) -> Result<(), DemandError> {
        if self.rates.is_empty() {
            return Err(DemandError::MissingRates);
        }
        for (&(from, to), &rate) in &self.rates {
            if rate < 0.0 || !rate.is_finite() {
                return Err(DemandError::NegativeRate(from, to, rate));
            }
        }
        for m in [self.lunch_multiplier, self.dinner_multiplier] {
            if m <= 0.0 || !m.is_finite() {
                return Err(DemandError::InvalidMultiplier(m));
            }
        }
        if self.open_hour >= 24 {
            return Err(DemandError::InvalidMultiplier(self.open_hour as f64));
        }
        Ok(())
    }

    fn multiplier_for(&self, hour: u32) -> f64 {
        if hour < self.open_hour {
            return 0.0;
        }
        match hour {
            11..=13 => self.lunch_multiplier,
            19..=21 => self.dinner_multiplier,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictorSpec {
    /// Realized matrix of interval target-1; all zeros when there is none.
    ReplayPrevious,
    /// Realized matrix of the target interval itself (perfect hindsight).
    ReplayOracle,
    /// Seeded Poisson draws from a rate table.
    SyntheticPoisson(PoissonParams),
}

/// Produces the demand prediction for `target`. `history[i]` must hold the
/// realized matrix of interval `i` for the replay kinds.
pub fn predict(
    spec: &PredictorSpec,
    history: &[DemandMatrix],
    target: TimeInterval,
) -> Result<DemandMatrix, DemandError> {
    match spec {
        PredictorSpec::ReplayPrevious => {
            let mut out = DemandMatrix::zeros(target);
            if target.index > 0 {
                if let Some(prev) = history.get(target.index as usize - 1) {
                    out.counts = prev.counts.clone();
                }
            }
            Ok(out)
        }
        PredictorSpec::ReplayOracle => history
            .get(target.index as usize)
            .cloned()
            .ok_or(DemandError::MissingHistory(target.index)),
        PredictorSpec::SyntheticPoisson(params) => {
            params.validate()?;
            let mut rng = interval_rng(params.seed, target.index);
            let multiplier = params.multiplier_for(target.hour_of_day());
            let mut out = DemandMatrix::zeros(target);
            for (&(from, to), &rate) in &params.rates {
                if params.expected_counts {
                    out.set(from, to, rate * multiplier)?;
                } else {
                    let n = poisson_draw(&mut rng, rate * multiplier);
                    if n > 0 {
                        out.set(from, to, n as f64)?;
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Per-interval RNG so predictions for one interval do not depend on which
/// other intervals were sampled.
pub fn interval_rng(seed: u64, interval_index: u32) -> ChaCha8Rng {
    let mixed = seed ^ (interval_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Gravity-shaped synthetic city: customer attraction decays exponentially
/// from a set of weighted hotspot centers, and order origins decay with the
/// origin-to-destination distance, so every cell near the action carries some
/// outgoing demand and the grid has a usable demand gradient.
///
/// The table is normalized to `total_rate_per_interval` before entries below
/// `min_rate` are trimmed, so the realized total lands slightly under the
/// target.
#[allow(clippy::too_many_arguments)]
pub fn gravity_rate_table(
    oracle: &crate::netgraph::DistanceOracle,
    centers: &[(CellId, f64)],
    od_scale_km: f64,
    center_scale_km: f64,
    max_pair_km: f64,
    total_rate_per_interval: f64,
    min_rate: f64,
) -> BTreeMap<(CellId, CellId), f64> {
    let n = oracle.vertex_count();
    let attract: Vec<f64> = (0..n)
        .map(|d| {
            centers
                .iter()
                .map(|&(c, w)| {
                    let dist = oracle.distance(CellId(d), c);
                    if dist.is_finite() {
                        w * (-dist / center_scale_km).exp()
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect();
    let mut raw: BTreeMap<(CellId, CellId), f64> = BTreeMap::new();
    let mut total = 0.0;
    for o in 0..n {
        for d in 0..n {
            let dist = oracle.distance(CellId(o), CellId(d));
            if !dist.is_finite() || dist > max_pair_km || o == d {
                continue;
            }
            let w = attract[d as usize] * (-dist / od_scale_km).exp();
            if w > 0.0 {
                raw.insert((CellId(o), CellId(d)), w);
                total += w;
            }
        }
    }
    if total <= 0.0 {
        return BTreeMap::new();
    }
    let scale = total_rate_per_interval / total;
    raw.into_iter()
        .map(|(k, w)| (k, w * scale))
        .filter(|&(_, r)| r >= min_rate)
        .collect()
}

/// Knuth's product method, chunked via Poisson additivity so exp(-lambda)
/// never underflows.
pub fn poisson_draw(rng: &mut impl Rng, lambda: f64) -> u64 {
    debug_assert!(lambda >= 0.0 && lambda.is_finite());
    let mut remaining = lambda;
    let mut total = 0u64;
    while remaining > 0.0 {
        let chunk = remaining.min(30.0);
        remaining -= chunk;
        let limit = (-chunk).exp();
        let mut p = 1.0f64;
        loop {
            p *= rng.gen::<f64>();
            if p <= limit {
                break;
            }
            total += 1;
        }
    }
    total
}
