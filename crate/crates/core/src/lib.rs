//! Predictive courier dispatch engine.
//!
//! The pipeline runs per time interval: predict origin-destination order
//! demand on a grid ([`demand`]), reposition idle couriers toward predicted
//! demand with a budgeted greedy route ([`routing`]), then allocate realized
//! orders through a three-layer min-cost max-flow network with capacity and
//! detour constraints ([`allocation`], [`flow`]). The [`simulator`] folds the
//! pipeline over an order stream and reports vehicle count, efficiency,
//! profit, and service time against baseline dispatchers.

pub mod allocation;
pub mod demand;
pub mod flow;
pub mod netgraph;
pub mod routing;
pub mod simulator;
