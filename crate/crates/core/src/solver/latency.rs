//! System latency and its lower envelope over allocations.

use serde::Serialize;

use super::allocation::Allocation;
use crate::flow::{node_outflow, propagate_flows};
use crate::scalar::Scalar;
use crate::scenario::{Assignment, Scenario};
use crate::topology::{NodeId, Topology};

/// Latency split by layer. `per_layer[n - 1]` holds layer `n`
/// (`1..=N + 1`): compute terms of its nodes plus the transmission terms of
/// their uplinks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyBreakdown<T> {
    pub cc_compute: T,
    pub per_layer: Vec<T>,
    pub total: T,
}

impl<T: Scalar> LatencyBreakdown<T> {
    /// Contribution of layer `n ≥ 1`.
    pub fn layer(&self, n: usize) -> T {
        self.per_layer[n - 1]
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

/// Latency under an explicit allocation. Terms whose resource is zero while
/// carrying load are `+∞`.
pub fn system_latency<T: Scalar>(
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    s: &Assignment<T>,
    alloc: &Allocation<T>,
) -> LatencyBreakdown<T> {
    let flow = propagate_flows(topology, scenario, s);
    let cc_compute = T::ratio(flow.cc_raw(), alloc.theta(NodeId::CLOUD));
    let mut per_layer = vec![T::zero(); topology.device_layer()];
    for (var, &id) in topology.variables().iter().enumerate() {
        let processed = s.get(var) * flow.raw_arrival(id);
        let o = node_outflow(topology, id, &flow, s, scenario);
        per_layer[id.layer - 1] = per_layer[id.layer - 1]
            + T::ratio(processed, alloc.theta(id))
            + T::ratio(o, alloc.edge_phi(id));
    }
    let total = cc_compute + per_layer.iter().copied().sum::<T>();
    LatencyBreakdown {
        cc_compute,
        per_layer,
        total,
    }
}

/// Minimum of [`system_latency`] over all valid allocations for split `s`:
///
/// ```text
/// λ_0/θ_0^u + Σ sλ/θ^u + Σ_parents (Σ_children √outflow)² / φ
/// ```
pub fn latency_lower_bound<T: Scalar>(
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    s: &Assignment<T>,
) -> T {
    let flow = propagate_flows(topology, scenario, s);
    let mut total = T::ratio(flow.cc_raw(), topology.node(NodeId::CLOUD).compute_cap);
    for (var, &id) in topology.variables().iter().enumerate() {
        total = total + T::ratio(s.get(var) * flow.raw_arrival(id), topology.node(id).compute_cap);
    }
    for k in topology.parents() {
        let roots: T = topology
            .children(k)
            .iter()
            .map(|&c| node_outflow(topology, NodeId::new(k.layer + 1, c), &flow, s, scenario).sqrt_pos())
            .sum();
        total = total + T::ratio(roots * roots, topology.node(k).trans_cap);
    }
    total
}
