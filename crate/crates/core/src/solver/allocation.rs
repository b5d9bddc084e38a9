//! Compute and transmission resource allocation.

use serde::Serialize;

use crate::flow::{node_outflow, propagate_flows, FlowState};
use crate::scalar::{within, Scalar};
use crate::scenario::{Assignment, Scenario};
use crate::topology::{NodeId, Topology};

/// Committed compute capacity per node and uplink capacity per edge.
///
/// `phi` is indexed by the child end of each edge; the cloud entry is
/// unused and kept at zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation<T> {
    theta: Vec<Vec<T>>,
    phi: Vec<Vec<T>>,
}

impl<T: Scalar> Allocation<T> {
    /// All-zero allocation shaped like `topology`.
    pub fn zeros(topology: &Topology<T>) -> Self {
        let shape: Vec<Vec<T>> = topology
            .layers()
            .iter()
            .map(|l| vec![T::zero(); l.len()])
            .collect();
        Self {
            theta: shape.clone(),
            phi: shape,
        }
    }

    pub fn theta(&self, id: NodeId) -> T {
        self.theta[id.layer][id.index]
    }

    /// Capacity granted to the link from `child` to its parent.
    pub fn edge_phi(&self, child: NodeId) -> T {
        self.phi[child.layer][child.index]
    }

    pub fn set_theta(&mut self, id: NodeId, value: T) {
        self.theta[id.layer][id.index] = value;
    }

    pub fn set_edge_phi(&mut self, child: NodeId, value: T) {
        self.phi[child.layer][child.index] = value;
    }

    /// Nonnegative, within every node's compute bound, and no parent hands
    /// out more than its transmission budget.
    pub fn is_valid(&self, topology: &Topology<T>, tol: T) -> bool {
        for id in topology.node_ids() {
            let th = self.theta(id);
            if th < T::zero() || !within(th, topology.node(id).compute_cap, tol) {
                return false;
            }
            if id.layer > 0 && self.edge_phi(id) < T::zero() {
                return false;
            }
        }
        topology.parents().all(|k| {
            let granted: T = topology
                .children(k)
                .iter()
                .map(|&c| self.edge_phi(NodeId::new(k.layer + 1, c)))
                .sum();
            within(granted, topology.node(k).trans_cap, tol)
        })
    }
}

/// Splits `total` among links in proportion to the square roots of their
/// loads. Zero-load links get nothing; if every load is zero the budget is
/// split evenly.
pub fn cauchy_split<T: Scalar>(total: T, outflows: &[T]) -> Vec<T> {
    let roots: Vec<T> = outflows.iter().map(|&o| o.sqrt_pos()).collect();
    let sum: T = roots.iter().copied().sum();
    if sum <= T::zero() {
        let n = T::from_usize(outflows.len().max(1)).unwrap();
        return vec![total / n; outflows.len()];
    }
    roots.into_iter().map(|r| total * r / sum).collect()
}

fn child_outflows<T: Scalar>(
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    s: &Assignment<T>,
    flow: &FlowState<T>,
    parent: NodeId,
) -> Vec<T> {
    topology
        .children(parent)
        .iter()
        .map(|&c| node_outflow(topology, NodeId::new(parent.layer + 1, c), flow, s, scenario))
        .collect()
}

/// Latency-minimizing allocation for a fixed split: every node runs at full
/// compute capacity and each parent divides its transmission budget by
/// [`cauchy_split`].
pub fn cauchy_allocate<T: Scalar>(
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    s: &Assignment<T>,
) -> Allocation<T> {
    let flow = propagate_flows(topology, scenario, s);
    let mut alloc = Allocation::zeros(topology);
    for id in topology.node_ids() {
        alloc.set_theta(id, topology.node(id).compute_cap);
    }
    for k in topology.parents() {
        let outflows = child_outflows(topology, scenario, s, &flow, k);
        let shares = cauchy_split(topology.node(k).trans_cap, &outflows);
        for (&c, share) in topology.children(k).iter().zip(shares) {
            alloc.set_edge_phi(NodeId::new(k.layer + 1, c), share);
        }
    }
    alloc
}

/// Per-edge check under the square-root split: `√o_j·Σ√o ≤ φ` for every
/// child `j` of every parent. Equivalent to each link carrying no more than
/// the capacity it is granted, and stricter than the aggregate row.
pub fn edge_guard_holds<T: Scalar>(
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    s: &Assignment<T>,
    tol: T,
) -> bool {
    let flow = propagate_flows(topology, scenario, s);
    topology.parents().all(|k| {
        let outflows = child_outflows(topology, scenario, s, &flow, k);
        edge_guard_star(&outflows, topology.node(k).trans_cap, tol)
    })
}

/// The per-edge check for one parent.
pub fn edge_guard_star<T: Scalar>(outflows: &[T], phi: T, tol: T) -> bool {
    let sum: T = outflows.iter().map(|&o| o.sqrt_pos()).sum();
    outflows
        .iter()
        .all(|&o| within(o.sqrt_pos() * sum, phi, tol))
}
