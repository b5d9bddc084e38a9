//! Steady-state flow propagation.
//!
//! Each node receives raw data `λ` and already-processed data `β` from its
//! children, processes the fraction `s` of its raw input, and forwards
//! `ρ·s·λ + (1 − s)·λ + β` upward. In steady state the raw data a parent
//! receives from a child is exactly the part the child did not process.

use serde::Serialize;

use crate::scalar::Scalar;
use crate::scenario::{Assignment, Scenario};
use crate::topology::{NodeId, Topology};

/// Raw-arrival and processed-arrival rates at every node, top-down.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowState<T> {
    raw: Vec<Vec<T>>,
    processed: Vec<Vec<T>>,
}

impl<T: Scalar> FlowState<T> {
    /// `λ` at `id`. For the cloud this is the raw data it must process.
    pub fn raw_arrival(&self, id: NodeId) -> T {
        self.raw[id.layer][id.index]
    }

    /// `β` at `id`.
    pub fn processed_in(&self, id: NodeId) -> T {
        self.processed[id.layer][id.index]
    }

    pub fn cc_raw(&self) -> T {
        self.raw[0][0]
    }

    pub fn cc_processed(&self) -> T {
        self.processed[0][0]
    }
}

/// Uplink load of a node: processed output, unprocessed remainder and
/// pass-through processed data.
#[inline]
pub fn outflow<T: Scalar>(split: T, raw: T, processed_in: T, rho: T) -> T {
    rho * split * raw + (T::one() - split) * raw + processed_in
}

/// Bottom-up pass computing `λ` and `β` for every node.
///
/// # Panics
///
/// If the scenario or assignment does not match the topology's dimensions.
pub fn propagate_flows<T: Scalar>(
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    s: &Assignment<T>,
) -> FlowState<T> {
    let ed = topology.device_layer();
    assert_eq!(scenario.gen_rates().len(), topology.device_count(), "device count mismatch");
    assert_eq!(s.dim(), topology.dim(), "assignment dimension mismatch");
    let rho = scenario.rho();

    let mut raw: Vec<Vec<T>> = topology.layers().iter().map(|l| vec![T::zero(); l.len()]).collect();
    let mut processed = raw.clone();
    raw[ed].copy_from_slice(scenario.gen_rates());

    for l in (0..ed).rev() {
        for j in 0..raw[l].len() {
            let (mut lam, mut beta) = (T::zero(), T::zero());
            for &i in topology.children(NodeId::new(l, j)) {
                let child = NodeId::new(l + 1, i);
                let si = s.get(topology.var_index(child).expect("non-cloud node"));
                let li = raw[l + 1][i];
                lam = lam + (T::one() - si) * li;
                beta = beta + processed[l + 1][i] + rho * si * li;
            }
            raw[l][j] = lam;
            processed[l][j] = beta;
        }
    }
    FlowState { raw, processed }
}

/// Full uplink load of a non-cloud node.
pub fn node_outflow<T: Scalar>(
    topology: &Topology<T>,
    node: NodeId,
    flow: &FlowState<T>,
    s: &Assignment<T>,
    scenario: &Scenario<T>,
) -> T {
    let var = topology.var_index(node).expect("the cloud has no uplink");
    outflow(
        s.get(var),
        flow.raw_arrival(node),
        flow.processed_in(node),
        scenario.rho(),
    )
}
