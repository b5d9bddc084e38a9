//! Maximum supportable load, bottleneck attribution and the effect of
//! inserting a server layer.

use serde::Serialize;
use thiserror::Error;

use crate::constraints::{assemble_constraints, ConstraintSet, RowKind};
use crate::flow::{node_outflow, propagate_flows};
use crate::scalar::Scalar;
use crate::scenario::{Assignment, Scenario};
use crate::solver::allocation::edge_guard_holds;
use crate::solver::lma::SolveOptions;
use crate::solver::vertex::enumerate_vertices;
use crate::topology::{NodeId, NodeSpec, Topology, TopologyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RobustnessError {
    #[error("direction vector needs at least one positive rate")]
    NoDemand,
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessOptions<T> {
    /// Bisection stops once the bracket is narrower than `tol·(1 + lo)`.
    pub tol: T,
    pub max_iter: usize,
    /// Relative slack under which a row counts as tight at `t*`.
    pub tight_tol: T,
    pub solve: SolveOptions<T>,
}

impl<T: Scalar> Default for RobustnessOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-9),
            max_iter: 60,
            tight_tol: T::lit(1e-6),
            solve: SolveOptions::default(),
        }
    }
}

/// Largest `t` in `[lo, hi]` with `feasible(t)`, assuming feasibility is
/// monotone and `feasible(lo)`.
pub fn bisect_feasible<T: Scalar>(
    mut lo: T,
    mut hi: T,
    tol: T,
    max_iter: usize,
    mut feasible: impl FnMut(T) -> bool,
) -> T {
    if feasible(hi) {
        return hi;
    }
    for _ in 0..max_iter {
        if hi - lo <= tol * (T::one() + lo) {
            break;
        }
        let mid = (lo + hi) / T::lit(2.0);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `Σ θ^u / Σ direction`: no scale beyond this can be processed.
pub fn conservation_ceiling<T: Scalar>(topology: &Topology<T>, direction: &Scenario<T>) -> T {
    let capacity: T = topology.node_ids().map(|id| topology.node(id).compute_cap).sum();
    capacity / direction.total_rate()
}

/// Some vertex of the polytope at this scenario passes every check the
/// solver applies.
pub fn is_admissible<T: Scalar>(
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    opts: &SolveOptions<T>,
) -> bool {
    let cs = assemble_constraints(topology, scenario);
    let found = admissible_vertices(topology, scenario, &cs, opts).next().is_some();
    found
}

fn admissible_vertices<'a, T: Scalar>(
    topology: &'a Topology<T>,
    scenario: &'a Scenario<T>,
    cs: &'a ConstraintSet<T>,
    opts: &SolveOptions<T>,
) -> impl Iterator<Item = Vec<T>> + 'a {
    let tol = opts.feas_tol;
    enumerate_vertices(cs, opts.vertex_options())
        .map(|v| v.point)
        .filter(move |p| edge_guard_holds(topology, scenario, &cs.assignment_from_processed(p), tol))
}

/// Largest uniform scale `t*` of `direction` for which a congestion-free
/// split exists.
pub fn max_supportable_rate<T: Scalar>(
    topology: &Topology<T>,
    direction: &Scenario<T>,
    opts: &RobustnessOptions<T>,
) -> Result<T, RobustnessError> {
    if !(direction.total_rate() > T::zero()) {
        return Err(RobustnessError::NoDemand);
    }
    let hi = conservation_ceiling(topology, direction) * T::lit(1.01);
    Ok(bisect_feasible(T::zero(), hi, opts.tol, opts.max_iter, |t| {
        is_admissible(topology, &direction.scaled(t), &opts.solve)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BottleneckKind {
    ComputeShortage,
    TransmissionShortage,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowSlack<T> {
    pub row: usize,
    pub kind: RowKind,
    /// Largest slack over all admissible vertices at `t*`.
    pub max_slack: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BottleneckReport<T> {
    pub kind: BottleneckKind,
    /// Layer of the highest binding transmission parent (smallest index).
    pub layer: Option<usize>,
    /// Rows tight at every admissible vertex.
    pub binding_rows: Vec<usize>,
    pub slack: Vec<RowSlack<T>>,
    pub note: Option<String>,
}

/// Attributes `t*` to a resource family by inspecting which rows stay tight
/// over the whole admissible set at scale `t_star`.
pub fn classify_bottleneck<T: Scalar>(
    topology: &Topology<T>,
    direction: &Scenario<T>,
    t_star: T,
    opts: &RobustnessOptions<T>,
) -> BottleneckReport<T> {
    let scenario = direction.scaled(t_star);
    let cs = assemble_constraints(topology, &scenario);
    let rows = cs.rows();
    let tight = |slack: T, bound: T| slack <= opts.tight_tol * (T::one() + bound.abs());

    let mut max_slack = vec![T::neg_infinity(); rows.len()];
    let mut compute_only_vertex = false;
    let mut compute_all_vertex = false;
    let mut any = false;
    for p in admissible_vertices(topology, &scenario, &cs, &opts.solve) {
        any = true;
        let mut all_compute = true;
        let mut some_trans = false;
        for (i, r) in rows.iter().enumerate() {
            let sl = r.slack(&p);
            max_slack[i] = max_slack[i].max(sl);
            let t = tight(sl, r.bound);
            if r.kind.is_compute() && !t {
                all_compute = false;
            }
            if r.kind.is_transmission() && t {
                some_trans = true;
            }
        }
        compute_all_vertex |= all_compute;
        compute_only_vertex |= all_compute && !some_trans;
    }
    let binding_rows: Vec<usize> = if any {
        (0..rows.len())
            .filter(|&i| tight(max_slack[i], rows[i].bound))
            .collect()
    } else {
        Vec::new()
    };
    let slack = rows
        .iter()
        .enumerate()
        .map(|(i, r)| RowSlack {
            row: i,
            kind: r.kind,
            max_slack: max_slack[i],
        })
        .collect();
    let trans_layer = binding_rows
        .iter()
        .filter_map(|&i| match rows[i].kind {
            RowKind::Transmission(k) => Some(k.layer),
            _ => None,
        })
        .min();

    let (kind, layer, note) = if let Some(n0) = trans_layer {
        let note = compute_all_vertex.then(|| "mixed: compute rows are also tight".to_string());
        (BottleneckKind::TransmissionShortage, Some(n0), note)
    } else if compute_only_vertex {
        (BottleneckKind::ComputeShortage, None, None)
    } else if !any {
        (BottleneckKind::None, None, Some("no admissible split at this scale".to_string()))
    } else {
        (
            BottleneckKind::None,
            None,
            Some("neither resource family is exhausted; limited by subtree supply".to_string()),
        )
    };
    BottleneckReport {
        kind,
        layer,
        binding_rows,
        slack,
        note,
    }
}

/// A full server layer inserted between layers `position - 1` and
/// `position`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InsertionSpec<T> {
    pub position: usize,
    pub nodes: Vec<NodeSpec<T>>,
    /// Parent (on layer `position - 1`) of each new node.
    pub upper_parents: Vec<usize>,
    /// New-layer parent of each existing node on layer `position`.
    pub lower_parents: Vec<usize>,
}

impl<T: Scalar> InsertionSpec<T> {
    pub fn apply(&self, topology: &Topology<T>) -> Result<Topology<T>, TopologyError> {
        topology.insert_layer(
            self.position,
            self.nodes.clone(),
            &self.upper_parents,
            &self.lower_parents,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InsertionEffect {
    Enhances,
    NoEffect,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InsertionReport<T> {
    pub t_before: T,
    pub t_after: T,
    pub bottleneck: BottleneckReport<T>,
    /// Every new node computes and can carry what its children send.
    pub precondition_met: bool,
    pub predicted: InsertionEffect,
    pub observed: InsertionEffect,
    pub consistent: bool,
}

/// Compares `t*` before and after `insertion` against the positional rule:
/// a compute shortage is relieved by a computing layer anywhere; a
/// transmission shortage at layer `n0` only by a layer at position `n0 + 1`
/// or deeper.
pub fn evaluate_insertion<T: Scalar>(
    topology: &Topology<T>,
    insertion: &InsertionSpec<T>,
    direction: &Scenario<T>,
    opts: &RobustnessOptions<T>,
) -> Result<InsertionReport<T>, RobustnessError> {
    let after = insertion.apply(topology)?;
    let t_before = max_supportable_rate(topology, direction, opts)?;
    let t_after = max_supportable_rate(&after, direction, opts)?;
    let bottleneck = classify_bottleneck(topology, direction, t_before, opts);

    let computes = insertion.nodes.iter().all(|n| n.compute_cap > T::zero());
    let precondition_met = computes && carries_lower_layer(topology, insertion, direction, t_before, opts);
    let position_ok = match (bottleneck.kind, bottleneck.layer) {
        (BottleneckKind::TransmissionShortage, Some(n0)) => insertion.position > n0,
        _ => true,
    };
    let predicted = if precondition_met && position_ok {
        InsertionEffect::Enhances
    } else {
        InsertionEffect::NoEffect
    };
    let observed = if t_after > t_before * (T::one() + T::lit(1e-6)) {
        InsertionEffect::Enhances
    } else {
        InsertionEffect::NoEffect
    };
    Ok(InsertionReport {
        t_before,
        t_after,
        bottleneck,
        precondition_met,
        predicted,
        observed,
        consistent: predicted == observed,
    })
}

/// Whether some admissible split at `t` leaves every new node able to
/// forward its prospective children's outflow.
fn carries_lower_layer<T: Scalar>(
    topology: &Topology<T>,
    insertion: &InsertionSpec<T>,
    direction: &Scenario<T>,
    t: T,
    opts: &RobustnessOptions<T>,
) -> bool {
    let scenario = direction.scaled(t);
    let cs = assemble_constraints(topology, &scenario);
    let lower = insertion.position;
    let mut candidates = admissible_vertices(topology, &scenario, &cs, &opts.solve);
    candidates.any(|p| {
        let s: Assignment<T> = cs.assignment_from_processed(&p);
        let flow = propagate_flows(topology, &scenario, &s);
        let mut load = vec![T::zero(); insertion.nodes.len()];
        for (j, &parent) in insertion.lower_parents.iter().enumerate() {
            load[parent] = load[parent] + node_outflow(topology, NodeId::new(lower, j), &flow, &s, &scenario);
        }
        load.iter()
            .zip(&insertion.nodes)
            .all(|(&o, n)| o < n.trans_cap)
    })
}
