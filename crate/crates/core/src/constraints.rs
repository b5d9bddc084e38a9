//! Congestion-free constraint system.
//!
//! Rows are expressed in *processed-volume* coordinates: variable `p_i` is
//! the raw data node `i` processes per second, `p_i = s_i·λ_i`. Written in
//! `p`, every congestion-free condition is affine:
//!
//! ```text
//! box-lower     -p_i                            ≤ 0
//! box-upper      Σ_{j ∈ subtree(i)} p_j         ≤ G_i          (s_i ≤ 1)
//! compute        p_i                            ≤ θ_i^u
//! transmission   G_k − (1−ρ)·Σ_{j below k} p_j  ≤ φ_k          (per parent k)
//! cloud          G − Σ_j p_j                    ≤ θ_0^u
//! ```
//!
//! where `G_i` is the total generation rate of the devices under `i`
//! (inclusive). The split is recovered as `s_i = p_i / λ_i(p)` with
//! `λ_i(p) = G_i − Σ_{j strictly below i} p_j`, and `s_i = 0` when `λ_i = 0`.

use std::fmt;

use serde::Serialize;

use crate::scalar::{within, Scalar};
use crate::scenario::{Assignment, Scenario};
use crate::topology::{NodeId, Topology};

/// Provenance of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", content = "node", rename_all = "kebab-case")]
pub enum RowKind {
    BoxLower(NodeId),
    BoxUpper(NodeId),
    Compute(NodeId),
    Transmission(NodeId),
    CloudCompute,
}

impl RowKind {
    /// Compute-capacity rows, the cloud included.
    pub fn is_compute(&self) -> bool {
        matches!(self, RowKind::Compute(_) | RowKind::CloudCompute)
    }

    pub fn is_transmission(&self) -> bool {
        matches!(self, RowKind::Transmission(_))
    }
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowKind::BoxLower(n) => write!(f, "box-lower{n}"),
            RowKind::BoxUpper(n) => write!(f, "box-upper{n}"),
            RowKind::Compute(n) => write!(f, "compute{n}"),
            RowKind::Transmission(n) => write!(f, "transmission{n}"),
            RowKind::CloudCompute => write!(f, "cc-compute"),
        }
    }
}

/// `offset + coeffs·p ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row<T> {
    pub coeffs: Vec<T>,
    pub offset: T,
    pub bound: T,
    pub kind: RowKind,
}

impl<T: Scalar> Row<T> {
    pub fn value(&self, p: &[T]) -> T {
        self.coeffs
            .iter()
            .zip(p)
            .fold(self.offset, |acc, (&a, &x)| acc + a * x)
    }

    /// `bound − value`; negative when violated.
    pub fn slack(&self, p: &[T]) -> T {
        self.bound - self.value(p)
    }

    /// Right-hand side once the offset is moved across: `coeffs·p ≤ rhs`.
    pub fn rhs(&self) -> T {
        self.bound - self.offset
    }

    /// `value ≤ bound·(1 + tol) + tol` for nonnegative bounds.
    pub fn satisfied(&self, p: &[T], tol: T) -> bool {
        within(self.value(p), self.bound, tol)
    }

    /// Active within `tol` relative to the bound's magnitude.
    pub fn is_tight(&self, p: &[T], tol: T) -> bool {
        self.slack(p).abs() <= tol * (T::one() + self.bound.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct VarInfo<T> {
    node: NodeId,
    /// Total generation of the devices in this node's subtree.
    subtree_gen: T,
    /// Variable indices of direct children (empty for devices).
    child_vars: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation<T> {
    pub row: usize,
    pub kind: RowKind,
    pub slack: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport<T> {
    pub feasible: bool,
    pub violations: Vec<Violation<T>>,
}

/// Row counts by family. `compute` includes the cloud row; box rows are
/// not counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConstraintCount {
    pub compute: usize,
    pub transmission: usize,
    pub total: usize,
}

/// `(K_c, K_t, K)`: one compute row per node (cloud included), one
/// transmission row per parent node.
pub fn constraint_count<T: Scalar>(topology: &Topology<T>) -> ConstraintCount {
    let compute = topology.node_count();
    let transmission = topology.parents().count();
    ConstraintCount {
        compute,
        transmission,
        total: compute + transmission,
    }
}

/// The congestion-free polytope for one topology/scenario pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet<T> {
    rows: Vec<Row<T>>,
    vars: Vec<VarInfo<T>>,
}

/// Emits box, compute, transmission and cloud rows, in that order.
pub fn assemble_constraints<T: Scalar>(
    topology: &Topology<T>,
    scenario: &Scenario<T>,
) -> ConstraintSet<T> {
    assert_eq!(scenario.gen_rates().len(), topology.device_count(), "device count mismatch");
    let dim = topology.dim();
    let rho = scenario.rho();
    let ed = topology.device_layer();

    let mut vars: Vec<VarInfo<T>> = Vec::with_capacity(dim);
    for &node in topology.variables() {
        let (subtree_gen, child_vars) = if node.layer == ed {
            (scenario.gen_rates()[node.index], Vec::new())
        } else {
            let cv: Vec<usize> = topology
                .children(node)
                .iter()
                .map(|&c| topology.var_index(NodeId::new(node.layer + 1, c)).unwrap())
                .collect();
            let g = cv.iter().map(|&c| vars[c].subtree_gen).sum();
            (g, cv)
        };
        vars.push(VarInfo {
            node,
            subtree_gen,
            child_vars,
        });
    }

    // subtree membership, inclusive
    let mut subtree: Vec<Vec<usize>> = Vec::with_capacity(dim);
    for (v, info) in vars.iter().enumerate() {
        let mut members = vec![v];
        for &c in &info.child_vars {
            members.extend_from_slice(&subtree[c]);
        }
        subtree.push(members);
    }
    let indicator = |members: &[usize], weight: T| {
        let mut c = vec![T::zero(); dim];
        for &m in members {
            c[m] = weight;
        }
        c
    };

    let mut rows = Vec::new();
    for (v, info) in vars.iter().enumerate() {
        rows.push(Row {
            coeffs: indicator(&[v], -T::one()),
            offset: T::zero(),
            bound: T::zero(),
            kind: RowKind::BoxLower(info.node),
        });
    }
    for (v, info) in vars.iter().enumerate() {
        rows.push(Row {
            coeffs: indicator(&subtree[v], T::one()),
            offset: T::zero(),
            bound: info.subtree_gen,
            kind: RowKind::BoxUpper(info.node),
        });
    }
    for (v, info) in vars.iter().enumerate() {
        rows.push(Row {
            coeffs: indicator(&[v], T::one()),
            offset: T::zero(),
            bound: topology.node(info.node).compute_cap,
            kind: RowKind::Compute(info.node),
        });
    }
    for parent in topology.parents() {
        let below: Vec<usize> = topology
            .children(parent)
            .iter()
            .flat_map(|&c| {
                let cv = topology.var_index(NodeId::new(parent.layer + 1, c)).unwrap();
                subtree[cv].iter().copied()
            })
            .collect();
        let gen: T = topology
            .children(parent)
            .iter()
            .map(|&c| vars[topology.var_index(NodeId::new(parent.layer + 1, c)).unwrap()].subtree_gen)
            .sum();
        rows.push(Row {
            coeffs: indicator(&below, -(T::one() - rho)),
            offset: gen,
            bound: topology.node(parent).trans_cap,
            kind: RowKind::Transmission(parent),
        });
    }
    rows.push(Row {
        coeffs: vec![-T::one(); dim],
        offset: scenario.total_rate(),
        bound: topology.node(NodeId::CLOUD).compute_cap,
        kind: RowKind::CloudCompute,
    });

    ConstraintSet { rows, vars }
}

impl<T: Scalar> ConstraintSet<T> {
    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn rows(&self) -> &[Row<T>] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &Row<T> {
        &self.rows[index]
    }

    /// Number of rows of each provenance, `(box, compute incl. cloud, transmission)`.
    pub fn family_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for r in &self.rows {
            match r.kind {
                RowKind::BoxLower(_) | RowKind::BoxUpper(_) => counts.0 += 1,
                RowKind::Compute(_) | RowKind::CloudCompute => counts.1 += 1,
                RowKind::Transmission(_) => counts.2 += 1,
            }
        }
        counts
    }

    /// `λ_i(p)`: raw data reaching variable `var` given processing below it.
    pub fn raw_arrival(&self, p: &[T], var: usize) -> T {
        self.raw_arrival_with(p, var, &mut Vec::new())
    }

    fn raw_arrival_with(&self, p: &[T], var: usize, scratch: &mut Vec<T>) -> T {
        let sub = self.subtree_processed(p, scratch);
        let info = &self.vars[var];
        info.subtree_gen - info.child_vars.iter().map(|&c| sub[c]).sum::<T>()
    }

    /// Processed volume of each variable's inclusive subtree.
    fn subtree_processed<'a>(&self, p: &[T], scratch: &'a mut Vec<T>) -> &'a [T] {
        scratch.clear();
        for (v, info) in self.vars.iter().enumerate() {
            let below: T = info.child_vars.iter().map(|&c| scratch[c]).sum();
            scratch.push(p[v] + below);
        }
        scratch
    }

    /// Maps a split vector to processed volumes.
    pub fn processed_from_assignment(&self, s: &Assignment<T>) -> Vec<T> {
        assert_eq!(s.dim(), self.dim(), "assignment dimension mismatch");
        let mut p = Vec::with_capacity(self.dim());
        let mut sub: Vec<T> = Vec::with_capacity(self.dim());
        for (v, info) in self.vars.iter().enumerate() {
            let below: T = info.child_vars.iter().map(|&c| sub[c]).sum();
            let lam = info.subtree_gen - below;
            let pv = s.get(v) * lam;
            p.push(pv);
            sub.push(pv + below);
        }
        p
    }

    /// Inverse of [`processed_from_assignment`](Self::processed_from_assignment);
    /// `s = 0` wherever no raw data arrives.
    pub fn assignment_from_processed(&self, p: &[T]) -> Assignment<T> {
        let mut scratch = Vec::new();
        let sub = self.subtree_processed(p, &mut scratch).to_vec();
        let eps = T::lit(1e-15);
        let s = self
            .vars
            .iter()
            .enumerate()
            .map(|(v, info)| {
                let lam = info.subtree_gen - info.child_vars.iter().map(|&c| sub[c]).sum::<T>();
                if lam <= eps * (T::one() + info.subtree_gen) {
                    T::zero()
                } else {
                    p[v] / lam
                }
            })
            .collect();
        Assignment::clamped(s)
    }

    pub fn node_of(&self, var: usize) -> NodeId {
        self.vars[var].node
    }

    pub fn subtree_gen(&self, var: usize) -> T {
        self.vars[var].subtree_gen
    }

    pub fn child_vars(&self, var: usize) -> &[usize] {
        &self.vars[var].child_vars
    }

    /// Feasibility of a point in processed coordinates.
    pub fn check_point(&self, p: &[T], tol: T) -> FeasibilityReport<T> {
        let violations: Vec<_> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.satisfied(p, tol))
            .map(|(i, r)| Violation {
                row: i,
                kind: r.kind,
                slack: r.slack(p),
            })
            .collect();
        FeasibilityReport {
            feasible: violations.is_empty(),
            violations,
        }
    }

    pub fn is_feasible_point(&self, p: &[T], tol: T) -> bool {
        self.rows.iter().all(|r| r.satisfied(p, tol))
    }

    /// Rows active at `p` within `tol`.
    pub fn active_rows(&self, p: &[T], tol: T) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_tight(p, tol))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Checks a split vector against every row: `a·p ≤ b·(1 + tol) + tol`.
pub fn check_feasible<T: Scalar>(
    cs: &ConstraintSet<T>,
    s: &Assignment<T>,
    tol: T,
) -> FeasibilityReport<T> {
    cs.check_point(&cs.processed_from_assignment(s), tol)
}
