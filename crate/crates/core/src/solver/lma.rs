//! Latency minimization by vertex enumeration.
//!
//! The lower envelope `L_min` is concave in processed coordinates, so its
//! minimum over the congestion-free polytope sits at a vertex. Every vertex
//! is visited, mapped back to a split, given the square-root allocation and
//! scored.

use std::cmp::Ordering;

use serde::Serialize;

use super::allocation::{cauchy_allocate, edge_guard_holds, Allocation};
use super::latency::{latency_lower_bound, system_latency, LatencyBreakdown};
use super::vertex::{enumerate_vertices, VertexOptions, DEFAULT_VERTEX_CAP};
use crate::constraints::{assemble_constraints, ConstraintSet};
use crate::scalar::Scalar;
use crate::scenario::{Assignment, Scenario};
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T> {
    /// Relative feasibility tolerance for constraint rows.
    pub feas_tol: T,
    /// Vertex de-duplication radius.
    pub dedup_tol: T,
    /// Slack below which a row counts as active.
    pub active_tol: T,
    /// Latencies closer than this are ties, broken by the smaller split.
    pub tie_tol: T,
    /// Row-subset budget for vertex enumeration.
    pub vertex_cap: u64,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            feas_tol: T::lit(1e-9),
            dedup_tol: T::lit(1e-8),
            active_tol: T::lit(1e-8),
            tie_tol: T::lit(1e-9),
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }
}

impl<T: Scalar> SolveOptions<T> {
    pub fn vertex_options(&self) -> VertexOptions<T> {
        VertexOptions {
            feas_tol: self.feas_tol,
            dedup_tol: self.dedup_tol,
            cap: self.vertex_cap,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolveDiagnostics {
    pub dim: usize,
    pub constraint_rows: usize,
    /// Row subsets (or grid points, for the oracle) examined.
    pub subsets_examined: u64,
    pub singular_subsets: u64,
    /// Distinct feasible vertices (or feasible grid points).
    pub vertices_examined: u64,
    /// Candidates that also passed the per-edge transmission check.
    pub feasible_vertices: u64,
    /// Candidates rejected only by the per-edge transmission check.
    pub edge_guard_rejections: u64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution<T> {
    pub s_star: Assignment<T>,
    /// Raw data processed per node, `s·λ`, in variable order.
    pub processed: Vec<T>,
    pub allocation: Allocation<T>,
    pub latency: LatencyBreakdown<T>,
    /// Indices into [`ConstraintSet::rows`].
    pub active_rows: Vec<usize>,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LmaOutcome<T> {
    Optimal(Solution<T>),
    /// No congestion-free split exists.
    Congested(SolveDiagnostics),
}

impl<T: Scalar> LmaOutcome<T> {
    pub fn solution(&self) -> Option<&Solution<T>> {
        match self {
            LmaOutcome::Optimal(s) => Some(s),
            LmaOutcome::Congested(_) => None,
        }
    }

    pub fn into_solution(self) -> Option<Solution<T>> {
        match self {
            LmaOutcome::Optimal(s) => Some(s),
            LmaOutcome::Congested(_) => None,
        }
    }

    pub fn is_congested(&self) -> bool {
        matches!(self, LmaOutcome::Congested(_))
    }

    pub fn diagnostics(&self) -> &SolveDiagnostics {
        match self {
            LmaOutcome::Optimal(s) => &s.diagnostics,
            LmaOutcome::Congested(d) => d,
        }
    }

    /// Optimal latency, if any.
    pub fn latency(&self) -> Option<T> {
        self.solution().map(|s| s.latency.total)
    }
}

/// Lexicographic order on split vectors.
pub(crate) fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// `true` when candidate `(l, s)` should replace the incumbent.
pub(crate) fn improves<T: Scalar>(l: T, s: &[T], best_l: T, best_s: &[T], tie: T) -> bool {
    let margin = tie * (T::one() + best_l.abs());
    if l < best_l - margin {
        true
    } else if l <= best_l + margin {
        lex_cmp(s, best_s) == Ordering::Less
    } else {
        false
    }
}

pub fn solve_lma<T: Scalar>(topology: &Topology<T>, scenario: &Scenario<T>) -> LmaOutcome<T> {
    solve_lma_with(topology, scenario, &SolveOptions::default())
}

pub fn solve_lma_with<T: Scalar>(
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    opts: &SolveOptions<T>,
) -> LmaOutcome<T> {
    let cs = assemble_constraints(topology, scenario);
    solve_on(topology, scenario, &cs, opts)
}

/// Solver body for a pre-assembled constraint set.
pub fn solve_on<T: Scalar>(
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    cs: &ConstraintSet<T>,
    opts: &SolveOptions<T>,
) -> LmaOutcome<T> {
    let mut diag = SolveDiagnostics {
        dim: cs.dim(),
        constraint_rows: cs.rows().len(),
        ..SolveDiagnostics::default()
    };
    let mut best: Option<(T, Assignment<T>, Vec<T>)> = None;
    let mut stream = enumerate_vertices(cs, opts.vertex_options());
    for v in &mut stream {
        diag.vertices_examined += 1;
        let s = cs.assignment_from_processed(&v.point);
        if !edge_guard_holds(topology, scenario, &s, opts.feas_tol) {
            diag.edge_guard_rejections += 1;
            continue;
        }
        diag.feasible_vertices += 1;
        let l = latency_lower_bound(topology, scenario, &s);
        let replace = match &best {
            None => true,
            Some((bl, bs, _)) => improves(l, s.values(), *bl, bs.values(), opts.tie_tol),
        };
        if replace {
            best = Some((l, s, v.point));
        }
    }
    let st = stream.stats();
    diag.subsets_examined = st.subsets_examined;
    diag.singular_subsets = st.singular_subsets;
    diag.truncated = st.truncated;

    match best {
        None => LmaOutcome::Congested(diag),
        Some((_, s_star, processed)) => {
            let allocation = cauchy_allocate(topology, scenario, &s_star);
            let latency = system_latency(topology, scenario, &s_star, &allocation);
            let active_rows = cs.active_rows(&processed, opts.active_tol);
            LmaOutcome::Optimal(Solution {
                s_star,
                processed,
                allocation,
                latency,
                active_rows,
                diagnostics: diag,
            })
        }
    }
}
