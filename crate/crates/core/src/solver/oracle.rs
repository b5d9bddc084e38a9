//! Exhaustive grid search over splits, used to cross-check [`solve_lma`].
//!
//! Each split takes values `0, h, 2h, …` (plus `1`), evaluated depth-first
//! bottom-up so compute and transmission rows prune whole subtrees of the
//! grid. A point is admissible under the same rules as the vertex solver:
//! every constraint row within tolerance and the per-edge transmission
//! check.
//!
//! [`solve_lma`]: super::lma::solve_lma

use rayon::prelude::*;
use thiserror::Error;

use super::allocation::cauchy_allocate;
use super::latency::system_latency;
use super::lma::{LmaOutcome, Solution, SolveDiagnostics};
use crate::constraints::assemble_constraints;
use crate::scalar::{within, Scalar};
use crate::scenario::{Assignment, Scenario};
use crate::topology::{NodeId, Topology};

pub const DEFAULT_ORACLE_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid step must lie in (0, 1], got {0}")]
    InvalidStep(f64),
    #[error("grid needs {required:.3e} evaluations, budget is {budget}")]
    BudgetExceeded { required: f64, budget: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions<T> {
    pub step: T,
    pub budget: u64,
    pub feas_tol: T,
    pub active_tol: T,
}

impl<T: Scalar> OracleOptions<T> {
    pub fn with_step(step: T) -> Self {
        Self {
            step,
            budget: DEFAULT_ORACLE_BUDGET,
            feas_tol: T::lit(1e-9),
            active_tol: T::lit(1e-8),
        }
    }
}

/// Grid values `k·h` for `k = 0, 1, …` up to 1, with 1 appended when the
/// step does not divide it.
pub fn grid_values<T: Scalar>(step: T) -> Vec<T> {
    let n = (T::one() / step + T::lit(1e-9)).floor().to_usize().unwrap();
    let mut v: Vec<T> = (0..=n).map(|k| (T::from_usize(k).unwrap() * step).min(T::one())).collect();
    if *v.last().unwrap() < T::one() - T::lit(1e-12) {
        v.push(T::one());
    }
    v
}

pub fn oracle_grid_search<T: Scalar>(
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    step: T,
) -> Result<LmaOutcome<T>, OracleError> {
    oracle_grid_search_with(topology, scenario, &OracleOptions::with_step(step))
}

struct Var<T> {
    gen: T,
    theta: T,
    phi: T,
    children: Vec<usize>,
}

struct Grid<'a, T> {
    vars: Vec<Var<T>>,
    top: Vec<usize>,
    cc_theta: T,
    cc_phi: T,
    /// Constraint rows in processed coordinates: `(coeffs, offset, bound)`.
    rows: Vec<(Vec<T>, T, T)>,
    /// `reach[v][r]`: smallest contribution variables after `v` can make
    /// to row `r`.
    reach: Vec<Vec<T>>,
    rho: T,
    tol: T,
    values: &'a [T],
}

#[derive(Clone)]
struct State<T> {
    s: Vec<T>,
    lam: Vec<T>,
    beta: Vec<T>,
    out: Vec<T>,
    partial: Vec<T>,
    feasible: u64,
    guard_prunes: u64,
    best: Option<(T, Vec<T>)>,
}

impl<T: Scalar> Grid<'_, T> {
    /// Load check for a parent whose children are all fixed; returns the
    /// transmission term on success.
    fn parent_term(&self, children: &[usize], phi: T, st: &mut State<T>) -> Option<T> {
        let total: T = children.iter().map(|&c| st.out[c]).sum();
        if !within(total, phi, self.tol) {
            return None;
        }
        let roots: T = children.iter().map(|&c| st.out[c].sqrt_pos()).sum();
        if !children
            .iter()
            .all(|&c| within(st.out[c].sqrt_pos() * roots, phi, self.tol))
        {
            st.guard_prunes += 1;
            return None;
        }
        Some(T::ratio(roots * roots, phi))
    }

    /// Writes the partial row values after fixing `p_v` and reports whether
    /// every row can still be met by some choice of the later variables.
    fn rows_reachable(&self, v: usize, p: T, st: &mut State<T>) -> bool {
        let k = self.rows.len();
        let (head, tail) = st.partial.split_at_mut((v + 1) * k);
        let prev = &head[v * k..];
        let next = &mut tail[..k];
        let mut ok = true;
        for (r, (coeffs, _, bound)) in self.rows.iter().enumerate() {
            next[r] = prev[r] + coeffs[v] * p;
            let least = next[r] + self.reach[v][r];
            ok &= within(least - self.tol * (T::one() + bound.abs()), *bound, self.tol);
        }
        ok
    }

    fn enter(&self, v: usize, st: &mut State<T>, acc: T, only: Option<usize>) {
        let var = &self.vars[v];
        let mut acc = acc;
        if var.children.is_empty() {
            st.lam[v] = var.gen;
            st.beta[v] = T::zero();
        } else {
            let (mut lam, mut beta) = (T::zero(), T::zero());
            for &c in &var.children {
                let p = st.s[c] * st.lam[c];
                lam = lam + st.lam[c] - p;
                beta = beta + st.beta[c] + self.rho * p;
            }
            st.lam[v] = lam;
            st.beta[v] = beta;
            match self.parent_term(&var.children, var.phi, st) {
                Some(t) => acc = acc + t,
                None => return,
            }
        }
        let lam = st.lam[v];
        let (first, last) = match only {
            Some(k) => (k, k + 1),
            None if lam <= T::zero() => (0, 1),
            None => (0, self.values.len()),
        };
        if lam <= T::zero() && first > 0 {
            return;
        }
        if v + 1 == self.vars.len() {
            return self.innermost(v, st, acc, first, last);
        }
        for &x in &self.values[first..last] {
            let p = x * lam;
            if !within(p, var.theta, self.tol) {
                break;
            }
            if !self.rows_reachable(v, p, st) {
                continue;
            }
            st.s[v] = x;
            st.out[v] = self.rho * p + lam - p + st.beta[v];
            self.enter(v + 1, st, acc + T::ratio(p, var.theta), None);
        }
    }

    /// Loop over the last variable, which always feeds the cloud directly.
    /// Everything that does not depend on it is summed once.
    fn innermost(&self, v: usize, st: &mut State<T>, acc: T, first: usize, last: usize) {
        let var = &self.vars[v];
        let (lam, beta) = (st.lam[v], st.beta[v]);
        let (mut lam0, mut load, mut roots, mut max_root) = (T::zero(), T::zero(), T::zero(), T::zero());
        for &c in self.top.iter().filter(|&&c| c != v) {
            lam0 = lam0 + st.lam[c] - st.s[c] * st.lam[c];
            load = load + st.out[c];
            let r = st.out[c].sqrt_pos();
            roots = roots + r;
            max_root = max_root.max(r);
        }
        for &x in &self.values[first..last] {
            let p = x * lam;
            if !within(p, var.theta, self.tol) {
                break;
            }
            let l0 = lam0 + lam - p;
            if !within(l0, self.cc_theta, self.tol) {
                continue;
            }
            let o = self.rho * p + lam - p + beta;
            if !within(load + o, self.cc_phi, self.tol) {
                continue;
            }
            let r = o.sqrt_pos();
            let sum = roots + r;
            if !within(max_root.max(r) * sum, self.cc_phi, self.tol) {
                st.guard_prunes += 1;
                continue;
            }
            st.feasible += 1;
            let l = acc
                + T::ratio(p, var.theta)
                + T::ratio(sum * sum, self.cc_phi)
                + T::ratio(l0, self.cc_theta);
            // depth-first order is lexicographic in s, so strict improvement
            // keeps the smallest split among exact ties
            if st.best.as_ref().map_or(true, |(bl, _)| l < *bl) {
                st.s[v] = x;
                st.best = Some((l, st.s.clone()));
            }
        }
    }
}

pub fn oracle_grid_search_with<T: Scalar>(
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    opts: &OracleOptions<T>,
) -> Result<LmaOutcome<T>, OracleError> {
    let step = opts.step;
    if !(step > T::zero() && step <= T::one()) {
        return Err(OracleError::InvalidStep(step.to_f64().unwrap_or(f64::NAN)));
    }
    let values = grid_values(step);
    let dim = topology.dim();
    let required = (values.len() as f64).powi(dim as i32);
    if required > opts.budget as f64 {
        return Err(OracleError::BudgetExceeded {
            required,
            budget: opts.budget,
        });
    }

    let cs = assemble_constraints(topology, scenario);
    let rows: Vec<(Vec<T>, T, T)> = cs
        .rows()
        .iter()
        .map(|r| (r.coeffs.clone(), r.offset, r.bound))
        .collect();
    let upper: Vec<T> = (0..dim)
        .map(|v| cs.subtree_gen(v).min(topology.node(cs.node_of(v)).compute_cap))
        .collect();
    let reach: Vec<Vec<T>> = (0..dim)
        .map(|v| {
            rows.iter()
                .map(|(c, _, _)| (v + 1..dim).map(|u| c[u].min(T::zero()) * upper[u]).sum())
                .collect()
        })
        .collect();
    let k = rows.len();
    let mut partial = vec![T::zero(); (dim + 1) * k];
    for (r, (_, offset, _)) in rows.iter().enumerate() {
        partial[r] = *offset;
    }

    let ed = topology.device_layer();
    let vars: Vec<Var<T>> = topology
        .variables()
        .iter()
        .map(|&id| {
            let spec = topology.node(id);
            Var {
                gen: if id.layer == ed { scenario.gen_rates()[id.index] } else { T::zero() },
                theta: spec.compute_cap,
                phi: spec.trans_cap,
                children: topology
                    .children(id)
                    .iter()
                    .map(|&c| topology.var_index(NodeId::new(id.layer + 1, c)).unwrap())
                    .collect(),
            }
        })
        .collect();
    let top = topology
        .children(NodeId::CLOUD)
        .iter()
        .map(|&c| topology.var_index(NodeId::new(1, c)).unwrap())
        .collect();
    let cloud = topology.node(NodeId::CLOUD);
    let grid = Grid {
        vars,
        top,
        cc_theta: cloud.compute_cap,
        cc_phi: cloud.trans_cap,
        rows: rows.clone(),
        reach,
        rho: scenario.rho(),
        tol: opts.feas_tol,
        values: &values,
    };
    let fresh = State {
        s: vec![T::zero(); dim],
        lam: vec![T::zero(); dim],
        beta: vec![T::zero(); dim],
        out: vec![T::zero(); dim],
        partial,
        feasible: 0,
        guard_prunes: 0,
        best: None,
    };
    // split on the first variable; partial results are merged in grid order
    let parts: Vec<State<T>> = (0..values.len())
        .into_par_iter()
        .map(|k| {
            let mut st = fresh.clone();
            grid.enter(0, &mut st, T::zero(), Some(k));
            st
        })
        .collect();

    let mut diag = SolveDiagnostics {
        dim,
        constraint_rows: 0,
        subsets_examined: required as u64,
        ..SolveDiagnostics::default()
    };
    let mut best: Option<(T, Vec<T>)> = None;
    for st in parts {
        diag.vertices_examined += st.feasible;
        diag.edge_guard_rejections += st.guard_prunes;
        if let Some((l, s)) = st.best {
            if best.as_ref().map_or(true, |(bl, _)| l < *bl) {
                best = Some((l, s));
            }
        }
    }
    diag.feasible_vertices = diag.vertices_examined;

    diag.constraint_rows = cs.rows().len();
    Ok(match best {
        None => LmaOutcome::Congested(diag),
        Some((_, s)) => {
            let s_star = Assignment::clamped(s);
            let processed = cs.processed_from_assignment(&s_star);
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
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::NodeSpec;

    #[test]
    fn grid_covers_unit_interval() {
        let g: Vec<f64> = grid_values(0.25);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g: Vec<f64> = grid_values(0.3);
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(grid_values(0.01f64).len(), 101);
        assert_eq!(grid_values(1.0f64), vec![0.0, 1.0]);
    }

    #[test]
    fn step_and_budget_errors() {
        let t = Topology::chain(vec![NodeSpec::new(2.0, 2.0), NodeSpec::device(0.2)]).unwrap();
        let sc = Scenario::new(vec![1.0], 0.1).unwrap();
        assert!(matches!(oracle_grid_search(&t, &sc, 1.5), Err(OracleError::InvalidStep(_))));
        assert!(matches!(oracle_grid_search(&t, &sc, 0.0), Err(OracleError::InvalidStep(_))));
        let tight = OracleOptions {
            budget: 10,
            ..OracleOptions::with_step(0.01)
        };
        assert!(matches!(
            oracle_grid_search_with(&t, &sc, &tight),
            Err(OracleError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn chain_fixture() {
        let t: Topology<f64> = Topology::chain(vec![
            NodeSpec::new(2.0, 2.0),
            NodeSpec::new(0.4, 2.0),
            NodeSpec::device(0.2),
        ])
        .unwrap();
        let sc = Scenario::new(vec![1.0], 0.1).unwrap();
        let sol = oracle_grid_search(&t, &sc, 0.01).unwrap().into_solution().unwrap();
        assert_eq!(sol.s_star.values(), &[0.0, 0.0]);
        assert!((sol.latency.total - 1.5).abs() < 1e-12);
        let over = oracle_grid_search(&t, &Scenario::new(vec![10.0], 0.1).unwrap(), 0.01).unwrap();
        assert!(over.is_congested());
    }
}
