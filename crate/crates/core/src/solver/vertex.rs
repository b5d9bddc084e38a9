//! Basic feasible points of a [`ConstraintSet`] by brute force over
//! `D`-subsets of rows.

use serde::Serialize;

use crate::constraints::ConstraintSet;
use crate::scalar::Scalar;

/// Default number of row subsets examined before truncating.
pub const DEFAULT_VERTEX_CAP: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexOptions<T> {
    pub feas_tol: T,
    /// Points closer than this (Euclidean, in processed coordinates) are
    /// the same vertex.
    pub dedup_tol: T,
    /// Maximum number of row subsets to examine.
    pub cap: u64,
}

impl<T: Scalar> Default for VertexOptions<T> {
    fn default() -> Self {
        Self {
            feas_tol: T::lit(1e-9),
            dedup_tol: T::lit(1e-8),
            cap: DEFAULT_VERTEX_CAP,
        }
    }
}

/// A vertex in processed coordinates with the row subset that produced it
/// first.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex<T> {
    pub point: Vec<T>,
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct VertexStats {
    pub subsets_examined: u64,
    pub singular_subsets: u64,
    pub infeasible_points: u64,
    pub duplicates: u64,
    pub truncated: bool,
}

/// Lazily enumerates vertices in lexicographic order of row subsets.
///
/// The first subset is the block of `p ≥ 0` rows, so the origin (everything
/// sent to the cloud) is always tried first.
pub struct VertexStream<'a, T> {
    cs: &'a ConstraintSet<T>,
    opts: VertexOptions<T>,
    combo: Option<Vec<usize>>,
    found: Vec<Vec<T>>,
    stats: VertexStats,
    matrix: Vec<T>,
    rhs: Vec<T>,
}

pub fn enumerate_vertices<T: Scalar>(
    cs: &ConstraintSet<T>,
    opts: VertexOptions<T>,
) -> VertexStream<'_, T> {
    let d = cs.dim();
    assert!(d >= 1, "vertex enumeration needs at least one variable");
    let combo = (cs.rows().len() >= d).then(|| (0..d).collect());
    VertexStream {
        cs,
        opts,
        combo,
        found: Vec::new(),
        stats: VertexStats::default(),
        matrix: vec![T::zero(); d * d],
        rhs: vec![T::zero(); d],
    }
}

impl<T: Scalar> VertexStream<'_, T> {
    pub fn stats(&self) -> VertexStats {
        self.stats
    }

    fn advance(&mut self) {
        let k = self.cs.rows().len();
        let Some(c) = self.combo.as_mut() else { return };
        let d = c.len();
        let mut i = d;
        while i > 0 {
            i -= 1;
            if c[i] < k - d + i {
                c[i] += 1;
                for j in i + 1..d {
                    c[j] = c[j - 1] + 1;
                }
                return;
            }
        }
        self.combo = None;
    }

    fn solve_current(&mut self) -> Option<Vec<T>> {
        let combo = self.combo.as_ref()?;
        let d = combo.len();
        for (r, &row) in combo.iter().enumerate() {
            let row = self.cs.row(row);
            self.matrix[r * d..(r + 1) * d].copy_from_slice(&row.coeffs);
            self.rhs[r] = row.rhs();
        }
        gauss_solve(&mut self.matrix, &mut self.rhs, d)
    }
}

impl<T: Scalar> Iterator for VertexStream<'_, T> {
    type Item = Vertex<T>;

    fn next(&mut self) -> Option<Vertex<T>> {
        loop {
            let basis = self.combo.clone()?;
            if self.stats.subsets_examined >= self.opts.cap {
                log::warn!(
                    "vertex enumeration truncated after {} row subsets",
                    self.stats.subsets_examined
                );
                self.stats.truncated = true;
                self.combo = None;
                return None;
            }
            self.stats.subsets_examined += 1;
            let solved = self.solve_current();
            self.advance();
            let Some(point) = solved else {
                self.stats.singular_subsets += 1;
                continue;
            };
            if !self.cs.is_feasible_point(&point, self.opts.feas_tol) {
                self.stats.infeasible_points += 1;
                continue;
            }
            let tol2 = self.opts.dedup_tol * self.opts.dedup_tol;
            if self.found.iter().any(|q| dist2(q, &point) <= tol2) {
                self.stats.duplicates += 1;
                continue;
            }
            self.found.push(point.clone());
            return Some(Vertex { point, basis });
        }
    }
}

fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Solves the row-major `n×n` system in place by elimination with partial
/// pivoting. `None` when a pivot falls below `1e-12` relative to the largest
/// entry.
pub(crate) fn gauss_solve<T: Scalar>(a: &mut [T], b: &mut [T], n: usize) -> Option<Vec<T>> {
    let scale = a.iter().fold(T::one(), |m, &x| m.max(x.abs()));
    let eps = T::lit(1e-12) * scale;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap())
            .unwrap();
        if a[pivot * n + col].abs() <= eps {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        let diag = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / diag;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                a[r * n + k] = a[r * n + k] - f * a[col * n + k];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let tail: T = (r + 1..n).map(|k| a[r * n + k] * x[k]).sum();
        x[r] = (b[r] - tail) / a[r * n + r];
    }
    Some(x)
}
