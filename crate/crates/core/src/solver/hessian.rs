//! Curvature of the transmission term of a single parent with `M` children.
//!
//! With `A_i = √(λ_i(1 − (1−ρ)s_i))` the term is `(Σ A_i)²/φ`, whose Hessian
//! in the children's splits is
//!
//! ```text
//! h_ii = −Z λ_i² (S − A_i) / A_i³,   h_ij = Z λ_i λ_j / (A_i A_j)
//! ```
//!
//! with `S = Σ A_i` and `Z = (1−ρ)²/(2φ)`. Compute terms are linear in the
//! splits and do not contribute.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HessianError {
    #[error("child {0} has A_i = 0; the Hessian is undefined on this boundary")]
    Domain(usize),
    #[error("transmission budget must be positive")]
    ZeroBudget,
    #[error("{rates} rates but {splits} splits")]
    Shape { rates: usize, splits: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarSubproblem<T> {
    pub lambda: Vec<T>,
    pub s: Vec<T>,
    pub phi: T,
    pub rho: T,
}

impl<T: Scalar> StarSubproblem<T> {
    pub fn z(&self) -> T {
        let c = T::one() - self.rho;
        c * c / (T::lit(2.0) * self.phi)
    }

    /// `A_i` for every child.
    pub fn a(&self) -> Vec<T> {
        self.lambda
            .iter()
            .zip(&self.s)
            .map(|(&l, &s)| (l * (T::one() - (T::one() - self.rho) * s)).sqrt_pos())
            .collect()
    }
}

/// Row-major `M×M` Hessian.
pub fn analytic_hessian<T: Scalar>(sub: &StarSubproblem<T>) -> Result<Vec<Vec<T>>, HessianError> {
    if sub.lambda.len() != sub.s.len() {
        return Err(HessianError::Shape {
            rates: sub.lambda.len(),
            splits: sub.s.len(),
        });
    }
    if !(sub.phi > T::zero()) {
        return Err(HessianError::ZeroBudget);
    }
    let a = sub.a();
    if let Some(i) = a.iter().position(|&x| x <= T::zero()) {
        return Err(HessianError::Domain(i));
    }
    let z = sub.z();
    let total: T = a.iter().copied().sum();
    let m = a.len();
    let l = &sub.lambda;
    let mut h = vec![vec![T::zero(); m]; m];
    for i in 0..m {
        for j in 0..m {
            h[i][j] = if i == j {
                -z * l[i] * l[i] * (total - a[i]) / (a[i] * a[i] * a[i])
            } else {
                z * l[i] * l[j] / (a[i] * a[j])
            };
        }
    }
    Ok(h)
}

/// `xᵀHx`.
pub fn quadratic_form<T: Scalar>(h: &[Vec<T>], x: &[T]) -> T {
    h.iter()
        .zip(x)
        .map(|(row, &xi)| xi * row.iter().zip(x).map(|(&hij, &xj)| hij * xj).sum::<T>())
        .sum()
}
