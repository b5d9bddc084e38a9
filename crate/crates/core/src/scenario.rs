//! Workload description and the task-split decision vector.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("rho out of range [0, 1]")]
    RhoOutOfRange,
    #[error("generation rate of device {0} must be finite and nonnegative")]
    NegativeRate(usize),
    #[error("scenario lists {got} device rates, topology has {expected} devices")]
    DeviceCount { expected: usize, got: usize },
    #[error("split {index} out of range [0, 1]")]
    SplitOutOfRange { index: usize },
}

/// Data-generation rates per edge device (Mbit/s, in layer order) plus the
/// compression ratio of processed output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario<T> {
    gen_rates: Vec<T>,
    rho: T,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(gen_rates: Vec<T>, rho: T) -> Result<Self, ScenarioError> {
        if !(rho >= T::zero() && rho <= T::one()) {
            return Err(ScenarioError::RhoOutOfRange);
        }
        if let Some(i) = gen_rates.iter().position(|&r| !(r.is_finite() && r >= T::zero())) {
            return Err(ScenarioError::NegativeRate(i));
        }
        Ok(Self { gen_rates, rho })
    }

    /// Same rate on every device of `topology`.
    pub fn uniform(topology: &Topology<T>, rate: T, rho: T) -> Result<Self, ScenarioError> {
        Self::new(vec![rate; topology.device_count()], rho)
    }

    pub fn for_topology(self, topology: &Topology<T>) -> Result<Self, ScenarioError> {
        let expected = topology.device_count();
        if self.gen_rates.len() != expected {
            return Err(ScenarioError::DeviceCount {
                expected,
                got: self.gen_rates.len(),
            });
        }
        Ok(self)
    }

    pub fn gen_rates(&self) -> &[T] {
        &self.gen_rates
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn total_rate(&self) -> T {
        self.gen_rates.iter().copied().sum()
    }

    /// Every device rate multiplied by `t`.
    pub fn scaled(&self, t: T) -> Self {
        Self {
            gen_rates: self.gen_rates.iter().map(|&r| r * t).collect(),
            rho: self.rho,
        }
    }
}

/// Per-node task split `s`, indexed in [`Topology::variables`] order.
///
/// `s` is the fraction of the raw data reaching a node that the node
/// processes itself. Per-link splits are not stored: a node applies the
/// same fraction to every incoming link.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment<T>(Vec<T>);

impl<T: Scalar> Assignment<T> {
    pub fn new(values: Vec<T>) -> Result<Self, ScenarioError> {
        if let Some(index) = values
            .iter()
            .position(|&v| !(v >= T::zero() && v <= T::one()))
        {
            return Err(ScenarioError::SplitOutOfRange { index });
        }
        Ok(Self(values))
    }

    /// Clamps into `[0, 1]`; used for solver outputs that carry rounding.
    pub fn clamped(values: Vec<T>) -> Self {
        Self(
            values
                .into_iter()
                .map(|v| v.max(T::zero()).min(T::one()))
                .collect(),
        )
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim])
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn get(&self, var: usize) -> T {
        self.0[var]
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}
