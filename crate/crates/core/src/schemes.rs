//! Baseline task-assignment schemes and the comparison sweep.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::constraints::{assemble_constraints, check_feasible};
use crate::robustness::{bisect_feasible, conservation_ceiling, max_supportable_rate, RobustnessOptions};
use crate::scalar::Scalar;
use crate::scenario::{Assignment, Scenario};
use crate::solver::allocation::edge_guard_holds;
use crate::solver::latency::latency_lower_bound;
use crate::solver::lma::{solve_lma_with, SolveOptions};
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeId {
    Lma,
    Cloud,
    Local,
    ConventionalMec,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [
        SchemeId::Lma,
        SchemeId::Cloud,
        SchemeId::Local,
        SchemeId::ConventionalMec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Lma => "lma",
            SchemeId::Cloud => "cloud",
            SchemeId::Local => "local",
            SchemeId::ConventionalMec => "conventional-mec",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scheme `{0}` (expected lma, cloud, local, conventional-mec or mec)")]
pub struct UnknownScheme(pub String);

impl FromStr for SchemeId {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "lma" => Ok(SchemeId::Lma),
            "cloud" => Ok(SchemeId::Cloud),
            "local" => Ok(SchemeId::Local),
            "conventional-mec" | "mec" => Ok(SchemeId::ConventionalMec),
            other => Err(UnknownScheme(other.to_string())),
        }
    }
}

/// The split a fixed scheme prescribes; `None` for LMA.
///
/// Conventional MEC offloads everything to the server layer directly above
/// the devices. With no server layer it coincides with cloud computing.
pub fn fixed_assignment<T: Scalar>(scheme: SchemeId, topology: &Topology<T>) -> Option<Assignment<T>> {
    let ed = topology.device_layer();
    let target = match scheme {
        SchemeId::Lma => return None,
        SchemeId::Cloud => None,
        SchemeId::Local => Some(ed),
        SchemeId::ConventionalMec => (ed > 1).then(|| ed - 1),
    };
    let s = topology
        .variables()
        .iter()
        .map(|id| if Some(id.layer) == target { T::one() } else { T::zero() })
        .collect();
    Some(Assignment::clamped(s))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SchemeOutcome<T> {
    Feasible(Assignment<T>),
    Congested,
}

impl<T> SchemeOutcome<T> {
    pub fn assignment(&self) -> Option<&Assignment<T>> {
        match self {
            SchemeOutcome::Feasible(s) => Some(s),
            SchemeOutcome::Congested => None,
        }
    }
}

/// Split used by `scheme`, or congested when it breaks any row or the
/// per-edge transmission check.
pub fn apply_scheme<T: Scalar>(
    scheme: SchemeId,
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    opts: &SolveOptions<T>,
) -> SchemeOutcome<T> {
    match fixed_assignment(scheme, topology) {
        None => match solve_lma_with(topology, scenario, opts).into_solution() {
            Some(sol) => SchemeOutcome::Feasible(sol.s_star),
            None => SchemeOutcome::Congested,
        },
        Some(s) => {
            let cs = assemble_constraints(topology, scenario);
            if check_feasible(&cs, &s, opts.feas_tol).feasible
                && edge_guard_holds(topology, scenario, &s, opts.feas_tol)
            {
                SchemeOutcome::Feasible(s)
            } else {
                SchemeOutcome::Congested
            }
        }
    }
}

/// System latency of `scheme` under the square-root allocation; `None` when
/// congested.
pub fn scheme_latency<T: Scalar>(
    scheme: SchemeId,
    topology: &Topology<T>,
    scenario: &Scenario<T>,
    opts: &SolveOptions<T>,
) -> Option<T> {
    apply_scheme(scheme, topology, scenario, opts)
        .assignment()
        .map(|s| latency_lower_bound(topology, scenario, s))
}

/// Largest scale of `direction` the scheme can run without congestion.
pub fn saturation_scale<T: Scalar>(
    scheme: SchemeId,
    topology: &Topology<T>,
    direction: &Scenario<T>,
    opts: &RobustnessOptions<T>,
) -> T {
    if !(direction.total_rate() > T::zero()) {
        return T::infinity();
    }
    if scheme == SchemeId::Lma {
        return max_supportable_rate(topology, direction, opts).unwrap_or(T::zero());
    }
    let hi = conservation_ceiling(topology, direction) * T::lit(1.01);
    bisect_feasible(T::zero(), hi, opts.tol, opts.max_iter, |t| {
        apply_scheme(scheme, topology, &direction.scaled(t), &opts.solve)
            .assignment()
            .is_some()
    })
}

/// Mean per-device rate the scheme actually processes at `scale`.
pub fn processing_rate<T: Scalar>(
    scheme: SchemeId,
    topology: &Topology<T>,
    direction: &Scenario<T>,
    scale: T,
    opts: &RobustnessOptions<T>,
) -> T {
    let sat = saturation_scale(scheme, topology, direction, opts);
    rate_at(direction, scale, sat)
}

fn rate_at<T: Scalar>(direction: &Scenario<T>, scale: T, saturation: T) -> T {
    let n = T::from_usize(direction.gen_rates().len()).unwrap();
    scale.min(saturation) * direction.total_rate() / n
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow<T> {
    pub scheme: SchemeId,
    pub lambda_scale: T,
    /// `None` when congested.
    pub system_latency: Option<T>,
    pub processing_rate_per_ed: T,
}

/// One row per `(scheme, scale)`, ordered by scheme then scale regardless
/// of how the points were scheduled.
pub fn sweep<T: Scalar>(
    topology: &Topology<T>,
    direction: &Scenario<T>,
    scales: &[T],
    schemes: &[SchemeId],
    opts: &RobustnessOptions<T>,
) -> Vec<SweepRow<T>> {
    let mut schemes = schemes.to_vec();
    schemes.sort();
    schemes.dedup();
    let saturation: Vec<T> = schemes
        .par_iter()
        .map(|&s| saturation_scale(s, topology, direction, opts))
        .collect();
    let points: Vec<(usize, usize)> = (0..schemes.len())
        .flat_map(|i| (0..scales.len()).map(move |j| (i, j)))
        .collect();
    let mut rows: Vec<(usize, usize, SweepRow<T>)> = points
        .par_iter()
        .map(|&(i, j)| {
            let scheme = schemes[i];
            let scale = scales[j];
            let latency = scheme_latency(scheme, topology, &direction.scaled(scale), &opts.solve);
            let row = SweepRow {
                scheme,
                lambda_scale: scale,
                system_latency: latency,
                processing_rate_per_ed: rate_at(direction, scale, saturation[i]),
            };
            (i, j, row)
        })
        .collect();
    rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    rows.into_iter().map(|(_, _, r)| r).collect()
}
