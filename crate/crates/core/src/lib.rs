//! Latency-optimal task splitting and resource allocation for multi-layer
//! edge-computing trees.
//!
//! A tree has the cloud at layer 0, MEC server layers `1..=N` and edge
//! devices at layer `N + 1`. Devices generate raw data; every node processes
//! a fraction `s` of the raw data reaching it and forwards the rest, plus
//! compressed results, upward. [`solve_lma`] finds the split minimizing the
//! system latency subject to congestion-free operation.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below cover the common case.

pub mod constraints;
pub mod flow;
pub mod robustness;
pub mod scalar;
pub mod scenario;
pub mod schemes;
pub mod solver;
pub mod topology;

pub use constraints::{
    assemble_constraints, check_feasible, constraint_count, ConstraintCount, ConstraintSet,
    FeasibilityReport, Row, RowKind, Violation,
};
pub use flow::{node_outflow, outflow, propagate_flows, FlowState};
pub use robustness::{
    classify_bottleneck, evaluate_insertion, max_supportable_rate, BottleneckKind,
    BottleneckReport, InsertionEffect, InsertionReport, InsertionSpec, RobustnessError,
    RobustnessOptions,
};
pub use scalar::Scalar;
pub use scenario::{Assignment, Scenario, ScenarioError};
pub use schemes::{apply_scheme, processing_rate, saturation_scale, scheme_latency, sweep, SchemeId, SchemeOutcome, SweepRow};
pub use solver::{
    analytic_hessian, cauchy_allocate, cauchy_split, enumerate_vertices, latency_lower_bound,
    oracle_grid_search, solve_lma, solve_lma_with, system_latency, Allocation, LatencyBreakdown,
    LmaOutcome, OracleError, Solution, SolveDiagnostics, SolveOptions, StarSubproblem,
};
pub use topology::{build_topology, Link, NodeId, NodeSpec, Topology, TopologyError, TopologySpec};

pub type Topology64 = Topology<f64>;
pub type Scenario64 = Scenario<f64>;
pub type Assignment64 = Assignment<f64>;
pub type ConstraintSet64 = ConstraintSet<f64>;
pub type Solution64 = Solution<f64>;
