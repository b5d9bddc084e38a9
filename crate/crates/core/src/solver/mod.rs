//! Latency objective, resource allocation and the vertex-enumeration
//! minimizer.

pub mod allocation;
pub mod hessian;
pub mod latency;
pub mod lma;
pub mod oracle;
pub mod vertex;

pub use allocation::{cauchy_allocate, cauchy_split, edge_guard_holds, edge_guard_star, Allocation};
pub use hessian::{analytic_hessian, quadratic_form, HessianError, StarSubproblem};
pub use latency::{latency_lower_bound, system_latency, LatencyBreakdown};
pub use lma::{solve_lma, solve_lma_with, solve_on, LmaOutcome, Solution, SolveDiagnostics, SolveOptions};
pub use oracle::{
    grid_values, oracle_grid_search, oracle_grid_search_with, OracleError, OracleOptions,
    DEFAULT_ORACLE_BUDGET,
};
pub use vertex::{enumerate_vertices, Vertex, VertexOptions, VertexStats, VertexStream, DEFAULT_VERTEX_CAP};
