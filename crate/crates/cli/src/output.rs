//! Result files: solution and robustness JSON, sweep CSV.

use std::path::Path;

use hetmec::robustness::BottleneckReport;
use hetmec::{
    assemble_constraints, InsertionReport, LatencyBreakdown, NodeId, RowKind, Scenario, Solution,
    SolveDiagnostics, SweepRow, Topology,
};
use serde::Serialize;

use crate::config::Loaded;
use crate::CliError;

pub const CSV_HEADER: [&str; 5] = [
    "scheme",
    "lambda_scale",
    "system_latency",
    "processing_rate_per_ed",
    "status",
];

/// `x` with 9 significant digits, trailing zeros dropped, scientific
/// notation outside `[1e-4, 1e9)`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if !(-4..9).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{m}e{exp}");
    }
    let decimals = (8 - exp).max(0) as usize;
    let fixed = format!("{x:.decimals$}");
    if fixed.contains('.') {
        fixed.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        fixed
    }
}

#[derive(Serialize)]
struct NodeOut<'a> {
    layer: usize,
    index: usize,
    layer_name: &'a str,
    /// Task split; `None` for the cloud, which processes all residual raw data.
    s: Option<f64>,
    raw_in: f64,
    processed: f64,
    theta: f64,
    compute_mbps: f64,
    trans_mbps: f64,
}

#[derive(Serialize)]
struct LinkOut {
    child: NodeId,
    parent: NodeId,
    outflow: f64,
    phi: f64,
    /// Fraction of the raw data on this link the parent processes.
    split: f64,
}

#[derive(Serialize)]
struct RowOut {
    row: usize,
    #[serde(flatten)]
    kind: RowKind,
}

#[derive(Serialize)]
struct SolutionOut<'a> {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_step: Option<f64>,
    s_star: &'a [f64],
    variables: &'a [NodeId],
    latency: &'a LatencyBreakdown<f64>,
    nodes: Vec<NodeOut<'a>>,
    links: Vec<LinkOut>,
    active_rows: Vec<RowOut>,
    diagnostics: &'a SolveDiagnostics,
}

#[derive(Serialize)]
struct Congested {
    status: &'static str,
}

pub fn solution_json(loaded: &Loaded, sol: &Solution<f64>, grid_step: Option<f64>) -> String {
    let (t, sc) = (&loaded.topology, &loaded.scenario);
    let flow = hetmec::propagate_flows(t, sc, &sol.s_star);
    let split = |id: NodeId| t.var_index(id).map(|v| sol.s_star.get(v));
    let nodes = t
        .node_ids()
        .map(|id| {
            let spec = t.node(id);
            let raw = flow.raw_arrival(id);
            NodeOut {
                layer: id.layer,
                index: id.index,
                layer_name: &loaded.layer_names[id.layer],
                s: split(id),
                raw_in: raw,
                processed: split(id).map_or(raw, |s| s * raw),
                theta: sol.allocation.theta(id),
                compute_mbps: spec.compute_cap,
                trans_mbps: spec.trans_cap,
            }
        })
        .collect();
    let links = t
        .node_ids()
        .filter(|&id| id.layer > 0)
        .map(|child| {
            let parent = t.parent(child).unwrap();
            LinkOut {
                child,
                parent,
                outflow: hetmec::node_outflow(t, child, &flow, &sol.s_star, sc),
                phi: sol.allocation.edge_phi(child),
                split: split(parent).unwrap_or(1.0),
            }
        })
        .collect();
    let cs = assemble_constraints(t, sc);
    let out = SolutionOut {
        status: "optimal",
        grid_step,
        s_star: sol.s_star.values(),
        variables: t.variables(),
        latency: &sol.latency,
        nodes,
        links,
        active_rows: sol
            .active_rows
            .iter()
            .map(|&row| RowOut { row, kind: cs.row(row).kind })
            .collect(),
        diagnostics: &sol.diagnostics,
    };
    pretty(&out)
}

pub fn congested_json() -> String {
    serde_json::to_string(&Congested { status: "congested" }).unwrap()
}

#[derive(Serialize)]
struct InsertionOut {
    position: usize,
    nodes: usize,
    t_before: f64,
    t_after: f64,
    precondition_met: bool,
    predicted: hetmec::InsertionEffect,
    observed: hetmec::InsertionEffect,
    consistent: bool,
}

#[derive(Serialize)]
struct RobustnessOut<'a> {
    direction: &'a [f64],
    t_star: f64,
    /// `t*` times the direction vector.
    supported_lambda_mbps: Vec<f64>,
    bottleneck: &'a BottleneckReport<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    insertion: Option<InsertionOut>,
}

pub fn robustness_json(
    direction: &Scenario<f64>,
    t_star: f64,
    bottleneck: &BottleneckReport<f64>,
    insertion: Option<(usize, usize, &InsertionReport<f64>)>,
) -> String {
    let out = RobustnessOut {
        direction: direction.gen_rates(),
        t_star,
        supported_lambda_mbps: direction.scaled(t_star).gen_rates().to_vec(),
        bottleneck,
        insertion: insertion.map(|(position, nodes, r)| InsertionOut {
            position,
            nodes,
            t_before: r.t_before,
            t_after: r.t_after,
            precondition_met: r.precondition_met,
            predicted: r.predicted,
            observed: r.observed,
            consistent: r.consistent,
        }),
    };
    pretty(&out)
}

fn pretty<S: Serialize>(v: &S) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap();
    s.push('\n');
    s
}

pub fn sweep_csv(rows: &[SweepRow<f64>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).unwrap();
    for r in rows {
        let (latency, status) = match r.system_latency {
            Some(l) => (sig9(l), "ok"),
            None => (String::new(), "congested"),
        };
        w.write_record([
            r.scheme.name().to_string(),
            sig9(r.lambda_scale),
            latency,
            sig9(r.processing_rate_per_ed),
            status.to_string(),
        ])
        .unwrap();
    }
    w.into_inner().unwrap()
}

pub fn summary(loaded: &Loaded) -> String {
    let t: &Topology<f64> = &loaded.topology;
    let k = hetmec::constraint_count(t);
    let m: Vec<String> = (1..=t.mec_layers()).map(|n| t.layer(n).len().to_string()).collect();
    format!(
        "N={} M=[{}] devices={} K_c={} K_t={} K={}\n",
        t.mec_layers(),
        m.join(","),
        t.device_count(),
        k.compute,
        k.transmission,
        k.total
    )
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
