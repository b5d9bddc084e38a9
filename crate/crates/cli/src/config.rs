//! Scenario files and insertion specs.
//!
//! A scenario file lists layers top-down, cloud first and edge devices
//! last. Every node below the cloud names its parent by index in the layer
//! above; the index may be omitted when that layer has a single node.

use std::path::Path;

use hetmec::{InsertionSpec, NodeSpec, Scenario, Topology};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub layers: Vec<LayerFile>,
    pub eds: EdsFile,
    pub rho: f64,
    /// Free-form; ignored.
    #[serde(default, rename = "meta")]
    _meta: Option<serde::de::IgnoredAny>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerFile {
    pub name: String,
    pub nodes: Vec<NodeFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub compute_mbps: f64,
    #[serde(default)]
    pub trans_mbps: Option<f64>,
    #[serde(default)]
    pub parent: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdsFile {
    pub lambda_mbps: Rates,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Broadcast(f64),
    PerDevice(Vec<f64>),
}

/// A new server layer. `children` lists, per new node, the indices of the
/// nodes at the insertion position it adopts.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertionFile {
    #[serde(default, rename = "name")]
    _name: Option<String>,
    pub nodes: Vec<InsertNodeFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertNodeFile {
    pub compute_mbps: f64,
    pub trans_mbps: f64,
    #[serde(default)]
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Validated topology and device rates, plus the layer names for output.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub topology: Topology<f64>,
    pub scenario: Scenario<f64>,
    pub layer_names: Vec<String>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn capacity(path: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(bad(format!("{path}: capacity must be finite and nonnegative")))
    }
}

fn parent_index(path: &str, parent: Option<usize>, upper: usize) -> Result<usize, CliError> {
    match parent {
        Some(p) if p < upper => Ok(p),
        Some(p) => Err(bad(format!("{path}.parent: index {p} outside upper layer of {upper} node(s)"))),
        None if upper == 1 => Ok(0),
        None => Err(bad(format!("{path}.parent: required when the upper layer has {upper} nodes"))),
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    parse(&read_text(path)?).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<Loaded, CliError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| bad(format!("parse error: {e}")))?;
    build(file)
}

fn build(file: ScenarioFile) -> Result<Loaded, CliError> {
    if !(0.0..=1.0).contains(&file.rho) {
        return Err(bad("rho out of range [0, 1]"));
    }
    if file.layers.len() < 2 {
        return Err(bad("layers: need at least a cloud layer and an edge-device layer"));
    }
    let last = file.layers.len() - 1;
    let mut specs = Vec::with_capacity(file.layers.len());
    let mut parents = Vec::with_capacity(last);
    for (l, layer) in file.layers.iter().enumerate() {
        let mut row = Vec::with_capacity(layer.nodes.len());
        let mut ups = Vec::with_capacity(layer.nodes.len());
        for (i, node) in layer.nodes.iter().enumerate() {
            let path = format!("layers[{l}].nodes[{i}]");
            let compute = capacity(&format!("{path}.compute_mbps"), node.compute_mbps)?;
            let trans = match (l == last, node.trans_mbps) {
                (true, None) | (true, Some(0.0)) => 0.0,
                (true, Some(_)) => return Err(bad(format!("{path}.trans_mbps: edge devices carry no transmission budget"))),
                (false, Some(t)) => capacity(&format!("{path}.trans_mbps"), t)?,
                (false, None) => return Err(bad(format!("{path}.trans_mbps: required for servers and the cloud"))),
            };
            if l == 0 {
                if node.parent.is_some() {
                    return Err(bad(format!("{path}.parent: the cloud has no parent")));
                }
            } else {
                ups.push(parent_index(&path, node.parent, file.layers[l - 1].nodes.len())?);
            }
            row.push(NodeSpec::new(compute, trans));
        }
        if l > 0 {
            parents.push(ups);
        }
        specs.push(row);
    }
    let topology = Topology::from_parents(specs, &parents).map_err(|e| bad(format!("layers: {e}")))?;

    let devices = topology.device_count();
    let rates = match file.eds.lambda_mbps {
        Rates::Broadcast(r) => vec![r; devices],
        Rates::PerDevice(v) if v.len() == devices => v,
        Rates::PerDevice(v) => {
            return Err(bad(format!(
                "eds.lambda_mbps: {} rates for {devices} edge devices",
                v.len()
            )))
        }
    };
    let scenario = Scenario::new(rates, file.rho).map_err(|e| bad(format!("eds.lambda_mbps: {e}")))?;
    Ok(Loaded {
        topology,
        scenario,
        layer_names: file.layers.into_iter().map(|l| l.name).collect(),
    })
}

/// Reads `arg` as a path if such a file exists, otherwise as inline JSON.
pub fn insertion(arg: &str, position: usize, topology: &Topology<f64>) -> Result<InsertionSpec<f64>, CliError> {
    let text = if Path::new(arg).is_file() {
        read_text(Path::new(arg))?
    } else {
        arg.to_string()
    };
    let file: InsertionFile =
        serde_json::from_str(&text).map_err(|e| bad(format!("--insert: parse error: {e}")))?;
    if position == 0 || position > topology.device_layer() {
        return Err(bad(format!(
            "--position {position} outside 1..={}",
            topology.device_layer()
        )));
    }
    let upper = topology.layer(position - 1).len();
    let lower = topology.layer(position).len();
    let mut lower_parents: Vec<Option<usize>> = vec![None; lower];
    let mut nodes = Vec::with_capacity(file.nodes.len());
    let mut upper_parents = Vec::with_capacity(file.nodes.len());
    for (i, n) in file.nodes.iter().enumerate() {
        let path = format!("--insert nodes[{i}]");
        nodes.push(NodeSpec::new(
            capacity(&format!("{path}.compute_mbps"), n.compute_mbps)?,
            capacity(&format!("{path}.trans_mbps"), n.trans_mbps)?,
        ));
        upper_parents.push(parent_index(&path, n.parent, upper)?);
        for &c in &n.children {
            match lower_parents.get_mut(c) {
                None => return Err(bad(format!("{path}.children: index {c} outside layer of {lower} node(s)"))),
                Some(Some(_)) => return Err(bad(format!("{path}.children: node {c} adopted twice"))),
                Some(slot) => *slot = Some(i),
            }
        }
    }
    let lower_parents = lower_parents
        .into_iter()
        .enumerate()
        .map(|(j, p)| p.ok_or_else(|| bad(format!("--insert: node {j} at position {position} has no new parent"))))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = InsertionSpec {
        position,
        nodes,
        upper_parents,
        lower_parents,
    };
    spec.apply(topology).map_err(|e| bad(format!("--insert: {e}")))?;
    Ok(spec)
}
