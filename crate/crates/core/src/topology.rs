//! Layered tree topology: the cloud at layer 0, MEC servers on layers
//! `1..=N`, edge devices on layer `N + 1`.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

/// Position of a node: `(layer, index within layer)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId {
    pub layer: usize,
    pub index: usize,
}

impl NodeId {
    pub const CLOUD: NodeId = NodeId { layer: 0, index: 0 };

    pub const fn new(layer: usize, index: usize) -> Self {
        Self { layer, index }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.layer, self.index)
    }
}

/// Per-node resource bounds, in Mbit/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct NodeSpec<T> {
    /// Maximum raw data the node can process per second.
    pub compute_cap: T,
    /// Transmission capacity the node shares among its children. Zero for
    /// edge devices.
    pub trans_cap: T,
}

impl<T: Scalar> NodeSpec<T> {
    pub fn new(compute_cap: T, trans_cap: T) -> Self {
        Self {
            compute_cap,
            trans_cap,
        }
    }

    /// An edge device: compute only.
    pub fn device(compute_cap: T) -> Self {
        Self::new(compute_cap, T::zero())
    }
}

/// Child-to-parent edge in a [`TopologySpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub child: NodeId,
    pub parent: NodeId,
}

/// Unvalidated description of a topology, as read from a config.
#[derive(Debug, Clone)]
pub struct TopologySpec<T> {
    /// Node specs, top-down. `layers[0]` must hold exactly the cloud.
    pub layers: Vec<Vec<NodeSpec<T>>>,
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("topology needs at least a cloud layer and an edge-device layer, got {0} layer(s)")]
    TooFewLayers(usize),
    #[error("layer 0 must hold exactly one cloud node, found {0}")]
    CloudCount(usize),
    #[error("layer {0} has no nodes")]
    EmptyLayer(usize),
    #[error("link references unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {child}: layer-skipping edge to {parent}")]
    LayerSkip { child: NodeId, parent: NodeId },
    #[error("node {0} has more than one parent")]
    MultipleParents(NodeId),
    #[error("node {0} is an orphan (no parent)")]
    Orphan(NodeId),
    #[error("node {0}: capacities must be finite and nonnegative")]
    NegativeCapacity(NodeId),
    #[error("node {0}: edge devices carry no transmission resources")]
    DeviceTransmission(NodeId),
    #[error("node {0}: server without children")]
    Childless(NodeId),
    #[error("insertion position {position} outside 1..={max}")]
    InsertionPosition { position: usize, max: usize },
    #[error("insertion wiring: {0}")]
    InsertionWiring(String),
}

/// Validated layered tree.
///
/// Non-cloud nodes are numbered as optimization variables bottom-up: edge
/// devices first, then layer `N`, up to layer 1. Every node's descendants
/// therefore precede it in variable order.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology<T> {
    nodes: Vec<Vec<NodeSpec<T>>>,
    parent: Vec<Vec<usize>>,
    children: Vec<Vec<Vec<usize>>>,
    variables: Vec<NodeId>,
    var_of: Vec<Vec<Option<usize>>>,
}

/// Validates a raw spec into a [`Topology`].
pub fn build_topology<T: Scalar>(spec: &TopologySpec<T>) -> Result<Topology<T>, TopologyError> {
    let layers = &spec.layers;
    if layers.len() < 2 {
        return Err(TopologyError::TooFewLayers(layers.len()));
    }
    if layers[0].len() != 1 {
        return Err(TopologyError::CloudCount(layers[0].len()));
    }
    for (l, layer) in layers.iter().enumerate() {
        if layer.is_empty() {
            return Err(TopologyError::EmptyLayer(l));
        }
    }
    let ed_layer = layers.len() - 1;
    for (l, layer) in layers.iter().enumerate() {
        for (i, n) in layer.iter().enumerate() {
            let id = NodeId::new(l, i);
            let ok = |x: T| x.is_finite() && x >= T::zero();
            if !ok(n.compute_cap) || !ok(n.trans_cap) {
                return Err(TopologyError::NegativeCapacity(id));
            }
            if l == ed_layer && n.trans_cap > T::zero() {
                return Err(TopologyError::DeviceTransmission(id));
            }
        }
    }

    let exists = |id: NodeId| id.layer < layers.len() && id.index < layers[id.layer].len();
    let mut parent: Vec<Vec<Option<usize>>> = layers.iter().map(|l| vec![None; l.len()]).collect();
    for link in &spec.links {
        for id in [link.child, link.parent] {
            if !exists(id) {
                return Err(TopologyError::UnknownNode(id));
            }
        }
        if link.child.layer == 0 || link.parent.layer + 1 != link.child.layer {
            return Err(TopologyError::LayerSkip {
                child: link.child,
                parent: link.parent,
            });
        }
        let slot = &mut parent[link.child.layer][link.child.index];
        if slot.is_some() {
            return Err(TopologyError::MultipleParents(link.child));
        }
        *slot = Some(link.parent.index);
    }

    let mut resolved = vec![Vec::new()];
    for (l, row) in parent.iter().enumerate().skip(1) {
        let mut out = Vec::with_capacity(row.len());
        for (i, p) in row.iter().enumerate() {
            out.push(p.ok_or(TopologyError::Orphan(NodeId::new(l, i)))?);
        }
        resolved.push(out);
    }

    let mut children: Vec<Vec<Vec<usize>>> =
        layers.iter().map(|l| vec![Vec::new(); l.len()]).collect();
    for l in 1..layers.len() {
        for (i, &p) in resolved[l].iter().enumerate() {
            children[l - 1][p].push(i);
        }
    }
    for l in 0..ed_layer {
        if let Some(i) = children[l].iter().position(Vec::is_empty) {
            return Err(TopologyError::Childless(NodeId::new(l, i)));
        }
    }

    let mut variables = Vec::new();
    let mut var_of: Vec<Vec<Option<usize>>> = layers.iter().map(|l| vec![None; l.len()]).collect();
    for l in (1..layers.len()).rev() {
        for i in 0..layers[l].len() {
            var_of[l][i] = Some(variables.len());
            variables.push(NodeId::new(l, i));
        }
    }

    Ok(Topology {
        nodes: layers.clone(),
        parent: resolved,
        children,
        variables,
        var_of,
    })
}

impl<T: Scalar> Topology<T> {
    /// Builds from top-down layers and, for every layer below the cloud, the
    /// parent index of each node in the layer above.
    pub fn from_parents(
        layers: Vec<Vec<NodeSpec<T>>>,
        parents: &[Vec<usize>],
    ) -> Result<Self, TopologyError> {
        let mut links = Vec::new();
        for (k, row) in parents.iter().enumerate() {
            let l = k + 1;
            for (i, &p) in row.iter().enumerate() {
                links.push(Link {
                    child: NodeId::new(l, i),
                    parent: NodeId::new(l - 1, p),
                });
            }
        }
        build_topology(&TopologySpec { layers, links })
    }

    /// Single-branch tree, one node per layer, given top-down (cloud first,
    /// edge device last).
    pub fn chain(nodes: Vec<NodeSpec<T>>) -> Result<Self, TopologyError> {
        let depth = nodes.len();
        let layers = nodes.into_iter().map(|n| vec![n]).collect();
        let parents = vec![vec![0]; depth.saturating_sub(1)];
        Self::from_parents(layers, &parents)
    }

    /// Full `q`-ary tree with `mec_layers` server layers. Every node on a
    /// layer shares the same spec (`per_layer[l]`, top-down).
    pub fn full_tree(q: usize, per_layer: &[NodeSpec<T>]) -> Result<Self, TopologyError> {
        let mut layers = Vec::new();
        let mut parents = Vec::new();
        let mut width = 1;
        for (l, spec) in per_layer.iter().enumerate() {
            layers.push(vec![*spec; width]);
            if l > 0 {
                parents.push((0..width).map(|i| i / q.max(1)).collect());
            }
            width *= q;
        }
        Self::from_parents(layers, &parents)
    }

    /// Number of MEC layers `N`.
    pub fn mec_layers(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn device_layer(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn layer_count(&self) -> usize {
        self.nodes.len()
    }

    /// `M_n` for every layer, top-down.
    pub fn layer_sizes(&self) -> Vec<usize> {
        self.nodes.iter().map(Vec::len).collect()
    }

    pub fn layer(&self, layer: usize) -> &[NodeSpec<T>] {
        &self.nodes[layer]
    }

    pub fn layers(&self) -> &[Vec<NodeSpec<T>>] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeSpec<T> {
        &self.nodes[id.layer][id.index]
    }

    pub fn device_count(&self) -> usize {
        self.nodes[self.device_layer()].len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().map(Vec::len).sum()
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        (id.layer > 0).then(|| NodeId::new(id.layer - 1, self.parent[id.layer][id.index]))
    }

    /// Indices (within layer `id.layer + 1`) of the children of `id`.
    pub fn children(&self, id: NodeId) -> &[usize] {
        &self.children[id.layer][id.index]
    }

    pub fn is_parent(&self, id: NodeId) -> bool {
        !self.children(id).is_empty()
    }

    /// Nodes with at least one child, top-down.
    pub fn parents(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(move |&id| self.is_parent(id))
    }

    /// All nodes, top-down.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(l, layer)| (0..layer.len()).map(move |i| NodeId::new(l, i)))
    }

    /// Non-cloud nodes in variable order (bottom-up).
    pub fn variables(&self) -> &[NodeId] {
        &self.variables
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn var_index(&self, id: NodeId) -> Option<usize> {
        self.var_of.get(id.layer)?.get(id.index).copied().flatten()
    }

    /// Inserts a full server layer between layer `position - 1` and
    /// `position`. `upper_parents[i]` wires new node `i` to a node on layer
    /// `position - 1`; `lower_parents[j]` wires old node `j` of layer
    /// `position` to a new node.
    pub fn insert_layer(
        &self,
        position: usize,
        new_nodes: Vec<NodeSpec<T>>,
        upper_parents: &[usize],
        lower_parents: &[usize],
    ) -> Result<Self, TopologyError> {
        let max = self.device_layer();
        if position == 0 || position > max {
            return Err(TopologyError::InsertionPosition { position, max });
        }
        if upper_parents.len() != new_nodes.len() {
            return Err(TopologyError::InsertionWiring(format!(
                "{} new nodes but {} upper parent indices",
                new_nodes.len(),
                upper_parents.len()
            )));
        }
        if lower_parents.len() != self.nodes[position].len() {
            return Err(TopologyError::InsertionWiring(format!(
                "layer {position} has {} nodes but {} lower parent indices were given",
                self.nodes[position].len(),
                lower_parents.len()
            )));
        }
        let mut layers = self.nodes.clone();
        layers.insert(position, new_nodes);
        let mut parents: Vec<Vec<usize>> = self.parent[1..].to_vec();
        // parents[k] describes layer k + 1.
        parents.insert(position - 1, upper_parents.to_vec());
        parents[position] = lower_parents.to_vec();
        Self::from_parents(layers, &parents)
    }
}
