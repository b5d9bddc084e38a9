#![allow(dead_code)]

use hetmec::solver::StarSubproblem;
use hetmec::{NodeSpec, Scenario, Topology};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Parent indices per layer below the cloud, top-down.
pub const SHAPES: &[&[&[usize]]] = &[
    &[&[0]],
    &[&[0, 0]],
    &[&[0, 0, 0]],
    &[&[0, 0, 0, 0]],
    &[&[0], &[0]],
    &[&[0], &[0, 0]],
    &[&[0], &[0, 0, 0]],
    &[&[0, 0], &[0, 1]],
    &[&[0], &[0], &[0]],
    &[&[0], &[0], &[0], &[0]],
    &[&[0], &[0], &[0, 0]],
];

pub const RHOS: [f64; 4] = [0.0, 0.1, 0.5, 1.0];

pub fn random_instance(rng: &mut ChaCha8Rng) -> (Topology<f64>, Scenario<f64>) {
    let shape = SHAPES[rng.gen_range(0..SHAPES.len())];
    random_on_shape(rng, shape)
}

pub fn random_on_shape(rng: &mut ChaCha8Rng, shape: &[&[usize]]) -> (Topology<f64>, Scenario<f64>) {
    let mut layers = vec![vec![NodeSpec::new(rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0))]];
    let last = shape.len() - 1;
    for (l, parents) in shape.iter().enumerate() {
        let layer = parents
            .iter()
            .map(|_| {
                if l == last {
                    NodeSpec::device(rng.gen_range(0.1..5.0))
                } else {
                    NodeSpec::new(rng.gen_range(0.1..5.0), rng.gen_range(0.1..5.0))
                }
            })
            .collect();
        layers.push(layer);
    }
    let parents: Vec<Vec<usize>> = shape.iter().map(|p| p.to_vec()).collect();
    let topo = Topology::from_parents(layers, &parents).unwrap();
    let rates = (0..topo.device_count()).map(|_| rng.gen_range(0.1..2.0)).collect();
    let rho = RHOS[rng.gen_range(0..RHOS.len())];
    (topo, Scenario::new(rates, rho).unwrap())
}

pub fn chain(cc: f64) -> (Topology<f64>, Scenario<f64>) {
    let t = Topology::chain(vec![
        NodeSpec::new(cc, 2.0),
        NodeSpec::new(0.4, 2.0),
        NodeSpec::device(0.2),
    ])
    .unwrap();
    (t, Scenario::new(vec![1.0], 0.1).unwrap())
}

/// Same tree with every capacity multiplied by `k`.
pub fn scale_capacities(t: &Topology<f64>, k: f64) -> Topology<f64> {
    let layers = t
        .layers()
        .iter()
        .map(|l| {
            l.iter()
                .map(|n| NodeSpec::new(n.compute_cap * k, n.trans_cap * k))
                .collect()
        })
        .collect();
    Topology::from_parents(layers, &parent_indices(t)).unwrap()
}

pub fn parent_indices(t: &Topology<f64>) -> Vec<Vec<usize>> {
    (1..t.layer_count())
        .map(|l| {
            (0..t.layer(l).len())
                .map(|i| t.parent(hetmec::NodeId::new(l, i)).unwrap().index)
                .collect()
        })
        .collect()
}

/// Largest forward-difference slope of `L_min` along any coordinate over a
/// grid of the split box with spacing `h`.
pub fn secant_bound(t: &Topology<f64>, sc: &Scenario<f64>, h: f64) -> f64 {
    let d = t.dim();
    let n = (1.0 / h).round() as usize;
    let eval = |idx: &[usize]| {
        let s: Vec<f64> = idx.iter().map(|&k| k as f64 / n as f64).collect();
        hetmec::latency_lower_bound(t, sc, &hetmec::Assignment::new(s).unwrap())
    };
    let mut idx = vec![0usize; d];
    let mut best: f64 = 0.0;
    loop {
        let base = eval(&idx);
        for k in 0..d {
            if idx[k] < n {
                idx[k] += 1;
                best = best.max((eval(&idx) - base).abs() * n as f64);
                idx[k] -= 1;
            }
        }
        let mut pos = 0;
        loop {
            if pos == d {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] <= n {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Random points of the polytope as convex combinations of its vertices,
/// in processed coordinates.
pub fn interior_points(
    cs: &hetmec::ConstraintSet<f64>,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Vec<Vec<f64>> {
    let verts: Vec<Vec<f64>> =
        hetmec::enumerate_vertices(cs, hetmec::solver::VertexOptions::default())
            .map(|v| v.point)
            .collect();
    if verts.is_empty() {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let w: Vec<f64> = verts.iter().map(|_| rng.gen_range(0.0..1.0f64).powi(3)).collect();
            let total: f64 = w.iter().sum::<f64>().max(1e-300);
            let mut p = vec![0.0; cs.dim()];
            for (v, wi) in verts.iter().zip(&w) {
                for (pj, vj) in p.iter_mut().zip(v) {
                    *pj += vj * wi / total;
                }
            }
            p
        })
        .collect()
}

/// Chain whose compute capacities sum to 1.1 with ample links.
pub fn compute_limited_chain() -> (Topology<f64>, Scenario<f64>) {
    chain(0.5)
}

/// Chain limited by the device uplink: `λ − 0.9·0.1 ≤ 0.5`.
pub fn uplink_limited_chain() -> (Topology<f64>, Scenario<f64>) {
    let t = Topology::chain(vec![
        NodeSpec::new(100.0, 100.0),
        NodeSpec::new(100.0, 0.5),
        NodeSpec::device(0.1),
    ])
    .unwrap();
    (t, Scenario::new(vec![1.0], 0.1).unwrap())
}

/// One new node per node on layer `position - 1`, each adopting all of
/// that node's children.
pub fn mirror_layer(
    t: &Topology<f64>,
    position: usize,
    spec: impl Fn(usize) -> NodeSpec<f64>,
) -> hetmec::InsertionSpec<f64> {
    let above = t.layer(position - 1).len();
    let lower_parents = (0..t.layer(position).len())
        .map(|j| t.parent(hetmec::NodeId::new(position, j)).unwrap().index)
        .collect();
    hetmec::InsertionSpec {
        position,
        nodes: (0..above).map(spec).collect(),
        upper_parents: (0..above).collect(),
        lower_parents,
    }
}

/// Same tree with every transmission budget multiplied by `k`.
pub fn widen_links(t: &Topology<f64>, k: f64) -> Topology<f64> {
    let layers = t
        .layers()
        .iter()
        .map(|l| l.iter().map(|n| NodeSpec { trans_cap: n.trans_cap * k, ..*n }).collect())
        .collect();
    Topology::from_parents(layers, &parent_indices(t)).unwrap()
}

/// Device → AP → switch → gateway → cloud with the measured capacities,
/// one device generating 0.06 Mbit/s per unit of scale.
pub fn table3_chain() -> (Topology<f64>, Scenario<f64>) {
    let t = Topology::chain(vec![
        NodeSpec::new(12.0, 12.0),
        NodeSpec::new(4.2, 4.8),
        NodeSpec::new(1.5, 3.0),
        NodeSpec::new(0.4, 1.2),
        NodeSpec::device(0.12),
    ])
    .unwrap();
    (t, Scenario::new(vec![0.06], 0.1).unwrap())
}

/// Star transmission term plus linear compute terms, written out directly
/// from the model rather than through the library.
pub fn star_latency(lambda: &[f64], theta: &[f64], s: &[Complex64], phi: f64, rho: f64) -> Complex64 {
    let mut roots = Complex64::new(0.0, 0.0);
    let mut compute = Complex64::new(0.0, 0.0);
    for i in 0..lambda.len() {
        let raw = (Complex64::new(1.0, 0.0) - s[i]) * lambda[i];
        let out = raw + s[i] * (rho * lambda[i]);
        roots += out.sqrt();
        compute += s[i] * (lambda[i] / theta[i]);
    }
    compute + roots * roots / phi
}

pub fn fd_hessian(lambda: &[f64], theta: &[f64], s: &[f64], phi: f64, rho: f64) -> Vec<Vec<f64>> {
    let m = s.len();
    let (hc, h) = (1e-20, 1e-5);
    let grad = |x: &[f64], j: usize| {
        let z: Vec<Complex64> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| Complex64::new(v, if k == j { hc } else { 0.0 }))
            .collect();
        star_latency(lambda, theta, &z, phi, rho).im / hc
    };
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        let (mut up, mut down) = (s.to_vec(), s.to_vec());
        up[i] += h;
        down[i] -= h;
        for j in 0..m {
            out[i][j] = (grad(&up, j) - grad(&down, j)) / (2.0 * h);
        }
    }
    out
}

pub fn random_star(rng: &mut ChaCha8Rng, min_children: usize) -> (StarSubproblem<f64>, Vec<f64>) {
    let m = rng.gen_range(min_children..=6);
    let sub = StarSubproblem {
        lambda: (0..m).map(|_| rng.gen_range(0.1..2.0)).collect(),
        s: (0..m).map(|_| rng.gen_range(0.0..0.9)).collect(),
        phi: rng.gen_range(0.5..5.0),
        rho: RHOS[rng.gen_range(0..RHOS.len())],
    };
    let theta = (0..m).map(|_| rng.gen_range(0.1..5.0)).collect();
    (sub, theta)
}

/// Valid allocation drawn independently of the split.
pub fn random_allocation(t: &hetmec::Topology<f64>, rng: &mut ChaCha8Rng) -> hetmec::solver::Allocation<f64> {
    let mut a = hetmec::solver::Allocation::zeros(t);
    for id in t.node_ids() {
        a.set_theta(id, t.node(id).compute_cap * rng.gen_range(0.2..=1.0));
    }
    for k in t.parents() {
        let kids = t.children(k);
        let w: Vec<f64> = kids.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        let budget = t.node(k).trans_cap * rng.gen_range(0.5..=1.0);
        for (&c, wi) in kids.iter().zip(&w) {
            a.set_edge_phi(hetmec::NodeId::new(k.layer + 1, c), budget * wi / total);
        }
    }
    a
}
