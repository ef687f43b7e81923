//! Seeded random models and graphs for tests and benchmarks.

use crate::graph::Graph;
use crate::model::{Edge, Pgt, RawPgt, SiblingEdge, Template};
use crate::weight::Weight;
use rand::Rng;

#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub directed: bool,
    pub max_vertices: usize,
    pub max_edges: usize,
    pub max_templates: usize,
    pub max_depth: usize,
    pub max_param: u64,
    pub max_weight: i128,
    pub sibling_edges: usize,
    /// Only edges from lower to higher vertex index (a DAG template graph).
    pub acyclic: bool,
}

impl ModelSpec {
    pub fn small(directed: bool) -> Self {
        ModelSpec {
            directed,
            max_vertices: 8,
            max_edges: 14,
            max_templates: 4,
            max_depth: 3,
            max_param: 3,
            max_weight: 4,
            sibling_edges: 0,
            acyclic: false,
        }
    }
}

pub fn random_model<R: Rng>(rng: &mut R, spec: &ModelSpec) -> Pgt {
    let nt = rng.gen_range(1..=spec.max_templates.max(1)).min(spec.max_vertices.max(1));
    let mut templates = vec![Template { name: "T0".into(), parent: None, param: 1 }];
    let mut depth = vec![0usize];
    for i in 1..nt {
        let opts: Vec<usize> = (0..i).filter(|&p| depth[p] < spec.max_depth).collect();
        let p = opts[rng.gen_range(0..opts.len())];
        depth.push(depth[p] + 1);
        templates.push(Template { name: format!("T{i}"), parent: Some(p), param: rng.gen_range(1..=spec.max_param) });
    }
    let n = rng.gen_range(nt.max(2)..=spec.max_vertices.max(nt).max(2));
    let mut belongs: Vec<usize> = (0..nt).collect();
    while belongs.len() < n {
        belongs.push(rng.gen_range(0..nt));
    }
    // shuffle so that template order does not follow vertex order
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        belongs.swap(i, j);
    }
    let related = |a: usize, b: usize| a == b || templates[a].parent == Some(b) || templates[b].parent == Some(a);
    let m = rng.gen_range(0..=spec.max_edges);
    let mut edges = Vec::new();
    for _ in 0..m * 4 {
        if edges.len() >= m {
            break;
        }
        let (mut u, mut v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u == v || !related(belongs[u], belongs[v]) {
            continue;
        }
        if spec.acyclic && u > v {
            std::mem::swap(&mut u, &mut v);
        }
        let weight = Weight::int(rng.gen_range(1..=spec.max_weight.max(1)));
        edges.push(Edge { tail: u, head: v, weight });
    }
    let mut sibling_edges = Vec::new();
    for _ in 0..spec.sibling_edges * 4 {
        if sibling_edges.len() >= spec.sibling_edges {
            break;
        }
        let (mut u, mut v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let t = belongs[u];
        if belongs[v] != t || templates[t].param < 2 || (spec.acyclic && u == v) {
            continue;
        }
        if spec.acyclic && u > v {
            std::mem::swap(&mut u, &mut v);
        }
        let p = templates[t].param as i64;
        let delta = rng.gen_range(1..p);
        let weight = Weight::int(rng.gen_range(1..=spec.max_weight.max(1)));
        sibling_edges.push(SiblingEdge { tail: u, head: v, weight, delta });
    }
    let raw = RawPgt {
        directed: spec.directed,
        templates,
        names: (0..n).map(|i| format!("v{i}")).collect(),
        memberships: belongs.iter().map(|&t| vec![t]).collect(),
        edges,
        sibling_edges,
    };
    Pgt::from_raw(raw).expect("generator produces valid models")
}

/// Draw models until one satisfies `keep` (at most `tries` attempts).
pub fn random_model_where<R: Rng>(
    rng: &mut R,
    spec: &ModelSpec,
    tries: usize,
    keep: impl Fn(&Pgt) -> bool,
) -> Option<Pgt> {
    (0..tries).map(|_| random_model(rng, spec)).find(|g| keep(g))
}

/// Erdős–Rényi graph with edge probability `p`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    let mut g = Graph::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(a, b);
            }
        }
    }
    g
}
