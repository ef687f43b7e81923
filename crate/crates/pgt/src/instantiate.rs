//! Explicit instantiation of a model.

use crate::error::{PgtError, Result};
use crate::model::{Pgt, TemplateId, VertexId};
use crate::weight::Weight;
use std::collections::HashMap;
use std::fmt;

pub const DEFAULT_BUDGET: u128 = 10_000_000;

thread_local! {
    static OVERRIDE: std::cell::Cell<Option<u128>> = const { std::cell::Cell::new(None) };
}

/// Vertex cap for explicit instantiation: the innermost [`with_budget`] on
/// this thread, else `PGT_BUDGET`, else the default.
pub fn budget() -> u128 {
    OVERRIDE.with(|o| o.get()).unwrap_or_else(|| {
        std::env::var("PGT_BUDGET").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_BUDGET)
    })
}

/// Run `f` with [`budget`] returning `cap` on this thread.
pub fn with_budget<T>(cap: u128, f: impl FnOnce() -> T) -> T {
    struct Restore(Option<u128>);
    impl Drop for Restore {
        fn drop(&mut self) {
            OVERRIDE.with(|o| o.set(self.0));
        }
    }
    let _restore = Restore(OVERRIDE.with(|o| o.replace(Some(cap))));
    f()
}

/// One index per non-root ancestor template of the owning vertex, root to leaf.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(pub Vec<u64>);

impl Address {
    pub fn root() -> Self {
        Address(Vec::new())
    }
    pub fn zeros(len: usize) -> Self {
        Address(vec![0; len])
    }
    pub fn parse(s: &str) -> Option<Self> {
        if s.is_empty() {
            return Some(Address::root());
        }
        s.split('.').map(|p| p.parse().ok()).collect::<Option<Vec<u64>>>().map(Address)
    }
    /// Pairs of (template, index) for vertex `v` of `g`.
    pub fn pairs(&self, g: &Pgt, v: VertexId) -> Vec<(TemplateId, u64)> {
        g.chain(v).into_iter().zip(self.0.iter().copied()).collect()
    }
    pub fn is_valid_for(&self, g: &Pgt, v: VertexId) -> bool {
        let chain = g.chain(v);
        chain.len() == self.0.len() && chain.iter().zip(&self.0).all(|(&t, &i)| i < g.param(t))
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: Weight,
}

#[derive(Clone, Debug)]
pub struct Instantiation {
    pub directed: bool,
    pub vertices: Vec<(VertexId, Address)>,
    pub edges: Vec<InstEdge>,
    index: HashMap<(VertexId, Address), usize>,
}

impl Instantiation {
    pub fn new(directed: bool, vertices: Vec<(VertexId, Address)>, edges: Vec<InstEdge>) -> Self {
        let index = vertices.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        Instantiation { directed, vertices, edges, index }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn find(&self, v: VertexId, a: &Address) -> Option<usize> {
        self.index.get(&(v, a.clone())).copied()
    }

    pub fn instances_of(&self, v: VertexId) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.vertices[i].0 == v).collect()
    }

    /// Out-neighbours (both directions if undirected).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.len()];
        for e in &self.edges {
            adj[e.a].push(e.b);
            if !self.directed {
                adj[e.b].push(e.a);
            }
        }
        adj
    }

    pub fn render(&self, g: &Pgt) -> String {
        let mut s = format!("graph 1 {}\n", if self.directed { "directed" } else { "undirected" });
        let label = |i: usize| format!("{}@{}", g.name(self.vertices[i].0), self.vertices[i].1);
        for i in 0..self.len() {
            s.push_str(&format!("vertex {}\n", label(i)));
        }
        for e in &self.edges {
            s.push_str(&format!("edge {} {} w {}\n", label(e.a), label(e.b), e.weight));
        }
        s
    }
}

fn addresses(g: &Pgt, v: VertexId) -> Vec<Address> {
    let params: Vec<u64> = g.chain(v).iter().map(|&t| g.param(t)).collect();
    let mut out = vec![Address::root()];
    for p in params {
        let mut next = Vec::with_capacity(out.len() * p as usize);
        for a in &out {
            for i in 0..p {
                let mut b = a.0.clone();
                b.push(i);
                next.push(Address(b));
            }
        }
        out = next;
    }
    out
}

pub fn instantiate(g: &Pgt) -> Result<Instantiation> {
    instantiate_with_budget(g, budget())
}

pub fn instantiate_with_budget(g: &Pgt, cap: u128) -> Result<Instantiation> {
    let needed = g.total_instances();
    if needed > cap {
        return Err(PgtError::Budget { needed, budget: cap });
    }
    let mut vertices = Vec::with_capacity(needed as usize);
    for v in 0..g.n() {
        for a in addresses(g, v) {
            vertices.push((v, a));
        }
    }
    let index: HashMap<(VertexId, Address), usize> =
        vertices.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let mut edges = Vec::new();
    for e in g.edges() {
        let (lu, lv) = (g.chain(e.tail).len(), g.chain(e.head).len());
        // the endpoint in the deeper template drives the enumeration
        let (deep, shallow, deep_is_tail) = if lu >= lv { (e.tail, e.head, true) } else { (e.head, e.tail, false) };
        let short = lu.min(lv);
        for a in addresses(g, deep) {
            let b = Address(a.0[..short].to_vec());
            let x = index[&(deep, a)];
            let y = index[&(shallow, b)];
            let (p, q) = if deep_is_tail { (x, y) } else { (y, x) };
            edges.push(InstEdge { a: p, b: q, weight: e.weight });
        }
    }
    for e in g.sibling_edges() {
        let t = g.template_of(e.tail);
        let p = g.param(t) as i64;
        for a in addresses(g, e.tail) {
            let mut b = a.clone();
            if let Some(last) = b.0.last_mut() {
                *last = (*last as i64 + e.delta).rem_euclid(p) as u64;
            }
            edges.push(InstEdge { a: index[&(e.tail, a)], b: index[&(e.head, b)], weight: e.weight });
        }
    }
    Ok(Instantiation { directed: g.directed(), vertices, edges, index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::fig1;
    use crate::model::{RawPgt, ROOT};

    #[test]
    fn fig1_multiplicities() {
        let g = fig1();
        let inst = instantiate(&g).unwrap();
        assert_eq!(inst.len(), 16);
        let count = |n: &str| inst.instances_of(g.vertex_id(n).unwrap()).len();
        let got: Vec<usize> = ["a", "b", "c", "d", "e", "f", "g", "i"].iter().map(|n| count(n)).collect();
        assert_eq!(got, vec![1, 2, 2, 2, 6, 1, 1, 1]);
        // no-skipping: endpoint addresses differ at most in the last component
        for e in &inst.edges {
            let (a, b) = (&inst.vertices[e.a].1 .0, &inst.vertices[e.b].1 .0);
            let k = a.len().min(b.len());
            assert_eq!(a[..k], b[..k]);
            assert!(a.len().abs_diff(b.len()) <= 1);
        }
    }

    #[test]
    fn star_and_sibling_loop() {
        let mut r = RawPgt::new(true);
        let c = r.add_template("C", ROOT, 3);
        r.add_vertex("s", ROOT);
        r.add_vertex("v", c);
        r.add_edge("s", "v", Weight::one());
        let inst = instantiate(&r.build().unwrap()).unwrap();
        assert_eq!(inst.len(), 4);
        assert_eq!(inst.edges.len(), 3);
        assert!(inst.edges.iter().all(|e| e.a == 0));

        let mut r = RawPgt::new(true);
        let c = r.add_template("C", ROOT, 4);
        r.add_vertex("v", c);
        r.add_sedge("v", "v", Weight::one(), 2);
        let g = r.build().unwrap();
        let inst = instantiate(&g).unwrap();
        let pairs: Vec<(u64, u64)> =
            inst.edges.iter().map(|e| (inst.vertices[e.a].1 .0[0], inst.vertices[e.b].1 .0[0])).collect();
        assert_eq!(pairs, vec![(0, 2), (1, 3), (2, 0), (3, 1)]);
        assert!(inst.render(&g).contains("edge v@1 v@3 w 1"));
    }

    #[test]
    fn budget_enforced() {
        let g = fig1();
        assert!(matches!(instantiate_with_budget(&g, 15), Err(PgtError::Budget { needed: 16, .. })));
    }
}
