//! Plain undirected graphs (targets of discovery and instance isomorphism).

use crate::instantiate::Instantiation;
use crate::model::Pgt;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    pub names: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph { names: (0..n).map(|i| i.to_string()).collect(), edges: Vec::new(), adj: vec![Vec::new(); n] }
    }

    pub fn with_names(names: Vec<String>) -> Self {
        let n = names.len();
        Graph { names, edges: Vec::new(), adj: vec![Vec::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Graph::new(n);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    /// Undirected view of an instantiation; weights are dropped.
    pub fn from_instantiation(inst: &Instantiation, g: &Pgt) -> Self {
        let names = inst.vertices.iter().map(|(v, a)| format!("{}@{}", g.name(*v), a)).collect();
        let mut out = Graph::with_names(names);
        for e in &inst.edges {
            out.add_edge(e.a, e.b);
        }
        out
    }

    pub fn add_vertex(&mut self, name: &str) -> usize {
        self.names.push(name.into());
        self.adj.push(Vec::new());
        self.names.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        self.edges.push((a, b));
        self.adj[a].push(b);
        if a != b {
            self.adj[b].push(a);
        }
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.edges.iter().all(|&(a, b)| a != b && seen.insert((a.min(b), a.max(b))))
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.n()];
        let mut out = Vec::new();
        for s in 0..self.n() {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![s];
            comp[s] = id;
            let mut members = Vec::new();
            while let Some(v) = stack.pop() {
                members.push(v);
                for &w in &self.adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = id;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n() <= 1 || self.components().len() == 1
    }

    /// Subgraph induced by `vs` (in the given order).
    pub fn induced(&self, vs: &[usize]) -> Graph {
        let mut pos = vec![usize::MAX; self.n()];
        for (i, &v) in vs.iter().enumerate() {
            pos[v] = i;
        }
        let mut g = Graph::with_names(vs.iter().map(|&v| self.names[v].clone()).collect());
        for &(a, b) in &self.edges {
            if pos[a] != usize::MAX && pos[b] != usize::MAX {
                g.add_edge(pos[a], pos[b]);
            }
        }
        g
    }
}
