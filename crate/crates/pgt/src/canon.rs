//! Canonical forms for small labeled multigraphs: colour refinement plus
//! individualization with orbit pruning from discovered automorphisms.

use crate::graph::Graph;
use crate::instantiate::Instantiation;
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub struct LabeledGraph {
    pub n: usize,
    pub directed: bool,
    pub colors: Vec<u64>,
    /// (tail, head, label); undirected arcs are stored once.
    pub arcs: Vec<(usize, usize, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm(pub Vec<u64>);

impl LabeledGraph {
    pub fn from_graph(g: &Graph) -> Self {
        LabeledGraph {
            n: g.n(),
            directed: false,
            colors: vec![0; g.n()],
            arcs: g.edges.iter().map(|&(a, b)| (a, b, 0)).collect(),
        }
    }

    /// Edge labels are the ranks of the distinct weights.
    pub fn from_instantiation(inst: &Instantiation, weighted: bool) -> Self {
        let mut ws: Vec<_> = inst.edges.iter().map(|e| e.weight).collect();
        ws.sort();
        ws.dedup();
        let label = |w| if weighted { ws.binary_search(&w).unwrap() as u64 } else { 0 };
        LabeledGraph {
            n: inst.len(),
            directed: inst.directed,
            colors: vec![0; inst.len()],
            arcs: inst.edges.iter().map(|e| (e.a, e.b, label(e.weight))).collect(),
        }
    }
}

struct Canon {
    n: usize,
    mat: Vec<u32>,
    colors: Vec<u64>,
}

type Cells = Vec<Vec<usize>>;

impl Canon {
    fn new(g: &LabeledGraph) -> (Self, Vec<Vec<u64>>) {
        let n = g.n;
        let mut cellsets: Vec<Vec<u64>> = vec![Vec::new(); n * n];
        for &(a, b, l) in &g.arcs {
            cellsets[a * n + b].push(l);
            if !g.directed && a != b {
                cellsets[b * n + a].push(l);
            }
        }
        for c in cellsets.iter_mut() {
            c.sort_unstable();
        }
        let mut table: Vec<Vec<u64>> = cellsets.clone();
        table.push(Vec::new());
        table.sort();
        table.dedup();
        let idx: BTreeMap<&Vec<u64>, u32> = table.iter().enumerate().map(|(i, t)| (t, i as u32)).collect();
        let mat = cellsets.iter().map(|c| idx[c]).collect();
        (Canon { n, mat, colors: g.colors.clone() }, table)
    }

    fn m(&self, a: usize, b: usize) -> u32 {
        self.mat[a * self.n + b]
    }

    fn refine(&self, mut cells: Cells) -> Cells {
        let n = self.n;
        loop {
            let mut cell_of = vec![0usize; n];
            for (i, c) in cells.iter().enumerate() {
                for &v in c {
                    cell_of[v] = i;
                }
            }
            let mut changed = false;
            let mut next = Vec::with_capacity(cells.len());
            for c in &cells {
                if c.len() == 1 {
                    next.push(c.clone());
                    continue;
                }
                let mut sigs: Vec<(Vec<(usize, u32, u32)>, usize)> = c
                    .iter()
                    .map(|&v| {
                        let mut s: Vec<(usize, u32, u32)> = (0..n)
                            .filter(|&u| self.m(v, u) != 0 || self.m(u, v) != 0)
                            .map(|u| (cell_of[u], self.m(v, u), self.m(u, v)))
                            .collect();
                        s.sort_unstable();
                        (s, v)
                    })
                    .collect();
                sigs.sort();
                let mut start = 0;
                for i in 1..=sigs.len() {
                    if i == sigs.len() || sigs[i].0 != sigs[start].0 {
                        next.push(sigs[start..i].iter().map(|x| x.1).collect());
                        start = i;
                    }
                }
                if next.last().map(|l: &Vec<usize>| l.len()) != Some(c.len()) {
                    changed = true;
                }
            }
            cells = next;
            if !changed {
                return cells;
            }
        }
    }

    fn leaf_form(&self, cells: &Cells) -> (Vec<u32>, Vec<usize>) {
        let order: Vec<usize> = cells.iter().map(|c| c[0]).collect();
        let mut form = Vec::with_capacity(self.n * self.n);
        for &a in &order {
            for &b in &order {
                form.push(self.m(a, b));
            }
        }
        (form, order)
    }
}

struct Search<'a> {
    c: &'a Canon,
    best: Option<(Vec<u32>, Vec<usize>)>,
    first: Option<(Vec<u32>, Vec<usize>)>,
    autos: Vec<Vec<usize>>,
    leaves: usize,
    first_path: Vec<usize>,
    best_path: Vec<usize>,
}

impl Search<'_> {
    fn record_auto(&mut self, order: &[usize], other: &[usize]) {
        // maps other[i] -> order[i]... i.e. the permutation relating two equal leaves
        let mut p = vec![0; self.c.n];
        for i in 0..order.len() {
            p[other[i]] = order[i];
        }
        if p.iter().enumerate().any(|(i, &x)| i != x) && self.autos.len() < 4096 {
            self.autos.push(p);
        }
    }

    /// Explores the subtree below `fixed`. Returns the depth to unwind to
    /// when an automorphism shows the rest of an ancestor's subtree is
    /// equivalent to one already searched.
    fn go(&mut self, cells: Cells, fixed: &mut Vec<usize>) -> usize {
        let cells = self.c.refine(cells);
        let depth = fixed.len();
        if cells.iter().all(|c| c.len() == 1) {
            self.leaves += 1;
            let (form, order) = self.c.leaf_form(&cells);
            let common = |p: &[usize]| p.iter().zip(fixed.iter()).take_while(|(a, b)| a == b).count();
            let mut jump = depth;
            if let Some((f, o)) = &self.first {
                if *f == form {
                    let o = o.clone();
                    self.record_auto(&o, &order);
                    jump = jump.min(common(&self.first_path));
                }
            } else {
                self.first = Some((form.clone(), order.clone()));
                self.first_path = fixed.clone();
            }
            match &self.best {
                Some((b, o)) if *b == form => {
                    let o = o.clone();
                    self.record_auto(&o, &order);
                    jump = jump.min(common(&self.best_path));
                }
                Some((b, _)) if *b < form => {}
                _ => {
                    self.best = Some((form, order));
                    self.best_path = fixed.clone();
                }
            }
            return jump;
        }
        let ti = cells.iter().position(|c| c.len() > 1).unwrap();
        let target = cells[ti].clone();
        let mut explored: Vec<usize> = Vec::new();
        for &v in &target {
            if !explored.is_empty() && self.same_orbit(fixed, &explored, v) {
                continue;
            }
            explored.push(v);
            let mut next = cells.clone();
            let rest: Vec<usize> = target.iter().copied().filter(|&u| u != v).collect();
            next.splice(ti..ti + 1, [vec![v], rest]);
            fixed.push(v);
            let back = self.go(next, fixed);
            fixed.pop();
            if back < depth {
                return back;
            }
        }
        depth
    }

    /// Whether `v` is in the orbit of an explored vertex under the group
    /// generated by known automorphisms fixing `fixed` pointwise.
    fn same_orbit(&self, fixed: &[usize], explored: &[usize], v: usize) -> bool {
        let gens: Vec<&Vec<usize>> = self.autos.iter().filter(|p| fixed.iter().all(|&f| p[f] == f)).collect();
        if gens.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.c.n];
        let mut stack: Vec<usize> = explored.to_vec();
        for &e in explored {
            seen[e] = true;
        }
        while let Some(x) = stack.pop() {
            if x == v {
                return true;
            }
            for p in &gens {
                let y = p[x];
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        false
    }
}

/// Returns the canonical form and the canonical order (position -> vertex).
/// Disconnected graphs are handled component by component.
pub fn canonical_labeling(g: &LabeledGraph) -> (CanonicalForm, Vec<usize>) {
    let comps = weak_components(g);
    if comps.len() <= 1 {
        return connected_labeling(g);
    }
    let mut parts: Vec<(CanonicalForm, Vec<usize>)> = comps
        .iter()
        .map(|vs| {
            let (f, o) = connected_labeling(&sub(g, vs));
            (f, o.iter().map(|&i| vs[i]).collect())
        })
        .collect();
    parts.sort();
    let mut out = vec![g.n as u64, g.directed as u64, 1, parts.len() as u64];
    let mut order = Vec::with_capacity(g.n);
    for (f, o) in parts {
        out.push(f.0.len() as u64);
        out.extend(f.0);
        order.extend(o);
    }
    (CanonicalForm(out), order)
}

fn weak_components(g: &LabeledGraph) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..g.n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b, _) in &g.arcs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra.max(rb)] = ra.min(rb);
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..g.n {
        let r = find(&mut parent, v);
        by_root.entry(r).or_default().push(v);
    }
    by_root.into_values().collect()
}

fn sub(g: &LabeledGraph, vs: &[usize]) -> LabeledGraph {
    let mut pos = vec![usize::MAX; g.n];
    for (i, &v) in vs.iter().enumerate() {
        pos[v] = i;
    }
    LabeledGraph {
        n: vs.len(),
        directed: g.directed,
        colors: vs.iter().map(|&v| g.colors[v]).collect(),
        arcs: g.arcs.iter().filter(|a| pos[a.0] != usize::MAX).map(|&(a, b, l)| (pos[a], pos[b], l)).collect(),
    }
}

fn connected_labeling(g: &LabeledGraph) -> (CanonicalForm, Vec<usize>) {
    let (c, table) = Canon::new(g);
    let mut by_color: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for v in 0..g.n {
        by_color.entry(c.colors[v]).or_default().push(v);
    }
    let cells: Cells = by_color.into_values().collect();
    let (form, order) = if g.n == 0 {
        (Vec::new(), Vec::new())
    } else {
        let mut s = Search {
            c: &c,
            best: None,
            first: None,
            autos: Vec::new(),
            leaves: 0,
            first_path: Vec::new(),
            best_path: Vec::new(),
        };
        s.go(cells, &mut Vec::new());
        s.best.unwrap()
    };
    let mut out = vec![g.n as u64, g.directed as u64, 0];
    out.extend(order.iter().map(|&v| c.colors[v]));
    out.push(table.len() as u64);
    for t in &table {
        out.push(t.len() as u64);
        out.extend(t.iter().copied());
    }
    out.extend(form.iter().map(|&x| x as u64));
    (CanonicalForm(out), order)
}

pub fn canonical_form(g: &LabeledGraph) -> CanonicalForm {
    canonical_labeling(g).0
}

pub fn graph_canonical_form(g: &Graph) -> CanonicalForm {
    canonical_form(&LabeledGraph::from_graph(g))
}

pub fn graph_isomorphic(a: &Graph, b: &Graph) -> bool {
    a.n() == b.n() && a.m() == b.m() && graph_canonical_form(a) == graph_canonical_form(b)
}

/// Partition indices of `graphs` into isomorphism classes, in first-seen order.
pub fn group_isomorphic_components(graphs: &[Graph]) -> Vec<Vec<usize>> {
    let mut groups: Vec<(CanonicalForm, Vec<usize>)> = Vec::new();
    for (i, g) in graphs.iter().enumerate() {
        let f = graph_canonical_form(g);
        match groups.iter_mut().find(|(h, _)| *h == f) {
            Some((_, v)) => v.push(i),
            None => groups.push((f, vec![i])),
        }
    }
    groups.into_iter().map(|(_, v)| v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    fn permute(g: &Graph, p: &[usize]) -> Graph {
        Graph::from_edges(g.n(), &g.edges.iter().map(|&(a, b)| (p[a], p[b])).collect::<Vec<_>>())
    }

    fn brute_iso(a: &Graph, b: &Graph) -> bool {
        if a.n() != b.n() || a.m() != b.m() {
            return false;
        }
        let n = a.n();
        let mut adj_b = vec![vec![0u32; n]; n];
        for &(x, y) in &b.edges {
            adj_b[x][y] += 1;
            adj_b[y][x] += 1;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            let mut adj = vec![vec![0u32; n]; n];
            for &(x, y) in &a.edges {
                adj[perm[x]][perm[y]] += 1;
                adj[perm[y]][perm[x]] += 1;
            }
            if adj == adj_b {
                return true;
            }
            // next permutation
            let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
                return false;
            };
            let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap();
            perm.swap(i, j);
            perm[i + 1..].reverse();
        }
    }

    #[test]
    fn small_fixtures() {
        let c4 = cycle(4);
        assert!(graph_isomorphic(&c4, &permute(&c4, &[2, 0, 3, 1])));
        let p4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        assert!(!graph_isomorphic(&c4, &p4));
        let groups = group_isomorphic_components(&[Graph::new(1), Graph::new(1), Graph::from_edges(2, &[(0, 1)])]);
        assert_eq!(groups, vec![vec![0, 1], vec![2]]);
        assert_eq!(group_isomorphic_components(&[cycle(3), cycle(3), cycle(3)]), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn symmetric_graphs_are_fast() {
        let star = Graph::from_edges(13, &(1..13).map(|i| (0, i)).collect::<Vec<_>>());
        let mut p: Vec<usize> = (0..13).collect();
        p.reverse();
        assert!(graph_isomorphic(&star, &permute(&star, &p)));
        let mut edges = Vec::new();
        for a in 0..8 {
            for b in a + 1..8 {
                edges.push((a, b));
            }
        }
        let k8 = Graph::from_edges(8, &edges);
        assert!(graph_isomorphic(&k8, &permute(&k8, &[7, 6, 5, 4, 3, 2, 1, 0])));
        let big_star = Graph::from_edges(40, &(1..40).map(|i| (0, i)).collect::<Vec<_>>());
        assert!(graph_isomorphic(&big_star, &permute(&big_star, &(0..40).rev().collect::<Vec<_>>())));
        let tri: Vec<(usize, usize)> =
            (0..10).flat_map(|k| [(3 * k, 3 * k + 1), (3 * k + 1, 3 * k + 2), (3 * k, 3 * k + 2)]).collect();
        let tris = Graph::from_edges(30, &tri);
        assert!(graph_isomorphic(&tris, &permute(&tris, &(0..30).rev().collect::<Vec<_>>())));
        let q5: Vec<(usize, usize)> =
            (0..32).flat_map(|v| (0..5).map(move |b| (v, v ^ (1 << b)))).filter(|(a, b)| a < b).collect();
        let cube = Graph::from_edges(32, &q5);
        assert!(graph_isomorphic(&cube, &permute(&cube, &(0..32).rev().collect::<Vec<_>>())));
    }

    #[test]
    fn agrees_with_permutation_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let n = 8;
            let m = rng.gen_range(6..14);
            let mut edges = Vec::new();
            while edges.len() < m {
                let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                if a != b && !edges.contains(&(a, b)) && !edges.contains(&(b, a)) {
                    edges.push((a, b));
                }
            }
            let g = Graph::from_edges(n, &edges);
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            let h = if rng.gen_bool(0.5) {
                permute(&g, &p)
            } else {
                // move one edge
                let mut e = edges.clone();
                e.pop();
                loop {
                    let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    if a != b && !e.contains(&(a, b)) && !e.contains(&(b, a)) {
                        e.push((a, b));
                        break;
                    }
                }
                permute(&Graph::from_edges(n, &e), &p)
            };
            assert_eq!(graph_isomorphic(&g, &h), brute_iso(&g, &h));
        }
    }

    #[test]
    fn directed_and_labels_matter() {
        let a = LabeledGraph { n: 2, directed: true, colors: vec![0, 0], arcs: vec![(0, 1, 0)] };
        let b = LabeledGraph { n: 2, directed: true, colors: vec![0, 0], arcs: vec![(1, 0, 0)] };
        let c = LabeledGraph { n: 2, directed: true, colors: vec![0, 0], arcs: vec![(1, 0, 1)] };
        assert_eq!(canonical_form(&a), canonical_form(&b));
        assert_ne!(canonical_form(&a), canonical_form(&c));
    }
}
