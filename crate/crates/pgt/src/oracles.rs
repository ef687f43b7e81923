//! Reference answers computed on explicit instantiations.

use crate::canon::{canonical_form, LabeledGraph};
use crate::error::{PgtError, Result};
use crate::instantiate::{instantiate, Address, Instantiation};
use crate::maxflow::{solve_max_flow, Network};
use crate::model::{Pgt, TemplateId, VertexId};
use crate::siblings::TreeTemplate;
use crate::treematch::TreePattern;
use crate::weight::{Rat, Weight};
use num_traits::Zero;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

fn network(inst: &Instantiation) -> Network {
    let mut net = Network::new(inst.len(), inst.directed);
    for e in &inst.edges {
        net.add(e.a, e.b, e.weight);
    }
    net
}

/// Max flow from the set `sources` to the set `sinks` through infinite
/// super-terminal arcs.
pub fn oracle_flow(inst: &Instantiation, sources: &[usize], sinks: &[usize]) -> Result<Weight> {
    let n = inst.len();
    let mut net = Network::new(n + 2, true);
    for e in &inst.edges {
        net.add(e.a, e.b, e.weight);
        if !inst.directed {
            net.add(e.b, e.a, e.weight);
        }
    }
    for &s in sources {
        net.add(n, s, Weight::Infinite);
    }
    for &t in sinks {
        net.add(t, n + 1, Weight::Infinite);
    }
    Ok(solve_max_flow(&net, n, n + 1)?.value)
}

/// Global minimum cut of an undirected instantiation as the least
/// `0`-`t` flow over all `t`. Zero when disconnected.
pub fn oracle_mincut(inst: &Instantiation) -> Result<Weight> {
    let net = network(inst);
    let mut best = Weight::Infinite;
    for t in 1..inst.len() {
        best = best.min(solve_max_flow(&net, 0, t)?.value);
    }
    Ok(best)
}

/// Weakly connected components.
pub fn oracle_components(inst: &Instantiation) -> usize {
    let mut adj = vec![Vec::new(); inst.len()];
    for e in &inst.edges {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    let mut seen = vec![false; inst.len()];
    let mut count = 0;
    for s in 0..inst.len() {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

/// An injective embedding of `pattern` with its root at instance `root`,
/// pattern arcs mapped to instantiation arcs.
pub fn oracle_tree_embedding(inst: &Instantiation, pattern: &TreePattern, root: usize) -> Option<Vec<usize>> {
    let adj = inst.adjacency();
    let mut img = vec![usize::MAX; pattern.k()];
    let mut used = vec![false; inst.len()];
    img[0] = root;
    used[root] = true;
    fn extend(i: usize, p: &TreePattern, adj: &[Vec<usize>], img: &mut [usize], used: &mut [bool]) -> bool {
        if i == p.k() {
            return true;
        }
        let par = img[p.parent[i].unwrap()];
        for &w in &adj[par] {
            if used[w] {
                continue;
            }
            used[w] = true;
            img[i] = w;
            if extend(i + 1, p, adj, img, used) {
                return true;
            }
            used[w] = false;
        }
        img[i] = usize::MAX;
        false
    }
    extend(1, pattern, &adj, &mut img, &mut used).then_some(img)
}

/// Whether the pattern occurs rooted at some instance of template vertex `root_origin`.
pub fn oracle_tree_occurs(inst: &Instantiation, pattern: &TreePattern, root_origin: usize) -> bool {
    inst.instances_of(root_origin).into_iter().any(|r| oracle_tree_embedding(inst, pattern, r).is_some())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathMode {
    Exactly,
    AtMost,
}

/// `k` paths from `s` to `t` with `L` edges each (at most `L` in `AtMost`
/// mode), pairwise disjoint except at `s` and `t`. Parallel direct edges
/// count as distinct paths.
pub fn oracle_disjoint_paths(inst: &Instantiation, s: usize, t: usize, k: usize, l: usize, mode: PathMode) -> bool {
    if k == 0 {
        return true;
    }
    let adj = inst.adjacency();
    let direct =
        inst.edges.iter().filter(|e| (e.a == s && e.b == t) || (!inst.directed && e.a == t && e.b == s)).count();
    let mut paths: Vec<Vec<usize>> = Vec::new();
    let mut cur = vec![s];
    fn walk(
        v: usize,
        t: usize,
        l: usize,
        exact: bool,
        adj: &[Vec<usize>],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let len = cur.len() - 1;
        if len >= l {
            return;
        }
        let mut tried = Vec::new();
        for &w in &adj[v] {
            if tried.contains(&w) || cur.contains(&w) {
                continue;
            }
            tried.push(w);
            if w == t {
                // direct edges are counted separately
                if len + 1 >= 2 && (!exact || len + 1 == l) {
                    out.push(cur[1..].to_vec());
                }
                continue;
            }
            cur.push(w);
            walk(w, t, l, exact, adj, cur, out);
            cur.pop();
        }
    }
    walk(s, t, l, mode == PathMode::Exactly, &adj, &mut cur, &mut paths);
    let direct_ok = l >= 1 && (mode == PathMode::AtMost || l == 1);
    let from_direct = if direct_ok { direct.min(k) } else { 0 };
    if from_direct >= k {
        return true;
    }
    let need = k - from_direct;
    fn pick(i: usize, need: usize, paths: &[Vec<usize>], used: &mut Vec<bool>) -> bool {
        if need == 0 {
            return true;
        }
        if i == paths.len() {
            return false;
        }
        if paths[i].iter().all(|&v| !used[v]) {
            for &v in &paths[i] {
                used[v] = true;
            }
            if pick(i + 1, need - 1, paths, used) {
                return true;
            }
            for &v in &paths[i] {
                used[v] = false;
            }
        }
        pick(i + 1, need, paths, used)
    }
    pick(0, need, &paths, &mut vec![false; inst.len()])
}

/// Unweighted distances from `s` (`None` when unreachable).
pub fn oracle_bfs(inst: &Instantiation, s: usize) -> Vec<Option<usize>> {
    let adj = inst.adjacency();
    let mut d = vec![None; inst.len()];
    d[s] = Some(0);
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if d[w].is_none() {
                d[w] = Some(d[v].unwrap() + 1);
                q.push_back(w);
            }
        }
    }
    d
}

/// Weighted distances from `s` by Dijkstra (weights must be finite).
pub fn oracle_sssp(inst: &Instantiation, s: usize) -> Vec<Option<Rat>> {
    let mut adj = vec![Vec::new(); inst.len()];
    for e in &inst.edges {
        let w = e.weight.finite().expect("finite weights");
        adj[e.a].push((e.b, w));
        if !inst.directed {
            adj[e.b].push((e.a, w));
        }
    }
    let mut d: Vec<Option<Rat>> = vec![None; inst.len()];
    d[s] = Some(Rat::zero());
    let mut heap = BinaryHeap::from([Reverse((Rat::zero(), s))]);
    while let Some(Reverse((dv, v))) = heap.pop() {
        if d[v].is_some_and(|x| x < dv) {
            continue;
        }
        for &(w, c) in &adj[v] {
            let nd = dv + c;
            if d[w].is_none_or(|x| nd < x) {
                d[w] = Some(nd);
                heap.push(Reverse((nd, w)));
            }
        }
    }
    d
}

pub fn oracle_reachable(inst: &Instantiation, s: usize) -> Vec<bool> {
    oracle_bfs(inst, s).iter().map(|d| d.is_some()).collect()
}

/// Instance indices (in `t`) of each vertex of `t` reachable from instance
/// zero of `v`.
pub fn oracle_residues(
    g: &Pgt,
    inst: &Instantiation,
    t: TemplateId,
    v: VertexId,
) -> Result<BTreeMap<VertexId, BTreeSet<u64>>> {
    let k = g.tree().depth[t];
    let s = inst.find(v, &Address::zeros(g.chain(v).len())).ok_or_else(|| PgtError::UnknownVertex(g.name(v).into()))?;
    let mut out: BTreeMap<VertexId, BTreeSet<u64>> = BTreeMap::new();
    for (i, d) in oracle_bfs(inst, s).iter().enumerate() {
        let (w, a) = &inst.vertices[i];
        if d.is_some() && g.contains(t, *w) {
            out.entry(*w).or_default().insert(if k == 0 { 0 } else { a.0[k - 1] });
        }
    }
    Ok(out)
}

/// Whether a BFS (or shortest-path) tree template instantiates to an
/// arborescence rooted at its source whose distances, grouped by original
/// vertex, equal those in the instantiation of `g` from instance zero of `s`.
pub fn oracle_check_tree(g: &Pgt, tt: &TreeTemplate, s: VertexId, weighted: bool) -> Result<bool> {
    let inst = instantiate(g)?;
    let src =
        inst.find(s, &Address::zeros(g.chain(s).len())).ok_or_else(|| PgtError::UnknownVertex(g.name(s).into()))?;
    let out = instantiate(&tt.pgt)?;
    let mut indeg = vec![0; out.len()];
    for e in &out.edges {
        indeg[e.b] += 1;
    }
    let roots: Vec<usize> = (0..out.len()).filter(|&i| indeg[i] == 0).collect();
    if indeg.iter().any(|&d| d > 1) || roots.len() != 1 || out.vertices[roots[0]].0 != tt.root {
        return Ok(false);
    }
    let dist = |i: &Instantiation, from: usize| -> Vec<Option<Rat>> {
        if weighted {
            oracle_sssp(i, from)
        } else {
            oracle_bfs(i, from).into_iter().map(|d| d.map(|d| Rat::from_integer(d as i128))).collect()
        }
    };
    let mut want: BTreeMap<VertexId, Vec<Rat>> = BTreeMap::new();
    let mut got: BTreeMap<VertexId, Vec<Rat>> = BTreeMap::new();
    for (i, d) in dist(&inst, src).into_iter().enumerate() {
        if let Some(d) = d {
            want.entry(inst.vertices[i].0).or_default().push(d);
        }
    }
    for (i, d) in dist(&out, roots[0]).into_iter().enumerate() {
        let Some(d) = d else { return Ok(false) };
        got.entry(tt.origin[out.vertices[i].0]).or_default().push(d);
    }
    for m in want.values_mut().chain(got.values_mut()) {
        m.sort();
    }
    Ok(got == want)
}

/// Canonical-form comparison of two instantiations, weights included.
pub fn oracle_same_instantiation(a: &Pgt, b: &Pgt) -> Result<bool> {
    let fa = canonical_form(&LabeledGraph::from_instantiation(&instantiate(a)?, true));
    let fb = canonical_form(&LabeledGraph::from_instantiation(&instantiate(b)?, true));
    Ok(fa == fb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instantiate::{instantiate, InstEdge};
    use crate::model::{RawPgt, ROOT};

    fn plain(n: usize, directed: bool, edges: &[(usize, usize)]) -> Instantiation {
        let vs = (0..n).map(|v| (v, crate::instantiate::Address::root())).collect();
        let es = edges.iter().map(|&(a, b)| InstEdge { a, b, weight: Weight::one() }).collect();
        Instantiation::new(directed, vs, es)
    }

    #[test]
    fn flows_and_cuts() {
        let g = plain(5, true, &[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)]);
        assert_eq!(oracle_flow(&g, &[0], &[4]).unwrap(), Weight::int(3));
        let star = plain(6, false, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        assert_eq!(oracle_mincut(&star).unwrap(), Weight::one());
        assert_eq!(oracle_components(&plain(4, false, &[(0, 1)])), 3);
        assert_eq!(oracle_mincut(&plain(3, false, &[(0, 1)])).unwrap(), Weight::zero());
    }

    #[test]
    fn trees_and_paths() {
        let mut r = RawPgt::new(true);
        let c = r.add_template("C", ROOT, 2);
        r.add_vertex("s", ROOT);
        r.add_vertex("t", ROOT);
        r.add_vertex("v", c);
        r.add_edge("s", "v", Weight::one());
        r.add_edge("v", "t", Weight::one());
        let g = r.build().unwrap();
        let inst = instantiate(&g).unwrap();
        assert!(oracle_tree_occurs(&inst, &TreePattern::star(2), 0));
        assert!(!oracle_tree_occurs(&inst, &TreePattern::star(3), 0));
        assert!(oracle_tree_occurs(&inst, &TreePattern::single(), 2));
        let (s, t) = (inst.instances_of(0)[0], inst.instances_of(1)[0]);
        assert!(oracle_disjoint_paths(&inst, s, t, 2, 2, PathMode::Exactly));
        assert!(!oracle_disjoint_paths(&inst, s, t, 3, 2, PathMode::AtMost));
        assert!(!oracle_disjoint_paths(&inst, s, t, 1, 1, PathMode::AtMost));
        let direct = plain(2, true, &[(0, 1), (0, 1)]);
        assert!(oracle_disjoint_paths(&direct, 0, 1, 2, 1, PathMode::Exactly));
        assert!(oracle_disjoint_paths(&direct, 0, 1, 2, 3, PathMode::AtMost));
        assert!(!oracle_disjoint_paths(&direct, 0, 1, 1, 3, PathMode::Exactly));
    }

    #[test]
    fn distances() {
        let g = plain(4, true, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(oracle_bfs(&g, 0), vec![Some(0), Some(1), Some(1), None]);
        assert_eq!(oracle_sssp(&g, 0)[2], Some(Rat::from_integer(1)));
    }
}
