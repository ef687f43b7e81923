//! Sibling-edge algorithms: jump graphs, reachable instances, BFS and
//! shortest-path templates, retemplating and connected components.

use crate::error::{pre, PgtError, Result};
use crate::instantiate::Address;
use crate::model::{topo_order, Edge, Pgt, RawPgt, SiblingEdge, Template, TemplateId, VertexId, ROOT};
use crate::transforms::{UnionFind, Work};
use crate::weight::{Rat, Weight};
use num_integer::Integer;
use num_traits::Zero;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet, VecDeque};

/// Instance offsets modulo the template parameter.
pub type ResidueSet = BTreeSet<u64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct JumpArc {
    pub tail: VertexId,
    pub head: VertexId,
    /// Instance shift modulo the parameter.
    pub weight: u64,
}

/// The template graph of one template with every arc labelled by the shift it
/// applies to the instance index of that template.
#[derive(Clone, Debug)]
pub struct JumpGraph {
    pub template: TemplateId,
    pub modulus: u64,
    pub vertices: Vec<VertexId>,
    pub arcs: Vec<JumpArc>,
    /// Number of sibling edges of the template.
    pub sibling_count: usize,
    /// Sum of |Δ| over those edges.
    pub delta_sum: u64,
}

#[derive(Clone, Debug)]
pub struct ShrunkJumpGraph {
    pub modulus: u64,
    pub query: VertexId,
    pub vertices: Vec<VertexId>,
    /// Nonzero arcs plus one zero arc per zero-weight path.
    pub arcs: Vec<JumpArc>,
}

pub fn build_jump_graph(g: &Pgt, t: TemplateId) -> Result<JumpGraph> {
    if t >= g.templates().len() {
        return Err(PgtError::UnknownTemplate(t.to_string()));
    }
    let p = g.param(t);
    let vertices = g.vertex_set(t);
    let inside: HashSet<VertexId> = vertices.iter().copied().collect();
    let mut arcs = Vec::new();
    let mut push = |a: VertexId, b: VertexId, w: i64| {
        let w = w.rem_euclid(p as i64) as u64;
        arcs.push(JumpArc { tail: a, head: b, weight: w });
        if !g.directed() {
            arcs.push(JumpArc { tail: b, head: a, weight: (p - w) % p });
        }
    };
    for e in g.edges() {
        if inside.contains(&e.tail) && inside.contains(&e.head) {
            push(e.tail, e.head, 0);
        }
    }
    let (mut sibling_count, mut delta_sum) = (0, 0);
    for e in g.sibling_edges() {
        if inside.contains(&e.tail) {
            let own = g.template_of(e.tail) == t;
            if own {
                sibling_count += 1;
                delta_sum += e.delta.unsigned_abs();
            }
            push(e.tail, e.head, if own { e.delta } else { 0 });
        }
    }
    Ok(JumpGraph { template: t, modulus: p, vertices, arcs, sibling_count, delta_sum })
}

impl JumpGraph {
    fn zero_adjacency(&self) -> HashMap<VertexId, Vec<VertexId>> {
        let mut adj: HashMap<VertexId, Vec<VertexId>> = HashMap::new();
        for a in &self.arcs {
            if a.weight == 0 {
                adj.entry(a.tail).or_default().push(a.head);
            }
        }
        adj
    }
}

/// Vertices reachable from `s` over zero arcs, `s` included.
fn zero_reach(adj: &HashMap<VertexId, Vec<VertexId>>, s: VertexId) -> Vec<VertexId> {
    let mut seen = HashSet::from([s]);
    let mut out = vec![s];
    let mut i = 0;
    while i < out.len() {
        for &w in adj.get(&out[i]).map_or(&[][..], |v| v) {
            if seen.insert(w) {
                out.push(w);
            }
        }
        i += 1;
    }
    out
}

pub fn shrink(jg: &JumpGraph, query: VertexId) -> Result<ShrunkJumpGraph> {
    if !jg.vertices.contains(&query) {
        return pre("query vertex is not in the template");
    }
    let mut keep: BTreeSet<VertexId> = BTreeSet::from([query]);
    let mut arcs = Vec::new();
    for a in &jg.arcs {
        if a.weight != 0 {
            keep.insert(a.tail);
            keep.insert(a.head);
            arcs.push(*a);
        }
    }
    let zadj = jg.zero_adjacency();
    for &u in &keep {
        // paths of length at least one
        let mut seen = HashSet::new();
        let mut q: VecDeque<VertexId> = zadj.get(&u).cloned().unwrap_or_default().into();
        while let Some(w) = q.pop_front() {
            if !seen.insert(w) {
                continue;
            }
            if w != u && keep.contains(&w) {
                arcs.push(JumpArc { tail: u, head: w, weight: 0 });
            }
            q.extend(zadj.get(&w).map_or(&[][..], |v| v).iter().copied());
        }
    }
    arcs.sort();
    arcs.dedup();
    Ok(ShrunkJumpGraph { modulus: jg.modulus, query, vertices: keep.into_iter().collect(), arcs })
}

impl ShrunkJumpGraph {
    /// Residues reachable at each shrunk vertex. With `dag_only` the DP runs in
    /// topological order and fails on a cycle; otherwise a worklist fixpoint.
    fn propagate(&self, dag_only: bool) -> Result<BTreeMap<VertexId, ResidueSet>> {
        let idx: HashMap<VertexId, usize> = self.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = self.vertices.len();
        let mut adj: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
        for a in &self.arcs {
            adj[idx[&a.tail]].push((idx[&a.head], a.weight));
        }
        let q = idx[&self.query];
        let p = self.modulus;
        let mut sets: Vec<ResidueSet> = vec![ResidueSet::new(); n];
        sets[q].insert(0);
        if dag_only {
            let mut live = vec![false; n];
            live[q] = true;
            let mut stack = vec![q];
            while let Some(v) = stack.pop() {
                for &(w, _) in &adj[v] {
                    if !live[w] {
                        live[w] = true;
                        stack.push(w);
                    }
                }
            }
            let sub: Vec<Vec<usize>> =
                (0..n).map(|v| if live[v] { adj[v].iter().map(|x| x.0).collect() } else { Vec::new() }).collect();
            let Some(order) = topo_order(&sub) else {
                return pre("the shrunk jump graph has a cycle; use the fixpoint or component machinery");
            };
            for v in order {
                if !live[v] {
                    continue;
                }
                let cur: Vec<u64> = sets[v].iter().copied().collect();
                for &(w, d) in &adj[v] {
                    for &r in &cur {
                        sets[w].insert((r + d) % p);
                    }
                }
            }
        } else {
            let mut work: VecDeque<(usize, u64)> = VecDeque::from([(q, 0)]);
            while let Some((v, r)) = work.pop_front() {
                for &(w, d) in &adj[v] {
                    let x = (r + d) % p;
                    if sets[w].insert(x) {
                        work.push_back((w, x));
                    }
                }
            }
        }
        Ok(self.vertices.iter().zip(sets).filter(|(_, s)| !s.is_empty()).map(|(&v, s)| (v, s)).collect())
    }
}

fn residues(g: &Pgt, t: TemplateId, v: VertexId, dag_only: bool) -> Result<BTreeMap<VertexId, ResidueSet>> {
    if !g.contains(t, v) {
        return pre(format!("`{}` is not in template `{}`", g.name(v), g.templates()[t].name));
    }
    let jg = build_jump_graph(g, t)?;
    let sh = shrink(&jg, v)?;
    let at = sh.propagate(dag_only)?;
    let zadj = jg.zero_adjacency();
    let mut out: BTreeMap<VertexId, ResidueSet> = BTreeMap::new();
    for (y, set) in at {
        for x in zero_reach(&zadj, y) {
            out.entry(x).or_default().extend(set.iter().copied());
        }
    }
    Ok(out)
}

/// Offsets `i` such that instance `i` of `T` (relative to the instance of
/// `T` holding the query) contains a reachable copy of the vertex.
pub fn reachable_instances(g: &Pgt, t: TemplateId, v: VertexId) -> Result<BTreeMap<VertexId, ResidueSet>> {
    residues(g, t, v, true)
}

/// The part of the instantiation reachable from instance zero of the query,
/// with the reachable instances of the query's templates made explicit.
#[derive(Clone, Debug)]
pub struct SibUpi {
    pub pgt: Pgt,
    pub origin: Vec<VertexId>,
    /// Address components in the original model that precede the address of
    /// each new vertex.
    pub prefix: Vec<Vec<u64>>,
    pub query: VertexId,
}

impl SibUpi {
    pub fn original(&self, v: VertexId, a: &Address) -> (VertexId, Address) {
        let mut full = self.prefix[v].clone();
        full.extend_from_slice(&a.0);
        (self.origin[v], Address(full))
    }
}

pub fn upwards_partial_instantiation_sib(g: &Pgt, v: VertexId) -> Result<SibUpi> {
    if !g.directed() || !g.is_template_acyclic() {
        return pre("needs a directed, template-acyclic model");
    }
    if v >= g.n() {
        return Err(PgtError::UnknownVertex(v.to_string()));
    }
    let chain = g.chain(v);
    let k = chain.len();
    let mut levels: Vec<BTreeMap<VertexId, ResidueSet>> = Vec::with_capacity(k + 1);
    levels.push(residues(g, ROOT, v, false)?);
    for &t in &chain {
        levels.push(residues(g, t, v, false)?);
    }
    let level_of = |w: VertexId| chain.iter().take_while(|&&t| g.contains(t, w)).count();
    let on_chain = |t: TemplateId| t == ROOT || chain.contains(&t);

    let mut raw = RawPgt { directed: true, ..Default::default() };
    raw.templates.push(Template { name: g.templates()[ROOT].name.clone(), parent: None, param: 1 });
    let mut tnames: HashSet<String> = HashSet::from([raw.templates[0].name.clone()]);
    let mut vnames: HashSet<String> = HashSet::new();
    let mut tcopy: HashMap<(TemplateId, u64), TemplateId> = HashMap::new();
    let fresh = |taken: &mut HashSet<String>, base: String| {
        let mut name = base.clone();
        let mut k = 1;
        while taken.contains(&name) {
            name = format!("{base}'{k}");
            k += 1;
        }
        taken.insert(name.clone());
        name
    };
    #[allow(clippy::too_many_arguments)]
    fn copy_of(
        g: &Pgt,
        d: TemplateId,
        r: u64,
        lvl: usize,
        on_chain: &dyn Fn(TemplateId) -> bool,
        raw: &mut RawPgt,
        tcopy: &mut HashMap<(TemplateId, u64), TemplateId>,
        name: &mut dyn FnMut(String) -> String,
    ) -> TemplateId {
        if on_chain(d) {
            return ROOT;
        }
        if let Some(&t) = tcopy.get(&(d, r)) {
            return t;
        }
        let parent = copy_of(g, g.tree().parent[d].unwrap(), r, lvl, on_chain, raw, tcopy, name);
        let base = &g.templates()[d].name;
        let n = name(if lvl == 0 { base.clone() } else { format!("{base}#{r}") });
        raw.templates.push(Template { name: n, parent: Some(parent), param: g.param(d) });
        let id = raw.templates.len() - 1;
        tcopy.insert((d, r), id);
        id
    }

    let mut copies: Vec<BTreeMap<u64, VertexId>> = vec![BTreeMap::new(); g.n()];
    let mut origin = Vec::new();
    let mut prefix = Vec::new();
    for w in 0..g.n() {
        let lvl = level_of(w);
        let Some(set) = levels[lvl].get(&w) else { continue };
        for &r in set {
            let t =
                copy_of(g, g.template_of(w), r, lvl, &on_chain, &mut raw, &mut tcopy, &mut |b| fresh(&mut tnames, b));
            let base = if lvl == 0 { g.name(w).to_string() } else { format!("{}#{r}", g.name(w)) };
            raw.names.push(fresh(&mut vnames, base));
            raw.memberships.push(vec![t]);
            copies[w].insert(r, raw.names.len() - 1);
            origin.push(w);
            prefix.push(if lvl == 0 {
                Vec::new()
            } else {
                let mut p = vec![0; lvl - 1];
                p.push(r);
                p
            });
        }
    }
    let depth = |w: VertexId| g.tree().depth[g.template_of(w)];
    for e in g.edges() {
        let deep_is_tail = depth(e.tail) >= depth(e.head);
        let (x, y) = if deep_is_tail { (e.tail, e.head) } else { (e.head, e.tail) };
        let same = level_of(x) == level_of(y);
        for (&r, &cx) in &copies[x] {
            let Some(&cy) = copies[y].get(&if same { r } else { 0 }) else { continue };
            let (a, b) = if deep_is_tail { (cx, cy) } else { (cy, cx) };
            raw.edges.push(Edge { tail: a, head: b, weight: e.weight });
        }
    }
    for e in g.sibling_edges() {
        let t = g.template_of(e.tail);
        let p = g.param(t) as i64;
        for (&r, &ca) in &copies[e.tail] {
            if t != ROOT && chain.contains(&t) {
                let rb = (r as i64 + e.delta).rem_euclid(p) as u64;
                let Some(&cb) = copies[e.head].get(&rb) else { continue };
                if ca == cb {
                    raw.sibling_edges.push(SiblingEdge { tail: ca, head: cb, weight: e.weight, delta: 0 });
                } else {
                    raw.edges.push(Edge { tail: ca, head: cb, weight: e.weight });
                }
            } else if let Some(&cb) = copies[e.head].get(&r) {
                raw.sibling_edges.push(SiblingEdge { tail: ca, head: cb, ..e.clone() });
            }
        }
    }
    let query = copies[v][&0];
    Ok(SibUpi { pgt: Pgt::from_raw(raw)?, origin, prefix, query })
}

/// A tree-shaped template together with the original vertex of each vertex.
#[derive(Clone, Debug)]
pub struct TreeTemplate {
    pub pgt: Pgt,
    pub origin: Vec<VertexId>,
    pub root: VertexId,
}

pub fn bfs_template(g: &Pgt, s: VertexId) -> Result<TreeTemplate> {
    tree_template(g, s, false)
}

pub fn sssp_template(g: &Pgt, s: VertexId) -> Result<TreeTemplate> {
    tree_template(g, s, true)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ArcRef {
    Edge(usize),
    Sib(usize),
}

fn tree_template(g: &Pgt, s: VertexId, weighted: bool) -> Result<TreeTemplate> {
    if !g.is_strongly_template_acyclic() {
        return pre("needs a strongly template-acyclic model");
    }
    if weighted
        && g.edges().iter().map(|e| e.weight).chain(g.sibling_edges().iter().map(|e| e.weight)).any(|w| w.is_infinite())
    {
        return pre("shortest paths need finite weights");
    }
    let up = upwards_partial_instantiation_sib(g, s)?;
    let mut w = Work::new(&up.pgt);
    let q = up.query;
    loop {
        let n = w.names.len();
        let mut out: Vec<Vec<(VertexId, Rat, ArcRef)>> = vec![Vec::new(); n];
        let cost = |x: Weight| if weighted { x.finite().unwrap() } else { Rat::from_integer(1) };
        for (i, e) in w.edges.iter().enumerate() {
            out[e.tail].push((e.head, cost(e.weight), ArcRef::Edge(i)));
        }
        for (i, e) in w.sedges.iter().enumerate() {
            out[e.tail].push((e.head, cost(e.weight), ArcRef::Sib(i)));
        }
        let mut dist: Vec<Option<Rat>> = vec![None; n];
        dist[q] = Some(Rat::zero());
        let mut heap = BinaryHeap::from([Reverse((Rat::zero(), q))]);
        while let Some(Reverse((d, x))) = heap.pop() {
            if dist[x].is_some_and(|c| c < d) {
                continue;
            }
            for &(y, c, _) in &out[x] {
                let nd = d + c;
                if dist[y].is_none_or(|c| nd < c) {
                    dist[y] = Some(nd);
                    heap.push(Reverse((nd, y)));
                }
            }
        }
        // an upward arc out of a template with P > 1 hands its head P parents
        let bad = |w: &Work, x: VertexId, y: VertexId| {
            let (tx, ty) = (w.belongs[x], w.belongs[y]);
            tx != ty && w.templates[tx].parent == Some(ty) && w.templates[tx].param > 1
        };
        let mut inc: Vec<Vec<(VertexId, ArcRef)>> = vec![Vec::new(); n];
        for x in 0..n {
            let Some(dx) = dist[x] else { continue };
            for &(y, c, a) in &out[x] {
                if y != q && dist[y] == Some(dx + c) {
                    inc[y].push((x, a));
                }
            }
        }
        let mut parent: Vec<Option<ArcRef>> = vec![None; n];
        let mut fix = None;
        for y in 0..n {
            if inc[y].is_empty() {
                continue;
            }
            match inc[y].iter().find(|&&(x, _)| !bad(&w, x, y)) {
                Some(&(_, a)) => parent[y] = Some(a),
                None => {
                    fix = Some(w.belongs[inc[y][0].0]);
                    break;
                }
            }
        }
        if let Some(t) = fix {
            if w.sedges.iter().any(|e| w.belongs[e.tail] == t) {
                w.expand(t);
            } else {
                w.split(t);
            }
            continue;
        }
        let mut edges = Vec::new();
        let mut sedges = Vec::new();
        for p in parent.iter().flatten() {
            match *p {
                ArcRef::Edge(i) => edges.push(w.edges[i].clone()),
                ArcRef::Sib(i) => sedges.push(w.sedges[i].clone()),
            }
        }
        w.edges = edges;
        w.sedges = sedges;
        let keep: Vec<bool> = dist.iter().map(|d| d.is_some()).collect();
        let root = keep[..q].iter().filter(|&&k| k).count();
        w.retain_vertices(&keep);
        let d = w.finish()?;
        let origin = d.origin.iter().map(|o| up.origin[o.unwrap()]).collect();
        return Ok(TreeTemplate { pgt: d.pgt, origin, root });
    }
}

pub fn congruence_feasible(a: &[i64], p: u64, b: i64) -> Result<bool> {
    if p == 0 {
        return pre("modulus must be positive");
    }
    let g = a.iter().fold(p as i128, |g, &x| g.gcd(&(x as i128)));
    Ok((b as i128).rem_euclid(g) == 0)
}

#[derive(Clone, Debug)]
pub struct Retemplated {
    pub pgt: Pgt,
    /// Instance shift of every vertex: instance `i` of `v` in the input is
    /// instance `i + alpha[v]` in the output.
    pub alpha: Vec<u64>,
}

impl Retemplated {
    pub fn map_instance(&self, g: &Pgt, v: VertexId, a: &Address) -> Address {
        let mut b = a.clone();
        if let Some(last) = b.0.last_mut() {
            *last = (*last + self.alpha[v]) % g.param(g.template_of(v));
        }
        b
    }
}

/// Spanning tree of a jump graph given as (tail, head, delta) edges over
/// `0..n`, rooted at 0, returning the shifts and which edges are tree edges.
fn alpha_tree(n: usize, edges: &[(usize, usize, i64)], p: u64) -> (Vec<Option<u64>>, Vec<bool>) {
    let p = p as i64;
    let mut adj: Vec<Vec<(usize, i64, usize)>> = vec![Vec::new(); n];
    for (i, &(a, b, d)) in edges.iter().enumerate() {
        adj[a].push((b, d, i));
        adj[b].push((a, -d, i));
    }
    let mut alpha: Vec<Option<u64>> = vec![None; n];
    let mut tree = vec![false; edges.len()];
    if n == 0 {
        return (alpha, tree);
    }
    alpha[0] = Some(0);
    let mut q = VecDeque::from([0]);
    while let Some(x) = q.pop_front() {
        for &(y, d, i) in &adj[x] {
            if alpha[y].is_none() {
                alpha[y] = Some((alpha[x].unwrap() as i64 - d).rem_euclid(p) as u64);
                tree[i] = true;
                q.push_back(y);
            }
        }
    }
    (alpha, tree)
}

pub fn retemplate(g: &Pgt, t: TemplateId) -> Result<Retemplated> {
    if g.directed() {
        return pre("retemplating needs an undirected model");
    }
    if t >= g.templates().len() {
        return Err(PgtError::UnknownTemplate(t.to_string()));
    }
    if !g.tree().children[t].is_empty() {
        return pre("retemplating applies to templates without child templates");
    }
    let p = g.param(t);
    let members = g.members(t);
    let local: HashMap<VertexId, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let inner_edges: Vec<usize> = (0..g.edges().len())
        .filter(|&i| local.contains_key(&g.edges()[i].tail) && local.contains_key(&g.edges()[i].head))
        .collect();
    let mut jumps: Vec<(usize, usize, i64)> =
        inner_edges.iter().map(|&i| (local[&g.edges()[i].tail], local[&g.edges()[i].head], 0)).collect();
    let sibs: Vec<usize> =
        (0..g.sibling_edges().len()).filter(|&i| local.contains_key(&g.sibling_edges()[i].tail)).collect();
    jumps.extend(sibs.iter().map(|&i| {
        let e = &g.sibling_edges()[i];
        (local[&e.tail], local[&e.head], e.delta)
    }));
    let (alpha_local, tree) = alpha_tree(members.len(), &jumps, p);
    if alpha_local.iter().any(|a| a.is_none()) {
        return pre("the template graph is disconnected");
    }
    let mut alpha = vec![0; g.n()];
    for (i, &v) in members.iter().enumerate() {
        alpha[v] = alpha_local[i].unwrap();
    }
    let shifted = |a: VertexId, b: VertexId, d: i64| (d + alpha[b] as i64 - alpha[a] as i64).rem_euclid(p as i64);
    let mut raw = g.to_raw();
    raw.edges.clear();
    raw.sibling_edges.clear();
    let mut to_sib = Vec::new();
    let mut to_edge = Vec::new();
    let mut tree = tree.into_iter();
    for e in g.edges() {
        if !(local.contains_key(&e.tail) && local.contains_key(&e.head)) {
            raw.edges.push(e.clone());
            continue;
        }
        let nd = shifted(e.tail, e.head, 0);
        if tree.next().unwrap() || nd == 0 {
            raw.edges.push(e.clone());
        } else {
            to_sib.push(SiblingEdge { tail: e.tail, head: e.head, weight: e.weight, delta: nd });
        }
    }
    for e in g.sibling_edges() {
        if !local.contains_key(&e.tail) {
            raw.sibling_edges.push(e.clone());
            continue;
        }
        let nd = shifted(e.tail, e.head, e.delta);
        if tree.next().unwrap() || (nd == 0 && e.tail != e.head) {
            to_edge.push(Edge { tail: e.tail, head: e.head, weight: e.weight });
        } else {
            raw.sibling_edges.push(SiblingEdge { delta: nd, ..e.clone() });
        }
    }
    raw.edges.extend(to_edge);
    raw.sibling_edges.extend(to_sib);
    Ok(Retemplated { pgt: Pgt::from_raw(raw)?, alpha })
}

/// Number of connected components of the instantiation of an undirected model.
pub fn connected_components(g: &Pgt) -> Result<u128> {
    if g.directed() {
        return pre("component counting needs an undirected model");
    }
    let n = g.n();
    let mut uf = UnionFind::new(n);
    let mut level: Vec<TemplateId> = g.belongs().to_vec();
    let mut dead = vec![false; n];
    let mut total: u128 = 0;
    // (tail, head, shift of the edge's own template)
    let mut all: Vec<(VertexId, VertexId, TemplateId, i64)> =
        g.edges().iter().map(|e| (e.tail, e.head, usize::MAX, 0)).collect();
    all.extend(g.sibling_edges().iter().map(|e| (e.tail, e.head, g.template_of(e.tail), e.delta)));
    for t in g.tree().post_order() {
        let reps: Vec<usize> = (0..n).filter(|&v| uf.find(v) == v && !dead[v] && level[v] == t).collect();
        if reps.is_empty() {
            continue;
        }
        let local: HashMap<usize, usize> = reps.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let parent = g.tree().parent[t];
        let mut inner: Vec<(usize, usize, i64)> = Vec::new();
        let mut touch: Vec<(usize, usize)> = Vec::new();
        for &(a, b, owner, d) in &all {
            let (ra, rb) = (uf.find(a), uf.find(b));
            if dead[ra] || dead[rb] {
                continue;
            }
            let d = if owner == t { d } else { 0 };
            match (local.get(&ra), local.get(&rb)) {
                (Some(&x), Some(&y)) => inner.push((x, y, d)),
                (Some(&x), None) if Some(level[rb]) == parent => touch.push((x, rb)),
                (None, Some(&y)) if Some(level[ra]) == parent => touch.push((y, ra)),
                _ => {}
            }
        }
        let mut pieces = UnionFind::new(reps.len());
        for &(x, y, _) in &inner {
            pieces.union(x, y);
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..reps.len() {
            groups.entry(pieces.find(i)).or_default().push(i);
        }
        for (head, members) in groups {
            let outside: Vec<usize> = touch.iter().filter(|&&(x, _)| pieces.find(x) == head).map(|&(_, r)| r).collect();
            if let (Some(par), Some(&b)) = (parent, outside.first()) {
                for &i in &members {
                    uf.union(reps[i], b);
                }
                for &o in &outside {
                    uf.union(o, b);
                }
                let r = uf.find(b);
                level[r] = par;
                continue;
            }
            let count = if t == ROOT {
                1
            } else {
                let pos: HashMap<usize, usize> = members.iter().enumerate().map(|(k, &i)| (i, k)).collect();
                let sub: Vec<(usize, usize, i64)> = inner
                    .iter()
                    .filter(|&&(x, _, _)| pos.contains_key(&x))
                    .map(|&(x, y, d)| (pos[&x], pos[&y], d))
                    .collect();
                let p = g.param(t);
                let (alpha, _) = alpha_tree(members.len(), &sub, p);
                let alpha: Vec<i64> = alpha.into_iter().map(|a| a.unwrap() as i64).collect();
                let mut gg = p as i64;
                for &(x, y, d) in &sub {
                    gg = gg.gcd(&(d + alpha[y] - alpha[x]).rem_euclid(p as i64));
                }
                (gg as u128).saturating_mul(g.multiplicity(parent.unwrap()))
            };
            total = total.saturating_add(count);
            for &i in &members {
                dead[reps[i]] = true;
            }
        }
    }
    Ok(total)
}
