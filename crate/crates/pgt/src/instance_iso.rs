//! Instance isomorphism: does a target graph equal the instantiation of a
//! model? Dynamic programming over a nice tree decomposition of the target
//! whose states are partial matches on the tree of instances, stored up to
//! renaming of sibling instances.

use crate::canon::graph_isomorphic;
use crate::error::{pre, PgtError, Result};
use crate::graph::Graph;
use crate::instantiate::instantiate;
use crate::model::{Pgt, TemplateId, VertexId, ROOT};
use crate::treedec::{tree_decomposition, validate_decomposition, TreeDecomposition};
use std::collections::{HashMap, HashSet};

/// Default cap on partial matches kept at one decomposition node.
pub const DEFAULT_STATE_CAP: usize = 200_000;

/// Label of a template-vertex copy inside an instance.
const FREE: u16 = 0;
/// Matched to a target vertex that has left the bag.
const DONE: u16 = 1;
/// Matched to target vertex `x` still in the bag: `BAG + x`.
const BAG: u16 = 2;

/// One instance in a partial match: labels of its own vertices and the
/// touched instances of its child templates. Sibling instances that were
/// never touched are left out; children are kept sorted so that equal
/// matches up to sibling renaming compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceNode {
    pub template: TemplateId,
    pub labels: Vec<u16>,
    pub children: Vec<InstanceNode>,
}

impl InstanceNode {
    fn fresh(m: &Model, t: TemplateId) -> Self {
        InstanceNode { template: t, labels: vec![FREE; m.own[t].len()], children: Vec::new() }
    }

    fn canonicalize(&mut self) {
        for c in &mut self.children {
            c.canonicalize();
        }
        self.children.retain(|c| !c.untouched());
        self.children.sort();
    }

    fn untouched(&self) -> bool {
        self.labels.iter().all(|&l| l == FREE) && self.children.iter().all(|c| c.untouched())
    }

    fn anchored(&self) -> bool {
        self.labels.iter().any(|&l| l >= BAG) || self.children.iter().any(|c| c.anchored())
    }

    fn at(&self, path: &[usize]) -> &InstanceNode {
        path.iter().fold(self, |n, &i| &n.children[i])
    }

    fn at_mut(&mut self, path: &[usize]) -> &mut InstanceNode {
        path.iter().fold(self, |n, &i| &mut n.children[i])
    }

    /// (target vertex, path, own index) for every bag label.
    fn bag_positions(&self, path: &mut Vec<usize>, out: &mut Vec<(usize, Vec<usize>, usize)>) {
        for (i, &l) in self.labels.iter().enumerate() {
            if l >= BAG {
                out.push(((l - BAG) as usize, path.clone(), i));
            }
        }
        for (c, child) in self.children.iter().enumerate() {
            path.push(c);
            child.bag_positions(path, out);
            path.pop();
        }
    }
}

/// A partial match at a decomposition node: bag vertices are mapped to
/// labelled copies, forgotten vertices to `DONE` copies.
pub type PartialMatch = InstanceNode;

struct Model<'a> {
    g: &'a Pgt,
    /// Vertices owned by each template, in order.
    own: Vec<Vec<VertexId>>,
    index: Vec<usize>,
    /// Undirected template adjacency with multiplicities.
    adj: Vec<HashMap<VertexId, usize>>,
}

impl<'a> Model<'a> {
    fn new(g: &'a Pgt) -> Self {
        let nt = g.templates().len();
        let mut own = vec![Vec::new(); nt];
        let mut index = vec![0; g.n()];
        for v in 0..g.n() {
            index[v] = own[g.template_of(v)].len();
            own[g.template_of(v)].push(v);
        }
        let mut adj = vec![HashMap::new(); g.n()];
        for e in g.edges() {
            *adj[e.tail].entry(e.head).or_insert(0) += 1;
            if e.tail != e.head {
                *adj[e.head].entry(e.tail).or_insert(0) += 1;
            }
        }
        Model { g, own, index, adj }
    }

    /// Edges between copies of `a` at `pa` and `b` at `pb`.
    fn mult(&self, a: VertexId, pa: &[usize], b: VertexId, pb: &[usize]) -> usize {
        let Some(&m) = self.adj[a].get(&b) else { return 0 };
        if a == b {
            return if pa == pb { m } else { 0 };
        }
        let related =
            pb.starts_with(pa) && pa.len() == self.depth(a) || pa.starts_with(pb) && pb.len() == self.depth(b);
        if related {
            m
        } else {
            0
        }
    }

    fn depth(&self, v: VertexId) -> usize {
        self.g.tree().depth[self.g.template_of(v)]
    }

    /// Whether every copy of `w` reachable from `node` (an instance of
    /// `t`, an ancestor of `w`'s template) is already matched.
    fn all_matched_below(&self, node: &InstanceNode, w: VertexId) -> bool {
        let tw = self.g.template_of(w);
        if node.template == tw {
            return node.labels[self.index[w]] != FREE;
        }
        let chain = self.g.tree().chain(tw);
        let next = match chain.iter().position(|&t| t == node.template) {
            Some(i) => chain[i + 1],
            None => chain[0],
        };
        let kids: Vec<&InstanceNode> = node.children.iter().filter(|c| c.template == next).collect();
        kids.len() as u64 == self.g.param(next) && kids.iter().all(|c| self.all_matched_below(c, w))
    }
}

/// Nice decomposition node over target vertices.
#[derive(Clone, Debug)]
enum Nice {
    Leaf,
    Introduce(usize, usize),
    Forget(usize, usize),
    Join(usize, usize),
}

fn nice(dec: &TreeDecomposition) -> Vec<Nice> {
    let mut out = Vec::new();
    fn build(dec: &TreeDecomposition, a: usize, out: &mut Vec<Nice>) -> usize {
        let bag = &dec.bags[a];
        let adapt = |out: &mut Vec<Nice>, mut id: usize, from: &[usize]| {
            for &x in from.iter().filter(|x| !bag.contains(x)) {
                out.push(Nice::Forget(x, id));
                id = out.len() - 1;
            }
            for &x in bag.iter().filter(|x| !from.contains(x)) {
                out.push(Nice::Introduce(x, id));
                id = out.len() - 1;
            }
            id
        };
        let mut ids = Vec::new();
        for &c in &dec.children[a] {
            let id = build(dec, c, out);
            ids.push(adapt(out, id, &dec.bags[c]));
        }
        if ids.is_empty() {
            out.push(Nice::Leaf);
            let leaf = out.len() - 1;
            ids.push(adapt(out, leaf, &[]));
        }
        let mut acc = ids[0];
        for &other in &ids[1..] {
            out.push(Nice::Join(acc, other));
            acc = out.len() - 1;
        }
        acc
    }
    let top = build(dec, dec.root, &mut out);
    let mut id = top;
    for &x in &dec.bags[dec.root] {
        out.push(Nice::Forget(x, id));
        id = out.len() - 1;
    }
    out
}

#[derive(Clone, Debug)]
pub struct IsoOptions {
    pub state_cap: usize,
    /// Reject early on vertex or edge count mismatch.
    pub precheck: bool,
}

impl Default for IsoOptions {
    fn default() -> Self {
        IsoOptions { state_cap: DEFAULT_STATE_CAP, precheck: true }
    }
}

#[derive(Clone, Debug, Default)]
pub struct IsoStats {
    /// Largest number of partial matches at any node.
    pub max_states: usize,
    pub nodes: usize,
}

fn instantiated_edges(g: &Pgt) -> u128 {
    g.edges().iter().map(|e| g.instance_count(e.tail).max(g.instance_count(e.head))).sum()
}

fn introduce(
    m: &Model,
    h: &HashMap<(usize, usize), usize>,
    s: &PartialMatch,
    x: usize,
    out: &mut HashSet<PartialMatch>,
) {
    for v in 0..m.g.n() {
        let chain = m.g.tree().chain(m.g.template_of(v));
        // choose, level by level, a touched instance or one fresh one
        let mut partial: Vec<(PartialMatch, Vec<usize>)> = vec![(s.clone(), Vec::new())];
        for &t in &chain {
            let mut next = Vec::new();
            for (st, path) in partial {
                let node = st.at(&path);
                let used = node.children.iter().filter(|c| c.template == t).count() as u64;
                for (i, c) in node.children.iter().enumerate() {
                    if c.template == t {
                        let mut p = path.clone();
                        p.push(i);
                        next.push((st.clone(), p));
                    }
                }
                if used < m.g.param(t) {
                    let mut st2 = st.clone();
                    let n2 = st2.at_mut(&path);
                    n2.children.push(InstanceNode::fresh(m, t));
                    let mut p = path.clone();
                    p.push(n2.children.len() - 1);
                    next.push((st2, p));
                }
            }
            partial = next;
        }
        for (mut st, path) in partial {
            if st.at(&path).labels[m.index[v]] != FREE {
                continue;
            }
            let mut bag = Vec::new();
            st.bag_positions(&mut Vec::new(), &mut bag);
            let self_loops = h.get(&(x, x)).copied().unwrap_or(0);
            if m.mult(v, &path, v, &path) != self_loops {
                continue;
            }
            let ok = bag.iter().all(|(y, py, iy)| {
                let w = m.own[st.at(py).template][*iy];
                let want = h.get(&(x.min(*y), x.max(*y))).copied().unwrap_or(0);
                m.mult(v, &path, w, py) == want
            });
            if !ok {
                continue;
            }
            st.at_mut(&path).labels[m.index[v]] = BAG + x as u16;
            st.canonicalize();
            out.insert(st);
        }
    }
}

fn forget(m: &Model, s: &PartialMatch, x: usize) -> Option<PartialMatch> {
    let mut bag = Vec::new();
    s.bag_positions(&mut Vec::new(), &mut bag);
    let (_, path, i) = bag.into_iter().find(|(y, _, _)| *y == x)?;
    let v = m.own[s.at(&path).template][i];
    let tv = m.g.template_of(v);
    for &w in m.adj[v].keys() {
        let tw = m.g.template_of(w);
        let ok = if m.g.tree().is_ancestor_or_self(tw, tv) {
            let d = m.g.tree().depth[tw];
            s.at(&path[..d]).labels[m.index[w]] != FREE
        } else {
            m.all_matched_below(s.at(&path), w)
        };
        if !ok {
            return None;
        }
    }
    let mut out = s.clone();
    out.at_mut(&path).labels[i] = DONE;
    out.canonicalize();
    Some(out)
}

/// All ways to overlay two partial matches of one instance.
fn merge(m: &Model, a: &InstanceNode, b: &InstanceNode) -> Vec<InstanceNode> {
    if a.template != b.template {
        return Vec::new();
    }
    let mut labels = Vec::with_capacity(a.labels.len());
    for (&x, &y) in a.labels.iter().zip(&b.labels) {
        let l = match (x, y) {
            (FREE, l) | (l, FREE) => l,
            (x, y) if x >= BAG && x == y => x,
            _ => return Vec::new(),
        };
        labels.push(l);
    }
    let (aa, ua): (Vec<&InstanceNode>, Vec<&InstanceNode>) = a.children.iter().partition(|c| c.anchored());
    let (ab, mut ub): (Vec<&InstanceNode>, Vec<&InstanceNode>) = b.children.iter().partition(|c| c.anchored());
    if aa.len() != ab.len() {
        return Vec::new();
    }
    // anchored children pair up through the bag vertices they hold
    let key = |c: &InstanceNode| {
        let mut v = Vec::new();
        c.bag_positions(&mut Vec::new(), &mut v);
        v.into_iter().map(|(x, _, _)| x).min()
    };
    let mut fixed: Vec<Vec<InstanceNode>> = Vec::new();
    for ca in &aa {
        let Some(cb) = ab.iter().find(|cb| key(cb) == key(ca)) else { return Vec::new() };
        let opts = merge(m, ca, cb);
        if opts.is_empty() {
            return Vec::new();
        }
        fixed.push(opts);
    }
    // free children: every partial matching between the two sides
    let mut free: Vec<Vec<Vec<InstanceNode>>> = Vec::new();
    fn pairings(
        m: &Model,
        i: usize,
        ua: &[&InstanceNode],
        ub: &mut Vec<&InstanceNode>,
        cur: &mut Vec<Vec<InstanceNode>>,
        out: &mut Vec<Vec<Vec<InstanceNode>>>,
    ) {
        if i == ua.len() {
            let mut all = cur.clone();
            all.extend(ub.iter().map(|c| vec![(*c).clone()]));
            out.push(all);
            return;
        }
        cur.push(vec![ua[i].clone()]);
        pairings(m, i + 1, ua, ub, cur, out);
        cur.pop();
        for j in 0..ub.len() {
            if j > 0 && ub[j] == ub[j - 1] {
                continue;
            }
            let opts = merge(m, ua[i], ub[j]);
            if opts.is_empty() {
                continue;
            }
            let taken = ub.remove(j);
            cur.push(opts);
            pairings(m, i + 1, ua, ub, cur, out);
            cur.pop();
            ub.insert(j, taken);
        }
    }
    ub.sort();
    pairings(m, 0, &ua, &mut ub, &mut Vec::new(), &mut free);
    let mut results = HashSet::new();
    for choice in free {
        let groups: Vec<&Vec<InstanceNode>> = fixed.iter().chain(choice.iter()).collect();
        let mut combos: Vec<Vec<InstanceNode>> = vec![Vec::new()];
        for g in groups {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    g.iter().map(move |o| {
                        let mut c2 = c.clone();
                        c2.push(o.clone());
                        c2
                    })
                })
                .collect();
        }
        for children in combos {
            let mut counts: HashMap<TemplateId, u64> = HashMap::new();
            for c in &children {
                *counts.entry(c.template).or_insert(0) += 1;
            }
            if counts.iter().any(|(&t, &k)| k > m.g.param(t)) {
                continue;
            }
            let mut node = InstanceNode { template: a.template, labels: labels.clone(), children };
            node.canonicalize();
            results.insert(node);
        }
    }
    results.into_iter().collect()
}

/// Decide whether `target` is isomorphic to the instantiation of `g`
/// without building the instantiation. Uses `dec` or computes one.
pub fn instance_iso_decide(g: &Pgt, target: &Graph, dec: Option<&TreeDecomposition>) -> Result<bool> {
    instance_iso_with(g, target, dec, &IsoOptions::default()).map(|r| r.0)
}

pub fn instance_iso_with(
    g: &Pgt,
    target: &Graph,
    dec: Option<&TreeDecomposition>,
    opts: &IsoOptions,
) -> Result<(bool, IsoStats)> {
    if g.has_sibling_edges() {
        return Err(PgtError::SiblingEdges("instance isomorphism"));
    }
    let mut stats = IsoStats::default();
    if opts.precheck && (g.total_instances() != target.n() as u128 || instantiated_edges(g) != target.m() as u128) {
        return Ok((false, stats));
    }
    if target.n() > u16::MAX as usize - BAG as usize {
        return pre("target too large");
    }
    let owned;
    let dec = match dec {
        Some(d) => {
            let r = validate_decomposition(target, d);
            if !r.is_ok() {
                return pre(format!("invalid decomposition: {}", r.violations.join("; ")));
            }
            d
        }
        None => {
            owned = tree_decomposition(target, None)?;
            &owned
        }
    };
    let m = Model::new(g);
    let mut h: HashMap<(usize, usize), usize> = HashMap::new();
    for &(a, b) in &target.edges {
        *h.entry((a.min(b), a.max(b))).or_insert(0) += 1;
    }
    let plan = nice(dec);
    let mut tables: Vec<Option<HashSet<PartialMatch>>> = vec![None; plan.len()];
    let mut users = vec![0usize; plan.len()];
    for node in &plan {
        match *node {
            Nice::Introduce(_, c) | Nice::Forget(_, c) => users[c] += 1,
            Nice::Join(a, b) => {
                users[a] += 1;
                users[b] += 1;
            }
            Nice::Leaf => {}
        }
    }
    for (id, node) in plan.iter().enumerate() {
        let mut take = |c: usize, tables: &mut Vec<Option<HashSet<PartialMatch>>>| {
            users[c] -= 1;
            if users[c] == 0 {
                tables[c].take().unwrap()
            } else {
                tables[c].clone().unwrap()
            }
        };
        let mut out = HashSet::new();
        match *node {
            Nice::Leaf => {
                out.insert(InstanceNode::fresh(&m, ROOT));
            }
            Nice::Introduce(x, c) => {
                for s in take(c, &mut tables) {
                    introduce(&m, &h, &s, x, &mut out);
                    if out.len() > opts.state_cap {
                        return Err(PgtError::StateBudget(out.len()));
                    }
                }
            }
            Nice::Forget(x, c) => {
                out.extend(take(c, &mut tables).iter().filter_map(|s| forget(&m, s, x)));
            }
            Nice::Join(a, b) => {
                let left = take(a, &mut tables);
                let right = take(b, &mut tables);
                for l in &left {
                    for r in &right {
                        out.extend(merge(&m, l, r));
                        if out.len() > opts.state_cap {
                            return Err(PgtError::StateBudget(out.len()));
                        }
                    }
                }
            }
        }
        stats.max_states = stats.max_states.max(out.len());
        stats.nodes += 1;
        tables[id] = Some(out);
    }
    let last = tables.pop().flatten().unwrap_or_default();
    // every target vertex is matched; with equal sizes the match is onto
    let total = g.total_instances() == target.n() as u128;
    Ok((total && !last.is_empty(), stats))
}

/// Instantiate, then compare by canonical form.
pub fn naive_instance_iso(g: &Pgt, target: &Graph) -> Result<bool> {
    if g.total_instances() != target.n() as u128 {
        return Ok(false);
    }
    let inst = instantiate(g)?;
    Ok(graph_isomorphic(&Graph::from_instantiation(&inst, g), target))
}
