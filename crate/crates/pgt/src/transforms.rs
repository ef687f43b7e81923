//! Model rewrites: edge reweighting, upwards partial instantiation, instance
//! merging, induced parametric subgraphs and a few structural helpers.

use crate::error::{PgtError, Result};
use crate::instantiate::Address;
use crate::model::{Edge, Pgt, RawPgt, SiblingEdge, Template, TemplateId, VertexId, ROOT};
use crate::weight::Weight;
use std::collections::{HashMap, HashSet, VecDeque};

/// A rewritten model with, for each vertex, the original vertex it copies.
#[derive(Clone, Debug)]
pub struct Derived {
    pub pgt: Pgt,
    pub origin: Vec<Option<VertexId>>,
}

/// Mutable working copy used by the rewrites.
#[derive(Clone, Debug)]
pub(crate) struct Work {
    pub directed: bool,
    pub templates: Vec<Template>,
    pub names: Vec<String>,
    pub belongs: Vec<TemplateId>,
    pub edges: Vec<Edge>,
    pub sedges: Vec<SiblingEdge>,
    pub origin: Vec<Option<VertexId>>,
    taken: HashSet<String>,
}

impl Work {
    pub fn new(g: &Pgt) -> Self {
        Work {
            directed: g.directed(),
            templates: g.templates().to_vec(),
            names: g.names().to_vec(),
            belongs: g.belongs().to_vec(),
            edges: g.edges().to_vec(),
            sedges: g.sibling_edges().to_vec(),
            origin: (0..g.n()).map(Some).collect(),
            taken: g.names().iter().cloned().collect(),
        }
    }

    pub fn fresh_name(&mut self, base: &str, sep: char) -> String {
        for k in 1.. {
            let cand = format!("{base}{sep}{k}");
            if !self.taken.contains(&cand) {
                self.taken.insert(cand.clone());
                return cand;
            }
        }
        unreachable!()
    }

    pub fn fresh_template_name(&self, base: &str) -> String {
        let names: HashSet<&str> = self.templates.iter().map(|t| t.name.as_str()).collect();
        (1..).map(|k| format!("{base}'{k}")).find(|c| !names.contains(c.as_str())).unwrap()
    }

    pub fn add_vertex(&mut self, name: String, t: TemplateId, origin: Option<VertexId>) -> VertexId {
        self.taken.insert(name.clone());
        self.names.push(name);
        self.belongs.push(t);
        self.origin.push(origin);
        self.names.len() - 1
    }

    pub fn parent(&self, t: TemplateId) -> Option<TemplateId> {
        self.templates[t].parent
    }

    pub fn depth(&self, mut t: TemplateId) -> usize {
        let mut d = 0;
        while let Some(p) = self.templates[t].parent {
            d += 1;
            t = p;
        }
        d
    }

    pub fn is_anc(&self, a: TemplateId, mut b: TemplateId) -> bool {
        loop {
            if a == b {
                return true;
            }
            match self.templates[b].parent {
                Some(p) => b = p,
                None => return false,
            }
        }
    }

    pub fn chain(&self, mut t: TemplateId) -> Vec<TemplateId> {
        let mut c = Vec::new();
        while let Some(p) = self.templates[t].parent {
            c.push(t);
            t = p;
        }
        c.reverse();
        c
    }

    /// Replace template `t` by a copy of its subtree with parameter `P - 1`
    /// next to a parameter-1 version. Returns old-to-new vertex copies.
    pub fn split(&mut self, t: TemplateId) -> HashMap<VertexId, VertexId> {
        let p = self.templates[t].param;
        let nt = self.templates.len();
        let mut tmap: HashMap<TemplateId, TemplateId> = HashMap::new();
        // templates are stored parents first, so one pass suffices
        for d in 0..nt {
            if !self.is_anc(t, d) {
                continue;
            }
            let parent = if d == t { self.templates[t].parent } else { Some(tmap[&self.templates[d].parent.unwrap()]) };
            let name = self.fresh_template_name(&self.templates[d].name.clone());
            let param = if d == t { p - 1 } else { self.templates[d].param };
            self.templates.push(Template { name, parent, param });
            tmap.insert(d, self.templates.len() - 1);
        }
        self.templates[t].param = 1;
        let mut vmap = HashMap::new();
        for v in 0..self.names.len() {
            if let Some(&nt) = tmap.get(&self.belongs[v]) {
                let name = self.fresh_name(&self.names[v].clone(), '\'');
                let o = self.origin[v];
                let c = self.add_vertex(name, nt, o);
                vmap.insert(v, c);
            }
        }
        let m = |v: VertexId| vmap.get(&v).copied().unwrap_or(v);
        let extra: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| vmap.contains_key(&e.tail) || vmap.contains_key(&e.head))
            .map(|e| Edge { tail: m(e.tail), head: m(e.head), weight: e.weight })
            .collect();
        self.edges.extend(extra);
        let extra: Vec<SiblingEdge> = self
            .sedges
            .iter()
            .filter(|e| vmap.contains_key(&e.tail))
            .map(|e| SiblingEdge { tail: m(e.tail), head: m(e.head), ..e.clone() })
            .collect();
        self.sedges.extend(extra);
        vmap
    }

    /// Remove parameter-1 templates, moving their content to the parent.
    pub fn collapse(&mut self, remove: &[bool]) {
        let keep_anc = |w: &Work, mut t: TemplateId| {
            while remove.get(t).copied().unwrap_or(false) {
                t = w.templates[t].parent.unwrap();
            }
            t
        };
        let sib_removed: Vec<bool> =
            self.sedges.iter().map(|e| remove.get(self.belongs[e.tail]).copied().unwrap_or(false)).collect();
        let mut moved = Vec::new();
        let mut kept = Vec::new();
        for (e, r) in self.sedges.drain(..).zip(sib_removed) {
            if r && e.tail != e.head {
                moved.push(Edge { tail: e.tail, head: e.head, weight: e.weight });
            } else if r {
                kept.push(SiblingEdge { delta: 0, ..e });
            } else {
                kept.push(e);
            }
        }
        self.sedges = kept;
        self.edges.extend(moved);
        for v in 0..self.belongs.len() {
            self.belongs[v] = keep_anc(self, self.belongs[v]);
        }
        let mut remap = vec![usize::MAX; self.templates.len()];
        let mut out = Vec::new();
        for t in 0..self.templates.len() {
            if remove.get(t).copied().unwrap_or(false) {
                continue;
            }
            let mut tt = self.templates[t].clone();
            tt.parent = tt.parent.map(|p| remap[keep_anc(self, p)]);
            remap[t] = out.len();
            out.push(tt);
        }
        for b in self.belongs.iter_mut() {
            *b = remap[*b];
        }
        self.templates = out;
    }

    /// Drop vertices with `keep[v] == false` and every edge touching them.
    pub fn retain_vertices(&mut self, keep: &[bool]) {
        let mut id = vec![usize::MAX; self.names.len()];
        let mut next = 0;
        for v in 0..self.names.len() {
            if keep[v] {
                id[v] = next;
                next += 1;
            } else {
                self.taken.remove(&self.names[v]);
            }
        }
        let pick = |xs: &mut Vec<String>| {
            let old = std::mem::take(xs);
            *xs = old.into_iter().enumerate().filter(|(i, _)| keep[*i]).map(|(_, x)| x).collect();
        };
        pick(&mut self.names);
        self.belongs = (0..keep.len()).filter(|&v| keep[v]).map(|v| self.belongs[v]).collect();
        self.origin = (0..keep.len()).filter(|&v| keep[v]).map(|v| self.origin[v]).collect();
        self.edges.retain(|e| keep[e.tail] && keep[e.head]);
        for e in self.edges.iter_mut() {
            e.tail = id[e.tail];
            e.head = id[e.head];
        }
        self.sedges.retain(|e| keep[e.tail] && keep[e.head]);
        for e in self.sedges.iter_mut() {
            e.tail = id[e.tail];
            e.head = id[e.head];
        }
    }

    /// Replace template `t` by `P` copies merged into its parent; the sibling edges of `t` become ordinary edges between the copies.
    pub fn expand(&mut self, t: TemplateId) {
        let p = self.templates[t].param;
        let own: Vec<SiblingEdge> = self.sedges.iter().filter(|e| self.belongs[e.tail] == t).cloned().collect();
        self.sedges.retain(|e| self.belongs[e.tail] != t);
        let mut copies: Vec<HashMap<VertexId, VertexId>> = vec![HashMap::new()];
        let mut remove = vec![false; self.templates.len()];
        remove[t] = true;
        for _ in 1..p {
            self.templates[t].param = 2;
            let copy = self.templates.len();
            // with parameter 2 the split leaves `t` and its copy at parameter 1
            copies.push(self.split(t));
            debug_assert_eq!(self.templates[copy].param, 1);
            remove.resize(self.templates.len(), false);
            remove[copy] = true;
        }
        self.templates[t].param = 1;
        let at = |c: &HashMap<VertexId, VertexId>, v: VertexId| c.get(&v).copied().unwrap_or(v);
        for e in own {
            for (i, c) in copies.iter().enumerate() {
                let j = (i as i64 + e.delta).rem_euclid(p as i64) as usize;
                let (a, b) = (at(c, e.tail), at(&copies[j], e.head));
                if a == b {
                    self.sedges.push(SiblingEdge { tail: a, head: b, weight: e.weight, delta: 0 });
                } else {
                    self.edges.push(Edge { tail: a, head: b, weight: e.weight });
                }
            }
        }
        remove.resize(self.templates.len(), false);
        self.collapse(&remove);
    }

    /// Renumber templates breadth-first from the root and drop empty ones.
    pub fn normalize(&mut self) {
        let n = self.templates.len();
        let mut populated = vec![false; n];
        for &b in &self.belongs {
            let mut t = Some(b);
            while let Some(x) = t {
                populated[x] = true;
                t = self.templates[x].parent;
            }
        }
        let mut children = vec![Vec::new(); n];
        for t in 0..n {
            if let Some(p) = self.templates[t].parent {
                children[p].push(t);
            }
        }
        let mut order = Vec::new();
        let mut q = VecDeque::from([ROOT]);
        while let Some(t) = q.pop_front() {
            if t != ROOT && !populated[t] {
                continue;
            }
            order.push(t);
            q.extend(children[t].iter().copied());
        }
        let mut remap = vec![usize::MAX; n];
        for (i, &t) in order.iter().enumerate() {
            remap[t] = i;
        }
        self.templates = order
            .iter()
            .map(|&t| {
                let mut tt = self.templates[t].clone();
                tt.parent = tt.parent.map(|p| remap[p]);
                tt
            })
            .collect();
        for b in self.belongs.iter_mut() {
            *b = remap[*b];
        }
    }

    pub fn finish(mut self) -> Result<Derived> {
        self.normalize();
        let raw = RawPgt {
            directed: self.directed,
            templates: self.templates,
            names: self.names,
            memberships: self.belongs.iter().map(|&t| vec![t]).collect(),
            edges: self.edges,
            sibling_edges: self.sedges,
        };
        Ok(Derived { pgt: Pgt::from_raw(raw)?, origin: self.origin })
    }
}

/// Reweighted weight of every template edge, aligned with `g.edges()`.
pub fn edge_reweight(g: &Pgt) -> Result<Vec<Weight>> {
    if g.has_sibling_edges() {
        return Err(PgtError::SiblingEdges("edge_reweight"));
    }
    let mult: Vec<u128> = (0..g.templates().len()).map(|t| g.multiplicity(t)).collect();
    Ok(g.edges()
        .iter()
        .map(|e| {
            let (a, b) = (g.template_of(e.tail), g.template_of(e.head));
            let deeper = if g.tree().depth[a] >= g.tree().depth[b] { a } else { b };
            e.weight.scale(mult[deeper])
        })
        .collect())
}

/// Merge all instances of `v` into one root vertex through infinite dummy edges.
pub fn instance_merge(g: &Pgt, v: VertexId) -> Result<Derived> {
    if g.sibling_edges().iter().any(|e| e.tail == v || e.head == v) {
        return Err(PgtError::SiblingEdges("instance_merge at a sibling endpoint"));
    }
    let mut w = Work::new(g);
    while let Some(par) = w.parent(w.belongs[v]) {
        let t = w.belongs[v];
        for i in 0..w.edges.len() {
            let e = w.edges[i].clone();
            let other = if e.tail == v {
                e.head
            } else if e.head == v {
                e.tail
            } else {
                continue;
            };
            if w.belongs[other] == t {
                continue;
            }
            let name = w.fresh_name(&w.names[v].clone(), '~');
            let d = w.add_vertex(name, t, None);
            if e.tail == v {
                w.edges[i] = Edge { tail: d, head: other, weight: e.weight };
                w.edges.push(Edge { tail: v, head: d, weight: Weight::Infinite });
            } else {
                w.edges[i] = Edge { tail: other, head: d, weight: e.weight };
                w.edges.push(Edge { tail: d, head: v, weight: Weight::Infinite });
            }
        }
        w.belongs[v] = par;
    }
    w.finish()
}

/// Result of an upwards partial instantiation together with the instance map.
#[derive(Clone, Debug)]
pub struct Upi {
    pub pgt: Pgt,
    pub origin: Vec<Option<VertexId>>,
    /// The root vertex standing for the chosen instance of the query.
    pub vertex_of_query: VertexId,
    query: VertexId,
    query_addr: Address,
    input_chains: Vec<Vec<TemplateId>>,
    steps: Vec<(usize, HashMap<VertexId, VertexId>)>,
    drop: Vec<usize>,
}

impl Upi {
    /// Where instance `(v, a)` of the input model lives in the output model.
    pub fn map_instance(&self, v: VertexId, a: &Address) -> (VertexId, Address) {
        let orig = &a.0;
        let mut a = a.0.clone();
        // swap the queried instance with instance 0 along the query's chain
        let qa = &self.query_addr.0;
        let qc = &self.input_chains[self.query];
        for j in 0..qc.len() {
            if self.input_chains[v].get(j) != Some(&qc[j]) || orig[..j] != qa[..j] {
                break;
            }
            if a[j] == qa[j] {
                a[j] = 0;
            } else if a[j] == 0 {
                a[j] = qa[j];
            }
        }
        let mut v = v;
        for (depth, vmap) in &self.steps {
            let j = depth - 1;
            if let Some(&c) = vmap.get(&v) {
                if a[j] > 0 {
                    a[j] -= 1;
                    v = c;
                }
            }
        }
        (v, Address(a[self.drop[v]..].to_vec()))
    }
}

/// Upwards partial instantiation lifting instance 0 of `s` to the root.
pub fn upwards_partial_instantiation(g: &Pgt, s: VertexId) -> Result<Upi> {
    let a = Address::zeros(g.chain(s).len());
    upwards_partial_instantiation_at(g, s, &a)
}

/// Upwards partial instantiation lifting instance `addr` of `s` to the root.
pub fn upwards_partial_instantiation_at(g: &Pgt, s: VertexId, addr: &Address) -> Result<Upi> {
    if g.has_sibling_edges() {
        return Err(PgtError::SiblingEdges("upwards_partial_instantiation"));
    }
    if !addr.is_valid_for(g, s) {
        return Err(PgtError::Precondition("invalid instance address".into()));
    }
    let mut w = Work::new(g);
    let chain = g.chain(s);
    let mut steps = Vec::new();
    for &t in &chain {
        if w.templates[t].param > 1 {
            let vmap = w.split(t);
            steps.push((w.depth(t), vmap));
        }
    }
    let mut remove = vec![false; w.templates.len()];
    for &t in &chain {
        remove[t] = true;
    }
    let drop: Vec<usize> =
        (0..w.names.len()).map(|v| w.chain(w.belongs[v]).iter().filter(|&&t| remove[t]).count()).collect();
    w.collapse(&remove);
    let d = w.finish()?;
    Ok(Upi {
        vertex_of_query: s,
        query: s,
        query_addr: addr.clone(),
        input_chains: (0..g.n()).map(|v| g.chain(v)).collect(),
        steps,
        drop,
        pgt: d.pgt,
        origin: d.origin,
    })
}

/// `G[T]`: the vertices of `t` plus its boundary, with `t` as the new root.
/// With `merge_boundary` the boundary collapses into one vertex. Sibling
/// edges of `t` itself leave the instance and are dropped.
pub fn induced_parametric_subgraph(g: &Pgt, t: TemplateId, merge_boundary: bool) -> Result<Derived> {
    let boundary = if t == ROOT { Vec::new() } else { g.boundary_vertices(t)? };
    let inside: Vec<bool> = (0..g.n()).map(|v| g.contains(t, v)).collect();
    let desc = g.tree().descendants(t);
    let mut tmap = HashMap::new();
    let mut templates = vec![Template { name: g.templates()[t].name.clone(), parent: None, param: 1 }];
    tmap.insert(t, 0);
    for &d in &desc[1..] {
        let mut tt = g.templates()[d].clone();
        tt.parent = tt.parent.map(|p| tmap[&p]);
        tmap.insert(d, templates.len());
        templates.push(tt);
    }
    let mut vmap: HashMap<VertexId, VertexId> = HashMap::new();
    let mut names = Vec::new();
    let mut belongs = Vec::new();
    let mut origin = Vec::new();
    for v in 0..g.n() {
        if inside[v] {
            vmap.insert(v, names.len());
            names.push(g.name(v).to_string());
            belongs.push(tmap[&g.template_of(v)]);
            origin.push(Some(v));
        }
    }
    if merge_boundary && !boundary.is_empty() {
        let hat = names.len();
        let taken: HashSet<&String> = names.iter().collect();
        let name = (0..).map(|k| format!("^{k}")).find(|c| !taken.contains(c)).unwrap();
        names.push(name);
        belongs.push(ROOT);
        origin.push(None);
        for &b in &boundary {
            vmap.insert(b, hat);
        }
    } else {
        for &b in &boundary {
            vmap.insert(b, names.len());
            names.push(g.name(b).to_string());
            belongs.push(ROOT);
            origin.push(Some(b));
        }
    }
    let mut edges = Vec::new();
    for e in g.edges() {
        if let (Some(&a), Some(&b)) = (vmap.get(&e.tail), vmap.get(&e.head)) {
            if a == b && !inside[e.tail] {
                continue;
            }
            edges.push(Edge { tail: a, head: b, weight: e.weight });
        }
    }
    let sedges = g
        .sibling_edges()
        .iter()
        .filter(|e| inside[e.tail] && g.template_of(e.tail) != t)
        .map(|e| SiblingEdge { tail: vmap[&e.tail], head: vmap[&e.head], ..e.clone() })
        .collect();
    let raw = RawPgt {
        directed: g.directed(),
        templates,
        names,
        memberships: belongs.iter().map(|&b| vec![b]).collect(),
        edges,
        sibling_edges: sedges,
    };
    Ok(Derived { pgt: Pgt::from_raw(raw)?, origin })
}

/// Split every template whose vertex set is disconnected (edges taken as
/// undirected) into one template per component. The instantiation is
/// unchanged. Returns the new model and, per new template, the original one.
pub fn split_template_components(g: &Pgt) -> Result<(Pgt, Vec<TemplateId>)> {
    let mut w = Work::new(g);
    let mut torigin: Vec<TemplateId> = (0..w.templates.len()).collect();
    for t in g.tree().post_order() {
        if t == ROOT {
            continue;
        }
        let n = w.names.len();
        let inside: Vec<bool> = (0..n).map(|v| w.is_anc(t, w.belongs[v])).collect();
        let mut uf = UnionFind::new(n);
        for (a, b) in w.edges.iter().map(|e| (e.tail, e.head)).chain(w.sedges.iter().map(|e| (e.tail, e.head))) {
            if inside[a] && inside[b] {
                uf.union(a, b);
            }
        }
        let mut comp_template: HashMap<usize, TemplateId> = HashMap::new();
        let mut first = true;
        for v in 0..n {
            if !inside[v] {
                continue;
            }
            let r = uf.find(v);
            if let std::collections::hash_map::Entry::Vacant(e) = comp_template.entry(r) {
                let nt = if first {
                    first = false;
                    t
                } else {
                    let tt = Template { name: w.fresh_template_name(&g.templates()[t].name), ..w.templates[t].clone() };
                    w.templates.push(tt);
                    torigin.push(torigin[t]);
                    w.templates.len() - 1
                };
                e.insert(nt);
            }
        }
        if comp_template.len() <= 1 {
            continue;
        }
        // children of t move along with their component
        let kids: Vec<TemplateId> = (0..w.templates.len()).filter(|&d| w.templates[d].parent == Some(t)).collect();
        for d in kids {
            if let Some(v) = (0..n).find(|&v| inside[v] && w.is_anc(d, w.belongs[v])) {
                w.templates[d].parent = Some(comp_template[&uf.find(v)]);
            }
        }
        for v in 0..n {
            if inside[v] && w.belongs[v] == t {
                w.belongs[v] = comp_template[&uf.find(v)];
            }
        }
    }
    // restore parents-before-children order
    let before = w.templates.clone();
    w.normalize();
    let mut new_origin = vec![0; w.templates.len()];
    let mut remap = HashMap::new();
    for (i, t) in before.iter().enumerate() {
        remap.insert(t.name.clone(), i);
    }
    for (i, t) in w.templates.iter().enumerate() {
        new_origin[i] = torigin[remap[&t.name]];
    }
    Ok((w.finish()?.pgt, new_origin))
}

#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        self.parent[a.max(b)] = a.min(b);
        true
    }
}
