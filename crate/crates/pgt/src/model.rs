//! The parametric graph template model and its validation.

use crate::error::{PgtError, Result};
use crate::weight::Weight;
use std::collections::{HashMap, VecDeque};
use std::fmt;

pub type VertexId = usize;
pub type TemplateId = usize;
pub const ROOT: TemplateId = 0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub name: String,
    pub parent: Option<TemplateId>,
    pub param: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: VertexId,
    pub head: VertexId,
    pub weight: Weight,
}

/// Edge from instance `j` of `tail` to instance `j + delta mod P` of `head`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiblingEdge {
    pub tail: VertexId,
    pub head: VertexId,
    pub weight: Weight,
    pub delta: i64,
}

/// Unvalidated model. Vertices list every template they were declared in;
/// membership in ancestors is implied.
#[derive(Clone, Debug, Default)]
pub struct RawPgt {
    pub directed: bool,
    pub templates: Vec<Template>,
    pub names: Vec<String>,
    pub memberships: Vec<Vec<TemplateId>>,
    pub edges: Vec<Edge>,
    pub sibling_edges: Vec<SiblingEdge>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MissingRoot,
    MultipleRoots(String),
    RootParameter(u64),
    BadParameter { template: String, param: u64 },
    ParentOrder { template: String },
    NonLaminar { a: String, b: String, vertex: String },
    DuplicateVertex(String),
    DuplicateTemplate(String),
    EmptyTemplate(String),
    SkippingEdge { tail: String, head: String },
    SelfLoop(String),
    SiblingCrossesTemplates { tail: String, head: String },
    NegativeWeight { tail: String, head: String },
    BadVertexIndex(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            MissingRoot => write!(f, "missing root template"),
            MultipleRoots(t) => write!(f, "multiple roots: `{t}` has no parent"),
            RootParameter(p) => write!(f, "root parameter must be 1, got {p}"),
            BadParameter { template, param } => {
                write!(f, "bad parameter {param} for template `{template}`")
            }
            ParentOrder { template } => {
                write!(f, "template `{template}` declared before its parent")
            }
            NonLaminar { a, b, vertex } => {
                write!(f, "non-laminar pair `{a}`, `{b}` share vertex `{vertex}`")
            }
            DuplicateVertex(v) => write!(f, "duplicate vertex `{v}`"),
            DuplicateTemplate(t) => write!(f, "duplicate template `{t}`"),
            EmptyTemplate(t) => write!(f, "template `{t}` has no vertices"),
            SkippingEdge { tail, head } => write!(f, "skipping edge ({tail}, {head})"),
            SelfLoop(v) => write!(f, "self-loop at `{v}` that is not a sibling edge"),
            SiblingCrossesTemplates { tail, head } => {
                write!(f, "sibling edge ({tail}, {head}) crosses templates")
            }
            NegativeWeight { tail, head } => write!(f, "negative weight on ({tail}, {head})"),
            BadVertexIndex(i) => write!(f, "edge refers to vertex index {i}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateTree {
    pub parent: Vec<Option<TemplateId>>,
    pub children: Vec<Vec<TemplateId>>,
    pub depth: Vec<usize>,
}

impl TemplateTree {
    fn new(templates: &[Template]) -> Self {
        let n = templates.len();
        let mut children = vec![Vec::new(); n];
        let mut depth = vec![0; n];
        let parent: Vec<_> = templates.iter().map(|t| t.parent).collect();
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(i);
                depth[i] = depth[p] + 1;
            }
        }
        TemplateTree { parent, children, depth }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Number of template levels, i.e. maximum depth plus one.
    pub fn height(&self) -> usize {
        self.depth.iter().max().map_or(0, |d| d + 1)
    }

    /// Non-root ancestors of `t` including `t`, ordered root to leaf.
    pub fn chain(&self, t: TemplateId) -> Vec<TemplateId> {
        let mut c = Vec::new();
        let mut cur = t;
        while let Some(p) = self.parent[cur] {
            c.push(cur);
            cur = p;
        }
        c.reverse();
        c
    }

    pub fn is_ancestor_or_self(&self, a: TemplateId, mut b: TemplateId) -> bool {
        loop {
            if a == b {
                return true;
            }
            match self.parent[b] {
                Some(p) => b = p,
                None => return false,
            }
        }
    }

    /// Children before parents.
    pub fn post_order(&self) -> Vec<TemplateId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![(ROOT, false)];
        while let Some((t, done)) = stack.pop() {
            if done {
                out.push(t);
            } else {
                stack.push((t, true));
                for &c in self.children[t].iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    pub fn descendants(&self, t: TemplateId) -> Vec<TemplateId> {
        let mut out = vec![t];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.children[out[i]].iter().copied());
            i += 1;
        }
        out
    }

    pub fn lca(&self, mut a: TemplateId, mut b: TemplateId) -> TemplateId {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].unwrap();
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].unwrap();
        }
        while a != b {
            a = self.parent[a].unwrap();
            b = self.parent[b].unwrap();
        }
        a
    }
}

/// A validated parametric graph template. Immutable.
#[derive(Clone, Debug)]
pub struct Pgt {
    directed: bool,
    templates: Vec<Template>,
    names: Vec<String>,
    belongs: Vec<TemplateId>,
    edges: Vec<Edge>,
    sibling_edges: Vec<SiblingEdge>,
    tree: TemplateTree,
    index: HashMap<String, VertexId>,
}

pub fn validate(raw: &RawPgt) -> ValidationReport {
    check(raw).1
}

fn check(raw: &RawPgt) -> (Vec<TemplateId>, ValidationReport) {
    use Violation::*;
    let mut vs = Vec::new();
    let tn = |t: TemplateId| raw.templates[t].name.clone();
    let vn = |v: VertexId| raw.names.get(v).cloned().unwrap_or_else(|| format!("#{v}"));
    if raw.templates.is_empty() {
        vs.push(MissingRoot);
        return (Vec::new(), ValidationReport { violations: vs });
    }
    let mut seen = HashMap::new();
    for (i, t) in raw.templates.iter().enumerate() {
        if seen.insert(t.name.clone(), i).is_some() {
            vs.push(DuplicateTemplate(t.name.clone()));
        }
        match t.parent {
            None if i != ROOT => vs.push(MultipleRoots(t.name.clone())),
            Some(_) if i == ROOT => vs.push(MissingRoot),
            Some(p) if p >= i => vs.push(ParentOrder { template: t.name.clone() }),
            _ => {}
        }
        if i == ROOT && t.param != 1 {
            vs.push(RootParameter(t.param));
        } else if t.param == 0 {
            vs.push(BadParameter { template: t.name.clone(), param: t.param });
        }
    }
    if !vs.is_empty() {
        return (Vec::new(), ValidationReport { violations: vs });
    }
    let tree = TemplateTree::new(&raw.templates);
    let mut names = HashMap::new();
    for n in &raw.names {
        if names.insert(n.clone(), ()).is_some() {
            vs.push(DuplicateVertex(n.clone()));
        }
    }
    let mut belongs = Vec::with_capacity(raw.names.len());
    for v in 0..raw.names.len() {
        let ms = raw.memberships.get(v).map(|m| m.as_slice()).unwrap_or(&[]);
        let mut deepest = ROOT;
        for &t in ms {
            if tree.is_ancestor_or_self(t, deepest) {
                continue;
            }
            if tree.is_ancestor_or_self(deepest, t) {
                deepest = t;
            } else {
                vs.push(NonLaminar { a: tn(deepest), b: tn(t), vertex: vn(v) });
            }
        }
        belongs.push(deepest);
    }
    let mut populated = vec![false; raw.templates.len()];
    for &b in &belongs {
        let mut t = b;
        populated[t] = true;
        while let Some(p) = tree.parent[t] {
            populated[p] = true;
            t = p;
        }
    }
    for (t, &p) in populated.iter().enumerate() {
        if !p && t != ROOT {
            vs.push(EmptyTemplate(tn(t)));
        }
    }
    let n = raw.names.len();
    for e in &raw.edges {
        if e.tail >= n || e.head >= n {
            vs.push(BadVertexIndex(e.tail.max(e.head)));
            continue;
        }
        let (a, b) = (belongs[e.tail], belongs[e.head]);
        if e.tail == e.head {
            vs.push(SelfLoop(vn(e.tail)));
        }
        if a != b && tree.parent[a] != Some(b) && tree.parent[b] != Some(a) {
            vs.push(SkippingEdge { tail: vn(e.tail), head: vn(e.head) });
        }
        if e.weight.is_negative() {
            vs.push(NegativeWeight { tail: vn(e.tail), head: vn(e.head) });
        }
    }
    for e in &raw.sibling_edges {
        if e.tail >= n || e.head >= n {
            vs.push(BadVertexIndex(e.tail.max(e.head)));
            continue;
        }
        if belongs[e.tail] != belongs[e.head] {
            vs.push(SiblingCrossesTemplates { tail: vn(e.tail), head: vn(e.head) });
        }
        if e.weight.is_negative() {
            vs.push(NegativeWeight { tail: vn(e.tail), head: vn(e.head) });
        }
    }
    (belongs, ValidationReport { violations: vs })
}

impl RawPgt {
    pub fn new(directed: bool) -> Self {
        RawPgt {
            directed,
            templates: vec![Template { name: "T0".into(), parent: None, param: 1 }],
            ..Default::default()
        }
    }

    pub fn add_template(&mut self, name: &str, parent: TemplateId, param: u64) -> TemplateId {
        self.templates.push(Template { name: name.into(), parent: Some(parent), param });
        self.templates.len() - 1
    }

    pub fn add_vertex(&mut self, name: &str, t: TemplateId) -> VertexId {
        self.names.push(name.into());
        self.memberships.push(vec![t]);
        self.names.len() - 1
    }

    pub fn vertex(&self, name: &str) -> VertexId {
        self.names.iter().position(|n| n == name).expect("vertex declared")
    }

    pub fn add_edge(&mut self, u: &str, v: &str, w: Weight) {
        let (tail, head) = (self.vertex(u), self.vertex(v));
        self.edges.push(Edge { tail, head, weight: w });
    }

    pub fn add_sedge(&mut self, u: &str, v: &str, w: Weight, delta: i64) {
        let (tail, head) = (self.vertex(u), self.vertex(v));
        self.sibling_edges.push(SiblingEdge { tail, head, weight: w, delta });
    }

    pub fn build(self) -> Result<Pgt> {
        Pgt::from_raw(self)
    }
}

impl Pgt {
    pub fn from_raw(raw: RawPgt) -> Result<Pgt> {
        let (belongs, report) = check(&raw);
        if !report.is_ok() {
            return Err(PgtError::Invalid(report.to_string()));
        }
        let tree = TemplateTree::new(&raw.templates);
        let index = raw.names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Ok(Pgt {
            directed: raw.directed,
            templates: raw.templates,
            names: raw.names,
            belongs,
            edges: raw.edges,
            sibling_edges: raw.sibling_edges,
            tree,
            index,
        })
    }

    /// Raw form with each vertex declared only in its deepest template.
    pub fn to_raw(&self) -> RawPgt {
        RawPgt {
            directed: self.directed,
            templates: self.templates.clone(),
            names: self.names.clone(),
            memberships: self.belongs.iter().map(|&t| vec![t]).collect(),
            edges: self.edges.clone(),
            sibling_edges: self.sibling_edges.clone(),
        }
    }

    pub fn directed(&self) -> bool {
        self.directed
    }
    pub fn n(&self) -> usize {
        self.names.len()
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v]
    }
    pub fn vertex_id(&self, name: &str) -> Result<VertexId> {
        self.index.get(name).copied().ok_or_else(|| PgtError::UnknownVertex(name.into()))
    }
    pub fn template_id(&self, name: &str) -> Result<TemplateId> {
        self.templates.iter().position(|t| t.name == name).ok_or_else(|| PgtError::UnknownTemplate(name.into()))
    }
    pub fn templates(&self) -> &[Template] {
        &self.templates
    }
    pub fn param(&self, t: TemplateId) -> u64 {
        self.templates[t].param
    }
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
    pub fn sibling_edges(&self) -> &[SiblingEdge] {
        &self.sibling_edges
    }
    pub fn has_sibling_edges(&self) -> bool {
        !self.sibling_edges.is_empty()
    }
    pub fn tree(&self) -> &TemplateTree {
        &self.tree
    }
    /// T(v): the deepest template containing `v`.
    pub fn template_of(&self, v: VertexId) -> TemplateId {
        self.belongs[v]
    }
    pub fn belongs(&self) -> &[TemplateId] {
        &self.belongs
    }
    /// Whether `v` lies in template `t` (directly or through a descendant).
    pub fn contains(&self, t: TemplateId, v: VertexId) -> bool {
        self.tree.is_ancestor_or_self(t, self.belongs[v])
    }
    /// Vertices whose deepest template is `t`.
    pub fn members(&self, t: TemplateId) -> Vec<VertexId> {
        (0..self.n()).filter(|&v| self.belongs[v] == t).collect()
    }
    /// Every vertex of `t`, descendants included.
    pub fn vertex_set(&self, t: TemplateId) -> Vec<VertexId> {
        (0..self.n()).filter(|&v| self.contains(t, v)).collect()
    }
    pub fn chain(&self, v: VertexId) -> Vec<TemplateId> {
        self.tree.chain(self.belongs[v])
    }

    /// Product of the parameters of `t` and all its ancestors (saturating).
    pub fn multiplicity(&self, t: TemplateId) -> u128 {
        let mut p: u128 = 1;
        let mut cur = Some(t);
        while let Some(c) = cur {
            p = p.saturating_mul(self.templates[c].param as u128);
            cur = self.tree.parent[c];
        }
        p
    }

    pub fn instance_count(&self, v: VertexId) -> u128 {
        self.multiplicity(self.belongs[v])
    }

    pub fn total_instances(&self) -> u128 {
        (0..self.n()).fold(0u128, |a, v| a.saturating_add(self.instance_count(v)))
    }

    pub fn boundary_vertices(&self, t: TemplateId) -> Result<Vec<VertexId>> {
        let p = match self.tree.parent[t] {
            Some(p) => p,
            None => return Err(PgtError::Precondition("the root has no boundary".into())),
        };
        let mut out: Vec<VertexId> = Vec::new();
        for e in &self.edges {
            for (a, b) in [(e.tail, e.head), (e.head, e.tail)] {
                if self.belongs[a] == t && self.belongs[b] == p {
                    out.push(b);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Directed adjacency of the template graph, regular and sibling edges,
    /// both directions for undirected models.
    pub fn arcs(&self) -> Vec<Vec<VertexId>> {
        let mut adj = vec![Vec::new(); self.n()];
        let pairs =
            self.edges.iter().map(|e| (e.tail, e.head)).chain(self.sibling_edges.iter().map(|e| (e.tail, e.head)));
        for (a, b) in pairs {
            adj[a].push(b);
            if !self.directed {
                adj[b].push(a);
            }
        }
        adj
    }

    /// No walk in the instantiation leaves the vertex set of an instance of a
    /// non-root template and comes back into an instance of that template.
    pub fn is_template_acyclic(&self) -> bool {
        let adj = self.arcs();
        for t in 1..self.templates.len() {
            let inside: Vec<bool> = (0..self.n()).map(|v| self.contains(t, v)).collect();
            // vertices outside t that can reach t
            let mut rev = vec![Vec::new(); self.n()];
            for (a, outs) in adj.iter().enumerate() {
                for &b in outs {
                    rev[b].push(a);
                }
            }
            let mut reach = inside.clone();
            let mut q: VecDeque<VertexId> = (0..self.n()).filter(|&v| inside[v]).collect();
            while let Some(b) = q.pop_front() {
                for &a in &rev[b] {
                    if !reach[a] {
                        reach[a] = true;
                        q.push_back(a);
                    }
                }
            }
            for (a, outs) in adj.iter().enumerate() {
                if inside[a] && outs.iter().any(|&b| !inside[b] && reach[b]) {
                    return false;
                }
            }
        }
        true
    }

    /// Template-acyclic and the template graph (with sibling arcs) is a DAG.
    pub fn is_strongly_template_acyclic(&self) -> bool {
        self.directed && is_dag(&self.arcs()) && self.is_template_acyclic()
    }
}

pub fn is_dag(adj: &[Vec<usize>]) -> bool {
    topo_order(adj).is_some()
}

pub fn topo_order(adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut indeg = vec![0usize; n];
    for outs in adj {
        for &b in outs {
            indeg[b] += 1;
        }
    }
    let mut q: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = q.pop_front() {
        order.push(v);
        for &b in &adj[v] {
            indeg[b] -= 1;
            if indeg[b] == 0 {
                q.push_back(b);
            }
        }
    }
    (order.len() == n).then_some(order)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Fig. 1: T1={b} P=2, T2={c,d,e} P=2, T3={e} P=3 inside T2.
    pub fn fig1() -> Pgt {
        let mut r = RawPgt::new(true);
        let t1 = r.add_template("T1", ROOT, 2);
        let t2 = r.add_template("T2", ROOT, 2);
        let t3 = r.add_template("T3", t2, 3);
        for (v, t) in [("a", ROOT), ("b", t1), ("c", t2), ("d", t2), ("e", t3)] {
            r.add_vertex(v, t);
        }
        for v in ["f", "g", "i"] {
            r.add_vertex(v, ROOT);
        }
        for (u, v) in
            [("a", "b"), ("b", "f"), ("a", "c"), ("c", "e"), ("d", "e"), ("c", "d"), ("d", "g"), ("g", "i"), ("f", "i")]
        {
            r.add_edge(u, v, Weight::one());
        }
        r.build().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::fig1;
    use super::*;

    #[test]
    fn fig1_validates() {
        let g = fig1();
        assert_eq!(g.template_of(g.vertex_id("e").unwrap()), 3);
        assert_eq!(g.template_of(g.vertex_id("a").unwrap()), ROOT);
        assert_eq!(g.instance_count(g.vertex_id("e").unwrap()), 6);
        assert_eq!(g.instance_count(g.vertex_id("b").unwrap()), 2);
        assert_eq!(g.total_instances(), 16);
        assert_eq!(g.tree().height(), 3);
        let bd: Vec<&str> = g.boundary_vertices(2).unwrap().iter().map(|&v| g.name(v)).collect();
        assert_eq!(bd, vec!["a", "g"]);
        assert!(g.is_template_acyclic());
    }

    #[test]
    fn non_laminar_pair() {
        let mut r = RawPgt::new(false);
        let a = r.add_template("A", ROOT, 2);
        let b = r.add_template("B", ROOT, 2);
        r.add_vertex("a", a);
        let v = r.add_vertex("b", a);
        r.memberships[v].push(b);
        r.add_vertex("c", b);
        let rep = validate(&r);
        assert!(matches!(rep.violations[0], Violation::NonLaminar { .. }));
        assert!(rep.to_string().contains("non-laminar pair"));
    }

    #[test]
    fn single_template_ok_and_rules() {
        let mut r = RawPgt::new(false);
        r.add_vertex("v", ROOT);
        assert!(validate(&r).is_ok());
        r.templates[0].param = 2;
        assert_eq!(validate(&r).violations, vec![Violation::RootParameter(2)]);

        let mut r = RawPgt::new(true);
        let a = r.add_template("A", ROOT, 2);
        let b = r.add_template("B", a, 2);
        r.add_vertex("r", ROOT);
        r.add_vertex("x", b);
        r.add_edge("r", "x", Weight::one());
        assert!(matches!(validate(&r).violations[0], Violation::SkippingEdge { .. }));

        let mut r = RawPgt::new(true);
        let a = r.add_template("A", ROOT, 2);
        r.add_vertex("r", ROOT);
        r.add_vertex("x", a);
        r.add_sedge("r", "x", Weight::one(), 1);
        assert!(matches!(validate(&r).violations[0], Violation::SiblingCrossesTemplates { .. }));
        r.sibling_edges.clear();
        r.templates[1].param = 0;
        assert!(matches!(validate(&r).violations[0], Violation::BadParameter { .. }));
    }

    #[test]
    fn template_cycles() {
        // s -> v -> t is fine
        let mut r = RawPgt::new(true);
        let c = r.add_template("C", ROOT, 2);
        r.add_vertex("s", ROOT);
        r.add_vertex("t", ROOT);
        r.add_vertex("v", c);
        r.add_edge("s", "v", Weight::one());
        r.add_edge("v", "t", Weight::one());
        assert!(r.clone().build().unwrap().is_template_acyclic());
        // v -> s -> v exits the child and re-enters it
        r.add_edge("t", "s", Weight::one());
        assert!(!r.build().unwrap().is_template_acyclic());
        // a cycle inside one template is allowed
        let mut r = RawPgt::new(true);
        let c = r.add_template("C", ROOT, 2);
        r.add_vertex("x", c);
        r.add_vertex("y", c);
        r.add_edge("x", "y", Weight::one());
        r.add_edge("y", "x", Weight::one());
        let g = r.build().unwrap();
        assert!(g.is_template_acyclic());
        assert!(!g.is_strongly_template_acyclic());
    }
}
