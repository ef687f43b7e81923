//! Template discovery: find models whose instantiation is a given graph.

use crate::canon::{canonical_form, CanonicalForm, LabeledGraph};
use crate::error::{pre, Result};
use crate::graph::Graph;
use crate::instantiate::instantiate;
use crate::model::{Pgt, RawPgt, ROOT};
use crate::weight::Weight;
use std::collections::{BTreeMap, HashMap, HashSet};

pub use crate::canon::{graph_canonical_form, graph_isomorphic, group_isomorphic_components};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiscoveryMode {
    First,
    All,
}

#[derive(Clone, Debug)]
pub struct DiscoveryConfig {
    /// Largest boundary set tried in any template.
    pub beta_max: usize,
    /// Smallest parameter of a non-root template.
    pub min_param: u64,
    pub mode: DiscoveryMode,
    /// Cap on alternatives kept per subproblem in `All` mode.
    pub max_models: usize,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig { beta_max: 2, min_param: 2, mode: DiscoveryMode::First, max_models: 256 }
    }
}

/// Template nesting over target vertices: the vertices a template owns and
/// its child templates with their parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Shape {
    own: Vec<usize>,
    children: Vec<(Shape, u64)>,
}

#[derive(Clone, Debug)]
pub struct Discovery {
    /// Verified models; the trivial one-template model comes last if present.
    pub models: Vec<Pgt>,
    /// (vertices in a subproblem, vertices in one of its recursive calls).
    pub calls: Vec<(usize, usize)>,
    /// Candidates dropped because their instantiation did not match.
    pub rejected: usize,
}

struct Ctx<'a> {
    g: &'a Graph,
    cfg: &'a DiscoveryConfig,
    memo: HashMap<Vec<usize>, Vec<Shape>>,
    calls: Vec<(usize, usize)>,
}

fn subsets(n: usize, max: usize, mut f: impl FnMut(&[usize]) -> bool) {
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if cur.len() == size {
            return f(cur);
        }
        for i in start..n {
            cur.push(i);
            if !go(i + 1, n, size, cur, f) {
                return false;
            }
            cur.pop();
        }
        true
    }
    for size in 1..=max.min(n) {
        if !go(0, n, size, &mut Vec::new(), &mut f) {
            return;
        }
    }
}

impl Ctx<'_> {
    /// Components of `vs` minus `b`, coloured by their neighbours outside the
    /// component, grouped by isomorphism.
    fn groups(&self, vs: &[usize], b: &HashSet<usize>) -> Vec<Vec<Vec<usize>>> {
        let rest: Vec<usize> = vs.iter().copied().filter(|v| !b.contains(v)).collect();
        let sub = self.g.induced(&rest);
        let mut interner: HashMap<Vec<usize>, u64> = HashMap::new();
        let mut keyed: BTreeMap<CanonicalForm, Vec<Vec<usize>>> = BTreeMap::new();
        let mut order = Vec::new();
        for comp in sub.components() {
            let members: Vec<usize> = comp.iter().map(|&i| rest[i]).collect();
            let inside: HashSet<usize> = members.iter().copied().collect();
            let colors = members
                .iter()
                .map(|&v| {
                    let mut out: Vec<usize> =
                        self.g.neighbors(v).iter().copied().filter(|w| !inside.contains(w)).collect();
                    out.sort_unstable();
                    let k = interner.len() as u64;
                    *interner.entry(out).or_insert(k)
                })
                .collect();
            let local = self.g.induced(&members);
            let lg = LabeledGraph { colors, ..LabeledGraph::from_graph(&local) };
            let f = canonical_form(&lg);
            if !keyed.contains_key(&f) {
                order.push(f.clone());
            }
            keyed.entry(f).or_default().push(members);
        }
        order.into_iter().map(|f| keyed.remove(&f).unwrap()).collect()
    }

    /// Alternatives for the template holding exactly `vs`; nontrivial ones
    /// first, the flat template last.
    fn frame(&mut self, vs: &[usize]) -> Vec<Shape> {
        let mut key = vs.to_vec();
        key.sort_unstable();
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let mut out: Vec<Shape> = Vec::new();
        let mut seen = HashSet::new();
        let cfg = self.cfg;
        let mut choices: Vec<Vec<usize>> = Vec::new();
        subsets(key.len(), cfg.beta_max, |idx| {
            choices.push(idx.iter().map(|&i| key[i]).collect());
            true
        });
        for b in choices {
            if cfg.mode == DiscoveryMode::First && !out.is_empty() {
                break;
            }
            if cfg.mode == DiscoveryMode::All && out.len() >= cfg.max_models {
                break;
            }
            let bset: HashSet<usize> = b.iter().copied().collect();
            let groups = self.groups(&key, &bset);
            if !groups.iter().any(|g| g.len() as u64 >= cfg.min_param) {
                continue;
            }
            let mut own = b.clone();
            let mut kids: Vec<(Vec<Shape>, u64)> = Vec::new();
            for grp in &groups {
                if (grp.len() as u64) < cfg.min_param {
                    own.extend(grp.iter().flatten());
                    continue;
                }
                let rep = &grp[0];
                self.calls.push((key.len(), rep.len()));
                let alts = self.frame(rep);
                kids.push((alts, grp.len() as u64));
            }
            own.sort_unstable();
            // every combination of child alternatives
            let mut combos: Vec<Vec<(Shape, u64)>> = vec![Vec::new()];
            for (alts, p) in &kids {
                let take = if cfg.mode == DiscoveryMode::First { 1 } else { alts.len() };
                let mut next = Vec::new();
                for c in &combos {
                    for a in alts.iter().take(take) {
                        if next.len() >= cfg.max_models {
                            break;
                        }
                        let mut c2 = c.clone();
                        c2.push((a.clone(), *p));
                        next.push(c2);
                    }
                }
                combos = next;
            }
            for children in combos {
                let s = Shape { own: own.clone(), children };
                if seen.insert(s.clone()) {
                    out.push(s);
                }
            }
        }
        out.truncate(cfg.max_models.max(1));
        out.push(Shape { own: key.clone(), children: Vec::new() });
        self.memo.insert(key, out.clone());
        out
    }
}

fn build(g: &Graph, s: &Shape) -> Result<Pgt> {
    let mut raw = RawPgt::new(false);
    let mut chosen = HashSet::new();
    fn place(raw: &mut RawPgt, g: &Graph, s: &Shape, t: usize, chosen: &mut HashSet<usize>) {
        for &v in &s.own {
            raw.add_vertex(&g.names[v], t);
            chosen.insert(v);
        }
        for (c, p) in &s.children {
            let name = format!("T{}", raw.templates.len());
            let ct = raw.add_template(&name, t, *p);
            place(raw, g, c, ct, chosen);
        }
    }
    place(&mut raw, g, s, ROOT, &mut chosen);
    for &(a, b) in &g.edges {
        if chosen.contains(&a) && chosen.contains(&b) {
            raw.add_edge(&g.names[a], &g.names[b], Weight::one());
        }
    }
    raw.build()
}

/// A form equal for two models iff they are the same up to renaming of
/// vertices and templates.
pub fn model_canonical_form(g: &Pgt) -> CanonicalForm {
    let n = g.n();
    let nt = g.templates().len();
    let mut colors = vec![0u64; n];
    colors.extend((0..nt).map(|t| (1 << 40) | g.param(t)));
    let mut ws: Vec<Weight> = g.edges().iter().map(|e| e.weight).collect();
    ws.sort();
    ws.dedup();
    let mut arcs = Vec::new();
    for e in g.edges() {
        let l = ws.binary_search(&e.weight).unwrap() as u64;
        arcs.push((e.tail, e.head, 3 + l));
        if !g.directed() {
            arcs.push((e.head, e.tail, 3 + l));
        }
    }
    for v in 0..n {
        arcs.push((n + g.template_of(v), v, 1));
    }
    for t in 0..nt {
        if let Some(p) = g.templates()[t].parent {
            arcs.push((n + p, n + t, 2));
        }
    }
    canonical_form(&LabeledGraph { n: n + nt, directed: true, colors, arcs })
}

fn round_trips(g: &Graph, m: &Pgt) -> bool {
    match instantiate(m) {
        Ok(inst) => graph_isomorphic(g, &Graph::from_instantiation(&inst, m)),
        Err(_) => false,
    }
}

pub fn discover(g: &Graph, cfg: &DiscoveryConfig) -> Result<Discovery> {
    if g.n() == 0 || !g.is_connected() {
        return pre("discovery needs a connected nonempty graph");
    }
    let mut ctx = Ctx { g, cfg, memo: HashMap::new(), calls: Vec::new() };
    let all: Vec<usize> = (0..g.n()).collect();
    let shapes = ctx.frame(&all);
    let mut models = Vec::new();
    let mut forms = HashSet::new();
    let mut rejected = 0;
    for s in &shapes {
        if cfg.mode == DiscoveryMode::First && !models.is_empty() {
            break;
        }
        let m = build(g, s)?;
        if !round_trips(g, &m) {
            rejected += 1;
            continue;
        }
        if forms.insert(model_canonical_form(&m)) {
            models.push(m);
        }
    }
    Ok(Discovery { models, calls: ctx.calls, rejected })
}

/// The largest number of vertices of one template adjacent to its proper
/// descendants: the boundary size discovery needs to recover `g`.
pub fn model_beta(g: &Pgt) -> usize {
    let mut best = 0;
    for t in 0..g.templates().len() {
        let mut near = HashSet::new();
        for e in g.edges() {
            for (a, b) in [(e.tail, e.head), (e.head, e.tail)] {
                let (ta, tb) = (g.template_of(a), g.template_of(b));
                if ta == t && tb != t && g.tree().is_ancestor_or_self(t, tb) {
                    near.insert(a);
                }
            }
        }
        best = best.max(near.len());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_el;
    use crate::random::{random_model_where, ModelSpec};
    use rand::SeedableRng;

    fn params(m: &Pgt) -> Vec<u64> {
        let mut p: Vec<u64> = (1..m.templates().len()).map(|t| m.param(t)).collect();
        p.sort_unstable();
        p
    }

    #[test]
    fn star_and_single_vertex() {
        let g = parse_el("graph 1 undirected\nedge l1 c\nedge c l2\n").unwrap();
        let d = discover(&g, &DiscoveryConfig::default()).unwrap();
        let m = &d.models[0];
        assert_eq!(params(m), vec![2]);
        assert_eq!(m.members(ROOT).len(), 1);
        assert_eq!(m.name(m.members(ROOT)[0]), "c");
        let k1 = parse_el("graph 1 undirected\nvertex a\n").unwrap();
        let d = discover(&k1, &DiscoveryConfig { mode: DiscoveryMode::All, ..Default::default() }).unwrap();
        assert_eq!(d.models.len(), 1);
        assert_eq!(d.models[0].templates().len(), 1);
    }

    #[test]
    fn star_of_triangles() {
        let mut text = String::from("graph 1 undirected\n");
        for i in 0..3 {
            text += &format!("edge c a{i}\nedge a{i} b{i}\nedge b{i} d{i}\nedge d{i} a{i}\n");
        }
        let g = parse_el(&text).unwrap();
        let d = discover(&g, &DiscoveryConfig { beta_max: 1, ..Default::default() }).unwrap();
        let m = &d.models[0];
        assert_eq!(params(m), vec![3]);
        assert_eq!(m.members(1).len(), 3);
        assert_eq!(m.name(m.members(ROOT)[0]), "c");
    }

    #[test]
    fn groups() {
        let k1 = Graph::new(1);
        let k2 = Graph::from_edges(2, &[(0, 1)]);
        assert_eq!(group_isomorphic_components(&[k1.clone(), k1, k2]), vec![vec![0, 1], vec![2]]);
        let c3 = Graph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(group_isomorphic_components(&[c3.clone(), c3.clone(), c3]), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn all_mode_models_round_trip() {
        let g = parse_el("graph 1 undirected\nedge c a\nedge c b\nedge c d\nedge c e\n").unwrap();
        let d = discover(&g, &DiscoveryConfig { mode: DiscoveryMode::All, ..Default::default() }).unwrap();
        // K1,4: flat, one child with 4 leaves, one with 2 copies of a pair is impossible
        assert!(d.models.iter().any(|m| params(m) == vec![4]));
        assert_eq!(d.models.last().unwrap().templates().len(), 1);
        for m in &d.models {
            assert!(round_trips(&g, m));
            assert!(params(m).iter().all(|&p| p >= 2));
        }
        assert_eq!(d.rejected, 0);
    }

    #[test]
    fn random_round_trips() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let spec = ModelSpec { max_vertices: 6, max_edges: 10, ..ModelSpec::small(false) };
        let mut rounds = 0;
        let mut nontrivial = 0;
        while rounds < 30 {
            let Some(m) = random_model_where(&mut rng, &spec, 100, |m| m.total_instances() <= 24) else { continue };
            let inst = instantiate(&m).unwrap();
            let g = Graph::from_instantiation(&inst, &m);
            if !g.is_connected() {
                continue;
            }
            rounds += 1;
            let cfg = DiscoveryConfig { beta_max: model_beta(&m).max(1), ..Default::default() };
            let d = discover(&g, &cfg).unwrap();
            assert!(!d.models.is_empty());
            assert_eq!(d.rejected, 0);
            for found in &d.models {
                assert!(round_trips(&g, found));
            }
            for &(outer, inner) in &d.calls {
                assert!(2 * inner <= outer);
            }
            nontrivial += (d.models[0].templates().len() > 1) as usize;
        }
        assert!(nontrivial > 5);
    }

    #[test]
    fn model_forms() {
        let a = parse_el("graph 1 undirected\nedge x y\nedge y z\n").unwrap();
        let b = parse_el("graph 1 undirected\nedge q p\nedge p r\n").unwrap();
        let ma = &discover(&a, &DiscoveryConfig::default()).unwrap().models[0];
        let mb = &discover(&b, &DiscoveryConfig::default()).unwrap().models[0];
        assert_eq!(model_canonical_form(ma), model_canonical_form(mb));
    }
}
