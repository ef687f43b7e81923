//! Global minimum cut of undirected templates. A minimum cut either keeps
//! one side inside a single instance of some template (no template instance
//! is cut apart) or it cuts through all instances of one template alike.

use crate::error::{pre, PgtError, Result};
use crate::instantiate::Instantiation;
use crate::model::{Pgt, TemplateId, VertexId, ROOT};
use crate::transforms::{edge_reweight, induced_parametric_subgraph, split_template_components, UnionFind};
use crate::weight::{finite_capacities, Rat, Weight};
use num_traits::Zero;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutCase {
    NoCross,
    Cross,
}

impl std::fmt::Display for CutCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CutCase::NoCross => "no_cross",
            CutCase::Cross => "cross",
        })
    }
}

/// One side of a cut: every instance of a `members` vertex whose address is
/// zero on the positions of `chain` (the chain of the iterated template).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutWitness {
    pub template: TemplateId,
    pub chain_len: usize,
    pub members: Vec<VertexId>,
}

impl CutWitness {
    pub fn side(&self, inst: &Instantiation) -> Vec<bool> {
        inst.vertices
            .iter()
            .map(|(v, a)| self.members.binary_search(v).is_ok() && a.0[..self.chain_len].iter().all(|&x| x == 0))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutResult {
    pub value: Weight,
    pub case: CutCase,
    pub witness: CutWitness,
    /// The instantiation is disconnected.
    pub disconnected: bool,
}

/// Stoer–Wagner on an undirected multigraph. Returns the cut value and one
/// side. A disconnected graph yields 0 and one of its components.
pub fn solve_global_mincut(n: usize, edges: &[(usize, usize, Weight)]) -> Result<(Weight, Vec<bool>)> {
    if n < 2 {
        return pre("a cut needs at least two vertices");
    }
    let mut uf = UnionFind::new(n);
    for &(a, b, _) in edges {
        uf.union(a, b);
    }
    let r0 = uf.find(0);
    if (1..n).any(|v| uf.find(v) != r0) {
        return Ok((Weight::zero(), (0..n).map(|v| uf.find(v) == r0).collect()));
    }
    let ws: Vec<Weight> = edges.iter().map(|e| e.2).collect();
    let (caps, big) = finite_capacities(&ws);
    let mut w = vec![vec![Rat::zero(); n]; n];
    for (&(a, b, _), c) in edges.iter().zip(caps) {
        if a != b {
            w[a][b] += c;
            w[b][a] += c;
        }
    }
    let mut groups: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut best: Option<(Rat, Vec<usize>)> = None;
    while alive.len() > 1 {
        let mut key = vec![Rat::zero(); n];
        let mut added = vec![false; n];
        let (mut prev, mut last) = (usize::MAX, usize::MAX);
        for _ in 0..alive.len() {
            let &v =
                alive.iter().filter(|&&v| !added[v]).max_by(|&&a, &&b| key[a].cmp(&key[b]).then(b.cmp(&a))).unwrap();
            added[v] = true;
            prev = last;
            last = v;
            for &u in &alive {
                if !added[u] {
                    key[u] += w[v][u];
                }
            }
        }
        let phase = key[last];
        if best.as_ref().is_none_or(|(b, _)| phase < *b) {
            best = Some((phase, groups[last].clone()));
        }
        let moved = std::mem::take(&mut groups[last]);
        groups[prev].extend(moved);
        for &u in &alive {
            let x = w[last][u];
            w[prev][u] += x;
            w[u][prev] = w[prev][u];
        }
        w[prev][prev] = Rat::zero();
        alive.retain(|&v| v != last);
    }
    let (value, side) = best.unwrap();
    let mut mask = vec![false; n];
    for v in side {
        mask[v] = true;
    }
    let value = if value >= big { Weight::Infinite } else { Weight::Finite(value) };
    Ok((value, mask))
}

struct Prepared {
    g: Pgt,
    torigin: Vec<TemplateId>,
}

fn prepare(g: &Pgt) -> Result<Prepared> {
    if g.directed() {
        return pre("minimum cut needs an undirected model");
    }
    if g.has_sibling_edges() {
        return Err(PgtError::SiblingEdges("min_cut"));
    }
    if g.total_instances() < 2 {
        return pre("a cut needs at least two vertices");
    }
    let (g, torigin) = split_template_components(g)?;
    Ok(Prepared { g, torigin })
}

impl Prepared {
    fn witness(&self, t: TemplateId, mut members: Vec<VertexId>) -> CutWitness {
        members.sort_unstable();
        members.dedup();
        CutWitness { template: self.torigin[t], chain_len: self.g.tree().chain(t).len(), members }
    }
}

type Candidate = (Weight, CutWitness, bool);

/// Candidates whose small side lies inside one instance of a template.
fn no_cross(p: &Prepared) -> Result<Option<Candidate>> {
    let g = &p.g;
    let n = g.n();
    let mut uf = UnionFind::new(n);
    let mut best: Option<Candidate> = None;
    let offer = |best: &mut Option<Candidate>, c: Candidate| {
        if best.as_ref().is_none_or(|b| c.0 < b.0) {
            *best = Some(c);
        }
    };
    for t in g.tree().post_order() {
        let vs = g.vertex_set(t);
        let boundary = if t == ROOT { Vec::new() } else { g.boundary_vertices(t)? };
        if t != ROOT && boundary.is_empty() {
            // every instance of t is a component of its own
            offer(&mut best, (Weight::zero(), p.witness(t, vs.clone()), true));
            continue;
        }
        let mut node_of = vec![usize::MAX; n];
        let mut reps: Vec<usize> = Vec::new();
        for &v in &vs {
            let r = uf.find(v);
            if node_of[r] == usize::MAX {
                node_of[r] = reps.len();
                reps.push(r);
            }
        }
        let hat = reps.len();
        let node = |uf: &mut UnionFind, v: VertexId| {
            if boundary.binary_search(&v).is_ok() {
                hat
            } else {
                node_of[uf.find(v)]
            }
        };
        let mut edges = Vec::new();
        for e in g.edges() {
            let (a_in, b_in) = (g.contains(t, e.tail), g.contains(t, e.head));
            if !(a_in || b_in) {
                continue;
            }
            let (a, b) = (node(&mut uf, e.tail), node(&mut uf, e.head));
            if a != b {
                edges.push((a, b, e.weight));
            }
        }
        let total = hat + usize::from(t != ROOT);
        if total >= 2 {
            let (value, mut side) = solve_global_mincut(total, &edges)?;
            if t != ROOT && side[hat] {
                side.iter_mut().for_each(|x| *x = !*x);
            }
            let members: Vec<VertexId> = vs.iter().copied().filter(|&v| side[node_of[uf.find(v)]]).collect();
            let disconnected = value.is_zero();
            offer(&mut best, (value, p.witness(t, members), disconnected));
        }
        for &v in vs.iter().chain(&boundary) {
            uf.union(v, vs[0]);
        }
    }
    Ok(best)
}

/// Per-template candidates where a template crosses the cut: the iterated
/// template is taken once, its descendants keep their parameters.
fn cross_candidates(p: &Prepared) -> Result<Vec<Candidate>> {
    let g = &p.g;
    let mut out = Vec::new();
    for t in 0..g.templates().len() {
        let sub = induced_parametric_subgraph(g, t, true)?;
        let h = &sub.pgt;
        if h.n() < 2 {
            continue;
        }
        let w = edge_reweight(h)?;
        let edges: Vec<(usize, usize, Weight)> = h.edges().iter().zip(w).map(|(e, w)| (e.tail, e.head, w)).collect();
        let (value, mut side) = solve_global_mincut(h.n(), &edges)?;
        if let Some(hat) = sub.origin.iter().position(|o| o.is_none()) {
            if side[hat] {
                side.iter_mut().for_each(|x| *x = !*x);
            }
        }
        let members: Vec<VertexId> = (0..h.n()).filter(|&v| side[v]).filter_map(|v| sub.origin[v]).collect();
        out.push((value, p.witness(t, members), value.is_zero()));
    }
    Ok(out)
}

fn cross(p: &Prepared) -> Result<Option<Candidate>> {
    let mut best: Option<Candidate> = None;
    for c in cross_candidates(p)? {
        if best.as_ref().is_none_or(|b| c.0 < b.0) {
            best = Some(c);
        }
    }
    Ok(best)
}

/// The cross-case value computed for each template (original ids; a
/// template split into components appears once per component).
pub fn cross_values(g: &Pgt) -> Result<Vec<(TemplateId, Weight)>> {
    Ok(cross_candidates(&prepare(g)?)?.into_iter().map(|c| (c.1.template, c.0)).collect())
}

fn result(c: Candidate, case: CutCase) -> CutResult {
    CutResult { value: c.0, case, witness: c.1, disconnected: c.2 }
}

pub fn mincut_no_cross(g: &Pgt) -> Result<Option<CutResult>> {
    Ok(no_cross(&prepare(g)?)?.map(|c| result(c, CutCase::NoCross)))
}

pub fn mincut_cross(g: &Pgt) -> Result<Option<CutResult>> {
    Ok(cross(&prepare(g)?)?.map(|c| result(c, CutCase::Cross)))
}

/// Minimum of both cases; ties go to `no_cross`.
pub fn min_cut(g: &Pgt) -> Result<CutResult> {
    let p = prepare(g)?;
    let a = no_cross(&p)?.map(|c| result(c, CutCase::NoCross));
    let b = cross(&p)?.map(|c| result(c, CutCase::Cross));
    match (a, b) {
        (Some(a), Some(b)) => Ok(if b.value < a.value { b } else { a }),
        (Some(x), None) | (None, Some(x)) => Ok(x),
        (None, None) => pre("no cut candidate"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instantiate::instantiate;
    use crate::model::RawPgt;
    use crate::oracles::oracle_mincut;
    use crate::random::{random_model, ModelSpec};
    use rand::{Rng, SeedableRng};

    fn brute(n: usize, edges: &[(usize, usize, Weight)]) -> Weight {
        let mut best = Weight::Infinite;
        for mask in 1u32..(1 << (n - 1)) {
            let side: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let mut v = Weight::zero();
            for &(a, b, w) in edges {
                if side[a] != side[b] {
                    v = v + w;
                }
            }
            best = best.min(v);
        }
        best
    }

    fn cut_of(inst: &Instantiation, side: &[bool]) -> Weight {
        inst.edges.iter().filter(|e| side[e.a] != side[e.b]).fold(Weight::zero(), |a, e| a + e.weight)
    }

    #[test]
    fn stoer_wagner_small() {
        let tri = [(0, 1, Weight::one()), (1, 2, Weight::one()), (0, 2, Weight::one())];
        assert_eq!(solve_global_mincut(3, &tri).unwrap().0, Weight::int(2));
        let path = [(0, 1, Weight::one()), (1, 2, Weight::one()), (2, 3, Weight::one())];
        assert_eq!(solve_global_mincut(4, &path).unwrap().0, Weight::one());
        let (v, side) = solve_global_mincut(3, &[(0, 1, Weight::one())]).unwrap();
        assert_eq!((v, side), (Weight::zero(), vec![true, true, false]));
        assert!(solve_global_mincut(1, &[]).is_err());
    }

    #[test]
    fn stoer_wagner_matches_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut edges = Vec::new();
            for _ in 0..rng.gen_range(6..20) {
                let (a, b) = (rng.gen_range(0..8), rng.gen_range(0..8));
                edges.push((a, b, Weight::Finite(Rat::new(rng.gen_range(1..9), rng.gen_range(1..3)))));
            }
            let (v, side) = solve_global_mincut(8, &edges).unwrap();
            assert_eq!(v, brute(8, &edges));
            let cut = edges.iter().filter(|e| side[e.0] != side[e.1]).fold(Weight::zero(), |a, e| a + e.2);
            assert_eq!(cut, v);
            assert!(side.iter().any(|&x| x) && side.iter().any(|&x| !x));
        }
    }

    fn star(p: u64) -> Pgt {
        let mut r = RawPgt::new(false);
        let c = r.add_template("C", ROOT, p);
        r.add_vertex("r", ROOT);
        r.add_vertex("v", c);
        r.add_edge("r", "v", Weight::one());
        r.build().unwrap()
    }

    #[test]
    fn star_cases() {
        let g = star(5);
        assert_eq!(mincut_no_cross(&g).unwrap().unwrap().value, Weight::one());
        // the whole model reweighted gives 5, the child taken once gives 1
        assert_eq!(cross_values(&g).unwrap(), vec![(ROOT, Weight::int(5)), (1, Weight::one())]);
        assert_eq!(mincut_cross(&g).unwrap().unwrap().value, Weight::one());
        let c = min_cut(&g).unwrap();
        assert_eq!((c.value, c.case), (Weight::one(), CutCase::NoCross));
        let inst = instantiate(&g).unwrap();
        assert_eq!(cut_of(&inst, &c.witness.side(&inst)), Weight::one());
    }

    #[test]
    fn hanging_triangle() {
        let mut r = RawPgt::new(false);
        let c = r.add_template("C", ROOT, 2);
        r.add_vertex("r", ROOT);
        for v in ["x", "y", "z"] {
            r.add_vertex(v, c);
        }
        r.add_edge("x", "y", Weight::one());
        r.add_edge("y", "z", Weight::one());
        r.add_edge("x", "z", Weight::one());
        r.add_edge("r", "x", Weight::int(10));
        let g = r.build().unwrap();
        assert_eq!(mincut_no_cross(&g).unwrap().unwrap().value, Weight::int(2));
        assert_eq!(min_cut(&g).unwrap().value, Weight::int(2));
    }

    #[test]
    fn root_cycle_and_disconnected() {
        let mut r = RawPgt::new(false);
        for v in ["a", "b", "c", "d"] {
            r.add_vertex(v, ROOT);
        }
        for (a, b) in [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")] {
            r.add_edge(a, b, Weight::one());
        }
        assert_eq!(min_cut(&r.build().unwrap()).unwrap().value, Weight::int(2));

        let mut r = RawPgt::new(false);
        let c = r.add_template("C", ROOT, 3);
        r.add_vertex("r", ROOT);
        r.add_vertex("x", c);
        r.add_vertex("y", c);
        r.add_edge("x", "y", Weight::one());
        let c = min_cut(&r.build().unwrap()).unwrap();
        assert!(c.disconnected);
        assert_eq!(c.value, Weight::zero());
    }

    #[test]
    fn random_models_match_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..120 {
            let g = random_model(&mut rng, &ModelSpec::small(false));
            let inst = instantiate(&g).unwrap();
            let c = min_cut(&g).unwrap();
            assert_eq!(c.value, oracle_mincut(&inst).unwrap(), "{}", crate::format::write_pgt(&g));
            let side = c.witness.side(&inst);
            assert!(side.iter().any(|&x| x) && side.iter().any(|&x| !x));
            assert_eq!(cut_of(&inst, &side), c.value, "{}", crate::format::write_pgt(&g));
        }
    }
}
