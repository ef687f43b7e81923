//! Rooted tree patterns in directed template-acyclic models, found with
//! hierarchical color coding; also vertex-disjoint bounded-length paths.

use crate::error::{pre, PgtError, Result};
use crate::instantiate::Address;
use crate::model::{Pgt, VertexId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Largest pattern the packed colour counters can hold.
pub const MAX_PATTERN: usize = 15;

/// A rooted tree; arcs point from parent to child. Vertex 0 is the root and
/// parents precede children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreePattern {
    pub names: Vec<String>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl TreePattern {
    /// Build from a parent array in which parents precede children.
    pub fn from_parents(parent: Vec<Option<usize>>) -> Result<Self> {
        if parent.is_empty() || parent[0].is_some() {
            return Err(PgtError::Precondition("pattern needs a root at index 0".into()));
        }
        let mut children = vec![Vec::new(); parent.len()];
        for (v, p) in parent.iter().enumerate().skip(1) {
            match p {
                Some(p) if *p < v => children[*p].push(v),
                _ => return Err(PgtError::Precondition(format!("pattern vertex {v} has a bad parent"))),
            }
        }
        let names = (0..parent.len()).map(|i| format!("p{i}")).collect();
        Ok(TreePattern { names, parent, children })
    }

    pub fn single() -> Self {
        Self::from_parents(vec![None]).unwrap()
    }

    /// Directed path with `k` vertices.
    pub fn path(k: usize) -> Self {
        Self::from_parents((0..k.max(1)).map(|i| i.checked_sub(1)).collect()).unwrap()
    }

    pub fn star(leaves: usize) -> Self {
        Self::from_parents((0..=leaves).map(|i| (i > 0).then_some(0)).collect()).unwrap()
    }

    pub fn k(&self) -> usize {
        self.parent.len()
    }

    /// Vertices of the subtree rooted at `v`.
    pub fn subtree(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.children[out[i]].iter().copied());
            i += 1;
        }
        out
    }
}

/// `tree 1`, `node <id>`, `child <parent> <id>`; the root is the one node
/// without a parent.
pub fn parse_tree(text: &str) -> Result<TreePattern> {
    let perr = |line: usize, msg: String| PgtError::Parse { line, msg };
    let mut names: Vec<String> = Vec::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut header = false;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let toks: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if !header {
            if toks != ["tree", "1"] {
                return Err(perr(ln, "expected `tree 1` header".into()));
            }
            header = true;
            continue;
        }
        let mut id = |n: &str| -> usize {
            *ids.entry(n.to_string()).or_insert_with(|| {
                names.push(n.to_string());
                parent.push(None);
                names.len() - 1
            })
        };
        match toks[..] {
            ["node", a] => {
                id(a);
            }
            ["child", p, c] => {
                let (p, c) = (id(p), id(c));
                if parent[c].is_some() || p == c {
                    return Err(perr(ln, format!("node `{}` gets a second parent", names[c])));
                }
                parent[c] = Some(p);
            }
            _ => return Err(perr(ln, format!("unexpected `{}`", toks.join(" ")))),
        }
    }
    if !header {
        return Err(perr(1, "empty pattern file".into()));
    }
    let roots: Vec<usize> = (0..names.len()).filter(|&v| parent[v].is_none()).collect();
    if roots.len() != 1 {
        return Err(PgtError::Precondition(format!("pattern must have exactly one root, found {}", roots.len())));
    }
    // breadth-first renumbering from the root
    let mut kids = vec![Vec::new(); names.len()];
    for (c, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            kids[*p].push(c);
        }
    }
    let mut order = vec![roots[0]];
    let mut i = 0;
    while i < order.len() {
        order.extend(kids[order[i]].iter().copied());
        i += 1;
    }
    if order.len() != names.len() {
        return Err(PgtError::Precondition("pattern is not a tree".into()));
    }
    let mut pos = vec![0; names.len()];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut t = TreePattern::from_parents(order.iter().map(|&v| parent[v].map(|p| pos[p])).collect())?;
    t.names = order.iter().map(|&v| names[v].clone()).collect();
    Ok(t)
}

pub fn write_tree(p: &TreePattern) -> String {
    let mut s = String::from("tree 1\n");
    for n in &p.names {
        s.push_str(&format!("node {n}\n"));
    }
    for (c, par) in p.parent.iter().enumerate() {
        if let Some(par) = par {
            s.push_str(&format!("child {} {}\n", p.names[*par], p.names[c]));
        }
    }
    s
}

/// A guess of the template depth of every pattern vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelMapping {
    pub depth: Vec<usize>,
    /// `depth` modulo `k + 1`.
    pub level: Vec<usize>,
}

/// All depth assignments with the root anywhere in `0..h` and every child
/// one level up, down or on the same level; mappings that agree modulo
/// `k + 1` are kept once.
pub fn enumerate_level_mappings(pattern: &TreePattern, h: usize, k: usize) -> Vec<LevelMapping> {
    let m = k + 1;
    let n = pattern.k();
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut depth = vec![0usize; n];
    fn go(
        i: usize,
        pattern: &TreePattern,
        h: usize,
        m: usize,
        depth: &mut Vec<usize>,
        seen: &mut std::collections::HashSet<Vec<usize>>,
        out: &mut Vec<LevelMapping>,
    ) {
        if i == pattern.k() {
            let level: Vec<usize> = depth.iter().map(|d| d % m).collect();
            if seen.insert(level.clone()) {
                out.push(LevelMapping { depth: depth.clone(), level });
            }
            return;
        }
        let pd = depth[pattern.parent[i].unwrap()];
        for d in [pd.wrapping_sub(1), pd, pd + 1] {
            if d < h {
                depth[i] = d;
                go(i + 1, pattern, h, m, depth, seen, out);
            }
        }
    }
    for r in 0..h {
        depth[0] = r;
        go(1, pattern, h, m, &mut depth, &mut seen, &mut out);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    /// Colour of every template vertex; `None` where its level has no colours.
    pub color: Vec<Option<u8>>,
    /// Colours reserved for each level residue.
    pub palettes: Vec<Vec<u8>>,
}

pub fn color_code(g: &Pgt, mapping: &LevelMapping, seed: u64) -> Coloring {
    let m = mapping.level.len() + 1;
    let mut palettes = vec![Vec::new(); m];
    let mut next = 0u8;
    for r in 0..m {
        for _ in mapping.level.iter().filter(|&&l| l == r) {
            palettes[r].push(next);
            next += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let color = (0..g.n()).map(|v| palettes[g.tree().depth[g.template_of(v)] % m].choose(&mut rng).copied()).collect();
    Coloring { color, palettes }
}

/// Colours on the spine of a partial occurrence together with how often each
/// colour is used overall (four bits per colour).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entry {
    pub spine: u32,
    pub counts: u64,
}

impl Entry {
    fn single(c: u8) -> Self {
        Entry { spine: 1 << c, counts: 1 << (4 * c) }
    }
    pub fn count(&self, c: u8) -> u64 {
        (self.counts >> (4 * c)) & 15
    }
}

/// Colour sets per pattern subtree and template vertex. Subtree `(p, j)` is
/// `p` with the full subtrees of its first `j` children.
#[derive(Clone, Debug)]
pub struct ColorTable {
    pub subtrees: Vec<(usize, usize)>,
    pub sets: Vec<Vec<Vec<Entry>>>,
    full: Vec<usize>,
}

impl ColorTable {
    /// Entries for the whole pattern rooted at `x`.
    pub fn at_root(&self, x: VertexId) -> &[Entry] {
        &self.sets[self.full[0]][x]
    }
    /// Entries for the full subtree of pattern vertex `p` rooted at `x`.
    pub fn subtree_at(&self, p: usize, x: VertexId) -> &[Entry] {
        &self.sets[self.full[p]][x]
    }
}

/// Extra conditions used by the path variant.
#[derive(Clone, Debug, Default)]
struct Cons {
    sink: Option<VertexId>,
    source: Option<VertexId>,
    /// Pattern vertices whose image needs an arc into the sink.
    need_sink: Vec<bool>,
    /// Pattern vertices at which a path may stop early.
    early: Vec<bool>,
}

fn check_model(g: &Pgt) -> Result<()> {
    if !g.directed() {
        return pre("tree matching needs a directed model");
    }
    if g.has_sibling_edges() {
        return Err(PgtError::SiblingEdges("tree matching"));
    }
    if !g.is_template_acyclic() {
        return pre("tree matching needs a template-acyclic model");
    }
    Ok(())
}

pub fn match_tree_once(
    g: &Pgt,
    pattern: &TreePattern,
    mapping: &LevelMapping,
    coloring: &Coloring,
) -> Result<ColorTable> {
    check_model(g)?;
    if pattern.k() > MAX_PATTERN {
        return pre(format!("patterns are limited to {MAX_PATTERN} vertices"));
    }
    Ok(run_table(g, pattern, mapping, coloring, &Cons::default()))
}

struct Caps {
    /// caps[t][c]: most instances a colour-c vertex can have inside one
    /// instance of the lowest common ancestor with template t.
    caps: Vec<Vec<u64>>,
}

impl Caps {
    fn new(g: &Pgt, coloring: &Coloring, ncolors: usize) -> Self {
        let nt = g.templates().len();
        let mult: Vec<u128> = (0..nt).map(|t| g.multiplicity(t)).collect();
        let mut caps = vec![vec![0u64; ncolors]; nt];
        for (t, row) in caps.iter_mut().enumerate() {
            for v in 0..g.n() {
                if let Some(c) = coloring.color[v] {
                    let tv = g.template_of(v);
                    let l = g.tree().lca(t, tv);
                    let cap = (mult[tv] / mult[l]).min(15) as u64;
                    row[c as usize] = row[c as usize].max(cap);
                }
            }
        }
        Caps { caps }
    }
}

fn run_table(g: &Pgt, pattern: &TreePattern, mapping: &LevelMapping, coloring: &Coloring, cons: &Cons) -> ColorTable {
    let n = g.n();
    let k = pattern.k();
    let ncolors = k;
    let caps = Caps::new(g, coloring, ncolors);
    let m = k + 1;
    // mapped depth of each level residue, used to tell deeper colours apart
    let mut residue_depth: Vec<Option<usize>> = vec![None; m];
    for p in 0..k {
        residue_depth[mapping.level[p]] = Some(mapping.depth[p]);
    }
    let deeper: Vec<u32> = (0..k)
        .map(|p| {
            let mut mask = 0u32;
            for r in 0..m {
                if residue_depth[r].is_some_and(|d| d > mapping.depth[p]) {
                    for &c in &coloring.palettes[r] {
                        mask |= 1 << c;
                    }
                }
            }
            mask
        })
        .collect();
    let has_sink_arc: Vec<bool> = match cons.sink {
        Some(t) => {
            let mut v = vec![false; n];
            for e in g.edges() {
                if e.head == t {
                    v[e.tail] = true;
                }
            }
            v
        }
        None => vec![true; n],
    };
    let mut subtrees = Vec::new();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut sets: Vec<Vec<Vec<Entry>>> = Vec::new();
    let mut full = vec![0; k];
    let tdepth = |x: VertexId| g.tree().depth[g.template_of(x)];
    for p in (0..k).rev() {
        let nc = pattern.children[p].len();
        for j in 0..=nc {
            let mut table: Vec<Vec<Entry>> = vec![Vec::new(); n];
            if j == 0 {
                for x in 0..n {
                    let Some(c) = coloring.color[x] else { continue };
                    if tdepth(x) % m != mapping.level[p]
                        || Some(x) == cons.sink
                        || (p == 0 && cons.source.is_some_and(|s| s != x))
                        || (p != 0 && Some(x) == cons.source)
                        || (nc == 0 && cons.need_sink.get(p) == Some(&true) && !has_sink_arc[x])
                    {
                        continue;
                    }
                    table[x].push(Entry::single(c));
                }
            } else {
                let a = &sets[index[&(p, j - 1)]];
                let b = &sets[full[pattern.children[p][j - 1]]];
                for e in g.edges() {
                    let (x, y) = (e.tail, e.head);
                    if a[x].is_empty() || b[y].is_empty() {
                        continue;
                    }
                    let (tx, ty) = (g.template_of(x), g.template_of(y));
                    let case1 = g.tree().parent[ty] == Some(tx);
                    let low = if case1 { deeper[p] } else { 0 };
                    let cap = &caps.caps[tx];
                    for e1 in &a[x] {
                        'next: for e2 in &b[y] {
                            if (e1.spine & !low) & (e2.spine & !low) != 0 {
                                continue;
                            }
                            let mut counts = 0u64;
                            for c in 0..ncolors as u8 {
                                let s = e1.count(c) + e2.count(c);
                                if s > cap[c as usize] {
                                    continue 'next;
                                }
                                counts |= s << (4 * c);
                            }
                            table[x].push(Entry { spine: (e1.spine | e2.spine) & !low, counts });
                        }
                    }
                }
            }
            if j == nc && cons.early.get(p) == Some(&true) {
                for x in 0..n {
                    if let Some(c) = coloring.color[x] {
                        if tdepth(x) % m == mapping.level[p]
                            && has_sink_arc[x]
                            && Some(x) != cons.sink
                            && Some(x) != cons.source
                        {
                            table[x].push(Entry::single(c));
                        }
                    }
                }
            }
            for list in table.iter_mut() {
                list.sort_unstable();
                list.dedup();
            }
            index.insert((p, j), sets.len());
            subtrees.push((p, j));
            sets.push(table);
            if j == nc {
                full[p] = sets.len() - 1;
            }
        }
    }
    ColorTable { subtrees, sets, full }
}

/// An explicit occurrence: the instance each pattern vertex maps to; pattern
/// vertices cut off by an early path end map to `None`.
pub type Witness = Vec<Option<(VertexId, Address)>>;

/// Exhaustive search for an occurrence rooted at `x`, restricted to branches
/// the colour table allows. Index choices in child templates are made up to
/// renaming: an index already in use or the smallest unused one.
fn certify(g: &Pgt, pattern: &TreePattern, table: &ColorTable, x: VertexId, cons: &Cons) -> Option<Witness> {
    let k = pattern.k();
    let mut img: Witness = vec![None; k];
    let mut skip = vec![false; k];
    img[0] = Some((x, Address::zeros(g.chain(x).len())));
    let mut out: Vec<Vec<VertexId>> = vec![Vec::new(); g.n()];
    let mut into_sink = vec![false; g.n()];
    for e in g.edges() {
        out[e.tail].push(e.head);
        if Some(e.head) == cons.sink {
            into_sink[e.tail] = true;
        }
    }
    for o in out.iter_mut() {
        o.sort_unstable();
        o.dedup();
    }
    struct S<'a> {
        g: &'a Pgt,
        pattern: &'a TreePattern,
        table: &'a ColorTable,
        cons: &'a Cons,
        out: Vec<Vec<VertexId>>,
        into_sink: Vec<bool>,
    }
    fn go(st: &S, i: usize, img: &mut Witness, skip: &mut Vec<bool>) -> bool {
        let k = st.pattern.k();
        if i == k {
            return true;
        }
        if skip[i] {
            return go(st, i + 1, img, skip);
        }
        let q = st.pattern.parent[i].unwrap();
        if skip[q] || img[q].is_none() && q != 0 {
            skip[i] = true;
            let ok = go(st, i + 1, img, skip);
            skip[i] = false;
            return ok;
        }
        let (vq, aq) = img[q].clone().unwrap();
        let tq = st.g.template_of(vq);
        for &y in &st.out[vq] {
            if Some(y) == st.cons.sink || st.table.subtree_at(i, y).is_empty() {
                continue;
            }
            let ty = st.g.template_of(y);
            let addrs: Vec<Address> = if ty == tq {
                vec![aq.clone()]
            } else if st.g.tree().parent[tq] == Some(ty) {
                vec![Address(aq.0[..aq.0.len() - 1].to_vec())]
            } else {
                let depth = aq.0.len();
                let mut used: Vec<u64> = img
                    .iter()
                    .flatten()
                    .filter(|(w, b)| b.0.len() > depth && b.0[..depth] == aq.0[..] && st.g.chain(*w)[depth] == ty)
                    .map(|(_, b)| b.0[depth])
                    .collect();
                used.sort_unstable();
                used.dedup();
                let fresh = (0..st.g.param(ty)).find(|i| !used.contains(i));
                used.into_iter()
                    .chain(fresh)
                    .map(|i| {
                        let mut b = aq.0.clone();
                        b.push(i);
                        Address(b)
                    })
                    .collect()
            };
            for a in addrs {
                if img.iter().flatten().any(|(w, b)| *w == y && *b == a) {
                    continue;
                }
                let leaf = st.pattern.children[i].is_empty();
                let needs = st.cons.need_sink.get(i) == Some(&true);
                img[i] = Some((y, a));
                if !(leaf && needs && !st.into_sink[y]) && go(st, i + 1, img, skip) {
                    return true;
                }
                // stop the path here instead
                if !leaf && st.cons.early.get(i) == Some(&true) && st.into_sink[y] {
                    let below = st.pattern.subtree(i);
                    for &d in &below[1..] {
                        skip[d] = true;
                    }
                    if go(st, i + 1, img, skip) {
                        return true;
                    }
                    for &d in &below[1..] {
                        skip[d] = false;
                    }
                }
                img[i] = None;
            }
        }
        false
    }
    let st = S { g, pattern, table, cons, out, into_sink };
    if k == 1 {
        return Some(img);
    }
    go(&st, 1, &mut img, &mut skip).then_some(img)
}

/// Trials giving failure probability at most 2^-20 per root.
pub fn default_trials(k: usize) -> usize {
    ((k as f64).exp() * 20.0 * std::f64::consts::LN_2).ceil() as usize
}

#[derive(Clone, Debug)]
pub struct Occurrences {
    pub found: bool,
    /// Per template vertex: whether the pattern occurs rooted at its instances.
    pub per_root: Vec<bool>,
    pub witness: Vec<Option<Witness>>,
}

fn trial_seed(seed: u64, trial: usize, mapping: usize) -> u64 {
    seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (mapping as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

fn search(g: &Pgt, pattern: &TreePattern, trials: usize, seed: u64, cons: &Cons, roots: &[VertexId]) -> Occurrences {
    let n = g.n();
    let mut res = Occurrences { found: false, per_root: vec![false; n], witness: vec![None; n] };
    if (pattern.k() as u128) > g.total_instances() {
        return res;
    }
    let h = g.tree().height();
    let k = pattern.k();
    let mappings = enumerate_level_mappings(pattern, h, k);
    let tdepth = |x: VertexId| g.tree().depth[g.template_of(x)];
    for trial in 0..trials {
        for (mi, mapping) in mappings.iter().enumerate() {
            let open: Vec<VertexId> = roots
                .iter()
                .copied()
                .filter(|&x| !res.per_root[x] && tdepth(x) % (k + 1) == mapping.level[0])
                .collect();
            if open.is_empty() {
                continue;
            }
            let coloring = color_code(g, mapping, trial_seed(seed, trial, mi));
            let table = run_table(g, pattern, mapping, &coloring, cons);
            for x in open {
                if table.at_root(x).is_empty() {
                    continue;
                }
                if let Some(w) = certify(g, pattern, &table, x, cons) {
                    res.per_root[x] = true;
                    res.witness[x] = Some(w);
                    res.found = true;
                }
            }
        }
        if roots.iter().all(|&x| res.per_root[x]) {
            break;
        }
    }
    res
}

/// Whether the pattern occurs in the instantiation, per root vertex. Positive
/// answers carry a checked witness.
pub fn occurs(g: &Pgt, pattern: &TreePattern, trials: Option<usize>, seed: u64) -> Result<Occurrences> {
    check_model(g)?;
    if pattern.k() > MAX_PATTERN {
        return pre(format!("patterns are limited to {MAX_PATTERN} vertices"));
    }
    let trials = trials.unwrap_or_else(|| default_trials(pattern.k()));
    let roots: Vec<VertexId> = (0..g.n()).collect();
    Ok(search(g, pattern, trials, seed, &Cons::default(), &roots))
}

/// Like [`occurs`] for a single root vertex; stops at the first certified
/// occurrence.
pub fn occurs_at(
    g: &Pgt,
    pattern: &TreePattern,
    root: VertexId,
    trials: Option<usize>,
    seed: u64,
) -> Result<Option<Witness>> {
    check_model(g)?;
    if pattern.k() > MAX_PATTERN {
        return pre(format!("patterns are limited to {MAX_PATTERN} vertices"));
    }
    if root >= g.n() {
        return pre("root vertex out of range");
    }
    let trials = trials.unwrap_or_else(|| default_trials(pattern.k()));
    Ok(search(g, pattern, trials, seed, &Cons::default(), &[root]).witness[root].take())
}

pub use crate::oracles::PathMode;

/// Root plus `arms` paths of `len` vertices each.
pub fn spider(arms: usize, len: usize) -> TreePattern {
    let mut parent = vec![None];
    for _ in 0..arms {
        let mut prev = 0;
        for _ in 0..len {
            parent.push(Some(prev));
            prev = parent.len() - 1;
        }
    }
    TreePattern::from_parents(parent).unwrap()
}

/// `k` vertex-disjoint paths from `s` to `t` with exactly (or at most) `l`
/// edges, sharing only their ends. Both ends must lie in the root template.
#[allow(clippy::too_many_arguments)]
pub fn disjoint_paths(
    g: &Pgt,
    s: VertexId,
    t: VertexId,
    k: usize,
    l: usize,
    mode: PathMode,
    trials: Option<usize>,
    seed: u64,
) -> Result<bool> {
    check_model(g)?;
    if s == t {
        return pre("source and sink coincide");
    }
    if g.template_of(s) != crate::model::ROOT || g.template_of(t) != crate::model::ROOT {
        return pre("source and sink must belong to the root template");
    }
    let direct = g.edges().iter().filter(|e| e.tail == s && e.head == t).count();
    let from_direct = match mode {
        PathMode::Exactly if l == 1 => direct,
        PathMode::AtMost if l >= 1 => direct,
        _ => 0,
    };
    if from_direct >= k {
        return Ok(true);
    }
    if l < 2 {
        return Ok(false);
    }
    let need = k - from_direct;
    let pattern = spider(need, l - 1);
    if pattern.k() > MAX_PATTERN {
        return Err(PgtError::StateBudget(pattern.k()));
    }
    let leaves: Vec<bool> = (0..pattern.k()).map(|p| pattern.children[p].is_empty() && p != 0).collect();
    let cons = Cons {
        sink: Some(t),
        source: Some(s),
        need_sink: leaves,
        early: (0..pattern.k()).map(|p| p != 0 && mode == PathMode::AtMost).collect(),
    };
    let trials = trials.unwrap_or_else(|| default_trials(pattern.k()));
    Ok(search(g, &pattern, trials, seed, &cons, &[s]).per_root[s])
}

/// Checks that a witness is an occurrence in the instantiation.
pub fn witness_is_valid(g: &Pgt, pattern: &TreePattern, w: &Witness) -> bool {
    let inst = match crate::instantiate::instantiate(g) {
        Ok(i) => i,
        Err(_) => return false,
    };
    let ids: Vec<Option<usize>> = w.iter().map(|x| x.as_ref().and_then(|(v, a)| inst.find(*v, a))).collect();
    let mut seen = std::collections::HashSet::new();
    for (p, id) in ids.iter().enumerate() {
        let Some(id) = id else {
            if w[p].is_some() {
                return false;
            }
            continue;
        };
        if !seen.insert(*id) {
            return false;
        }
        if let Some(q) = pattern.parent[p] {
            let Some(pid) = ids[q] else { return false };
            if !inst.edges.iter().any(|e| e.a == pid && e.b == *id) {
                return false;
            }
        }
    }
    true
}

/// Vertex `p` of `pattern` and the template of its image, for reports.
pub fn describe_witness(g: &Pgt, pattern: &TreePattern, w: &Witness) -> Vec<String> {
    w.iter()
        .enumerate()
        .filter_map(|(p, x)| x.as_ref().map(|(v, a)| format!("{} -> {}@{}", pattern.names[p], g.name(*v), a)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instantiate::instantiate;
    use crate::model::fixtures::fig1;
    use crate::model::{RawPgt, ROOT};
    use crate::oracles::{oracle_disjoint_paths, oracle_tree_occurs};
    use crate::random::{random_model_where, ModelSpec};
    use crate::weight::Weight;
    use rand::Rng;

    fn star_model(p: u64) -> Pgt {
        let mut r = RawPgt::new(true);
        let c = r.add_template("C", ROOT, p);
        r.add_vertex("s", ROOT);
        r.add_vertex("v", c);
        r.add_edge("s", "v", Weight::one());
        r.build().unwrap()
    }

    #[test]
    fn mapping_counts() {
        assert_eq!(enumerate_level_mappings(&TreePattern::single(), 2, 1).len(), 2);
        let m = enumerate_level_mappings(&TreePattern::path(3), 2, 3);
        assert!(m.len() <= 18);
        assert_eq!(enumerate_level_mappings(&TreePattern::path(2), 1, 2).len(), 1);
        for p in [TreePattern::path(4), TreePattern::star(3), spider(2, 2)] {
            for h in 1..5 {
                let ms = enumerate_level_mappings(&p, h, p.k());
                assert!(ms.len() <= h * 3usize.pow(p.k() as u32 - 1));
                for m in &ms {
                    for c in 1..p.k() {
                        let q = p.parent[c].unwrap();
                        assert!(m.depth[c].abs_diff(m.depth[q]) <= 1);
                    }
                }
            }
        }
    }

    #[test]
    fn colorings() {
        let g = fig1();
        let pat = TreePattern::path(3);
        for m in enumerate_level_mappings(&pat, g.tree().height(), 3) {
            let c = color_code(&g, &m, 5);
            assert_eq!(c, color_code(&g, &m, 5));
            assert_eq!(c.palettes.iter().map(|p| p.len()).sum::<usize>(), 3);
            for v in 0..g.n() {
                let r = g.tree().depth[g.template_of(v)] % 4;
                match c.color[v] {
                    Some(x) => assert!(c.palettes[r].contains(&x)),
                    None => assert!(c.palettes[r].is_empty()),
                }
            }
        }
        let one = enumerate_level_mappings(&TreePattern::single(), 1, 1);
        let c = color_code(&g, &one[0], 1);
        assert!(g.members(ROOT).iter().all(|&v| c.color[v] == Some(0)));
    }

    #[test]
    fn table_examples() {
        let pat = TreePattern::single();
        let g = fig1();
        let m = &enumerate_level_mappings(&pat, 1, 1)[0];
        let col = color_code(&g, m, 3);
        let t = match_tree_once(&g, &pat, m, &col).unwrap();
        for x in g.members(ROOT) {
            assert_eq!(t.at_root(x), &[Entry::single(col.color[x].unwrap())]);
        }
        let star = TreePattern::star(2);
        for (p, nonempty) in [(2, true), (1, false)] {
            let g = star_model(p);
            let mut any = false;
            for m in enumerate_level_mappings(&star, 2, 3) {
                for seed in 0..20 {
                    let col = color_code(&g, &m, seed);
                    let t = match_tree_once(&g, &star, &m, &col).unwrap();
                    any |= !t.at_root(0).is_empty();
                    // spine sets never hold colours deeper than the root
                    for (i, &(q, _)) in t.subtrees.iter().enumerate() {
                        for x in 0..g.n() {
                            for e in &t.sets[i][x] {
                                for c in 0..3u8 {
                                    if e.spine >> c & 1 == 1 {
                                        let r = col.palettes.iter().position(|pl| pl.contains(&c)).unwrap();
                                        let d = (0..3).find(|&v| m.level[v] == r).map(|v| m.depth[v]).unwrap();
                                        assert!(d <= m.depth[q]);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            assert_eq!(any, nonempty);
        }
    }

    #[test]
    fn occurs_examples() {
        let g = star_model(2);
        let r = occurs(&g, &TreePattern::star(2), None, 1).unwrap();
        assert!(r.found && r.per_root[0]);
        assert!(witness_is_valid(&g, &TreePattern::star(2), r.witness[0].as_ref().unwrap()));
        assert!(!occurs(&star_model(1), &TreePattern::star(2), None, 1).unwrap().found);
        assert!(!occurs(&g, &TreePattern::path(4), None, 1).unwrap().found);
        let f = fig1();
        let inst = instantiate(&f).unwrap();
        let longest =
            (1..8).rev().find(|&k| (0..f.n()).any(|v| oracle_tree_occurs(&inst, &TreePattern::path(k), v))).unwrap();
        let r = occurs(&f, &TreePattern::path(longest + 1), Some(300), 2).unwrap();
        assert!(!r.found);
        let r = occurs(&f, &TreePattern::path(longest), None, 2).unwrap();
        assert!(r.found);
    }

    fn small_dag() -> ModelSpec {
        ModelSpec { max_vertices: 7, max_edges: 12, max_param: 3, ..ModelSpec::small(true) }
    }

    fn random_pattern<R: Rng>(rng: &mut R, k: usize) -> TreePattern {
        TreePattern::from_parents((0..k).map(|i| (i > 0).then(|| rng.gen_range(0..i))).collect()).unwrap()
    }

    #[test]
    fn occurs_matches_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let mut positives = 0;
        let mut rounds = 0;
        while rounds < 60 {
            let Some(g) = random_model_where(&mut rng, &small_dag(), 50, |g| g.is_template_acyclic()) else { continue };
            let inst = instantiate(&g).unwrap();
            if inst.len() > 60 {
                continue;
            }
            rounds += 1;
            let k = rng.gen_range(1..=4);
            let pat = random_pattern(&mut rng, k);
            let r = occurs(&g, &pat, Some(250), rounds as u64).unwrap();
            for x in 0..g.n() {
                let want = oracle_tree_occurs(&inst, &pat, x);
                assert_eq!(
                    r.per_root[x],
                    want,
                    "vertex {x} pattern {:?}\n{}",
                    pat.parent,
                    crate::format::write_pgt(&g)
                );
                if let Some(w) = &r.witness[x] {
                    assert!(witness_is_valid(&g, &pat, w));
                    positives += 1;
                }
            }
        }
        assert!(positives > 50);
    }

    #[test]
    fn path_examples() {
        let build = |p: u64| {
            let mut r = RawPgt::new(true);
            let c = r.add_template("C", ROOT, p);
            r.add_vertex("s", ROOT);
            r.add_vertex("t", ROOT);
            r.add_vertex("v", c);
            r.add_edge("s", "v", Weight::one());
            r.add_edge("v", "t", Weight::one());
            r.build().unwrap()
        };
        assert!(disjoint_paths(&build(2), 0, 1, 2, 2, PathMode::Exactly, None, 1).unwrap());
        assert!(!disjoint_paths(&build(1), 0, 1, 2, 2, PathMode::Exactly, None, 1).unwrap());
        let mut r = RawPgt::new(true);
        r.add_vertex("s", ROOT);
        r.add_vertex("t", ROOT);
        r.add_edge("s", "t", Weight::one());
        let g = r.build().unwrap();
        assert!(disjoint_paths(&g, 0, 1, 1, 1, PathMode::Exactly, None, 1).unwrap());
        assert!(disjoint_paths(&g, 0, 1, 1, 1, PathMode::AtMost, None, 1).unwrap());
        assert!(disjoint_paths(&g, 0, 1, 1, 3, PathMode::AtMost, None, 1).unwrap());
        assert!(!disjoint_paths(&g, 0, 1, 1, 3, PathMode::Exactly, None, 1).unwrap());
        assert!(!disjoint_paths(&g, 0, 1, 2, 1, PathMode::Exactly, None, 1).unwrap());

        // a short path with no room for the unused tail of the pattern
        let mut r = RawPgt::new(true);
        for v in ["s", "t", "v"] {
            r.add_vertex(v, ROOT);
        }
        r.add_edge("s", "v", Weight::one());
        r.add_edge("v", "t", Weight::one());
        r.add_edge("t", "s", Weight::one());
        let g = r.build().unwrap();
        assert!(disjoint_paths(&g, 0, 1, 1, 3, PathMode::AtMost, None, 1).unwrap());
        assert!(!disjoint_paths(&g, 0, 1, 1, 3, PathMode::Exactly, None, 1).unwrap());
    }

    #[test]
    fn paths_match_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(32);
        let mut rounds = 0;
        let mut yes = 0;
        while rounds < 60 {
            let Some(g) = random_model_where(&mut rng, &small_dag(), 50, |g| {
                g.is_template_acyclic() && g.members(ROOT).len() >= 2
            }) else {
                continue;
            };
            let inst = instantiate(&g).unwrap();
            if inst.len() > 60 {
                continue;
            }
            rounds += 1;
            let roots = g.members(ROOT);
            let (s, t) = (roots[0], roots[1]);
            let k = rng.gen_range(1..=2);
            let l = rng.gen_range(1..=3);
            let mode = if rng.gen_bool(0.5) { PathMode::Exactly } else { PathMode::AtMost };
            let got = disjoint_paths(&g, s, t, k, l, mode, Some(300), rounds as u64).unwrap();
            let (si, ti) = (inst.find(s, &Address::root()).unwrap(), inst.find(t, &Address::root()).unwrap());
            assert_eq!(
                got,
                oracle_disjoint_paths(&inst, si, ti, k, l, mode),
                "{k} {l} {mode:?}\n{}",
                crate::format::write_pgt(&g)
            );
            yes += got as usize;
        }
        assert!(yes > 5);
    }

    #[test]
    fn rejects_unsupported_models() {
        let mut r = RawPgt::new(true);
        let c = r.add_template("C", ROOT, 3);
        r.add_vertex("u", c);
        r.add_sedge("u", "u", Weight::one(), 1);
        assert!(occurs(&r.build().unwrap(), &TreePattern::single(), None, 0).is_err());
        let mut r = RawPgt::new(false);
        r.add_vertex("u", ROOT);
        assert!(occurs(&r.build().unwrap(), &TreePattern::single(), None, 0).is_err());
    }
}
