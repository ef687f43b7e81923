//! Tree decompositions of plain graphs: the `.td` format, validation, and
//! construction (exact branch and bound for small graphs, min-fill otherwise).

use crate::error::{pre, PgtError, Result};
use crate::graph::Graph;
use std::collections::HashMap;

/// Rooted tree of bags; each node has at most two children.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
    pub root: usize,
}

impl TreeDecomposition {
    /// Largest bag size minus one.
    pub fn width(&self) -> usize {
        self.bags.iter().map(|b| b.len()).max().unwrap_or(0).saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut p = vec![None; self.bags.len()];
        for (a, cs) in self.children.iter().enumerate() {
            for &c in cs {
                p[c] = Some(a);
            }
        }
        p
    }
}

/// `td 1`, `bag <id> v1 v2 ...`, `link <parent> <child>`; vertices by name.
pub fn parse_td(text: &str, g: &Graph) -> Result<TreeDecomposition> {
    let names: HashMap<&str, usize> = g.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut bags = Vec::new();
    let mut links = Vec::new();
    let mut header = false;
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let toks: Vec<&str> = line.split('#').next().unwrap_or("").split_whitespace().collect();
        let err = |msg: String| PgtError::Parse { line: ln, msg };
        match toks.as_slice() {
            [] => {}
            ["td", "1"] if !header => header = true,
            _ if !header => return Err(err("expected `td 1` header".into())),
            ["bag", id, vs @ ..] => {
                if ids.insert(id.to_string(), bags.len()).is_some() {
                    return Err(err(format!("duplicate bag `{id}`")));
                }
                let mut bag = Vec::new();
                for v in vs {
                    bag.push(*names.get(v).ok_or_else(|| err(format!("unknown vertex `{v}`")))?);
                }
                bag.sort_unstable();
                bag.dedup();
                bags.push(bag);
            }
            ["link", a, b] => links.push((ln, a.to_string(), b.to_string())),
            _ => return Err(err(format!("unexpected `{}`", toks.join(" ")))),
        }
    }
    if bags.is_empty() {
        return Err(PgtError::Parse { line: 1, msg: "no bags".into() });
    }
    let mut children = vec![Vec::new(); bags.len()];
    let mut has_parent = vec![false; bags.len()];
    for (ln, a, b) in links {
        let look = |x: &str| ids.get(x).copied().ok_or(PgtError::Parse { line: ln, msg: format!("unknown bag `{x}`") });
        let (pa, ch) = (look(&a)?, look(&b)?);
        if has_parent[ch] {
            return Err(PgtError::Parse { line: ln, msg: format!("bag `{b}` has two parents") });
        }
        has_parent[ch] = true;
        children[pa].push(ch);
    }
    let roots: Vec<usize> = (0..bags.len()).filter(|&i| !has_parent[i]).collect();
    if roots.len() != 1 {
        return Err(PgtError::Parse { line: 1, msg: format!("expected one root bag, found {}", roots.len()) });
    }
    Ok(TreeDecomposition { bags, children, root: roots[0] })
}

pub fn write_td(dec: &TreeDecomposition, g: &Graph) -> String {
    let mut s = String::from("td 1\n");
    for (i, b) in dec.bags.iter().enumerate() {
        s.push_str(&format!("bag b{i}"));
        for &v in b {
            s.push(' ');
            s.push_str(&g.names[v]);
        }
        s.push('\n');
    }
    for (i, cs) in dec.children.iter().enumerate() {
        for c in cs {
            s.push_str(&format!("link b{i} b{c}\n"));
        }
    }
    s
}

#[derive(Clone, Debug, Default)]
pub struct DecompositionReport {
    pub violations: Vec<String>,
}

impl DecompositionReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_decomposition(g: &Graph, dec: &TreeDecomposition) -> DecompositionReport {
    let mut v = Vec::new();
    let k = dec.bags.len();
    let parents = dec.parents();
    // tree shape: every node reached once from the root
    let mut seen = vec![0usize; k];
    let mut stack = vec![dec.root];
    while let Some(a) = stack.pop() {
        if a >= k {
            v.push(format!("node {a} does not exist"));
            continue;
        }
        seen[a] += 1;
        if seen[a] > 1 {
            v.push(format!("node {a} reached twice"));
            continue;
        }
        if dec.children[a].len() > 2 {
            v.push(format!("node {a} has {} children", dec.children[a].len()));
        }
        stack.extend(&dec.children[a]);
    }
    for (a, &s) in seen.iter().enumerate() {
        if s == 0 {
            v.push(format!("node {a} is not connected to the root"));
        }
    }
    for x in 0..g.n() {
        let holders: Vec<usize> = (0..k).filter(|&a| dec.bags[a].contains(&x)).collect();
        if holders.is_empty() {
            v.push(format!("vertex {} is in no bag", g.names[x]));
            continue;
        }
        // connected iff exactly one holder has a parent outside the holders
        let tops = holders.iter().filter(|&&a| parents[a].is_none_or(|p| !dec.bags[p].contains(&x))).count();
        if tops != 1 {
            v.push(format!("bags holding {} are not connected", g.names[x]));
        }
    }
    for &(a, b) in &g.edges {
        if !dec.bags.iter().any(|bag| bag.contains(&a) && bag.contains(&b)) {
            v.push(format!("edge {}-{} is in no bag", g.names[a], g.names[b]));
        }
    }
    DecompositionReport { violations: v }
}

fn masks(g: &Graph) -> Vec<u64> {
    let mut adj = vec![0u64; g.n()];
    for &(a, b) in &g.edges {
        if a != b {
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
        }
    }
    adj
}

fn eliminate(adj: &mut [u64], v: usize, alive: u64) -> usize {
    let nb = adj[v] & alive & !(1 << v);
    let mut rest = nb;
    while rest != 0 {
        let u = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        adj[u] |= nb & !(1 << u);
    }
    nb.count_ones() as usize
}

/// Min-fill elimination order and its width.
pub fn greedy_order(g: &Graph) -> (Vec<usize>, usize) {
    let n = g.n();
    assert!(n <= 63, "bitmask construction is limited to 63 vertices");
    let mut adj = masks(g);
    let mut alive: u64 = (1u64 << n) - 1;
    let mut order = Vec::new();
    let mut width = 0;
    while alive != 0 {
        let mut best = (usize::MAX, usize::MAX, 0);
        let mut rest = alive;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let nb = adj[v] & alive & !(1 << v);
            let mut fill = 0;
            let mut it = nb;
            while it != 0 {
                let u = it.trailing_zeros() as usize;
                it &= it - 1;
                fill += (nb & !adj[u] & !(1 << u)).count_ones() as usize;
            }
            let key = (fill, nb.count_ones() as usize, v);
            if key < best {
                best = key;
            }
        }
        let v = best.2;
        width = width.max(eliminate(&mut adj, v, alive));
        alive &= !(1 << v);
        order.push(v);
    }
    (order, width)
}

struct Bnb {
    best: usize,
    best_order: Vec<usize>,
    memo: HashMap<u64, usize>,
}

impl Bnb {
    fn go(&mut self, adj: &[u64], alive: u64, width: usize, order: &mut Vec<usize>) {
        let left = alive.count_ones() as usize;
        if width >= self.best {
            return;
        }
        if left <= width + 1 {
            // any completion stays within `width`
            let mut full = order.clone();
            let mut rest = alive;
            while rest != 0 {
                full.push(rest.trailing_zeros() as usize);
                rest &= rest - 1;
            }
            self.best = width;
            self.best_order = full;
            return;
        }
        if self.memo.get(&alive).is_some_and(|&w| w <= width) {
            return;
        }
        self.memo.insert(alive, width);
        let mut min_deg = usize::MAX;
        let mut simplicial = None;
        let mut rest = alive;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let nb = adj[v] & alive & !(1 << v);
            min_deg = min_deg.min(nb.count_ones() as usize);
            let mut clique = true;
            let mut it = nb;
            while it != 0 && clique {
                let u = it.trailing_zeros() as usize;
                it &= it - 1;
                clique = nb & !(1 << u) & !adj[u] == 0;
            }
            if clique && simplicial.is_none() {
                simplicial = Some(v);
            }
        }
        if width.max(min_deg) >= self.best {
            return;
        }
        let cands: Vec<usize> = match simplicial {
            Some(v) => vec![v],
            None => {
                let mut c = Vec::new();
                let mut rest = alive;
                while rest != 0 {
                    c.push(rest.trailing_zeros() as usize);
                    rest &= rest - 1;
                }
                c
            }
        };
        for v in cands {
            let mut a2 = adj.to_vec();
            let d = eliminate(&mut a2, v, alive);
            order.push(v);
            self.go(&a2, alive & !(1 << v), width.max(d), order);
            order.pop();
        }
    }
}

/// Exact treewidth and an optimal elimination order (graphs up to 20 vertices).
pub fn exact_order(g: &Graph) -> Result<(Vec<usize>, usize)> {
    if g.n() > 20 {
        return pre("exact treewidth is limited to 20 vertices");
    }
    let (order, width) = greedy_order(g);
    let mut b = Bnb { best: width, best_order: order, memo: HashMap::new() };
    let alive = if g.n() == 0 { 0 } else { (1u64 << g.n()) - 1 };
    b.go(&masks(g), alive, 0, &mut Vec::new());
    Ok((b.best_order, b.best))
}

/// Decomposition from an elimination order, made binary by chaining copies.
pub fn from_elimination_order(g: &Graph, order: &[usize]) -> TreeDecomposition {
    let n = g.n();
    if n == 0 {
        return TreeDecomposition { bags: vec![Vec::new()], children: vec![Vec::new()], root: 0 };
    }
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut adj = masks(g);
    let mut alive: u64 = (1u64 << n) - 1;
    let mut bags = Vec::new();
    let mut parent = vec![None; n];
    for &v in order {
        let nb = adj[v] & alive & !(1 << v);
        let mut bag = vec![v];
        let mut it = nb;
        while it != 0 {
            bag.push(it.trailing_zeros() as usize);
            it &= it - 1;
        }
        parent[pos[v]] = bag[1..].iter().map(|&u| pos[u]).min();
        bag.sort_unstable();
        bags.push(bag);
        eliminate(&mut adj, v, alive);
        alive &= !(1 << v);
    }
    // several components: hang earlier roots under the last node
    for p in parent.iter_mut().take(n - 1) {
        if p.is_none() {
            *p = Some(n - 1);
        }
    }
    let mut children = vec![Vec::new(); n];
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(i);
        }
    }
    binarize(TreeDecomposition { bags, children, root: n - 1 })
}

fn binarize(mut d: TreeDecomposition) -> TreeDecomposition {
    let mut a = 0;
    while a < d.bags.len() {
        while d.children[a].len() > 2 {
            let moved = d.children[a].split_off(1);
            let copy = d.bags.len();
            d.bags.push(d.bags[a].clone());
            d.children.push(moved);
            d.children[a].push(copy);
        }
        a += 1;
    }
    d
}

/// Exact for at most 20 vertices unless the min-fill width already meets
/// `width_hint`; min-fill beyond that.
pub fn tree_decomposition(g: &Graph, width_hint: Option<usize>) -> Result<TreeDecomposition> {
    if g.n() > 63 {
        return pre("tree decompositions are limited to 63 vertices");
    }
    let (order, width) = greedy_order(g);
    let order = if g.n() <= 20 && width_hint.is_none_or(|h| width > h) { exact_order(g)?.0 } else { order };
    let dec = from_elimination_order(g, &order);
    let report = validate_decomposition(g, &dec);
    debug_assert!(report.is_ok(), "{:?}", report.violations);
    Ok(dec)
}
