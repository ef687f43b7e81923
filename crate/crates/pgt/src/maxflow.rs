//! Exact maximum flow (Dinic over rationals) and the template flow algorithms.

use crate::error::{pre, PgtError, Result};
use crate::instantiate::Address;
use crate::model::{Pgt, VertexId};
use crate::transforms::{edge_reweight, upwards_partial_instantiation_at};
use crate::weight::{finite_capacities, rat, Rat, Weight};
use num_traits::Zero;
use std::collections::VecDeque;

/// A plain weighted graph; undirected edges carry capacity both ways.
#[derive(Clone, Debug)]
pub struct Network {
    pub n: usize,
    pub directed: bool,
    pub edges: Vec<(usize, usize, Weight)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowResult {
    pub value: Weight,
    /// Source side of a minimum cut.
    pub source_side: Vec<bool>,
}

impl Network {
    pub fn new(n: usize, directed: bool) -> Self {
        Network { n, directed, edges: Vec::new() }
    }

    pub fn add(&mut self, a: usize, b: usize, w: Weight) {
        self.edges.push((a, b, w));
    }

    /// Total weight of edges leaving `side` (both directions if undirected).
    pub fn cut_value(&self, side: &[bool]) -> Weight {
        let mut total = Weight::zero();
        for &(a, b, w) in &self.edges {
            if (side[a] && !side[b]) || (!self.directed && side[b] && !side[a]) {
                total = total + w;
            }
        }
        total
    }
}

struct Dinic {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<Rat>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic { head: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new() }
    }

    fn arc(&mut self, a: usize, b: usize, c: Rat, back: Rat) {
        self.head[a].push(self.to.len());
        self.to.push(b);
        self.cap.push(c);
        self.head[b].push(self.to.len());
        self.to.push(a);
        self.cap.push(back);
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut lvl = vec![usize::MAX; self.head.len()];
        lvl[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &e in &self.head[v] {
                let w = self.to[e];
                if lvl[w] == usize::MAX && self.cap[e] > Rat::zero() {
                    lvl[w] = lvl[v] + 1;
                    q.push_back(w);
                }
            }
        }
        lvl
    }

    fn push(&mut self, v: usize, t: usize, f: Rat, lvl: &[usize], it: &mut [usize]) -> Rat {
        if v == t {
            return f;
        }
        while it[v] < self.head[v].len() {
            let e = self.head[v][it[v]];
            let w = self.to[e];
            if self.cap[e] > Rat::zero() && lvl[w] == lvl[v] + 1 {
                let g = self.push(w, t, f.min(self.cap[e]), lvl, it);
                if g > Rat::zero() {
                    self.cap[e] -= g;
                    self.cap[e ^ 1] += g;
                    return g;
                }
            }
            it[v] += 1;
        }
        Rat::zero()
    }

    fn run(&mut self, s: usize, t: usize, limit: Rat) -> Rat {
        let mut flow = Rat::zero();
        loop {
            let lvl = self.levels(s);
            if lvl[t] == usize::MAX {
                return flow;
            }
            let mut it = vec![0; self.head.len()];
            loop {
                let f = self.push(s, t, limit, &lvl, &mut it);
                if f.is_zero() {
                    break;
                }
                flow += f;
            }
        }
    }
}

pub fn solve_max_flow(net: &Network, s: usize, t: usize) -> Result<FlowResult> {
    if s == t {
        return pre("source and sink coincide");
    }
    let ws: Vec<Weight> = net.edges.iter().map(|e| e.2).collect();
    let (caps, big) = finite_capacities(&ws);
    let mut d = Dinic::new(net.n);
    for (&(a, b, _), &c) in net.edges.iter().zip(&caps) {
        if a == b {
            continue;
        }
        d.arc(a, b, c, if net.directed { Rat::zero() } else { c });
    }
    let limit = big * rat(net.edges.len() as i128 + 1);
    let flow = d.run(s, t, limit);
    let lvl = d.levels(s);
    let source_side: Vec<bool> = lvl.iter().map(|&l| l != usize::MAX).collect();
    let value = if flow >= big { Weight::Infinite } else { Weight::Finite(flow) };
    Ok(FlowResult { value, source_side })
}

fn reject_siblings(g: &Pgt, what: &'static str) -> Result<()> {
    if g.has_sibling_edges() {
        return Err(PgtError::SiblingEdges(what));
    }
    Ok(())
}

/// Reweighted template graph as a network over the template vertices.
pub fn reweighted_network(g: &Pgt) -> Result<Network> {
    let w = edge_reweight(g)?;
    let mut net = Network::new(g.n(), g.directed());
    for (e, w) in g.edges().iter().zip(w) {
        net.add(e.tail, e.head, w);
    }
    Ok(net)
}

/// Max flow from all instances of `s` to all instances of `t`.
pub fn max_all_st_flow(g: &Pgt, s: VertexId, t: VertexId) -> Result<FlowResult> {
    reject_siblings(g, "max_all_st_flow")?;
    solve_max_flow(&reweighted_network(g)?, s, t)
}

/// Max flow between one addressed instance of `s` and one of `t`.
pub fn max_single_st_flow(g: &Pgt, s: VertexId, s_addr: &Address, t: VertexId, t_addr: &Address) -> Result<FlowResult> {
    reject_siblings(g, "max_single_st_flow")?;
    if !s_addr.is_valid_for(g, s) || !t_addr.is_valid_for(g, t) {
        return pre("invalid instance address");
    }
    if s == t && s_addr == t_addr {
        return pre("source and sink coincide");
    }
    if g.directed() && g.is_template_acyclic() && !share_lca_instance(g, s, s_addr, t, t_addr) {
        return Ok(FlowResult { value: Weight::zero(), source_side: vec![false; g.n()] });
    }
    let a = upwards_partial_instantiation_at(g, s, s_addr)?;
    let (t2, t2_addr) = a.map_instance(t, t_addr);
    let b = upwards_partial_instantiation_at(&a.pgt, t2, &t2_addr)?;
    let s3 = b.map_instance(a.vertex_of_query, &Address::root()).0;
    let t3 = b.vertex_of_query;
    let net = reweighted_network(&b.pgt)?;
    solve_max_flow(&net, s3, t3)
}

fn share_lca_instance(g: &Pgt, s: VertexId, sa: &Address, t: VertexId, ta: &Address) -> bool {
    let l = g.tree().lca(g.template_of(s), g.template_of(t));
    let k = g.tree().chain(l).len();
    sa.0[..k] == ta.0[..k]
}
