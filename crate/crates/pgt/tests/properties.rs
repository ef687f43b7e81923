//! Property tests over seeded random models.

use pgt::canon::{canonical_form, graph_isomorphic, LabeledGraph};
use pgt::discovery::{discover, model_beta, DiscoveryConfig};
use pgt::graph::Graph;
use pgt::instance_iso::instance_iso_decide;
use pgt::instantiate::{instantiate, Address, InstEdge, Instantiation};
use pgt::maxflow::{max_all_st_flow, reweighted_network};
use pgt::mincut::min_cut;
use pgt::oracles::{oracle_components, oracle_mincut, oracle_same_instantiation};
use pgt::random::{random_graph, random_model, ModelSpec};
use pgt::siblings::{build_jump_graph, connected_components, shrink};
use pgt::transforms::{edge_reweight, upwards_partial_instantiation};
use pgt::treedec::{tree_decomposition, validate_decomposition};
use pgt::treematch::{color_code, enumerate_level_mappings, occurs, witness_is_valid, TreePattern};
use pgt::{Pgt, ROOT};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(seed: u64, spec: &ModelSpec) -> Pgt {
    random_model(&mut ChaCha8Rng::seed_from_u64(seed), spec)
}

fn with_param(g: &Pgt, t: usize, p: u64) -> Pgt {
    let mut raw = g.to_raw();
    raw.templates[t].param = p;
    Pgt::from_raw(raw).unwrap()
}

fn pattern(seed: u64, k: usize) -> TreePattern {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    TreePattern::from_parents((0..k).map(|i| (i > 0).then(|| rng.gen_range(0..i))).collect()).unwrap()
}

/// Replicate leaf templates into their parents one at a time, picking the
/// next leaf at random.
fn leaf_first(g: &Pgt, seed: u64) -> Instantiation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut at: Vec<usize> = (0..g.n()).map(|v| g.template_of(v)).collect();
    let mut edges: Vec<(usize, usize, pgt::Weight)> = g.edges().iter().map(|e| (e.tail, e.head, e.weight)).collect();
    let mut alive: Vec<usize> = (1..g.templates().len()).collect();
    while !alive.is_empty() {
        let leaves: Vec<usize> =
            alive.iter().copied().filter(|&t| !alive.iter().any(|&c| g.tree().parent[c] == Some(t))).collect();
        let t = leaves[rng.gen_range(0..leaves.len())];
        alive.retain(|&x| x != t);
        let inside: Vec<usize> = (0..at.len()).filter(|&v| at[v] == t).collect();
        let parent = g.tree().parent[t].unwrap();
        let mut copy_of = vec![Vec::new(); at.len()];
        for &v in &inside {
            copy_of[v].push(v);
            for _ in 1..g.param(t) {
                copy_of[v].push(at.len());
                at.push(t);
            }
        }
        let mut next = Vec::new();
        for &(a, b, w) in &edges {
            let (ia, ib) = (!copy_of[a].is_empty(), !copy_of[b].is_empty());
            if !ia && !ib {
                next.push((a, b, w));
                continue;
            }
            for i in 0..g.param(t) as usize {
                let pick = |v: usize, inside: bool| if inside { copy_of[v][i] } else { v };
                next.push((pick(a, ia), pick(b, ib), w));
            }
        }
        edges = next;
        for v in 0..at.len() {
            if at[v] == t {
                at[v] = parent;
            }
        }
    }
    let vertices = (0..at.len()).map(|i| (0, Address(vec![i as u64]))).collect();
    let edges = edges.into_iter().map(|(a, b, weight)| InstEdge { a, b, weight }).collect();
    Instantiation::new(g.directed(), vertices, edges)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn replication_order_does_not_matter(seed in any::<u64>(), order in any::<u64>(), directed in any::<bool>()) {
        let g = model(seed, &ModelSpec::small(directed));
        prop_assume!(g.total_instances() <= 60);
        let a = LabeledGraph::from_instantiation(&instantiate(&g).unwrap(), true);
        let b = LabeledGraph::from_instantiation(&leaf_first(&g, order), true);
        prop_assert_eq!(canonical_form(&a), canonical_form(&b));
    }

    #[test]
    fn instance_counts_and_addresses(seed in any::<u64>(), directed in any::<bool>()) {
        let g = model(seed, &ModelSpec::small(directed));
        let inst = instantiate(&g).unwrap();
        let total: u128 = (0..g.n()).map(|v| g.instance_count(v)).sum();
        prop_assert_eq!(total, inst.len() as u128);
        prop_assert_eq!(total, g.total_instances());
        for e in &inst.edges {
            let (a, b) = (&inst.vertices[e.a].1 .0, &inst.vertices[e.b].1 .0);
            let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
            prop_assert!(long.len() - short.len() <= 1);
            prop_assert_eq!(&long[..short.len()], &short[..]);
        }
    }

    #[test]
    fn upwards_partial_instantiation_is_isomorphic(seed in any::<u64>(), directed in any::<bool>(), pick in any::<usize>()) {
        let g = model(seed, &ModelSpec::small(directed));
        let s = pick % g.n();
        let up = upwards_partial_instantiation(&g, s).unwrap();
        prop_assert_eq!(up.pgt.template_of(up.vertex_of_query), ROOT);
        prop_assert!(oracle_same_instantiation(&g, &up.pgt).unwrap());
    }

    #[test]
    fn doubling_a_parameter_doubles_touching_edges(seed in any::<u64>(), pick in any::<usize>()) {
        let g = model(seed, &ModelSpec::small(true));
        prop_assume!(g.templates().len() > 1);
        let t = 1 + pick % (g.templates().len() - 1);
        let h = with_param(&g, t, 2 * g.param(t));
        let (w1, w2) = (edge_reweight(&g).unwrap(), edge_reweight(&h).unwrap());
        for (i, e) in g.edges().iter().enumerate() {
            let touches = g.tree().is_ancestor_or_self(t, g.template_of(e.tail))
                || g.tree().is_ancestor_or_self(t, g.template_of(e.head));
            let want = if touches { w1[i].scale(2) } else { w1[i] };
            prop_assert_eq!(w2[i], want);
        }
    }

    #[test]
    fn flow_duality_and_monotonicity(seed in any::<u64>(), pick in any::<usize>()) {
        let g = model(seed, &ModelSpec::small(true));
        let (s, t) = (pick % g.n(), (pick / 7 + 1 + pick % g.n()) % g.n());
        prop_assume!(s != t);
        let r = max_all_st_flow(&g, s, t).unwrap();
        prop_assert_eq!(reweighted_network(&g).unwrap().cut_value(&r.source_side), r.value);
        for tpl in 1..g.templates().len() {
            let bigger = with_param(&g, tpl, g.param(tpl) + 1);
            prop_assert!(max_all_st_flow(&bigger, s, t).unwrap().value >= r.value);
        }
    }

    #[test]
    fn min_cut_matches_oracle(seed in any::<u64>()) {
        let g = model(seed, &ModelSpec::small(false));
        prop_assume!(g.total_instances() >= 2);
        let inst = instantiate(&g).unwrap();
        let r = min_cut(&g).unwrap();
        prop_assert_eq!(r.value, oracle_mincut(&inst).unwrap());
        let side = r.witness.side(&inst);
        let crossing = inst.edges.iter().filter(|e| side[e.a] != side[e.b]).fold(pgt::Weight::zero(), |acc, e| acc + e.weight);
        prop_assert_eq!(crossing, r.value);
    }

    #[test]
    fn colorings_respect_palettes(seed in any::<u64>(), k in 1usize..=5) {
        let g = model(seed, &ModelSpec { max_depth: 3, ..ModelSpec::small(true) });
        let pat = pattern(seed, k);
        let h = g.tree().height();
        let mappings = enumerate_level_mappings(&pat, h, k);
        prop_assert!(mappings.len() <= h * 3usize.pow(k as u32 - 1));
        for m in &mappings {
            for (i, p) in pat.parent.iter().enumerate() {
                if let Some(p) = p {
                    prop_assert!(m.depth[i].abs_diff(m.depth[*p]) <= 1);
                }
            }
            let c = color_code(&g, m, seed);
            prop_assert_eq!(&c, &color_code(&g, m, seed));
            for (r, pal) in c.palettes.iter().enumerate() {
                prop_assert_eq!(pal.len(), m.level.iter().filter(|&&l| l == r).count());
            }
            for x in 0..g.n() {
                let r = g.tree().depth[g.template_of(x)] % (k + 1);
                match c.color[x] {
                    Some(col) => prop_assert!(c.palettes[r].contains(&col)),
                    None => prop_assert!(c.palettes[r].is_empty()),
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn occurs_is_seeded_and_certified(seed in any::<u64>(), k in 1usize..=4) {
        let spec = ModelSpec { max_vertices: 6, max_edges: 10, ..ModelSpec::small(true) };
        let g = model(seed, &spec);
        prop_assume!(g.is_template_acyclic() && g.total_instances() <= 60);
        let pat = pattern(seed ^ 1, k);
        let a = occurs(&g, &pat, Some(30), seed).unwrap();
        let b = occurs(&g, &pat, Some(30), seed).unwrap();
        prop_assert_eq!(&a.per_root, &b.per_root);
        for w in a.witness.iter().flatten() {
            prop_assert!(witness_is_valid(&g, &pat, w));
        }
    }

    #[test]
    fn shrunk_jump_graphs_are_small(seed in any::<u64>()) {
        let spec = ModelSpec { sibling_edges: 3, max_param: 6, ..ModelSpec::small(true) };
        let g = model(seed, &spec);
        for t in 1..g.templates().len() {
            let jg = build_jump_graph(&g, t).unwrap();
            for &q in &jg.vertices {
                let sh = shrink(&jg, q).unwrap();
                prop_assert!(sh.vertices.len() <= 2 * jg.sibling_count + 1);
            }
        }
    }

    #[test]
    fn components_match_oracle(seed in any::<u64>()) {
        let spec = ModelSpec { sibling_edges: 3, max_param: 5, ..ModelSpec::small(false) };
        let g = model(seed, &spec);
        prop_assume!(g.total_instances() <= 2000);
        let inst = instantiate(&g).unwrap();
        prop_assert_eq!(connected_components(&g).unwrap(), oracle_components(&inst) as u128);
    }

    #[test]
    fn discovery_round_trips(seed in any::<u64>()) {
        let spec = ModelSpec { max_vertices: 6, max_edges: 10, ..ModelSpec::small(false) };
        let m = model(seed, &spec);
        prop_assume!(m.total_instances() <= 20);
        let target = Graph::from_instantiation(&instantiate(&m).unwrap(), &m);
        prop_assume!(target.is_connected());
        let d = discover(&target, &DiscoveryConfig { beta_max: model_beta(&m).max(1), ..Default::default() }).unwrap();
        prop_assert!(!d.models.is_empty());
        for found in &d.models {
            let back = Graph::from_instantiation(&instantiate(found).unwrap(), found);
            prop_assert!(graph_isomorphic(&back, &target));
            prop_assert!((1..found.templates().len()).all(|t| found.param(t) >= 2));
        }
        for &(outer, inner) in &d.calls {
            prop_assert!(2 * inner <= outer);
        }
    }

    #[test]
    fn decompositions_are_valid(seed in any::<u64>(), n in 1usize..14, p in 0.1f64..0.6) {
        let g = random_graph(&mut ChaCha8Rng::seed_from_u64(seed), n, p);
        let dec = tree_decomposition(&g, None).unwrap();
        prop_assert!(validate_decomposition(&g, &dec).is_ok());
    }

    #[test]
    fn instantiations_are_instances(seed in any::<u64>()) {
        let spec = ModelSpec { max_vertices: 6, max_edges: 9, ..ModelSpec::small(false) };
        let m = model(seed, &spec);
        prop_assume!(m.total_instances() <= 14);
        let target = Graph::from_instantiation(&instantiate(&m).unwrap(), &m);
        prop_assume!(tree_decomposition(&target, None).unwrap().width() <= 3);
        prop_assert!(instance_iso_decide(&m, &target, None).unwrap());
    }

    #[test]
    fn cli_output_is_seed_determined(seed in any::<u64>()) {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
        let args = [
            "pgt".to_string(),
            "match-tree".into(),
            format!("{dir}/star.pgt"),
            "--pattern".into(),
            format!("{dir}/cherry.tree"),
            "--seed".into(),
            seed.to_string(),
        ];
        let a = pgt::cli::run(args.clone());
        let b = pgt::cli::run(args);
        prop_assert_eq!(a.0, 0);
        prop_assert_eq!(a, b);
    }
}
