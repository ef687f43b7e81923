//! Text formats: PGT model files and `.el` edge lists.

use crate::error::{PgtError, Result};
use crate::graph::Graph;
use crate::model::{Edge, Pgt, RawPgt, SiblingEdge, Template};
use crate::weight::Weight;
use std::collections::HashMap;

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(PgtError::Parse { line, msg: msg.into() })
}

/// Meaningful lines with their 1-based numbers; `#` starts a comment.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn parse_header(toks: &[&str], line: usize, magic: &str) -> Result<Option<bool>> {
    match toks {
        [m, "1"] if *m == magic => Ok(None),
        [m, "1", "directed"] if *m == magic => Ok(Some(true)),
        [m, "1", "undirected"] if *m == magic => Ok(Some(false)),
        _ => perr(line, format!("expected `{magic} 1 ...` header")),
    }
}

/// Parse without validating; see [`crate::model::validate`].
pub fn parse_raw_pgt(text: &str) -> Result<RawPgt> {
    let mut it = lines(text);
    let (l0, head) = it.next().ok_or(PgtError::Parse { line: 1, msg: "empty file".into() })?;
    let directed =
        parse_header(&head, l0, "pgt")?.ok_or(PgtError::Parse { line: l0, msg: "missing directedness".into() })?;
    let mut raw = RawPgt { directed, ..Default::default() };
    let mut tids: HashMap<String, usize> = HashMap::new();
    let mut vids: HashMap<String, usize> = HashMap::new();
    for (ln, toks) in it {
        match toks[0] {
            "template" => {
                let [_, id, "parent", p, "param", k] = toks[..] else {
                    return perr(ln, "expected `template <id> parent <id|-> param <int>`");
                };
                let parent = if p == "-" {
                    None
                } else {
                    match tids.get(p) {
                        Some(&t) => Some(t),
                        None => return perr(ln, format!("parent `{p}` not declared before `{id}`")),
                    }
                };
                let Ok(param) = k.parse::<u64>() else {
                    return perr(ln, format!("bad parameter `{k}`"));
                };
                if tids.insert(id.to_string(), raw.templates.len()).is_some() {
                    return perr(ln, format!("duplicate template `{id}`"));
                }
                raw.templates.push(Template { name: id.into(), parent, param });
            }
            "vertex" => {
                let [_, name, "in", t] = toks[..] else {
                    return perr(ln, "expected `vertex <name> in <template>`");
                };
                let Some(&t) = tids.get(t) else {
                    return perr(ln, format!("unknown template `{t}`"));
                };
                let v = *vids.entry(name.to_string()).or_insert_with(|| {
                    raw.names.push(name.into());
                    raw.memberships.push(Vec::new());
                    raw.names.len() - 1
                });
                raw.memberships[v].push(t);
            }
            "edge" | "sedge" => {
                let sib = toks[0] == "sedge";
                if toks.len() < 3 {
                    return perr(ln, "edge needs two endpoints");
                }
                let mut ends = [0; 2];
                for (k, n) in toks[1..3].iter().enumerate() {
                    match vids.get(*n) {
                        Some(&v) => ends[k] = v,
                        None => return perr(ln, format!("unknown vertex `{n}`")),
                    }
                }
                let mut weight = Weight::one();
                let mut delta = None;
                let mut rest = &toks[3..];
                while !rest.is_empty() {
                    match rest {
                        ["w", x, tail @ ..] => {
                            weight = x.parse().map_err(|m| PgtError::Parse { line: ln, msg: m })?;
                            rest = tail;
                        }
                        ["delta", d, tail @ ..] if sib => {
                            delta = Some(
                                d.parse::<i64>()
                                    .map_err(|_| PgtError::Parse { line: ln, msg: format!("bad delta `{d}`") })?,
                            );
                            rest = tail;
                        }
                        _ => return perr(ln, format!("unexpected `{}`", rest.join(" "))),
                    }
                }
                if sib {
                    let Some(delta) = delta else { return perr(ln, "sedge needs `delta <int>`") };
                    raw.sibling_edges.push(SiblingEdge { tail: ends[0], head: ends[1], weight, delta });
                } else {
                    raw.edges.push(Edge { tail: ends[0], head: ends[1], weight });
                }
            }
            other => return perr(ln, format!("unknown record `{other}`")),
        }
    }
    Ok(raw)
}

pub fn parse_pgt(text: &str) -> Result<Pgt> {
    Pgt::from_raw(parse_raw_pgt(text)?)
}

pub fn write_pgt(g: &Pgt) -> String {
    let mut s = format!("pgt 1 {}\n", if g.directed() { "directed" } else { "undirected" });
    for t in g.templates() {
        let p = t.parent.map_or("-".to_string(), |p| g.templates()[p].name.clone());
        s.push_str(&format!("template {} parent {} param {}\n", t.name, p, t.param));
    }
    for v in 0..g.n() {
        s.push_str(&format!("vertex {} in {}\n", g.name(v), g.templates()[g.template_of(v)].name));
    }
    let w = |x: &Weight| if *x == Weight::one() { String::new() } else { format!(" w {x}") };
    for e in g.edges() {
        s.push_str(&format!("edge {} {}{}\n", g.name(e.tail), g.name(e.head), w(&e.weight)));
    }
    for e in g.sibling_edges() {
        s.push_str(&format!("sedge {} {}{} delta {}\n", g.name(e.tail), g.name(e.head), w(&e.weight), e.delta));
    }
    s
}

/// `graph 1 undirected` followed by `edge a b` and optional `vertex a` lines.
pub fn parse_el(text: &str) -> Result<Graph> {
    let mut it = lines(text);
    let (l0, head) = it.next().ok_or(PgtError::Parse { line: 1, msg: "empty file".into() })?;
    if parse_header(&head, l0, "graph")? == Some(true) {
        return perr(l0, "edge lists must be undirected");
    }
    let mut g = Graph::default();
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut id = |g: &mut Graph, n: &str| -> usize { *ids.entry(n.to_string()).or_insert_with(|| g.add_vertex(n)) };
    for (ln, toks) in it {
        match toks[..] {
            ["vertex", a] => {
                id(&mut g, a);
            }
            ["edge", a, b, ..] => {
                let (x, y) = (id(&mut g, a), id(&mut g, b));
                g.add_edge(x, y);
            }
            _ => return perr(ln, format!("unexpected `{}`", toks.join(" "))),
        }
    }
    Ok(g)
}

pub fn write_el(g: &Graph) -> String {
    let mut s = String::from("graph 1 undirected\n");
    for n in &g.names {
        s.push_str(&format!("vertex {n}\n"));
    }
    for &(a, b) in &g.edges {
        s.push_str(&format!("edge {} {}\n", g.names[a], g.names[b]));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::fig1;

    #[test]
    fn pgt_round_trip() {
        let g = fig1();
        let text = write_pgt(&g);
        let h = parse_pgt(&text).unwrap();
        assert_eq!(write_pgt(&h), text);
    }

    #[test]
    fn parse_with_comments_and_siblings() {
        let text = "# header\npgt 1 undirected\ntemplate R parent - param 1\n\
                    template C parent R param 4 # child\nvertex v in C\nvertex r in R\n\
                    edge r v w 3/2\nsedge v v delta 2\n";
        let g = parse_pgt(text).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edges()[0].weight, "3/2".parse().unwrap());
        assert_eq!(g.sibling_edges()[0].delta, 2);
    }

    #[test]
    fn parse_errors_name_line() {
        let e = parse_pgt("pgt 1 directed\ntemplate A parent B param 2\n").unwrap_err();
        assert!(e.to_string().contains("line 2"));
        let e = parse_pgt("pgt 1 directed\ntemplate R parent - param 1\nedge a b\n").unwrap_err();
        assert!(e.to_string().contains("unknown vertex"));
        assert!(parse_pgt("pgt 1 directed\ntemplate R parent - param 3\n").is_err());
    }

    #[test]
    fn edge_list() {
        let g = parse_el("graph 1 undirected\nedge a b\nedge b c\n").unwrap();
        assert_eq!((g.n(), g.m()), (3, 2));
        let h = parse_el(&write_el(&g)).unwrap();
        assert_eq!(h, g);
    }
}
