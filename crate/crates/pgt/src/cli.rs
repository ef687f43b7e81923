//! Command-line front end. `run` returns the exit code together with what
//! would go to stdout and stderr, so it can be driven from tests.

use crate::discovery::{discover, graph_isomorphic, DiscoveryConfig, DiscoveryMode};
use crate::error::{PgtError, Result};
use crate::format::{parse_el, parse_pgt, parse_raw_pgt, write_pgt};
use crate::graph::Graph;
use crate::instance_iso::{instance_iso_decide, naive_instance_iso};
use crate::instantiate::{instantiate, Address};
use crate::maxflow::{max_all_st_flow, max_single_st_flow, Network};
use crate::mincut::min_cut;
use crate::model::{validate, Pgt, VertexId};
use crate::oracles::{
    oracle_check_tree, oracle_components, oracle_disjoint_paths, oracle_flow, oracle_mincut, oracle_same_instantiation,
    oracle_tree_occurs, PathMode,
};
use crate::siblings::{bfs_template, connected_components, retemplate, sssp_template};
use crate::treedec::parse_td;
use crate::treematch::{describe_witness, disjoint_paths, occurs, parse_tree};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "pgt", version, about = "Algorithms on parametric graph templates")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Vertex cap for explicit instantiation (overrides PGT_BUDGET).
    #[arg(long, global = true)]
    pub budget: Option<u128>,
    /// Colour-coding repetitions (default: enough for failure ≤ 2^-20).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Also compute the answer on the explicit instantiation and compare.
    #[arg(long, global = true)]
    pub oracle: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FlowMode {
    All,
    Single,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PathsMode {
    Exact,
    Atmost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DiscoverMode {
    First,
    All,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a model file against every structural rule.
    Validate { file: PathBuf },
    /// Print the explicit instantiation.
    Instantiate { file: PathBuf },
    /// Maximum s-t flow between all instances or two chosen instances.
    Flow {
        #[arg(long, value_enum, default_value_t = FlowMode::All)]
        mode: FlowMode,
        #[arg(long)]
        source: String,
        #[arg(long)]
        sink: String,
        /// Instance of the source, e.g. `0.1` (single mode).
        #[arg(long, default_value = "")]
        source_addr: String,
        #[arg(long, default_value = "")]
        sink_addr: String,
        file: PathBuf,
    },
    /// Global minimum cut of an undirected model.
    Mincut { file: PathBuf },
    /// Decide whether a rooted tree pattern occurs.
    MatchTree {
        #[arg(long)]
        pattern: PathBuf,
        /// Print the occurrence found for each root.
        #[arg(long)]
        certify: bool,
        file: PathBuf,
    },
    /// Vertex-disjoint s-t paths of bounded length.
    DisjointPaths {
        #[arg(long)]
        source: String,
        #[arg(long)]
        sink: String,
        #[arg(short = 'k', default_value_t = 1)]
        k: usize,
        #[arg(short = 'L')]
        l: usize,
        #[arg(long, value_enum, default_value_t = PathsMode::Exact)]
        mode: PathsMode,
        file: PathBuf,
    },
    /// BFS tree as a template.
    Bfs {
        #[arg(long)]
        source: String,
        file: PathBuf,
    },
    /// Shortest-path tree as a template.
    Sssp {
        #[arg(long)]
        source: String,
        file: PathBuf,
    },
    /// Number of connected components of an undirected model.
    Components { file: PathBuf },
    /// Remove sibling edges of a template where possible.
    Retemplate {
        #[arg(long)]
        template: String,
        file: PathBuf,
    },
    /// Find models instantiating an edge list.
    Discover {
        #[arg(long, default_value_t = 2)]
        beta_max: usize,
        #[arg(long, value_enum, default_value_t = DiscoverMode::First)]
        mode: DiscoverMode,
        #[arg(long, default_value_t = 2)]
        min_param: u64,
        file: PathBuf,
    },
    /// Decide whether a graph is the instantiation of a model.
    Iso {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        decomposition: Option<PathBuf>,
        /// Instantiate and compare instead of the decomposition DP.
        #[arg(long)]
        naive: bool,
    },
}

struct Out {
    json: bool,
    text: String,
    /// Set when an oracle comparison fails.
    disagree: bool,
}

impl Out {
    /// Text: `kind v1 v2 ...`; JSON: one object per record.
    fn rec(&mut self, kind: &str, fields: &[(&str, Value)]) {
        if self.json {
            let mut m = Map::new();
            m.insert("kind".into(), json!(kind));
            for (k, v) in fields {
                m.insert((*k).into(), v.clone());
            }
            self.text.push_str(&Value::Object(m).to_string());
        } else {
            self.text.push_str(kind);
            for (_, v) in fields {
                self.text.push(' ');
                match v {
                    Value::String(s) => self.text.push_str(s),
                    other => self.text.push_str(&other.to_string()),
                }
            }
        }
        self.text.push('\n');
    }

    fn block(&mut self, kind: &str, body: &str) {
        if self.json {
            self.rec(kind, &[("text", json!(body))]);
        } else {
            self.text.push_str(body);
        }
    }

    fn compare(&mut self, mine: &str, oracle: &str) {
        self.rec("oracle", &[("value", json!(oracle))]);
        let agree = mine == oracle;
        self.rec("agree", &[("value", json!(agree))]);
        self.disagree |= !agree;
    }

    /// For oracles that check an answer instead of recomputing it.
    fn verdict(&mut self, agree: bool) {
        self.rec("agree", &[("value", json!(agree))]);
        self.disagree |= !agree;
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| PgtError::Precondition(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Pgt> {
    parse_pgt(&read(path)?)
}

fn load_graph(path: &Path) -> Result<Graph> {
    parse_el(&read(path)?)
}

fn vertex(g: &Pgt, name: &str) -> Result<VertexId> {
    g.vertex_id(name)
}

fn address(s: &str) -> Result<Address> {
    Address::parse(s).ok_or_else(|| PgtError::Precondition(format!("bad address `{s}`")))
}

fn execute(cli: &Cli, out: &mut Out) -> Result<()> {
    match &cli.command {
        Command::Validate { file } => {
            let raw = parse_raw_pgt(&read(file)?)?;
            let report = validate(&raw);
            if !report.is_ok() {
                return Err(PgtError::Invalid(report.to_string()));
            }
            let g = Pgt::from_raw(raw)?;
            out.rec(
                "valid",
                &[
                    ("templates", json!(g.templates().len())),
                    ("vertices", json!(g.n())),
                    ("instances", json!(g.total_instances().to_string())),
                ],
            );
        }
        Command::Instantiate { file } => {
            let g = load(file)?;
            let inst = instantiate(&g)?;
            out.block("instantiation", &inst.render(&g));
            if cli.oracle {
                out.compare(&inst.len().to_string(), &g.total_instances().to_string());
            }
        }
        Command::Flow { mode, source, sink, source_addr, sink_addr, file } => {
            let g = load(file)?;
            let (s, t) = (vertex(&g, source)?, vertex(&g, sink)?);
            let (sa, ta) = (address(source_addr)?, address(sink_addr)?);
            let value = match mode {
                FlowMode::All => max_all_st_flow(&g, s, t)?.value,
                FlowMode::Single => max_single_st_flow(&g, s, &sa, t, &ta)?.value,
            };
            out.rec("value", &[("value", json!(value.to_string()))]);
            if cli.oracle {
                let inst = instantiate(&g)?;
                let (srcs, snks) = match mode {
                    FlowMode::All => (inst.instances_of(s), inst.instances_of(t)),
                    FlowMode::Single => {
                        let f = |v, a: &Address| {
                            inst.find(v, a).ok_or_else(|| PgtError::Precondition("invalid instance address".into()))
                        };
                        (vec![f(s, &sa)?], vec![f(t, &ta)?])
                    }
                };
                let o = oracle_flow(&inst, &srcs, &snks)?;
                out.compare(&value.to_string(), &o.to_string());
            }
        }
        Command::Mincut { file } => {
            let g = load(file)?;
            let r = min_cut(&g)?;
            out.rec("value", &[("value", json!(r.value.to_string()))]);
            out.rec("case", &[("case", json!(r.case.to_string()))]);
            let members: Vec<&str> = r.witness.members.iter().map(|&v| g.name(v)).collect();
            out.rec(
                "witness",
                &[("template", json!(g.templates()[r.witness.template].name)), ("members", json!(members.join(",")))],
            );
            if cli.oracle {
                let inst = instantiate(&g)?;
                let o = oracle_mincut(&inst)?;
                let mut net = Network::new(inst.len(), false);
                for e in &inst.edges {
                    net.add(e.a, e.b, e.weight);
                }
                let side = r.witness.side(&inst);
                let witness_value = net.cut_value(&side);
                out.rec("witness_value", &[("value", json!(witness_value.to_string()))]);
                out.disagree |= witness_value != r.value;
                out.compare(&r.value.to_string(), &o.to_string());
            }
        }
        Command::MatchTree { pattern, certify, file } => {
            let g = load(file)?;
            let pat = parse_tree(&read(pattern)?)?;
            let r = occurs(&g, &pat, cli.trials, cli.seed)?;
            out.rec("found", &[("value", json!(r.found))]);
            for v in 0..g.n() {
                out.rec("root", &[("vertex", json!(g.name(v))), ("value", json!(r.per_root[v]))]);
                if *certify {
                    if let Some(w) = &r.witness[v] {
                        out.rec(
                            "witness",
                            &[("vertex", json!(g.name(v))), ("map", json!(describe_witness(&g, &pat, w).join(" ")))],
                        );
                    }
                }
            }
            if cli.oracle {
                let inst = instantiate(&g)?;
                let o: Vec<bool> = (0..g.n()).map(|v| oracle_tree_occurs(&inst, &pat, v)).collect();
                let fmt = |xs: &[bool]| xs.iter().map(|b| if *b { '1' } else { '0' }).collect::<String>();
                out.compare(&fmt(&r.per_root), &fmt(&o));
            }
        }
        Command::DisjointPaths { source, sink, k, l, mode, file } => {
            let g = load(file)?;
            let (s, t) = (vertex(&g, source)?, vertex(&g, sink)?);
            let pm = match mode {
                PathsMode::Exact => PathMode::Exactly,
                PathsMode::Atmost => PathMode::AtMost,
            };
            let r = disjoint_paths(&g, s, t, *k, *l, pm, cli.trials, cli.seed)?;
            out.rec("value", &[("value", json!(r))]);
            if cli.oracle {
                let inst = instantiate(&g)?;
                let (si, ti) = (inst.find(s, &Address::root()).unwrap(), inst.find(t, &Address::root()).unwrap());
                let o = oracle_disjoint_paths(&inst, si, ti, *k, *l, pm);
                out.compare(&r.to_string(), &o.to_string());
            }
        }
        Command::Bfs { source, file } | Command::Sssp { source, file } => {
            let weighted = matches!(cli.command, Command::Sssp { .. });
            let g = load(file)?;
            let s = vertex(&g, source)?;
            let tt = if weighted { sssp_template(&g, s)? } else { bfs_template(&g, s)? };
            out.block("tree", &write_pgt(&tt.pgt));
            if cli.oracle {
                let ok = oracle_check_tree(&g, &tt, s, weighted)?;
                out.verdict(ok);
            }
        }
        Command::Components { file } => {
            let g = load(file)?;
            let c = connected_components(&g)?;
            out.rec("components", &[("value", json!(c.to_string()))]);
            if cli.oracle {
                let o = oracle_components(&instantiate(&g)?);
                out.compare(&c.to_string(), &o.to_string());
            }
        }
        Command::Retemplate { template, file } => {
            let g = load(file)?;
            let t = g.template_id(template)?;
            let r = retemplate(&g, t)?;
            out.block("model", &write_pgt(&r.pgt));
            if cli.oracle {
                let ok = oracle_same_instantiation(&g, &r.pgt)?;
                out.verdict(ok);
            }
        }
        Command::Discover { beta_max, mode, min_param, file } => {
            let target = load_graph(file)?;
            let cfg = DiscoveryConfig {
                beta_max: *beta_max,
                min_param: *min_param,
                mode: match mode {
                    DiscoverMode::First => DiscoveryMode::First,
                    DiscoverMode::All => DiscoveryMode::All,
                },
                ..Default::default()
            };
            let d = discover(&target, &cfg)?;
            out.rec("models", &[("value", json!(d.models.len()))]);
            for (i, m) in d.models.iter().enumerate() {
                out.rec("model", &[("index", json!(i))]);
                out.block("pgt", &write_pgt(m));
            }
            if cli.oracle {
                let ok = d
                    .models
                    .iter()
                    .filter(|m| {
                        instantiate(m).is_ok_and(|inst| graph_isomorphic(&Graph::from_instantiation(&inst, m), &target))
                    })
                    .count();
                out.compare(&d.models.len().to_string(), &ok.to_string());
            }
        }
        Command::Iso { template, target, decomposition, naive } => {
            let g = load(template)?;
            let h = load_graph(target)?;
            let dec = match decomposition {
                Some(p) => Some(parse_td(&read(p)?, &h)?),
                None => None,
            };
            let r = if *naive { naive_instance_iso(&g, &h)? } else { instance_iso_decide(&g, &h, dec.as_ref())? };
            out.rec("isomorphic", &[("value", json!(r))]);
            if cli.oracle {
                let o = naive_instance_iso(&g, &h)?;
                out.compare(&r.to_string(), &o.to_string());
            }
        }
    }
    Ok(())
}

/// Exit code, stdout, stderr.
pub fn run<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    (0, text, String::new())
                }
                _ => (2, String::new(), text),
            };
        }
    };
    let mut out = Out { json: cli.format == OutputFormat::Json, text: String::new(), disagree: false };
    let result = match cli.budget {
        Some(b) => crate::instantiate::with_budget(b, || execute(&cli, &mut out)),
        None => execute(&cli, &mut out),
    };
    match result {
        Ok(()) => {
            let code = if out.disagree { 1 } else { 0 };
            if let Some(path) = &cli.output {
                if let Err(e) = std::fs::write(path, &out.text) {
                    return (1, String::new(), format!("error: cannot write {}: {e}\n", path.display()));
                }
                return (code, String::new(), String::new());
            }
            (code, out.text, String::new())
        }
        Err(e) => (1, String::new(), format!("error: {e}\n")),
    }
}
