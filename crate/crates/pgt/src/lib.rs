//! Parametric graph templates: a graph is given as a template graph plus a
//! laminar family of templates, each replicated `P` times on instantiation.
//! The algorithms here work on the template without building the expansion.

pub mod canon;
pub mod cli;
pub mod discovery;
pub mod error;
pub mod format;
pub mod graph;
pub mod instance_iso;
pub mod instantiate;
pub mod maxflow;
pub mod mincut;
pub mod model;
pub mod oracles;
pub mod random;
pub mod siblings;
pub mod transforms;
pub mod treedec;
pub mod treematch;
pub mod weight;

pub use error::{PgtError, Result};
pub use model::{Pgt, RawPgt, TemplateId, VertexId, ROOT};
pub use weight::{Rat, Weight};
