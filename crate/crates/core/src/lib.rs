//! Explicit Semantic Analysis over a page/category corpus, with relatedness
//! reinforced along a maximal spanning tree of the category graph.
//!
//! The usual entry point is [`index::build_index`] followed by
//! [`index::load_index`]; [`index::EsaModel`] then hands out the standard
//! space ([`vectors::EsaSpace`]) and the reinforced one
//! ([`reinforcement::ReinforcedSpace`]).

pub mod arborification;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod fixtures;
pub mod index;
pub mod reinforcement;
pub mod textproc;
pub mod vectors;
pub mod weighting;

pub use arborification::{SpanningTree, WeightedDigraph};
pub use corpus::{Corpus, EvalCorpus, FilterThresholds};
pub use error::{Result, TesaError};
pub use index::{build_index, load_index, BuildOptions, BuildSummary, EsaModel, IndexManifest};
pub use reinforcement::{LambdaSchedule, ReinforcedSpace, SupportMode};
pub use textproc::{PipelineConfig, TermId, Vocabulary};
pub use vectors::{cosine, EsaSpace, SparseVector};
