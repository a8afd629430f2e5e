//! Structured retrieval of academic papers.
//!
//! A corpus is soft-clustered into topical communities by jointly factorizing
//! its citation, content and authorship relations. Within each community
//! relevant to a query, the most coherent chronological chain of papers is
//! found by scoring word influence along the chain with a max-min linear
//! program, and the chains are merged into a paper evolution graph.

pub mod chains;
pub mod coherence;
pub mod config;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod factorization;
pub mod index;
pub mod influence;
pub mod peg;
pub mod sparse;
pub mod synthetic;

pub use config::EngineConfig;
pub use error::{Error, Result};
pub use exec::Execution;
pub use index::Index;
