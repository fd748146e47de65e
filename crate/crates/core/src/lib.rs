//! Topic-method composition (TMC) analysis for bibliographic corpora.
//!
//! The pipeline runs in stages that each read and write declared files:
//!
//! 1. [`ingest`]: parse exports, filter by year, deduplicate.
//! 2. [`extract`]: recognize canonical method entities per document.
//! 3. [`topics`]: per-document topic distributions and dominant topics.
//! 4. [`tmc`]: method/topic document counts, intensity and σ truncation.
//! 5. [`network`]: the shared-element TMC network, popularity and communities.
//!
//! [`pipeline`] wires the stages together behind a run manifest.

pub mod error;
pub mod extract;
pub mod graph_export;
pub mod ingest;
pub mod io;
pub mod network;
pub mod pipeline;
pub mod synthetic;
pub mod tmc;
pub mod topics;

pub use error::{Error, Result};
