//! Distribution-based compositionality assessment (DBCA) toolkit.
//!
//! The crate measures how compositionally challenging a train/test split of a
//! sequence dataset is, and constructs splits that maximize that challenge.
//! Every example carries a *rule application DAG* describing how it was
//! generated from a grammar. From those DAGs we derive two distributions:
//!
//! * **atoms** — individual rule applications, weighted by occurrence count;
//! * **compounds** — connected induced sub-DAGs up to a size limit, weighted
//!   so that compounds subsumed by a fixed larger context count less.
//!
//! Divergence between the train and test distributions is measured with
//! Chernoff coefficients: atom divergence uses `alpha = 0.5` and compound
//! divergence uses `alpha = 0.1`. A *maximum compound divergence* (MCD) split
//! greedily maximizes compound divergence while keeping atom divergence small.
//!
//! The crate also ships a small unification-grammar engine able to generate
//! datasets (a complete SCAN reconstruction and a miniature movie-question
//! grammar are built in), pattern/length baselines, an entropy-driven
//! subsampler, and a command line interface exposing the full pipeline.

pub mod compounds;
pub mod corpus;
pub mod dataset_io;
pub mod divergence;
pub mod error;
pub mod example;
pub mod gramgen;
pub mod metrics;
pub mod rulesets;
pub mod splitter;
pub mod subsampler;

pub use error::{Error, Result};
