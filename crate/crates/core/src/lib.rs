//! Dynamic network embedding via diversity-enhanced ensembles of
//! incremental skip-gram models.
//!
//! The pipeline ingests a timestamped edge stream, slices it into a sequence
//! of cumulative snapshots, and maintains an ensemble of skip-gram learners
//! that are updated incrementally as edges arrive. Each learner explores the
//! graph with random walks using a different restart probability, so the
//! ensemble captures several levels of local-global topology at once.
//! Downstream evaluation (graph reconstruction, node recommendation, link
//! prediction) and synthetic benchmark generation live alongside the trainer.

pub mod bench;
pub mod dyngraph;
pub mod ensemble;
pub mod error;
pub mod evaltasks;
pub mod sampler;
pub mod seeds;
pub mod sgns;
pub mod synthgen;

pub use error::{Error, Result};
