//! Bipartite rating-network ranking with time-bias rebalancing.
//!
//! The pipeline loads user–item ratings, builds a weighted bipartite graph,
//! scores items with one of several iterative rankers, optionally replaces
//! each score by its z-score within a window of items released around the
//! same time, and evaluates the result for accuracy and time balance.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod error;
pub mod export;
pub mod graph;
pub mod harness;
pub mod interactions;
pub mod metrics;
pub mod ranking;
pub mod rebalance;

pub use catalog::{resolve_release_dates, ItemCatalog, ReleaseMetadata, ReleaseSource};
pub use error::{Error, Result};
pub use graph::{build_graph, RatingGraph, WeightingMode, SECONDS_PER_YEAR};
pub use interactions::{filter_min_degree, load_interactions, merge_duplicates, CsvSchema, Interaction};
pub use metrics::{ImbalanceConfig, RankedList};
pub use ranking::{Algorithm, ConvergenceConfig, Ranker, ScoreVector};
pub use rebalance::{assign_windows, rebalance_scores, RebalanceConfig, WindowMap};
