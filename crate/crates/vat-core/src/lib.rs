//! Generalized kernel attention with value-aware and value-oblivious sparse
//! approximation oracles, plus the practical approximators they are measured
//! against (sliding window, multi-round LSH, random features).
//!
//! The central objects are an [`model::AttentionInstance`] (one sequence's
//! queries, keys, and values), a [`model::KernelSpec`] choosing the
//! similarity kernel, and the engines in [`attention`] computing exact and
//! sparse outputs. The [`oracles`] module ranks and selects value vectors
//! optimally with or without looking at them; [`approximators`] holds the
//! schemes real systems use; [`metrics`] measures everything against exact
//! attention.
#![allow(clippy::needless_range_loop)]

pub mod approximators;
pub mod attention;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod oracles;
pub mod rng;

pub use approximators::{
    lsh_attention, lsh_hash, orf_attention, orf_features, orf_projection,
    sliding_window_attention, ApproximatorSpec, LshConfig, OrfConfig, OrfMode,
};
pub use attention::{exact_attention, sparse_attention, EngineOutput, FlagEvent, QueryFlag};
pub use error::{Error, Result};
pub use kernels::{attention_weights, feature_map, kernel_score, skew_stats, SkewStats};
pub use metrics::{compare, error_curve, skew_summary, ApproximationReport, ErrorStats};
pub use model::{
    make_instance, AttentionInstance, Distribution, KernelSpec, Matrix, SelectionPlan,
    SimplexCombination,
};
pub use oracles::{
    caratheodory_reduce, optimal_v_aware, optimal_v_aware_1, optimal_v_oblivious, ranking_compare,
    simplex_lsq, top_r_selection, value_aware_objective, RankingComparison,
};
pub use rng::{gaussian_matrix, RngStream};
