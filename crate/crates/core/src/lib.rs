//! Weakly supervised abstraction of protocol messages.
//!
//! Messages are fixed-arity vectors of categorical field tokens. A handful of
//! labeled examples become must-link / cannot-link constraints, and MPCK-means
//! (metric learning plus pairwise-constrained k-means) groups the corpus into a
//! small alphabet of abstract symbols under per-cluster weighted Hamming
//! distances. Cluster assignments are scored against a rule-based reference
//! abstraction with purity and the adjusted Rand index.

pub mod clustering;
pub mod constraints;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod message;
pub mod metric;
pub mod plot;

pub use clustering::{
    assign_point, evaluate_objective, f_cannot, f_must, run_kmeans, run_mpck, update_centroids, ClusterModel,
    IterationStats, MpckConfig, PenaltyContext,
};
pub use constraints::{
    close_constraints, constraints_from_labels, neighborhoods, ConstraintSet, LabeledSample, Neighborhood,
};
pub use error::{Error, Result};
pub use evaluation::{ari, confusion, purity, ConfusionMatrix, EvalReport};
pub use experiment::{
    draw_labeled_samples, run_experiment, sweep_k, sweep_labels, Algorithm, ClusterRequest, ExperimentResult,
    LabelMode, Sweep,
};
pub use message::{build_corpus, message_equal, Corpus, FieldToken, LabelVector, Message, RawMessage};
pub use metric::{distance_sq, log_det, max_separated_pair, DiagonalMetric, MaxPair, MetricBounds};
