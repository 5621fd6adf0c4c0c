//! Cluster-membership explanation toolkit.
//!
//! The pipeline takes an unlabeled feature table, partitions it with one of
//! four clustering algorithms, models the resulting partition with a
//! calibrated one-vs-rest kernel-SVM surrogate, and then explains single
//! cluster assignments with a locally weighted linear surrogate fitted on
//! perturbed neighbors. Per-instance explanations aggregate into per-cluster
//! feature-popularity rankings and cross-cluster intersections.
//!
//! Modules follow the pipeline stages:
//!
//! * [`dataset`] — CSV ingestion, standardization, folds, distances.
//! * [`cluster`] — K-Means, agglomerative (ward/single), BIRCH.
//! * [`validity`] — external partition metrics and silhouette.
//! * [`model`] — SMO-trained binary SVMs, Platt calibration, one-vs-rest
//!   multiclass surrogate, cross-validated classification reports.
//! * [`explain`] — quartile discretizer, neighborhood perturbation, weighted
//!   ridge local models, per-instance explanations.
//! * [`summarize`] — explanation aggregation, popularity rankings,
//!   composition and feature-distribution reports.
//! * [`synth`] — synthetic generators and independent reference oracles used
//!   by the test suites.
//! * [`pipeline`] — configuration, JSON artifacts, and the fused run.

pub mod cluster;
pub mod dataset;
pub mod explain;
pub mod model;
pub mod pipeline;
pub mod render;
pub mod stats;
pub mod summarize;
pub mod synth;
pub mod validity;

pub use cluster::{agglomerative_fit, birch_fit, kmeans_fit, ClusteringResult, Linkage};
pub use dataset::{
    bin_quality, kfold_split, load_csv, pairwise_distances, standardize, Dataset, DistanceMatrix,
    QualityClass, ScalerParams,
};
pub use explain::{
    explain_instance, fit_discretizer, fit_local_model, sample_neighborhood, Discretizer,
    Explanation, LimeParams, LocalLinearModel, NeighborhoodSample,
};
pub use model::{
    crossval_report, multiclass_train, platt_fit, svm_decision, svm_train_binary, BinarySvm,
    ClassificationReport, KernelSpec, MulticlassSvm, PlattCalibration, ProbabilityModel,
    SvmParams,
};
pub use summarize::{
    cluster_composition, explain_cluster_members, feature_distribution_report, feature_popularity,
    popularity_intersection, ClusterExplanationSummary, ExplanationSet,
};
pub use synth::{gen_blobs, gen_linear_prob_model, BlobSpec, LinearProbModel};
pub use validity::{contingency_table, external_metrics, silhouette_score, ValidityReport};
