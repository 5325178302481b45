//! Detection of layered ("circle") structure in ego-centric social
//! networks built from raw interaction logs.
//!
//! The pipeline runs in five stages, one module each:
//!
//! 1. [`ingest`] parses event or windowed-count CSV logs into an [`EdgeStore`]
//!    and optionally reconstructs missing post directions by doubling.
//! 2. [`egonet`] turns the store into per-ego alter lists weighted by contact
//!    frequency and applies the ego- and edge-activity filters.
//! 3. [`cluster`] runs exact 1-D k-means by dynamic programming, selects the
//!    cluster count by AIC and scores configurations by silhouette.
//! 4. [`density`] cross-checks k-means with 1-D DBSCAN and a decreasing-ε
//!    calibration loop.
//! 5. [`layers`] nests clusters into concentric layers and aggregates them
//!    over a population; [`report`] renders the result.
//!
//! [`synth`] generates populations with planted layers for end-to-end checks,
//! and [`pipeline`] wires everything together behind a [`RunConfig`].

pub mod cluster;
pub mod density;
pub mod egonet;
pub mod error;
pub mod ingest;
pub mod layers;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use cluster::{aic_score, kmeans_1d, select_k, silhouette_mean, variance_explained};
pub use cluster::{ClusterConfig, KScore, KStarResult};
pub use density::{calibrate_eps, dbscan_1d, Calibration, DensityClustering};
pub use egonet::{
    build_ego_networks, contact_frequency, edge_duration_events, edge_duration_windowed,
    filter_active_edges, filter_active_egos, ActiveEgos, EgoNetwork, Relationship,
};
pub use error::{Error, Result};
pub use ingest::{
    parse_event_log, parse_windowed_edges, reconstruct_missing, Edge, EdgeStore, InteractionEvent,
    StoreKind, Timestamp, UserId, WindowCounts, WindowedEdge,
};
pub use layers::{aggregate, ccdf, nest_clusters, scaling_ratios, LayerProfile, PopulationReport};
pub use pipeline::{
    run_analyze, run_synth, AnalysisOutcome, InputFormat, Mode, ReportFormat, RunConfig,
    SynthConfig,
};
pub use report::AnalysisReport;
pub use synth::{generate_ego, generate_population, CountModel, LayerSpec, PlantedEgo, Population};
