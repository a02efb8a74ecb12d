//! Fairness measurement for regression models.
//!
//! Six estimators approximate parity-based (`S ⊥ A`) and separation-based
//! (`S ⊥ A | Y`) disparity of a model's continuous predictions `S` with respect
//! to a discrete protected attribute `A`. The [`consistency`] module measures
//! how well those estimators agree across a zoo of regression models, and
//! [`experiment`] wires the whole pipeline together deterministically.
//!
//! Module map:
//!
//! - [`numerics`]: ECDFs, quantiles, KS distance, 1-D barycenters, KDE grids,
//!   a multinomial logistic classifier and singular values.
//! - [`datasets`]: CSV loading, benchmark task recipes, synthetic data, splits.
//! - [`zoo`]: the regression model catalog and prediction ingestion.
//! - [`metrics`]: the parity estimators (P1-P4) and separation estimators (C1, C2).
//! - [`consistency`]: Pearson/Spearman with significance and discordant pairs.
//! - [`experiment`]: config parsing and the end-to-end run.
//! - [`report`]: table rendering, CSV/SVG emission.

pub mod consistency;
pub mod datasets;
mod error;
pub mod experiment;
pub mod metrics;
pub mod numerics;
pub mod report;
pub mod seed;
pub mod zoo;

pub use consistency::{
    CorrelationCell, CorrelationEntry, CorrelationKind, CorrelationMatrix, DiscordantPair,
    ScoreTable,
};
pub use datasets::{Dataset, DatasetSource, SplitSpec, SyntheticSpec};
pub use error::{Error, ErrorKind, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentResult};
pub use metrics::{FairnessScore, Method, MetricFamily};
pub use numerics::Sample1D;
pub use zoo::{ModelConfig, PredictionSet};
