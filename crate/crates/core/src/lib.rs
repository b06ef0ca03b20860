//! Epistemic uncertainty of ensemble predictions under two second-order
//! representations: a finite set of first-order predictions and the credal
//! set spanned by its probability intervals.
//!
//! The crate computes six uncertainty measures, evaluates them on selective
//! prediction and OOD detection, and ranks them with paired one-sided
//! Wilcoxon tests. [`reference`] holds brute-force oracles for testing.

pub mod credal;
pub mod downstream;
pub mod error;
pub mod io;
pub mod measures;
pub mod reference;
pub mod simplex;
pub mod stats;

pub use credal::{build_intervals, ProbabilityIntervals};
pub use downstream::{
    default_betas, ood_detection, parse_betas, selective_prediction, AccuracyRejectionCurve,
    ArcPoint, DetectionResult, EvaluationRecord,
};
pub use error::{Error, Result};
pub use measures::{
    quantify, quantify_many, Measure, MeasureConfig, Representation, UncertaintyScore,
    WdConvention,
};
pub use simplex::{ClassSubset, MeanPrediction, PredictionSet, ProbabilityVector};
pub use stats::{
    aggregate_across_models, net_wins, wilcoxon_one_sided, NetWinTable, RunContext, RunMatrix,
    Scope, WilcoxonOutcome,
};
