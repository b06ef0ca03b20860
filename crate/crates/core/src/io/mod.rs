//! File formats and the synthetic data generator.

pub mod manifest;
pub mod predictions;
pub mod results;
pub mod synth;

pub use self::manifest::{manifest_path, sha256_file, FileDigest, RunManifest};
pub use self::predictions::{PredictionFile, PredictionRow};
pub use self::results::{
    collect_runs, rank_runs, read_scores, write_report, write_scores, CollectedRuns, EvalResult,
    MeasureDetection, RankGroup, RankReport, ScoreRow,
};
pub use self::synth::{synth_generate, SynthSpec};

use std::path::Path;

use crate::error::Result;

/// Reads and validates a line-delimited prediction file.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionFile> {
    PredictionFile::load(path)
}
