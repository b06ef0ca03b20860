//! Fixtures shared by the benchmarks.

use eucompare_core::io::{synth_generate, SynthSpec};
use eucompare_core::PredictionSet;

/// A reproducible batch of prediction sets with `k` classes and `m` members.
pub fn prediction_sets(k: usize, m: usize, n: usize) -> Vec<PredictionSet> {
    let spec = SynthSpec::new(k, m, n, 0.3, 1.0, 42);
    synth_generate(&spec)
        .expect("valid fixture spec")
        .rows
        .into_iter()
        .map(|row| row.set)
        .collect()
}

/// Scores for the detection benchmark: `n` in-distribution values and `n` shifted ones.
pub fn detection_scores(n: usize) -> (Vec<f64>, Vec<f64>) {
    let id = (0..n).map(|i| ((i * 7919) % n) as f64 / n as f64).collect();
    let ood = (0..n).map(|i| 0.3 + ((i * 104_729) % n) as f64 / n as f64).collect();
    (id, ood)
}
