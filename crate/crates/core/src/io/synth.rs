//! Seeded synthetic ensembles with a known ranking signal.
//!
//! Every member is a softmax of shared base logits plus Gaussian noise.
//! Correctly classified samples have a confident base (`+4` on the true
//! class) and tight members. Misclassified samples have a weak base (`+1` on
//! a wrong class) and noise that grows with `separation`, so their members
//! disagree more.
//!
//! `outlier_rate` adds a second signal: that fraction of correct samples
//! (ensembles of three or more members) gets one confidently dissenting
//! member. A single large deviation weighs heavily on variance-like measures
//! but only linearly on the L1 transport cost, which lets tests construct a
//! measure that strictly dominates the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::predictions::{PredictionFile, PredictionRow};
use crate::error::{Error, Result};
use crate::simplex::{argmax, PredictionSet, ProbabilityVector};

const CORRECT_MARGIN: f64 = 4.0;
const ERROR_MARGIN: f64 = 1.0;
const OUTLIER_MARGIN: f64 = 6.0;
const BASE_NOISE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub num_members: usize,
    pub num_samples: usize,
    pub error_rate: f64,
    pub separation: f64,
    pub seed: u64,
    #[serde(default)]
    pub outlier_rate: f64,
}

impl SynthSpec {
    pub fn new(
        num_classes: usize,
        num_members: usize,
        num_samples: usize,
        error_rate: f64,
        separation: f64,
        seed: u64,
    ) -> Self {
        SynthSpec {
            num_classes,
            num_members,
            num_samples,
            error_rate,
            separation,
            seed,
            outlier_rate: 0.0,
        }
    }

    pub fn with_outlier_rate(mut self, rate: f64) -> Self {
        self.outlier_rate = rate;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::invalid("synthetic data needs at least 2 classes"));
        }
        if self.num_members == 0 || self.num_samples == 0 {
            return Err(Error::invalid(
                "synthetic data needs at least one member and one sample",
            ));
        }
        if !(0.0..=1.0).contains(&self.error_rate) {
            return Err(Error::invalid(format!(
                "error rate {} is outside [0, 1]",
                self.error_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.outlier_rate) {
            return Err(Error::invalid(format!(
                "outlier rate {} is outside [0, 1]",
                self.outlier_rate
            )));
        }
        if !(self.separation >= 0.0) || !self.separation.is_finite() {
            return Err(Error::invalid(format!(
                "separation {} must be finite and non-negative",
                self.separation
            )));
        }
        Ok(())
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn member(rng: &mut ChaCha8Rng, k: usize, class: usize, margin: f64, noise: f64) -> Vec<f64> {
    let logits: Vec<f64> = (0..k)
        .map(|j| {
            let eps: f64 = rng.sample(StandardNormal);
            let base = if j == class { margin } else { 0.0 };
            base + noise * eps
        })
        .collect();
    softmax(&logits)
}

fn other_class(rng: &mut ChaCha8Rng, k: usize, not: usize) -> usize {
    let c = rng.random_range(0..k - 1);
    if c >= not {
        c + 1
    } else {
        c
    }
}

/// Generates `num_samples` rows; the same spec always yields the same file.
pub fn synth_generate(spec: &SynthSpec) -> Result<PredictionFile> {
    spec.validate()?;
    let k = spec.num_classes;
    let m = spec.num_members;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(spec.num_samples);
    for i in 0..spec.num_samples {
        let label = rng.random_range(0..k);
        let is_error = rng.random::<f64>() < spec.error_rate;
        let (target, margin, noise) = if is_error {
            (
                other_class(&mut rng, k, label),
                ERROR_MARGIN,
                BASE_NOISE * (1.0 + spec.separation),
            )
        } else {
            (label, CORRECT_MARGIN, BASE_NOISE)
        };
        let mut members: Vec<Vec<f64>> =
            (0..m).map(|_| member(&mut rng, k, target, margin, noise)).collect();
        if !is_error && m >= 3 && rng.random::<f64>() < spec.outlier_rate {
            let slot = rng.random_range(0..m);
            let dissent = other_class(&mut rng, k, target);
            members[slot] = member(&mut rng, k, dissent, OUTLIER_MARGIN, BASE_NOISE);
        }

        // The ensemble must predict `target`; swap it into place if the
        // noise moved the mean's mode elsewhere.
        let mean: Vec<f64> = (0..k)
            .map(|j| members.iter().map(|p| p[j]).sum::<f64>())
            .collect();
        let top = argmax(&mean);
        if top != target {
            for p in &mut members {
                p.swap(top, target);
            }
        }

        let set = PredictionSet::new(
            members
                .into_iter()
                .map(ProbabilityVector::new)
                .collect::<Result<Vec<_>>>()?,
        )?;
        rows.push(PredictionRow {
            id: format!("s{:06}", i + 1),
            label,
            set,
        });
    }
    PredictionFile::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_bytes() {
        let spec = SynthSpec::new(3, 4, 50, 0.3, 1.0, 7);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        synth_generate(&spec).unwrap().write(&mut a).unwrap();
        synth_generate(&spec).unwrap().write(&mut b).unwrap();
        assert_eq!(a, b);
        let mut c = Vec::new();
        synth_generate(&SynthSpec { seed: 8, ..spec })
            .unwrap()
            .write(&mut c)
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn error_rate_controls_accuracy() {
        let all_right = synth_generate(&SynthSpec::new(4, 3, 200, 0.0, 2.0, 1)).unwrap();
        assert!(all_right
            .rows
            .iter()
            .all(|r| r.set.mean_prediction().argmax_class == r.label));
        let all_wrong = synth_generate(&SynthSpec::new(4, 3, 200, 1.0, 2.0, 1)).unwrap();
        assert!(all_wrong
            .rows
            .iter()
            .all(|r| r.set.mean_prediction().argmax_class != r.label));
    }

    #[test]
    fn shapes_and_ids() {
        let f = synth_generate(&SynthSpec::new(5, 2, 3, 0.5, 0.0, 3)).unwrap();
        assert_eq!(f.num_classes, 5);
        assert_eq!(f.rows.len(), 3);
        assert_eq!(f.rows[2].id, "s000003");
        assert!(f.rows.iter().all(|r| r.set.num_members() == 2));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        for spec in [
            SynthSpec::new(1, 2, 3, 0.1, 1.0, 0),
            SynthSpec::new(2, 0, 3, 0.1, 1.0, 0),
            SynthSpec::new(2, 2, 0, 0.1, 1.0, 0),
            SynthSpec::new(2, 2, 3, 1.5, 1.0, 0),
            SynthSpec::new(2, 2, 3, 0.1, -1.0, 0),
            SynthSpec::new(2, 2, 3, 0.1, 1.0, 0).with_outlier_rate(2.0),
        ] {
            assert_eq!(synth_generate(&spec).unwrap_err().exit_code(), 2);
        }
    }
}
