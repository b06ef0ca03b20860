//! Benchmarks driven by per-sample uncertainty scores: selective prediction
//! (accuracy-rejection curves) and out-of-distribution detection (AUROC).

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Measure;

/// Guards `floor((1 - beta) * N)` against products like `6.999999999999999`.
const RETAIN_EPSILON: f64 = 1e-9;

/// One evaluated sample: labels plus its score under each measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub sample_id: String,
    pub true_label: usize,
    pub predicted_label: usize,
    pub scores: BTreeMap<Measure, f64>,
}

impl EvaluationRecord {
    pub fn is_correct(&self) -> bool {
        self.true_label == self.predicted_label
    }
}

/// The default rejection-rate grid `0.00, 0.01, ..., 0.50`.
pub fn default_betas() -> Vec<f64> {
    (0..=50).map(|i| i as f64 / 100.0).collect()
}

/// Parses a beta grid: `default`, a comma list (`0,0.1,0.2`), or a range
/// `start:stop:step` with an inclusive stop.
pub fn parse_betas(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("default") {
        return Ok(default_betas());
    }
    let number = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("`{s}` is not a rejection rate")))
    };
    let betas = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::invalid(format!(
                "beta range `{spec}` must look like start:stop:step"
            )));
        }
        let (start, stop, step) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(Error::invalid(format!("empty or invalid beta range `{spec}`")));
        }
        let count = ((stop - start) / step + RETAIN_EPSILON).floor() as usize;
        (0..=count).map(|i| start + i as f64 * step).collect()
    } else {
        spec.split(',').map(number).collect::<Result<Vec<_>>>()?
    };
    validate_betas(&betas)?;
    Ok(betas)
}

fn validate_betas(betas: &[f64]) -> Result<()> {
    if betas.is_empty() {
        return Err(Error::invalid("the rejection-rate grid is empty"));
    }
    if let Some(b) = betas.iter().find(|b| !(0.0..1.0).contains(*b)) {
        return Err(Error::invalid(format!("rejection rate {b} is outside [0, 1)")));
    }
    if betas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("rejection rates must be strictly increasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcPoint {
    pub beta: f64,
    pub accuracy: f64,
    pub retained: usize,
}

/// Accuracy of retained predictions against the rejection rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRejectionCurve {
    pub measure: Measure,
    pub num_samples: usize,
    pub points: Vec<ArcPoint>,
    /// Rejection rates whose retained set was empty.
    pub omitted: Vec<f64>,
    /// Trapezoidal area divided by `beta_max - beta_min`; the accuracy
    /// itself when the curve has a single point.
    pub auarc: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

/// Rejects the most uncertain samples at each rate and scores the rest.
///
/// Scores are sorted ascending with ties kept in input order, and the first
/// `floor((1 - beta) N)` samples are retained.
pub fn selective_prediction(
    records: &[EvaluationRecord],
    measure: Measure,
    betas: &[f64],
) -> Result<AccuracyRejectionCurve> {
    validate_betas(betas)?;
    if records.is_empty() {
        return Err(Error::invalid("selective prediction needs at least one record"));
    }
    let mut scored = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let score = *r.scores.get(&measure).ok_or_else(|| {
            Error::invalid(format!("record `{}` has no {measure} score", r.sample_id))
        })?;
        if score.is_nan() {
            return Err(Error::invalid(format!(
                "record `{}` has a NaN {measure} score",
                r.sample_id
            )));
        }
        scored.push((score, i));
    }
    // Stable: equal scores keep their input order.
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let correct_prefix: Vec<usize> = std::iter::once(0)
        .chain(scored.iter().scan(0usize, |acc, &(_, i)| {
            *acc += records[i].is_correct() as usize;
            Some(*acc)
        }))
        .collect();

    let n = records.len();
    let mut points = Vec::with_capacity(betas.len());
    let mut omitted = Vec::new();
    for &beta in betas {
        let retained = ((1.0 - beta) * n as f64 + RETAIN_EPSILON).floor() as usize;
        let retained = retained.min(n);
        if retained == 0 {
            warn!("rejection rate {beta} retains no samples; point omitted");
            omitted.push(beta);
            continue;
        }
        points.push(ArcPoint {
            beta,
            accuracy: correct_prefix[retained] as f64 / retained as f64,
            retained,
        });
    }
    let (first, last) = match (points.first(), points.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => {
            return Err(Error::invalid(
                "every rejection rate leaves the retained set empty",
            ))
        }
    };
    let auarc = if points.len() == 1 {
        first.accuracy
    } else {
        let area: f64 = points
            .windows(2)
            .map(|w| 0.5 * (w[1].beta - w[0].beta) * (w[0].accuracy + w[1].accuracy))
            .sum();
        area / (last.beta - first.beta)
    };
    Ok(AccuracyRejectionCurve {
        measure,
        num_samples: n,
        points,
        omitted,
        auarc,
        beta_min: first.beta,
        beta_max: last.beta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub auroc: f64,
    /// Mann-Whitney statistic of the OOD sample: pairs with a higher OOD
    /// score, ties counting one half.
    pub u_statistic: f64,
    pub n_id: usize,
    pub n_ood: usize,
}

/// AUROC of separating OOD (label 1) from in-distribution (label 0)
/// samples by their uncertainty score, with midranks for ties.
pub fn ood_detection(id_scores: &[f64], ood_scores: &[f64]) -> Result<DetectionResult> {
    if id_scores.is_empty() || ood_scores.is_empty() {
        return Err(Error::invalid(
            "OOD detection needs at least one in-distribution and one OOD score",
        ));
    }
    if id_scores.iter().chain(ood_scores).any(|s| s.is_nan()) {
        return Err(Error::invalid("OOD detection scores contain NaN"));
    }
    let mut pooled: Vec<(f64, bool)> = id_scores
        .iter()
        .map(|&s| (s, false))
        .chain(ood_scores.iter().map(|&s| (s, true)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Doubled midranks stay integral: a tie block over positions i..=j
    // (1-based) has midrank (i + j) / 2.
    let mut doubled_rank_sum: u128 = 0;
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start;
        while end + 1 < pooled.len() && pooled[end + 1].0 == pooled[start].0 {
            end += 1;
        }
        let doubled = (start + 1 + end + 1) as u128;
        let ood_in_block = pooled[start..=end].iter().filter(|p| p.1).count() as u128;
        doubled_rank_sum += doubled * ood_in_block;
        start = end + 1;
    }
    let n_id = id_scores.len();
    let n_ood = ood_scores.len();
    let doubled_u = doubled_rank_sum - (n_ood as u128) * (n_ood as u128 + 1);
    let u_statistic = doubled_u as f64 / 2.0;
    let auroc = u_statistic / (n_id as f64 * n_ood as f64);
    Ok(DetectionResult {
        auroc,
        u_statistic,
        n_id,
        n_ood,
    })
}
