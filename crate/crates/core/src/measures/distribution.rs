//! Measures on the prediction set itself: mutual information, label-wise
//! variance and the Wasserstein distance to the closest first-order
//! prediction.

use std::cmp::Ordering;

use super::{Measure, UncertaintyScore, WdConvention};
use crate::error::{Error, Result};
use crate::simplex::{entropy_bits, sorted_sum, PredictionSet};

/// Entropy of the mean prediction minus the mean member entropy, in bits.
pub fn mutual_information(set: &PredictionSet) -> Result<UncertaintyScore> {
    if set.is_precise() {
        return UncertaintyScore::new(Measure::Mi, 0.0);
    }
    let mean = set.mean_prediction().mean;
    let mean_member_entropy =
        sorted_sum(set.members().iter().map(|p| entropy_bits(p))) / set.num_members() as f64;
    UncertaintyScore::new(Measure::Mi, mean.entropy() - mean_member_entropy)
}

/// `sum_k pbar_k (1 - pbar_k) - (1/M) sum_m sum_k p_km (1 - p_km)`, which is
/// the summed per-class population variance of the member probabilities.
pub fn label_wise_variance(set: &PredictionSet) -> Result<UncertaintyScore> {
    if set.is_precise() {
        return UncertaintyScore::new(Measure::Lwv, 0.0);
    }
    let gini = |p: &[f64]| sorted_sum(p.iter().map(|&x| x * (1.0 - x)));
    let mean = set.mean_prediction().mean;
    let mean_member_gini =
        sorted_sum(set.members().iter().map(|p| gini(p))) / set.num_members() as f64;
    UncertaintyScore::new(Measure::Lwv, gini(&mean) - mean_member_gini)
}

/// Minimizer and minimum of `sum_m ||p_m - q||_1` over the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WassersteinSolution {
    pub point: Vec<f64>,
    /// The unscaled objective `sum_m ||p_m - point||_1`.
    pub total_l1: f64,
}

/// One linear piece of a per-class objective `q -> sum_m |p_km - q|`.
struct Piece {
    class: usize,
    slope: i64,
    length: f64,
}

/// Exact minimizer of `sum_m ||p_m - q||_1` over the simplex.
///
/// The objective separates over classes into convex piecewise-linear
/// functions of `q_k` whose breakpoints are the sorted member coordinates
/// and whose slopes are `2j - M` on the `j`-th piece. Starting from `q = 0`,
/// the unit of mass is spent on pieces in order of increasing slope; the
/// slope of the last piece touched is the optimal multiplier of the
/// unit-sum constraint.
pub fn wasserstein_solution(set: &PredictionSet) -> Result<WassersteinSolution> {
    let k = set.num_classes();
    if set.is_precise() {
        return Ok(WassersteinSolution {
            point: set.members()[0].as_slice().to_vec(),
            total_l1: 0.0,
        });
    }
    let m = set.num_members() as i64;
    let mut pieces = Vec::with_capacity(k * (set.num_members() + 1));
    for class in 0..k {
        let mut coords: Vec<f64> = set.class_column(class).collect();
        coords.sort_by(f64::total_cmp);
        let mut left = 0.0;
        for (j, &right) in coords.iter().chain(std::iter::once(&1.0)).enumerate() {
            let length = right - left;
            if length > 0.0 {
                pieces.push(Piece {
                    class,
                    slope: 2 * j as i64 - m,
                    length,
                });
            }
            left = right;
        }
    }
    // Equal (slope, length) pieces are interchangeable for the objective, so
    // the value does not depend on class order.
    pieces.sort_by(|a, b| match a.slope.cmp(&b.slope) {
        Ordering::Equal => a.length.total_cmp(&b.length),
        other => other,
    });

    let mut point = vec![0.0; k];
    let mut changes = Vec::new();
    let mut remaining = 1.0f64;
    for piece in &pieces {
        if remaining <= 0.0 {
            break;
        }
        let take = piece.length.min(remaining);
        point[piece.class] += take;
        changes.push(take * piece.slope as f64);
        remaining -= take;
    }
    if remaining > 1e-12 {
        return Err(Error::Numerical(format!(
            "Wasserstein solver left {remaining} of the unit mass unallocated"
        )));
    }
    // Objective at q = 0 is the sum of all member coordinates.
    let at_origin = sorted_sum(set.members().iter().flat_map(|p| p.iter().copied()));
    let total_l1 = at_origin + sorted_sum(changes);
    Ok(WassersteinSolution { point, total_l1 })
}

/// Minimal L1 Wasserstein distance between the prediction set and any single
/// first-order prediction.
pub fn wasserstein_eu(set: &PredictionSet, convention: WdConvention) -> Result<UncertaintyScore> {
    let solution = wasserstein_solution(set)?;
    let value = match convention {
        WdConvention::Halved => 0.5 * solution.total_l1,
        WdConvention::Full => solution.total_l1,
    };
    UncertaintyScore::new(Measure::Wd, value)
}

/// Two-class closed form `sum_m |p_m - median(p_1..p_M)|` over class-0
/// coordinates, using the lower median for even `M`.
pub fn wasserstein_binary_median(set: &PredictionSet) -> Result<f64> {
    if set.num_classes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: set.num_classes(),
        });
    }
    let mut coords: Vec<f64> = set.class_column(0).collect();
    coords.sort_by(f64::total_cmp);
    let median = coords[(coords.len() - 1) / 2];
    Ok(sorted_sum(coords.iter().map(|p| (p - median).abs())))
}
