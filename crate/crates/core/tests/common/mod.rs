#![allow(dead_code)]

use eucompare_core::{PredictionSet, ProbabilityIntervals};
use proptest::prelude::*;

/// A row on the simplex. Raw weights come from a small integer grid half
/// the time, which produces exact ties and zeros.
pub fn row(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(0.001f64..1.0, k),
        prop::collection::vec((0u8..5).prop_map(f64::from), k),
    ]
    .prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        if total == 0.0 {
            vec![1.0 / raw.len() as f64; raw.len()]
        } else {
            raw.iter().map(|x| x / total).collect()
        }
    })
}

pub fn set_with(k: usize, members: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = PredictionSet> {
    prop::collection::vec(row(k), members)
        .prop_map(|rows| PredictionSet::from_rows(rows).expect("rows are on the simplex"))
}

pub fn set(
    classes: std::ops::RangeInclusive<usize>,
    members: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = PredictionSet> {
    classes.prop_flat_map(move |k| set_with(k, members.clone()))
}

pub fn intervals(classes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = ProbabilityIntervals> {
    set(classes, 1..=6).prop_map(|s| ProbabilityIntervals::from_prediction_set(&s))
}

/// The same set with classes relabelled by `perm` in every member.
pub fn permute_classes(set: &PredictionSet, perm: &[usize]) -> PredictionSet {
    PredictionSet::from_rows(
        set.members()
            .iter()
            .map(|p| perm.iter().map(|&c| p[c]).collect::<Vec<f64>>()),
    )
    .unwrap()
}
