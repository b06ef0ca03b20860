//! Probability vectors on the simplex and finite prediction sets.

use std::ops::Deref;

use crate::error::{Error, Result};

/// Largest deviation of a raw row sum from 1 that is repaired by division.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-4;

/// Row sums this close to 1 are taken as already normalized. Keeps
/// normalization idempotent, so serialized vectors reload bit-for-bit.
const SUM_NOISE: f64 = 1e-12;

/// A point on the (K-1)-simplex: one first-order prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    /// Validates a raw probability row, renormalizing sums within
    /// [`RENORMALIZE_TOLERANCE`] of 1.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::invalid(format!(
                "a probability vector needs at least 2 classes, got {}",
                probs.len()
            )));
        }
        if let Some((k, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::invalid(format!(
                "class {k} has probability {p}, expected a finite nonnegative value"
            )));
        }
        let sum: f64 = probs.iter().sum();
        let deviation = (sum - 1.0).abs();
        if deviation > RENORMALIZE_TOLERANCE {
            return Err(Error::invalid(format!(
                "probabilities sum to {sum}, more than {RENORMALIZE_TOLERANCE} away from 1"
            )));
        }
        let probs = if deviation > SUM_NOISE {
            probs.into_iter().map(|p| p / sum).collect()
        } else {
            probs
        };
        Ok(ProbabilityVector(probs))
    }

    /// Wraps values that are known to lie on the simplex up to rounding.
    pub(crate) fn from_simplex_unchecked(probs: Vec<f64>) -> Self {
        debug_assert!(probs.len() >= 2);
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        ProbabilityVector(probs)
    }

    /// The degenerate distribution putting all mass on `class`.
    pub fn one_hot(class: usize, num_classes: usize) -> Result<Self> {
        if class >= num_classes {
            return Err(Error::invalid(format!(
                "class {class} out of range for {num_classes} classes"
            )));
        }
        let mut probs = vec![0.0; num_classes];
        probs[class] = 1.0;
        Self::new(probs)
    }

    pub fn uniform(num_classes: usize) -> Result<Self> {
        Self::new(vec![1.0 / num_classes as f64; num_classes])
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.0)
    }
}

impl Deref for ProbabilityVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ProbabilityVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// The distribution-based second-order representation: a uniform
/// distribution over `M >= 1` first-order predictions sharing one class count.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    members: Vec<ProbabilityVector>,
}

impl PredictionSet {
    pub fn new(members: Vec<ProbabilityVector>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::invalid("a prediction set needs at least one member"))?;
        let k = first.num_classes();
        if let Some(bad) = members.iter().find(|m| m.num_classes() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: bad.num_classes(),
            });
        }
        Ok(PredictionSet { members })
    }

    /// Builds a set from raw rows, validating each one.
    pub fn from_rows<I, R>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: Into<Vec<f64>>,
    {
        let members = rows
            .into_iter()
            .map(|r| ProbabilityVector::new(r.into()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(members)
    }

    pub fn members(&self) -> &[ProbabilityVector] {
        &self.members
    }

    pub fn num_members(&self) -> usize {
        self.members.len()
    }

    pub fn num_classes(&self) -> usize {
        self.members[0].num_classes()
    }

    /// The probabilities every member assigns to `class`.
    pub fn class_column(&self, class: usize) -> impl Iterator<Item = f64> + '_ {
        self.members.iter().map(move |m| m[class])
    }

    /// True when every member is bit-identical to the first one, i.e. the
    /// second-order distribution is a point mass.
    pub fn is_precise(&self) -> bool {
        let first = &self.members[0];
        self.members[1..].iter().all(|m| {
            m.iter()
                .zip(first.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
        })
    }

    pub fn mean_prediction(&self) -> MeanPrediction {
        let m = self.num_members() as f64;
        let mean: Vec<f64> = (0..self.num_classes())
            .map(|k| sorted_sum(self.class_column(k)) / m)
            .collect();
        let argmax_class = argmax(&mean);
        MeanPrediction {
            mean: ProbabilityVector::from_simplex_unchecked(mean),
            argmax_class,
        }
    }
}

/// The averaged member prediction and the class it predicts.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPrediction {
    pub mean: ProbabilityVector,
    pub argmax_class: usize,
}

/// A subset of the classes `0..K`, encoded as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassSubset {
    mask: u64,
    num_classes: usize,
}

impl ClassSubset {
    pub const MAX_CLASSES: usize = 63;

    pub fn new(mask: u64, num_classes: usize) -> Result<Self> {
        if num_classes > Self::MAX_CLASSES {
            return Err(Error::invalid(format!(
                "class subsets support at most {} classes",
                Self::MAX_CLASSES
            )));
        }
        if mask >> num_classes != 0 {
            return Err(Error::invalid(format!(
                "mask {mask:#b} selects classes outside 0..{num_classes}"
            )));
        }
        Ok(ClassSubset { mask, num_classes })
    }

    pub fn from_classes<I: IntoIterator<Item = usize>>(classes: I, num_classes: usize) -> Result<Self> {
        let mut mask = 0u64;
        for c in classes {
            if c >= num_classes {
                return Err(Error::invalid(format!(
                    "class {c} out of range for {num_classes} classes"
                )));
            }
            mask |= 1 << c;
        }
        Self::new(mask, num_classes)
    }

    pub fn empty(num_classes: usize) -> Self {
        ClassSubset { mask: 0, num_classes }
    }

    pub fn full(num_classes: usize) -> Self {
        ClassSubset {
            mask: full_mask(num_classes),
            num_classes,
        }
    }

    pub fn mask(self) -> u64 {
        self.mask
    }

    pub fn num_classes(self) -> usize {
        self.num_classes
    }

    pub fn cardinality(self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn contains(self, class: usize) -> bool {
        class < self.num_classes && self.mask >> class & 1 == 1
    }

    pub fn complement(self) -> Self {
        ClassSubset {
            mask: !self.mask & full_mask(self.num_classes),
            num_classes: self.num_classes,
        }
    }

    pub fn is_subset_of(self, other: ClassSubset) -> bool {
        self.mask & !other.mask == 0
    }

    pub fn classes(self) -> impl Iterator<Item = usize> {
        (0..self.num_classes).filter(move |&c| self.mask >> c & 1 == 1)
    }

    /// Every subset of `0..num_classes`, in mask order.
    pub fn all(num_classes: usize) -> impl Iterator<Item = ClassSubset> {
        (0..=full_mask(num_classes)).map(move |mask| ClassSubset { mask, num_classes })
    }
}

pub(crate) fn full_mask(num_classes: usize) -> u64 {
    if num_classes >= 64 {
        u64::MAX
    } else {
        (1u64 << num_classes) - 1
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Sums after sorting, so the result does not depend on input order.
pub(crate) fn sorted_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

/// `-p log2 p` with `0 log 0 = 0`.
pub(crate) fn entropy_term(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits of a (not necessarily validated) probability row.
pub fn entropy_bits(p: &[f64]) -> f64 {
    sorted_sum(p.iter().map(|&x| entropy_term(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[&[f64]]) -> PredictionSet {
        PredictionSet::from_rows(rows.iter().map(|r| r.to_vec())).unwrap()
    }

    #[test]
    fn mean_of_two_binary_members() {
        let mp = set(&[&[0.9, 0.1], &[0.5, 0.5]]).mean_prediction();
        assert!((mp.mean[0] - 0.7).abs() < 1e-12);
        assert!((mp.mean[1] - 0.3).abs() < 1e-12);
        assert_eq!(mp.argmax_class, 0);
    }

    #[test]
    fn mean_of_single_member_is_the_member() {
        let mp = set(&[&[1.0, 0.0, 0.0]]).mean_prediction();
        assert_eq!(mp.mean.as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(mp.argmax_class, 0);
    }

    #[test]
    fn argmax_tie_goes_to_lowest_index() {
        let mp = set(&[&[0.2, 0.8], &[0.8, 0.2]]).mean_prediction();
        assert_eq!(mp.mean.as_slice(), &[0.5, 0.5]);
        assert_eq!(mp.argmax_class, 0);
        let p = ProbabilityVector::new(vec![0.2, 0.4, 0.4]).unwrap();
        assert_eq!(p.argmax(), 1);
    }

    #[test]
    fn small_sum_deviation_is_renormalized() {
        let p = ProbabilityVector::new(vec![0.50005, 0.5]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[0] > p[1]);
    }

    #[test]
    fn large_sum_deviation_is_rejected() {
        let err = ProbabilityVector::new(vec![0.4, 0.5]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(ProbabilityVector::new(vec![0.6, 0.5]).is_err());
    }

    #[test]
    fn rejects_negative_nan_and_single_class() {
        assert!(ProbabilityVector::new(vec![1.1, -0.1]).is_err());
        assert!(ProbabilityVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(ProbabilityVector::new(vec![1.0]).is_err());
    }

    #[test]
    fn normalization_is_idempotent() {
        let p = ProbabilityVector::new(vec![0.1, 0.2, 0.70004]).unwrap();
        let again = ProbabilityVector::new(p.as_slice().to_vec()).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn prediction_set_checks_class_count() {
        let a = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        let b = ProbabilityVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(
            PredictionSet::new(vec![a, b]),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
        assert!(PredictionSet::new(vec![]).is_err());
    }

    #[test]
    fn precise_sets() {
        assert!(set(&[&[0.3, 0.7], &[0.3, 0.7]]).is_precise());
        assert!(!set(&[&[0.3, 0.7], &[0.4, 0.6]]).is_precise());
    }

    #[test]
    fn subset_complement_and_cardinality() {
        let a = ClassSubset::from_classes([0, 2], 4).unwrap();
        assert_eq!(a.cardinality(), 2);
        assert_eq!(a.complement().cardinality(), 2);
        assert_eq!(a.complement().classes().collect::<Vec<_>>(), vec![1, 3]);
        assert!(a.contains(2) && !a.contains(1));
        assert!(ClassSubset::empty(4).is_subset_of(a));
        assert!(a.is_subset_of(ClassSubset::full(4)));
        assert_eq!(ClassSubset::full(4).complement(), ClassSubset::empty(4));
        assert!(ClassSubset::new(0b10000, 4).is_err());
        assert_eq!(ClassSubset::all(3).count(), 8);
    }

    #[test]
    fn entropy_in_bits() {
        assert_eq!(entropy_bits(&[0.5, 0.5]), 1.0);
        assert_eq!(entropy_bits(&[1.0, 0.0]), 0.0);
        assert!((entropy_bits(&[0.25; 4]) - 2.0).abs() < 1e-15);
    }
}
