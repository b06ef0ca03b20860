//! Credal sets induced by class-wise probability intervals.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::simplex::{full_mask, ClassSubset, PredictionSet, ProbabilityVector};

/// Slack allowed in the nonemptiness check `sum(lower) <= 1 <= sum(upper)`.
const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Distance under which a vertex coordinate is snapped onto its bound.
pub const VERTEX_TOLERANCE: f64 = 1e-9;

/// Default cap on K for vertex enumeration (`K * 2^(K-1)` candidates).
pub const DEFAULT_VERTEX_CAP: usize = 16;

/// Default cap on K for subset enumeration (`2^K` subsets).
pub const DEFAULT_SUBSET_CAP: usize = 20;

/// Per-class bounds `[lower_k, upper_k]`. The credal set is every
/// probability vector whose entries lie inside their class's interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityIntervals {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ProbabilityIntervals {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.len() < 2 {
            return Err(Error::invalid("probability intervals need at least 2 classes"));
        }
        for (k, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && 0.0 <= l && l <= u && u <= 1.0) {
                return Err(Error::invalid(format!(
                    "class {k} has interval [{l}, {u}], expected 0 <= lower <= upper <= 1"
                )));
            }
        }
        let sum_lower: f64 = lower.iter().sum();
        let sum_upper: f64 = upper.iter().sum();
        if sum_lower > 1.0 + FEASIBILITY_TOLERANCE || sum_upper < 1.0 - FEASIBILITY_TOLERANCE {
            return Err(Error::invalid(format!(
                "intervals induce an empty credal set (sum of lower bounds {sum_lower}, \
                 sum of upper bounds {sum_upper})"
            )));
        }
        Ok(ProbabilityIntervals { lower, upper })
    }

    /// Coordinatewise minimum and maximum over the members.
    pub fn from_prediction_set(set: &PredictionSet) -> Self {
        let k = set.num_classes();
        let mut lower = set.members()[0].as_slice().to_vec();
        let mut upper = lower.clone();
        for member in &set.members()[1..] {
            for c in 0..k {
                lower[c] = lower[c].min(member[c]);
                upper[c] = upper[c].max(member[c]);
            }
        }
        ProbabilityIntervals { lower, upper }
    }

    /// `[0, 1]` on every class: the whole simplex.
    pub fn vacuous(num_classes: usize) -> Result<Self> {
        Self::new(vec![0.0; num_classes], vec![1.0; num_classes])
    }

    /// Zero-width intervals around a single distribution.
    pub fn precise(p: &ProbabilityVector) -> Self {
        ProbabilityIntervals {
            lower: p.as_slice().to_vec(),
            upper: p.as_slice().to_vec(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, p: &[f64], tolerance: f64) -> bool {
        p.len() == self.num_classes()
            && (p.iter().sum::<f64>() - 1.0).abs() <= tolerance
            && p
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&x, (&l, &u))| x >= l - tolerance && x <= u + tolerance)
    }

    /// For two classes: the reachable range `[p_L, p_U]` of class 0.
    pub fn binary_bounds(&self) -> Result<(f64, f64)> {
        if self.num_classes() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.num_classes(),
            });
        }
        let lo = self.lower[0].max(1.0 - self.upper[1]);
        let hi = self.upper[0].min(1.0 - self.lower[1]);
        Ok((lo, hi.max(lo)))
    }

    fn check_subset(&self, a: ClassSubset) -> Result<()> {
        if a.num_classes() != self.num_classes() {
            return Err(Error::DimensionMismatch {
                expected: self.num_classes(),
                found: a.num_classes(),
            });
        }
        Ok(())
    }

    /// Lower probability of `a`: `max(sum_{k in A} lower_k, 1 - sum_{k not in A} upper_k)`.
    pub fn lower_probability(&self, a: ClassSubset) -> Result<f64> {
        self.check_subset(a)?;
        Ok(self.lower_probability_of_mask(a.mask()))
    }

    /// Upper probability of `a`, the conjugate `1 - lower(A^c)`.
    pub fn upper_probability(&self, a: ClassSubset) -> Result<f64> {
        self.check_subset(a)?;
        Ok(1.0 - self.lower_probability_of_mask(a.complement().mask()))
    }

    /// `upper(A) - lower(A)`, written symmetrically in `A` and `A^c`.
    pub fn imprecision(&self, a: ClassSubset) -> Result<f64> {
        self.check_subset(a)?;
        let both = self.lower_probability_of_mask(a.mask())
            + self.lower_probability_of_mask(a.complement().mask());
        Ok(1.0 - both)
    }

    pub(crate) fn lower_probability_of_mask(&self, mask: u64) -> f64 {
        let k = self.num_classes();
        let full = full_mask(k);
        if mask == 0 {
            return 0.0;
        }
        if mask == full {
            return 1.0;
        }
        let mut inside = 0.0;
        let mut outside = 0.0;
        for c in 0..k {
            if mask >> c & 1 == 1 {
                inside += self.lower[c];
            } else {
                outside += self.upper[c];
            }
        }
        combine_lower(inside, outside)
    }

    /// Lower probabilities of every subset, indexed by mask. Bit-identical
    /// to [`Self::lower_probability`] on each entry.
    pub fn lower_probability_table(&self, subset_cap: usize) -> Result<Vec<f64>> {
        let k = self.num_classes();
        if k > subset_cap || k >= 64 {
            return Err(Error::EnumerationLimit {
                what: "subset enumeration",
                k,
                cap: subset_cap,
            });
        }
        let n = 1usize << k;
        let mut sum_lower = vec![0.0f64; n];
        let mut sum_upper = vec![0.0f64; n];
        for mask in 1..n {
            // Add the highest class last so sums accumulate in ascending
            // class order, matching the direct evaluation.
            let top = usize::BITS - 1 - mask.leading_zeros();
            let rest = mask & !(1 << top);
            sum_lower[mask] = sum_lower[rest] + self.lower[top as usize];
            sum_upper[mask] = sum_upper[rest] + self.upper[top as usize];
        }
        let full = n - 1;
        let mut table = vec![0.0f64; n];
        for mask in 1..full {
            table[mask] = combine_lower(sum_lower[mask], sum_upper[full ^ mask]);
        }
        table[full] = 1.0;
        Ok(table)
    }

    /// Extreme points of the credal polytope.
    ///
    /// Every vertex has at most one coordinate strictly inside its interval,
    /// so it is found by pinning all classes but one to a bound and solving
    /// the remaining class from the unit-sum constraint.
    pub fn vertices(&self, vertex_cap: usize) -> Result<Vec<ProbabilityVector>> {
        let k = self.num_classes();
        if k > vertex_cap || k >= 64 {
            return Err(Error::EnumerationLimit {
                what: "vertex enumeration",
                k,
                cap: vertex_cap,
            });
        }
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        let mut out = Vec::new();
        let mut candidate = vec![0.0; k];
        for free in 0..k {
            for bits in 0u64..(1 << (k - 1)) {
                let mut rest = 0.0;
                let mut bit = 0;
                for c in 0..k {
                    if c == free {
                        continue;
                    }
                    candidate[c] = if bits >> bit & 1 == 1 {
                        self.upper[c]
                    } else {
                        self.lower[c]
                    };
                    rest += candidate[c];
                    bit += 1;
                }
                let value = 1.0 - rest;
                let (l, u) = (self.lower[free], self.upper[free]);
                if value < l - VERTEX_TOLERANCE || value > u + VERTEX_TOLERANCE {
                    continue;
                }
                candidate[free] = if (value - l).abs() <= VERTEX_TOLERANCE {
                    l
                } else if (value - u).abs() <= VERTEX_TOLERANCE {
                    u
                } else {
                    value
                };
                // +0.0 folds a negative zero onto the positive one.
                let key: Vec<u64> = candidate.iter().map(|x| (x + 0.0).to_bits()).collect();
                if seen.insert(key) {
                    out.push(ProbabilityVector::from_simplex_unchecked(
                        candidate.iter().map(|x| x + 0.0).collect(),
                    ));
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Numerical(
                "credal set has no vertex within tolerance".into(),
            ));
        }
        Ok(out)
    }
}

fn combine_lower(sum_lower_inside: f64, sum_upper_outside: f64) -> f64 {
    sum_lower_inside.max(1.0 - sum_upper_outside).clamp(0.0, 1.0)
}

/// Convenience wrapper over [`ProbabilityIntervals::from_prediction_set`].
pub fn build_intervals(set: &PredictionSet) -> ProbabilityIntervals {
    ProbabilityIntervals::from_prediction_set(set)
}
