//! Measures on the credal set spanned by probability intervals: entropy
//! difference, generalized Hartley and maximum mean imprecision.

use super::{clamp_noise, Measure, UncertaintyScore};
use crate::credal::ProbabilityIntervals;
use crate::error::{Error, Result};
use crate::simplex::{entropy_bits, entropy_term, sorted_sum, ClassSubset};

/// Maximum-entropy distribution in the credal set and its entropy in bits.
///
/// The optimum has the water-filling form `p_k = clamp(t, lower_k, upper_k)`
/// for a level `t` with `sum_k p_k = 1`. The level is found exactly on the
/// piecewise-linear map `t -> sum_k clamp(t, lower_k, upper_k)`.
pub fn max_entropy_point(iv: &ProbabilityIntervals) -> (Vec<f64>, f64) {
    let lower = iv.lower();
    let upper = iv.upper();
    let k = iv.num_classes();

    let filled = |t: f64| -> f64 { (0..k).map(|c| t.clamp(lower[c], upper[c])).sum() };

    let mut breaks: Vec<f64> = lower.iter().chain(upper).copied().collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let segment = breaks.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        let at_a = filled(a);
        (at_a < 1.0 && filled(b) >= 1.0).then_some((a, b))
    });
    let Some((a, b)) = segment else {
        // Either sum(lower) >= 1 or sum(upper) <= 1, up to rounding: the
        // credal set is (numerically) a single point.
        let point: Vec<f64> = if lower.iter().sum::<f64>() >= 1.0 {
            lower.to_vec()
        } else {
            upper.to_vec()
        };
        let h = entropy_bits(&point);
        return (point, h);
    };

    // Classes pinned to a bound on (a, b) keep that bound; the others share
    // the remaining mass equally.
    let mut point = vec![0.0; k];
    let mut active = Vec::new();
    let mut pinned_terms = Vec::with_capacity(k);
    let mut pinned_mass = 0.0;
    for c in 0..k {
        if lower[c] <= a && upper[c] >= b {
            active.push(c);
        } else {
            let p = if lower[c] >= b { lower[c] } else { upper[c] };
            point[c] = p;
            pinned_mass += p;
            pinned_terms.push(entropy_term(p));
        }
    }
    let free_mass = (1.0 - pinned_mass).max(0.0);
    let count = active.len() as f64;
    let level = free_mass / count;
    for &c in &active {
        point[c] = level;
    }
    if free_mass > 0.0 {
        // -count * level * log2(level), written so that the uniform case is
        // exactly log2(K).
        pinned_terms.push(free_mass * (count.log2() - free_mass.log2()));
    }
    (point, sorted_sum(pinned_terms))
}

/// Upper entropy of the credal set, in bits.
pub fn max_entropy(iv: &ProbabilityIntervals) -> f64 {
    max_entropy_point(iv).1
}

/// Minimum-entropy vertex of the credal set and its entropy in bits.
///
/// Entropy is concave, so the minimum over the polytope sits at a vertex.
pub fn min_entropy_point(iv: &ProbabilityIntervals, vertex_cap: usize) -> Result<(Vec<f64>, f64)> {
    iv.vertices(vertex_cap)?
        .into_iter()
        .map(|v| {
            let h = v.entropy();
            (v.into_inner(), h)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Numerical("credal set has no vertices".into()))
}

/// Lower entropy of the credal set, in bits.
pub fn min_entropy(iv: &ProbabilityIntervals, vertex_cap: usize) -> Result<f64> {
    Ok(min_entropy_point(iv, vertex_cap)?.1)
}

/// Upper minus lower entropy.
pub fn entropy_difference(iv: &ProbabilityIntervals, vertex_cap: usize) -> Result<UncertaintyScore> {
    let low = min_entropy(iv, vertex_cap)?;
    if iv.is_degenerate() {
        return UncertaintyScore::new(Measure::Hdiff, 0.0);
    }
    UncertaintyScore::new(Measure::Hdiff, max_entropy(iv) - low)
}

/// Two-class closed form of the entropy difference on `[p_L, p_U]`:
/// `max(H(p_U), H(p_L), H(0.5) if 0.5 in [p_L, p_U]) - min(H(p_U), H(p_L))`.
pub fn entropy_difference_binary(iv: &ProbabilityIntervals) -> Result<f64> {
    let (lo, hi) = iv.binary_bounds()?;
    let h = |p: f64| entropy_bits(&[p, 1.0 - p]);
    let (h_lo, h_hi) = (h(lo), h(hi));
    let mut upper = h_lo.max(h_hi);
    if lo <= 0.5 && 0.5 <= hi {
        upper = upper.max(1.0);
    }
    clamp_noise("binary entropy difference", upper - h_lo.min(h_hi))
}

/// Moebius inverse of the lower-probability capacity, one mass per subset.
#[derive(Debug, Clone, PartialEq)]
pub struct MoebiusMass {
    num_classes: usize,
    masses: Vec<f64>,
}

impl MoebiusMass {
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn mass(&self, subset: ClassSubset) -> Result<f64> {
        if subset.num_classes() != self.num_classes {
            return Err(Error::DimensionMismatch {
                expected: self.num_classes,
                found: subset.num_classes(),
            });
        }
        Ok(self.masses[subset.mask() as usize])
    }

    /// Masses indexed by subset mask.
    pub fn as_slice(&self) -> &[f64] {
        &self.masses
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassSubset, f64)> + '_ {
        let k = self.num_classes;
        self.masses.iter().enumerate().map(move |(mask, &m)| {
            (
                ClassSubset::new(mask as u64, k).expect("mask below 2^K"),
                m,
            )
        })
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// `m(Q) = sum_{A subset of Q} (-1)^{|Q \ A|} lower(A)` for every subset `Q`.
///
/// Evaluated with the in-place subset-sum inversion, one class at a time,
/// which yields the same alternating sums in `O(K 2^K)`.
pub fn moebius_mass(iv: &ProbabilityIntervals, subset_cap: usize) -> Result<MoebiusMass> {
    let k = iv.num_classes();
    let mut masses = iv.lower_probability_table(subset_cap)?;
    for c in 0..k {
        let bit = 1usize << c;
        for mask in 0..masses.len() {
            if mask & bit != 0 {
                masses[mask] -= masses[mask ^ bit];
            }
        }
    }
    masses[0] = 0.0;
    Ok(MoebiusMass {
        num_classes: k,
        masses,
    })
}

/// `sum_Q m(Q) log2 |Q|` over subsets with at least two classes.
pub fn generalized_hartley(iv: &ProbabilityIntervals, subset_cap: usize) -> Result<UncertaintyScore> {
    let mass = moebius_mass(iv, subset_cap)?;
    // Rounding in the alternating sums would otherwise leave ~1e-17 behind.
    if iv.is_degenerate() {
        return UncertaintyScore::new(Measure::Gh, 0.0);
    }
    let k = iv.num_classes();
    let mut by_size = vec![0.0f64; k + 1];
    for (mask, m) in mass.as_slice().iter().enumerate() {
        by_size[mask.count_ones() as usize] += m;
    }
    let gh = (2..=k).map(|size| by_size[size] * (size as f64).log2()).sum();
    UncertaintyScore::new(Measure::Gh, gh)
}

/// `sup_A upper(A) - lower(A)`.
pub fn max_mean_imprecision(iv: &ProbabilityIntervals, subset_cap: usize) -> Result<UncertaintyScore> {
    let k = iv.num_classes();
    let lower = iv.lower_probability_table(subset_cap)?;
    if iv.is_degenerate() {
        return UncertaintyScore::new(Measure::Mmi, 0.0);
    }
    let full = lower.len() - 1;
    // A and its complement give the same gap; keep the half without the
    // highest class.
    let half = 1usize << (k - 1);
    let mmi = (0..half)
        .map(|mask| 1.0 - (lower[mask] + lower[full ^ mask]))
        .fold(0.0f64, f64::max);
    UncertaintyScore::new(Measure::Mmi, mmi.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::credal::{DEFAULT_SUBSET_CAP as SUBSETS, DEFAULT_VERTEX_CAP as VERTICES};
    use crate::simplex::ProbabilityVector;

    fn iv(lower: &[f64], upper: &[f64]) -> ProbabilityIntervals {
        ProbabilityIntervals::new(lower.to_vec(), upper.to_vec()).unwrap()
    }

    fn h2(p: f64) -> f64 {
        entropy_bits(&[p, 1.0 - p])
    }

    #[test]
    fn max_entropy_examples() {
        for k in 2..=6 {
            let vac = ProbabilityIntervals::vacuous(k).unwrap();
            assert_eq!(max_entropy(&vac), (k as f64).log2());
        }
        let p = ProbabilityVector::new(vec![0.1, 0.6, 0.3]).unwrap();
        assert_eq!(max_entropy(&ProbabilityIntervals::precise(&p)), p.entropy());
        let binary = iv(&[0.2, 0.6], &[0.4, 0.8]);
        assert!((max_entropy(&binary) - 0.970_950_594_454_668_639).abs() < 1e-12);
    }

    #[test]
    fn max_entropy_point_is_feasible() {
        let iv = iv(&[0.0, 0.05, 0.3, 0.1], &[0.2, 0.6, 0.5, 0.15]);
        let (p, h) = max_entropy_point(&iv);
        assert!(iv.contains(&p, 1e-12));
        assert!((entropy_bits(&p) - h).abs() < 1e-12);
    }

    #[test]
    fn min_entropy_examples() {
        let vac = ProbabilityIntervals::vacuous(4).unwrap();
        assert_eq!(min_entropy(&vac, VERTICES).unwrap(), 0.0);
        let p = ProbabilityVector::new(vec![0.1, 0.6, 0.3]).unwrap();
        assert_eq!(
            min_entropy(&ProbabilityIntervals::precise(&p), VERTICES).unwrap(),
            p.entropy()
        );
        let binary = iv(&[0.2, 0.6], &[0.4, 0.8]);
        let low = min_entropy(&binary, VERTICES).unwrap();
        assert!((low - 0.721_928_094_887_362_348).abs() < 1e-12);
    }

    #[test]
    fn entropy_difference_examples() {
        let p = ProbabilityVector::new(vec![0.25, 0.25, 0.5]).unwrap();
        let hd = entropy_difference(&ProbabilityIntervals::precise(&p), VERTICES).unwrap();
        assert_eq!(hd.value, 0.0);

        let vac = ProbabilityIntervals::vacuous(2).unwrap();
        assert_eq!(entropy_difference(&vac, VERTICES).unwrap().value, 1.0);

        // Interval [0.3, 0.8] on class 0 covers 0.5; min(H(0.3), H(0.8)) = H(0.8).
        let wide = iv(&[0.3, 0.2], &[0.8, 0.7]);
        let hd = entropy_difference(&wide, VERTICES).unwrap().value;
        assert!((hd - 0.278_071_905_112_637_652).abs() < 1e-12, "{hd}");
        assert!((entropy_difference_binary(&wide).unwrap() - hd).abs() < 1e-12);
        assert!((hd - (1.0 - h2(0.8))).abs() < 1e-12);
    }

    #[test]
    fn binary_closed_form_guards_the_midpoint() {
        // 0.5 is outside [0.6, 0.9]: upper entropy is H(0.6), not 1 bit.
        let narrow = iv(&[0.6, 0.1], &[0.9, 0.4]);
        let closed = entropy_difference_binary(&narrow).unwrap();
        assert!((closed - (h2(0.6) - h2(0.9))).abs() < 1e-12);
        let solved = entropy_difference(&narrow, VERTICES).unwrap().value;
        assert!((closed - solved).abs() < 1e-12);
    }

    #[test]
    fn moebius_mass_examples() {
        let p = ProbabilityVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let m = moebius_mass(&ProbabilityIntervals::precise(&p), SUBSETS).unwrap();
        for (subset, mass) in m.iter() {
            let expected = match subset.cardinality() {
                1 => p[subset.classes().next().unwrap()],
                _ => 0.0,
            };
            assert!((mass - expected).abs() < 1e-15, "{subset:?}: {mass}");
        }

        let m = moebius_mass(&ProbabilityIntervals::vacuous(3).unwrap(), SUBSETS).unwrap();
        for (subset, mass) in m.iter() {
            let expected = if subset == ClassSubset::full(3) { 1.0 } else { 0.0 };
            assert_eq!(mass, expected);
        }

        let m = moebius_mass(&iv(&[0.5, 0.1], &[0.9, 0.5]), SUBSETS).unwrap();
        let s = m.as_slice();
        assert!((s[0b01] - 0.5).abs() < 1e-15);
        assert!((s[0b10] - 0.1).abs() < 1e-15);
        assert!((s[0b11] - 0.4).abs() < 1e-15);
        assert!((m.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn generalized_hartley_examples() {
        let p = ProbabilityVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let gh = generalized_hartley(&ProbabilityIntervals::precise(&p), SUBSETS).unwrap();
        assert!(gh.value.abs() < 1e-12);
        let vac = ProbabilityIntervals::vacuous(4).unwrap();
        assert_eq!(generalized_hartley(&vac, SUBSETS).unwrap().value, 2.0);
        let gh = generalized_hartley(&iv(&[0.5, 0.1], &[0.9, 0.5]), SUBSETS).unwrap();
        assert!((gh.value - 0.4).abs() < 1e-15);
    }

    #[test]
    fn max_mean_imprecision_examples() {
        let p = ProbabilityVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let mmi = max_mean_imprecision(&ProbabilityIntervals::precise(&p), SUBSETS).unwrap();
        assert!(mmi.value.abs() < 1e-12);
        let vac = ProbabilityIntervals::vacuous(5).unwrap();
        assert_eq!(max_mean_imprecision(&vac, SUBSETS).unwrap().value, 1.0);
        let mmi = max_mean_imprecision(&iv(&[0.5, 0.1], &[0.9, 0.5]), SUBSETS).unwrap();
        assert!((mmi.value - 0.4).abs() < 1e-15);
    }

    #[test]
    fn subset_cap_is_enforced() {
        let vac = ProbabilityIntervals::vacuous(6).unwrap();
        assert_eq!(generalized_hartley(&vac, 5).unwrap_err().exit_code(), 4);
        assert_eq!(max_mean_imprecision(&vac, 5).unwrap_err().exit_code(), 4);
        assert_eq!(entropy_difference(&vac, 5).unwrap_err().exit_code(), 4);
    }
}
