//! Brute-force reference implementations.
//!
//! Everything here is deliberately slow and written independently of the
//! production paths it is used to check: lattice scans of the simplex,
//! pair counting, sign-pattern enumeration and the literal submask walk of
//! the Moebius inversion.

use crate::credal::ProbabilityIntervals;
use crate::error::{Error, Result};
use crate::measures::{
    max_entropy_point, min_entropy_point, quantify, wasserstein_solution, Measure, MeasureConfig,
    WdConvention,
};
use crate::simplex::{ClassSubset, PredictionSet, ProbabilityVector};

/// Largest effective sample size [`wilcoxon_exact_enum`] will enumerate.
pub const WILCOXON_ENUM_CAP: usize = 16;

/// Largest K [`moebius_direct`] will walk (`3^K` terms).
pub const MOEBIUS_DIRECT_CAP: usize = 12;

/// Slack when testing lattice points against interval bounds.
const LATTICE_TOLERANCE: f64 = 1e-12;

/// Lattice points of the simplex whose coordinates are multiples of `step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexGrid {
    num_classes: usize,
    divisions: usize,
}

impl SimplexGrid {
    /// `step` must divide 1 (up to 1e-9).
    pub fn new(num_classes: usize, step: f64) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid("a simplex grid needs at least 2 classes"));
        }
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::invalid(format!("grid step {step} outside (0, 1]")));
        }
        let divisions = (1.0 / step).round();
        if (divisions * step - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("grid step {step} does not divide 1")));
        }
        Ok(SimplexGrid {
            num_classes,
            divisions: divisions as usize,
        })
    }

    /// Step 0.001 for K = 2, 0.005 for K = 3, 0.02 for K = 4.
    pub fn default_for(num_classes: usize) -> Result<Self> {
        let step = match num_classes {
            2 => 0.001,
            3 => 0.005,
            4 => 0.02,
            k => {
                return Err(Error::OracleLimit(format!(
                    "no default simplex grid for K = {k} (supported: 2, 3, 4)"
                )))
            }
        };
        Self::new(num_classes, step)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn step(&self) -> f64 {
        1.0 / self.divisions as f64
    }

    /// Visits every lattice point in lexicographic order of the counts.
    pub fn for_each_point<F: FnMut(&[f64])>(&self, mut visit: F) {
        let k = self.num_classes;
        let n = self.divisions;
        let mut counts = vec![0usize; k];
        let mut point = vec![0.0; k];
        // Odometer over compositions of n into k parts; the last part is implied.
        loop {
            let used: usize = counts[..k - 1].iter().sum();
            if used <= n {
                counts[k - 1] = n - used;
                for (p, &c) in point.iter_mut().zip(&counts) {
                    *p = c as f64 / n as f64;
                }
                visit(&point);
            }
            let mut pos = k - 1;
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                counts[pos] += 1;
                if counts[..=pos].iter().sum::<usize>() <= n {
                    break;
                }
                counts[pos] = 0;
            }
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        self.for_each_point(|p| out.push(p.to_vec()));
        out
    }
}

fn inside(iv: Option<&ProbabilityIntervals>, p: &[f64]) -> bool {
    iv.map_or(true, |iv| {
        p.iter()
            .zip(iv.lower().iter().zip(iv.upper()))
            .all(|(&x, (&l, &u))| x >= l - LATTICE_TOLERANCE && x <= u + LATTICE_TOLERANCE)
    })
}

/// Exhaustive minimum of `objective` over the (interval-feasible) lattice.
/// Ties keep the first lattice point visited.
pub fn grid_minimize<F>(
    objective: F,
    grid: &SimplexGrid,
    intervals: Option<&ProbabilityIntervals>,
) -> Result<(ProbabilityVector, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    if let Some(iv) = intervals {
        if iv.num_classes() != grid.num_classes() {
            return Err(Error::DimensionMismatch {
                expected: grid.num_classes(),
                found: iv.num_classes(),
            });
        }
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    grid.for_each_point(|p| {
        if !inside(intervals, p) {
            return;
        }
        let value = objective(p);
        if best.as_ref().map_or(true, |(_, b)| value < *b) {
            best = Some((p.to_vec(), value));
        }
    });
    let (point, value) = best.ok_or_else(|| {
        Error::OracleLimit(format!(
            "no lattice point at step {} lies inside the intervals",
            grid.step()
        ))
    })?;
    Ok((ProbabilityVector::new(point)?, value))
}

/// Lattice point inside the intervals closest to `target` in L1 distance,
/// with that distance.
pub fn nearest_lattice_point(
    target: &[f64],
    grid: &SimplexGrid,
    intervals: Option<&ProbabilityIntervals>,
) -> Result<(Vec<f64>, f64)> {
    let (p, d) = grid_minimize(
        |p| p.iter().zip(target).map(|(a, b)| (a - b).abs()).sum(),
        grid,
        intervals,
    )?;
    Ok((p.into_inner(), d))
}

/// `sum_m ||p_m - q||_1`.
pub fn l1_transport_cost(set: &PredictionSet, q: &[f64]) -> f64 {
    set.members()
        .iter()
        .map(|p| p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .sum()
}

/// Plain Shannon entropy in bits, summed in class order.
pub fn naive_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

/// Upper bound on `|H(p) - H(q)|` in bits when `||p - q||_1 <= l1`
/// (Fannes-Audenaert continuity bound).
pub fn entropy_continuity_bound(l1: f64, num_classes: usize) -> f64 {
    let t = (0.5 * l1).min(1.0);
    if t <= 0.0 {
        return 0.0;
    }
    let binary = if t >= 1.0 {
        0.0
    } else {
        naive_entropy(&[t, 1.0 - t])
    };
    t * ((num_classes - 1) as f64).log2() + binary
}

/// AUROC by counting `(id, ood)` pairs with the OOD score higher, ties
/// counting one half.
pub fn auroc_pair_count(id_scores: &[f64], ood_scores: &[f64]) -> f64 {
    let mut favourable = 0.0;
    for &i in id_scores {
        for &o in ood_scores {
            if o > i {
                favourable += 1.0;
            } else if o == i {
                favourable += 0.5;
            }
        }
    }
    favourable / (id_scores.len() as f64 * ood_scores.len() as f64)
}

/// One-sided signed-rank p-value `P(W+ >= observed)` by enumerating every
/// sign pattern over the observed midranks. Zero differences are dropped.
pub fn wilcoxon_exact_enum(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid("paired samples differ in length"));
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n > WILCOXON_ENUM_CAP {
        return Err(Error::OracleLimit(format!(
            "sign enumeration supports n <= {WILCOXON_ENUM_CAP}, got {n}"
        )));
    }
    if n == 0 {
        return Ok(1.0);
    }
    // Doubled midrank of |d_i|: 2 * #smaller + #equal (self included) + 1.
    let doubled: Vec<u64> = diffs
        .iter()
        .map(|d| {
            let smaller = diffs.iter().filter(|e| e.abs() < d.abs()).count() as u64;
            let equal = diffs.iter().filter(|e| e.abs() == d.abs()).count() as u64;
            2 * smaller + equal + 1
        })
        .collect();
    let observed: u64 = diffs
        .iter()
        .zip(&doubled)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let mut at_least = 0u64;
    for pattern in 0u64..(1 << n) {
        let sum: u64 = (0..n)
            .filter(|i| pattern >> i & 1 == 1)
            .map(|i| doubled[i])
            .sum();
        if sum >= observed {
            at_least += 1;
        }
    }
    Ok(at_least as f64 / (1u64 << n) as f64)
}

/// Moebius masses from the literal alternating sum over all subsets `A` of
/// each `Q`, evaluating every lower probability directly.
pub fn moebius_direct(iv: &ProbabilityIntervals) -> Result<Vec<f64>> {
    let k = iv.num_classes();
    if k > MOEBIUS_DIRECT_CAP {
        return Err(Error::OracleLimit(format!(
            "direct Moebius walk supports K <= {MOEBIUS_DIRECT_CAP}, got {k}"
        )));
    }
    let mut masses = vec![0.0; 1 << k];
    for q in 0u64..(1 << k) {
        let mut total = 0.0;
        let mut a = q;
        loop {
            let lower = iv.lower_probability(ClassSubset::new(a, k)?)?;
            if (q ^ a).count_ones() % 2 == 0 {
                total += lower;
            } else {
                total -= lower;
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & q;
        }
        masses[q as usize] = total;
    }
    Ok(masses)
}

/// Maximizes `sum_k c_k p_k` over the credal set: start from the lower
/// bounds and hand the remaining mass to classes in decreasing order of
/// `c_k`.
pub fn lp_maximize_linear(objective: &[f64], iv: &ProbabilityIntervals) -> Result<(Vec<f64>, f64)> {
    let k = iv.num_classes();
    if objective.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: objective.len(),
        });
    }
    let mut p = iv.lower().to_vec();
    let mut remaining = 1.0 - p.iter().sum::<f64>();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| objective[b].total_cmp(&objective[a]));
    for c in order {
        if remaining <= 0.0 {
            break;
        }
        let add = (iv.upper()[c] - iv.lower()[c]).min(remaining);
        p[c] += add;
        remaining -= add;
    }
    let value = p.iter().zip(objective).map(|(a, b)| a * b).sum();
    Ok((p, value))
}

/// A production measure value next to its brute-force counterpart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCheck {
    pub measure: Measure,
    pub value: f64,
    pub oracle: f64,
    /// Largest disagreement the oracle's resolution can explain.
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn agrees(&self) -> bool {
        (self.value - self.oracle).abs() <= self.tolerance
    }
}

/// Exact tolerance for oracles that differ only by summation order.
const SUMMATION_SLACK: f64 = 1e-9;

/// Recomputes one measure with the oracles above. Lattice-based checks need
/// `K <= 4` and a lattice point inside the intervals; otherwise an
/// [`Error::OracleLimit`] is returned.
pub fn oracle_check(
    set: &PredictionSet,
    measure: Measure,
    config: &MeasureConfig,
) -> Result<OracleCheck> {
    let value = quantify(set, measure, config)?.value;
    let k = set.num_classes();
    let m = set.num_members() as f64;
    let iv = ProbabilityIntervals::from_prediction_set(set);
    let (oracle, tolerance) = match measure {
        Measure::Mi => {
            let mean: Vec<f64> = (0..k)
                .map(|c| set.class_column(c).sum::<f64>() / m)
                .collect();
            let members: f64 = set.members().iter().map(|p| naive_entropy(p)).sum::<f64>() / m;
            (naive_entropy(&mean) - members, SUMMATION_SLACK)
        }
        Measure::Lwv => {
            let total: f64 = (0..k)
                .map(|c| {
                    let mean = set.class_column(c).sum::<f64>() / m;
                    set.class_column(c).map(|x| (x - mean).powi(2)).sum::<f64>() / m
                })
                .sum();
            (total, SUMMATION_SLACK)
        }
        Measure::Wd => {
            let scale = match config.wd_convention {
                WdConvention::Halved => 0.5,
                WdConvention::Full => 1.0,
            };
            let grid = SimplexGrid::default_for(k)?;
            let (_, best) = grid_minimize(|q| l1_transport_cost(set, q), &grid, None)?;
            let solution = wasserstein_solution(set)?;
            let (_, gap) = nearest_lattice_point(&solution.point, &grid, None)?;
            (scale * best, scale * m * gap + SUMMATION_SLACK)
        }
        Measure::Hdiff => {
            let grid = SimplexGrid::default_for(k)?;
            let (_, neg_max) = grid_minimize(|p| -naive_entropy(p), &grid, Some(&iv))?;
            let (_, min) = grid_minimize(naive_entropy, &grid, Some(&iv))?;
            let (max_point, _) = max_entropy_point(&iv);
            let (min_point, _) = min_entropy_point(&iv, config.vertex_cap)?;
            let (_, d_max) = nearest_lattice_point(&max_point, &grid, Some(&iv))?;
            let (_, d_min) = nearest_lattice_point(&min_point, &grid, Some(&iv))?;
            (
                -neg_max - min,
                entropy_continuity_bound(d_max, k)
                    + entropy_continuity_bound(d_min, k)
                    + SUMMATION_SLACK,
            )
        }
        Measure::Gh => {
            let masses = moebius_direct(&iv)?;
            let gh = masses
                .iter()
                .enumerate()
                .map(|(mask, mass)| mass * f64::from((mask as u64).count_ones().max(1)).log2())
                .sum();
            (gh, SUMMATION_SLACK)
        }
        Measure::Mmi => {
            let mut best = 0.0f64;
            for a in ClassSubset::all(k) {
                best = best.max(iv.imprecision(a)?);
            }
            (best, SUMMATION_SLACK)
        }
    };
    Ok(OracleCheck {
        measure,
        value,
        oracle,
        tolerance,
    })
}
