//! Paired one-sided Wilcoxon signed-rank tests and the net-win ranking
//! built on them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::measures::Measure;

/// Largest effective sample size for which the exact null distribution is used.
pub const DEFAULT_EXACT_MAX_N: usize = 25;

/// How zero paired differences enter the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroMethod {
    /// Drop zero differences before ranking.
    #[default]
    Wilcox,
    /// Rank zero differences with the rest, then leave them out of the sum.
    Pratt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WilcoxonConfig {
    pub zero_method: ZeroMethod,
    pub exact_max_n: usize,
    pub continuity_correction: bool,
}

impl Default for WilcoxonConfig {
    fn default() -> Self {
        WilcoxonConfig {
            zero_method: ZeroMethod::Wilcox,
            exact_max_n: DEFAULT_EXACT_MAX_N,
            continuity_correction: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonOutcome {
    /// `P(W+ >= observed)` under the null.
    pub p_value: f64,
    pub significant: bool,
    /// Sum of the (mid)ranks of positive differences.
    pub statistic: f64,
    /// Number of nonzero differences.
    pub effective_n: usize,
    pub exact: bool,
}

/// Tests H1: `x` tends to be larger than `y`, with the default configuration.
pub fn wilcoxon_one_sided(x: &[f64], y: &[f64], alpha: f64) -> Result<WilcoxonOutcome> {
    wilcoxon_one_sided_with(x, y, alpha, &WilcoxonConfig::default())
}

pub fn wilcoxon_one_sided_with(
    x: &[f64],
    y: &[f64],
    alpha: f64,
    config: &WilcoxonConfig,
) -> Result<WilcoxonOutcome> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "paired samples differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("the signed-rank test needs at least 2 pairs"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("significance level {alpha} is outside (0, 1)")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("paired samples must be finite"));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let ranked = signed_doubled_ranks(&diffs, config.zero_method);
    let n = ranked.len();
    if n == 0 {
        return Ok(WilcoxonOutcome {
            p_value: 1.0,
            significant: false,
            statistic: 0.0,
            effective_n: 0,
            exact: true,
        });
    }
    let observed: u64 = ranked.iter().filter(|r| r.1).map(|r| r.0).sum();
    let doubled: Vec<u64> = ranked.iter().map(|r| r.0).collect();
    let exact = n <= config.exact_max_n;
    let p_value = if exact {
        exact_upper_tail(&doubled, observed)
    } else {
        normal_upper_tail(&doubled, observed, config.continuity_correction)
    };
    Ok(WilcoxonOutcome {
        p_value,
        significant: p_value < alpha,
        statistic: observed as f64 / 2.0,
        effective_n: n,
        exact,
    })
}

/// Doubled midranks of `|d|` for the nonzero differences, with their signs.
fn signed_doubled_ranks(diffs: &[f64], zero_method: ZeroMethod) -> Vec<(u64, bool)> {
    let pool: Vec<f64> = match zero_method {
        ZeroMethod::Wilcox => diffs.iter().copied().filter(|d| *d != 0.0).collect(),
        ZeroMethod::Pratt => diffs.to_vec(),
    };
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| pool[a].abs().total_cmp(&pool[b].abs()));
    let mut doubled = vec![0u64; pool.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && pool[order[end + 1]].abs() == pool[order[start]].abs() {
            end += 1;
        }
        // Positions start..=end are 1-based ranks start+1..=end+1.
        let rank2 = (start + end + 2) as u64;
        for &i in &order[start..=end] {
            doubled[i] = rank2;
        }
        start = end + 1;
    }
    pool.iter()
        .zip(doubled)
        .filter(|(d, _)| **d != 0.0)
        .map(|(d, r)| (r, *d > 0.0))
        .collect()
}

/// Exact `P(W+ >= observed)` by counting sign patterns per rank sum.
fn exact_upper_tail(doubled_ranks: &[u64], observed: u64) -> f64 {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let tail: u64 = counts[observed as usize..].iter().sum();
    tail as f64 / (1u64 << doubled_ranks.len()) as f64
}

/// Normal approximation; the variance `sum r^2 / 4` already carries the tie
/// correction.
fn normal_upper_tail(doubled_ranks: &[u64], observed: u64, continuity: bool) -> f64 {
    let mean = doubled_ranks.iter().sum::<u64>() as f64 / 4.0;
    let variance = doubled_ranks.iter().map(|&r| (r * r) as f64).sum::<f64>() / 16.0;
    let w = observed as f64 / 2.0;
    let shift = if continuity { 0.5 } else { 0.0 };
    let z = (w - mean - shift) / variance.sqrt();
    let normal = Normal::standard();
    normal.sf(z).clamp(0.0, 1.0)
}

/// Which measures a ranking compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scope {
    #[serde(rename = "intra-dist")]
    IntraDistribution,
    #[serde(rename = "intra-credal")]
    IntraCredal,
    #[serde(rename = "inter")]
    Inter,
    #[serde(rename = "custom")]
    Custom,
}

impl Scope {
    pub fn measures(self) -> &'static [Measure] {
        match self {
            Scope::IntraDistribution => &[Measure::Mi, Measure::Lwv, Measure::Wd],
            Scope::IntraCredal => &[Measure::Hdiff, Measure::Gh, Measure::Mmi],
            Scope::Inter | Scope::Custom => &Measure::ALL,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::IntraDistribution => "intra-dist",
            Scope::IntraCredal => "intra-credal",
            Scope::Inter => "inter",
            Scope::Custom => "custom",
        }
    }

    /// The named scope whose measure set is exactly `measures`.
    pub fn of(measures: &[Measure]) -> Scope {
        let set: BTreeSet<Measure> = measures.iter().copied().collect();
        [Scope::IntraDistribution, Scope::IntraCredal, Scope::Inter]
            .into_iter()
            .find(|s| s.measures().iter().copied().collect::<BTreeSet<_>>() == set)
            .unwrap_or(Scope::Custom)
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intra-dist" => Ok(Scope::IntraDistribution),
            "intra-credal" => Ok(Scope::IntraCredal),
            "inter" => Ok(Scope::Inter),
            other => Err(Error::invalid(format!(
                "unknown scope `{other}` (expected intra-dist, intra-credal or inter)"
            ))),
        }
    }
}

/// Where a set of runs came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunContext {
    pub dataset: String,
    pub model: String,
    pub task: String,
}

/// Per-run performance scores (AUARC or AUROC) for several measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMatrix {
    pub context: RunContext,
    scores: BTreeMap<Measure, BTreeMap<usize, f64>>,
}

impl RunMatrix {
    pub fn new(context: RunContext) -> Self {
        RunMatrix {
            context,
            scores: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, measure: Measure, run: usize, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::invalid(format!(
                "run {run} of {measure} has a non-finite score"
            )));
        }
        let runs = self.scores.entry(measure).or_default();
        if runs.insert(run, score).is_some() {
            return Err(Error::invalid(format!(
                "duplicate score for {measure}, run {run} in {:?}",
                self.context
            )));
        }
        Ok(())
    }

    pub fn measures(&self) -> impl Iterator<Item = Measure> + '_ {
        self.scores.keys().copied()
    }

    /// Run indices shared by every measure; an error unless the design is
    /// paired and has at least two runs.
    pub fn runs(&self) -> Result<Vec<usize>> {
        let mut iter = self.scores.iter();
        let (first_measure, first) = iter
            .next()
            .ok_or_else(|| Error::invalid("run matrix has no measures"))?;
        let runs: Vec<usize> = first.keys().copied().collect();
        for (measure, other) in iter {
            if !other.keys().copied().eq(runs.iter().copied()) {
                return Err(Error::invalid(format!(
                    "unpaired runs: {measure} and {first_measure} cover different run indices"
                )));
            }
        }
        if runs.len() < 2 {
            return Err(Error::invalid(format!(
                "ranking needs at least 2 runs, found {}",
                runs.len()
            )));
        }
        Ok(runs)
    }

    /// Scores of one measure in run-index order.
    pub fn series(&self, measure: Measure) -> Result<Vec<f64>> {
        self.scores
            .get(&measure)
            .map(|runs| runs.values().copied().collect())
            .ok_or_else(|| {
                Error::invalid(format!("no runs recorded for {measure} in {:?}", self.context))
            })
    }
}

/// Outcome of testing "`better` outperforms `worse`".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub better: Measure,
    pub worse: Measure,
    pub p_value: f64,
    pub significant: bool,
}

/// Runs the one-sided test for every ordered pair of distinct measures.
pub fn pairwise_tests(
    matrix: &RunMatrix,
    measures: &[Measure],
    alpha: f64,
    config: &WilcoxonConfig,
) -> Result<Vec<PairwiseTest>> {
    check_measure_set(measures)?;
    matrix.runs()?;
    let series = measures
        .iter()
        .map(|&m| matrix.series(m))
        .collect::<Result<Vec<_>>>()?;
    let mut tests = Vec::with_capacity(measures.len() * (measures.len() - 1));
    for (i, &better) in measures.iter().enumerate() {
        for (j, &worse) in measures.iter().enumerate() {
            if i == j {
                continue;
            }
            let outcome = wilcoxon_one_sided_with(&series[i], &series[j], alpha, config)?;
            tests.push(PairwiseTest {
                better,
                worse,
                p_value: outcome.p_value,
                significant: outcome.significant,
            });
        }
    }
    Ok(tests)
}

fn check_measure_set(measures: &[Measure]) -> Result<()> {
    if measures.len() < 2 {
        return Err(Error::invalid("a ranking needs at least two measures"));
    }
    if measures.iter().collect::<BTreeSet<_>>().len() != measures.len() {
        return Err(Error::invalid("duplicate measure in ranking scope"));
    }
    Ok(())
}

/// Significant wins, losses and their difference per measure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetWinTable {
    pub scope: Scope,
    pub wins: BTreeMap<Measure, i64>,
    pub losses: BTreeMap<Measure, i64>,
    pub net: BTreeMap<Measure, i64>,
}

impl NetWinTable {
    pub fn measures(&self) -> impl Iterator<Item = Measure> + '_ {
        self.net.keys().copied()
    }

    /// Tallies pairwise outcomes over `measures`; pairs outside the set are ignored.
    pub fn from_tests(measures: &[Measure], tests: &[PairwiseTest]) -> Result<Self> {
        check_measure_set(measures)?;
        let zero: BTreeMap<Measure, i64> = measures.iter().map(|&m| (m, 0)).collect();
        let mut wins = zero.clone();
        let mut losses = zero;
        for t in tests.iter().filter(|t| t.significant) {
            if let (Some(w), true) = (wins.get_mut(&t.better), losses.contains_key(&t.worse)) {
                *w += 1;
                *losses.get_mut(&t.worse).expect("checked above") += 1;
            }
        }
        let net = measures.iter().map(|m| (*m, wins[m] - losses[m])).collect();
        Ok(NetWinTable {
            scope: Scope::of(measures),
            wins,
            losses,
            net,
        })
    }
}

/// Ranks `measures` on one run matrix at significance level `alpha`.
pub fn net_wins(matrix: &RunMatrix, measures: &[Measure], alpha: f64) -> Result<NetWinTable> {
    let tests = pairwise_tests(matrix, measures, alpha, &WilcoxonConfig::default())?;
    NetWinTable::from_tests(measures, &tests)
}

/// Componentwise sum of per-model tables over one scope and measure set.
pub fn aggregate_across_models(tables: &[NetWinTable]) -> Result<NetWinTable> {
    let (first, rest) = tables
        .split_first()
        .ok_or_else(|| Error::invalid("nothing to aggregate"))?;
    let mut total = first.clone();
    for t in rest {
        if t.scope != first.scope || !t.measures().eq(first.measures()) {
            return Err(Error::invalid(
                "net-win tables disagree on scope or measure set",
            ));
        }
        for m in t.measures() {
            *total.wins.get_mut(&m).expect("same measures") += t.wins[&m];
            *total.losses.get_mut(&m).expect("same measures") += t.losses[&m];
            *total.net.get_mut(&m).expect("same measures") += t.net[&m];
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(series: &[(Measure, &[f64])]) -> RunMatrix {
        let mut m = RunMatrix::new(RunContext {
            dataset: "d".into(),
            model: "m".into(),
            task: "selective".into(),
        });
        for (measure, values) in series {
            for (run, v) in values.iter().enumerate() {
                m.insert(*measure, run, *v).unwrap();
            }
        }
        m
    }

    #[test]
    fn equal_samples_are_not_significant() {
        let x = [0.3, 0.5, 0.7];
        let out = wilcoxon_one_sided(&x, &x, 0.05).unwrap();
        assert_eq!(out.p_value, 1.0);
        assert!(!out.significant);
        assert_eq!(out.effective_n, 0);
    }

    #[test]
    fn all_positive_differences_n10() {
        let y: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let x: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + 0.01 * (i + 1) as f64).collect();
        let out = wilcoxon_one_sided(&x, &y, 0.05).unwrap();
        assert_eq!(out.p_value, 1.0 / 1024.0);
        assert_eq!(out.statistic, 55.0);
        assert!(out.significant && out.exact);
        let reverse = wilcoxon_one_sided(&y, &x, 0.05).unwrap();
        assert_eq!(reverse.p_value, 1.0);
    }

    #[test]
    fn n6_critical_boundary() {
        // 64 sign patterns over ranks 1..6. W+ >= 19 leaves at most 2 for
        // the negative ranks: {}, {1}, {2}, so 3/64. W+ >= 18 adds {3} and
        // {1, 2}: 5/64. 19 is the smallest sum significant at 5%.
        let y = [0.0; 6];
        let x19 = [1.0, -2.0, 3.0, 4.0, 5.0, 6.0];
        let out = wilcoxon_one_sided(&x19, &y, 0.05).unwrap();
        assert_eq!(out.statistic, 19.0);
        assert_eq!(out.p_value, 3.0 / 64.0);
        assert!(out.significant);
        let x18 = [-1.0, -2.0, 3.0, 4.0, 5.0, 6.0];
        let out = wilcoxon_one_sided(&x18, &y, 0.05).unwrap();
        assert_eq!(out.statistic, 18.0);
        assert_eq!(out.p_value, 5.0 / 64.0);
        assert!(!out.significant);
    }

    #[test]
    fn ties_use_midranks() {
        let x = [1.0, 1.0, -1.0, 2.0];
        let out = wilcoxon_one_sided(&x, &[0.0; 4], 0.05).unwrap();
        // |d| ranks: three tied at 2, one at 4; W+ = 2 + 2 + 4.
        assert_eq!(out.statistic, 8.0);
    }

    #[test]
    fn pratt_keeps_zero_ranks_out_of_the_sum() {
        let x = [0.0, 1.0, 2.0];
        let cfg = WilcoxonConfig {
            zero_method: ZeroMethod::Pratt,
            ..Default::default()
        };
        let out = wilcoxon_one_sided_with(&x, &[0.0; 3], 0.05, &cfg).unwrap();
        assert_eq!(out.statistic, 5.0);
        assert_eq!(out.effective_n, 2);
        assert_eq!(out.p_value, 0.25);
    }

    #[test]
    fn large_samples_use_the_normal_approximation() {
        let y = vec![0.0; 30];
        let x: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let out = wilcoxon_one_sided(&x, &y, 0.05).unwrap();
        assert!(!out.exact);
        assert!(out.p_value < 1e-5 && out.significant);
    }

    #[test]
    fn input_validation() {
        assert!(wilcoxon_one_sided(&[1.0], &[0.0], 0.05).is_err());
        assert!(wilcoxon_one_sided(&[1.0, 2.0], &[0.0], 0.05).is_err());
        assert!(wilcoxon_one_sided(&[1.0, 2.0], &[0.0, 0.0], 1.5).is_err());
        assert!(wilcoxon_one_sided(&[f64::NAN, 2.0], &[0.0, 0.0], 0.05).is_err());
    }

    #[test]
    fn dominant_measure_nets_plus_two() {
        let wd: Vec<f64> = (0..10).map(|i| 0.9 + i as f64 * 0.001).collect();
        let lwv: Vec<f64> = (0..10).map(|i| 0.8 + i as f64 * 0.001).collect();
        let mi: Vec<f64> = (0..10).map(|i| 0.7 + i as f64 * 0.001).collect();
        let m = matrix(&[(Measure::Mi, &mi), (Measure::Lwv, &lwv), (Measure::Wd, &wd)]);
        let table = net_wins(&m, Scope::IntraDistribution.measures(), 0.05).unwrap();
        assert_eq!(table.scope, Scope::IntraDistribution);
        assert_eq!(table.net[&Measure::Mi], -2);
        assert_eq!(table.net[&Measure::Lwv], 0);
        assert_eq!(table.net[&Measure::Wd], 2);
        assert_eq!(table.net.values().sum::<i64>(), 0);
    }

    #[test]
    fn one_dominator_over_two_indistinguishable_measures() {
        let top: Vec<f64> = (0..10).map(|i| 0.9 + i as f64 * 0.001).collect();
        let a = [0.5, 0.6, 0.5, 0.6, 0.5, 0.6, 0.5, 0.6, 0.5, 0.6];
        let b = [0.6, 0.5, 0.6, 0.5, 0.6, 0.5, 0.6, 0.5, 0.6, 0.5];
        let m = matrix(&[(Measure::Gh, &top), (Measure::Hdiff, &a), (Measure::Mmi, &b)]);
        let table = net_wins(&m, Scope::IntraCredal.measures(), 0.05).unwrap();
        assert_eq!(table.net[&Measure::Gh], 2);
        assert_eq!(table.net[&Measure::Hdiff], -1);
        assert_eq!(table.net[&Measure::Mmi], -1);
    }

    #[test]
    fn nothing_significant_gives_zero_nets() {
        let a = [0.5, 0.6, 0.5, 0.6];
        let b = [0.6, 0.5, 0.6, 0.5];
        let m = matrix(&[(Measure::Mi, &a), (Measure::Wd, &b)]);
        let table = net_wins(&m, &[Measure::Mi, Measure::Wd], 0.05).unwrap();
        assert!(table.net.values().all(|&n| n == 0));
        assert_eq!(table.scope, Scope::Custom);
    }

    #[test]
    fn unpaired_runs_are_rejected() {
        let mut m = matrix(&[(Measure::Mi, &[0.1, 0.2, 0.3]), (Measure::Wd, &[0.1, 0.2, 0.3])]);
        m.insert(Measure::Wd, 7, 0.5).unwrap();
        assert!(net_wins(&m, &[Measure::Mi, Measure::Wd], 0.05).is_err());
        assert!(m.insert(Measure::Wd, 7, 0.5).is_err());
        let single = matrix(&[(Measure::Mi, &[0.1]), (Measure::Wd, &[0.2])]);
        assert!(net_wins(&single, &[Measure::Mi, Measure::Wd], 0.05).is_err());
    }

    #[test]
    fn aggregation_sums_tables() {
        let table = NetWinTable {
            scope: Scope::IntraDistribution,
            wins: BTreeMap::from([(Measure::Mi, 0), (Measure::Lwv, 1), (Measure::Wd, 2)]),
            losses: BTreeMap::from([(Measure::Mi, 2), (Measure::Lwv, 1), (Measure::Wd, 0)]),
            net: BTreeMap::from([(Measure::Mi, -2), (Measure::Lwv, 0), (Measure::Wd, 2)]),
        };
        let six = vec![table.clone(); 6];
        let total = aggregate_across_models(&six).unwrap();
        assert_eq!(total.net[&Measure::Wd], 12);
        assert_eq!(total.net[&Measure::Mi], -12);
        assert_eq!(aggregate_across_models(&[table.clone()]).unwrap(), table);

        let mut flipped = table.clone();
        for v in flipped.net.values_mut() {
            *v = -*v;
        }
        std::mem::swap(&mut flipped.wins, &mut flipped.losses);
        let cancel = aggregate_across_models(&[table.clone(), flipped]).unwrap();
        assert!(cancel.net.values().all(|&n| n == 0));

        let mut other = table.clone();
        other.scope = Scope::IntraCredal;
        assert!(aggregate_across_models(&[table, other]).is_err());
        assert!(aggregate_across_models(&[]).is_err());
    }

    #[test]
    fn scope_names() {
        for s in [Scope::IntraDistribution, Scope::IntraCredal, Scope::Inter] {
            assert_eq!(s.as_str().parse::<Scope>().unwrap(), s);
            assert_eq!(Scope::of(s.measures()), s);
        }
        assert!("all".parse::<Scope>().is_err());
    }
}
