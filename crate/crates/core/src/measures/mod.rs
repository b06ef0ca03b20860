//! Epistemic-uncertainty measures for both second-order representations.
//!
//! Distribution-based measures ([`Measure::Mi`], [`Measure::Lwv`],
//! [`Measure::Wd`]) act on the prediction set directly. Credal measures
//! ([`Measure::Hdiff`], [`Measure::Gh`], [`Measure::Mmi`]) act on the
//! probability intervals spanned by that set.

pub mod credal;
pub mod distribution;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::credal::{ProbabilityIntervals, DEFAULT_SUBSET_CAP, DEFAULT_VERTEX_CAP};
use crate::error::{Error, Result};
use crate::simplex::PredictionSet;

pub use self::credal::{
    entropy_difference, entropy_difference_binary, generalized_hartley, max_entropy,
    max_entropy_point, max_mean_imprecision, min_entropy, min_entropy_point, moebius_mass,
    MoebiusMass,
};
pub use self::distribution::{
    label_wise_variance, mutual_information, wasserstein_binary_median, wasserstein_eu,
    wasserstein_solution, WassersteinSolution,
};

/// Negative values closer to zero than this are rounding noise.
pub const NEGATIVE_NOISE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// Mutual information, in bits.
    Mi,
    /// Label-wise variance.
    Lwv,
    /// Wasserstein distance to the closest first-order prediction.
    Wd,
    /// Upper minus lower entropy over the credal set, in bits.
    Hdiff,
    /// Generalized Hartley measure.
    Gh,
    /// Maximum mean imprecision.
    Mmi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Distribution,
    Credal,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Measure::Mi,
        Measure::Lwv,
        Measure::Wd,
        Measure::Hdiff,
        Measure::Gh,
        Measure::Mmi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Mi => "mi",
            Measure::Lwv => "lwv",
            Measure::Wd => "wd",
            Measure::Hdiff => "hdiff",
            Measure::Gh => "gh",
            Measure::Mmi => "mmi",
        }
    }

    pub fn representation(self) -> Representation {
        match self {
            Measure::Mi | Measure::Lwv | Measure::Wd => Representation::Distribution,
            Measure::Hdiff | Measure::Gh | Measure::Mmi => Representation::Credal,
        }
    }

    /// Parses a comma-separated list such as `mi,gh`.
    pub fn parse_list(list: &str) -> Result<Vec<Measure>> {
        let measures = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Measure>>>()?;
        if measures.is_empty() {
            return Err(Error::invalid("empty measure list"));
        }
        Ok(measures)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown measure `{s}` (expected one of mi, lwv, wd, hdiff, gh, mmi)"
                ))
            })
    }
}

/// One epistemic-uncertainty value for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyScore {
    pub measure: Measure,
    pub value: f64,
}

impl UncertaintyScore {
    /// Clamps values in `(-NEGATIVE_NOISE, 0)` to zero; anything more
    /// negative, or not finite, is a numerical failure.
    pub fn new(measure: Measure, value: f64) -> Result<Self> {
        Ok(UncertaintyScore {
            measure,
            value: clamp_noise(measure.as_str(), value)?,
        })
    }
}

pub(crate) fn clamp_noise(what: &str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::Numerical(format!("{what} evaluated to {value}")));
    }
    if value < -NEGATIVE_NOISE {
        return Err(Error::Numerical(format!(
            "{what} evaluated to {value}, below the rounding-noise floor"
        )));
    }
    Ok(value.max(0.0))
}

/// Scale convention for the Wasserstein measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WdConvention {
    /// `1/2 * min sum_m ||p_m - p*||_1`. For two classes this equals the
    /// median form `sum_m |p_m - median|` on class-0 coordinates.
    #[default]
    Halved,
    /// `min sum_m ||p_m - p*||_1` without the one-half factor.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasureConfig {
    pub vertex_cap: usize,
    pub subset_cap: usize,
    pub wd_convention: WdConvention,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            vertex_cap: DEFAULT_VERTEX_CAP,
            subset_cap: DEFAULT_SUBSET_CAP,
            wd_convention: WdConvention::Halved,
        }
    }
}

/// Computes a single measure for one prediction set.
pub fn quantify(set: &PredictionSet, measure: Measure, config: &MeasureConfig) -> Result<UncertaintyScore> {
    Ok(quantify_many(set, &[measure], config)?[0])
}

/// Computes several measures, building the credal intervals at most once.
pub fn quantify_many(
    set: &PredictionSet,
    measures: &[Measure],
    config: &MeasureConfig,
) -> Result<Vec<UncertaintyScore>> {
    let intervals = measures
        .iter()
        .any(|m| m.representation() == Representation::Credal)
        .then(|| ProbabilityIntervals::from_prediction_set(set));
    measures
        .iter()
        .map(|&measure| {
            let iv = || intervals.as_ref().expect("intervals built for credal measures");
            match measure {
                Measure::Mi => mutual_information(set),
                Measure::Lwv => label_wise_variance(set),
                Measure::Wd => wasserstein_eu(set, config.wd_convention),
                Measure::Hdiff => entropy_difference(iv(), config.vertex_cap),
                Measure::Gh => generalized_hartley(iv(), config.subset_cap),
                Measure::Mmi => max_mean_imprecision(iv(), config.subset_cap),
            }
        })
        .collect()
}
