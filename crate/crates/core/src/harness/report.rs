use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::util::median;

/// One ensemble member at one resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub member: usize,
    pub seed: u64,
    pub resolution: usize,
    pub h: f64,
    /// Seminorm of the data (denominator).
    pub data_seminorm: f64,
    /// Seminorm of the solution (numerator).
    pub solution_seminorm: f64,
    /// `None` when flagged.
    pub ratio: Option<f64>,
    pub control: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub flags: Vec<String>,
}

/// Per-resolution aggregate over valid members.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub resolution: usize,
    pub h: f64,
    pub valid: usize,
    pub max_ratio: Option<f64>,
    pub median_ratio: Option<f64>,
    pub max_control: Option<f64>,
}

/// One ensemble study (a solver/coefficient combination).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub name: String,
    pub members: Vec<MemberRecord>,
    pub aggregates: Vec<Aggregate>,
    /// `max_ratio(finest) / max_ratio(next finest)`.
    pub drift: Option<f64>,
    /// `max_control(finest) / max_control(coarsest)`.
    pub control_growth: Option<f64>,
}

impl Branch {
    pub fn new(name: &str, mut members: Vec<MemberRecord>) -> Self {
        members.sort_by_key(|m| (m.resolution, m.member));
        let mut res: Vec<usize> = members.iter().map(|m| m.resolution).collect();
        res.dedup();
        let aggregates: Vec<Aggregate> = res
            .iter()
            .map(|&r| {
                let ms: Vec<&MemberRecord> = members.iter().filter(|m| m.resolution == r).collect();
                let ratios: Vec<f64> = ms.iter().filter_map(|m| m.ratio).collect();
                let controls: Vec<f64> = ms.iter().filter_map(|m| m.control).collect();
                Aggregate {
                    resolution: r,
                    h: ms[0].h,
                    valid: ratios.len(),
                    max_ratio: ratios.iter().cloned().reduce(f64::max),
                    median_ratio: (!ratios.is_empty()).then(|| median(&ratios)),
                    max_control: controls.iter().cloned().reduce(f64::max),
                }
            })
            .collect();
        let n = aggregates.len();
        let drift = if n >= 2 {
            match (aggregates[n - 1].max_ratio, aggregates[n - 2].max_ratio) {
                (Some(a), Some(b)) if b > 0.0 => Some(a / b),
                _ => None,
            }
        } else {
            None
        };
        let control_growth = if n >= 2 {
            match (aggregates[n - 1].max_control, aggregates[0].max_control) {
                (Some(a), Some(b)) if b > 0.0 => Some(a / b),
                _ => None,
            }
        } else {
            None
        };
        Self { name: name.to_string(), members, aggregates, drift, control_growth }
    }
}

/// A pass/fail check with the quantity and threshold it was decided on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    #[serde(with = "super::nonfinite")]
    pub value: f64,
    #[serde(with = "super::nonfinite")]
    pub threshold: f64,
    pub detail: String,
}

impl Verdict {
    pub fn at_most(name: &str, value: f64, threshold: f64, detail: &str) -> Self {
        Self { name: name.into(), passed: value <= threshold, value, threshold, detail: detail.into() }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64, detail: &str) -> Self {
        Self { name: name.into(), passed: value >= threshold, value, threshold, detail: detail.into() }
    }

    /// Pass when the predicate holds; `value` and `threshold` are recorded as given.
    pub fn check(name: &str, passed: bool, value: f64, threshold: f64, detail: &str) -> Self {
        Self { name: name.into(), passed, value, threshold, detail: detail.into() }
    }
}

/// Named curve `(x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub x_label: String,
    pub y_label: String,
    #[serde(with = "super::nonfinite::points")]
    pub points: Vec<[f64; 2]>,
}

/// Everything an experiment produced; verdicts derive from the other fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub config: ExperimentConfig,
    pub branches: Vec<Branch>,
    pub series: BTreeMap<String, Series>,
    #[serde(with = "super::nonfinite::map")]
    pub scalars: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
}

impl EstimateReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self { config: config.clone(), branches: vec![], series: BTreeMap::new(), scalars: BTreeMap::new(), verdicts: vec![] }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn branch(&self, name: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.name == name)
    }

    /// Standard verdicts for a branch: finite ratios, drift within 25%, and
    /// optionally control growth of at least 2x.
    pub fn stability_verdicts(&mut self, branch: usize, control: bool) {
        let b = &self.branches[branch];
        let all_finite = b.aggregates.iter().all(|a| a.max_ratio.map(f64::is_finite).unwrap_or(false));
        let max = b.aggregates.iter().filter_map(|a| a.max_ratio).fold(0.0, f64::max);
        let mut v = vec![Verdict::check(&format!("{}: finite ratios", b.name), all_finite, max, f64::INFINITY, "ensemble max over resolutions")];
        let drift = b.drift.unwrap_or(f64::NAN);
        v.push(Verdict::check(
            &format!("{}: drift", b.name),
            (drift - 1.0).abs() <= 0.25,
            drift,
            0.25,
            "|max ratio(finest) / max ratio(next) - 1|",
        ));
        if control {
            let g = b.control_growth.unwrap_or(f64::NAN);
            v.push(Verdict::at_least(&format!("{}: control growth", b.name), g, 2.0, "max control(finest) / max control(coarsest)"));
        }
        self.verdicts.extend(v);
    }
}
