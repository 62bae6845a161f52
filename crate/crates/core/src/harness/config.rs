use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Experiment identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    E4,
    E5,
    E6,
    E7,
    E8,
    C1,
    C2,
    L1,
    Q1,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 12] = [
        Self::E1,
        Self::E2,
        Self::E3,
        Self::E4,
        Self::E5,
        Self::E6,
        Self::E7,
        Self::E8,
        Self::C1,
        Self::C2,
        Self::L1,
        Self::Q1,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::E1 => "E1",
            Self::E2 => "E2",
            Self::E3 => "E3",
            Self::E4 => "E4",
            Self::E5 => "E5",
            Self::E6 => "E6",
            Self::E7 => "E7",
            Self::E8 => "E8",
            Self::C1 => "C1",
            Self::C2 => "C2",
            Self::L1 => "L1",
            Self::Q1 => "Q1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown experiment id {s:?}")))
    }

    /// What the experiment measures.
    pub fn description(&self) -> &'static str {
        match self {
            Self::E1 => "elliptic, nondivergence form: [u]_{x',2+d} / [f]_{x',d} with a = a(x'')",
            Self::E2 => "elliptic, divergence form: [u]_{x',1+d} / [f]_{x',d} with a = a(x'')",
            Self::E3 => "parabolic, nondivergence form: [u]_{x',2+d} / [f]_{x',d} with a = a(t, x'')",
            Self::E4 => "parabolic, divergence form: [u]_{x',1+d} / [f]_{x',d} with a = a(t, x'')",
            Self::E5 => "parabolic z'-seminorms with t-independent a = a(x''), both forms",
            Self::E6 => "coefficients Hoelder in x': bound with the extra K [D^2 u]_0 term",
            Self::E7 => "coefficients degenerate in the x'' directions",
            Self::E8 => "full regularity of D_{x'} u for constant or t-only coefficients vs rough a(x'')",
            Self::C1 => "mixed-derivative counterexample: sup |u_xy| grows like sqrt(ln 1/h)",
            Self::C2 => "half-plane boundary counterexample: v = D_1^2 u stays away from zero near the corner",
            Self::L1 => "mollifier bounds: approximation rate and gradient constants",
            Self::Q1 => "Campanato quotient vs partial Hoelder seminorm, both directions",
        }
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub d: usize,
    pub q: usize,
    pub delta: f64,
    pub nu: f64,
    /// Points per axis, strictly increasing.
    pub resolutions: Vec<usize>,
    pub ensemble: usize,
    pub seed: u64,
    pub margin: f64,
    pub tol: f64,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Desk-scale defaults.
    pub fn default_for(id: ExperimentId) -> Self {
        let mut c = Self {
            experiment: id,
            d: 2,
            q: 1,
            delta: 0.5,
            nu: 0.2,
            resolutions: vec![17, 33, 65, 129],
            ensemble: 20,
            seed: 7,
            margin: 0.25,
            tol: 1e-10,
            out_dir: None,
        };
        match id {
            ExperimentId::E6 | ExperimentId::E7 => c.ensemble = 10,
            ExperimentId::E8 => {
                c.d = 3;
                c.resolutions = vec![17, 33, 65];
                c.ensemble = 4;
            }
            ExperimentId::C1 => {
                c.resolutions = vec![9, 17, 33, 65, 129];
                c.ensemble = 1;
            }
            ExperimentId::C2 => {
                c.resolutions = vec![129, 257];
                c.ensemble = 1;
            }
            ExperimentId::L1 => {
                c.resolutions = vec![1025];
                c.ensemble = 1;
            }
            ExperimentId::Q1 => {
                c.resolutions = vec![65, 129];
                c.ensemble = 6;
            }
            _ => {}
        }
        c
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} not in (0, 1)", self.delta));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return bad(format!("nu = {} not in (0, 1]", self.nu));
        }
        if !(2..=4).contains(&self.d) || self.q < 1 || self.q >= self.d {
            return bad(format!("need 2 <= d <= 4 and 1 <= q < d, got d = {}, q = {}", self.d, self.q));
        }
        if self.resolutions.is_empty() || self.resolutions.windows(2).any(|w| w[1] <= w[0]) {
            return bad("resolutions must be non-empty and strictly increasing".into());
        }
        if self.ensemble < 1 {
            return bad("ensemble must be at least 1".into());
        }
        if !(self.margin >= 0.0 && self.margin < 0.5) {
            return bad(format!("margin = {} not in [0, 1/2)", self.margin));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol = {} not in (0, 1)", self.tol));
        }
        use ExperimentId::*;
        match self.experiment {
            E1 | E2 | E3 | E4 | E5 | E6 | E7 | E8 | Q1 => {
                // cusp centres sit on multiples of 1/8 of the half-width
                if let Some(n) = self.resolutions.iter().find(|&&n| n < 17 || (n - 1) % 16 != 0) {
                    return bad(format!("resolution {n}: need n - 1 divisible by 16"));
                }
                if matches!(self.experiment, E3 | E4 | E5) && self.resolutions.len() < 2 {
                    return bad("parabolic experiments need at least two resolutions".into());
                }
            }
            C1 => {
                if let Some(n) = self.resolutions.iter().find(|&&n| n < 3 || (n - 1) % 2 != 0) {
                    return bad(format!("resolution {n}: need an odd count so the origin is a node"));
                }
            }
            C2 => {
                if self.d != 2 {
                    return bad("C2 is two-dimensional".into());
                }
                // h = 2 / (n - 1) must be at most 1/64 and divide 1/32
                if let Some(n) = self.resolutions.iter().find(|&&n| n < 129 || (n - 1) % 64 != 0) {
                    return bad(format!("resolution {n} cannot resolve eps = 1/32 (need n - 1 >= 128, divisible by 64)"));
                }
            }
            L1 => {
                if let Some(n) = self.resolutions.iter().find(|&&n| n < 257 || (n - 1) % 256 != 0) {
                    return bad(format!("resolution {n}: L1 needs n - 1 divisible by 256"));
                }
            }
        }
        Ok(())
    }
}
