//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! reps = 2000
//! calibration_reps = 20000
//! out = "results"
//!
//! [profile]
//! kind = "sobolev"
//! alpha = 1.0
//!
//! [dims]
//! p = 256
//! s = [1, 4, 16]
//! n = 4096.0
//!
//! [test]
//! kind = "minimax"
//! level = 0.05
//!
//! [prior]
//! kind = "minimax_compressed"
//! c = [0.5, 1.0, 2.0]
//! ```

use crate::error::CliError;
use samtest::priors::{MinimaxCase, PriorVariant};
use samtest::{EigenProfile, Tuning};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const MIN_REPS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub reps: u64,
    /// Null replications per calibrated threshold; defaults to `10 * reps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_reps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub profile: ProfileConfig,
    pub dims: DimsConfig,
    #[serde(default)]
    pub test: TestConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Sobolev { alpha: f64 },
    FiniteRank { m: u64 },
    ExpDecay { c2: f64, gamma: f64 },
    Explicit { values: Vec<f64> },
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Copy> Grid<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Grid::One(v) => vec![*v],
            Grid::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsConfig {
    pub p: u64,
    pub s: Grid<u64>,
    pub n: Grid<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Sparse or dense test for the configured `s`.
    #[default]
    Minimax,
    /// Max over the adaptive grid with Bonferroni components.
    Adaptive,
    /// Max over the Sobolev smoothness grid.
    SobolevAdaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestConfig {
    #[serde(default)]
    pub kind: TestKind,
    /// Type I level for `minimax` and `sobolev_adaptive`; total budget `η` for
    /// `adaptive`, whose components get `η / (2K)` each.
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "one")]
    pub k2: f64,
    #[serde(default = "one")]
    pub k3: f64,
    #[serde(default = "default_d_floor")]
    pub d_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            kind: TestKind::default(),
            level: default_level(),
            k2: 1.0,
            k3: 1.0,
            d_floor: default_d_floor(),
            alpha0: None,
            alpha1: None,
        }
    }
}

fn default_level() -> f64 {
    0.05
}

fn one() -> f64 {
    1.0
}

fn default_d_floor() -> f64 {
    Tuning::default().d_floor
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Trivial,
    MinimaxBulk,
    MinimaxSpike,
    MinimaxCompressed,
    Adaptive,
    AdaptiveCompressed,
    SobolevDense,
    SobolevSparse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub kind: PriorKind,
    pub c: Grid<f64>,
    /// Divergence target `4η²` and risk bound use this `η`.
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

fn default_eta() -> f64 {
    0.3
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Config { field: field.to_string(), message: message.into() }
}

fn need(field: &str, value: Option<f64>) -> Result<f64, CliError> {
    value.ok_or_else(|| invalid(field, "required for this kind"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| invalid("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the serialized config, hex encoded. The output directory is
    /// left out: it does not change any result.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig { out: None, ..self.clone() };
        hex::encode(Sha256::digest(canonical.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.reps < MIN_REPS {
            return Err(invalid("reps", format!("must be at least {MIN_REPS}, got {}", self.reps)));
        }
        if let Some(c) = self.calibration_reps {
            if c < MIN_REPS {
                return Err(invalid("calibration_reps", format!("must be at least {MIN_REPS}, got {c}")));
            }
        }
        self.profile().validate().map_err(|e| invalid("profile", e.to_string()))?;
        if self.dims.p == 0 {
            return Err(invalid("dims.p", "must be positive"));
        }
        let s = self.dims.s.values();
        if s.is_empty() {
            return Err(invalid("dims.s", "grid is empty"));
        }
        if let Some(bad) = s.iter().find(|&&s| s == 0 || s > self.dims.p) {
            return Err(invalid("dims.s", format!("{bad} is outside [1, p]")));
        }
        let n = self.dims.n.values();
        if n.is_empty() {
            return Err(invalid("dims.n", "grid is empty"));
        }
        if let Some(bad) = n.iter().find(|n| !(n.is_finite() && **n > 0.0)) {
            return Err(invalid("dims.n", format!("{bad} is not a positive number")));
        }
        let t = &self.test;
        if !(t.level > 0.0 && t.level < 1.0) {
            return Err(invalid("test.level", format!("must lie in (0, 1), got {}", t.level)));
        }
        for (field, v) in [("test.k2", t.k2), ("test.k3", t.k3), ("test.d_floor", t.d_floor)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
        }
        if t.kind == TestKind::SobolevAdaptive {
            let (a0, a1) = (need("test.alpha0", t.alpha0)?, need("test.alpha1", t.alpha1)?);
            if !(a0 > 0.0 && a0 < a1) {
                return Err(invalid("test.alpha0", "need 0 < alpha0 < alpha1"));
            }
        }
        if let Some(prior) = &self.prior {
            let c = prior.c.values();
            if c.is_empty() {
                return Err(invalid("prior.c", "grid is empty"));
            }
            if let Some(bad) = c.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
                return Err(invalid("prior.c", format!("{bad} is not a nonnegative number")));
            }
            if !(prior.eta > 0.0 && prior.eta < 1.0) {
                return Err(invalid("prior.eta", format!("must lie in (0, 1), got {}", prior.eta)));
            }
            if matches!(prior.kind, PriorKind::SobolevDense | PriorKind::SobolevSparse) {
                need("prior.alpha0", prior.alpha0)?;
                need("prior.alpha1", prior.alpha1)?;
            }
            if prior.kind == PriorKind::SobolevSparse {
                need("prior.delta", prior.delta)?;
            }
        }
        Ok(())
    }

    pub fn profile(&self) -> EigenProfile {
        match &self.profile {
            ProfileConfig::Sobolev { alpha } => EigenProfile::sobolev(*alpha),
            ProfileConfig::FiniteRank { m } => EigenProfile::finite_rank(*m),
            ProfileConfig::ExpDecay { c2, gamma } => EigenProfile::exp_decay(*c2, *gamma),
            ProfileConfig::Explicit { values } => EigenProfile::explicit(values.clone()),
        }
    }

    pub fn tuning(&self) -> Tuning {
        Tuning { k2: self.test.k2, k3: self.test.k3, d_floor: self.test.d_floor }
    }

    pub fn calibration_reps(&self) -> u64 {
        self.calibration_reps.unwrap_or(10 * self.reps)
    }

    pub fn prior(&self) -> Result<&PriorConfig, CliError> {
        self.prior.as_ref().ok_or_else(|| invalid("prior", "this subcommand needs a [prior] table"))
    }
}

impl PriorConfig {
    pub fn variant(&self, c: f64) -> PriorVariant {
        let (a0, a1) = (self.alpha0.unwrap_or(0.0), self.alpha1.unwrap_or(0.0));
        match self.kind {
            PriorKind::Trivial => PriorVariant::Trivial { c },
            PriorKind::MinimaxBulk => PriorVariant::Minimax { c, case: MinimaxCase::Bulk },
            PriorKind::MinimaxSpike => PriorVariant::Minimax { c, case: MinimaxCase::Spike },
            PriorKind::MinimaxCompressed => PriorVariant::MinimaxCompressed { c },
            PriorKind::Adaptive => PriorVariant::Adaptive { c },
            PriorKind::AdaptiveCompressed => PriorVariant::AdaptiveCompressed { c },
            PriorKind::SobolevDense => PriorVariant::SobolevDense { c, alpha0: a0, alpha1: a1 },
            PriorKind::SobolevSparse => PriorVariant::SobolevSparse {
                c,
                alpha0: a0,
                alpha1: a1,
                delta: self.delta.unwrap_or(0.0),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
seed = 3
reps = 500

[profile]
kind = "sobolev"
alpha = 1.0

[dims]
p = 100
s = [1, 5]
n = 1000.0

[prior]
kind = "minimax_spike"
c = 0.5
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::parse(BASIC).unwrap();
        assert_eq!(cfg.dims.s.values(), vec![1, 5]);
        assert_eq!(cfg.dims.n.values(), vec![1000.0]);
        assert_eq!(cfg.test, TestConfig::default());
        assert_eq!(cfg.calibration_reps(), 5000);
        let again = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
    }

    #[test]
    fn errors_name_the_field() {
        let low = BASIC.replace("reps = 500", "reps = 50");
        assert!(matches!(ExperimentConfig::parse(&low), Err(CliError::Config { field, .. }) if field == "reps"));
        let empty = BASIC.replace("s = [1, 5]", "s = []");
        assert!(matches!(ExperimentConfig::parse(&empty), Err(CliError::Config { field, .. }) if field == "dims.s"));
        let big = BASIC.replace("s = [1, 5]", "s = 101");
        assert!(matches!(ExperimentConfig::parse(&big), Err(CliError::Config { field, .. }) if field == "dims.s"));
        let level = format!("{BASIC}\n[test]\nlevel = 1.5\n");
        assert!(matches!(ExperimentConfig::parse(&level), Err(CliError::Config { field, .. }) if field == "test.level"));
        let unknown = BASIC.replace("seed = 3", "seed = 3\nbogus = 1");
        assert!(ExperimentConfig::parse(&unknown).is_err());
    }
}
