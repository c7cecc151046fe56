//! JSON configuration files. Unknown keys are rejected.

use std::path::Path;

use gbn_core::learn::{LearnerConfig, Param};
use gbn_core::synth::GeneratorConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

fn default_weight_magnitude() -> f64 {
    0.5
}
fn default_sigma2() -> f64 {
    0.8
}
fn default_min_precision_eig() -> f64 {
    0.05
}
fn default_max_rejections() -> usize {
    1000
}
fn default_trials() -> usize {
    30
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.into(),
        row: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// `generate` input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub p: usize,
    pub q: f64,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_weight_magnitude")]
    pub weight_magnitude: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_min_precision_eig")]
    pub min_precision_eig: f64,
    #[serde(default = "default_max_rejections")]
    pub max_rejections: usize,
    /// Per-node variances drawn from `{1, 1 − γ, 1 + γ}` when set.
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl GenerateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(CliError::Config("p: must be at least 1".into()));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(CliError::Config("q: must lie in (0, 1]".into()));
        }
        if self.n == 0 {
            return Err(CliError::Config("n: must be at least 1".into()));
        }
        if !(self.weight_magnitude > 0.0) {
            return Err(CliError::Config("weight_magnitude: must be positive".into()));
        }
        if !(self.sigma2 > 0.0) {
            return Err(CliError::Config("sigma2: must be positive".into()));
        }
        if let Some(g) = self.gamma {
            if !(0.0..1.0).contains(&g) {
                return Err(CliError::Config("gamma: must lie in [0, 1)".into()));
            }
        }
        Ok(())
    }

    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            p: self.p,
            q: self.q,
            weight_magnitude: self.weight_magnitude,
            sigma2: self.sigma2,
            min_precision_eig: self.min_precision_eig,
            max_rejections: self.max_rejections,
            seed: self.seed,
        }
    }
}

/// `learn` input. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnConfigFile {
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub k_hint: Option<usize>,
    #[serde(default)]
    pub strict_recompute: bool,
    #[serde(default)]
    pub center: bool,
    #[serde(default)]
    pub tol: Option<f64>,
}

impl LearnConfigFile {
    pub fn learner(&self) -> Result<LearnerConfig> {
        let mut cfg = LearnerConfig {
            lambda: self.lambda.map_or(Param::Auto, Param::Fixed),
            support_threshold: self.threshold.map_or(Param::Auto, Param::Fixed),
            k_hint: self.k_hint,
            strict_recompute: self.strict_recompute,
            center: self.center,
            ..LearnerConfig::default()
        };
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// `0.5 k √(ln p / n)` with the generator's true `k`.
    Auto,
    /// The experiment's fixed `lambda` value.
    Fixed,
}

/// `sweep` input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Node counts, paired element-wise with `q`.
    pub p: Vec<usize>,
    pub q: Vec<f64>,
    /// Sample-size multipliers: `n = ⌈C k² ln p⌉`.
    pub c: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_weight_magnitude")]
    pub weight_magnitude: f64,
    #[serde(default = "default_min_precision_eig")]
    pub min_precision_eig: f64,
    #[serde(default = "default_max_rejections")]
    pub max_rejections: usize,
    /// Variance-perturbation levels for the unequal-variance sweep.
    #[serde(default)]
    pub gamma: Vec<f64>,
    /// `C` used by the γ sweep; defaults to the largest `C`.
    #[serde(default)]
    pub gamma_c: Option<f64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_lambda_rule")]
    pub lambda_rule: LambdaRule,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub strict_recompute: bool,
}

fn default_lambda_rule() -> LambdaRule {
    LambdaRule::Auto
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.p.len() != self.q.len() {
            return Err(CliError::Config(
                "p, q: must be non-empty lists of equal length".into(),
            ));
        }
        if self.p.iter().any(|&p| p < 2) {
            return Err(CliError::Config("p: every value must be at least 2".into()));
        }
        if self.q.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
            return Err(CliError::Config("q: every value must lie in (0, 1]".into()));
        }
        if self.c.is_empty() || self.c.iter().any(|&c| !(c > 0.0)) {
            return Err(CliError::Config(
                "c: must be a non-empty list of positive values".into(),
            ));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials: must be at least 1".into()));
        }
        if self.gamma.iter().any(|g| !(0.0..1.0).contains(g)) {
            return Err(CliError::Config("gamma: every value must lie in [0, 1)".into()));
        }
        if self.lambda_rule == LambdaRule::Fixed && self.lambda.is_none() {
            return Err(CliError::Config(
                "lambda: required when lambda_rule is \"fixed\"".into(),
            ));
        }
        Ok(())
    }

    pub fn gamma_c(&self) -> f64 {
        self.gamma_c
            .unwrap_or_else(|| self.c.iter().copied().fold(f64::MIN, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let e = serde_json::from_str::<GenerateConfig>(r#"{"p": 2, "q": 1, "n": 5, "sead": 1}"#);
        assert!(e.unwrap_err().to_string().contains("unknown field `sead`"));
        let e = serde_json::from_str::<ExperimentSpec>(r#"{"p": [5], "q": [0.3], "c": [1], "trails": 2}"#);
        assert!(e.is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let g: GenerateConfig = serde_json::from_str(r#"{"p": 2, "q": 1, "n": 5}"#).unwrap();
        assert_eq!((g.weight_magnitude, g.sigma2, g.max_rejections), (0.5, 0.8, 1000));
        let s: ExperimentSpec = serde_json::from_str(r#"{"p": [5], "q": [0.3], "c": [1, 4]}"#).unwrap();
        assert_eq!(s.trials, 30);
        assert_eq!(s.gamma_c(), 4.0);
        s.validate().unwrap();
    }

    #[test]
    fn validation_names_fields() {
        let g = GenerateConfig {
            q: 0.0,
            ..serde_json::from_str(r#"{"p": 2, "q": 1, "n": 5}"#).unwrap()
        };
        assert!(g.validate().unwrap_err().to_string().contains("q:"));
        let s: ExperimentSpec = serde_json::from_str(r#"{"p": [5, 6], "q": [0.3], "c": [1]}"#).unwrap();
        assert_eq!(s.validate().unwrap_err().exit_code(), 2);
    }
}
