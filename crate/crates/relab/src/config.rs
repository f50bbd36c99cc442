//! Experiment configuration: a single JSON document, overridable from the
//! command line.

use std::path::PathBuf;

use recore::bounds::TheoryConfig;
use recore::model::{AmplitudeScheme, CovarianceKind, CovarianceModel, EnsembleKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Recert,
    ReVerify,
    RecoverLasso,
    RecoverDs,
    Width,
    Sweep,
    GaussDesign,
}

/// Penalty selection. The named rules scale the noise level
/// lambda_{sigma,a,p} by 2(1+theta) for the Lasso and (1+theta) for the
/// Dantzig selector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum LambdaRule {
    PaperLasso,
    PaperDs,
    Explicit { value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub n: Vec<usize>,
    pub p: Vec<usize>,
    pub s: Vec<usize>,
    pub rho: Vec<f64>,
}

impl SweepGrid {
    pub fn is_empty(&self) -> bool {
        self.n.is_empty() || self.p.is_empty() || self.s.is_empty() || self.rho.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub k0: f64,
    /// Extra denominator block size for the RE(s, m, k0) variant.
    pub m: Option<usize>,
    pub model: CovarianceKind,
    pub ensemble: EnsembleKind,
    pub trials: usize,
    /// Cone vectors sampled per trial in verification experiments.
    pub inner_samples: usize,
    pub theta: f64,
    pub a: f64,
    pub sigma: f64,
    pub lambda_rule: LambdaRule,
    pub amplitude: AmplitudeScheme,
    pub master_seed: u64,
    pub theory: TheoryConfig,
    /// Stand-in for unquantified vanishing terms in the asymptotic bounds.
    pub slack: f64,
    /// Sparse-sphere sizes for width experiments.
    pub width_m: Vec<usize>,
    pub sweep: SweepGrid,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// 0 means one worker per available core.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::ReVerify,
            n: 400,
            p: 64,
            s: 4,
            k0: 3.0,
            m: None,
            model: CovarianceKind::Identity,
            ensemble: EnsembleKind::Gaussian,
            trials: 200,
            inner_samples: 256,
            theta: 0.5,
            a: 1.0,
            sigma: 1.0,
            lambda_rule: LambdaRule::PaperLasso,
            amplitude: AmplitudeScheme::Constant { amplitude: 1.0 },
            master_seed: 42,
            theory: TheoryConfig::default(),
            slack: 0.05,
            width_m: vec![1, 2, 4],
            sweep: SweepGrid::default(),
            out: None,
            format: OutputFormat::Csv,
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.sync_theory();
        Ok(cfg)
    }

    /// The top-level sigma/a/theta are authoritative; mirror them into the
    /// theory block so formulas and events use one set of values.
    pub fn sync_theory(&mut self) {
        self.theory.sigma_noise = self.sigma;
        self.theory.a = self.a;
        self.theory.theta = self.theta;
    }

    pub fn build_model(&self) -> Result<CovarianceModel, ConfigError> {
        CovarianceModel::new(self.p, self.model.clone())
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.trials < 1 {
            return fail("trials must be >= 1");
        }
        if self.p < 2 {
            return fail("p must be >= 2");
        }
        if self.n < 1 {
            return fail("n must be >= 1");
        }
        if self.s < 1 || 2 * self.s > self.p {
            return fail("s must satisfy 1 <= s <= p/2");
        }
        if !(self.k0 > 0.0) {
            return fail("k0 must be positive");
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return fail("theta must lie in (0, 1)");
        }
        if self.a < 0.0 {
            return fail("a must be >= 0");
        }
        if !(self.sigma > 0.0) {
            return fail("sigma must be positive");
        }
        if !(self.slack >= 0.0) {
            return fail("slack must be >= 0");
        }
        if self.inner_samples < 1 {
            return fail("inner_samples must be >= 1");
        }
        if let Some(m) = self.m {
            if m < self.s || self.s + m > self.p {
                return fail("m must satisfy s <= m and s + m <= p");
            }
        }
        if let LambdaRule::Explicit { value } = self.lambda_rule {
            if !(value >= 0.0) {
                return fail("explicit lambda must be >= 0");
            }
        }
        match self.experiment {
            Experiment::RecoverLasso => {
                if self.lambda_rule == LambdaRule::PaperDs {
                    return fail("paper-ds lambda rule is inconsistent with the Lasso");
                }
            }
            Experiment::RecoverDs => {
                if self.lambda_rule == LambdaRule::PaperLasso {
                    return fail("paper-lasso lambda rule is inconsistent with the Dantzig selector");
                }
            }
            Experiment::GaussDesign => {
                if self.ensemble != EnsembleKind::Gaussian {
                    return fail("gauss-design requires the gaussian ensemble");
                }
            }
            Experiment::Width => {
                if self.width_m.iter().any(|&m| m == 0 || m > self.p) {
                    return fail("width_m entries must satisfy 1 <= m <= p");
                }
            }
            Experiment::Sweep => {
                if self.sweep.is_empty() {
                    return fail("sweep requires a non-empty grid over n, p, s, rho");
                }
                for (&p, &s) in self
                    .sweep
                    .p
                    .iter()
                    .flat_map(|p| self.sweep.s.iter().map(move |s| (p, s)))
                {
                    if s < 1 || 2 * s > p {
                        return fail("every sweep cell must satisfy 1 <= s <= p/2");
                    }
                }
                for &rho in &self.sweep.rho {
                    if !(rho.abs() < 1.0) {
                        return fail("sweep rho values must satisfy |rho| < 1");
                    }
                }
            }
            _ => {}
        }
        self.theory
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.build_model()?;
        Ok(())
    }

    /// The penalty level implied by the lambda rule.
    pub fn lambda(&self) -> Result<f64, ConfigError> {
        let base = recore::bounds::lambda_noise(self.sigma, self.a, self.p, self.n)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(match self.lambda_rule {
            LambdaRule::PaperLasso => 2.0 * (1.0 + self.theta) * base,
            LambdaRule::PaperDs => (1.0 + self.theta) * base,
            LambdaRule::Explicit { value } => value,
        })
    }
}
