//! Experiment configuration: matrix sources, bump source, grids, thresholds.

use std::path::Path;

use serde::{Deserialize, Serialize};

use latbump_core::bump::read_bump;
use latbump_core::operator::QExponent;
use latbump_core::BumpSpec;

use crate::error::{CliError, CliResult};

/// Where the matrices of a run come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MatrixSource {
    /// Load one matrix from a JSON file.
    File { path: String },
    /// Complex Gaussian entries on the k x k index block [0,k)^2.
    RandomComplex {
        size: i64,
        #[serde(default = "one")]
        count: usize,
    },
    /// Identity on the diagonal, size k.
    Diagonal { size: i64 },
    /// All-ones k x k block.
    OnesBlock { size: i64 },
    /// Decaying weights (1+|mu|+|nu|)^(-decay) truncated to sup-norm radius.
    WDecay {
        radius: i64,
        #[serde(default = "half")]
        decay: f64,
    },
}

fn one() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

/// Bump for the assembled multiplier.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BumpSource {
    File { path: String },
    Inline(BumpSpec),
}

impl BumpSource {
    pub fn load(&self, base: Option<&Path>) -> CliResult<BumpSpec> {
        match self {
            BumpSource::File { path } => {
                let p = match base {
                    Some(b) => b.join(path),
                    None => path.into(),
                };
                read_bump(p).map_err(CliError::from)
            }
            BumpSource::Inline(b) => {
                b.validate().map_err(CliError::from)?;
                Ok(b.clone())
            }
        }
    }
}

/// Aggregate-check thresholds. These are artifact constants calibrated once
/// on the default family experiment (seed 20260810, trials 100, m 16, x box
/// [-8.5, 8.5]), where the measured maxima were 0.922 for the q = 1 ratio and
/// 10.45 for the q spread; the recorded bounds carry headroom on top.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thresholds {
    /// Upper bound for empirical(q=1)/bnorm_lower across all families.
    #[serde(default = "default_upper_ratio_max")]
    pub upper_ratio_max: f64,
    /// Upper bound for max_q/min_q of the empirical lower bounds.
    #[serde(default = "default_q_spread_max")]
    pub q_spread_max: f64,
    /// Allowed slack below kappa for certificate/bnorm_lower.
    #[serde(default = "default_certificate_slack")]
    pub certificate_slack: f64,
    /// Max signed slope * size-span / mean(ratio) for the per-family trend;
    /// growth beyond this fails, decay of any size passes.
    #[serde(default = "default_slope_rel_max")]
    pub slope_rel_max: f64,
}

pub fn default_upper_ratio_max() -> f64 {
    2.0
}

pub fn default_q_spread_max() -> f64 {
    16.0
}

pub fn default_certificate_slack() -> f64 {
    1e-3
}

pub fn default_slope_rel_max() -> f64 {
    0.10
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            upper_ratio_max: default_upper_ratio_max(),
            q_spread_max: default_q_spread_max(),
            certificate_slack: default_certificate_slack(),
            slope_rel_max: default_slope_rel_max(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub matrices: Vec<MatrixSource>,
    /// Bump for sigma assembly; defaults to the plateau product.
    #[serde(default = "default_bump")]
    pub bump: BumpSource,
    /// Frequency-grid rate for sigma and the empirical inputs.
    #[serde(default = "default_m")]
    pub m: u32,
    /// Rate for the witness kit (pairing and certificate).
    #[serde(default = "default_witness_m")]
    pub witness_m: u32,
    /// Spatial box for outputs, [lo, hi] per axis, half-odd endpoints.
    #[serde(default = "default_xbox")]
    pub xbox: (f64, f64),
    /// Spatial sample rate for outputs.
    #[serde(default = "default_x_m")]
    pub x_m: u32,
    #[serde(default = "default_qs")]
    pub qs: Vec<QExponent>,
    /// Random input pairs per matrix and q.
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Run the witness-certificate leg (requires the bump to pass the
    /// dual-window test).
    #[serde(default = "yes")]
    pub certificate: bool,
    /// Scale every matrix to bnorm_lower = 1 before the operator runs.
    #[serde(default)]
    pub normalize: bool,
    /// Window and rate for the dual-window precondition check.
    #[serde(default = "default_window")]
    pub window: (f64, f64),
    #[serde(default = "default_check_m")]
    pub check_m: u32,
    #[serde(default = "default_check_tol")]
    pub check_tol: f64,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn yes() -> bool {
    true
}

fn default_bump() -> BumpSource {
    BumpSource::Inline(BumpSpec::tensor_power(
        BumpSpec::plateau(vec![(-0.25, 0.25)], vec![(-0.5, 0.5)]),
        2,
    ))
}

fn default_m() -> u32 {
    16
}

fn default_witness_m() -> u32 {
    64
}

fn default_xbox() -> (f64, f64) {
    (-8.5, 8.5)
}

fn default_x_m() -> u32 {
    16
}

fn default_qs() -> Vec<QExponent> {
    vec![
        QExponent::Finite(1.0),
        QExponent::Finite(2.0),
        QExponent::Infinity,
    ]
}

fn default_trials() -> usize {
    20
}

fn default_restarts() -> usize {
    32
}

fn default_tol() -> f64 {
    1e-10
}

fn default_window() -> (f64, f64) {
    (-1.0, 1.0)
}

fn default_check_m() -> u32 {
    64
}

fn default_check_tol() -> f64 {
    1e-6
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> CliResult<Self> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.as_ref().display())))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        for q in &self.qs {
            q.validate().map_err(CliError::from)?;
        }
        if self.qs.is_empty() {
            return Err(CliError::Config("q list must be nonempty".into()));
        }
        if self.trials < 1 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        for (name, m) in [
            ("m", self.m),
            ("witness_m", self.witness_m),
            ("x_m", self.x_m),
            ("check_m", self.check_m),
        ] {
            if m < 2 || m % 2 != 0 {
                return Err(CliError::Config(format!(
                    "{name} must be an even integer >= 2, got {m}"
                )));
            }
        }
        let (lo, hi) = self.xbox;
        if !(lo < hi) {
            return Err(CliError::Config("xbox must satisfy lo < hi".into()));
        }
        // the witness certificate needs the unit cube inside the x box
        if self.certificate && !(lo <= -0.5 && hi >= 0.5) {
            return Err(CliError::Config(
                "xbox must contain [-1/2, 1/2] when the certificate leg runs".into(),
            ));
        }
        if self.tol <= 0.0 || self.check_tol <= 0.0 {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        if self.restarts < 1 {
            return Err(CliError::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }
}
