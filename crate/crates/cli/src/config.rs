//! Experiment configuration: one JSON document per run.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use smallcost::ergodic::SolverConfig;
use smallcost::models::{BlackScholesParams, CostSpec, KimOmbergParams, MultiAssetParams, Preferences};
use smallcost::quadrature::QuadratureConfig;
use smallcost::simulate::PathConfig;
use smallcost::Validate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Ntregion,
    Simulate,
    Welfare,
    Solve,
    Convergence,
}

impl CommandName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ntregion => "ntregion",
            Self::Simulate => "simulate",
            Self::Welfare => "welfare",
            Self::Solve => "solve",
            Self::Convergence => "convergence",
        }
    }
}

/// Inputs of the one-dimensional corrector problem, used directly by `solve`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectorInputs {
    pub v_z: f64,
    pub v_zz: f64,
    #[serde(rename = "sigma_S")]
    pub sigma_s: f64,
    pub alpha_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelBlock {
    KimOmberg(KimOmbergParams),
    BlackScholes(BlackScholesParams),
    MultiAsset(MultiAssetParams),
    Corrector(CorrectorInputs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Proportional,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    /// Odd number of nodes per dimension.
    pub points: Vec<usize>,
    /// Half extent per dimension in solver units; defaults to
    /// `extent_factor` times the decoupled one-dimensional half-widths.
    #[serde(default)]
    pub half_extent: Option<Vec<f64>>,
    #[serde(default = "default_extent_factor")]
    pub extent_factor: f64,
}

fn default_extent_factor() -> f64 {
    3.0
}

/// Numerical controls. Each command reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Evaluation time for `ntregion`.
    pub t: f64,
    pub f_range: [f64; 2],
    pub pi_range: [f64; 2],
    pub points: usize,
    /// Cost levels; defaults to `costs.lambda_p`.
    pub lambdas: Vec<f64>,
    pub policy: PolicyKind,
    /// Half-width around the target for the fixed-cost policy.
    pub fixed_halfwidth: Option<f64>,
    pub paths: Option<PathConfig>,
    pub quadrature: QuadratureConfig,
    pub grid: Option<GridBlock>,
    #[serde(rename = "K")]
    pub k_cap: f64,
    pub solver: SolverConfig,
    /// Time step of the `convergence` table.
    pub t_step: f64,
    /// Factor level for `convergence`; defaults to `F_bar`.
    pub f: Option<f64>,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            t: 0.0,
            f_range: [-0.05, 0.15],
            pi_range: [-0.5, 1.5],
            points: 201,
            lambdas: Vec::new(),
            policy: PolicyKind::Proportional,
            fixed_halfwidth: None,
            paths: None,
            quadrature: QuadratureConfig::default(),
            grid: None,
            k_cap: 100.0,
            solver: SolverConfig::default(),
            t_step: 0.5,
            f: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandName,
    /// Free text carried into reports.
    #[serde(default)]
    pub note: Option<String>,
    pub model: ModelBlock,
    #[serde(default)]
    pub preferences: Option<Preferences>,
    #[serde(default)]
    pub costs: Option<CostSpec>,
    #[serde(default)]
    pub numerics: Numerics,
    /// Stem of the output files; defaults to the config file stem.
    #[serde(default)]
    pub output: Option<String>,
}

/// A parsed config together with its provenance.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
    pub stem: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Empty or whitespace-only config files.
#[derive(Debug)]
pub struct EmptyConfig;

impl std::fmt::Display for EmptyConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("config file is empty")
    }
}

impl std::error::Error for EmptyConfig {}

pub fn parse(text: &str, origin: &str) -> Result<ExperimentConfig> {
    if text.trim().is_empty() {
        return Err(EmptyConfig.into());
    }
    let cfg: ExperimentConfig = serde_json::from_str(text).with_context(|| format!("{origin}: invalid config"))?;
    cfg.check().with_context(|| format!("{origin}: invalid config"))?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<LoadedConfig> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let text = String::from_utf8(bytes.clone()).with_context(|| format!("{}: not UTF-8", path.display()))?;
    let config = parse(&text, &path.display().to_string())?;
    let stem = match &config.output {
        Some(s) => s.clone(),
        None => path.file_stem().map_or_else(|| "out".to_string(), |s| s.to_string_lossy().into_owned()),
    };
    Ok(LoadedConfig { config, sha256: sha256_hex(&bytes), stem })
}

impl ExperimentConfig {
    /// Validates every record and the command/model pairing.
    pub fn check(&self) -> Result<()> {
        match &self.model {
            ModelBlock::KimOmberg(p) => {
                p.validate()?;
            }
            ModelBlock::BlackScholes(p) => {
                p.validate()?;
            }
            ModelBlock::MultiAsset(p) => {
                p.clone().validate()?;
            }
            ModelBlock::Corrector(c) => {
                if !(c.v_z > 0.0 && c.v_zz < 0.0 && c.sigma_s > 0.0 && c.alpha_sq >= 0.0) {
                    bail!("model.corrector: need v_z > 0, v_zz < 0, sigma_S > 0, alpha_sq >= 0");
                }
            }
        }
        if let Some(p) = self.preferences {
            p.validate()?;
        }
        let n = &self.numerics;
        if let Some(c) = self.costs {
            if self.command == CommandName::Simulate && n.policy == PolicyKind::Fixed {
                // Pure fixed costs are allowed for the rebalance-to-target policy.
                if !(c.lambda_p >= 0.0 && c.lambda_p < 1.0 && c.lambda_f >= 0.0) {
                    bail!("costs: need 0 <= lambda_p < 1 and lambda_f >= 0");
                }
            } else {
                c.validate()?;
            }
        }
        if let Some(p) = n.paths {
            p.validate()?;
        }
        if n.points < 2 {
            bail!("numerics.points must be at least 2");
        }
        if !(n.f_range[0] < n.f_range[1]) || !(n.pi_range[0] < n.pi_range[1]) {
            bail!("numerics ranges must be increasing");
        }
        if n.lambdas.iter().any(|&l| !(0.0..1.0).contains(&l)) {
            bail!("numerics.lambdas must lie in [0, 1)");
        }
        if !(n.t_step > 0.0) {
            bail!("numerics.t_step must be positive");
        }
        if !(n.k_cap > 0.0) {
            bail!("numerics.K must be positive");
        }
        let ok = matches!(
            (self.command, &self.model),
            (CommandName::Ntregion, ModelBlock::KimOmberg(_) | ModelBlock::BlackScholes(_))
                | (CommandName::Simulate, ModelBlock::KimOmberg(_))
                | (CommandName::Welfare, ModelBlock::KimOmberg(_) | ModelBlock::BlackScholes(_))
                | (CommandName::Solve, ModelBlock::MultiAsset(_) | ModelBlock::Corrector(_))
                | (CommandName::Convergence, ModelBlock::KimOmberg(_))
        );
        if !ok {
            bail!("command {} does not accept this model block", self.command.as_str());
        }
        Ok(())
    }

    pub fn gamma(&self) -> Result<f64> {
        self.preferences.map(|p| p.gamma).context("preferences.gamma is required")
    }

    pub fn horizon(&self) -> Result<f64> {
        self.preferences.and_then(|p| p.horizon).context("preferences.horizon_T is required")
    }

    pub fn lambda_p(&self) -> Result<f64> {
        self.costs.map(|c| c.lambda_p).context("costs.lambda_p is required")
    }

    /// `numerics.lambdas`, or the single configured cost level.
    pub fn lambdas(&self) -> Result<Vec<f64>> {
        if self.numerics.lambdas.is_empty() {
            Ok(vec![self.lambda_p()?])
        } else {
            Ok(self.numerics.lambdas.clone())
        }
    }

    pub fn paths(&self) -> Result<PathConfig> {
        self.numerics.paths.context("numerics.paths is required")
    }
}
