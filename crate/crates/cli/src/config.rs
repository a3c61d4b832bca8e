//! Typed configuration files for every subcommand.
//!
//! All randomness flows from the explicit `seed` field (wall-clock seeding
//! is deliberately impossible); grids are given either as explicit strictly
//! increasing arrays or as spaced specifications.

use serde::{Deserialize, Serialize};

use sarmanov_risk::dist::UnivariateLaw;
use sarmanov_risk::numeric;
use sarmanov_risk::sarmanov::ModelSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points(Vec<f64>),
    Spaced {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default = "default_spacing")]
        spacing: Spacing,
    },
}

fn default_spacing() -> Spacing {
    Spacing::Log
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
}

impl GridSpec {
    /// Materialize and check: non-empty, finite, strictly increasing.
    pub fn resolve(&self) -> Result<Vec<f64>, String> {
        let grid = match self {
            Self::Points(p) => p.clone(),
            Self::Spaced {
                start,
                stop,
                points,
                spacing,
            } => {
                if *points < 2 || !(stop > start) {
                    return Err(format!(
                        "grid spec needs points >= 2 and stop > start, got ({start}, {stop}, {points})"
                    ));
                }
                match spacing {
                    Spacing::Log => {
                        if *start <= 0.0 {
                            return Err("log spacing needs start > 0".into());
                        }
                        numeric::log_grid(*start, *stop, *points)
                    }
                    Spacing::Linear => numeric::linear_grid(*start, *stop, *points),
                }
            }
        };
        if grid.is_empty() {
            return Err("grid is empty".into());
        }
        if grid.iter().any(|x| !x.is_finite()) {
            return Err("grid contains non-finite points".into());
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err("grid must be strictly increasing".into());
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub model: ModelSpec,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonSpec {
    Finite(u32),
    Infinite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuinConfig {
    pub model: ModelSpec,
    pub seed: u64,
    pub x_grid: GridSpec,
    pub horizon: HorizonSpec,
    pub samples: u64,
    /// Tail index of F, used for the constant column and ratio.
    pub alpha: f64,
    #[serde(default = "default_eps_trunc")]
    pub eps_trunc: f64,
}

fn default_eps_trunc() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Mc,
    Exact,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductTailConfig {
    pub model: ModelSpec,
    pub seed: u64,
    pub x_grid: GridSpec,
    pub samples: u64,
    pub alpha: f64,
    #[serde(default = "default_method")]
    pub method: TailMethod,
}

fn default_method() -> TailMethod {
    TailMethod::Both
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MellinScanConfig {
    pub model: ModelSpec,
    pub seed: u64,
    pub alpha: f64,
    /// Default 100/alpha.
    #[serde(default)]
    pub beta_max: Option<f64>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    400
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HillConfig {
    pub law: UnivariateLaw,
    pub seed: u64,
    pub samples: usize,
    pub k: usize,
    /// Optional k sweep for the Hill plot.
    #[serde(default)]
    pub k_sweep: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSource {
    Analytic,
    Empirical { samples: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailRatioConfig {
    pub law: UnivariateLaw,
    pub seed: u64,
    pub x_grid: GridSpec,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default = "default_dv_scale")]
    pub dv_scale: f64,
    #[serde(default = "default_source")]
    pub source: TailSource,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_scale() -> f64 {
    2.0
}
fn default_dv_scale() -> f64 {
    0.5
}
fn default_source() -> TailSource {
    TailSource::Analytic
}
fn default_tolerance() -> f64 {
    sarmanov_risk::tail_stats::RATIO_TOL
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta0")]
    pub beta0: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub kernel1: Option<Vec<f64>>,
    #[serde(default)]
    pub x_grid: Option<GridSpec>,
}

fn default_alpha() -> f64 {
    2.0
}
fn default_beta0() -> f64 {
    std::f64::consts::PI
}
fn default_a() -> f64 {
    0.5
}
fn default_b() -> f64 {
    0.3
}
