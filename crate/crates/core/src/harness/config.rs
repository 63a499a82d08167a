use std::path::Path;

use serde::{Deserialize, Serialize};

use super::preset::{preset_params, with_epsilon, PresetName, PresetParams, Scale};
use crate::error::{Error, Result};

/// A run described as a preset plus overrides. Unset fields keep the
/// preset's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "ProblemSection::is_empty")]
    pub problem: ProblemSection,
    #[serde(default, skip_serializing_if = "QuadratureSection::is_empty")]
    pub quadrature: QuadratureSection,
    #[serde(default, skip_serializing_if = "GreedySection::is_empty")]
    pub greedy: GreedySection,
    #[serde(default, skip_serializing_if = "ExecutionSection::is_empty")]
    pub execution: ExecutionSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub preset: String,
    #[serde(default = "default_scale")]
    pub scale: String,
}

fn default_scale() -> String {
    "desk".into()
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            preset: "homogeneous".into(),
            scale: default_scale(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_s: Option<f64>,
}

impl ProblemSection {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_points: Option<usize>,
}

impl QuadratureSection {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreedySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_error_rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_error_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_points: Option<usize>,
}

impl GreedySection {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<bool>,
}

impl ExecutionSection {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

impl RunConfig {
    pub fn for_preset(name: PresetName, scale: Scale) -> Self {
        Self {
            run: RunSection {
                preset: name.to_string(),
                scale: scale.to_string(),
            },
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    /// Preset parameters with the overrides applied.
    pub fn params(&self) -> Result<PresetParams> {
        let name: PresetName = self.run.preset.parse()?;
        let scale: Scale = self.run.scale.parse()?;
        let mut p = preset_params(name, scale);
        let pr = &self.problem;
        if let Some(eps) = pr.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::Config(format!(
                    "epsilon must be positive, got {eps}"
                )));
            }
            p = with_epsilon(p, eps);
        }
        if let Some(nx) = pr.nx {
            p.nx = nx;
        }
        if let Some(ny) = pr.ny {
            p.ny = ny;
        }
        if let Some(t) = pr.final_time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!(
                    "final time must be positive, got {t}"
                )));
            }
            p.final_time = t;
        }
        if let Some(s) = pr.sigma_s {
            p.sigma_s = s;
        }
        if let Some(n) = self.quadrature.train_points {
            p.train_points = n;
        }
        if let Some(n) = self.quadrature.test_points {
            p.test_points = n;
        }
        let g = &self.greedy;
        let gc = &mut p.greedy;
        if let Some(v) = g.tol_ratio {
            gc.tol_ratio = v;
        }
        if let Some(v) = g.tol_error_rho {
            gc.tol_error_rho = v;
        }
        if let Some(v) = g.tol_error_f {
            gc.tol_error_f = v;
        }
        if let Some(v) = g.max_iterations {
            gc.max_iterations = v;
        }
        if let Some(v) = g.initial_points {
            gc.initial_lebedev_points = v;
        }
        gc.validate()?;
        Ok(p)
    }
}
