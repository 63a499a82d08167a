use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fom::ProblemDefinition;
use crate::greedy::GreedyConfig;
use crate::spatial::{BoundaryCondition, SpatialMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Homogeneous,
    Anisotropic,
    Multiscale,
    Lattice,
}

impl PresetName {
    pub const ALL: [PresetName; 4] = [
        Self::Homogeneous,
        Self::Anisotropic,
        Self::Multiscale,
        Self::Lattice,
    ];
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Homogeneous => "homogeneous",
            Self::Anisotropic => "anisotropic",
            Self::Multiscale => "multiscale",
            Self::Lattice => "lattice",
        })
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(Self::Homogeneous),
            "anisotropic" => Ok(Self::Anisotropic),
            "multiscale" => Ok(Self::Multiscale),
            "lattice" => Ok(Self::Lattice),
            _ => Err(Error::Config(format!(
                "unknown preset '{s}', expected homogeneous, anisotropic, multiscale or lattice"
            ))),
        }
    }
}

/// Problem size class. `Desk` keeps every run laptop-sized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Paper,
    Desk,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Paper => "paper",
            Self::Desk => "desk",
        })
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "desk" => Ok(Self::Desk),
            _ => Err(Error::Config(format!(
                "unknown scale '{s}', expected paper or desk"
            ))),
        }
    }
}

/// Geometry and physics knobs that fully determine a preset problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetParams {
    pub name: PresetName,
    pub scale: Scale,
    pub epsilon: f64,
    pub nx: usize,
    pub ny: usize,
    pub final_time: f64,
    /// Background scattering for the anisotropic preset.
    pub sigma_s: f64,
    pub train_points: usize,
    pub test_points: usize,
    pub greedy: GreedyConfig,
}

/// A ready-to-run benchmark configuration.
#[derive(Debug, Clone)]
pub struct Preset {
    pub params: PresetParams,
    pub problem: ProblemDefinition,
}

impl Preset {
    pub fn name(&self) -> PresetName {
        self.params.name
    }
}

fn homogeneous_final_time(eps: f64) -> f64 {
    if eps < 0.05 {
        1.5
    } else {
        0.25
    }
}

/// Default parameters of a preset at a scale.
pub fn preset_params(name: PresetName, scale: Scale) -> PresetParams {
    let desk = scale == Scale::Desk;
    let (train_points, test_points) = if desk { (110, 194) } else { (590, 2030) };
    let base = GreedyConfig::default();
    let (epsilon, n, final_time, greedy) = match name {
        PresetName::Homogeneous => (1.0, 80, 0.25, base),
        PresetName::Anisotropic => (
            1.0,
            80,
            0.5,
            GreedyConfig {
                tol_error_rho: 0.0125,
                tol_error_f: 0.0125,
                ..base
            },
        ),
        PresetName::Multiscale => (
            0.01,
            80,
            0.05,
            GreedyConfig {
                tol_error_rho: 0.015,
                tol_error_f: 0.025,
                initial_lebedev_points: 50,
                ..base
            },
        ),
        PresetName::Lattice => (
            1.0,
            100,
            1.7,
            GreedyConfig {
                tol_ratio: 1e-3,
                tol_error_rho: 0.015,
                tol_error_f: 0.03,
                initial_lebedev_points: 50,
                ..base
            },
        ),
    };
    let n = if desk { 40 } else { n };
    PresetParams {
        name,
        scale,
        epsilon,
        nx: n,
        ny: n,
        final_time,
        sigma_s: 1.0,
        train_points,
        test_points,
        greedy,
    }
}

/// Sets the Knudsen number, adjusting the homogeneous final time with it.
pub fn with_epsilon(mut params: PresetParams, eps: f64) -> PresetParams {
    params.epsilon = eps;
    if params.name == PresetName::Homogeneous {
        params.final_time = homogeneous_final_time(eps);
    }
    params
}

fn smooth_bump(r2: f64, width2: f64) -> f64 {
    if r2 < width2 {
        (-1.0 / (width2 - r2)).exp()
    } else {
        0.0
    }
}

/// Angular profile of the anisotropic initial micro part, built on the
/// azimuth `atan2(v_y, v_x)`.
pub fn anisotropic_profile(v: [f64; 3]) -> f64 {
    use std::f64::consts::PI;
    let phi = v[1].atan2(v[0]);
    if v[0] > 0.0 && v[1] > 0.0 {
        smooth_bump((phi - PI / 4.0).powi(2), PI * PI / 16.0)
    } else if v[0] < 0.0 && v[1] < 0.0 {
        -smooth_bump((phi + 3.0 * PI / 4.0).powi(2), 9.0 * PI * PI / 16.0)
    } else {
        0.0
    }
}

/// Scattering profile of the multiscale preset.
pub fn multiscale_sigma_s(x: f64, y: f64) -> f64 {
    let r = (x * x + y * y).sqrt();
    if r < 1.0 {
        let s2 = std::f64::consts::SQRT_2;
        0.999 * r.powi(4) * (r + s2).powi(2) * (r - s2).powi(2) + 0.001
    } else {
        1.0
    }
}

/// Absorbing unit blocks of the lattice preset, by lower-left corner.
pub const LATTICE_ABSORBERS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, 3.0), (3.0, 1.0), (3.0, 3.0)];

pub fn lattice_is_absorber(x: f64, y: f64) -> bool {
    LATTICE_ABSORBERS
        .iter()
        .any(|&(a, b)| x > a && x < a + 1.0 && y > b && y < b + 1.0)
}

/// Builds the problem for a parameter set.
pub fn build_preset(params: PresetParams) -> Result<Preset> {
    if params.nx == 0 || params.ny == 0 {
        return Err(Error::Config(
            "mesh must have at least one cell per axis".into(),
        ));
    }
    let p = &params;
    let problem = match p.name {
        PresetName::Homogeneous => {
            let mesh = SpatialMesh::new((0.0, 2.0), (0.0, 2.0), p.nx, p.ny)?;
            let n = mesh.n_dof();
            let source =
                mesh.sample(|x, y| (-100.0 * ((x - 1.0).powi(2) + (y - 1.0).powi(2))).exp());
            ProblemDefinition {
                mesh,
                epsilon: p.epsilon,
                sigma_s: vec![1.0; n],
                sigma_a: vec![0.0; n],
                source,
                initial_rho: vec![0.0; n],
                initial_g: None,
                final_time: p.final_time,
                bc: BoundaryCondition::Vacuum,
            }
        }
        PresetName::Anisotropic => {
            let mesh = SpatialMesh::new((-1.0, 1.0), (-1.0, 1.0), p.nx, p.ny)?;
            let n = mesh.n_dof();
            let rho0 = mesh.sample(|x, y| smooth_bump(x * x + y * y, 0.5));
            let shared = Arc::new(rho0.clone());
            ProblemDefinition {
                mesh,
                epsilon: p.epsilon,
                sigma_s: vec![p.sigma_s; n],
                sigma_a: vec![0.0; n],
                source: vec![0.0; n],
                initial_rho: rho0,
                initial_g: Some(Arc::new(move |k, v| anisotropic_profile(v) * shared[k])),
                final_time: p.final_time,
                bc: BoundaryCondition::Vacuum,
            }
        }
        PresetName::Multiscale => {
            let mesh = SpatialMesh::new((-1.0, 1.0), (-1.0, 1.0), p.nx, p.ny)?;
            let n = mesh.n_dof();
            let sigma_s = mesh.sample(multiscale_sigma_s);
            let rho0 =
                mesh.sample(|x, y| 5.0 / std::f64::consts::PI * (-25.0 * (x * x + y * y)).exp());
            ProblemDefinition {
                mesh,
                epsilon: p.epsilon,
                sigma_s,
                sigma_a: vec![0.0; n],
                source: vec![0.0; n],
                initial_rho: rho0,
                initial_g: None,
                final_time: p.final_time,
                bc: BoundaryCondition::Vacuum,
            }
        }
        PresetName::Lattice => {
            let mesh = SpatialMesh::new((0.0, 5.0), (0.0, 5.0), p.nx, p.ny)?;
            let n = mesh.n_dof();
            let absorber = mesh.sample(|x, y| if lattice_is_absorber(x, y) { 1.0 } else { 0.0 });
            let source = mesh.sample(|x, y| {
                if (x - 2.5).abs() < 0.5 && (y - 2.5).abs() < 0.5 {
                    1.0
                } else {
                    0.0
                }
            });
            ProblemDefinition {
                mesh,
                epsilon: p.epsilon,
                sigma_s: absorber.iter().map(|a| 1.0 - a).collect(),
                sigma_a: absorber.iter().map(|a| 100.0 * a).collect(),
                source,
                initial_rho: vec![0.0; n],
                initial_g: None,
                final_time: p.final_time,
                bc: BoundaryCondition::Vacuum,
            }
        }
    };
    problem.validate()?;
    Ok(Preset { params, problem })
}

/// Preset with its default parameters.
pub fn preset(name: PresetName, scale: Scale) -> Result<Preset> {
    build_preset(preset_params(name, scale))
}
