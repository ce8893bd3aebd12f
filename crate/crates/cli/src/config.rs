//! Run configuration: JSON schema, presets and resolution into library types.

use std::path::Path;

use dynpolar::fibers::SphereQuadrature;
use dynpolar::frames::FrameChange;
use dynpolar::linalg::{Dim, Mat, Vector};
use dynpolar::mean_rotation::BodySampler;
use dynpolar::{TimeGrid, VelocityField};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Velocity field selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    PlanarShear { k: f64 },
    IrrotationalVortex { alpha: f64 },
    Shear3d { k: f64, c: f64, w: f64 },
    RigidRotation { omega: [f64; 3] },
    /// `v = G x` with `gradient` given row by row.
    Linear { gradient: Vec<Vec<f64>> },
}

/// Uniform cell-centre grid over a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: Vec<usize>,
}

/// Observer change; `translation` holds polynomial coefficients of `b(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrameSpec {
    Identity {
        #[serde(default)]
        translation: Vec<Vec<f64>>,
    },
    PlanarSpin {
        rate: f64,
        #[serde(default)]
        translation: Vec<Vec<f64>>,
    },
    AxisSpin {
        axis: [f64; 3],
        rate: f64,
        #[serde(default)]
        translation: Vec<Vec<f64>>,
    },
}

/// Sphere rule for fiber averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuadratureSpec {
    /// Uniform in the polar angle about the vorticity direction.
    PolarAngle { n_psi: usize, n_phi: usize },
    /// Uniform in surface area.
    Area { n_psi: usize, n_phi: usize },
    /// Area-uniform random directions seeded by the run seed.
    MonteCarlo { samples: usize },
}

/// Contents of a config file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub field: Option<FieldSpec>,
    pub x0: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub t_end: Option<f64>,
    pub steps: Option<usize>,
    pub sampler: Option<SamplerSpec>,
    pub axis: Option<[f64; 3]>,
    pub frame: Option<FrameSpec>,
    pub quadrature: Option<QuadratureSpec>,
    pub seed: Option<u64>,
}

/// Fully resolved configuration, echoed into every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub field: FieldSpec,
    pub x0: Vec<f64>,
    pub tau: f64,
    pub t_end: f64,
    pub steps: usize,
    pub sampler: SamplerSpec,
    pub axis: [f64; 3],
    pub frame: FrameSpec,
    pub quadrature: QuadratureSpec,
    pub seed: u64,
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub steps: Option<usize>,
    pub seed: Option<u64>,
}

impl FieldSpec {
    pub fn dim(&self) -> Dim {
        match self {
            FieldSpec::PlanarShear { .. } | FieldSpec::IrrotationalVortex { .. } => Dim::Two,
            FieldSpec::Shear3d { .. } | FieldSpec::RigidRotation { .. } => Dim::Three,
            FieldSpec::Linear { gradient } => {
                if gradient.len() == 2 {
                    Dim::Two
                } else {
                    Dim::Three
                }
            }
        }
    }

    pub fn preset(name: &str) -> Option<FieldSpec> {
        match name {
            "shear" => Some(FieldSpec::PlanarShear { k: 1.0 }),
            "vortex" => Some(FieldSpec::IrrotationalVortex { alpha: 1.0 }),
            "shear3d" => Some(FieldSpec::Shear3d { k: 1.0, c: 1.0, w: 0.0 }),
            _ => None,
        }
    }

    fn build(&self) -> Result<VelocityField, CliError> {
        let f = match self {
            FieldSpec::PlanarShear { k } => VelocityField::PlanarShear { k: *k },
            FieldSpec::IrrotationalVortex { alpha } => VelocityField::IrrotationalVortex { alpha: *alpha },
            FieldSpec::Shear3d { k, c, w } => VelocityField::Shear3D { k: *k, c: *c, w: *w },
            FieldSpec::RigidRotation { omega } => VelocityField::RigidRotation { omega: Vector::new3(omega[0], omega[1], omega[2]) },
            FieldSpec::Linear { gradient } => {
                let n = gradient.len();
                if !(n == 2 || n == 3) || gradient.iter().any(|row| row.len() != n) {
                    return Err(CliError::Config("field.gradient: expected a 2×2 or 3×3 matrix".into()));
                }
                let flat: Vec<f64> = gradient.iter().flatten().copied().collect();
                if flat.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::Config("field.gradient: entries must be finite".into()));
                }
                VelocityField::linear(Mat::from_row_slice(&flat).map_err(|e| CliError::Config(format!("field.gradient: {e}")))?)
            }
        };
        f.validate().map_err(|e| CliError::Config(format!("field: {e}")))?;
        Ok(f)
    }
}

impl RunConfig {
    /// Defaults for a field: starting point, horizon, body sampler, axis and frame.
    pub fn defaults_for(field: FieldSpec) -> RunConfig {
        let dim = field.dim();
        let (x0, sampler) = match (&field, dim) {
            (FieldSpec::IrrotationalVortex { .. }, _) => (vec![1.0, 0.0], box_sampler(&[0.5, -0.5], &[1.5, 0.5], 16)),
            (FieldSpec::RigidRotation { .. }, _) => (vec![1.0, 0.0, 0.0], box_sampler(&[-1.0; 3], &[1.0; 3], 4)),
            (_, Dim::Two) => (vec![0.0, 0.5], box_sampler(&[-1.0; 2], &[1.0; 2], 16)),
            (_, Dim::Three) => (vec![0.0, 0.0, 0.0], box_sampler(&[-1.0; 3], &[1.0; 3], 8)),
        };
        let (axis, frame) = match (&field, dim) {
            (FieldSpec::Shear3d { .. }, _) => ([1.0, 0.0, 0.0], axis_spin()),
            (_, Dim::Two) => ([0.0, 0.0, 1.0], FrameSpec::PlanarSpin { rate: 1.0, translation: Vec::new() }),
            (_, Dim::Three) => ([0.0, 0.0, 1.0], axis_spin()),
        };
        RunConfig {
            field,
            x0,
            tau: 0.0,
            t_end: 4.0,
            steps: 4000,
            sampler,
            axis,
            frame,
            quadrature: QuadratureSpec::PolarAngle { n_psi: 24, n_phi: 48 },
            seed: 0,
        }
    }

    /// Preset (or the planar shear) ← file ← flags.
    pub fn resolve(preset: Option<FieldSpec>, file: ConfigFile, flags: Overrides) -> Result<RunConfig, CliError> {
        let field = file.field.clone().or(preset).unwrap_or(FieldSpec::PlanarShear { k: 1.0 });
        let mut cfg = RunConfig::defaults_for(field);
        if let Some(v) = file.x0 {
            cfg.x0 = v;
        }
        if let Some(v) = file.tau {
            cfg.tau = v;
        }
        if let Some(v) = file.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = file.steps {
            cfg.steps = v;
        }
        if let Some(v) = file.sampler {
            cfg.sampler = v;
        }
        if let Some(v) = file.axis {
            cfg.axis = v;
        }
        if let Some(v) = file.frame {
            cfg.frame = v;
        }
        if let Some(v) = file.quadrature {
            cfg.quadrature = v;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }
        if let Some(v) = flags.steps {
            cfg.steps = v;
        }
        if let Some(v) = flags.seed {
            cfg.seed = v;
        }
        cfg.build()?;
        Ok(cfg)
    }

    /// The configuration as library objects, after validation.
    pub fn build(&self) -> Result<Resolved, CliError> {
        let field = self.field.build()?;
        let dim = field.dim();
        let x0 = vector_of("x0", &self.x0, dim)?;
        if !(self.tau.is_finite() && self.t_end.is_finite() && self.t_end > self.tau) {
            return Err(CliError::Config("tau, t_end: need finite values with t_end > tau".into()));
        }
        if self.steps == 0 {
            return Err(CliError::Config("steps: must be at least 1".into()));
        }
        let grid = TimeGrid::new(self.tau, self.t_end, self.steps).map_err(|e| CliError::Config(format!("grid: {e}")))?;
        let s = &self.sampler;
        if s.lo.len() != dim.n() || s.hi.len() != dim.n() || s.n.len() != dim.n() {
            return Err(CliError::Config(format!("sampler: lo, hi and n need {} entries each", dim.n())));
        }
        let sampler = match dim {
            Dim::Two => BodySampler::grid_2d([s.lo[0], s.hi[0]], [s.lo[1], s.hi[1]], s.n[0], s.n[1]),
            Dim::Three => BodySampler::grid_3d([s.lo[0], s.lo[1], s.lo[2]], [s.hi[0], s.hi[1], s.hi[2]], [s.n[0], s.n[1], s.n[2]]),
        }
        .map_err(|e| CliError::Config(format!("sampler: {e}")))?;
        let axis = Vector::new3(self.axis[0], self.axis[1], self.axis[2]);
        if (axis.norm() - 1.0).abs().is_nan() || (axis.norm() - 1.0).abs() > 1e-10 {
            return Err(CliError::Config(format!("axis: must be a unit vector, |axis| = {}", axis.norm())));
        }
        if dim == Dim::Two && (axis[0] != 0.0 || axis[1] != 0.0) {
            return Err(CliError::Config("axis: planar fields rotate about e3 only".into()));
        }
        let frame = self.build_frame(dim)?;
        let quadrature = match self.quadrature {
            QuadratureSpec::PolarAngle { n_psi, n_phi } | QuadratureSpec::Area { n_psi, n_phi } if n_psi == 0 || n_phi == 0 => {
                return Err(CliError::Config("quadrature: n_psi and n_phi must be positive".into()))
            }
            QuadratureSpec::PolarAngle { .. } => None,
            QuadratureSpec::Area { n_psi, n_phi } => Some(SphereQuadrature::area(n_psi, n_phi).map_err(|e| CliError::Config(format!("quadrature: {e}")))?),
            QuadratureSpec::MonteCarlo { samples } => {
                Some(SphereQuadrature::monte_carlo(samples, self.seed).map_err(|e| CliError::Config(format!("quadrature: {e}")))?)
            }
        };
        Ok(Resolved { field, x0, grid, sampler, axis, frame, quadrature })
    }

    fn build_frame(&self, dim: Dim) -> Result<FrameChange, CliError> {
        let (frame, translation) = match &self.frame {
            FrameSpec::Identity { translation } => (FrameChange::identity(dim), translation),
            FrameSpec::PlanarSpin { rate, translation } => {
                if dim != Dim::Two {
                    return Err(CliError::Config("frame: planar_spin needs a planar field".into()));
                }
                (FrameChange::planar_spin(*rate), translation)
            }
            FrameSpec::AxisSpin { axis, rate, translation } => {
                if dim != Dim::Three {
                    return Err(CliError::Config("frame: axis_spin needs a 3D field".into()));
                }
                let f = FrameChange::axis_spin(&Vector::new3(axis[0], axis[1], axis[2]), *rate)
                    .map_err(|e| CliError::Config(format!("frame.axis: {e}")))?;
                (f, translation)
            }
        };
        if translation.is_empty() {
            return Ok(frame);
        }
        let coeffs = translation
            .iter()
            .enumerate()
            .map(|(i, c)| vector_of(&format!("frame.translation[{i}]"), c, dim))
            .collect::<Result<Vec<_>, _>>()?;
        frame.with_polynomial_translation(coeffs).map_err(|e| CliError::Config(format!("frame.translation: {e}")))
    }

    /// Single-line JSON of the resolved configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Library objects built from a [`RunConfig`].
pub struct Resolved {
    pub field: VelocityField,
    pub x0: Vector,
    pub grid: TimeGrid,
    pub sampler: BodySampler,
    pub axis: Vector,
    pub frame: FrameChange,
    /// `None` selects the polar-angle measure about the local vorticity.
    pub quadrature: Option<SphereQuadrature>,
}

fn box_sampler(lo: &[f64], hi: &[f64], n: usize) -> SamplerSpec {
    SamplerSpec { lo: lo.to_vec(), hi: hi.to_vec(), n: vec![n; lo.len()] }
}

fn axis_spin() -> FrameSpec {
    FrameSpec::AxisSpin { axis: [1.0, 2.0, 2.0], rate: 0.8, translation: Vec::new() }
}

fn vector_of(key: &str, v: &[f64], dim: Dim) -> Result<Vector, CliError> {
    if v.len() != dim.n() {
        return Err(CliError::Config(format!("{key}: expected {} components, found {}", dim.n(), v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config(format!("{key}: components must be finite")));
    }
    Ok(Vector::from_slice(v).expect("length checked"))
}

/// Reads and parses a config file; parse errors carry line and column.
pub fn read_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<ConfigFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}
