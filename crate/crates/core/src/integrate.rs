//! Fixed-step RK4 for trajectories, deformation gradients and linear matrix ODEs.
//!
//! A trajectory stores the field samples taken at every RK4 stage. Any matrix
//! ODE `Ż = G(t) Z` whose generator is built from those samples is then
//! integrated exactly as if `x` and `Z` had been advanced jointly.

use crate::error::{KinematicsError, Result};
use crate::fields::{FieldSample, VelocityField};
use crate::linalg::{nearest_rotation, sym_part, Dim, Mat, Vector};

/// RK4 stage abscissae.
pub const RK4_C: [f64; 4] = [0.0, 0.5, 0.5, 1.0];

/// Uniform grid `t_k = origin + (first + k) Δt`, `k = 0..=steps`.
///
/// Sub-grids created by [`TimeGrid::sub`] keep `origin`, `Δt` and the absolute
/// node index, so a restarted integration sees bit-identical node times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    origin: f64,
    dt: f64,
    first: usize,
    steps: usize,
}

impl TimeGrid {
    /// Grid from `tau` to `t_end` in `steps` steps; `t_end < tau` integrates backward.
    pub fn new(tau: f64, t_end: f64, steps: usize) -> Result<TimeGrid> {
        if steps == 0 {
            return Err(KinematicsError::InvalidInput("a time grid needs at least one step".into()));
        }
        if !tau.is_finite() || !t_end.is_finite() {
            return Err(KinematicsError::InvalidInput("non-finite time bounds".into()));
        }
        Ok(TimeGrid { origin: tau, dt: (t_end - tau) / steps as f64, first: 0, steps })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn node(&self, k: usize) -> f64 {
        if self.first + k == 0 {
            self.origin
        } else {
            self.origin + (self.first + k) as f64 * self.dt
        }
    }

    pub fn tau(&self) -> f64 {
        self.node(0)
    }

    pub fn t_end(&self) -> f64 {
        self.node(self.steps)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Time of RK4 stage `stage` within step `step`.
    pub fn stage_time(&self, step: usize, stage: usize) -> f64 {
        match stage {
            0 => self.node(step),
            3 => self.node(step + 1),
            _ => self.origin + ((self.first + step) as f64 + RK4_C[stage]) * self.dt,
        }
    }

    /// Index of the node equal to `t` up to `1e-9 |Δt|`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if self.dt == 0.0 {
            return (t == self.origin).then_some(0);
        }
        let k = ((t - self.node(0)) / self.dt).round();
        if !(0.0..=self.steps as f64).contains(&k) {
            return None;
        }
        let k = k as usize;
        ((self.node(k) - t).abs() <= 1e-9 * self.dt.abs()).then_some(k)
    }

    pub fn require_node(&self, t: f64) -> Result<usize> {
        self.index_of(t).ok_or(KinematicsError::NodeMismatch { t })
    }

    /// Nodes `from..=to` of this grid as a grid of their own.
    pub fn sub(&self, from: usize, to: usize) -> Result<TimeGrid> {
        if from >= to || to > self.steps {
            return Err(KinematicsError::InvalidInput(format!("invalid node range {from}..={to}")));
        }
        Ok(TimeGrid { origin: self.origin, dt: self.dt, first: self.first + from, steps: to - from })
    }

    /// Same span with every step split into `factor` equal steps; old node `k`
    /// becomes node `factor·k` with an identical time value.
    pub fn refine(&self, factor: usize) -> TimeGrid {
        assert!(factor.is_power_of_two(), "refinement factor must be a power of two");
        TimeGrid {
            origin: self.origin,
            dt: self.dt / factor as f64,
            first: self.first * factor,
            steps: self.steps * factor,
        }
    }

    pub fn same_nodes(&self, other: &TimeGrid) -> bool {
        self.steps == other.steps && (0..self.len()).all(|k| self.node(k) == other.node(k))
    }

    pub(crate) fn check_same(&self, other: &TimeGrid) -> Result<()> {
        if self.same_nodes(other) {
            Ok(())
        } else {
            Err(KinematicsError::GridMismatch(format!(
                "[{}, {}] in {} steps vs [{}, {}] in {} steps",
                self.tau(),
                self.t_end(),
                self.steps,
                other.tau(),
                other.t_end(),
                other.steps
            )))
        }
    }
}

/// One RK4 stage: step index, stage index `0..4`, and its time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub step: usize,
    pub index: usize,
    pub t: f64,
}

/// RK4 trajectory with the field sampled at every node and every stage.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub points: Vec<Vector>,
    pub node_samples: Vec<FieldSample>,
    /// `stage_samples[k][i]` is the field at stage `i` of step `k`.
    pub stage_samples: Vec<[FieldSample; 4]>,
}

impl Trajectory {
    pub fn dim(&self) -> Dim {
        self.points[0].dim()
    }

    pub fn stage_sample(&self, stage: Stage) -> &FieldSample {
        &self.stage_samples[stage.step][stage.index]
    }

    /// The tail of the trajectory from node `from`, identical to advecting
    /// afresh from `points[from]` on the same grid nodes.
    pub fn restart_at(&self, from: usize) -> Result<Trajectory> {
        let grid = self.grid.sub(from, self.grid.steps)?;
        Ok(Trajectory {
            grid,
            points: self.points[from..].to_vec(),
            node_samples: self.node_samples[from..].to_vec(),
            stage_samples: self.stage_samples[from..].to_vec(),
        })
    }

    /// The head of the trajectory up to node `to`.
    pub fn truncate_at(&self, to: usize) -> Result<Trajectory> {
        let grid = self.grid.sub(0, to)?;
        Ok(Trajectory {
            grid,
            points: self.points[..=to].to_vec(),
            node_samples: self.node_samples[..=to].to_vec(),
            stage_samples: self.stage_samples[..to].to_vec(),
        })
    }
}

/// Advects `x0` through `f` with RK4 on `grid`.
pub fn advect(f: &VelocityField, x0: &Vector, grid: &TimeGrid) -> Result<Trajectory> {
    f.dim().check(x0.dim())?;
    let h = grid.dt();
    let mut x = *x0;
    let mut sample = f.evaluate(&x, grid.node(0))?;
    let mut points = Vec::with_capacity(grid.len());
    let mut node_samples = Vec::with_capacity(grid.len());
    let mut stage_samples = Vec::with_capacity(grid.steps());
    points.push(x);
    node_samples.push(sample);
    for k in 0..grid.steps() {
        let s1 = sample;
        let s2 = f.evaluate(&(x + s1.v * (0.5 * h)), grid.stage_time(k, 1))?;
        let s3 = f.evaluate(&(x + s2.v * (0.5 * h)), grid.stage_time(k, 2))?;
        let s4 = f.evaluate(&(x + s3.v * h), grid.stage_time(k, 3))?;
        x += (s1.v + s2.v * 2.0 + s3.v * 2.0 + s4.v) * (h / 6.0);
        if !x.is_finite() {
            return Err(KinematicsError::SingularPoint { x: x.as_slice().to_vec(), t: grid.node(k + 1) });
        }
        sample = f.evaluate(&x, grid.node(k + 1))?;
        stage_samples.push([s1, s2, s3, s4]);
        points.push(x);
        node_samples.push(sample);
    }
    Ok(Trajectory { grid: *grid, points, node_samples, stage_samples })
}

/// Fundamental matrix of `Ż = G Z` at every node.
#[derive(Debug, Clone)]
pub struct MatrixOdeResult {
    pub grid: TimeGrid,
    pub z: Vec<Mat>,
    pub reprojected: bool,
}

/// Tolerance on `‖sym(G)‖` for generators of rotations.
pub const SKEW_GENERATOR_TOL: f64 = 1e-8;

/// RK4 stage states `Z₁..Z₄` for generators `g` over step `h`.
pub fn rk4_stage_states(z: &Mat, g: &[Mat; 4], h: f64) -> [Mat; 4] {
    let z1 = *z;
    let z2 = *z + g[0] * z1 * (0.5 * h);
    let z3 = *z + g[1] * z2 * (0.5 * h);
    let z4 = *z + g[2] * z3 * h;
    [z1, z2, z3, z4]
}

/// One RK4 step of `Ż = G Z` given the four stage generators.
pub fn rk4_update(z: &Mat, g: &[Mat; 4], h: f64) -> Mat {
    let s = rk4_stage_states(z, g, h);
    let k: Vec<Mat> = (0..4).map(|i| g[i] * s[i]).collect();
    *z + (k[0] + k[1] * 2.0 + k[2] * 2.0 + k[3]) * (h / 6.0)
}

/// Integrates `Ż = G(t) Z`, `Z(τ) = I`, calling `gen` once per RK4 stage.
///
/// With `reproject`, every generator must be skew and each step's result is
/// replaced by its nearest rotation.
pub fn integrate_matrix_ode(
    mut gen: impl FnMut(Stage) -> Result<Mat>,
    grid: &TimeGrid,
    reproject: bool,
) -> Result<MatrixOdeResult> {
    let mut z = Vec::with_capacity(grid.len());
    let mut current: Option<Mat> = None;
    for step in 0..grid.steps() {
        let mut g = [Mat::zeros(Dim::Two); 4];
        for (index, slot) in g.iter_mut().enumerate() {
            let t = grid.stage_time(step, index);
            let m = gen(Stage { step, index, t })?;
            if reproject {
                let residual = sym_part(&m).norm();
                if residual > SKEW_GENERATOR_TOL {
                    return Err(KinematicsError::GeneratorNotSkew { t, residual });
                }
            }
            *slot = m;
        }
        let zk = *current.get_or_insert_with(|| {
            let id = Mat::identity(g[0].dim());
            z.push(id);
            id
        });
        let mut next = rk4_update(&zk, &g, grid.dt());
        if reproject {
            next = nearest_rotation(&next)?;
        }
        if !next.is_finite() {
            return Err(KinematicsError::InvalidInput(format!(
                "matrix ODE diverged at t = {}",
                grid.node(step + 1)
            )));
        }
        z.push(next);
        current = Some(next);
    }
    Ok(MatrixOdeResult { grid: *grid, z, reprojected: reproject })
}

/// Process residual `‖Z_τ^t − Z_s^t Z_τ^s‖_F` of a matrix ODE, with `Z_s^t`
/// integrated afresh from node `s` on the same stage times.
pub fn matrix_process_residual(
    mut gen: impl FnMut(Stage) -> Result<Mat>,
    grid: &TimeGrid,
    s: usize,
    reproject: bool,
) -> Result<f64> {
    let full = integrate_matrix_ode(&mut gen, grid, reproject)?;
    let tail_grid = grid.sub(s, grid.steps())?;
    let tail = integrate_matrix_ode(
        |st: Stage| gen(Stage { step: st.step + s, index: st.index, t: st.t }),
        &tail_grid,
        reproject,
    )?;
    let z_full = full.z.last().expect("non-empty");
    let z_tail = tail.z.last().expect("non-empty");
    Ok((*z_full - *z_tail * full.z[s]).norm())
}

/// Trajectory points and `F_τ^{t_k}` at every node.
#[derive(Debug, Clone)]
pub struct DeformationHistory {
    pub grid: TimeGrid,
    pub points: Vec<Vector>,
    pub f: Vec<Mat>,
}

impl DeformationHistory {
    /// `F_{t_i}^{t_j} = F_τ^{t_j} (F_τ^{t_i})⁻¹`.
    pub fn between(&self, i: usize, j: usize) -> Result<Mat> {
        Ok(self.f[j] * self.f[i].inverse()?)
    }

    pub fn last(&self) -> &Mat {
        self.f.last().expect("a history has at least two nodes")
    }
}

/// Integrates the equation of variations `Ż = ∇v(x(t), t) Z` along `traj`.
pub fn deformation_gradient(traj: &Trajectory) -> Result<DeformationHistory> {
    let res = integrate_matrix_ode(|s| Ok(traj.stage_sample(s).grad_v), &traj.grid, false)?;
    if let Some(f) = res.z.iter().find(|f| f.det() <= 0.0) {
        return Err(KinematicsError::SingularF { det: f.det() });
    }
    Ok(DeformationHistory { grid: traj.grid, points: traj.points.clone(), f: res.z })
}

/// Advects `x0` and integrates its deformation gradient.
pub fn deformation_history(f: &VelocityField, x0: &Vector, grid: &TimeGrid) -> Result<(Trajectory, DeformationHistory)> {
    let traj = advect(f, x0, grid)?;
    let hist = deformation_gradient(&traj)?;
    Ok((traj, hist))
}
