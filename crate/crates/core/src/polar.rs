//! Classic polar decomposition `F = R U = V R` and its failure to compose in time.

use crate::error::{KinematicsError, Result};
use crate::fields::VelocityField;
use crate::integrate::{advect, deformation_gradient, deformation_history, DeformationHistory, TimeGrid, Trajectory};
use crate::linalg::{check_rotation, planar_angle, planar_rotation, spd_eigen, sym_part, Dim, Mat, Vector};

/// Rotation and right/left stretch of a deformation gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarFactors {
    pub r: Mat,
    pub u: Mat,
    pub v: Mat,
}

const DET_FLOOR: f64 = 1e-14;

/// `U = √(FᵀF)`, `R = F U⁻¹`, `V = R U Rᵀ`.
pub fn polar_decompose(f: &Mat) -> Result<PolarFactors> {
    let det = f.det();
    if !(det > DET_FLOOR) {
        return Err(KinematicsError::SingularF { det });
    }
    let eig = spd_eigen(&(f.transpose() * *f))?;
    let u = eig.map(f64::sqrt);
    let u_inv = eig.map(|l| 1.0 / l.sqrt());
    let r = *f * u_inv;
    let v = sym_part(&(r * u * r.transpose()));
    Ok(PolarFactors { r, u, v })
}

/// Closed-form polar factors of the planar shear `F = [[1, γ], [0, 1]]`,
/// `γ = k · elapsed`. The rotation angle is `−atan(γ/2)`.
pub fn dienes_shear_polar(k: f64, elapsed: f64) -> PolarFactors {
    let gamma = k * elapsed;
    let beta = (0.5 * gamma).atan();
    let (s, c) = beta.sin_cos();
    PolarFactors {
        r: planar_rotation(-beta),
        u: Mat::from_rows2([[c, s], [s, gamma * s + c]]),
        v: Mat::from_rows2([[(1.0 + s * s) / c, s], [s, c]]),
    }
}

/// Signed rotation angle of the polar rotation of a planar `F`.
pub fn polar_angle_2d(f: &Mat) -> Result<f64> {
    Dim::Two.check(f.dim())?;
    Ok(planar_angle(&polar_decompose(f)?.r))
}

/// `‖R_s^t R_τ^s − R_τ^t‖_F` with every factor taken from one integration over
/// `[τ, t]`; `s` must be a node of that grid.
pub fn nonadditivity_residual(
    f: &VelocityField,
    x0: &Vector,
    tau: f64,
    s: f64,
    t: f64,
    steps: usize,
) -> Result<f64> {
    let grid = TimeGrid::new(tau, t, steps)?;
    let is = grid.require_node(s)?;
    let (_, hist) = deformation_history(f, x0, &grid)?;
    let r_total = polar_decompose(hist.last())?.r;
    let r_first = polar_decompose(&hist.f[is])?.r;
    let r_second = polar_decompose(&hist.between(is, grid.steps())?)?.r;
    Ok((r_second * r_first - r_total).norm())
}

/// Incremental polar angle at every node when the reference time is reset
/// every `stride` steps: completed increments plus the one-shot polar angle
/// accrued since the latest reset.
pub fn incremental_polar_series(hist: &DeformationHistory, stride: usize) -> Result<Vec<f64>> {
    Dim::Two.check(hist.f[0].dim())?;
    let steps = hist.grid.steps();
    if stride == 0 || !steps.is_multiple_of(stride) {
        return Err(KinematicsError::InvalidInput(format!(
            "restart stride {stride} does not divide {steps} steps"
        )));
    }
    let mut out = Vec::with_capacity(hist.f.len());
    let mut completed = 0.0;
    let mut base = 0;
    let mut base_inv = Mat::identity(Dim::Two);
    out.push(0.0);
    for k in 1..hist.f.len() {
        let angle = polar_angle_2d(&(hist.f[k] * base_inv))?;
        out.push(completed + angle);
        if k - base == stride {
            completed += angle;
            base = k;
            base_inv = hist.f[k].inverse()?;
        }
    }
    Ok(out)
}

/// Cumulative polar angle of the one-step deformation gradients
/// `F_{t_k}^{t_{k+1}}` over `grid`, one value per node.
pub fn incremental_polar_angle(f: &VelocityField, x0: &Vector, grid: &TimeGrid) -> Result<Vec<f64>> {
    Dim::Two.check(f.dim())?;
    let (_, hist) = deformation_history(f, x0, grid)?;
    incremental_polar_series(&hist, 1)
}

/// Rates `(Ṙ, U̇)` of the polar factors of `F = R U` under `Ḟ = L F`.
///
/// With `A = RᵀLR` and `Ω̂ = RᵀṘ`, symmetry of `U̇ = (A − Ω̂) U` forces
/// `Ω̂ U + U Ω̂ = A U − U Aᵀ`, which is solved in the eigenbasis of `U`.
pub fn polar_rates(r: &Mat, u: &Mat, l: &Mat) -> Result<(Mat, Mat)> {
    let eig = spd_eigen(u)?;
    let q = eig.vectors;
    let a = r.transpose() * *l * *r;
    let rhs = q.transpose() * (a * *u - *u * a.transpose()) * q;
    let lam = eig.values;
    let omega_eig = Mat::from_fn(u.dim(), |i, j| if i == j { 0.0 } else { rhs.get(i, j) / (lam[i] + lam[j]) });
    let omega = q * omega_eig * q.transpose();
    let u_dot = sym_part(&((a - omega) * *u));
    Ok((*r * omega, u_dot))
}

/// Polar factors obtained by integrating the coupled `(R, U)` rate equations.
#[derive(Debug, Clone)]
pub struct PolarOdeHistory {
    pub grid: TimeGrid,
    pub r: Vec<Mat>,
    pub u: Vec<Mat>,
}

/// RK4 on the implicit `(R, U)` system, resolved through [`polar_rates`], with
/// `∇v` sampled along `traj`.
pub fn polar_via_ode(traj: &Trajectory) -> Result<PolarOdeHistory> {
    let grid = traj.grid;
    let h = grid.dt();
    let dim = traj.dim();
    let mut r = Mat::identity(dim);
    let mut u = Mat::identity(dim);
    let mut rs = vec![r];
    let mut us = vec![u];
    for (step, stages) in traj.stage_samples.iter().enumerate() {
        let rate = |rr: &Mat, uu: &Mat, i: usize| {
            polar_rates(rr, uu, &stages[i].grad_v)
                .map_err(|_| KinematicsError::StretchSingular { t: grid.stage_time(step, i) })
        };
        let (kr1, ku1) = rate(&r, &u, 0)?;
        let (kr2, ku2) = rate(&(r + kr1 * (0.5 * h)), &(u + ku1 * (0.5 * h)), 1)?;
        let (kr3, ku3) = rate(&(r + kr2 * (0.5 * h)), &(u + ku2 * (0.5 * h)), 2)?;
        let (kr4, ku4) = rate(&(r + kr3 * h), &(u + ku3 * h), 3)?;
        r += (kr1 + kr2 * 2.0 + kr3 * 2.0 + kr4) * (h / 6.0);
        u += (ku1 + ku2 * 2.0 + ku3 * 2.0 + ku4) * (h / 6.0);
        if spd_eigen(&u).is_err() {
            return Err(KinematicsError::StretchSingular { t: grid.node(step + 1) });
        }
        rs.push(r);
        us.push(u);
    }
    Ok(PolarOdeHistory { grid, r: rs, u: us })
}

/// `ṘRᵀ` seen at the endpoint by observers starting at `τ₁` and `τ₂`; returns
/// the Frobenius norm of the difference. `x0` is the position at `min(τ₁, τ₂)`
/// and the later start time must be a node of the grid.
pub fn polar_rate_memory_gap(
    f: &VelocityField,
    x0: &Vector,
    tau1: f64,
    tau2: f64,
    t: f64,
    steps: usize,
) -> Result<f64> {
    let (early, late) = if tau1 <= tau2 { (tau1, tau2) } else { (tau2, tau1) };
    if !(late < t) {
        return Err(KinematicsError::InvalidInput("start times must precede t".into()));
    }
    let grid = TimeGrid::new(early, t, steps)?;
    let il = grid.require_node(late)?;
    let traj = advect(f, x0, &grid)?;
    let hist = deformation_gradient(&traj)?;
    let l = traj.node_samples.last().expect("non-empty trajectory").grad_v;
    let spin_from = |fm: &Mat| -> Result<Mat> {
        let p = polar_decompose(fm)?;
        let (r_dot, _) = polar_rates(&p.r, &p.u, &l)?;
        Ok(r_dot * p.r.transpose())
    };
    let a = spin_from(hist.last())?;
    let b = spin_from(&hist.between(il, grid.steps())?)?;
    Ok((a - b).norm())
}

/// For `Ω̂ = RΞ`, `Δ̂ = ΞᵀU`: `‖Δ̂ᵀΔ̂ − FᵀF‖_F`. Every member of the family
/// reproduces the right Cauchy–Green tensor.
pub fn nonunique_family_check(f: &Mat, xi: &Mat) -> Result<f64> {
    f.dim().check(xi.dim())?;
    check_rotation(xi, 1e-10)?;
    let p = polar_decompose(f)?;
    let delta = xi.transpose() * p.u;
    Ok((delta.transpose() * delta - f.transpose() * *f).norm())
}

/// One-step finite-difference rates `((R − I)/h, (U − I)/h)` of the polar
/// factors of `F_τ^{τ+h}`.
pub fn short_time_polar_rates(f: &VelocityField, x0: &Vector, tau: f64, h: f64) -> Result<(Mat, Mat)> {
    let (_, hist) = deformation_history(f, x0, &TimeGrid::new(tau, tau + h, 1)?)?;
    let p = polar_decompose(hist.last())?;
    let id = Mat::identity(f.dim());
    Ok(((p.r - id) * (1.0 / h), (p.u - id) * (1.0 / h)))
}
