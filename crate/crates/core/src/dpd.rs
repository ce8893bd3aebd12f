//! Dynamic polar decomposition `F = O M = N O`.
//!
//! `O` solves `Ȯ = W O` and is a rotational process: it composes exactly over
//! adjacent time intervals. The stretches `M = OᵀF` and `N = FOᵀ` evolve under
//! purely symmetric generators.

use crate::error::{KinematicsError, Result};
use crate::fields::VelocityField;
use crate::integrate::{
    advect, deformation_gradient, integrate_matrix_ode, matrix_process_residual, rk4_stage_states, rk4_update,
    DeformationHistory, MatrixOdeResult, TimeGrid, Trajectory,
};
use crate::linalg::{planar_rotation, singular_values, skew_part, sym_eigen, Dim, Mat, Vector};

/// How the factors were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// `O`, `M` and `N` each integrated from their own ODE.
    OdeIntegrated,
    /// `O` from the planar vorticity integral, `M` and `N` algebraic.
    ClosedForm2D,
    /// `O` integrated, `M = OᵀF` and `N = FOᵀ`.
    AlgebraicFromO,
}

/// Dynamic polar factors at every node.
#[derive(Debug, Clone)]
pub struct DpdFactors {
    pub grid: TimeGrid,
    pub o: Vec<Mat>,
    pub m: Vec<Mat>,
    pub n: Vec<Mat>,
    pub provenance: Provenance,
}

impl DpdFactors {
    /// Largest `‖O M − F‖_F / ‖F‖_F` and `‖N O − F‖_F / ‖F‖_F` over the nodes.
    pub fn reconstruction_residual(&self, hist: &DeformationHistory) -> Result<f64> {
        self.grid.check_same(&hist.grid)?;
        let mut worst: f64 = 0.0;
        for k in 0..self.o.len() {
            let f = hist.f[k];
            let scale = f.norm();
            worst = worst.max((self.o[k] * self.m[k] - f).norm() / scale);
            worst = worst.max((self.n[k] * self.o[k] - f).norm() / scale);
        }
        Ok(worst)
    }
}

/// `O_τ^t` from `Ȯ = W(x(t), t) O` with per-step reprojection onto rotations.
pub fn dynamic_rotation(traj: &Trajectory) -> Result<MatrixOdeResult> {
    integrate_matrix_ode(|s| Ok(traj.stage_sample(s).w), &traj.grid, true)
}

/// `M = OᵀF` and `N = FOᵀ` node by node.
pub fn dynamic_stretch_from_f(hist: &DeformationHistory, o: &MatrixOdeResult) -> Result<(Vec<Mat>, Vec<Mat>)> {
    hist.grid.check_same(&o.grid)?;
    let m = hist.f.iter().zip(&o.z).map(|(f, o)| o.transpose() * *f).collect();
    let n = hist.f.iter().zip(&o.z).map(|(f, o)| *f * o.transpose()).collect();
    Ok((m, n))
}

/// Full decomposition along `traj`: integrated `O`, algebraic `M` and `N`.
pub fn decompose(traj: &Trajectory) -> Result<(DeformationHistory, DpdFactors)> {
    let hist = deformation_gradient(traj)?;
    let o = dynamic_rotation(traj)?;
    let (m, n) = dynamic_stretch_from_f(&hist, &o)?;
    let factors = DpdFactors { grid: traj.grid, o: o.z, m, n, provenance: Provenance::AlgebraicFromO };
    Ok((hist, factors))
}

/// RK4 on `Ṁ = [Oᵀ D(x(t), t) O] M`, advanced jointly with `O`: the stage
/// values of `O` are rebuilt from its node values and the spin samples.
pub fn integrate_m_ode(traj: &Trajectory, o: &MatrixOdeResult) -> Result<Vec<Mat>> {
    traj.grid.check_same(&o.grid)?;
    let h = traj.grid.dt();
    let mut m = Mat::identity(traj.dim());
    let mut out = vec![m];
    for (k, stages) in traj.stage_samples.iter().enumerate() {
        let w = [stages[0].w, stages[1].w, stages[2].w, stages[3].w];
        let os = rk4_stage_states(&o.z[k], &w, h);
        let g = [0, 1, 2, 3].map(|i| os[i].transpose() * stages[i].d * os[i]);
        m = rk4_update(&m, &g, h);
        out.push(m);
    }
    Ok(out)
}

/// `N_τ^{t_end}` for every node `τ` of `grid`, from the transposed stretch
/// equation integrated backward in `τ`:
/// `d/dτ Nᵀ = −[O_τ^t D(x(τ), τ) O_t^τ] Nᵀ`, `N_t^t = I`.
///
/// `x0` is the position at `grid.tau()` and `grid` must end at `t_end`. The
/// backward stage times are nodes of a twice finer forward integration, so
/// every generator uses node values of `x` and `O`.
pub fn integrate_n_ode(f: &VelocityField, x0: &Vector, t_end: f64, grid: &TimeGrid) -> Result<Vec<Mat>> {
    if grid.index_of(t_end) != Some(grid.steps()) {
        return Err(KinematicsError::GridMismatch(format!("grid does not end at t = {t_end}")));
    }
    let fine = grid.refine(2);
    let traj = advect(f, x0, &fine)?;
    let o = dynamic_rotation(&traj)?;
    let o_end = *o.z.last().expect("non-empty");
    // O_τ^t D O_t^τ with O_τ^t = O(t) O(τ)ᵀ
    let gen = |j: usize| {
        let o_tau_t = o_end * o.z[j].transpose();
        -(o_tau_t * traj.node_samples[j].d * o_tau_t.transpose())
    };
    let steps = grid.steps();
    let h = -grid.dt();
    let mut y = Mat::identity(f.dim());
    let mut out = vec![y.transpose()];
    for j in 0..steps {
        let top = 2 * (steps - j);
        let g = [gen(top), gen(top - 1), gen(top - 1), gen(top - 2)];
        y = rk4_update(&y, &g, h);
        out.push(y.transpose());
    }
    out.reverse();
    Ok(out)
}

/// Planar factors from `O = Rot(½∫ω₃ ds)` with the trapezoidal rule on the
/// trajectory nodes.
pub fn closed_form_2d(traj: &Trajectory, hist: &DeformationHistory) -> Result<DpdFactors> {
    Dim::Two.check(traj.dim())?;
    traj.grid.check_same(&hist.grid)?;
    let h = traj.grid.dt();
    let mut angle = 0.0;
    let mut o = vec![Mat::identity(Dim::Two)];
    for k in 0..traj.grid.steps() {
        angle += 0.25 * h * (traj.node_samples[k].omega3() + traj.node_samples[k + 1].omega3());
        o.push(planar_rotation(angle));
    }
    let m = hist.f.iter().zip(&o).map(|(f, o)| o.transpose() * *f).collect();
    let n = hist.f.iter().zip(&o).map(|(f, o)| *f * o.transpose()).collect();
    Ok(DpdFactors { grid: traj.grid, o, m, n, provenance: Provenance::ClosedForm2D })
}

/// All three factors integrated from their own equations.
pub fn decompose_by_odes(f: &VelocityField, x0: &Vector, grid: &TimeGrid) -> Result<DpdFactors> {
    let traj = advect(f, x0, grid)?;
    let o = dynamic_rotation(&traj)?;
    let m = integrate_m_ode(&traj, &o)?;
    let n_end = integrate_n_ode(f, x0, grid.t_end(), grid)?[0];
    // Only the endpoint N_τ^t comes from the backward equation; intermediate
    // nodes have their own end time, so fall back to N = O M Oᵀ there.
    let mut n: Vec<Mat> = o.z.iter().zip(&m).map(|(o, m)| *o * *m * o.transpose()).collect();
    *n.last_mut().expect("non-empty") = n_end;
    Ok(DpdFactors { grid: *grid, o: o.z, m, n, provenance: Provenance::OdeIntegrated })
}

/// `‖O_τ^t − O_s^t O_τ^s‖_F` with `O_s^t` integrated afresh from node `s`.
pub fn process_residual(traj: &Trajectory, s: usize) -> Result<f64> {
    matrix_process_residual(|st| Ok(traj.stage_sample(st).w), &traj.grid, s, true)
}

/// Same functional applied to the polar rotation: `‖R_τ^t − R_s^t R_τ^s‖_F`.
pub fn polar_process_residual(hist: &DeformationHistory, s: usize) -> Result<f64> {
    use crate::polar::polar_decompose;
    let last = hist.grid.steps();
    let r_total = polar_decompose(&hist.f[last])?.r;
    let r_first = polar_decompose(&hist.f[s])?.r;
    let r_second = polar_decompose(&hist.between(s, last)?)?.r;
    Ok((r_total - r_second * r_first).norm())
}

/// Largest `‖skew(Ṁ M⁻¹)‖_F` over interior nodes, `Ṁ` by central differences.
pub fn spin_free_residual(m: &[Mat], grid: &TimeGrid) -> Result<f64> {
    if m.len() < 3 || m.len() != grid.len() {
        return Err(KinematicsError::GridMismatch(format!(
            "need at least 3 stretch values matching the grid, got {} for {} nodes",
            m.len(),
            grid.len()
        )));
    }
    let h = grid.dt();
    let mut worst: f64 = 0.0;
    for k in 1..m.len() - 1 {
        let m_dot = (m[k + 1] - m[k - 1]) * (0.5 / h);
        let inv = m[k].inverse().map_err(|_| KinematicsError::StretchSingular { t: grid.node(k) })?;
        worst = worst.max(skew_part(&(m_dot * inv)).norm());
    }
    Ok(worst)
}

/// Comparison of a dynamic stretch `M` with a polar stretch `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumMatch {
    /// Largest relative gap between the sorted singular values of `M` and the
    /// sorted eigenvalues of `U`.
    pub value_gap: f64,
    /// Largest angle (radians, modulo sign) between right singular vectors of
    /// `M` and eigenvectors of `U`; `None` when the spectrum is degenerate.
    pub axis_angle: Option<f64>,
}

const DEGENERATE_GAP: f64 = 1e-6;

pub fn stretch_spectrum_match(m: &Mat, u: &Mat) -> Result<SpectrumMatch> {
    m.dim().check(u.dim())?;
    if !(m.det() > 0.0) || !(u.det() > 0.0) {
        return Err(KinematicsError::SingularInput);
    }
    let sv = singular_values(m);
    let ue = sym_eigen(u);
    let value_gap = sv
        .iter()
        .zip(ue.values())
        .map(|(a, b)| (a - b).abs() / b.abs())
        .fold(0.0, f64::max);
    let me = sym_eigen(&(m.transpose() * *m));
    let vals = ue.values();
    let degenerate = vals.windows(2).any(|w| (w[1] - w[0]).abs() <= DEGENERATE_GAP * w[1].abs());
    let axis_angle = (!degenerate).then(|| {
        (0..vals.len())
            .map(|i| {
                let a = me.vectors.column(i);
                let b = ue.vectors.column(i);
                let chord = (a - b * a.dot(&b).signum()).norm();
                2.0 * (0.5 * chord).min(1.0).asin()
            })
            .fold(0.0, f64::max)
    });
    Ok(SpectrumMatch { value_gap, axis_angle })
}

/// `‖N_τ^t − (M_t^τ)⁻¹‖_F`, where `M_t^τ` comes from integrating backward from
/// `x(t)` to `τ`.
pub fn inverse_stretch_residual(f: &VelocityField, x0: &Vector, grid: &TimeGrid) -> Result<f64> {
    let traj = advect(f, x0, grid)?;
    let (_, fwd) = decompose(&traj)?;
    let back_grid = TimeGrid::new(grid.t_end(), grid.tau(), grid.steps())?;
    let back = advect(f, traj.points.last().expect("non-empty"), &back_grid)?;
    let (_, bwd) = decompose(&back)?;
    let n = fwd.n.last().expect("non-empty");
    let m_back = bwd.m.last().expect("non-empty");
    Ok((*n - m_back.inverse()?).norm())
}

/// One-step finite-difference rates `((O − I)/h, (M − I)/h)` at `t = τ`.
pub fn short_time_dpd_rates(f: &VelocityField, x0: &Vector, tau: f64, h: f64) -> Result<(Mat, Mat)> {
    let traj = advect(f, x0, &TimeGrid::new(tau, tau + h, 1)?)?;
    let (_, fac) = decompose(&traj)?;
    let id = Mat::identity(f.dim());
    Ok(((fac.o[1] - id) * (1.0 / h), (fac.m[1] - id) * (1.0 / h)))
}
