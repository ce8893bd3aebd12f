//! Body-mean spin and the factorization `O = Φ Θ = Σ Φ` by the relative
//! rotation `Φ`, generated by the deviation of the local spin from its mean.

use crate::error::{KinematicsError, Result};
use crate::fields::VelocityField;
use crate::integrate::{advect, integrate_matrix_ode, rk4_stage_states, rk4_update, MatrixOdeResult, Stage, TimeGrid, Trajectory};
use crate::linalg::{nearest_rotation, Dim, Mat, Vector};
use crate::dpd::dynamic_rotation;

/// Weighted material points standing in for the body at the initial time.
#[derive(Debug, Clone, PartialEq)]
pub struct BodySampler {
    seeds: Vec<Vector>,
    weights: Vec<f64>,
}

impl BodySampler {
    /// Weights are rescaled to sum to one; they must be nonnegative with a
    /// positive sum.
    pub fn new(seeds: Vec<Vector>, weights: Vec<f64>) -> Result<BodySampler> {
        if seeds.is_empty() || seeds.len() != weights.len() {
            return Err(KinematicsError::InvalidInput(format!(
                "{} seeds with {} weights",
                seeds.len(),
                weights.len()
            )));
        }
        let dim = seeds[0].dim();
        if let Some(bad) = seeds.iter().find(|s| s.dim() != dim) {
            return Err(KinematicsError::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) || !total.is_finite() {
            return Err(KinematicsError::InvalidInput("weights must be nonnegative with a positive sum".into()));
        }
        Ok(BodySampler { seeds, weights: weights.iter().map(|w| w / total).collect() })
    }

    pub fn uniform(seeds: Vec<Vector>) -> Result<BodySampler> {
        let n = seeds.len();
        BodySampler::new(seeds, vec![1.0; n])
    }

    /// Cell centres of an `nx × ny` grid over `[x0, x1] × [y0, y1]`.
    pub fn grid_2d(x: [f64; 2], y: [f64; 2], nx: usize, ny: usize) -> Result<BodySampler> {
        let xs = centres(x, nx)?;
        let ys = centres(y, ny)?;
        let seeds = ys.iter().flat_map(|&b| xs.iter().map(move |&a| Vector::new2(a, b))).collect();
        BodySampler::uniform(seeds)
    }

    /// Cell centres of an `n[0] × n[1] × n[2]` grid over a box.
    pub fn grid_3d(lo: [f64; 3], hi: [f64; 3], n: [usize; 3]) -> Result<BodySampler> {
        let axes: Vec<Vec<f64>> = (0..3).map(|i| centres([lo[i], hi[i]], n[i])).collect::<Result<_>>()?;
        let mut seeds = Vec::new();
        for &c in &axes[2] {
            for &b in &axes[1] {
                for &a in &axes[0] {
                    seeds.push(Vector::new3(a, b, c));
                }
            }
        }
        BodySampler::uniform(seeds)
    }

    pub fn seeds(&self) -> &[Vector] {
        &self.seeds
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> Dim {
        self.seeds[0].dim()
    }

    /// Same weights with every seed mapped through `map`.
    pub fn map_seeds(&self, map: impl Fn(&Vector) -> Vector) -> BodySampler {
        BodySampler { seeds: self.seeds.iter().map(map).collect(), weights: self.weights.clone() }
    }

    /// Weighted mean spin and vorticity with the seeds taken as the current
    /// positions at time `t`.
    pub fn mean_spin(&self, f: &VelocityField, t: f64) -> Result<(Mat, Vector)> {
        let mut w = Mat::zeros(f.dim());
        let mut omega = Vector::zeros(Dim::Three);
        for (x, wt) in self.seeds.iter().zip(&self.weights) {
            let s = f.evaluate(x, t)?;
            w += s.w * *wt;
            omega += s.omega * *wt;
        }
        Ok((w, omega))
    }
}

fn centres(range: [f64; 2], n: usize) -> Result<Vec<f64>> {
    if n == 0 || !range[0].is_finite() || !range[1].is_finite() {
        return Err(KinematicsError::InvalidInput("sampler ranges need finite bounds and n ≥ 1".into()));
    }
    let h = (range[1] - range[0]) / n as f64;
    Ok((0..n).map(|i| range[0] + (i as f64 + 0.5) * h).collect())
}

/// Body means of spin and vorticity along a grid, with every seed advected
/// on that grid and sampled at the same RK4 stages as a single trajectory.
#[derive(Debug, Clone)]
pub struct BodyMeans {
    pub grid: TimeGrid,
    /// `stage_w[k][i]`: mean spin at stage `i` of step `k`.
    pub stage_w: Vec<[Mat; 4]>,
    pub node_w: Vec<Mat>,
    /// Mean vorticity at every node, as a 3D vector.
    pub node_omega: Vec<Vector>,
}

impl BodyMeans {
    pub fn compute(f: &VelocityField, sampler: &BodySampler, grid: &TimeGrid) -> Result<BodyMeans> {
        f.dim().check(sampler.dim())?;
        let dim = f.dim();
        let mut stage_w = vec![[Mat::zeros(dim); 4]; grid.steps()];
        let mut node_w = vec![Mat::zeros(dim); grid.len()];
        let mut node_omega = vec![Vector::zeros(Dim::Three); grid.len()];
        let h = grid.dt();
        for (x0, &wt) in sampler.seeds.iter().zip(&sampler.weights) {
            let mut x = *x0;
            let mut s = f.evaluate(&x, grid.node(0))?;
            node_w[0] += s.w * wt;
            node_omega[0] += s.omega * wt;
            for k in 0..grid.steps() {
                let s2 = f.evaluate(&(x + s.v * (0.5 * h)), grid.stage_time(k, 1))?;
                let s3 = f.evaluate(&(x + s2.v * (0.5 * h)), grid.stage_time(k, 2))?;
                let s4 = f.evaluate(&(x + s3.v * h), grid.stage_time(k, 3))?;
                let acc = &mut stage_w[k];
                acc[0] += s.w * wt;
                acc[1] += s2.w * wt;
                acc[2] += s3.w * wt;
                acc[3] += s4.w * wt;
                x += (s.v + s2.v * 2.0 + s3.v * 2.0 + s4.v) * (h / 6.0);
                s = f.evaluate(&x, grid.node(k + 1))?;
                node_w[k + 1] += s.w * wt;
                node_omega[k + 1] += s.omega * wt;
            }
        }
        Ok(BodyMeans { grid: *grid, stage_w, node_w, node_omega })
    }

    pub fn stage_spin(&self, stage: Stage) -> Mat {
        self.stage_w[stage.step][stage.index]
    }

    /// Mean vorticity restricted to nodes `from..` (for restarted integrations).
    pub fn tail(&self, from: usize) -> Result<BodyMeans> {
        Ok(BodyMeans {
            grid: self.grid.sub(from, self.grid.steps())?,
            stage_w: self.stage_w[from..].to_vec(),
            node_w: self.node_w[from..].to_vec(),
            node_omega: self.node_omega[from..].to_vec(),
        })
    }
}

/// `Φ` from `Φ̇ = [W(x(t), t) − W̄(t)] Φ`, with the mean spin supplied per
/// RK4 stage.
pub fn relative_rotation(
    traj: &Trajectory,
    mut mean_spin: impl FnMut(Stage) -> Result<Mat>,
) -> Result<MatrixOdeResult> {
    integrate_matrix_ode(|s| Ok(traj.stage_sample(s).w - mean_spin(s)?), &traj.grid, true)
}

/// `Φ` with the mean spin taken from precomputed body means on the same grid.
pub fn relative_rotation_with(traj: &Trajectory, means: &BodyMeans) -> Result<MatrixOdeResult> {
    traj.grid.check_same(&means.grid)?;
    relative_rotation(traj, |s| Ok(means.stage_spin(s)))
}

/// `Φ`, `Θ = ΦᵀO` and `Σ = OΦᵀ` at every node.
#[derive(Debug, Clone)]
pub struct RelativeFactors {
    pub grid: TimeGrid,
    pub phi: Vec<Mat>,
    pub theta: Vec<Mat>,
    pub sigma: Vec<Mat>,
}

pub fn recover_theta_sigma(o: &MatrixOdeResult, phi: &MatrixOdeResult) -> Result<RelativeFactors> {
    o.grid.check_same(&phi.grid)?;
    let theta = phi.z.iter().zip(&o.z).map(|(p, o)| p.transpose() * *o).collect();
    let sigma = phi.z.iter().zip(&o.z).map(|(p, o)| *o * p.transpose()).collect();
    Ok(RelativeFactors { grid: o.grid, phi: phi.z.clone(), theta, sigma })
}

/// Advects `x0`, integrates `O` and `Φ`, and splits `O = ΦΘ = ΣΦ`.
pub fn relative_factors(f: &VelocityField, x0: &Vector, sampler: &BodySampler, grid: &TimeGrid) -> Result<RelativeFactors> {
    let traj = advect(f, x0, grid)?;
    let means = BodyMeans::compute(f, sampler, grid)?;
    let o = dynamic_rotation(&traj)?;
    let phi = relative_rotation_with(&traj, &means)?;
    recover_theta_sigma(&o, &phi)
}

/// RK4 on `Θ̇ = [Φᵀ W̄(t) Φ] Θ`, advanced jointly with `Φ`.
pub fn theta_ode(traj: &Trajectory, means: &BodyMeans, phi: &MatrixOdeResult) -> Result<Vec<Mat>> {
    traj.grid.check_same(&means.grid)?;
    traj.grid.check_same(&phi.grid)?;
    let h = traj.grid.dt();
    let mut theta = Mat::identity(traj.dim());
    let mut out = vec![theta];
    for (k, stages) in traj.stage_samples.iter().enumerate() {
        let wbar = means.stage_w[k];
        let a = [0, 1, 2, 3].map(|i| stages[i].w - wbar[i]);
        let ps = rk4_stage_states(&phi.z[k], &a, h);
        let g = [0, 1, 2, 3].map(|i| ps[i].transpose() * wbar[i] * ps[i]);
        theta = nearest_rotation(&rk4_update(&theta, &g, h))?;
        out.push(theta);
    }
    Ok(out)
}

/// `Σ_τ^{t_end}` for every node `τ` of `grid` from
/// `d/dτ Σᵀ = [Φ_τ^t W̄(τ) Φ_t^τ] Σᵀ`, integrated backward in `τ` on the
/// nodes of a twice finer forward pass. `x0` is the position at `grid.tau()`.
pub fn sigma_ode(f: &VelocityField, x0: &Vector, sampler: &BodySampler, grid: &TimeGrid) -> Result<Vec<Mat>> {
    let fine = grid.refine(2);
    let traj = advect(f, x0, &fine)?;
    let means = BodyMeans::compute(f, sampler, &fine)?;
    let phi = relative_rotation_with(&traj, &means)?;
    let phi_end = *phi.z.last().expect("non-empty");
    let gen = |j: usize| {
        let p = phi_end * phi.z[j].transpose();
        p * means.node_w[j] * p.transpose()
    };
    let steps = grid.steps();
    let h = -grid.dt();
    let mut y = Mat::identity(f.dim());
    let mut out = vec![y.transpose()];
    for j in 0..steps {
        let top = 2 * (steps - j);
        let g = [gen(top), gen(top - 1), gen(top - 1), gen(top - 2)];
        y = nearest_rotation(&rk4_update(&y, &g, h))?;
        out.push(y.transpose());
    }
    out.reverse();
    Ok(out)
}

/// Process residual of `Φ` on a split at node `s`.
pub fn phi_process_residual(traj: &Trajectory, means: &BodyMeans, s: usize) -> Result<f64> {
    traj.grid.check_same(&means.grid)?;
    crate::integrate::matrix_process_residual(
        |st| Ok(traj.stage_sample(st).w - means.stage_spin(st)),
        &traj.grid,
        s,
        true,
    )
}

/// `‖Θ_τ^t − Θ_s^t Θ_τ^s‖_F`, with `Θ_s^t = (Φ_s^t)ᵀ O_s^t` from integrations
/// restarted at node `s`.
pub fn theta_process_residual(traj: &Trajectory, means: &BodyMeans, s: usize) -> Result<f64> {
    let full_o = dynamic_rotation(traj)?;
    let full_phi = relative_rotation_with(traj, means)?;
    let full = recover_theta_sigma(&full_o, &full_phi)?;
    let tail_traj = traj.restart_at(s)?;
    let tail_means = means.tail(s)?;
    let tail = recover_theta_sigma(&dynamic_rotation(&tail_traj)?, &relative_rotation_with(&tail_traj, &tail_means)?)?;
    let total = full.theta.last().expect("non-empty");
    let second = tail.theta.last().expect("non-empty");
    Ok((*total - *second * full.theta[s]).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::CustomField;
    use crate::linalg::{planar_angle, skew_from};

    /// `v = (k x₂², 0)`: local shear slope `2k x₂`.
    fn parabolic_shear(k: f64) -> VelocityField {
        VelocityField::Custom(CustomField::new(
            Dim::Two,
            "parabolic_shear",
            move |x, _| Vector::new2(k * x[1] * x[1], 0.0),
            move |x, _| Mat::from_rows2([[0.0, 2.0 * k * x[1]], [0.0, 0.0]]),
        ))
    }

    /// Rigid spin about `e₃` plus a shear whose spin axis `e₂` varies with `x₃`.
    fn twisted_field() -> VelocityField {
        VelocityField::Custom(CustomField::new(
            Dim::Three,
            "twisted",
            |x, _| Vector::new3(x[2] * x[2] - x[1], x[0], 0.0),
            |x, _| Mat::from_rows3([[0.0, -1.0, 2.0 * x[2]], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
        ))
    }

    #[test]
    fn mean_spin_examples() {
        let sampler = BodySampler::grid_2d([-1.0, 1.0], [-1.0, 1.0], 16, 16).unwrap();
        assert_eq!(sampler.seeds().len(), 256);
        assert!((sampler.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (_, om) = sampler.mean_spin(&VelocityField::PlanarShear { k: 2.0 }, 0.0).unwrap();
        assert!((om[2] + 2.0).abs() < 1e-12);
        let omega = Vector::new3(0.1, -0.3, 0.7);
        let cube = BodySampler::grid_3d([-1.0; 3], [1.0; 3], [3, 3, 3]).unwrap();
        let (w, om) = cube.mean_spin(&VelocityField::RigidRotation { omega }, 0.0).unwrap();
        assert!((w - skew_from(&omega)).max_abs() < 1e-14);
        assert!((om - omega * 2.0).norm() < 1e-14);
        let ring = BodySampler::grid_2d([0.5, 1.5], [-0.5, 0.5], 4, 4).unwrap();
        let (_, om) = ring.mean_spin(&VelocityField::IrrotationalVortex { alpha: 1.0 }, 0.0).unwrap();
        assert_eq!(om[2], 0.0);
        assert!(BodySampler::new(vec![Vector::new2(0.0, 0.0)], vec![-1.0]).is_err());
    }

    #[test]
    fn rigid_rotation_has_no_relative_rotation() {
        let f = VelocityField::RigidRotation { omega: Vector::new3(0.0, 0.5, 1.0) };
        let sampler = BodySampler::grid_3d([0.0; 3], [2.0; 3], [2, 2, 2]).unwrap();
        let grid = TimeGrid::new(0.0, 2.0, 200).unwrap();
        let rel = relative_factors(&f, &Vector::new3(1.0, 0.0, 0.0), &sampler, &grid).unwrap();
        let traj = advect(&f, &Vector::new3(1.0, 0.0, 0.0), &grid).unwrap();
        let o = dynamic_rotation(&traj).unwrap();
        for k in 0..rel.phi.len() {
            assert!((rel.phi[k] - Mat::identity(Dim::Three)).max_abs() < 1e-12);
            assert!((rel.theta[k] - o.z[k]).max_abs() < 1e-12);
            assert!((rel.sigma[k] - o.z[k]).max_abs() < 1e-12);
        }
    }

    #[test]
    fn relative_angle_for_shear_deviation() {
        // local slope 2k x₂ = 1 at x₂ = 0.5; mean slope over x₂ ∈ {0.5, 1.5} is 2
        let f = parabolic_shear(1.0);
        let sampler = BodySampler::uniform(vec![Vector::new2(0.0, 0.5), Vector::new2(0.0, 1.5)]).unwrap();
        let grid = TimeGrid::new(0.0, 2.0, 2000).unwrap();
        let rel = relative_factors(&f, &Vector::new2(0.0, 0.5), &sampler, &grid).unwrap();
        for k in (0..=2000).step_by(400) {
            let t = grid.node(k);
            assert!((planar_angle(&rel.phi[k]) + 0.5 * (1.0 - 2.0) * t).abs() < 1e-10);
            assert!((planar_angle(&rel.theta[k]) + 0.5 * 2.0 * t).abs() < 1e-10);
        }
    }

    #[test]
    fn single_seed_at_the_particle_gives_trivial_phi() {
        let f = parabolic_shear(0.7);
        let x0 = Vector::new2(0.3, 0.9);
        let sampler = BodySampler::uniform(vec![x0]).unwrap();
        let rel = relative_factors(&f, &x0, &sampler, &TimeGrid::new(0.0, 1.0, 100).unwrap()).unwrap();
        assert!(rel.phi.iter().all(|p| (*p - Mat::identity(Dim::Two)).max_abs() < 1e-14));
    }

    #[test]
    fn factorization_and_ode_cross_checks_in_3d() {
        let f = twisted_field();
        let x0 = Vector::new3(0.3, 0.2, 0.8);
        let sampler = BodySampler::grid_3d([-1.0; 3], [1.0; 3], [4, 4, 4]).unwrap();
        let grid = TimeGrid::new(0.0, 2.0, 2000).unwrap();
        let traj = advect(&f, &x0, &grid).unwrap();
        let means = BodyMeans::compute(&f, &sampler, &grid).unwrap();
        let o = dynamic_rotation(&traj).unwrap();
        let phi = relative_rotation_with(&traj, &means).unwrap();
        let rel = recover_theta_sigma(&o, &phi).unwrap();
        for k in 0..rel.phi.len() {
            for q in [rel.phi[k], rel.theta[k], rel.sigma[k]] {
                assert!(q.orthogonality_residual() < 1e-10 && q.det() > 0.0);
            }
            assert!((rel.phi[k] * rel.theta[k] - o.z[k]).max_abs() < 1e-8);
            assert!((rel.sigma[k] * rel.phi[k] - o.z[k]).max_abs() < 1e-8);
        }
        let theta = theta_ode(&traj, &means, &phi).unwrap();
        for k in 0..theta.len() {
            assert!((theta[k] - rel.theta[k]).max_abs() < 1e-6);
        }
        let sigma = sigma_ode(&f, &x0, &sampler, &grid).unwrap();
        assert!((sigma[0] - *rel.sigma.last().unwrap()).max_abs() < 1e-6);
        assert!(phi_process_residual(&traj, &means, 900).unwrap() < 1e-8);
        // Θ fails the process property once local and mean spin axes differ.
        let theta_res = theta_process_residual(&traj, &means, 900).unwrap();
        assert!(theta_res > 1e-3, "{theta_res}");
    }

    #[test]
    fn theta_composes_in_the_plane() {
        let f = parabolic_shear(1.0);
        let sampler = BodySampler::grid_2d([-1.0, 1.0], [0.0, 2.0], 6, 6).unwrap();
        let grid = TimeGrid::new(0.0, 2.0, 1000).unwrap();
        let traj = advect(&f, &Vector::new2(0.0, 0.5), &grid).unwrap();
        let means = BodyMeans::compute(&f, &sampler, &grid).unwrap();
        assert!(theta_process_residual(&traj, &means, 400).unwrap() < 1e-10);
    }
}
