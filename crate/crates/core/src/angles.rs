//! Rotation angles along a trajectory: dynamic `φ = ½∫ω·g`, relative
//! `ϕ = ½∫(ω − ω̄)·g` and intrinsic `ψ = ½∫|ω − ω̄|`, all by trapezoidal
//! quadrature on the trajectory nodes.

use std::fmt;
use std::sync::Arc;

use crate::error::{KinematicsError, Result};
use crate::fields::VelocityField;
use crate::integrate::{advect, deformation_gradient, TimeGrid, Trajectory};
use crate::linalg::{axial_unchecked, check_rotation, skew_part, Mat, Vector};
use crate::mean_rotation::{BodyMeans, BodySampler};
use crate::polar::polar_angle_2d;

const UNIT_TOL: f64 = 1e-10;

type AxisFn = dyn Fn(&Vector, f64) -> Vector + Send + Sync;

/// Unit axis about which rotation is measured.
#[derive(Clone)]
pub enum AxisField {
    Constant(Vector),
    /// `e₃`, the only axis for planar motion.
    Planar,
    Callable(Arc<AxisFn>),
}

impl fmt::Debug for AxisField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisField::Constant(g) => f.debug_tuple("Constant").field(g).finish(),
            AxisField::Planar => f.write_str("Planar"),
            AxisField::Callable(_) => f.write_str("Callable(..)"),
        }
    }
}

impl AxisField {
    pub fn callable(g: impl Fn(&Vector, f64) -> Vector + Send + Sync + 'static) -> AxisField {
        AxisField::Callable(Arc::new(g))
    }

    /// The axis at `(x, t)` as a 3D unit vector.
    pub fn eval(&self, x: &Vector, t: f64) -> Result<Vector> {
        let g = match self {
            AxisField::Constant(g) => g.lift(),
            AxisField::Planar => Vector::new3(0.0, 0.0, 1.0),
            AxisField::Callable(g) => g(x, t).lift(),
        };
        let norm = g.norm();
        if !((norm - 1.0).abs() <= UNIT_TOL) {
            return Err(KinematicsError::NotUnit { norm });
        }
        Ok(g)
    }
}

/// An angle per node of `grid`, starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSeries {
    pub grid: TimeGrid,
    pub value: Vec<f64>,
}

impl AngleSeries {
    pub fn last(&self) -> f64 {
        *self.value.last().expect("non-empty")
    }

    fn from_integrand(grid: TimeGrid, integrand: &[f64]) -> AngleSeries {
        let h = grid.dt();
        let mut value = Vec::with_capacity(integrand.len());
        let mut acc = 0.0;
        value.push(acc);
        for w in integrand.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            value.push(acc);
        }
        AngleSeries { grid, value }
    }
}

fn check_mean(traj: &Trajectory, mean_vorticity: &[Vector]) -> Result<()> {
    if mean_vorticity.len() != traj.grid.len() {
        return Err(KinematicsError::GridMismatch(format!(
            "{} mean vorticity samples for {} nodes",
            mean_vorticity.len(),
            traj.grid.len()
        )));
    }
    Ok(())
}

/// `φ_τ^t = ½∫ ω·g ds`.
pub fn dynamic_angle(traj: &Trajectory, g: &AxisField) -> Result<AngleSeries> {
    let integrand = traj
        .node_samples
        .iter()
        .enumerate()
        .map(|(k, s)| Ok(0.5 * s.omega.dot(&g.eval(&traj.points[k], traj.grid.node(k))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AngleSeries::from_integrand(traj.grid, &integrand))
}

/// `ϕ_τ^t = ½∫ (ω − ω̄)·g ds`, with `ω̄` given at every node of the trajectory.
pub fn relative_angle(traj: &Trajectory, g: &AxisField, mean_vorticity: &[Vector]) -> Result<AngleSeries> {
    check_mean(traj, mean_vorticity)?;
    let integrand = traj
        .node_samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let gk = g.eval(&traj.points[k], traj.grid.node(k))?;
            Ok(0.5 * (s.omega - mean_vorticity[k].lift()).dot(&gk))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AngleSeries::from_integrand(traj.grid, &integrand))
}

/// `ψ_τ^t = ½∫ |ω − ω̄| ds`.
pub fn intrinsic_angle(traj: &Trajectory, mean_vorticity: &[Vector]) -> Result<AngleSeries> {
    check_mean(traj, mean_vorticity)?;
    let integrand: Vec<f64> = traj
        .node_samples
        .iter()
        .zip(mean_vorticity)
        .map(|(s, m)| 0.5 * (s.omega - m.lift()).norm())
        .collect();
    Ok(AngleSeries::from_integrand(traj.grid, &integrand))
}

/// Angle accumulated by a rotation history about `g`: `∫ q̇·g ds` where
/// `Q̇Qᵀ = [q̇ ×]`, with `Q̇` from second-order finite differences on the nodes.
pub fn angle_from_rotation_history(q: &[Mat], traj: &Trajectory, g: &AxisField) -> Result<AngleSeries> {
    let grid = traj.grid;
    if q.len() != grid.len() {
        return Err(KinematicsError::GridMismatch(format!("{} rotations for {} nodes", q.len(), grid.len())));
    }
    for r in q {
        check_rotation(r, 1e-8)?;
    }
    let n = q.len();
    if n < 3 {
        return Err(KinematicsError::InvalidInput("rotation history needs at least three nodes".into()));
    }
    let h = grid.dt();
    let derivative = |k: usize| -> Mat {
        if k == 0 {
            (q[0] * -3.0 + q[1] * 4.0 - q[2]) * (0.5 / h)
        } else if k == n - 1 {
            (q[n - 1] * 3.0 - q[n - 2] * 4.0 + q[n - 3]) * (0.5 / h)
        } else {
            (q[k + 1] - q[k - 1]) * (0.5 / h)
        }
    };
    let integrand = (0..n)
        .map(|k| {
            let rate = axial_unchecked(&skew_part(&(derivative(k) * q[k].transpose()))).lift();
            Ok(rate.dot(&g.eval(&traj.points[k], grid.node(k))?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AngleSeries::from_integrand(grid, &integrand))
}

/// Which angle an additivity check is applied to.
#[derive(Debug, Clone)]
pub enum AngleKind {
    Dynamic(AxisField),
    Relative(AxisField, BodySampler),
    Intrinsic(BodySampler),
    /// Planar polar rotation angle of `F_τ^t`, taken in one shot.
    PolarOneShot,
}

/// `|α_τ^t − α_σ^t − α_τ^σ|` with each angle computed on its own restarted
/// trajectory over the shared nodes of `grid`; `x0` is the position at `τ`.
pub fn additivity_residual(kind: &AngleKind, f: &VelocityField, x0: &Vector, grid: &TimeGrid, sigma: f64) -> Result<f64> {
    let s = grid.require_node(sigma)?;
    let full = advect(f, x0, grid)?;
    let tail = full.restart_at(s)?;
    let head = full.truncate_at(s)?;
    let means = match kind {
        AngleKind::Relative(_, sampler) | AngleKind::Intrinsic(sampler) => {
            Some(BodyMeans::compute(f, sampler, grid)?.node_omega)
        }
        _ => None,
    };
    let angle = |traj: &Trajectory, offset: usize| -> Result<f64> {
        let mean = means.as_ref().map(|m| &m[offset..offset + traj.grid.len()]);
        Ok(match kind {
            AngleKind::Dynamic(g) => dynamic_angle(traj, g)?.last(),
            AngleKind::Relative(g, _) => relative_angle(traj, g, mean.expect("means"))?.last(),
            AngleKind::Intrinsic(_) => intrinsic_angle(traj, mean.expect("means"))?.last(),
            AngleKind::PolarOneShot => polar_angle_2d(deformation_gradient(traj)?.last())?,
        })
    };
    Ok((angle(&full, 0)? - angle(&tail, s)? - angle(&head, 0)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpd::dynamic_rotation;
    use crate::fields::CustomField;
    use crate::linalg::Dim;
    use crate::mean_rotation::relative_rotation_with;
    use proptest::prelude::*;

    fn parabolic_shear(k: f64) -> VelocityField {
        VelocityField::Custom(CustomField::new(
            Dim::Two,
            "parabolic_shear",
            move |x, _| Vector::new2(k * x[1] * x[1], 0.0),
            move |x, _| Mat::from_rows2([[0.0, 2.0 * k * x[1]], [0.0, 0.0]]),
        ))
    }

    #[test]
    fn dynamic_angle_examples() {
        let grid = TimeGrid::new(0.0, 2.0, 2000).unwrap();
        let shear = advect(&VelocityField::PlanarShear { k: 1.0 }, &Vector::new2(0.0, 0.0), &grid).unwrap();
        assert!((dynamic_angle(&shear, &AxisField::Planar).unwrap().last() + 1.0).abs() < 1e-12);
        let vortex = advect(&VelocityField::IrrotationalVortex { alpha: 1.0 }, &Vector::new2(1.0, 0.0), &grid).unwrap();
        assert!(dynamic_angle(&vortex, &AxisField::Planar).unwrap().value.iter().all(|a| a.abs() < 1e-12));
        let grid1 = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let rigid = advect(
            &VelocityField::RigidRotation { omega: Vector::new3(0.0, 0.0, 1.0) },
            &Vector::new3(1.0, 0.0, 0.0),
            &grid1,
        )
        .unwrap();
        let g = AxisField::Constant(Vector::new3(0.0, 0.0, 1.0));
        assert!((dynamic_angle(&rigid, &g).unwrap().last() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_unit_axis_is_rejected() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let traj = advect(&VelocityField::PlanarShear { k: 1.0 }, &Vector::new2(0.0, 0.0), &grid).unwrap();
        let g = AxisField::Constant(Vector::new3(0.0, 0.0, 1.1));
        assert!(matches!(dynamic_angle(&traj, &g), Err(KinematicsError::NotUnit { .. })));
    }

    #[test]
    fn relative_and_intrinsic_for_sheared_layers() {
        let f = parabolic_shear(1.0);
        let sampler = BodySampler::uniform(vec![Vector::new2(0.0, 0.5), Vector::new2(0.0, 1.5)]).unwrap();
        let grid = TimeGrid::new(0.0, 2.0, 200).unwrap();
        let traj = advect(&f, &Vector::new2(0.0, 0.5), &grid).unwrap();
        let means = BodyMeans::compute(&f, &sampler, &grid).unwrap();
        let rel = relative_angle(&traj, &AxisField::Planar, &means.node_omega).unwrap();
        let psi = intrinsic_angle(&traj, &means.node_omega).unwrap();
        // local slope 1, mean slope 2
        assert!((rel.last() + 0.5 * (1.0 - 2.0) * 2.0).abs() < 1e-12);
        assert!((psi.last() - 0.5 * 1.0 * 2.0).abs() < 1e-12);
        // uniform vorticity: no relative rotation
        let shear = VelocityField::PlanarShear { k: 1.3 };
        let sq = BodySampler::grid_2d([-1.0, 1.0], [-1.0, 1.0], 4, 4).unwrap();
        let traj = advect(&shear, &Vector::new2(0.2, 0.1), &grid).unwrap();
        let means = BodyMeans::compute(&shear, &sq, &grid).unwrap();
        assert!(relative_angle(&traj, &AxisField::Planar, &means.node_omega).unwrap().last().abs() < 1e-14);
        assert!(relative_angle(&traj, &AxisField::Planar, &means.node_omega[1..]).is_err());
    }

    #[test]
    fn shear3d_intrinsic_angle() {
        let (k, c) = (1.0, 0.5);
        let f = VelocityField::Shear3D { k, c, w: 0.0 };
        let sampler = BodySampler::uniform(vec![Vector::new3(0.0, 0.0, 0.0)]).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let traj = advect(&f, &Vector::new3(0.0, 0.0, 0.0), &grid).unwrap();
        let zero = vec![Vector::zeros(Dim::Three); grid.len()];
        let psi = intrinsic_angle(&traj, &zero).unwrap();
        assert!((psi.last() - 0.5 * (c * c + 1.0f64).sqrt() * k).abs() < 1e-12);
        let means = BodyMeans::compute(&f, &sampler, &grid).unwrap();
        assert!(intrinsic_angle(&traj, &means.node_omega).unwrap().last().abs() < 1e-14);
    }

    #[test]
    fn rotation_history_oracle_matches_vorticity_integrals() {
        let grid = TimeGrid::new(0.0, 4.0, 4000).unwrap();
        let traj = advect(&VelocityField::PlanarShear { k: 1.0 }, &Vector::new2(0.0, 0.0), &grid).unwrap();
        let o = dynamic_rotation(&traj).unwrap();
        let oracle = angle_from_rotation_history(&o.z, &traj, &AxisField::Planar).unwrap();
        let phi = dynamic_angle(&traj, &AxisField::Planar).unwrap();
        for (a, b) in oracle.value.iter().zip(&phi.value) {
            assert!((a - b).abs() < 1e-4);
        }
        let constant = vec![o.z[100]; grid.len()];
        assert!(angle_from_rotation_history(&constant, &traj, &AxisField::Planar).unwrap().value.iter().all(|a| a.abs() < 1e-12));

        let f = parabolic_shear(1.0);
        let sampler = BodySampler::grid_2d([-1.0, 1.0], [0.0, 2.0], 4, 4).unwrap();
        let traj = advect(&f, &Vector::new2(0.0, 0.3), &grid).unwrap();
        let means = BodyMeans::compute(&f, &sampler, &grid).unwrap();
        let phi_rot = relative_rotation_with(&traj, &means).unwrap();
        let oracle = angle_from_rotation_history(&phi_rot.z, &traj, &AxisField::Planar).unwrap();
        let rel = relative_angle(&traj, &AxisField::Planar, &means.node_omega).unwrap();
        assert!((oracle.last() - rel.last()).abs() < 1e-4);
    }

    #[test]
    fn rotation_history_oracle_in_3d() {
        let f = VelocityField::Shear3D { k: 1.0, c: 1.0, w: 0.3 };
        let grid = TimeGrid::new(0.0, 2.0, 2000).unwrap();
        let traj = advect(&f, &Vector::new3(0.1, 0.2, 0.3), &grid).unwrap();
        let o = dynamic_rotation(&traj).unwrap();
        for g in [Vector::new3(1.0, 0.0, 0.0), Vector::new3(0.0, 1.0, 0.0), Vector::new3(0.6, 0.0, 0.8)] {
            let g = AxisField::Constant(g);
            let oracle = angle_from_rotation_history(&o.z, &traj, &g).unwrap();
            assert!((oracle.last() - dynamic_angle(&traj, &g).unwrap().last()).abs() < 1e-4);
        }
        let bad = vec![Mat::identity(Dim::Three) * 2.0; grid.len()];
        assert!(matches!(
            angle_from_rotation_history(&bad, &traj, &AxisField::Planar),
            Err(KinematicsError::NotRotation { .. })
        ));
    }

    #[test]
    fn polar_angle_is_not_additive() {
        let grid = TimeGrid::new(0.0, 2.0, 200).unwrap();
        let f = VelocityField::PlanarShear { k: 1.0 };
        let r = additivity_residual(&AngleKind::PolarOneShot, &f, &Vector::new2(0.0, 0.0), &grid, 1.0).unwrap();
        let expected = (-(1.0f64).atan() + 2.0 * 0.5f64.atan()).abs();
        assert!((r - expected).abs() < 1e-6, "{r}");
        assert!(matches!(
            additivity_residual(&AngleKind::Dynamic(AxisField::Planar), &f, &Vector::new2(0.0, 0.0), &grid, 1.005),
            Err(KinematicsError::NodeMismatch { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn angles_are_additive_and_psi_dominates(k in -2.0..2.0f64, y0 in -1.0..1.0f64, split in 1usize..59) {
            let f = parabolic_shear(k);
            let grid = TimeGrid::new(0.0, 1.5, 60).unwrap();
            let x0 = Vector::new2(0.1, y0);
            let sampler = BodySampler::grid_2d([-1.0, 1.0], [-1.0, 1.0], 3, 3).unwrap();
            let sigma = grid.node(split);
            for kind in [
                AngleKind::Dynamic(AxisField::Planar),
                AngleKind::Relative(AxisField::Planar, sampler.clone()),
                AngleKind::Intrinsic(sampler.clone()),
            ] {
                prop_assert!(additivity_residual(&kind, &f, &x0, &grid, sigma).unwrap() < 1e-12);
            }
            let traj = advect(&f, &x0, &grid).unwrap();
            let means = BodyMeans::compute(&f, &sampler, &grid).unwrap();
            let rel = relative_angle(&traj, &AxisField::Planar, &means.node_omega).unwrap();
            let psi = intrinsic_angle(&traj, &means.node_omega).unwrap();
            for k in 0..grid.len() {
                prop_assert!(psi.value[k] + 1e-14 >= rel.value[k].abs());
                if k > 0 {
                    prop_assert!(psi.value[k] >= psi.value[k - 1]);
                }
            }
        }
    }
}
