//! Analytic velocity fields and their exact gradients.

use std::fmt;
use std::sync::Arc;

use crate::error::{KinematicsError, Result};
use crate::linalg::{
    axial_unchecked, planar_rotation, rotation_exp, skew_part, sym_part, AxisAngle, Dim, Mat, Vector,
};

type VelocityFn = dyn Fn(&Vector, f64) -> Vector + Send + Sync;
type GradientFn = dyn Fn(&Vector, f64) -> Mat + Send + Sync;

/// User-supplied field. The gradient must be exact; it is never differentiated
/// numerically. Both closures may be called from several threads at once.
#[derive(Clone)]
pub struct CustomField {
    dim: Dim,
    name: String,
    velocity: Arc<VelocityFn>,
    gradient: Arc<GradientFn>,
}

impl CustomField {
    pub fn new(
        dim: Dim,
        name: impl Into<String>,
        velocity: impl Fn(&Vector, f64) -> Vector + Send + Sync + 'static,
        gradient: impl Fn(&Vector, f64) -> Mat + Send + Sync + 'static,
    ) -> CustomField {
        CustomField { dim, name: name.into(), velocity: Arc::new(velocity), gradient: Arc::new(gradient) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomField").field("dim", &self.dim).field("name", &self.name).finish()
    }
}

/// Velocity field `v(x, t)`.
#[derive(Debug, Clone)]
pub enum VelocityField {
    /// `v = (k x₂, 0)`.
    PlanarShear { k: f64 },
    /// `v = α (−x₂, x₁) / |x|²`, singular at the origin.
    IrrotationalVortex { alpha: f64 },
    /// Parallel shear `v = (k x₃, c k x₃, w)`.
    Shear3D { k: f64, c: f64, w: f64 },
    /// Rigid rotation `v = Ω × x`.
    RigidRotation { omega: Vector },
    Custom(CustomField),
}

/// Velocity, its gradient and derived kinematic quantities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub v: Vector,
    pub grad_v: Mat,
    /// Spin tensor, `skew(∇v)`.
    pub w: Mat,
    /// Rate-of-strain tensor, `sym(∇v)`.
    pub d: Mat,
    /// Vorticity as a 3D vector; planar fields report `(0, 0, ω₃)`.
    pub omega: Vector,
}

impl FieldSample {
    /// Builds a sample from velocity and gradient; vorticity is the curl of `grad_v`.
    pub fn from_gradient(v: Vector, grad_v: Mat) -> FieldSample {
        let w = skew_part(&grad_v);
        let omega = axial_unchecked(&w).lift() * 2.0;
        FieldSample { v, grad_v, w, d: sym_part(&grad_v), omega }
    }

    pub fn dim(&self) -> Dim {
        self.grad_v.dim()
    }

    /// Out-of-plane vorticity component.
    pub fn omega3(&self) -> f64 {
        self.omega[2]
    }
}

const ORIGIN_TOL: f64 = 1e-12;

impl VelocityField {
    /// Constant-gradient field `v = G x` (the gradient may be any matrix).
    pub fn linear(g: Mat) -> VelocityField {
        VelocityField::Custom(CustomField::new(g.dim(), "linear", move |x, _| g * *x, move |_, _| g))
    }

    pub fn dim(&self) -> Dim {
        match self {
            VelocityField::PlanarShear { .. } | VelocityField::IrrotationalVortex { .. } => Dim::Two,
            VelocityField::Shear3D { .. } | VelocityField::RigidRotation { .. } => Dim::Three,
            VelocityField::Custom(c) => c.dim,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            VelocityField::PlanarShear { .. } => "planar_shear",
            VelocityField::IrrotationalVortex { .. } => "irrotational_vortex",
            VelocityField::Shear3D { .. } => "shear3d",
            VelocityField::RigidRotation { .. } => "rigid_rotation",
            VelocityField::Custom(c) => &c.name,
        }
    }

    /// Checks parameters: finite values and a 3D rotation vector.
    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            VelocityField::PlanarShear { k } => k.is_finite(),
            VelocityField::IrrotationalVortex { alpha } => alpha.is_finite(),
            VelocityField::Shear3D { k, c, w } => k.is_finite() && c.is_finite() && w.is_finite(),
            VelocityField::RigidRotation { omega } => {
                Dim::Three.check(omega.dim())?;
                omega.is_finite()
            }
            VelocityField::Custom(_) => true,
        };
        if finite {
            Ok(())
        } else {
            Err(KinematicsError::InvalidInput(format!("non-finite parameter for {}", self.name())))
        }
    }

    pub fn evaluate(&self, x: &Vector, t: f64) -> Result<FieldSample> {
        self.dim().check(x.dim())?;
        let (v, g) = match self {
            VelocityField::PlanarShear { k } => {
                (Vector::new2(k * x[1], 0.0), Mat::from_rows2([[0.0, *k], [0.0, 0.0]]))
            }
            VelocityField::IrrotationalVortex { alpha } => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                if r2.sqrt() < ORIGIN_TOL {
                    return Err(KinematicsError::SingularPoint { x: x.as_slice().to_vec(), t });
                }
                let r4 = r2 * r2;
                let diag = 2.0 * alpha * x[0] * x[1] / r4;
                let off = alpha * (x[1] * x[1] - x[0] * x[0]) / r4;
                (
                    Vector::new2(-alpha * x[1] / r2, alpha * x[0] / r2),
                    Mat::from_rows2([[diag, off], [off, -diag]]),
                )
            }
            VelocityField::Shear3D { k, c, w } => (
                Vector::new3(k * x[2], c * k * x[2], *w),
                Mat::from_rows3([[0.0, 0.0, *k], [0.0, 0.0, c * k], [0.0, 0.0, 0.0]]),
            ),
            VelocityField::RigidRotation { omega } => (omega.cross(x), crate::linalg::skew_from(omega)),
            VelocityField::Custom(c) => {
                let v = (c.velocity)(x, t);
                let g = (c.gradient)(x, t);
                if v.dim() != c.dim || g.dim() != c.dim {
                    return Err(KinematicsError::DimensionMismatch {
                        expected: c.dim,
                        found: if v.dim() != c.dim { v.dim() } else { g.dim() },
                    });
                }
                if !v.is_finite() || !g.is_finite() {
                    return Err(KinematicsError::SingularPoint { x: x.as_slice().to_vec(), t });
                }
                (v, g)
            }
        };
        Ok(FieldSample::from_gradient(v, g))
    }

    /// Closed-form flow map value `x(t)` and deformation gradient `F_τ^t` for the
    /// built-in fields.
    pub fn analytic_deformation(&self, x0: &Vector, tau: f64, t: f64) -> Result<(Vector, Mat)> {
        self.dim().check(x0.dim())?;
        let s = t - tau;
        match self {
            VelocityField::PlanarShear { k } => {
                Ok((Vector::new2(x0[0] + k * x0[1] * s, x0[1]), Mat::from_rows2([[1.0, k * s], [0.0, 1.0]])))
            }
            VelocityField::IrrotationalVortex { alpha } => {
                let r2 = x0[0] * x0[0] + x0[1] * x0[1];
                if r2.sqrt() < ORIGIN_TOL {
                    return Err(KinematicsError::SingularPoint { x: x0.as_slice().to_vec(), t: tau });
                }
                // Rigid rotation of each circle at angular speed α/r²; the angle
                // depends on the radius, which produces the shear term.
                let rot = planar_rotation(alpha * s / r2);
                let jx = Vector::new2(-x0[1], x0[0]);
                let shear = Mat::outer(&jx, x0) * (2.0 * alpha * s / (r2 * r2));
                Ok((rot * *x0, rot * (Mat::identity(Dim::Two) - shear)))
            }
            VelocityField::Shear3D { k, c, w } => {
                let lift = k * (x0[2] * s + 0.5 * w * s * s);
                let x = Vector::new3(x0[0] + lift, x0[1] + c * lift, x0[2] + w * s);
                let f = Mat::from_rows3([[1.0, 0.0, k * s], [0.0, 1.0, c * k * s], [0.0, 0.0, 1.0]]);
                Ok((x, f))
            }
            VelocityField::RigidRotation { omega } => {
                let rate = omega.norm();
                let r = if rate == 0.0 {
                    Mat::identity(Dim::Three)
                } else {
                    rotation_exp(&AxisAngle::spatial(*omega, rate * s)?)
                };
                Ok((r * *x0, r))
            }
            VelocityField::Custom(c) => {
                Err(KinematicsError::Unsupported(format!("no closed-form flow for custom field '{}'", c.name)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::skew_from;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn fd_jacobian(f: &VelocityField, x: &Vector, t: f64) -> Mat {
        let h = 1e-5 * (1.0 + x.norm());
        let n = x.dim().n();
        let mut cols = Vec::new();
        for j in 0..n {
            let e = Vector::basis(x.dim(), j) * h;
            let vp = f.evaluate(&(*x + e), t).unwrap().v;
            let vm = f.evaluate(&(*x - e), t).unwrap().v;
            cols.push((vp - vm) * (0.5 / h));
        }
        Mat::from_columns(&cols)
    }

    #[test]
    fn shear_sample() {
        let s = VelocityField::PlanarShear { k: 1.0 }.evaluate(&Vector::new2(0.3, -2.0), 0.0).unwrap();
        assert_eq!(s.omega3(), -1.0);
        assert_eq!(s.d.get(0, 1), 0.5);
        assert_eq!(s.w.get(0, 1), 0.5);
        assert_eq!(s.w, skew_part(&s.grad_v));
    }

    #[test]
    fn vortex_is_irrotational() {
        let f = VelocityField::IrrotationalVortex { alpha: 1.0 };
        let s = f.evaluate(&Vector::new2(1.0, 0.0), 0.0).unwrap();
        assert_eq!(s.omega3(), 0.0);
        assert_eq!(s.w, Mat::zeros(Dim::Two));
        let err = f.evaluate(&Vector::new2(0.0, 1e-13), 0.0).unwrap_err();
        assert!(matches!(err, KinematicsError::SingularPoint { .. }));
    }

    #[test]
    fn rigid_rotation_sample() {
        let f = VelocityField::RigidRotation { omega: Vector::new3(0.0, 0.0, 1.0) };
        let s = f.evaluate(&Vector::new3(0.2, 0.7, -1.0), 3.0).unwrap();
        assert_eq!(s.omega.xyz(), [0.0, 0.0, 2.0]);
        assert_eq!(s.d, Mat::zeros(Dim::Three));
        // W e = ½ ω × e
        let e = Vector::new3(0.3, -0.4, 0.5);
        assert!((s.w * e - s.omega.cross(&e) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn shear3d_curl_from_definition() {
        let s = VelocityField::Shear3D { k: 2.0, c: 0.5, w: 0.1 }.evaluate(&Vector::new3(0.0, 0.0, 1.0), 0.0).unwrap();
        // curl of (k x₃, c k x₃, w) = (−c k, k, 0)
        assert_eq!(s.omega.xyz(), [-1.0, 2.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = VelocityField::PlanarShear { k: 1.0 }.evaluate(&Vector::new3(0.0, 0.0, 0.0), 0.0).unwrap_err();
        assert_eq!(err, KinematicsError::DimensionMismatch { expected: Dim::Two, found: Dim::Three });
    }

    #[test]
    fn analytic_deformation_examples() {
        let (_, f) = VelocityField::PlanarShear { k: 1.0 }.analytic_deformation(&Vector::new2(0.0, 1.0), 0.0, 2.0).unwrap();
        assert_eq!(f, Mat::from_rows2([[1.0, 2.0], [0.0, 1.0]]));
        let (x, f) = VelocityField::IrrotationalVortex { alpha: 1.0 }
            .analytic_deformation(&Vector::new2(1.0, 0.0), 0.0, PI / 2.0)
            .unwrap();
        assert!((f - Mat::from_rows2([[PI, -1.0], [1.0, 0.0]])).max_abs() < 1e-15);
        assert!((x - Vector::new2(0.0, 1.0)).norm() < 1e-15);
        let (_, f) = VelocityField::Shear3D { k: 1.0, c: 2.0, w: 0.3 }
            .analytic_deformation(&Vector::new3(1.0, 2.0, 3.0), 1.5, 1.5)
            .unwrap();
        assert_eq!(f, Mat::identity(Dim::Three));
        let custom = VelocityField::linear(Mat::zeros(Dim::Two));
        assert!(matches!(
            custom.analytic_deformation(&Vector::new2(0.0, 0.0), 0.0, 1.0),
            Err(KinematicsError::Unsupported(_))
        ));
    }

    #[test]
    fn custom_non_finite_output_is_rejected() {
        let f = VelocityField::Custom(CustomField::new(
            Dim::Two,
            "bad",
            |_, _| Vector::new2(f64::NAN, 0.0),
            |_, _| Mat::zeros(Dim::Two),
        ));
        assert!(f.evaluate(&Vector::new2(1.0, 1.0), 0.0).is_err());
    }

    fn point3() -> impl Strategy<Value = Vector> {
        prop::array::uniform3(-3.0..3.0f64).prop_map(|a| Vector::new3(a[0], a[1], a[2]))
    }

    proptest! {
        #[test]
        fn jacobians_match_finite_differences(
            p in point3(), t in -2.0..2.0f64,
            k in -2.0..2.0f64, c in -2.0..2.0f64, w in -1.0..1.0f64,
            om in prop::array::uniform3(-2.0..2.0f64),
        ) {
            let x2 = Vector::new2(p[0], p[1]);
            let fields2 = [VelocityField::PlanarShear { k }, VelocityField::IrrotationalVortex { alpha: k }];
            if x2.norm() > 0.5 {
                for f in &fields2 {
                    let g = f.evaluate(&x2, t).unwrap().grad_v;
                    prop_assert!((g - fd_jacobian(f, &x2, t)).max_abs() < 1e-6);
                }
            }
            let omega = Vector::new3(om[0], om[1], om[2]);
            let fields3 = [VelocityField::Shear3D { k, c, w }, VelocityField::RigidRotation { omega }];
            for f in &fields3 {
                let g = f.evaluate(&p, t).unwrap().grad_v;
                prop_assert!((g - fd_jacobian(f, &p, t)).max_abs() < 1e-6);
            }
        }

        #[test]
        fn builtins_are_incompressible(p in point3(), s in -4.0..4.0f64, k in -2.0..2.0f64, c in -2.0..2.0f64) {
            let x2 = Vector::new2(p[0], p[1]);
            prop_assume!(x2.norm() > 0.1);
            let cases = [
                (VelocityField::PlanarShear { k }, x2),
                (VelocityField::IrrotationalVortex { alpha: k }, x2),
                (VelocityField::Shear3D { k, c, w: 0.5 }, p),
                (VelocityField::RigidRotation { omega: Vector::new3(k, c, 0.3) }, p),
            ];
            for (f, x0) in &cases {
                let (_, def) = f.analytic_deformation(x0, 0.0, s).unwrap();
                prop_assert!((def.det() - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn spin_acts_as_half_vorticity_cross(p in point3(), e in point3(), k in -2.0..2.0f64, c in -2.0..2.0f64) {
            let s = VelocityField::Shear3D { k, c, w: 0.0 }.evaluate(&p, 0.0).unwrap();
            prop_assert!((s.w * e - s.omega.cross(&e) * 0.5).norm() < 1e-12);
            prop_assert!((skew_from(&(s.omega * 0.5)) - s.w).max_abs() < 1e-15);
        }
    }
}
