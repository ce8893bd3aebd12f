//! Euclidean observer changes `x = Q(t) y + b(t)` and the frame-change
//! residuals of the rotation and stretch factors.

use std::fmt;
use std::sync::Arc;

use crate::angles::intrinsic_angle;
use crate::dpd::decompose;
use crate::error::{KinematicsError, Result};
use crate::fields::{CustomField, FieldSample, VelocityField};
use crate::integrate::{advect, TimeGrid};
use crate::linalg::{axial_unchecked, planar_rotation, rotation_exp, singular_values, skew_part, skew_planar, skew_from, AxisAngle, Dim, Mat, Vector};
use crate::mean_rotation::{relative_factors, BodyMeans, BodySampler};

type MatFn = dyn Fn(f64) -> Mat + Send + Sync;
type VecFn = dyn Fn(f64) -> Vector + Send + Sync;

/// Observer change `x = Q(t) y + b(t)` with the rates `Q̇` and `ḃ`.
#[derive(Clone)]
pub struct FrameChange {
    dim: Dim,
    name: String,
    q: Arc<MatFn>,
    qdot: Arc<MatFn>,
    b: Arc<VecFn>,
    bdot: Arc<VecFn>,
}

impl fmt::Debug for FrameChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrameChange").field("dim", &self.dim).field("name", &self.name).finish_non_exhaustive()
    }
}

impl FrameChange {
    pub fn new(
        dim: Dim,
        name: impl Into<String>,
        q: impl Fn(f64) -> Mat + Send + Sync + 'static,
        qdot: impl Fn(f64) -> Mat + Send + Sync + 'static,
        b: impl Fn(f64) -> Vector + Send + Sync + 'static,
        bdot: impl Fn(f64) -> Vector + Send + Sync + 'static,
    ) -> FrameChange {
        FrameChange { dim, name: name.into(), q: Arc::new(q), qdot: Arc::new(qdot), b: Arc::new(b), bdot: Arc::new(bdot) }
    }

    pub fn identity(dim: Dim) -> FrameChange {
        FrameChange::new(dim, "identity", move |_| Mat::identity(dim), move |_| Mat::zeros(dim), move |_| Vector::zeros(dim), move |_| Vector::zeros(dim))
    }

    /// Planar frame turning at constant rate `c`: `Q(t) = Rot(ct)`.
    pub fn planar_spin(c: f64) -> FrameChange {
        FrameChange::new(
            Dim::Two,
            format!("planar_spin({c})"),
            move |t| planar_rotation(c * t),
            move |t| skew_planar(c) * planar_rotation(c * t),
            |_| Vector::zeros(Dim::Two),
            |_| Vector::zeros(Dim::Two),
        )
    }

    /// Frame turning at constant rate `c` about the fixed axis `n`.
    pub fn axis_spin(n: &Vector, c: f64) -> Result<FrameChange> {
        Dim::Three.check(n.dim())?;
        let n = n.normalized().ok_or(KinematicsError::SingularInput)?;
        let spin = skew_from(&(n * c));
        Ok(FrameChange::new(
            Dim::Three,
            format!("axis_spin({c})"),
            move |t| rotation_exp(&AxisAngle::spatial(n, c * t).expect("unit axis")),
            move |t| spin * rotation_exp(&AxisAngle::spatial(n, c * t).expect("unit axis")),
            |_| Vector::zeros(Dim::Three),
            |_| Vector::zeros(Dim::Three),
        ))
    }

    /// Replaces the translation by `b(t) = Σ coeffs[i] tⁱ`.
    pub fn with_polynomial_translation(self, coeffs: Vec<Vector>) -> Result<FrameChange> {
        if let Some(c) = coeffs.iter().find(|c| c.dim() != self.dim) {
            return Err(KinematicsError::DimensionMismatch { expected: self.dim, found: c.dim() });
        }
        let dim = self.dim;
        let c2 = coeffs.clone();
        Ok(FrameChange {
            b: Arc::new(move |t| coeffs.iter().rev().fold(Vector::zeros(dim), |acc, c| acc * t + *c)),
            bdot: Arc::new(move |t| {
                c2.iter().enumerate().skip(1).rev().fold(Vector::zeros(dim), |acc, (i, c)| acc * t + *c * i as f64)
            }),
            ..self
        })
    }

    /// The reverse change `y = Qᵀ(t) x − Qᵀ(t) b(t)`.
    pub fn inverse(&self) -> FrameChange {
        let (q1, q2, q3) = (self.q.clone(), self.q.clone(), self.q.clone());
        let (qd1, qd2) = (self.qdot.clone(), self.qdot.clone());
        let (b1, b2) = (self.b.clone(), self.b.clone());
        let bd = self.bdot.clone();
        FrameChange::new(
            self.dim,
            format!("inverse({})", self.name),
            move |t| q1(t).transpose(),
            move |t| qd1(t).transpose(),
            move |t| -(q2(t).transpose() * b1(t)),
            move |t| -(qd2(t).transpose() * b2(t) + q3(t).transpose() * bd(t)),
        )
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn q(&self, t: f64) -> Mat {
        (self.q)(t)
    }

    pub fn qdot(&self, t: f64) -> Mat {
        (self.qdot)(t)
    }

    pub fn b(&self, t: f64) -> Vector {
        (self.b)(t)
    }

    pub fn bdot(&self, t: f64) -> Vector {
        (self.bdot)(t)
    }

    /// Observer coordinates `y = Qᵀ(t)(x − b(t))`.
    pub fn to_observer(&self, x: &Vector, t: f64) -> Vector {
        self.q(t).transpose() * (*x - self.b(t))
    }

    /// `q̇ = 2·axial(Q̇Qᵀ)`, as a 3D vector.
    pub fn spin_vector(&self, t: f64) -> Vector {
        axial_unchecked(&skew_part(&(self.qdot(t) * self.q(t).transpose()))).lift() * 2.0
    }
}

/// `F̃ = Qᵀ(t) F Q(τ)`.
pub fn transform_defgrad(f: &Mat, fr: &FrameChange, tau: f64, t: f64) -> Result<Mat> {
    fr.dim.check(f.dim())?;
    Ok(fr.q(t).transpose() * *f * fr.q(tau))
}

/// The sample seen by the new observer at the point `x` (original
/// coordinates): `ṽ = Qᵀ(v − Q̇y − ḃ)`, `∇ṽ = Qᵀ∇v Q − QᵀQ̇`.
pub fn transform_sample(s: &FieldSample, fr: &FrameChange, t: f64, x: &Vector) -> Result<FieldSample> {
    fr.dim.check(s.dim())?;
    let (q, qd) = (fr.q(t), fr.qdot(t));
    let qt = q.transpose();
    let y = fr.to_observer(x, t);
    let v = qt * (s.v - qd * y - fr.bdot(t));
    Ok(FieldSample::from_gradient(v, qt * s.grad_v * q - qt * qd))
}

/// The velocity field in observer coordinates, as a custom field.
pub fn transform_field(f: &VelocityField, fr: &FrameChange) -> Result<VelocityField> {
    fr.dim.check(f.dim())?;
    let dim = f.dim();
    let (f1, f2) = (f.clone(), f.clone());
    let (fr1, fr2) = (fr.clone(), fr.clone());
    let nan = move || Vector::from_slice(&vec![f64::NAN; dim.n()]).expect("valid length");
    Ok(VelocityField::Custom(CustomField::new(
        dim,
        format!("{} seen by {}", f.name(), fr.name()),
        move |y, t| {
            let x = fr1.q(t) * *y + fr1.b(t);
            match f1.evaluate(&x, t) {
                Ok(s) => fr1.q(t).transpose() * (s.v - fr1.qdot(t) * *y - fr1.bdot(t)),
                Err(_) => nan(),
            }
        },
        move |y, t| {
            let q = fr2.q(t);
            let x = q * *y + fr2.b(t);
            match f2.evaluate(&x, t) {
                Ok(s) => q.transpose() * s.grad_v * q - q.transpose() * fr2.qdot(t),
                Err(_) => Mat::from_fn(dim, |_, _| f64::NAN),
            }
        },
    )))
}

/// Largest residual of `ω = Q ω̃ + q̇` over the given points at time `t`.
pub fn vorticity_transform_residual(f: &VelocityField, fr: &FrameChange, points: &[Vector], t: f64) -> Result<f64> {
    let g = transform_field(f, fr)?;
    let mut worst: f64 = 0.0;
    for x in points {
        let omega = f.evaluate(x, t)?.omega;
        let tilde = g.evaluate(&fr.to_observer(x, t), t)?.omega;
        let q3 = match fr.dim {
            Dim::Two => Mat::from_fn(Dim::Three, |i, j| if i < 2 && j < 2 { fr.q(t)[(i, j)] } else if i == j { 1.0 } else { 0.0 }),
            Dim::Three => fr.q(t),
        };
        worst = worst.max((omega - (q3 * tilde + fr.spin_vector(t))).norm());
    }
    Ok(worst)
}

/// Frame-change residuals of the dynamic polar factors, the largest over all nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpdObjectivity {
    /// `max ‖Ñ − Qᵀ(t) N Q(t)‖_F`
    pub r_n: f64,
    /// `max ‖M̃ − Qᵀ(τ) M Q(τ)‖_F`
    pub r_m: f64,
    /// `max ‖Õ − Qᵀ(t) O Q(τ)‖_F`
    pub r_o: f64,
    /// Largest singular-value difference between `Ñ` and `N` at the final node.
    pub singular_value_gap: f64,
}

/// Decomposes the motion of `x0` (at `grid.tau()`) in both frames, each
/// integrated from its own velocity field, and compares the factors.
pub fn dpd_objectivity_residuals(f: &VelocityField, x0: &Vector, grid: &TimeGrid, fr: &FrameChange) -> Result<DpdObjectivity> {
    let tau = grid.tau();
    let (_, orig) = decompose(&advect(f, x0, grid)?)?;
    let g = transform_field(f, fr)?;
    let (_, seen) = decompose(&advect(&g, &fr.to_observer(x0, tau), grid)?)?;
    let q_tau = fr.q(tau);
    let mut out = DpdObjectivity { r_n: 0.0, r_m: 0.0, r_o: 0.0, singular_value_gap: 0.0 };
    for k in 0..grid.len() {
        let q_t = fr.q(grid.node(k));
        out.r_n = out.r_n.max((seen.n[k] - q_t.transpose() * orig.n[k] * q_t).norm());
        out.r_m = out.r_m.max((seen.m[k] - q_tau.transpose() * orig.m[k] * q_tau).norm());
        out.r_o = out.r_o.max((seen.o[k] - q_t.transpose() * orig.o[k] * q_tau).norm());
    }
    let last = grid.steps();
    let (a, b) = (singular_values(&orig.n[last]), singular_values(&seen.n[last]));
    out.singular_value_gap = a.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(out)
}

/// `max ‖Φ̃ − Qᵀ(t) Φ Q(t)‖_F` over the nodes, with `Φ̃` integrated from the
/// transformed field and the transformed sampler. Small for planar motion;
/// in 3D the relation generally fails.
pub fn phi_frame_residual(f: &VelocityField, x0: &Vector, grid: &TimeGrid, sampler: &BodySampler, fr: &FrameChange) -> Result<f64> {
    let tau = grid.tau();
    let orig = relative_factors(f, x0, sampler, grid)?;
    let g = transform_field(f, fr)?;
    let seen_sampler = sampler.map_seeds(|x| fr.to_observer(x, tau));
    let seen = relative_factors(&g, &fr.to_observer(x0, tau), &seen_sampler, grid)?;
    Ok((0..grid.len())
        .map(|k| {
            let q = fr.q(grid.node(k));
            (seen.phi[k] - q.transpose() * orig.phi[k] * q).norm()
        })
        .fold(0.0, f64::max))
}

/// [`phi_frame_residual`] restricted to planar motion.
pub fn phi_objectivity_2d(f: &VelocityField, x0: &Vector, grid: &TimeGrid, sampler: &BodySampler, fr: &FrameChange) -> Result<f64> {
    Dim::Two.check(f.dim())?;
    phi_frame_residual(f, x0, grid, sampler, fr)
}

/// `max |ψ − ψ̃|` over the nodes, each frame with its own field and sampler.
pub fn psi_invariance(f: &VelocityField, x0: &Vector, grid: &TimeGrid, sampler: &BodySampler, fr: &FrameChange) -> Result<f64> {
    let tau = grid.tau();
    let means = BodyMeans::compute(f, sampler, grid)?;
    let psi = intrinsic_angle(&advect(f, x0, grid)?, &means.node_omega)?;
    let g = transform_field(f, fr)?;
    let seen_sampler = sampler.map_seeds(|x| fr.to_observer(x, tau));
    let seen_means = BodyMeans::compute(&g, &seen_sampler, grid)?;
    let seen = intrinsic_angle(&advect(&g, &fr.to_observer(x0, tau), grid)?, &seen_means.node_omega)?;
    Ok(psi.value.iter().zip(&seen.value).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}
