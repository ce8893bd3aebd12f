//! Material fiber rotation: fiber rates, the minimal angular velocity of a
//! fiber, and its average over fiber directions.

use std::f64::consts::PI;

use crate::error::{KinematicsError, Result};
use crate::fields::FieldSample;
use crate::linalg::{sym_eigen, Dim, Vector};

const UNIT_TOL: f64 = 1e-10;
const ORTHO_TOL: f64 = 1e-8;

/// `ė = [W + D − ⟨e, De⟩ I] e` for a unit fiber `e`.
pub fn fiber_rate(sample: &FieldSample, e: &Vector) -> Result<Vector> {
    sample.dim().check(e.dim())?;
    let norm = e.norm();
    if !((norm - 1.0).abs() <= UNIT_TOL) {
        return Err(KinematicsError::NotUnit { norm });
    }
    let de = sample.d * *e;
    Ok(sample.w * *e + de - *e * e.dot(&de))
}

/// Smallest angular velocity turning `e` at rate `ė`: `e × ė`, as a 3D vector.
pub fn nu_min(e: &Vector, edot: &Vector) -> Result<Vector> {
    e.dim().check(edot.dim())?;
    let dot = e.dot(edot);
    if !(dot.abs() <= ORTHO_TOL) {
        return Err(KinematicsError::NotOrthogonal { dot });
    }
    Ok(e.lift().cross(&edot.lift()))
}

/// Weighted unit directions on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    nodes: Vec<Vector>,
    weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Uniform surface-area measure: Gauss–Legendre in `cos ψ` times a
    /// uniform rule in the azimuth, about the `e₃` pole.
    pub fn area(n_psi: usize, n_phi: usize) -> Result<SphereQuadrature> {
        let (x, w) = gauss_legendre(n_psi)?;
        let frame = PoleFrame::new(&Vector::new3(0.0, 0.0, 1.0));
        let (mut nodes, mut weights) = (Vec::new(), Vec::new());
        for (xi, wi) in x.iter().zip(&w) {
            let (cos_psi, sin_psi) = (*xi, (1.0 - xi * xi).max(0.0).sqrt());
            push_ring(&frame, cos_psi, sin_psi, 0.5 * wi, n_phi, &mut nodes, &mut weights)?;
        }
        Ok(SphereQuadrature { nodes, weights })
    }

    /// Measure uniform in the polar angle `ψ ∈ [0, π]` from `pole` and in
    /// the azimuth, i.e. `(1/2π²)∫∫ dψ dφ`. Gauss–Legendre in `ψ`.
    pub fn polar_angle(n_psi: usize, n_phi: usize, pole: &Vector) -> Result<SphereQuadrature> {
        let pole = pole.lift().normalized().ok_or(KinematicsError::SingularInput)?;
        let (x, w) = gauss_legendre(n_psi)?;
        let frame = PoleFrame::new(&pole);
        let (mut nodes, mut weights) = (Vec::new(), Vec::new());
        for (xi, wi) in x.iter().zip(&w) {
            let psi = 0.5 * PI * (1.0 + xi);
            push_ring(&frame, psi.cos(), psi.sin(), 0.5 * wi, n_phi, &mut nodes, &mut weights)?;
        }
        Ok(SphereQuadrature { nodes, weights })
    }

    /// `n` directions uniform in area, drawn from [`Lcg64`] seeded with `seed`.
    pub fn monte_carlo(n: usize, seed: u64) -> Result<SphereQuadrature> {
        if n == 0 {
            return Err(KinematicsError::InvalidInput("Monte Carlo needs at least one sample".into()));
        }
        let mut rng = Lcg64::new(seed);
        let nodes = (0..n)
            .map(|_| {
                let z = 2.0 * rng.next_f64() - 1.0;
                let phi = 2.0 * PI * rng.next_f64();
                let r = (1.0 - z * z).max(0.0).sqrt();
                Vector::new3(r * phi.cos(), r * phi.sin(), z)
            })
            .collect();
        Ok(SphereQuadrature { nodes, weights: vec![1.0 / n as f64; n] })
    }

    pub fn nodes(&self) -> &[Vector] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean<F: Fn(&Vector) -> Result<Vector>>(&self, f: F) -> Result<Vector> {
        let mut acc = Vector::zeros(Dim::Three);
        for (e, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(e)? * *w;
        }
        Ok(acc)
    }
}

struct PoleFrame {
    n: Vector,
    a: Vector,
    b: Vector,
}

impl PoleFrame {
    fn new(n: &Vector) -> PoleFrame {
        let [x, y, z] = n.xyz();
        let helper = if x.abs() <= y.abs() && x.abs() <= z.abs() {
            Vector::new3(1.0, 0.0, 0.0)
        } else if y.abs() <= z.abs() {
            Vector::new3(0.0, 1.0, 0.0)
        } else {
            Vector::new3(0.0, 0.0, 1.0)
        };
        let a = n.cross(&helper).normalized().expect("helper is not parallel to the pole");
        PoleFrame { n: *n, a, b: n.cross(&a) }
    }
}

fn push_ring(
    frame: &PoleFrame,
    cos_psi: f64,
    sin_psi: f64,
    weight: f64,
    n_phi: usize,
    nodes: &mut Vec<Vector>,
    weights: &mut Vec<f64>,
) -> Result<()> {
    if n_phi == 0 {
        return Err(KinematicsError::InvalidInput("azimuthal rule needs at least one node".into()));
    }
    for j in 0..n_phi {
        let phi = 2.0 * PI * j as f64 / n_phi as f64;
        nodes.push(frame.n * cos_psi + (frame.a * phi.cos() + frame.b * phi.sin()) * sin_psi);
        weights.push(weight / n_phi as f64);
    }
    Ok(())
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(KinematicsError::InvalidInput("Gauss–Legendre rule needs at least one node".into()));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let step = pn / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    Ok((x, w))
}

/// 64-bit linear congruential generator `s ← 6364136223846793005·s +
/// 1442695040888963407 (mod 2⁶⁴)`; outputs use the top 53 bits.
#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Lcg64 {
        Lcg64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.state
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// `ν = 2⟨e × ė⟩` over the directions of `quad`.
pub fn fiber_averaged_angular_velocity(sample: &FieldSample, quad: &SphereQuadrature) -> Result<Vector> {
    Dim::Three.check(sample.dim())?;
    Ok(quad.mean(|e| nu_min(e, &fiber_rate(sample, e)?))? * 2.0)
}

/// Pole for the polar-angle measure: the vorticity direction, or the
/// eigenvector of the largest strain eigenvalue when the vorticity vanishes.
pub fn default_pole(sample: &FieldSample) -> Vector {
    if let Some(n) = sample.omega.normalized() {
        if sample.omega.norm() > 1e-12 {
            return n;
        }
    }
    sym_eigen(&sample.d).vectors.column(2)
}

/// [`fiber_averaged_angular_velocity`] on the polar-angle measure about
/// [`default_pole`], Gauss–Legendre `n_psi × n_phi`.
pub fn fiber_average_polar(sample: &FieldSample, n_psi: usize, n_phi: usize) -> Result<Vector> {
    Dim::Three.check(sample.dim())?;
    fiber_averaged_angular_velocity(sample, &SphereQuadrature::polar_angle(n_psi, n_phi, &default_pole(sample))?)
}

/// Mean of `e × ė` (the `e₃` component) over `n` fibers equally spaced on the
/// unit circle, for planar motion.
pub fn circle_averaged_angular_velocity(sample: &FieldSample, n: usize) -> Result<f64> {
    Dim::Two.check(sample.dim())?;
    if n == 0 {
        return Err(KinematicsError::InvalidInput("circle rule needs at least one node".into()));
    }
    let mut acc = 0.0;
    for j in 0..n {
        let theta = 2.0 * PI * j as f64 / n as f64;
        let e = Vector::new2(theta.cos(), theta.sin());
        acc += nu_min(&e, &fiber_rate(sample, &e)?)?[2];
    }
    Ok(acc / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{skew_from, sym_part, Mat};
    use proptest::prelude::*;

    fn sample3(w: &Vector, d: &Mat) -> FieldSample {
        FieldSample::from_gradient(Vector::zeros(Dim::Three), *d + skew_from(w))
    }

    fn random_sym(rng: &mut Lcg64) -> Mat {
        let a = Mat::from_fn(Dim::Three, |_, _| 2.0 * rng.next_f64() - 1.0);
        sym_part(&a)
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(24).unwrap();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        for p in 0..=47 {
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - exact).abs() < 1e-13, "degree {p}");
        }
        let (x1, w1) = gauss_legendre(1).unwrap();
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn quadratures_are_normalized_unit_rules() {
        let pole = Vector::new3(0.3, -0.4, 0.8);
        for q in [
            SphereQuadrature::area(24, 48).unwrap(),
            SphereQuadrature::polar_angle(24, 48, &pole).unwrap(),
            SphereQuadrature::monte_carlo(500, 7).unwrap(),
        ] {
            assert!((q.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(q.nodes().iter().all(|e| (e.norm() - 1.0).abs() < 1e-12));
        }
        assert_eq!(SphereQuadrature::monte_carlo(10, 3).unwrap(), SphereQuadrature::monte_carlo(10, 3).unwrap());
        assert_ne!(SphereQuadrature::monte_carlo(10, 3).unwrap(), SphereQuadrature::monte_carlo(10, 4).unwrap());
    }

    #[test]
    fn lcg_sequence_is_fixed() {
        let mut rng = Lcg64::new(0);
        assert_eq!(rng.next_u64(), 1442695040888963407);
        assert_eq!(rng.next_u64(), 1442695040888963407u64.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407));
    }

    #[test]
    fn fiber_rate_examples() {
        let omega = Vector::new3(0.2, -1.0, 0.5);
        let rigid = sample3(&(omega * 0.5), &Mat::zeros(Dim::Three));
        let e = Vector::new3(0.6, 0.0, 0.8);
        assert!((fiber_rate(&rigid, &e).unwrap() - (omega * 0.5).cross(&e)).norm() < 1e-15);
        let d = Mat::diag(&[1.0, -0.3, -0.7]).unwrap();
        let strain = sample3(&Vector::zeros(Dim::Three), &d);
        assert!(fiber_rate(&strain, &Vector::new3(0.0, 1.0, 0.0)).unwrap().norm() < 1e-15);
        assert!(matches!(fiber_rate(&strain, &Vector::new3(0.0, 1.1, 0.0)), Err(KinematicsError::NotUnit { .. })));
        // vertical fiber in unit shear turns at unit rate, clockwise
        let shear = FieldSample::from_gradient(Vector::zeros(Dim::Two), Mat::from_rows2([[0.0, 1.0], [0.0, 0.0]]));
        let e2 = Vector::new2(0.0, 1.0);
        let nu = nu_min(&e2, &fiber_rate(&shear, &e2).unwrap()).unwrap();
        assert!((nu - Vector::new3(0.0, 0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn nu_min_examples() {
        let e = Vector::new3(1.0, 0.0, 0.0);
        assert_eq!(nu_min(&e, &Vector::zeros(Dim::Three)).unwrap().norm(), 0.0);
        let omega = Vector::new3(0.0, 0.0, 2.0);
        let rigid = sample3(&(omega * 0.5), &Mat::zeros(Dim::Three));
        let nu = nu_min(&e, &fiber_rate(&rigid, &e).unwrap()).unwrap();
        assert!((nu - omega * 0.5).norm() < 1e-15);
        for psi in [0.1f64, 0.7, 1.3, 2.9] {
            let e = Vector::new3(psi.sin(), 0.0, psi.cos());
            let nu = nu_min(&e, &fiber_rate(&rigid, &e).unwrap()).unwrap();
            assert!((nu.norm() - psi.sin()).abs() < 1e-14);
        }
        assert!(matches!(nu_min(&e, &Vector::new3(1e-6, 1.0, 0.0)), Err(KinematicsError::NotOrthogonal { .. })));
    }

    #[test]
    fn strain_part_averages_out_on_the_area_measure() {
        let quad = SphereQuadrature::area(24, 48).unwrap();
        let mut rng = Lcg64::new(11);
        for _ in 0..100 {
            let d = random_sym(&mut rng);
            let avg = quad.mean(|e| Ok(e.cross(&(d * *e)))).unwrap();
            assert!(avg.norm() < 1e-8);
        }
    }

    #[test]
    fn measures_differ_on_the_rigid_part() {
        let omega = Vector::new3(0.3, 0.4, -1.2);
        let rigid = sample3(&(omega * 0.5), &Mat::zeros(Dim::Three));
        let area = fiber_averaged_angular_velocity(&rigid, &SphereQuadrature::area(24, 48).unwrap()).unwrap();
        assert!((area - omega * (2.0 / 3.0)).norm() < 1e-12);
        let polar = fiber_average_polar(&rigid, 24, 48).unwrap();
        assert!((polar - omega * 0.5).norm() < 1e-12);
        let mc = fiber_averaged_angular_velocity(&rigid, &SphereQuadrature::monte_carlo(20000, 5).unwrap()).unwrap();
        assert!((mc - omega * (2.0 / 3.0)).norm() < 3.0 * omega.norm() / (20000f64).sqrt());
    }

    #[test]
    fn pure_strain_averages_to_zero() {
        let d = Mat::diag(&[0.8, -0.5, -0.3]).unwrap();
        let s = sample3(&Vector::zeros(Dim::Three), &d);
        assert!(fiber_average_polar(&s, 24, 48).unwrap().norm() < 1e-12);
        assert!(fiber_averaged_angular_velocity(&s, &SphereQuadrature::area(24, 48).unwrap()).unwrap().norm() < 1e-12);
    }

    #[test]
    fn polar_measure_with_vorticity_pole_leaves_a_strain_term() {
        // With the pole n along ω the polar-angle average is ½ω + ½ n × Dn.
        let mut rng = Lcg64::new(3);
        for _ in 0..10 {
            let d = random_sym(&mut rng);
            let omega = Vector::new3(rng.next_f64() - 0.5, rng.next_f64() - 0.5, rng.next_f64() - 0.5);
            let s = sample3(&(omega * 0.5), &d);
            let n = default_pole(&s);
            let expected = omega * 0.5 + n.cross(&(d * n)) * 0.5;
            assert!((fiber_average_polar(&s, 24, 48).unwrap() - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn planar_circle_average_is_half_vorticity() {
        let s = FieldSample::from_gradient(Vector::zeros(Dim::Two), Mat::from_rows2([[0.3, 1.7], [-0.4, -0.3]]));
        let avg = circle_averaged_angular_velocity(&s, 64).unwrap();
        assert!((avg - 0.5 * s.omega[2]).abs() < 1e-12);
        assert!(fiber_averaged_angular_velocity(&s, &SphereQuadrature::area(4, 8).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn fiber_rate_preserves_length(
            g in proptest::array::uniform9(-2.0..2.0f64),
            th in 0.0..PI,
            ph in 0.0..2.0 * PI,
        ) {
            let s = FieldSample::from_gradient(Vector::zeros(Dim::Three), Mat::from_row_slice(&g).unwrap());
            let e = Vector::new3(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
            let edot = fiber_rate(&s, &e).unwrap();
            prop_assert!(e.dot(&edot).abs() < 1e-12);
            let nu = nu_min(&e, &edot).unwrap();
            prop_assert!((nu.cross(&e) - edot).norm() < 1e-12);
            prop_assert!(nu.dot(&e).abs() < 1e-12);
        }
    }
}
