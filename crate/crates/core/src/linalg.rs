//! Fixed-dimension (2×2 and 3×3) dense linear algebra.
//!
//! Every tensor carries its dimension as a run-time tag. Arithmetic operators
//! panic when the operands disagree on dimension, the same way slice indexing
//! panics out of bounds; the fallible entry points of the crate validate
//! dimensions up front and return [`KinematicsError::DimensionMismatch`].
//!
//! Storage is always a 3×3 array. For planar tensors only the upper-left 2×2
//! block is used and the rest is kept at zero.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use crate::error::{KinematicsError, Result};

/// Ambient dimension of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn n(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn from_len(n: usize) -> Option<Dim> {
        match n {
            2 => Some(Dim::Two),
            3 => Some(Dim::Three),
            _ => None,
        }
    }

    pub(crate) fn check(self, found: Dim) -> Result<()> {
        if self == found {
            Ok(())
        } else {
            Err(KinematicsError::DimensionMismatch { expected: self, found })
        }
    }
}

/// Square matrix of dimension 2 or 3, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Mat {
    dim: Dim,
    m: [[f64; 3]; 3],
}

/// Column vector of dimension 2 or 3.
#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    dim: Dim,
    v: [f64; 3],
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim.n();
        let rows: Vec<&[f64]> = (0..n).map(|i| &self.m[i][..n]).collect();
        write!(f, "Mat{:?}", rows)
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vector{:?}", self.as_slice())
    }
}

impl Mat {
    pub fn zeros(dim: Dim) -> Mat {
        Mat { dim, m: [[0.0; 3]; 3] }
    }

    pub fn identity(dim: Dim) -> Mat {
        let mut out = Mat::zeros(dim);
        for i in 0..dim.n() {
            out.m[i][i] = 1.0;
        }
        out
    }

    pub fn from_rows2(rows: [[f64; 2]; 2]) -> Mat {
        let mut out = Mat::zeros(Dim::Two);
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = rows[i][j];
            }
        }
        out
    }

    pub fn from_rows3(rows: [[f64; 3]; 3]) -> Mat {
        Mat { dim: Dim::Three, m: rows }
    }

    pub fn from_fn(dim: Dim, mut f: impl FnMut(usize, usize) -> f64) -> Mat {
        let mut out = Mat::zeros(dim);
        for i in 0..dim.n() {
            for j in 0..dim.n() {
                out.m[i][j] = f(i, j);
            }
        }
        out
    }

    /// Builds a matrix from a row-major slice of length 4 or 9.
    pub fn from_row_slice(data: &[f64]) -> Result<Mat> {
        let dim = match data.len() {
            4 => Dim::Two,
            9 => Dim::Three,
            n => {
                return Err(KinematicsError::InvalidInput(format!(
                    "expected 4 or 9 matrix entries, got {n}"
                )))
            }
        };
        let n = dim.n();
        Ok(Mat::from_fn(dim, |i, j| data[i * n + j]))
    }

    pub fn diag(values: &[f64]) -> Result<Mat> {
        let dim = Dim::from_len(values.len()).ok_or_else(|| {
            KinematicsError::InvalidInput(format!("diagonal of length {}", values.len()))
        })?;
        Ok(Mat::from_fn(dim, |i, j| if i == j { values[i] } else { 0.0 }))
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.dim.n() && j < self.dim.n(), "index out of range");
        self.m[i][j] = value;
    }

    /// Row-major entries, `dim²` of them.
    pub fn to_row_vec(&self) -> Vec<f64> {
        let n = self.dim.n();
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.m[i][j]).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.dim, |i, j| self.m[j][i])
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim.n()).map(|i| self.m[i][i]).sum()
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        match self.dim {
            Dim::Two => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            Dim::Three => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }

    /// Inverse via the adjugate.
    pub fn inverse(&self) -> Result<Mat> {
        let det = self.det();
        let scale = self.norm().powi(self.dim.n() as i32);
        if !det.is_finite() || det.abs() <= 1e-300 || det.abs() <= 1e-15 * scale {
            return Err(KinematicsError::SingularInput);
        }
        let m = &self.m;
        let adj = match self.dim {
            Dim::Two => Mat::from_rows2([[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]),
            Dim::Three => Mat::from_fn(Dim::Three, |i, j| {
                // cofactor of (j, i)
                let r = [(j + 1) % 3, (j + 2) % 3];
                let c = [(i + 1) % 3, (i + 2) % 3];
                m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]
            }),
        };
        Ok(adj * (1.0 / det))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|x| x.is_finite())
    }

    pub fn column(&self, j: usize) -> Vector {
        let mut v = [0.0; 3];
        for (i, item) in v.iter_mut().enumerate().take(self.dim.n()) {
            *item = self.m[i][j];
        }
        Vector { dim: self.dim, v }
    }

    pub fn from_columns(cols: &[Vector]) -> Mat {
        let dim = cols[0].dim;
        assert_eq!(cols.len(), dim.n(), "column count must equal dimension");
        Mat::from_fn(dim, |i, j| cols[j].v[i])
    }

    /// Outer product `a bᵀ`.
    pub fn outer(a: &Vector, b: &Vector) -> Mat {
        assert_eq!(a.dim, b.dim, "dimension mismatch");
        Mat::from_fn(a.dim, |i, j| a.v[i] * b.v[j])
    }

    pub fn checked_mul(&self, rhs: &Mat) -> Result<Mat> {
        self.dim.check(rhs.dim)?;
        Ok(*self * *rhs)
    }

    /// `‖AᵀA − I‖_F`.
    pub fn orthogonality_residual(&self) -> f64 {
        (self.transpose() * *self - Mat::identity(self.dim)).norm()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.m[i][j]
    }
}

impl Add for Mat {
    type Output = Mat;
    fn add(self, rhs: Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        Mat::from_fn(self.dim, |i, j| self.m[i][j] + rhs.m[i][j])
    }
}

impl AddAssign for Mat {
    fn add_assign(&mut self, rhs: Mat) {
        *self = *self + rhs;
    }
}

impl Sub for Mat {
    type Output = Mat;
    fn sub(self, rhs: Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        Mat::from_fn(self.dim, |i, j| self.m[i][j] - rhs.m[i][j])
    }
}

impl Neg for Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self * -1.0
    }
}

impl Mul for Mat {
    type Output = Mat;
    fn mul(self, rhs: Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim.n();
        Mat::from_fn(self.dim, |i, j| (0..n).map(|k| self.m[i][k] * rhs.m[k][j]).sum())
    }
}

impl Mul<f64> for Mat {
    type Output = Mat;
    fn mul(self, s: f64) -> Mat {
        Mat::from_fn(self.dim, |i, j| self.m[i][j] * s)
    }
}

impl Mul<Mat> for f64 {
    type Output = Mat;
    fn mul(self, m: Mat) -> Mat {
        m * self
    }
}

impl Mul<Vector> for Mat {
    type Output = Vector;
    fn mul(self, x: Vector) -> Vector {
        assert_eq!(self.dim, x.dim, "dimension mismatch");
        let n = self.dim.n();
        let mut v = [0.0; 3];
        for (i, item) in v.iter_mut().enumerate().take(n) {
            *item = (0..n).map(|k| self.m[i][k] * x.v[k]).sum();
        }
        Vector { dim: self.dim, v }
    }
}

impl Vector {
    pub fn zeros(dim: Dim) -> Vector {
        Vector { dim, v: [0.0; 3] }
    }

    pub fn new2(a: f64, b: f64) -> Vector {
        Vector { dim: Dim::Two, v: [a, b, 0.0] }
    }

    pub fn new3(a: f64, b: f64, c: f64) -> Vector {
        Vector { dim: Dim::Three, v: [a, b, c] }
    }

    pub fn from_slice(data: &[f64]) -> Result<Vector> {
        let dim = Dim::from_len(data.len()).ok_or_else(|| {
            KinematicsError::InvalidInput(format!("expected 2 or 3 components, got {}", data.len()))
        })?;
        let mut v = [0.0; 3];
        v[..data.len()].copy_from_slice(data);
        Ok(Vector { dim, v })
    }

    /// Unit basis vector `e_i` (zero-based index).
    pub fn basis(dim: Dim, i: usize) -> Vector {
        let mut v = Vector::zeros(dim);
        v.v[i] = 1.0;
        v
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.v[..self.dim.n()]
    }

    /// All three storage slots; planar vectors report zero in the third.
    pub fn xyz(&self) -> [f64; 3] {
        self.v
    }

    pub fn get(&self, i: usize) -> f64 {
        self.v[i]
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.v.iter().zip(other.v.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn cross(&self, other: &Vector) -> Vector {
        assert!(self.dim == Dim::Three && other.dim == Dim::Three, "cross product needs 3D vectors");
        let a = &self.v;
        let b = &other.v;
        Vector::new3(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().all(|x| x.is_finite())
    }

    /// Embeds a planar vector into 3D with a zero third component.
    pub fn lift(&self) -> Vector {
        Vector { dim: Dim::Three, v: self.v }
    }

    pub fn normalized(&self) -> Option<Vector> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| *self * (1.0 / n))
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.v[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        Vector { dim: self.dim, v: [self.v[0] + rhs.v[0], self.v[1] + rhs.v[1], self.v[2] + rhs.v[2]] }
    }
}

impl AddAssign for Vector {
    fn add_assign(&mut self, rhs: Vector) {
        *self = *self + rhs;
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, rhs: Vector) -> Vector {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        Vector { dim: self.dim, v: [self.v[0] - rhs.v[0], self.v[1] - rhs.v[1], self.v[2] - rhs.v[2]] }
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self * -1.0
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        Vector { dim: self.dim, v: [self.v[0] * s, self.v[1] * s, self.v[2] * s] }
    }
}

/// Symmetric part `½(A + Aᵀ)`.
pub fn sym_part(a: &Mat) -> Mat {
    Mat::from_fn(a.dim, |i, j| 0.5 * (a.m[i][j] + a.m[j][i]))
}

/// Skew part `½(A − Aᵀ)`.
pub fn skew_part(a: &Mat) -> Mat {
    Mat::from_fn(a.dim, |i, j| 0.5 * (a.m[i][j] - a.m[j][i]))
}

/// Axial vector of a skew matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axial {
    /// In-plane rotation rate: the (2,1) entry of a planar skew matrix.
    Planar(f64),
    /// `w` with `W e = w × e`.
    Spatial(Vector),
}

impl Axial {
    /// The axial vector as a 3D vector; planar rates sit on the out-of-plane axis.
    pub fn lift(&self) -> Vector {
        match *self {
            Axial::Planar(s) => Vector::new3(0.0, 0.0, s),
            Axial::Spatial(w) => w,
        }
    }
}

const SKEW_TOL: f64 = 1e-10;

pub fn axial_vector(w: &Mat) -> Result<Axial> {
    let residual = sym_part(w).norm();
    if residual > SKEW_TOL * w.norm().max(1.0) {
        return Err(KinematicsError::NotSkew { residual });
    }
    Ok(axial_unchecked(w))
}

/// Axial vector read off the skew part, without the skewness check.
pub(crate) fn axial_unchecked(w: &Mat) -> Axial {
    let s = skew_part(w);
    match w.dim {
        Dim::Two => Axial::Planar(s.m[1][0]),
        Dim::Three => Axial::Spatial(Vector::new3(s.m[2][1], s.m[0][2], s.m[1][0])),
    }
}

/// Skew matrix `[w]×` with `[w]× e = w × e`.
pub fn skew_from(w: &Vector) -> Mat {
    match w.dim {
        Dim::Three => {
            let [a, b, c] = w.v;
            Mat::from_rows3([[0.0, -c, b], [c, 0.0, -a], [-b, a, 0.0]])
        }
        Dim::Two => panic!("skew_from needs a 3D vector; use skew_planar for planar rates"),
    }
}

/// Planar skew matrix with rotation rate `s`: `[[0, -s], [s, 0]]`.
pub fn skew_planar(s: f64) -> Mat {
    Mat::from_rows2([[0.0, -s], [s, 0.0]])
}

/// Skew matrix of the given dimension built from a (lifted) axial vector.
pub fn skew_from_axial(dim: Dim, w: &Vector) -> Mat {
    match dim {
        Dim::Two => skew_planar(w.v[2]),
        Dim::Three => skew_from(&w.lift()),
    }
}

/// Rotation described by an angle about a unit axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub dim: Dim,
    /// Unit 3D axis; `e₃` for planar rotations.
    pub axis: Vector,
    pub angle: f64,
    /// False when the angle vanishes and `axis` is the `e₃` placeholder.
    pub axis_defined: bool,
}

impl AxisAngle {
    pub fn planar(angle: f64) -> AxisAngle {
        AxisAngle { dim: Dim::Two, axis: Vector::new3(0.0, 0.0, 1.0), angle, axis_defined: angle != 0.0 }
    }

    /// Normalizes `axis`; errors on a zero axis.
    pub fn spatial(axis: Vector, angle: f64) -> Result<AxisAngle> {
        let axis = axis
            .lift()
            .normalized()
            .ok_or_else(|| KinematicsError::InvalidInput("rotation axis has zero length".into()))?;
        Ok(AxisAngle { dim: Dim::Three, axis, angle, axis_defined: true })
    }

    /// Signed angle about `g`: `angle · (axis·g)`.
    pub fn signed_about(&self, g: &Vector) -> f64 {
        self.angle * self.axis.dot(&g.lift())
    }
}

pub fn planar_rotation(angle: f64) -> Mat {
    let (s, c) = angle.sin_cos();
    Mat::from_rows2([[c, -s], [s, c]])
}

/// Planar rotation matrix or Rodrigues' formula in 3D.
pub fn rotation_exp(aa: &AxisAngle) -> Mat {
    match aa.dim {
        Dim::Two => planar_rotation(aa.angle),
        Dim::Three => {
            let k = skew_from(&aa.axis);
            let (s, c) = aa.angle.sin_cos();
            Mat::identity(Dim::Three) + k * s + (k * k) * (1.0 - c)
        }
    }
}

/// Rotation angle of a planar rotation, `atan2(R₂₁, R₁₁)` in `(−π, π]`.
pub fn planar_angle(r: &Mat) -> f64 {
    let a = r.m[1][0].atan2(r.m[0][0]);
    if a == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

const ROTATION_TOL: f64 = 1e-8;

pub fn check_rotation(r: &Mat, tol: f64) -> Result<()> {
    let orthogonality = r.orthogonality_residual();
    let det = r.det();
    if !(orthogonality <= tol) || !(det > 0.0) {
        return Err(KinematicsError::NotRotation { orthogonality, det });
    }
    Ok(())
}

/// Inverse of [`rotation_exp`]. In 3D the returned angle is in `[0, π]`.
pub fn axis_angle_of(r: &Mat) -> Result<AxisAngle> {
    check_rotation(r, ROTATION_TOL)?;
    match r.dim {
        Dim::Two => Ok(AxisAngle::planar(planar_angle(r))),
        Dim::Three => {
            let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
            let s = match axial_unchecked(r) {
                Axial::Spatial(w) => w,
                Axial::Planar(_) => unreachable!(),
            };
            let sin = s.norm();
            let angle = sin.atan2(cos);
            if angle < 1e-12 {
                return Ok(AxisAngle {
                    dim: Dim::Three,
                    axis: Vector::new3(0.0, 0.0, 1.0),
                    angle: 0.0,
                    axis_defined: false,
                });
            }
            let axis = if cos > 0.0 {
                s * (1.0 / sin)
            } else {
                // Near π the skew part vanishes; (R + Rᵀ)/2 − cos I = (1 − cos) n nᵀ.
                let b = sym_part(r) - Mat::identity(Dim::Three) * cos;
                let j = (0..3).max_by(|&a, &c| b.m[a][a].total_cmp(&b.m[c][c])).unwrap_or(0);
                let mut n = b.column(j).normalized().ok_or_else(|| KinematicsError::NotRotation {
                    orthogonality: r.orthogonality_residual(),
                    det: r.det(),
                })?;
                if n.dot(&s) < 0.0 {
                    n = -n;
                }
                n
            };
            Ok(AxisAngle { dim: Dim::Three, axis, angle, axis_defined: true })
        }
    }
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone, Copy)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: [f64; 3],
    /// Orthonormal eigenvectors stored as columns, ordered like `values`.
    pub vectors: Mat,
}

impl SymEigen {
    pub fn values(&self) -> &[f64] {
        &self.values[..self.vectors.dim.n()]
    }

    /// `V f(Λ) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat {
        let n = self.vectors.dim.n();
        let v = &self.vectors;
        let fl: Vec<f64> = (0..n).map(|k| f(self.values[k])).collect();
        let out = Mat::from_fn(v.dim, |i, j| (0..n).map(|k| v.m[i][k] * fl[k] * v.m[j][k]).sum());
        sym_part(&out)
    }
}

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Symmetric eigen-decomposition: closed form in 2D, cyclic Jacobi in 3D.
/// The input is symmetrized first.
pub fn sym_eigen(s: &Mat) -> SymEigen {
    let a = sym_part(s);
    let (mut values, vectors) = match a.dim {
        Dim::Two => {
            let (p, q, r) = (a.m[0][0], a.m[0][1], a.m[1][1]);
            let theta = 0.5 * (2.0 * q).atan2(p - r);
            let (sn, cs) = theta.sin_cos();
            let v = Mat::from_rows2([[cs, -sn], [sn, cs]]);
            let d = v.transpose() * a * v;
            ([d.m[0][0], d.m[1][1], 0.0], v)
        }
        Dim::Three => jacobi3(&a),
    };
    // ascending order
    let n = a.dim.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted_vectors = Mat::from_fn(a.dim, |i, j| vectors.m[i][order[j]]);
    let mut sorted = [0.0; 3];
    for (k, &o) in order.iter().enumerate() {
        sorted[k] = values[o];
    }
    values = sorted;
    SymEigen { values, vectors: sorted_vectors }
}

fn jacobi3(a: &Mat) -> ([f64; 3], Mat) {
    let mut a = *a;
    let mut v = Mat::identity(Dim::Three);
    let scale = a.norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = (2.0 * (a.m[0][1].powi(2) + a.m[0][2].powi(2) + a.m[1][2].powi(2))).sqrt();
        if off <= JACOBI_TOL * scale || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a.m[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a.m[q][q] - a.m[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut j = Mat::identity(Dim::Three);
            j.m[p][p] = c;
            j.m[q][q] = c;
            j.m[p][q] = s;
            j.m[q][p] = -s;
            a = j.transpose() * a * j;
            a.m[p][q] = 0.0;
            a.m[q][p] = 0.0;
            v = v * j;
        }
    }
    ([a.m[0][0], a.m[1][1], a.m[2][2]], v)
}

/// Principal square root of a symmetric positive definite matrix.
pub fn principal_sqrt_spd(s: &Mat) -> Result<Mat> {
    let eig = spd_eigen(s)?;
    Ok(eig.map(f64::sqrt))
}

/// Symmetric eigen-decomposition with the SPD checks of [`principal_sqrt_spd`].
pub(crate) fn spd_eigen(s: &Mat) -> Result<SymEigen> {
    if !s.is_finite() {
        return Err(KinematicsError::NotSpd("non-finite entries".into()));
    }
    let asym = skew_part(s).norm();
    if asym > 1e-10 * s.norm().max(1.0) {
        return Err(KinematicsError::NotSpd(format!("symmetry residual {asym:e}")));
    }
    let eig = sym_eigen(s);
    let floor = 1e-14 * s.trace().abs();
    if eig.values[0] <= floor {
        return Err(KinematicsError::NotSpd(format!("eigenvalue {:e}", eig.values[0])));
    }
    Ok(eig)
}

/// Singular values in ascending order.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    let eig = sym_eigen(&(m.transpose() * *m));
    eig.values().iter().map(|&l| l.max(0.0).sqrt()).collect()
}

/// Nearest rotation in the Frobenius norm, `Z (ZᵀZ)^{-1/2}`.
pub fn nearest_rotation(z: &Mat) -> Result<Mat> {
    let eig = spd_eigen(&(z.transpose() * *z))?;
    let r = *z * eig.map(|l| 1.0 / l.sqrt());
    if r.det() <= 0.0 {
        return Err(KinematicsError::NotRotation { orthogonality: r.orthogonality_residual(), det: r.det() });
    }
    Ok(r)
}
