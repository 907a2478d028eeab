//! 3D vectors, rotations and rigid transforms.
//!
//! Rotations are kept as plain 3×3 matrices (row-major when exported). Every
//! constructor in this module returns a proper rotation: `RᵀR = I` and
//! `det R = +1` to within [`ORTHO_TOL`].

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4};

use crate::error::{GrorError, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Minimum length for an edge or direction vector.
pub const EPS_LEN: f64 = 1e-12;

/// Per-entry tolerance for orthonormality and determinant checks.
pub const ORTHO_TOL: f64 = 1e-9;

/// Tolerance on the norm of an axis passed to [`axis_angle_rotation`].
pub const UNIT_TOL: f64 = 1e-9;

/// A proper rotation in SO(3).
#[derive(Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Validates `m` as a rotation matrix.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GrorError::InvalidRotation("non-finite entry".into()));
        }
        let gram = m.transpose() * m - Matrix3::identity();
        let worst = gram.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if worst > ORTHO_TOL {
            return Err(GrorError::InvalidRotation(format!(
                "RᵀR deviates from identity by {worst:e}"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ORTHO_TOL {
            return Err(GrorError::InvalidRotation(format!("determinant {det}")));
        }
        Ok(Rotation(m))
    }

    /// Rows of the matrix, `[[r00, r01, r02], ...]`.
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_matrix(Matrix3::from_fn(|r, c| rows[r][c]))
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Debug for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Rotation").field(&self.rows()).finish()
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for Rotation {
    type Output = Vec3;

    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &Rotation {
    type Output = Vec3;

    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

/// `x ↦ R x + t`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RigidTransform {
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Rotation::identity(), Vec3::zeros())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.rotation.apply(v) + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -rt.apply(&self.translation))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> Self {
        Self::new(
            self.rotation * other.rotation,
            self.rotation.apply(&other.translation) + self.translation,
        )
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Row-major 4×4 homogeneous matrix.
    pub fn homogeneous_rows(&self) -> [[f64; 4]; 4] {
        let m = self.to_homogeneous();
        let mut out = [[0.0; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = m[(r, c)];
            }
        }
        out
    }
}

/// Cross-product matrix `[k]×`, so that `[k]× v = k × v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkewMatrix(Matrix3<f64>);

impl SkewMatrix {
    pub fn new(k: &Vec3) -> Self {
        SkewMatrix(Matrix3::new(
            0.0, -k.z, k.y, //
            k.z, 0.0, -k.x, //
            -k.y, k.x, 0.0,
        ))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

fn unit(v: &Vec3) -> Result<Vec3> {
    let n = v.norm();
    if n.is_nan() || n <= EPS_LEN {
        return Err(GrorError::DegenerateEdge(n));
    }
    Ok(v / n)
}

/// Half-turn about a unit axis perpendicular to `u`, picked from the
/// coordinate axis least aligned with `u`.
fn half_turn_perpendicular(u: &Vec3) -> Matrix3<f64> {
    let a = u.map(f64::abs);
    let e = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let n = u.cross(&e).normalize();
    2.0 * n * n.transpose() - Matrix3::identity()
}

/// `I + [k]× + [k]×² / (1 + c)` with `k = b̂ × â`; maps `b̂` onto `â`.
/// Only well conditioned for `c` bounded away from `-1`.
fn align_units(a: &Vec3, b: &Vec3) -> Matrix3<f64> {
    let c = a.dot(b);
    let k = SkewMatrix::new(&b.cross(a));
    let k = k.matrix();
    Matrix3::identity() + k + k * k / (1.0 + c)
}

/// Rotation taking the direction of `b` onto the direction of `a`.
///
/// The closed form divides by `1 + cos∠(a, b)`, which vanishes for
/// antiparallel inputs. For obtuse angles the source direction is first
/// flipped by a half-turn about an axis perpendicular to `â`, which leaves
/// an acute alignment problem; exactly antiparallel inputs reduce to that
/// half-turn alone.
pub fn rodrigues_align(a: &Vec3, b: &Vec3) -> Result<Rotation> {
    let a = unit(a)?;
    let b = unit(b)?;
    let c = a.dot(&b);
    let m = if c >= 0.0 {
        align_units(&a, &b)
    } else {
        let flip = half_turn_perpendicular(&a);
        align_units(&a, &(flip * b)) * flip
    };
    Ok(Rotation::from_matrix_unchecked(m))
}

/// Rotation by `theta` radians about `axis`, right-handed.
pub fn axis_angle_rotation(axis: &Vec3, theta: f64) -> Result<Rotation> {
    let n = axis.norm();
    if n.is_nan() || (n - 1.0).abs() > UNIT_TOL {
        return Err(GrorError::NonUnitAxis(n));
    }
    let axis = axis / n;
    let k = *SkewMatrix::new(&axis).matrix();
    let (s, c) = theta.sin_cos();
    Ok(Rotation::from_matrix_unchecked(
        Matrix3::identity() + s * k + (1.0 - c) * k * k,
    ))
}

/// Least-squares rigid transform minimizing `Σ ‖pᵢ − (R qᵢ + t)‖²` over
/// pairs `(pᵢ, qᵢ)`.
pub fn procrustes_fit(pairs: &[(Vec3, Vec3)]) -> Result<RigidTransform> {
    if pairs.len() < 3 {
        return Err(GrorError::DegenerateConfiguration(format!(
            "{} pairs, at least 3 required",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let (sum_p, sum_q) = pairs
        .iter()
        .fold((Vec3::zeros(), Vec3::zeros()), |(sp, sq), (p, q)| {
            (sp + p, sq + q)
        });
    let p_bar = sum_p / n;
    let q_bar = sum_q / n;

    let mut cov = Matrix3::zeros();
    for (p, q) in pairs {
        cov += (q - q_bar) * (p - p_bar).transpose();
    }

    let svd = cov.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => {
            return Err(GrorError::DegenerateConfiguration(
                "SVD of cross-covariance failed".into(),
            ))
        }
    };
    let sv = svd.singular_values;
    let mut sorted = [sv[0], sv[1], sv[2]];
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted[0].is_nan() || sorted[0] <= 0.0 || sorted[1] <= 1e-12 * sorted[0] {
        return Err(GrorError::DegenerateConfiguration(
            "cross-covariance rank below 2 (collinear or coincident points)".into(),
        ));
    }

    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let smallest = (0..3).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap_or(2);
    let mut diag = Matrix3::identity();
    diag[(smallest, smallest)] = d;
    let r = v * diag * u.transpose();
    let rotation = Rotation::from_matrix_unchecked(r);
    let translation = p_bar - rotation.apply(&q_bar);
    Ok(RigidTransform::new(rotation, translation))
}

/// Geodesic angle between two rotations, in degrees.
///
/// Equal to `arccos((tr(Rt Reᵀ) − 1) / 2)`; evaluated through `atan2` of the
/// sine and cosine parts so that tiny angles keep full precision.
pub fn rotation_error(truth: &Rotation, estimate: &Rotation) -> f64 {
    let d = truth.matrix() * estimate.matrix().transpose();
    let cos_part = ((d.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let sin_part = 0.5
        * Vec3::new(
            d[(2, 1)] - d[(1, 2)],
            d[(0, 2)] - d[(2, 0)],
            d[(1, 0)] - d[(0, 1)],
        )
        .norm();
    sin_part.atan2(cos_part).clamp(0.0, PI).to_degrees()
}

pub fn translation_error(truth: &Vec3, estimate: &Vec3) -> f64 {
    (truth - estimate).norm()
}
