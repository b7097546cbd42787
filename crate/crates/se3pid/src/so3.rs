//! Rotation-group primitives: hat/vee maps, the Rodrigues exponential, and
//! the attitude error machinery shared by both flight-mode controllers.
//!
//! Everything here is a pure function on value types and safe to use from
//! multiple threads without synchronization.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::real::Real;

/// Skew-symmetric 3x3 matrix. Values of this alias are skew by construction
/// (outputs of [`hat`]); the property is not re-checked.
pub type SkewMatrix<T> = Matrix3<T>;

/// Frobenius tolerance on `R^T R - I` for a valid rotation.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;
/// Tolerance on `det R - 1` for a valid rotation.
pub const DETERMINANT_TOL: f64 = 1e-9;
/// `vee` rejects inputs whose symmetric part exceeds this norm.
pub const SKEW_REJECT_TOL: f64 = 1e-6;
/// Below this angle the exponential map switches to its series branch.
pub const SMALL_ANGLE: f64 = 1e-6;
/// `normalized_projection` rejects inputs whose cross product is shorter
/// than this.
pub const PARALLEL_TOL: f64 = 1e-6;

/// 3x3 rotation matrix (orthogonal, determinant +1).
///
/// The invariants are enforced at construction through [`RotationMatrix::try_new`];
/// code that produces rotations structurally (exponential map, products of
/// rotations) uses [`RotationMatrix::from_matrix_unchecked`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix<T: Real>(Matrix3<T>);

impl<T: Real> RotationMatrix<T> {
    /// Identity rotation.
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates the rotation invariants and wraps the matrix.
    pub fn try_new(m: Matrix3<T>) -> Result<Self> {
        let orth = orthogonality_error(&m);
        let det = m.determinant();
        if orth > T::lit(ORTHOGONALITY_TOL) || (det - T::one()).abs() > T::lit(DETERMINANT_TOL) {
            return Err(Error::NotARotation {
                orthogonality: orth.as_f64(),
                determinant: det.as_f64(),
            });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is known to be a rotation.
    pub fn from_matrix_unchecked(m: Matrix3<T>) -> Self {
        Self(m)
    }

    /// Builds a rotation from three column vectors, validating the result.
    pub fn try_from_columns(c1: Vector3<T>, c2: Vector3<T>, c3: Vector3<T>) -> Result<Self> {
        Self::try_new(Matrix3::from_columns(&[c1, c2, c3]))
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix3<T> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Frobenius norm of `R^T R - I`.
    pub fn orthogonality_error(&self) -> T {
        orthogonality_error(&self.0)
    }

    pub fn determinant(&self) -> T {
        self.0.determinant()
    }

    /// Column `i` as a vector (0-based).
    pub fn column(&self, i: usize) -> Vector3<T> {
        self.0.column(i).into_owned()
    }
}

impl<T: Real> core::ops::Mul for RotationMatrix<T> {
    type Output = RotationMatrix<T>;
    fn mul(self, rhs: Self) -> Self {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl<T: Real> core::ops::Mul<Vector3<T>> for RotationMatrix<T> {
    type Output = Vector3<T>;
    fn mul(self, rhs: Vector3<T>) -> Vector3<T> {
        self.0 * rhs
    }
}

fn orthogonality_error<T: Real>(m: &Matrix3<T>) -> T {
    (m.transpose() * m - Matrix3::identity()).norm()
}

/// Hat map: `hat(v) w = v x w` for all `w`.
pub fn hat<T: Real>(v: &Vector3<T>) -> SkewMatrix<T> {
    let z = T::zero();
    Matrix3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

/// Vee map, inverse of [`hat`].
///
/// The input is symmetrized first (`(A - A^T)/2`), tolerating the numerical
/// drift that products like `R_d^T R` accumulate; inputs whose symmetric part
/// exceeds [`SKEW_REJECT_TOL`] are rejected.
pub fn vee<T: Real>(m: &Matrix3<T>) -> Result<Vector3<T>> {
    let sym = (m + m.transpose()) * T::lit(0.5);
    let asymmetry = sym.norm();
    if asymmetry > T::lit(SKEW_REJECT_TOL) {
        return Err(Error::NotSkewSymmetric {
            asymmetry: asymmetry.as_f64(),
        });
    }
    Ok(skew_part_vee(m))
}

/// Vee of the skew-symmetric part of `m`, without validation.
///
/// Equals `vee((m - m^T)/2)`.
pub fn skew_part_vee<T: Real>(m: &Matrix3<T>) -> Vector3<T> {
    let half = T::lit(0.5);
    Vector3::new(
        (m[(2, 1)] - m[(1, 2)]) * half,
        (m[(0, 2)] - m[(2, 0)]) * half,
        (m[(1, 0)] - m[(0, 1)]) * half,
    )
}

/// Exponential map so(3) -> SO(3) by the Rodrigues formula.
///
/// For angles below [`SMALL_ANGLE`] the trigonometric coefficients are
/// replaced by their series to fourth order, avoiding the 0/0 at the origin.
pub fn exp_so3<T: Real>(v: &Vector3<T>) -> RotationMatrix<T> {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let k = hat(v);
    let (a, b) = if theta < T::lit(SMALL_ANGLE) {
        let t4 = theta2 * theta2;
        (
            T::one() - theta2 / T::lit(6.0) + t4 / T::lit(120.0),
            T::lit(0.5) - theta2 / T::lit(24.0) + t4 / T::lit(720.0),
        )
    } else {
        (theta.sin() / theta, (T::one() - theta.cos()) / theta2)
    };
    RotationMatrix::from_matrix_unchecked(Matrix3::identity() + k * a + k * k * b)
}

/// Projects a near-rotation matrix onto SO(3) (polar factor).
///
/// Newton iteration `X <- (X + X^{-T})/2`; quadratically convergent for the
/// orthogonality drift an integrator accumulates.
pub fn project_to_rotation<T: Real>(m: &Matrix3<T>) -> RotationMatrix<T> {
    let mut x = *m;
    for _ in 0..16 {
        let inv_t = match x.try_inverse() {
            Some(inv) => inv.transpose(),
            None => break,
        };
        x = (x + inv_t) * T::lit(0.5);
        if orthogonality_error(&x) < T::lit(1e-15) {
            break;
        }
    }
    RotationMatrix::from_matrix_unchecked(x)
}

/// Attitude error function `Psi(R, R_d) = tr(I - R_d^T R) / 2`, clamped to
/// `[0, 2]` against trace round-off.
pub fn error_function<T: Real>(r: &RotationMatrix<T>, rd: &RotationMatrix<T>) -> T {
    let p = rd.matrix().transpose() * r.matrix();
    let psi = (T::lit(3.0) - p.trace()) * T::lit(0.5);
    psi.clamp(T::zero(), T::lit(2.0))
}

/// Attitude error vector `e_R = vee(R_d^T R - R^T R_d) / 2`.
pub fn error_vector<T: Real>(r: &RotationMatrix<T>, rd: &RotationMatrix<T>) -> Vector3<T> {
    // R^T R_d = (R_d^T R)^T, so this is exactly vee((P - P^T)/2).
    let p = rd.matrix().transpose() * r.matrix();
    skew_part_vee(&p)
}

/// Angular velocity error `e_Omega = Omega - R^T R_d Omega_d`, expressed in
/// the body frame.
pub fn angular_velocity_error<T: Real>(
    r: &RotationMatrix<T>,
    rd: &RotationMatrix<T>,
    omega: &Vector3<T>,
    omega_d: &Vector3<T>,
) -> Vector3<T> {
    omega - r.matrix().transpose() * rd.matrix() * omega_d
}

/// Normalized projection of `heading` onto the plane perpendicular to the
/// unit vector `axis`.
///
/// Fails when the two directions are parallel within [`PARALLEL_TOL`].
pub fn normalized_projection<T: Real>(heading: &Vector3<T>, axis: &Vector3<T>) -> Result<Vector3<T>> {
    let cross_norm = heading.cross(axis).norm();
    if cross_norm <= T::lit(PARALLEL_TOL) {
        return Err(Error::ParallelHeading {
            cross_norm: cross_norm.as_f64(),
        });
    }
    let projected = heading - axis * heading.dot(axis);
    Ok(projected / projected.norm())
}
