//! Small quaternion and matrix helpers shared by the filter and the simulators.
//!
//! Quaternions are stored as `[w, x, y, z]` (scalar first) and rotate body
//! vectors into the NED frame.

use nalgebra::{DMatrix, Matrix3, SMatrix, SymmetricEigen, Vector3, Vector4};

pub type Quat = Vector4<f64>;

pub fn quat_identity() -> Quat {
    Vector4::new(1.0, 0.0, 0.0, 0.0)
}

/// Hamilton product `a ⊗ b`.
pub fn quat_mul(a: &Quat, b: &Quat) -> Quat {
    let (aw, ax, ay, az) = (a[0], a[1], a[2], a[3]);
    let (bw, bx, by, bz) = (b[0], b[1], b[2], b[3]);
    Vector4::new(
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )
}

/// Quaternion of the rotation vector `rv` (axis × angle).
pub fn quat_from_rotation_vector(rv: &Vector3<f64>) -> Quat {
    let angle = rv.norm();
    if angle < 1e-12 {
        // second-order series keeps the result unit-norm to rounding
        let half = rv * 0.5;
        let w = 1.0 - half.norm_squared() * 0.5;
        return Vector4::new(w, half.x, half.y, half.z).normalize();
    }
    let axis = rv / angle;
    let (s, c) = (angle * 0.5).sin_cos();
    Vector4::new(c, axis.x * s, axis.y * s, axis.z * s)
}

/// Yaw-only attitude (roll = pitch = 0), yaw measured from north towards east.
pub fn quat_from_yaw(yaw: f64) -> Quat {
    let (s, c) = (yaw * 0.5).sin_cos();
    Vector4::new(c, 0.0, 0.0, s)
}

pub fn yaw_of(q: &Quat) -> f64 {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z))
}

/// Body-to-NED direction cosine matrix. Quadratic in `q`; exact rotation only
/// for unit quaternions.
pub fn dcm(q: &Quat) -> Matrix3<f64> {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Matrix3::new(
        w * w + x * x - y * y - z * z,
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        w * w - x * x + y * y - z * z,
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        w * w - x * x - y * y + z * z,
    )
}

pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = (a + std::f64::consts::PI) % two_pi;
    if r < 0.0 {
        r += two_pi;
    }
    r - std::f64::consts::PI
}

pub fn symmetrize<const N: usize>(m: &mut SMatrix<f64, N, N>) {
    for i in 0..N {
        for j in (i + 1)..N {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Symmetrizes and clamps negative eigenvalues to zero. Returns the most
/// negative eigenvalue seen before clamping.
pub fn enforce_psd<const N: usize>(m: &mut SMatrix<f64, N, N>) -> f64 {
    symmetrize(m);
    let eig = SymmetricEigen::new(DMatrix::from_column_slice(N, N, m.as_slice()));
    let min = eig.eigenvalues.min();
    if min < 0.0 {
        let clamped = eig.eigenvalues.map(|v| v.max(0.0));
        let fixed = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
        m.copy_from_slice(fixed.as_slice());
        symmetrize(m);
    }
    min
}

/// Ratio of the largest to smallest eigenvalue magnitude of a symmetric matrix;
/// infinite when singular or indefinite.
pub fn condition_number_sym<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let eig = SymmetricEigen::new(DMatrix::from_column_slice(N, N, m.as_slice()));
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}
