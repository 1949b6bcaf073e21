//! Strapdown NED mechanization and its transition Jacobian.

use nalgebra::{SMatrix, Vector3, Vector4};

use super::{idx, Covariance22, StateVector22, STATE_DIM};
use crate::math::{dcm, quat_from_rotation_vector, quat_mul, symmetrize, Quat};
use crate::sensors::ImuSample;
use crate::{Error, Result};

/// Largest quaternion norm drift tolerated before renormalization.
pub const QUAT_DRIFT_LIMIT: f64 = 1e-3;

/// Central-difference step for the quaternion blocks of the Jacobian.
pub const JACOBIAN_STEP: f64 = 1e-6;

fn rotate_attitude(q: &Quat, d_angle: &Vector3<f64>) -> Quat {
    quat_mul(q, &quat_from_rotation_vector(d_angle))
}

fn check_imu(imu: &ImuSample) -> Result<()> {
    if imu.gyro.iter().chain(imu.accel.iter()).all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Fault(format!("non-finite IMU sample at t = {}", imu.t)))
    }
}

/// One mechanization step. Attitude integrates the bias-corrected delta
/// angle, velocity integrates the rotated bias-corrected delta velocity plus
/// gravity, and position takes an Euler step with the previous velocity.
pub fn propagate(x: &StateVector22, imu: &ImuSample, dt: f64, gravity: f64) -> Result<StateVector22> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("predict", format!("dt must be > 0, got {dt}")));
    }
    check_imu(imu)?;
    let q = x.q();
    let d_angle = imu.gyro * dt - x.gyro_bias();
    let d_vel = imu.accel * dt - x.accel_bias();

    let q_raw = rotate_attitude(&q, &d_angle);
    let norm = q_raw.norm();
    // the input quaternion is unit, so any drift here is numerical
    if (norm - 1.0).abs() > QUAT_DRIFT_LIMIT && (q.norm() - 1.0).abs() <= QUAT_DRIFT_LIMIT {
        return Err(Error::Numerical(format!("quaternion norm drifted to {norm}")));
    }
    let vel = x.vel();
    let vel_next = vel + dcm(&q) * d_vel + Vector3::new(0.0, 0.0, gravity * dt);
    let pos_next = x.pos() + vel * dt;

    let mut out = *x;
    out.set_q(&(q_raw / norm));
    out.set_vel(&vel_next);
    out.set_pos(&pos_next);
    Ok(out)
}

/// Transition Jacobian of [`propagate`]. Kinematic blocks are analytic; the
/// attitude-dependent blocks use central differences.
pub fn transition_jacobian(x: &StateVector22, imu: &ImuSample, dt: f64) -> Covariance22 {
    let mut f = Covariance22::identity();
    let q = x.q();
    let d_angle = imu.gyro * dt - x.gyro_bias();
    let d_vel = imu.accel * dt - x.accel_bias();
    let h = JACOBIAN_STEP;

    let attitude = |q: &Quat, da: &Vector3<f64>| -> Quat {
        let r = rotate_attitude(q, da);
        r / r.norm()
    };

    // ∂q'/∂q and ∂v'/∂q
    for j in 0..4 {
        let mut e = Vector4::zeros();
        e[j] = h;
        let dq = (attitude(&(q + e), &d_angle) - attitude(&(q - e), &d_angle)) / (2.0 * h);
        let dv = (dcm(&(q + e)) * d_vel - dcm(&(q - e)) * d_vel) / (2.0 * h);
        for i in 0..4 {
            f[(idx::Q + i, idx::Q + j)] = dq[i];
        }
        for i in 0..3 {
            f[(idx::VEL + i, idx::Q + j)] = dv[i];
        }
    }
    // ∂q'/∂gyro_bias: the bias enters as -d_angle
    for j in 0..3 {
        let mut e = Vector3::zeros();
        e[j] = h;
        let dq = (attitude(&q, &(d_angle - e)) - attitude(&q, &(d_angle + e))) / (2.0 * h);
        for i in 0..4 {
            f[(idx::Q + i, idx::GYRO_BIAS + j)] = dq[i];
        }
    }
    let r = dcm(&q);
    for i in 0..3 {
        f[(idx::POS + i, idx::VEL + i)] = dt;
        for j in 0..3 {
            f[(idx::VEL + i, idx::ACCEL_BIAS + j)] = -r[(i, j)];
        }
    }
    f
}

/// `F P Fᵀ` exploiting that `F` differs from identity only in the attitude,
/// position and velocity rows.
pub(crate) fn propagate_covariance(f: &Covariance22, p: &Covariance22) -> Covariance22 {
    const ROWS: usize = 10;
    // only rows 0..10 of F differ from identity
    let f_top: SMatrix<f64, ROWS, STATE_DIM> = f.fixed_rows::<ROWS>(0).into_owned();
    let fp_top: SMatrix<f64, ROWS, STATE_DIM> = f_top * p;
    let mut out = *p;
    // rows 0..10: (F P) Fᵀ
    let top_block: SMatrix<f64, ROWS, ROWS> = fp_top * f_top.transpose();
    let top_rest = fp_top.fixed_columns::<{ STATE_DIM - ROWS }>(ROWS).into_owned();
    out.fixed_view_mut::<ROWS, ROWS>(0, 0).copy_from(&top_block);
    out.fixed_view_mut::<ROWS, { STATE_DIM - ROWS }>(0, ROWS).copy_from(&top_rest);
    out.fixed_view_mut::<{ STATE_DIM - ROWS }, ROWS>(ROWS, 0).copy_from(&top_rest.transpose());
    out
}

/// Prediction step: state through the mechanization, covariance through
/// `F P Fᵀ + Q·dt`.
pub fn predict(
    x: &StateVector22,
    p: &Covariance22,
    imu: &ImuSample,
    dt: f64,
    q: &Covariance22,
    gravity: f64,
) -> Result<(StateVector22, Covariance22)> {
    let next = propagate(x, imu, dt, gravity)?;
    let f = transition_jacobian(x, imu, dt);
    let mut p_next = propagate_covariance(&f, p) + q * dt;
    symmetrize(&mut p_next);
    Ok((next, p_next))
}
