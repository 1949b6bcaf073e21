//! Measurement models and the Kalman update.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, SVector, Vector3, Vector4};

use super::{idx, Covariance22, Innovation, MeasurementSource, StateVector22, STATE_DIM};
use crate::math::{condition_number_sym, dcm, symmetrize};
use crate::{Error, Result};

/// GNSS measurement dimension: (P_N, P_E, V_N, V_E, V_D).
pub const GNSS_DIM: usize = 5;
/// Innovation covariances above this condition number are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Selector for north/east position and NED velocity. The down-position row
/// is omitted: it is identically zero and would carry no information.
pub fn gnss_observation() -> SMatrix<f64, GNSS_DIM, STATE_DIM> {
    let mut h = SMatrix::<f64, GNSS_DIM, STATE_DIM>::zeros();
    h[(0, idx::POS)] = 1.0;
    h[(1, idx::POS + 1)] = 1.0;
    h[(2, idx::VEL)] = 1.0;
    h[(3, idx::VEL + 1)] = 1.0;
    h[(4, idx::VEL + 2)] = 1.0;
    h
}

/// Predicted body-frame magnetometer reading `R(q)ᵀ m + b`.
pub fn mag_prediction(x: &StateVector22) -> Vector3<f64> {
    dcm(&x.q()).transpose() * x.geo_field() + x.mag_bias()
}

/// Magnetometer measurement Jacobian. The field and bias blocks are
/// analytic, the attitude block uses central differences.
pub fn mag_observation(x: &StateVector22) -> SMatrix<f64, 3, STATE_DIM> {
    let mut h = SMatrix::<f64, 3, STATE_DIM>::zeros();
    let q = x.q();
    let m = x.geo_field();
    let step = super::mechanization::JACOBIAN_STEP;
    for j in 0..4 {
        let mut e = Vector4::zeros();
        e[j] = step;
        let d = (dcm(&(q + e)).transpose() * m - dcm(&(q - e)).transpose() * m) / (2.0 * step);
        h.fixed_view_mut::<3, 1>(0, idx::Q + j).copy_from(&d);
    }
    h.fixed_view_mut::<3, 3>(0, idx::GEO_FIELD)
        .copy_from(&dcm(&q).transpose());
    h.fixed_view_mut::<3, 3>(0, idx::MAG_BIAS)
        .copy_from(&Matrix3::identity());
    h
}

#[derive(Debug, Clone)]
pub struct UpdateOutcome<const M: usize> {
    pub state: StateVector22,
    pub cov: Covariance22,
    pub innovation: Innovation,
    pub gain: Option<SMatrix<f64, STATE_DIM, M>>,
}

/// Kalman update with an explicit predicted measurement `h(x⁻)`.
///
/// When `S = H P Hᵀ + R` is numerically singular the update is skipped: the
/// prior passes through and the innovation is reported with `fault = true`.
#[allow(clippy::too_many_arguments)]
pub fn update<const M: usize>(
    x: &StateVector22,
    p: &Covariance22,
    z: &SVector<f64, M>,
    h_pred: &SVector<f64, M>,
    h: &SMatrix<f64, M, STATE_DIM>,
    r: &SMatrix<f64, M, M>,
    t: f64,
    source: MeasurementSource,
) -> UpdateOutcome<M> {
    let residual = z - h_pred;
    let ph_t: SMatrix<f64, STATE_DIM, M> = p * h.transpose();
    let mut s: SMatrix<f64, M, M> = h * ph_t + r;
    symmetrize(&mut s);

    let singular = !s.iter().all(|v| v.is_finite()) || condition_number_sym(&s) > MAX_CONDITION;
    let chol = if singular { None } else { s.cholesky() };
    let innovation = |fault| Innovation {
        r: DVector::from_column_slice(residual.as_slice()),
        s: DMatrix::from_column_slice(M, M, s.as_slice()),
        t,
        source,
        fault,
    };
    let Some(chol) = chol else {
        return UpdateOutcome {
            state: *x,
            cov: *p,
            innovation: innovation(true),
            gain: None,
        };
    };

    // K = P Hᵀ S⁻¹, via the Cholesky factor of the symmetric S
    let k: SMatrix<f64, STATE_DIM, M> = chol.solve(&ph_t.transpose()).transpose();
    let mut state = StateVector22(x.0 + k * residual);
    state.normalize_quat();
    let mut cov = (Covariance22::identity() - k * h) * p;
    symmetrize(&mut cov);

    UpdateOutcome {
        state,
        cov,
        innovation: innovation(false),
        gain: Some(k),
    }
}

/// Gain of the identity-observation subspace written as `I − R (P + Q + R)⁻¹`.
pub fn gain_simplified_check(p_prev: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = p_prev.nrows();
    let square = |m: &DMatrix<f64>| m.nrows() == n && m.ncols() == n;
    if !(square(p_prev) && square(q) && square(r)) {
        return Err(Error::invalid("gain check", "matrices must be square and of equal size"));
    }
    let inv = (p_prev + q + r)
        .try_inverse()
        .ok_or_else(|| Error::Numerical("P + Q + R is singular".into()))?;
    Ok(DMatrix::identity(n, n) - r * inv)
}
