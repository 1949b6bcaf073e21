//! 22-state IMU/GNSS/magnetometer extended Kalman filter.
//!
//! State layout (0-based):
//!
//! | index  | content                                   |
//! |--------|-------------------------------------------|
//! | 0..4   | attitude quaternion `[w, x, y, z]`        |
//! | 4..7   | NED position, m                           |
//! | 7..10  | NED velocity, m/s                         |
//! | 10..13 | delta-angle bias, rad                     |
//! | 13..16 | delta-velocity bias, m/s                  |
//! | 16..19 | geomagnetic field, NED                    |
//! | 19..22 | magnetometer bias, body                   |
//!
//! The IMU drives prediction at 160 Hz; GNSS and magnetometer corrections are
//! fused once per second, GNSS first.

mod mechanization;
mod update;

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, SVector, Vector3, Vector5};
use serde::{Deserialize, Serialize};

pub use mechanization::{predict, propagate, transition_jacobian, JACOBIAN_STEP, QUAT_DRIFT_LIMIT};
pub use update::{
    gain_simplified_check, gnss_observation, mag_observation, mag_prediction, update, UpdateOutcome, GNSS_DIM,
    MAX_CONDITION,
};

use crate::math::{enforce_psd, Quat};
use crate::sensors::{GnssMeasurement, MagMeasurement, SensorStreams};
use crate::trajectory::TrajectorySample;
use crate::{Error, Result, GRAVITY, SAMPLES_PER_EPOCH};

pub const STATE_DIM: usize = 22;

pub mod idx {
    pub const Q: usize = 0;
    pub const POS: usize = 4;
    pub const VEL: usize = 7;
    pub const GYRO_BIAS: usize = 10;
    pub const ACCEL_BIAS: usize = 13;
    pub const GEO_FIELD: usize = 16;
    pub const MAG_BIAS: usize = 19;
}

pub type Covariance22 = SMatrix<f64, STATE_DIM, STATE_DIM>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector22(pub SVector<f64, STATE_DIM>);

macro_rules! vec3_accessors {
    ($get:ident, $set:ident, $at:expr) => {
        pub fn $get(&self) -> Vector3<f64> {
            self.0.fixed_rows::<3>($at).into_owned()
        }

        pub fn $set(&mut self, v: &Vector3<f64>) {
            self.0.fixed_rows_mut::<3>($at).copy_from(v);
        }
    };
}

impl StateVector22 {
    pub fn zeros() -> Self {
        Self(SVector::zeros())
    }

    pub fn q(&self) -> Quat {
        self.0.fixed_rows::<4>(idx::Q).into_owned()
    }

    pub fn set_q(&mut self, q: &Quat) {
        self.0.fixed_rows_mut::<4>(idx::Q).copy_from(q);
    }

    vec3_accessors!(pos, set_pos, idx::POS);
    vec3_accessors!(vel, set_vel, idx::VEL);
    vec3_accessors!(gyro_bias, set_gyro_bias, idx::GYRO_BIAS);
    vec3_accessors!(accel_bias, set_accel_bias, idx::ACCEL_BIAS);
    vec3_accessors!(geo_field, set_geo_field, idx::GEO_FIELD);
    vec3_accessors!(mag_bias, set_mag_bias, idx::MAG_BIAS);

    pub fn normalize_quat(&mut self) {
        let q = self.q();
        self.set_q(&(q / q.norm()));
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasurementSource {
    Gnss,
    Mag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Innovation {
    pub r: DVector<f64>,
    pub s: DMatrix<f64>,
    pub t: f64,
    pub source: MeasurementSource,
    /// Set when `S` was singular and the update was skipped.
    pub fault: bool,
}

/// Process and measurement noise in configuration form: standard deviations,
/// process terms per √s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterNoise {
    /// Heading random walk, rad/√s.
    pub att_yaw: f64,
    /// Roll/pitch random walk, rad/√s.
    pub att_tilt: f64,
    pub pos: f64,
    pub vel: f64,
    pub gyro_bias: f64,
    pub accel_bias: f64,
    pub geo_field: f64,
    pub mag_bias: f64,
    pub gnss_pos: f64,
    pub gnss_vel_h: f64,
    pub gnss_vel_d: f64,
    pub mag: f64,
    /// Extra horizontal position random walk per m/s² of estimated
    /// horizontal acceleration, m/√s per m/s². Covers model error that
    /// appears only while maneuvering.
    pub maneuver_pos: f64,
}

impl Default for FilterNoise {
    fn default() -> Self {
        Self {
            att_yaw: 0.02,
            att_tilt: 0.002,
            pos: 5.0,
            vel: 1.0,
            gyro_bias: 1e-5,
            accel_bias: 1e-4,
            geo_field: 1e-4,
            mag_bias: 1e-4,
            gnss_pos: 7.0,
            gnss_vel_h: 0.5,
            gnss_vel_d: 0.3,
            mag: 0.05,
            maneuver_pos: 1.25,
        }
    }
}

/// Noise covariances handed to the filter; constant for a whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    pub q: Covariance22,
    pub r_gnss: SMatrix<f64, GNSS_DIM, GNSS_DIM>,
    pub r_mag: Matrix3<f64>,
    /// Variance rate added to horizontal position per (m/s²)².
    pub maneuver_pos: f64,
}

impl FilterNoise {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.att_yaw,
            self.att_tilt,
            self.pos,
            self.vel,
            self.gyro_bias,
            self.accel_bias,
            self.geo_field,
            self.mag_bias,
            self.gnss_pos,
            self.gnss_vel_h,
            self.gnss_vel_d,
            self.mag,
            self.maneuver_pos,
        ];
        if all.iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(Error::invalid("filter noise", "standard deviations must be finite and >= 0"))
        }
    }

    pub fn to_config(&self) -> Result<NoiseConfig> {
        self.validate()?;
        let mut q = SVector::<f64, STATE_DIM>::zeros();
        // quaternion components move by half the rotation angle; the (w, z)
        // plane carries heading for level flight, (x, y) carries tilt
        let yaw = (0.5 * self.att_yaw).powi(2);
        let tilt = (0.5 * self.att_tilt).powi(2);
        q[0] = yaw;
        q[1] = tilt;
        q[2] = tilt;
        q[3] = yaw;
        let blocks = [
            (idx::POS, self.pos),
            (idx::VEL, self.vel),
            (idx::GYRO_BIAS, self.gyro_bias),
            (idx::ACCEL_BIAS, self.accel_bias),
            (idx::GEO_FIELD, self.geo_field),
            (idx::MAG_BIAS, self.mag_bias),
        ];
        for (start, std) in blocks {
            for i in 0..3 {
                q[start + i] = std * std;
            }
        }
        let r_gnss = SMatrix::<f64, 5, 5>::from_diagonal(&Vector5::new(
            self.gnss_pos.powi(2),
            self.gnss_pos.powi(2),
            self.gnss_vel_h.powi(2),
            self.gnss_vel_h.powi(2),
            self.gnss_vel_d.powi(2),
        ));
        Ok(NoiseConfig {
            q: Covariance22::from_diagonal(&q),
            r_gnss,
            r_mag: Matrix3::identity() * self.mag.powi(2),
            maneuver_pos: self.maneuver_pos.powi(2),
        })
    }
}

/// Initial one-sigma uncertainties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialUncertainty {
    pub att: f64,
    pub pos: f64,
    pub vel: f64,
    pub gyro_bias: f64,
    pub accel_bias: f64,
    pub geo_field: f64,
    pub mag_bias: f64,
}

impl Default for InitialUncertainty {
    fn default() -> Self {
        Self {
            att: 0.05,
            pos: 10.0,
            vel: 0.5,
            gyro_bias: 1e-4,
            accel_bias: 1e-3,
            geo_field: 0.02,
            mag_bias: 0.02,
        }
    }
}

impl InitialUncertainty {
    pub fn diagonal(&self) -> SVector<f64, STATE_DIM> {
        let mut d = SVector::<f64, STATE_DIM>::zeros();
        let att = (0.5 * self.att).powi(2);
        for i in 0..4 {
            d[idx::Q + i] = att;
        }
        let blocks = [
            (idx::POS, self.pos),
            (idx::VEL, self.vel),
            (idx::GYRO_BIAS, self.gyro_bias),
            (idx::ACCEL_BIAS, self.accel_bias),
            (idx::GEO_FIELD, self.geo_field),
            (idx::MAG_BIAS, self.mag_bias),
        ];
        for (start, std) in blocks {
            for i in 0..3 {
                d[start + i] = std * std;
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub noise: FilterNoise,
    pub initial: InitialUncertainty,
    /// Explicit P0 diagonal; overrides `initial` when present.
    pub p0_diagonal: Option<Vec<f64>>,
    pub init_pos_offset: Vector3<f64>,
    pub init_vel_offset: Vector3<f64>,
    pub geo_field: Vector3<f64>,
    pub gravity: f64,
    /// Keep the GNSS Kalman gain of every epoch in the trace.
    pub record_gains: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            noise: FilterNoise::default(),
            initial: InitialUncertainty::default(),
            p0_diagonal: None,
            init_pos_offset: Vector3::zeros(),
            init_vel_offset: Vector3::zeros(),
            geo_field: Vector3::new(0.33, 0.0, 0.44),
            gravity: GRAVITY,
            record_gains: false,
        }
    }
}

impl FilterConfig {
    pub fn p0(&self) -> Result<Covariance22> {
        let diag = match &self.p0_diagonal {
            Some(d) => {
                if d.len() != STATE_DIM {
                    return Err(Error::invalid("P0", format!("expected {STATE_DIM} entries, got {}", d.len())));
                }
                SVector::<f64, STATE_DIM>::from_column_slice(d)
            }
            None => self.initial.diagonal(),
        };
        if !diag.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::invalid("P0", "diagonal must be finite and non-negative"));
        }
        Ok(Covariance22::from_diagonal(&diag))
    }
}

/// Initial state from ground truth plus the configured perturbation.
pub fn init(truth0: &TrajectorySample, cfg: &FilterConfig) -> Result<(StateVector22, Covariance22)> {
    let mut x = StateVector22::zeros();
    let q = truth0.attitude;
    if (q.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::invalid("initial attitude", "quaternion is not unit norm"));
    }
    x.set_q(&q);
    x.set_pos(&(truth0.pos + cfg.init_pos_offset));
    x.set_vel(&(truth0.vel + cfg.init_vel_offset));
    x.set_geo_field(&cfg.geo_field);
    Ok((x, cfg.p0()?))
}

/// Hook applied to every GNSS measurement before it is fused.
pub trait GnssHook {
    fn apply(&mut self, epoch: usize, z: &GnssMeasurement) -> GnssMeasurement;
}

/// Running filter instance.
#[derive(Debug, Clone)]
pub struct Ekf {
    pub state: StateVector22,
    pub cov: Covariance22,
    noise: NoiseConfig,
    gravity: f64,
}

/// Magnitude of the estimated N/E acceleration implied by one IMU sample.
fn horizontal_accel(x: &StateVector22, imu: &crate::sensors::ImuSample, dt: f64, gravity: f64) -> f64 {
    let f = imu.accel - x.accel_bias() / dt;
    let a = crate::math::dcm(&x.q()) * f + Vector3::new(0.0, 0.0, gravity);
    a.xy().norm()
}

impl Ekf {
    pub fn new(truth0: &TrajectorySample, cfg: &FilterConfig) -> Result<Self> {
        let (state, cov) = init(truth0, cfg)?;
        Ok(Self {
            state,
            cov,
            noise: cfg.noise.to_config()?,
            gravity: cfg.gravity,
        })
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn predict(&mut self, imu: &crate::sensors::ImuSample, dt: f64) -> Result<()> {
        let (x, mut p) = predict(&self.state, &self.cov, imu, dt, &self.noise.q, self.gravity)?;
        if self.noise.maneuver_pos > 0.0 {
            let a = horizontal_accel(&self.state, imu, dt, self.gravity);
            let extra = self.noise.maneuver_pos * a * a * dt;
            p[(idx::POS, idx::POS)] += extra;
            p[(idx::POS + 1, idx::POS + 1)] += extra;
        }
        self.state = x;
        self.cov = p;
        Ok(())
    }

    fn finish_update(&mut self, state: StateVector22, mut cov: Covariance22) -> Result<()> {
        enforce_psd(&mut cov);
        if !state.is_finite() {
            return Err(Error::Numerical("state became non-finite after update".into()));
        }
        self.state = state;
        self.cov = cov;
        Ok(())
    }

    pub fn fuse_gnss(&mut self, z: &GnssMeasurement) -> Result<UpdateOutcome<GNSS_DIM>> {
        let h = gnss_observation();
        let zv = Vector5::new(z.pos_ne.x, z.pos_ne.y, z.vel_ned.x, z.vel_ned.y, z.vel_ned.z);
        let pred = h * self.state.0;
        let out = update(&self.state, &self.cov, &zv, &pred, &h, &self.noise.r_gnss, z.t, MeasurementSource::Gnss);
        self.finish_update(out.state, out.cov)?;
        Ok(out)
    }

    pub fn fuse_mag(&mut self, m: &MagMeasurement) -> Result<UpdateOutcome<3>> {
        let h = mag_observation(&self.state);
        let pred = mag_prediction(&self.state);
        let out = update(
            &self.state,
            &self.cov,
            &m.field_body,
            &pred,
            &h,
            &self.noise.r_mag,
            m.t,
            MeasurementSource::Mag,
        );
        self.finish_update(out.state, out.cov)?;
        Ok(out)
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterTrace {
    pub times: Vec<f64>,
    /// One estimate per IMU sample, taken after any fusion at that sample.
    pub estimates: Vec<StateVector22>,
    pub innovations: Vec<Innovation>,
    /// GNSS measurements as fused, i.e. after the hook.
    pub fused_gnss: Vec<GnssMeasurement>,
    pub gains: Vec<SMatrix<f64, STATE_DIM, GNSS_DIM>>,
}

impl FilterTrace {
    pub fn gnss_innovations(&self) -> impl Iterator<Item = &Innovation> {
        self.innovations.iter().filter(|i| i.source == MeasurementSource::Gnss)
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.estimates.iter().map(StateVector22::pos).collect()
    }
}

/// Runs the filter over a full set of streams.
pub fn run_filter(
    streams: &SensorStreams,
    truth0: &TrajectorySample,
    mut hook: Option<&mut dyn GnssHook>,
    cfg: &FilterConfig,
) -> Result<FilterTrace> {
    let n = streams.imu.len();
    if n == 0 {
        return Err(Error::invalid("streams", "no IMU samples"));
    }
    let epochs = (n - 1) / SAMPLES_PER_EPOCH + 1;
    if streams.gnss.len() != epochs || streams.mag.len() != epochs {
        return Err(Error::invalid(
            "streams",
            format!(
                "expected {epochs} GNSS/mag epochs for {n} IMU samples, got {}/{}",
                streams.gnss.len(),
                streams.mag.len()
            ),
        ));
    }

    let mut ekf = Ekf::new(truth0, cfg)?;
    let mut trace = FilterTrace {
        times: Vec::with_capacity(n),
        estimates: Vec::with_capacity(n),
        innovations: Vec::with_capacity(2 * epochs),
        fused_gnss: Vec::with_capacity(epochs),
        gains: Vec::new(),
    };

    for k in 0..n {
        if k > 0 {
            let prev = &streams.imu[k - 1];
            let dt = streams.imu[k].t - prev.t;
            ekf.predict(prev, dt)?;
        }
        if k % SAMPLES_PER_EPOCH == 0 {
            let epoch = k / SAMPLES_PER_EPOCH;
            let raw = &streams.gnss[epoch];
            let z = match hook.as_deref_mut() {
                Some(h) => h.apply(epoch, raw),
                None => *raw,
            };
            let g = ekf.fuse_gnss(&z)?;
            if cfg.record_gains {
                trace.gains.push(g.gain.unwrap_or_else(SMatrix::zeros));
            }
            trace.innovations.push(g.innovation);
            trace.fused_gnss.push(z);
            let m = ekf.fuse_mag(&streams.mag[epoch])?;
            trace.innovations.push(m.innovation);
        }
        trace.times.push(streams.imu[k].t);
        trace.estimates.push(ekf.state);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensors::SensorParams;
    use crate::trajectory::{compose, MotionSegment};

    #[test]
    fn init_from_truth() {
        let tr = compose(&[MotionSegment::straight(2.0, 1.0)]).unwrap();
        let (x, _) = init(&tr.samples[0], &FilterConfig::default()).unwrap();
        assert_eq!(x.pos(), tr.samples[0].pos);
        assert_eq!(x.vel(), tr.samples[0].vel);
        assert_eq!(x.q(), tr.samples[0].attitude);
        assert_eq!(x.gyro_bias(), Vector3::zeros());

        let cfg = FilterConfig {
            p0_diagonal: Some(vec![0.1; STATE_DIM]),
            ..FilterConfig::default()
        };
        let (_, p) = init(&tr.samples[0], &cfg).unwrap();
        assert!((p.trace() - 2.2).abs() < 1e-12);
        let bad = FilterConfig {
            p0_diagonal: Some(vec![-0.1; STATE_DIM]),
            ..FilterConfig::default()
        };
        assert!(init(&tr.samples[0], &bad).is_err());
    }

    struct Identity;
    impl GnssHook for Identity {
        fn apply(&mut self, _: usize, z: &GnssMeasurement) -> GnssMeasurement {
            *z
        }
    }

    #[test]
    fn identity_hook_matches_no_hook() {
        let tr = compose(&[MotionSegment::straight(5.0, 4.0)]).unwrap();
        let s = SensorStreams::synthesize(&tr, &SensorParams::default(), 2).unwrap();
        let cfg = FilterConfig::default();
        let a = run_filter(&s, &tr.samples[0], None, &cfg).unwrap();
        let mut id = Identity;
        let b = run_filter(&s, &tr.samples[0], Some(&mut id), &cfg).unwrap();
        assert_eq!(a.estimates, b.estimates);
        assert_eq!(a.innovations, b.innovations);
        assert_eq!(a.estimates.len(), s.imu.len());
        assert_eq!(a.innovations.len(), s.gnss.len() + s.mag.len());
    }

    #[test]
    fn mismatched_streams_rejected() {
        let tr = compose(&[MotionSegment::straight(5.0, 2.0)]).unwrap();
        let mut s = SensorStreams::synthesize(&tr, &SensorParams::default(), 2).unwrap();
        s.gnss.pop();
        assert!(run_filter(&s, &tr.samples[0], None, &FilterConfig::default()).is_err());
    }
}
