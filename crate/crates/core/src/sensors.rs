//! Synthetic IMU (160 Hz), GNSS (1 Hz) and magnetometer (1 Hz) streams.
//!
//! Every stream draws from its own ChaCha sub-stream of the run seed, so
//! perturbing one sensor's seed never changes another sensor's samples.

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::math::dcm;
use crate::trajectory::Trajectory;
use crate::{Error, Result, GRAVITY, SAMPLES_PER_EPOCH};

/// Sub-stream ids.
pub const STREAM_IMU: u64 = 1;
pub const STREAM_GNSS: u64 = 2;
pub const STREAM_MAG: u64 = 3;
pub const STREAM_TRACKING: u64 = 4;
pub const STREAM_ATTACK: u64 = 5;

/// Deterministic ChaCha sub-stream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn gaussian3(rng: &mut impl Rng, std: f64) -> Vector3<f64> {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    Vector3::new(x, y, z) * std
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t: f64,
    pub gyro: Vector3<f64>,
    pub accel: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnssMeasurement {
    pub t: f64,
    pub pos_ne: Vector2<f64>,
    pub vel_ned: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagMeasurement {
    pub t: f64,
    pub field_body: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorParams {
    pub gyro_noise_std: f64,
    pub accel_noise_std: f64,
    pub gyro_bias: Vector3<f64>,
    pub accel_bias: Vector3<f64>,
    pub gnss_pos_std: f64,
    pub gnss_vel_std: f64,
    pub mag_noise_std: f64,
    pub mag_bias: Vector3<f64>,
    pub reference_field: Vector3<f64>,
    pub gravity: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            gyro_noise_std: 0.005,
            accel_noise_std: 0.05,
            gyro_bias: Vector3::zeros(),
            accel_bias: Vector3::zeros(),
            gnss_pos_std: 0.5,
            gnss_vel_std: 0.1,
            mag_noise_std: 0.01,
            mag_bias: Vector3::zeros(),
            reference_field: Vector3::new(0.33, 0.0, 0.44),
            gravity: GRAVITY,
        }
    }
}

impl SensorParams {
    /// All noise and bias terms zeroed.
    pub fn noiseless() -> Self {
        Self {
            gyro_noise_std: 0.0,
            accel_noise_std: 0.0,
            gnss_pos_std: 0.0,
            gnss_vel_std: 0.0,
            mag_noise_std: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let stds = [
            ("gyro_noise_std", self.gyro_noise_std),
            ("accel_noise_std", self.accel_noise_std),
            ("gnss_pos_std", self.gnss_pos_std),
            ("gnss_vel_std", self.gnss_vel_std),
            ("mag_noise_std", self.mag_noise_std),
        ];
        for (name, v) in stds {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid("sensor params", format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.gravity.is_finite() && self.gravity > 0.0) {
            return Err(Error::invalid("sensor params", "gravity must be > 0"));
        }
        let vectors = [self.gyro_bias, self.accel_bias, self.mag_bias, self.reference_field];
        if vectors.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(Error::invalid("sensor params", "bias and field vectors must be finite"));
        }
        Ok(())
    }

    pub fn gravity_ned(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.gravity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorStreams {
    pub imu: Vec<ImuSample>,
    pub gnss: Vec<GnssMeasurement>,
    pub mag: Vec<MagMeasurement>,
    pub seed: u64,
}

impl SensorStreams {
    pub fn synthesize(traj: &Trajectory, params: &SensorParams, seed: u64) -> Result<Self> {
        Ok(Self {
            imu: synth_imu(traj, params, seed)?,
            gnss: synth_gnss(traj, params, seed)?,
            mag: synth_mag(traj, params, seed)?,
            seed,
        })
    }
}

fn check_traj(traj: &Trajectory) -> Result<()> {
    if traj.is_empty() {
        return Err(Error::invalid("trajectory", "no samples"));
    }
    Ok(())
}

/// Indices of samples that carry a fusion epoch (every 160th sample).
pub fn epoch_indices(traj: &Trajectory) -> impl Iterator<Item = usize> {
    (0..traj.len()).step_by(SAMPLES_PER_EPOCH)
}

pub fn synth_imu(traj: &Trajectory, params: &SensorParams, seed: u64) -> Result<Vec<ImuSample>> {
    check_traj(traj)?;
    params.validate()?;
    let mut rng = substream(seed, STREAM_IMU);
    let g = params.gravity_ned();
    Ok(traj
        .samples
        .iter()
        .map(|s| {
            let r_bn = dcm(&s.attitude).transpose();
            let rate = r_bn * Vector3::new(0.0, 0.0, s.yaw_rate);
            let gyro = rate + params.gyro_bias + gaussian3(&mut rng, params.gyro_noise_std);
            let accel = r_bn * (s.accel - g) + params.accel_bias + gaussian3(&mut rng, params.accel_noise_std);
            ImuSample { t: s.t, gyro, accel }
        })
        .collect())
}

pub fn synth_gnss(traj: &Trajectory, params: &SensorParams, seed: u64) -> Result<Vec<GnssMeasurement>> {
    check_traj(traj)?;
    params.validate()?;
    let mut rng = substream(seed, STREAM_GNSS);
    Ok(epoch_indices(traj)
        .map(|k| {
            let s = &traj.samples[k];
            let pn = gaussian3(&mut rng, params.gnss_pos_std);
            let vn = gaussian3(&mut rng, params.gnss_vel_std);
            GnssMeasurement {
                t: s.t,
                pos_ne: Vector2::new(s.pos.x + pn.x, s.pos.y + pn.y),
                vel_ned: s.vel + vn,
            }
        })
        .collect())
}

pub fn synth_mag(traj: &Trajectory, params: &SensorParams, seed: u64) -> Result<Vec<MagMeasurement>> {
    check_traj(traj)?;
    params.validate()?;
    let mut rng = substream(seed, STREAM_MAG);
    Ok(epoch_indices(traj)
        .map(|k| {
            let s = &traj.samples[k];
            let field = dcm(&s.attitude).transpose() * params.reference_field
                + params.mag_bias
                + gaussian3(&mut rng, params.mag_noise_std);
            MagMeasurement {
                t: s.t,
                field_body: field,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{build_segment, compose, MotionSegment, TrajectorySample, TurnDirection};

    fn hover(seconds: f64) -> Trajectory {
        compose(&[MotionSegment::hover(seconds)]).unwrap()
    }

    #[test]
    fn hover_specific_force_opposes_gravity() {
        let imu = synth_imu(&hover(2.0), &SensorParams::noiseless(), 1).unwrap();
        for s in &imu {
            assert!((s.accel - Vector3::new(0.0, 0.0, -GRAVITY)).norm() < 1e-12);
            assert_eq!(s.gyro, Vector3::zeros());
        }
    }

    #[test]
    fn counts_follow_fencepost() {
        let tr = compose(&[MotionSegment::straight(5.0, 20.0)]).unwrap();
        let s = SensorStreams::synthesize(&tr, &SensorParams::default(), 3).unwrap();
        assert_eq!(s.imu.len(), 160 * 20 + 1);
        assert_eq!(s.gnss.len(), 21);
        assert_eq!(s.mag.len(), 21);
        for (i, g) in s.gnss.iter().enumerate() {
            assert_eq!(g.t, s.imu[i * 160].t);
        }
    }

    #[test]
    fn noiseless_gnss_is_truth() {
        let tr = compose(&[MotionSegment::arc(2.0, 10.0, TurnDirection::Left, 5.0)]).unwrap();
        let g = synth_gnss(&tr, &SensorParams::noiseless(), 9).unwrap();
        for (m, k) in g.iter().zip(epoch_indices(&tr)) {
            let s = &tr.samples[k];
            assert_eq!(m.pos_ne, s.pos.xy());
            assert_eq!(m.vel_ned, s.vel);
        }
    }

    #[test]
    fn mag_rotation_examples() {
        let params = SensorParams {
            reference_field: Vector3::new(1.0, 0.0, 0.0),
            ..SensorParams::noiseless()
        };
        let tr = build_segment(
            &MotionSegment::hover(1.0),
            &TrajectorySample::at_rest(Vector3::zeros(), std::f64::consts::FRAC_PI_2),
        )
        .unwrap();
        let m = synth_mag(&tr, &params, 0).unwrap();
        assert!((m[0].field_body - Vector3::new(0.0, -1.0, 0.0)).norm() < 1e-12);

        let tr0 = hover(1.0);
        let m0 = synth_mag(&tr0, &params, 0).unwrap();
        assert!((m0[0].field_body - params.reference_field).norm() < 1e-15);
    }

    #[test]
    fn streams_are_independent_and_deterministic() {
        let tr = compose(&[MotionSegment::straight(5.0, 3.0)]).unwrap();
        let p = SensorParams::default();
        assert_eq!(synth_imu(&tr, &p, 4).unwrap(), synth_imu(&tr, &p, 4).unwrap());
        let a = SensorStreams::synthesize(&tr, &p, 4).unwrap();
        let gnss_other = synth_gnss(&tr, &p, 5).unwrap();
        assert_ne!(a.gnss, gnss_other);
        assert_eq!(a.imu, synth_imu(&tr, &p, 4).unwrap());
    }

    #[test]
    fn validation_rejects_negative_std() {
        let p = SensorParams {
            gnss_pos_std: -1.0,
            ..SensorParams::default()
        };
        assert!(p.validate().is_err());
    }
}
