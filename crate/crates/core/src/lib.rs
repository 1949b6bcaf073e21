//! Desk-scale IMU/GNSS integrated-navigation bench.
//!
//! The pipeline is: kinematic ground truth ([`trajectory`]) → noisy sensor
//! streams ([`sensors`]) → 22-state extended Kalman filter ([`ekf`]) with a
//! GNSS attack hook ([`attacks`]) → residual detectors ([`detectors`]) and
//! trajectory metrics ([`metrics`]). [`harness`] wires scenarios, seed
//! ensembles, sweeps and the ablation suite together.

pub mod attacks;
pub mod detectors;
pub mod ekf;
pub mod error;
pub mod harness;
pub mod math;
pub mod metrics;
pub mod parallel;
pub mod sensors;
pub mod trajectory;

pub use error::{Error, Result};

/// IMU sample rate.
pub const IMU_RATE_HZ: usize = 160;
/// GNSS / magnetometer fusion rate.
pub const GNSS_RATE_HZ: usize = 1;
/// IMU samples per fusion epoch.
pub const SAMPLES_PER_EPOCH: usize = IMU_RATE_HZ / GNSS_RATE_HZ;
/// Fixed integration step.
pub const DT: f64 = 1.0 / IMU_RATE_HZ as f64;
/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.80665;
