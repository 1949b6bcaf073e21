//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use navspoof::attacks::AttackHook;
use navspoof::ekf::{
    gain_simplified_check, gnss_observation, propagate, transition_jacobian, update, Covariance22, Ekf,
    GnssHook, MeasurementSource, StateVector22, GNSS_DIM, STATE_DIM,
};
use navspoof::harness::presets::scenario;
use navspoof::math::quat_from_rotation_vector;
use navspoof::sensors::{ImuSample, SensorStreams};
use navspoof::{DT, GRAVITY, SAMPLES_PER_EPOCH};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Worst step seen while walking a filter.
#[derive(Debug, Default, Clone, Copy)]
pub struct WalkStats {
    pub steps: usize,
    pub max_asymmetry: f64,
    pub min_eigenvalue: f64,
    pub max_quat_dev: f64,
}

impl WalkStats {
    fn observe(&mut self, ekf: &Ekf) {
        let p = &ekf.cov;
        let asym = (p - p.transpose()).abs().max() / p.abs().max().max(1.0);
        let eig = SymmetricEigen::new(DMatrix::from_column_slice(STATE_DIM, STATE_DIM, p.as_slice()));
        let min_eig = eig.eigenvalues.min();
        let dev = (ekf.state.q().norm() - 1.0).abs();
        if self.steps == 0 {
            self.min_eigenvalue = min_eig;
        }
        self.steps += 1;
        self.max_asymmetry = self.max_asymmetry.max(asym);
        self.min_eigenvalue = self.min_eigenvalue.min(min_eig);
        self.max_quat_dev = self.max_quat_dev.max(dev);
    }
}

/// Runs a preset scenario through the filter by hand, inspecting the filter
/// after every predict and every update. Every `stride`-th predict is
/// inspected; updates always are.
pub fn walk(preset: &str, seed: u64, stride: usize) -> WalkStats {
    let cfg = scenario(preset).unwrap();
    let traj = cfg.trajectory.build().unwrap();
    let streams = SensorStreams::synthesize(&traj, &cfg.sensors, seed).unwrap();
    let mut hook = (!cfg.attack.is_none()).then(|| AttackHook::new(cfg.attack, &traj, seed).unwrap());
    let mut ekf = Ekf::new(&traj.samples[0], &cfg.filter).unwrap();
    let mut stats = WalkStats::default();
    for k in 0..streams.imu.len() {
        if k > 0 {
            ekf.predict(&streams.imu[k - 1], DT).unwrap();
            if k % stride == 0 {
                stats.observe(&ekf);
            }
        }
        if k % SAMPLES_PER_EPOCH == 0 {
            let e = k / SAMPLES_PER_EPOCH;
            let z = match hook.as_mut() {
                Some(h) => h.apply(e, &streams.gnss[e]),
                None => streams.gnss[e],
            };
            ekf.fuse_gnss(&z).unwrap();
            stats.observe(&ekf);
            ekf.fuse_mag(&streams.mag[e]).unwrap();
            stats.observe(&ekf);
        }
    }
    stats
}

pub fn random_state(rng: &mut impl Rng) -> StateVector22 {
    let mut x = StateVector22::zeros();
    let rv = Vector3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-3.0..3.0));
    x.set_q(&quat_from_rotation_vector(&rv));
    let v3 = |rng: &mut dyn rand::RngCore, s: f64| {
        Vector3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s))
    };
    x.set_pos(&v3(rng, 100.0));
    x.set_vel(&v3(rng, 6.0));
    x.set_gyro_bias(&v3(rng, 1e-4));
    x.set_accel_bias(&v3(rng, 1e-3));
    x.set_geo_field(&Vector3::new(0.33, 0.0, 0.44));
    x.set_mag_bias(&v3(rng, 0.01));
    x
}

pub fn random_imu(rng: &mut impl Rng) -> ImuSample {
    ImuSample {
        t: 0.0,
        gyro: Vector3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
        accel: Vector3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), -GRAVITY + rng.random_range(-1.0..1.0)),
    }
}

/// Largest entry-wise gap between the filter's transition Jacobian and a
/// central difference of the mechanization, over `cases` random points.
pub fn jacobian_fd_error(seed: u64, cases: usize) -> f64 {
    let mut rng = rng(seed);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let x = random_state(&mut rng);
        let imu = random_imu(&mut rng);
        let f = transition_jacobian(&x, &imu, DT);
        for j in 0..STATE_DIM {
            let (mut up, mut dn) = (x, x);
            up.0[j] += h;
            dn.0[j] -= h;
            let col = (propagate(&up, &imu, DT, GRAVITY).unwrap().0 - propagate(&dn, &imu, DT, GRAVITY).unwrap().0)
                / (2.0 * h);
            for i in 0..STATE_DIM {
                worst = worst.max((f[(i, j)] - col[i]).abs());
            }
        }
    }
    worst
}

/// Symmetric positive definite matrix with eigenvalues bounded away from 0.
pub fn random_spd(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&a * a.transpose() + DMatrix::identity(n, n) * 0.5) * scale
}

/// Worst gap over `cases` random instances between
/// * the closed form `I − R (P + Q + R)⁻¹` and the textbook gain
///   `(P + Q) Hᵀ (H (P + Q) Hᵀ + R)⁻¹` with `H = I`, and
/// * the filter's GNSS update gain and the same textbook gain on a random
///   22-state covariance.
pub fn gain_oracle_error(seed: u64, cases: usize) -> f64 {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let n = rng.random_range(1..=6);
        let (sp, sq, sr) = (rng.random_range(0.1..10.0), rng.random_range(0.01..1.0), rng.random_range(0.1..10.0));
        let p = random_spd(&mut rng, n, sp);
        let q = random_spd(&mut rng, n, sq);
        let r = random_spd(&mut rng, n, sr);
        let closed = gain_simplified_check(&p, &q, &r).unwrap();
        let prior = &p + &q;
        let dense = &prior * (&prior + &r).try_inverse().unwrap();
        worst = worst.max((closed - dense).abs().max());

        let big = random_spd(&mut rng, STATE_DIM, 1.0);
        let cov = Covariance22::from_column_slice(big.as_slice());
        let rg = random_spd(&mut rng, GNSS_DIM, 2.0);
        let rg = nalgebra::SMatrix::<f64, GNSS_DIM, GNSS_DIM>::from_column_slice(rg.as_slice());
        let hm = gnss_observation();
        let x = random_state(&mut rng);
        let z = hm * x.0;
        let out = update(&x, &cov, &z, &z, &hm, &rg, 0.0, MeasurementSource::Gnss);
        let k = out.gain.unwrap();
        let hd = DMatrix::from_column_slice(GNSS_DIM, STATE_DIM, hm.as_slice());
        let rd = DMatrix::from_column_slice(GNSS_DIM, GNSS_DIM, rg.as_slice());
        let oracle = &big * hd.transpose() * (&hd * &big * hd.transpose() + rd).try_inverse().unwrap();
        for i in 0..STATE_DIM {
            for j in 0..GNSS_DIM {
                worst = worst.max((k[(i, j)] - oracle[(i, j)]).abs());
            }
        }
    }
    worst
}
