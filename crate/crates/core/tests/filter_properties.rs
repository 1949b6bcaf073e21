mod common;

use navspoof::ekf::{run_filter, FilterConfig};
use navspoof::harness::presets::scenario;
use navspoof::sensors::SensorStreams;

#[test]
fn covariance_psd_and_unit_quaternion_on_clean_and_attacked_runs() {
    for preset in ["clean_spiral", "ssd_u_shape", "multiplicative_straight"] {
        let s = common::walk(preset, 4, 7);
        assert!(s.max_asymmetry <= 1e-9, "{preset}: asymmetry {}", s.max_asymmetry);
        assert!(s.min_eigenvalue >= -1e-9, "{preset}: eigenvalue {}", s.min_eigenvalue);
        assert!(s.max_quat_dev <= 1e-6, "{preset}: |q| off by {}", s.max_quat_dev);
    }
}

#[test]
fn jacobian_matches_central_differences() {
    let err = common::jacobian_fd_error(11, 20);
    assert!(err <= 1e-5, "max |F - FD| = {err:e}");
}

#[test]
fn closed_form_gain_matches_dense_gain() {
    let err = common::gain_oracle_error(12, 100);
    assert!(err <= 1e-10, "max gain gap {err:e}");
}

#[test]
fn clean_filter_converges() {
    let cfg = scenario("clean_u_shape").unwrap();
    let traj = cfg.trajectory.build().unwrap();
    let mut filter = cfg.filter.clone();
    filter.init_pos_offset = nalgebra::Vector3::new(6.0, -6.0, 0.0);
    let streams = SensorStreams::synthesize(&traj, &cfg.sensors, 9).unwrap();
    let trace = run_filter(&streams, &traj.samples[0], None, &filter).unwrap();
    let err = |k: usize| {
        let d = trace.estimates[k].pos() - traj.samples[k].pos;
        d.xy().norm()
    };
    let start = err(0);
    let late = (traj.samples.len() - 160 * 10..traj.samples.len()).map(err).fold(0.0, f64::max);
    // the first estimate is taken after the t = 0 fusion
    assert!(start > 2.0, "start {start}");
    assert!(late < 1.5, "error over the last 10 s peaks at {late}");
}

#[test]
fn recorded_gains_have_one_entry_per_epoch() {
    let cfg = scenario("clean_straight").unwrap();
    let traj = cfg.trajectory.build().unwrap();
    let streams = SensorStreams::synthesize(&traj, &cfg.sensors, 1).unwrap();
    let filter = FilterConfig {
        record_gains: true,
        ..cfg.filter.clone()
    };
    let trace = run_filter(&streams, &traj.samples[0], None, &filter).unwrap();
    assert_eq!(trace.gains.len(), streams.gnss.len());
    assert!(trace.gains.iter().all(|k| k.iter().all(|v| v.is_finite())));
}
