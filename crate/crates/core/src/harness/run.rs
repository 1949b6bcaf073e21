//! Single runs and seed ensembles.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::attacks::{AttackHook, SsdStep};
use crate::detectors::{chi_square_test, gnss_chi_series, ltw_lite, nlc_lite, summarize, DetectionReport};
use crate::ekf::{run_filter, FilterTrace, GnssHook};
use crate::metrics::MetricReport;
use crate::parallel::map_seeds;
use crate::sensors::{epoch_indices, SensorStreams};
use crate::trajectory::Trajectory;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detections {
    pub chi_square: DetectionReport,
    pub nlc: DetectionReport,
    pub ltw: DetectionReport,
}

/// Per-epoch trace row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub t: f64,
    pub true_n: f64,
    pub true_e: f64,
    pub est_n: f64,
    pub est_e: f64,
    pub chi2: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub scenario: String,
    pub attack: String,
    pub seed: u64,
    /// `(t, χ²)` per usable GNSS epoch.
    pub chi: Vec<(f64, f64)>,
    pub detection: Detections,
    pub metrics: MetricReport,
    pub epochs: Vec<EpochRow>,
    #[serde(skip)]
    pub ssd_log: Vec<SsdStep>,
    #[serde(skip)]
    pub trace: Option<FilterTrace>,
}

impl RunResult {
    pub fn chi_max(&self) -> f64 {
        self.metrics.chi_max
    }

    /// Largest χ² among epochs in `[from, to)`.
    pub fn chi_max_between(&self, from: f64, to: f64) -> f64 {
        self.chi
            .iter()
            .filter(|(t, _)| *t >= from - 1e-9 && *t < to - 1e-9)
            .map(|(_, c)| *c)
            .fold(0.0, f64::max)
    }

    /// First epoch time at or after `from` whose χ² exceeds `tau`.
    pub fn first_exceedance(&self, from: f64, tau: f64) -> Option<f64> {
        self.chi.iter().find(|(t, c)| *t >= from - 1e-9 && *c > tau).map(|(t, _)| *t)
    }

    pub fn estimated_positions(&self) -> Option<Vec<Vector3<f64>>> {
        self.trace.as_ref().map(FilterTrace::positions)
    }
}

/// Options that do not change results, only what is retained.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub keep_trace: bool,
}

pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<RunResult> {
    run_scenario_with(cfg, seed, RunOptions { keep_trace: true })
}

pub fn run_scenario_with(cfg: &ScenarioConfig, seed: u64, opts: RunOptions) -> Result<RunResult> {
    run_inner(cfg, seed, opts).map_err(|e| Error::Scenario {
        scenario: cfg.name.clone(),
        seed,
        source: Box::new(e),
    })
}

fn run_inner(cfg: &ScenarioConfig, seed: u64, opts: RunOptions) -> Result<RunResult> {
    let traj = cfg.trajectory.build()?;
    run_on(cfg, &traj, seed, opts)
}

/// Runs on a pre-built trajectory (must match `cfg.trajectory`).
pub(crate) fn run_on(cfg: &ScenarioConfig, traj: &Trajectory, seed: u64, opts: RunOptions) -> Result<RunResult> {
    let streams = SensorStreams::synthesize(traj, &cfg.sensors, seed)?;
    let mut hook = if cfg.attack.is_none() {
        None
    } else {
        Some(AttackHook::new(cfg.attack, traj, seed)?)
    };
    let trace = run_filter(
        &streams,
        &traj.samples[0],
        hook.as_mut().map(|h| h as &mut dyn GnssHook),
        &cfg.filter,
    )?;

    let chi = gnss_chi_series(&trace.innovations);
    let window = (!cfg.attack.is_none()).then(|| (cfg.attack.window.start, cfg.attack.window.end()));
    let detection = Detections {
        chi_square: summarize(&chi_square_test(&chi, cfg.detector.tau), window),
        nlc: summarize(&nlc_lite(&chi, &cfg.detector.nlc), window),
        ltw: summarize(&ltw_lite(&chi, &cfg.detector.ltw), window),
    };

    let est = trace.positions();
    let truth = traj.positions();
    let metrics = MetricReport::compute(&est, &truth, &traj.waypoints, detection.chi_square.peak_statistic)?;

    let chi_at = |t: f64| chi.iter().find(|(ct, _)| (ct - t).abs() < 1e-9).map(|(_, c)| *c);
    let epochs = epoch_indices(traj)
        .map(|k| EpochRow {
            t: traj.samples[k].t,
            true_n: truth[k].x,
            true_e: truth[k].y,
            est_n: est[k].x,
            est_e: est[k].y,
            chi2: chi_at(traj.samples[k].t),
        })
        .collect();

    Ok(RunResult {
        scenario: cfg.name.clone(),
        attack: cfg.attack.kind.name().to_string(),
        seed,
        chi,
        detection,
        metrics,
        epochs,
        ssd_log: hook.map(|h| h.ssd_log().to_vec()).unwrap_or_default(),
        trace: opts.keep_trace.then_some(trace),
    })
}

/// Runs every seed of `cfg.seeds` (in parallel when enabled); results are
/// in seed order.
pub fn run_ensemble(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let traj = cfg.trajectory.build()?;
    map_seeds(&cfg.seeds, |seed| {
        run_on(cfg, &traj, seed, opts).map_err(|e| Error::Scenario {
            scenario: cfg.name.clone(),
            seed,
            source: Box::new(e),
        })
    })
    .into_iter()
    .collect()
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::scenario;

    #[test]
    fn deterministic_serialization() {
        let cfg = scenario("ssd_straight").unwrap();
        let a = serde_json::to_string(&run_scenario(&cfg, 3).unwrap()).unwrap();
        let b = serde_json::to_string(&run_scenario(&cfg, 3).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn clean_run_shapes() {
        let cfg = scenario("clean_straight").unwrap();
        let r = run_scenario(&cfg, 0).unwrap();
        assert_eq!(r.chi.len(), 21);
        assert_eq!(r.epochs.len(), 21);
        assert_eq!(r.attack, "none");
        let trace = r.trace.as_ref().unwrap();
        assert_eq!(trace.estimates.len(), 20 * 160 + 1);
        assert_eq!(r.metrics.fde, *r.metrics.loc_err.last().unwrap());
        assert_eq!(r.metrics.chi_max, r.detection.chi_square.peak_statistic);
    }
}
