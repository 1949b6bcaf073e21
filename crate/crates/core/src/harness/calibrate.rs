//! Detector threshold calibration and filter-noise tuning on clean runs.

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::run::{mean, run_ensemble, RunOptions};
use crate::attacks::AttackConfig;
use crate::detectors::{ltw_lite, nlc_lite, quantile, DetectorConfig};
use crate::ekf::FilterNoise;
use crate::Result;

/// Per-run false-alarm rate the calibrated thresholds target.
pub const TARGET_FALSE_ALARM: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub detector: DetectorConfig,
    /// Fraction of clean GNSS epochs with χ² above τ.
    pub chi_exceed_fraction: f64,
    pub runs: usize,
}

/// Sets the NLC and LTW thresholds to the `1 − far` quantile of their
/// per-run peak statistic over clean runs of `base` (attack removed).
pub fn calibrate_detectors(base: &ScenarioConfig, far: f64) -> Result<Calibration> {
    let mut clean = base.clone();
    clean.attack = AttackConfig::none();
    let runs = run_ensemble(&clean, RunOptions::default())?;
    let mut det = base.detector;
    let nlc_peaks: Vec<f64> = runs
        .iter()
        .map(|r| nlc_lite(&r.chi, &det.nlc).iter().map(|d| d.statistic).fold(0.0, f64::max))
        .collect();
    let ltw_peaks: Vec<f64> = runs
        .iter()
        .map(|r| ltw_lite(&r.chi, &det.ltw).iter().map(|d| d.statistic).fold(0.0, f64::max))
        .collect();
    det.nlc.threshold = quantile(&nlc_peaks, 1.0 - far);
    det.ltw.threshold = quantile(&ltw_peaks, 1.0 - far);
    let total: usize = runs.iter().map(|r| r.chi.len()).sum();
    let over: usize = runs
        .iter()
        .map(|r| r.chi.iter().filter(|(_, c)| *c > det.tau).count())
        .sum();
    Ok(Calibration {
        detector: det,
        chi_exceed_fraction: over as f64 / total.max(1) as f64,
        runs: runs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningRow {
    pub gnss_pos: f64,
    pub process_pos: f64,
    pub mean_ade: f64,
    pub chi_exceed_fraction: f64,
}

/// Grid search over the GNSS position measurement std and the position
/// process noise on clean runs. Rows are sorted by ascending mean ADE.
pub fn tune_noise(base: &ScenarioConfig, gnss_pos: &[f64], process_pos: &[f64]) -> Result<Vec<TuningRow>> {
    let mut rows = Vec::with_capacity(gnss_pos.len() * process_pos.len());
    for &r in gnss_pos {
        for &q in process_pos {
            let mut cfg = base.clone();
            cfg.attack = AttackConfig::none();
            cfg.filter.noise = FilterNoise {
                gnss_pos: r,
                pos: q,
                ..base.filter.noise
            };
            let runs = run_ensemble(&cfg, RunOptions::default())?;
            let total: usize = runs.iter().map(|x| x.chi.len()).sum();
            let over: usize = runs
                .iter()
                .map(|x| x.chi.iter().filter(|(_, c)| *c > cfg.detector.tau).count())
                .sum();
            rows.push(TuningRow {
                gnss_pos: r,
                process_pos: q,
                mean_ade: mean(runs.iter().map(|x| x.metrics.ade)),
                chi_exceed_fraction: over as f64 / total.max(1) as f64,
            });
        }
    }
    rows.sort_by(|a, b| a.mean_ade.total_cmp(&b.mean_ade));
    Ok(rows)
}
