//! Residual-based detectors over GNSS innovations.
//!
//! The chi-square test is exact. `nlc_lite` and `ltw_lite` are simplified
//! stand-ins for published UAV detectors: a CUSUM on the normalized innovation
//! magnitude and a sliding-window mean of the chi-square statistic.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ekf::{Innovation, MeasurementSource};
use crate::{Error, Result};

/// χ²(5) at 95 %.
pub const DEFAULT_TAU: f64 = 11.1;

/// `rᵀ S⁻¹ r`.
pub fn chi_square_stat(innov: &Innovation) -> Result<f64> {
    chi_square(&innov.r, &innov.s)
}

pub fn chi_square(r: &DVector<f64>, s: &DMatrix<f64>) -> Result<f64> {
    if s.nrows() != r.len() || s.ncols() != r.len() {
        return Err(Error::invalid("chi-square", "residual and covariance dimensions differ"));
    }
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("innovation covariance is not positive definite".into()))?;
    let v = chol.solve(r);
    Ok(r.dot(&v).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NlcConfig {
    /// Per-epoch drift subtracted from √χ².
    pub drift: f64,
    pub threshold: f64,
}

impl Default for NlcConfig {
    fn default() -> Self {
        Self { drift: 3.0, threshold: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LtwConfig {
    pub window: usize,
    pub threshold: f64,
}

impl Default for LtwConfig {
    fn default() -> Self {
        Self { window: 5, threshold: 8.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub tau: f64,
    pub nlc: NlcConfig,
    pub ltw: LtwConfig,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            nlc: NlcConfig::default(),
            ltw: LtwConfig::default(),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::invalid("detector", "tau must be > 0"));
        }
        if self.ltw.window == 0 {
            return Err(Error::invalid("detector", "LTW window must be >= 1"));
        }
        if self.nlc.drift.is_nan() || self.nlc.threshold.is_nan() || self.ltw.threshold.is_nan() {
            return Err(Error::invalid("detector", "thresholds must not be NaN"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub t: f64,
    pub statistic: f64,
    pub flagged: bool,
}

/// Chi-square statistic of each usable GNSS innovation, `(t, χ²)`. Faulted
/// or singular epochs are skipped.
pub fn gnss_chi_series(innovations: &[Innovation]) -> Vec<(f64, f64)> {
    innovations
        .iter()
        .filter(|i| i.source == MeasurementSource::Gnss && !i.fault)
        .filter_map(|i| chi_square_stat(i).ok().map(|c| (i.t, c)))
        .collect()
}

pub fn chi_square_test(chi: &[(f64, f64)], tau: f64) -> Vec<DetectionRecord> {
    chi.iter()
        .map(|&(t, c)| DetectionRecord {
            t,
            statistic: c,
            flagged: c > tau,
        })
        .collect()
}

pub fn nlc_lite(chi: &[(f64, f64)], cfg: &NlcConfig) -> Vec<DetectionRecord> {
    let mut s = 0.0f64;
    chi.iter()
        .map(|&(t, c)| {
            s = (s + c.sqrt() - cfg.drift).max(0.0);
            DetectionRecord {
                t,
                statistic: s,
                flagged: s > cfg.threshold,
            }
        })
        .collect()
}

pub fn ltw_lite(chi: &[(f64, f64)], cfg: &LtwConfig) -> Vec<DetectionRecord> {
    let w = cfg.window.max(1);
    let mut window = VecDeque::with_capacity(w);
    chi.iter()
        .map(|&(t, c)| {
            window.push_back(c);
            if window.len() > w {
                window.pop_front();
            }
            let mean = window.iter().sum::<f64>() / window.len() as f64;
            DetectionRecord {
                t,
                statistic: mean,
                flagged: mean > cfg.threshold,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub detected: bool,
    pub latency: Option<f64>,
    pub peak_statistic: f64,
    pub flagged_fraction: f64,
}

/// Summary relative to an attack window `[start, start + duration]`. With no
/// window, the whole run counts and latency is measured from the first record.
pub fn summarize(records: &[DetectionRecord], window: Option<(f64, f64)>) -> DetectionReport {
    let peak = records.iter().map(|r| r.statistic).fold(0.0, f64::max);
    let (start, end) = window.unwrap_or((
        records.first().map_or(0.0, |r| r.t),
        records.last().map_or(0.0, |r| r.t),
    ));
    let in_window: Vec<_> = records.iter().filter(|r| r.t >= start && r.t <= end + 1e-9).collect();
    let first = in_window.iter().find(|r| r.flagged);
    let flagged = in_window.iter().filter(|r| r.flagged).count();
    DetectionReport {
        detected: first.is_some(),
        latency: first.map(|r| r.t - start),
        peak_statistic: peak,
        flagged_fraction: if in_window.is_empty() {
            0.0
        } else {
            flagged as f64 / in_window.len() as f64
        },
    }
}

/// Empirical quantile (nearest rank) of a sample, used to calibrate
/// thresholds on clean runs.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p.clamp(0.0, 1.0) * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}
