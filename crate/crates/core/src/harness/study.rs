//! Parameter sweeps and the SSD ablation suite.

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::run::{mean, run_ensemble, RunOptions};
use crate::attacks::{AttackKind, AttackParams, SsdMode};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub base: ScenarioConfig,
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub alpha: f64,
    pub phi: f64,
    pub mean_ade: f64,
    pub mean_chi_max: f64,
}

fn ssd_base(cfg: &ScenarioConfig) -> Result<AttackParams> {
    match cfg.attack.kind {
        AttackKind::Ssd(p) => Ok(p),
        _ => Err(Error::Config(format!("scenario `{}` has no SSD attack to sweep", cfg.name))),
    }
}

impl SweepGrid {
    /// Grid over the given axes; empty axes take the base scenario's value.
    pub fn new(base: ScenarioConfig, theta: Vec<f64>, alpha: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let p = ssd_base(&base)?;
        let or = |v: Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v };
        Ok(Self {
            theta: or(theta, p.theta),
            alpha: or(alpha, p.alpha),
            phi: or(phi, p.phi),
            base,
        })
    }

    pub fn validate(&self) -> Result<()> {
        ssd_base(&self.base)?;
        if self.theta.is_empty() || self.alpha.is_empty() || self.phi.is_empty() {
            return Err(Error::invalid("sweep grid", "axes must be non-empty"));
        }
        Ok(())
    }

    /// Grid points in lexicographic (θ, α, φ) order.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v
        };
        let (ts, als, ps) = (sorted(&self.theta), sorted(&self.alpha), sorted(&self.phi));
        let mut out = Vec::with_capacity(ts.len() * als.len() * ps.len());
        for &t in &ts {
            for &a in &als {
                for &p in &ps {
                    out.push((t, a, p));
                }
            }
        }
        out
    }
}

pub fn sweep_parameters(grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    let base = ssd_base(&grid.base)?;
    grid.points()
        .into_iter()
        .map(|(theta, alpha, phi)| {
            let mut cfg = grid.base.clone();
            cfg.attack.kind = AttackKind::Ssd(AttackParams { theta, alpha, phi, ..base });
            let runs = run_ensemble(&cfg, RunOptions::default())?;
            Ok(SweepRow {
                theta,
                alpha,
                phi,
                mean_ade: mean(runs.iter().map(|r| r.metrics.ade)),
                mean_chi_max: mean(runs.iter().map(|r| r.metrics.chi_max)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub ade_n: f64,
    pub ade_e: f64,
    pub ade: f64,
    pub chi_max: f64,
}

pub const ABLATION_LABELS: [&str; 4] = ["Baseline", "SPA", "SVA", "CCA"];

/// Baseline (no attack), position-only, velocity-only and combined SSD on
/// the base scenario, seed-averaged.
pub fn ablation_suite(base: &ScenarioConfig) -> Result<Vec<AblationRow>> {
    let params = match base.attack.kind {
        AttackKind::Ssd(p) => p,
        _ => AttackParams::default(),
    };
    let variants = [
        None,
        Some(SsdMode::PositionOnly),
        Some(SsdMode::VelocityOnly),
        Some(SsdMode::Combined),
    ];
    ABLATION_LABELS
        .iter()
        .zip(variants)
        .map(|(label, mode)| {
            let mut cfg = base.clone();
            cfg.name = format!("{}_{}", base.name, label.to_lowercase());
            cfg.attack.kind = match mode {
                None => AttackKind::None,
                Some(mode) => AttackKind::Ssd(AttackParams { mode, ..params }),
            };
            let runs = run_ensemble(&cfg, RunOptions::default())?;
            Ok(AblationRow {
                label: label.to_string(),
                ade_n: mean(runs.iter().map(|r| r.metrics.per_axis_ade.0)),
                ade_e: mean(runs.iter().map(|r| r.metrics.per_axis_ade.1)),
                ade: mean(runs.iter().map(|r| r.metrics.ade)),
                chi_max: mean(runs.iter().map(|r| r.metrics.chi_max)),
            })
        })
        .collect()
}
