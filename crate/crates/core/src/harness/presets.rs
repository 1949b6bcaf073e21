//! Named mission paths and experiment scenarios.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;

use super::config::{ScenarioConfig, TrajectorySpec};
use crate::attacks::{AttackConfig, AttackKind, AttackParams, AttackWindow, BiasTarget, BiasUnit, SsdMode};
use crate::trajectory::{MotionSegment, TurnDirection};
use crate::{Error, Result};

/// Start of every preset path, NED meters. Kept away from the frame origin so
/// that position scaling attacks act on a non-trivial vector.
pub fn mission_origin() -> Vector3<f64> {
    Vector3::new(120.0, 90.0, -30.0)
}

pub const STRAIGHT_SPEED: f64 = 5.0;
pub const STRAIGHT_DURATION: f64 = 20.0;
pub const SPIRAL_SPEED: f64 = 4.0;
pub const SPIRAL_RADIUS: f64 = 15.0;
pub const SPIRAL_CLIMB: f64 = 0.5;
pub const SPIRAL_DURATION: f64 = 48.0;
pub const U_SPEED: f64 = 1.0;
pub const U_RADIUS: f64 = 10.0;
pub const U_DURATION: f64 = 71.0;
pub const MIXED_SPEED: f64 = 2.0;
pub const MIXED_RADIUS: f64 = 5.0;
pub const MIXED_LINEAR: f64 = 20.0;
pub const MIXED_ARC: f64 = 15.0;
pub const FINDING_SPEED: f64 = 5.0;
pub const FINDING_RADIUS: f64 = 10.0;
pub const FINDING_DURATION: f64 = 20.0;
/// Start of the 2-epoch attack window in the paired studies.
pub const FINDING_ATTACK_START: f64 = 10.0;

pub const TRAJECTORY_PRESETS: &[&str] = &[
    "straight",
    "spiral",
    "u_shape",
    "mixed",
    "finding_straight",
    "finding_circular",
    "sweep_straight",
];

pub fn trajectory_segments(name: &str) -> Result<Vec<MotionSegment>> {
    let segments = match name {
        "straight" => vec![MotionSegment::straight(STRAIGHT_SPEED, STRAIGHT_DURATION).with_heading(0.0)],
        "spiral" => vec![MotionSegment::spiral(
            SPIRAL_SPEED,
            SPIRAL_RADIUS,
            TurnDirection::Right,
            SPIRAL_CLIMB,
            SPIRAL_DURATION,
        )
        .with_heading(0.0)],
        "u_shape" => {
            let arc = PI * U_RADIUS / U_SPEED;
            let leg = (U_DURATION - arc) / 2.0;
            vec![
                MotionSegment::straight(U_SPEED, leg).with_heading(0.0),
                MotionSegment::arc(U_SPEED, U_RADIUS, TurnDirection::Right, arc),
                MotionSegment::straight(U_SPEED, leg),
            ]
        }
        "mixed" => vec![
            MotionSegment::straight(MIXED_SPEED, MIXED_LINEAR).with_heading(FRAC_PI_2),
            MotionSegment::arc(MIXED_SPEED, MIXED_RADIUS, TurnDirection::Right, MIXED_ARC),
        ],
        "finding_straight" => vec![MotionSegment::straight(FINDING_SPEED, FINDING_DURATION).with_heading(0.0)],
        "finding_circular" => vec![MotionSegment::arc(
            FINDING_SPEED,
            FINDING_RADIUS,
            TurnDirection::Right,
            FINDING_DURATION,
        )
        .with_heading(0.0)],
        "sweep_straight" => vec![MotionSegment::straight(STRAIGHT_SPEED, 30.0).with_heading(0.0)],
        other => return Err(Error::Config(format!("unknown trajectory preset `{other}`"))),
    };
    Ok(segments)
}

/// Canonical SSD parameters.
pub fn ssd_params() -> AttackParams {
    AttackParams::default()
}

pub fn ssd(mode: SsdMode, window: AttackWindow) -> AttackConfig {
    AttackConfig {
        kind: AttackKind::Ssd(AttackParams { mode, ..ssd_params() }),
        window,
    }
}

/// The bias baseline: U(0, 0.0005°) per axis.
pub fn bias_baseline(window: AttackWindow) -> AttackConfig {
    AttackConfig {
        kind: AttackKind::Bias {
            low: 0.0,
            high: 0.0005,
            unit: BiasUnit::Degrees,
            target: BiasTarget::Position,
            reference_latitude: 0.0,
        },
        window,
    }
}

pub fn multiplicative_baseline(window: AttackWindow) -> AttackConfig {
    AttackConfig {
        kind: AttackKind::Multiplicative { factor: 1.5 },
        window,
    }
}

/// Fixed additive payload used by the paired motion studies.
pub fn fixed_bias(target: BiasTarget, amount: f64, window: AttackWindow) -> AttackConfig {
    AttackConfig {
        kind: AttackKind::Bias {
            low: amount,
            high: amount,
            unit: BiasUnit::Meters,
            target,
            reference_latitude: 0.0,
        },
        window,
    }
}

pub const FINDING_POSITION_BIAS: f64 = 10.0;
pub const FINDING_VELOCITY_BIAS: f64 = 1.0;

/// Attack window of each mission path; mission windows run through the
/// final epoch.
pub fn mission_window(trajectory: &str) -> AttackWindow {
    match trajectory {
        "straight" => AttackWindow::new(5.0, 16.0),
        "spiral" => AttackWindow::new(5.0, 44.0),
        "u_shape" => AttackWindow::new(5.0, 67.0),
        "mixed" => AttackWindow::new(1.0, 35.0),
        "sweep_straight" => AttackWindow::new(5.0, 26.0),
        _ => AttackWindow::new(FINDING_ATTACK_START, 2.0),
    }
}

pub const MISSIONS: [&str; 3] = ["straight", "spiral", "u_shape"];

pub const SCENARIO_PRESETS: &[&str] = &[
    "clean_straight",
    "clean_spiral",
    "clean_u_shape",
    "clean_mixed",
    "ssd_straight",
    "ssd_spiral",
    "ssd_u_shape",
    "bias_straight",
    "bias_spiral",
    "bias_u_shape",
    "multiplicative_straight",
    "multiplicative_spiral",
    "multiplicative_u_shape",
    "finding1_straight",
    "finding1_circular",
    "finding2_velocity_straight",
    "finding2_velocity_circular",
    "finding2_position_straight",
    "finding2_position_circular",
    "ablation_baseline",
    "ablation_spa",
    "ablation_sva",
    "ablation_cca",
    "swap_mixed",
    "sweep_theta_alpha",
    "sweep_phi",
];

pub fn scenario(name: &str) -> Result<ScenarioConfig> {
    let split = |prefix: &str| name.strip_prefix(prefix).map(str::to_string);
    let mission = |traj: &str| -> Result<&'static str> {
        MISSIONS
            .iter()
            .find(|m| **m == traj)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown scenario preset `{name}`")))
    };
    let base = |traj: &str| ScenarioConfig::new(name, TrajectorySpec::preset(traj));

    if let Some(traj) = split("clean_") {
        if traj == "mixed" {
            return Ok(base("mixed"));
        }
        return Ok(base(mission(&traj)?));
    }
    if let Some(traj) = split("ssd_") {
        let t = mission(&traj)?;
        return Ok(base(t).with_attack(ssd(SsdMode::Combined, mission_window(t))));
    }
    if let Some(traj) = split("bias_") {
        let t = mission(&traj)?;
        return Ok(base(t).with_attack(bias_baseline(mission_window(t))));
    }
    if let Some(traj) = split("multiplicative_") {
        let t = mission(&traj)?;
        return Ok(base(t).with_attack(multiplicative_baseline(mission_window(t))));
    }
    let finding_window = AttackWindow::new(FINDING_ATTACK_START, 2.0);
    let cfg = match name {
        "finding1_straight" | "finding2_position_straight" => base("finding_straight")
            .with_attack(fixed_bias(BiasTarget::Position, FINDING_POSITION_BIAS, finding_window)),
        "finding1_circular" | "finding2_position_circular" => base("finding_circular")
            .with_attack(fixed_bias(BiasTarget::Position, FINDING_POSITION_BIAS, finding_window)),
        "finding2_velocity_straight" => base("finding_straight")
            .with_attack(fixed_bias(BiasTarget::Velocity, FINDING_VELOCITY_BIAS, finding_window)),
        "finding2_velocity_circular" => base("finding_circular")
            .with_attack(fixed_bias(BiasTarget::Velocity, FINDING_VELOCITY_BIAS, finding_window)),
        "ablation_baseline" => base("mixed"),
        "ablation_spa" => base("mixed").with_attack(ssd(SsdMode::PositionOnly, mission_window("mixed"))),
        "ablation_sva" => base("mixed").with_attack(ssd(SsdMode::VelocityOnly, mission_window("mixed"))),
        "ablation_cca" => base("mixed").with_attack(ssd(SsdMode::Combined, mission_window("mixed"))),
        "swap_mixed" => base("mixed").with_attack(ssd(SsdMode::Swapped, mission_window("mixed"))),
        "sweep_theta_alpha" => {
            base("sweep_straight").with_attack(ssd(SsdMode::Combined, mission_window("sweep_straight")))
        }
        // both branches fire on the mixed path, as in the θ/α sweep
        "sweep_phi" => base("mixed").with_attack(ssd(SsdMode::Combined, mission_window("mixed"))),
        _ => return Err(Error::Config(format!("unknown scenario preset `{name}`"))),
    };
    Ok(cfg)
}
