//! GNSS spoofing payloads: bias, multiplicative and replacement baselines, and
//! the state-triggered SSD attack.
//!
//! SSD reads the victim's motion state once per GNSS epoch. While the victim
//! flies straight (estimated acceleration below `trigger_eps`) it adds a
//! growing position bias `F(t) = θ·e^{t/α}`; while it manoeuvres it scales the
//! north/east velocity by `G(t, a) = log₂(2 + φ·a·t)`.

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ekf::GnssHook;
use crate::sensors::{gaussian3, substream, GnssMeasurement, STREAM_ATTACK, STREAM_TRACKING};
use crate::trajectory::Trajectory;
use crate::{Error, Result, SAMPLES_PER_EPOCH};

/// Meters per degree of latitude.
pub const METERS_PER_DEGREE: f64 = 111_320.0;
/// Lower bound on the argument of `log₂` in [`ssd_velocity_factor`].
pub const LOG_ARG_FLOOR: f64 = 1.0 / 1_048_576.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackWindow {
    pub start: f64,
    pub duration: f64,
}

impl AttackWindow {
    pub fn new(start: f64, duration: f64) -> Self {
        Self { start, duration }
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    /// Half-open `[start, start + duration)`.
    pub fn contains(&self, t: f64) -> bool {
        const EPS: f64 = 1e-9;
        t >= self.start - EPS && t < self.end() - EPS
    }

    pub fn validate(&self, span: Option<f64>) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid("attack window", "duration must be > 0"));
        }
        if !(self.start.is_finite() && self.start >= 0.0) {
            return Err(Error::invalid("attack window", "start must be >= 0"));
        }
        if let Some(span) = span {
            if self.start > span {
                return Err(Error::Range {
                    what: "attack window start",
                    value: self.start,
                    lo: 0.0,
                    hi: span,
                });
            }
        }
        Ok(())
    }
}

/// How the scalar position bias `F` is spread over north and east.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BiasDirection {
    /// `F` added to both north and east.
    #[default]
    NorthEast,
    /// `F` along the observed horizontal velocity.
    AlongTrack,
    /// `F` along a fixed bearing, radians clockwise from north.
    Bearing { bearing: f64 },
}

impl BiasDirection {
    pub fn spread(&self, f: f64, vel: &Vector3<f64>) -> Vector2<f64> {
        match *self {
            BiasDirection::NorthEast => Vector2::new(f, f),
            BiasDirection::AlongTrack => {
                let h = vel.xy();
                let n = h.norm();
                if n > 1e-9 {
                    h * (f / n)
                } else {
                    Vector2::new(f, 0.0)
                }
            }
            BiasDirection::Bearing { bearing } => Vector2::new(bearing.cos(), bearing.sin()) * f,
        }
    }
}

/// When the velocity factor applies inside the nonlinear branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VelocityGate {
    /// Every nonlinear epoch, every axis.
    Always,
    /// Only on axes whose estimated acceleration is positive.
    #[default]
    PositiveOnly,
}

/// Which SSD branches are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SsdMode {
    /// Position bias when linear, velocity factor when nonlinear.
    #[default]
    Combined,
    PositionOnly,
    VelocityOnly,
    /// Velocity bias following the position schedule, `F(t)` in m/s, when
    /// linear; position bias when nonlinear. `G` is 1 at zero acceleration, so
    /// the linear branch needs an additive payload to do anything.
    Swapped,
}

/// Where the attacker reads the victim's velocity from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MotionObservation {
    /// The (unspoofed) GNSS velocity the victim receives.
    GnssFeed,
    /// Independent tracking of the true velocity with Gaussian noise, m/s.
    Tracking { noise_std: f64 },
}

impl Default for MotionObservation {
    fn default() -> Self {
        MotionObservation::Tracking { noise_std: 0.005 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackParams {
    pub theta: f64,
    pub alpha: f64,
    pub phi: f64,
    pub trigger_eps: f64,
    pub direction: BiasDirection,
    pub gate: VelocityGate,
    pub mode: SsdMode,
    /// Keep the accumulated position offset while the velocity branch runs,
    /// and resume from it when the position branch re-activates.
    pub hold_offset: bool,
    pub observation: MotionObservation,
}

impl Default for AttackParams {
    fn default() -> Self {
        Self {
            theta: 20.0,
            alpha: 11.0,
            phi: 0.08,
            trigger_eps: 0.05,
            direction: BiasDirection::NorthEast,
            gate: VelocityGate::PositiveOnly,
            mode: SsdMode::Combined,
            hold_offset: true,
            observation: MotionObservation::default(),
        }
    }
}

impl AttackParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::invalid("ssd", format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.trigger_eps.is_finite() && self.trigger_eps > 0.0) {
            return Err(Error::invalid("ssd", "trigger_eps must be > 0"));
        }
        if !(self.theta.is_finite() && self.phi.is_finite()) {
            return Err(Error::invalid("ssd", "theta and phi must be finite"));
        }
        if let MotionObservation::Tracking { noise_std } = self.observation {
            if !(noise_std.is_finite() && noise_std >= 0.0) {
                return Err(Error::invalid("ssd", "tracking noise must be >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BiasUnit {
    #[default]
    Meters,
    /// Degrees of latitude/longitude, converted at `reference_latitude`.
    Degrees,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BiasTarget {
    #[default]
    Position,
    /// North/east velocity, m/s (`unit` must be meters).
    Velocity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackKind {
    #[default]
    None,
    Bias {
        low: f64,
        high: f64,
        #[serde(default)]
        unit: BiasUnit,
        #[serde(default)]
        target: BiasTarget,
        /// Degrees, for the degree→meter conversion.
        #[serde(default)]
        reference_latitude: f64,
    },
    Multiplicative {
        factor: f64,
    },
    Replacement {
        pos_ne: [f64; 2],
        vel_ned: [f64; 3],
    },
    Ssd(AttackParams),
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::Bias { .. } => "bias",
            AttackKind::Multiplicative { .. } => "multiplicative",
            AttackKind::Replacement { .. } => "replacement",
            AttackKind::Ssd(p) => match p.mode {
                SsdMode::Combined => "ssd",
                SsdMode::PositionOnly => "ssd_position",
                SsdMode::VelocityOnly => "ssd_velocity",
                SsdMode::Swapped => "ssd_swapped",
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AttackKind::None => Ok(()),
            AttackKind::Bias {
                low,
                high,
                unit,
                target,
                reference_latitude,
            } => {
                if !(low.is_finite() && high.is_finite()) || low > high {
                    return Err(Error::invalid("bias attack", format!("need finite low <= high, got [{low}, {high})")));
                }
                if *target == BiasTarget::Velocity && *unit == BiasUnit::Degrees {
                    return Err(Error::invalid("bias attack", "velocity bias must be given in meters"));
                }
                if !(reference_latitude.abs() < 90.0) {
                    return Err(Error::invalid("bias attack", "reference latitude must be in (-90, 90)"));
                }
                Ok(())
            }
            AttackKind::Multiplicative { factor } => {
                if factor.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("multiplicative attack", "factor must be finite"))
                }
            }
            AttackKind::Replacement { pos_ne, vel_ned } => {
                if pos_ne.iter().chain(vel_ned).all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::invalid("replacement attack", "fake measurement must be finite"))
                }
            }
            AttackKind::Ssd(p) => p.validate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    #[serde(flatten)]
    pub kind: AttackKind,
    pub window: AttackWindow,
}

impl AttackConfig {
    pub fn none() -> Self {
        Self {
            kind: AttackKind::None,
            window: AttackWindow::new(0.0, 1.0),
        }
    }

    pub fn is_none(&self) -> bool {
        self.kind == AttackKind::None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedVictimState {
    pub t: f64,
    pub vel: Vector3<f64>,
    pub prev_vel: Vector3<f64>,
    pub epoch_dt: f64,
}

/// Per-component uniform bias on position, deterministic in `(seed, epoch)`.
pub fn bias_attack(z: &GnssMeasurement, low: f64, high: f64, seed: u64, epoch: usize) -> Result<GnssMeasurement> {
    let d = bias_draw(low, high, seed, epoch)?;
    let mut out = *z;
    out.pos_ne += d;
    Ok(out)
}

fn bias_draw(low: f64, high: f64, seed: u64, epoch: usize) -> Result<Vector2<f64>> {
    if !(low.is_finite() && high.is_finite()) || low > high {
        return Err(Error::invalid("bias attack", format!("need finite low <= high, got [{low}, {high})")));
    }
    if low == high {
        return Ok(Vector2::new(low, low));
    }
    let mut rng = substream(seed, STREAM_ATTACK);
    // two f64 draws consume four 32-bit words
    rng.set_word_pos(epoch as u128 * 4);
    let n = rng.random_range(low..high);
    let e = rng.random_range(low..high);
    Ok(Vector2::new(n, e))
}

/// Degree bounds to meters: north uses the meridian scale, east the
/// parallel scale at `lat_deg`.
pub fn degrees_to_meters(deg: f64, lat_deg: f64) -> Vector2<f64> {
    Vector2::new(deg * METERS_PER_DEGREE, deg * METERS_PER_DEGREE * lat_deg.to_radians().cos())
}

/// Scales the north/east position about `origin`.
pub fn multiplicative_attack(z: &GnssMeasurement, factor: f64, origin: &Vector2<f64>) -> Result<GnssMeasurement> {
    if !factor.is_finite() {
        return Err(Error::invalid("multiplicative attack", "factor must be finite"));
    }
    let mut out = *z;
    out.pos_ne = origin + (z.pos_ne - origin) * factor;
    Ok(out)
}

pub fn replacement_attack(z: &GnssMeasurement, fake: &GnssMeasurement) -> GnssMeasurement {
    GnssMeasurement { t: z.t, ..*fake }
}

/// `F(t; θ, α) = θ·e^{t/α}`.
pub fn ssd_position_bias(t_i: f64, theta: f64, alpha: f64) -> f64 {
    theta * (t_i / alpha).exp()
}

/// `G(t, a; φ) = log₂(2 + φ·a·t)`, argument floored at 2⁻²⁰.
pub fn ssd_velocity_factor(t_i: f64, a_dim: f64, phi: f64) -> f64 {
    (2.0 + phi * a_dim * t_i).max(LOG_ARG_FLOOR).log2()
}

pub fn ssd_accel_estimate(obs: &ObservedVictimState) -> Result<Vector3<f64>> {
    if !(obs.epoch_dt > 0.0) {
        return Err(Error::invalid("ssd", format!("epoch_dt must be > 0, got {}", obs.epoch_dt)));
    }
    Ok((obs.vel - obs.prev_vel) / obs.epoch_dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Linear,
    Nonlinear,
}

pub fn classify(accel: &Vector3<f64>, trigger_eps: f64) -> Branch {
    if accel.norm() <= trigger_eps {
        Branch::Linear
    } else {
        Branch::Nonlinear
    }
}

fn velocity_factors(t_i: f64, a: &Vector3<f64>, params: &AttackParams) -> (f64, f64) {
    let g = |a: f64| match params.gate {
        VelocityGate::PositiveOnly if a <= 0.0 => 1.0,
        _ => ssd_velocity_factor(t_i, a, params.phi),
    };
    (g(a.x), g(a.y))
}

/// One epoch of the canonical (combined) SSD rule with no held offset.
/// Linear: position shifted by `F`; nonlinear: N/E velocity scaled by `G`.
pub fn ssd_apply(
    z: &GnssMeasurement,
    obs: &ObservedVictimState,
    t_attack: f64,
    params: &AttackParams,
) -> Result<GnssMeasurement> {
    let a = ssd_accel_estimate(obs)?;
    let mut out = *z;
    match classify(&a, params.trigger_eps) {
        Branch::Linear => {
            let f = ssd_position_bias(t_attack, params.theta, params.alpha);
            out.pos_ne += params.direction.spread(f, &obs.vel);
        }
        Branch::Nonlinear => {
            let (gn, ge) = velocity_factors(t_attack, &a, params);
            out.vel_ned.x *= gn;
            out.vel_ned.y *= ge;
        }
    }
    Ok(out)
}

/// What the SSD attack did at one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsdStep {
    pub t: f64,
    pub branch: Branch,
    pub t_branch: f64,
    pub pos_offset: Vector2<f64>,
    pub vel_scale: Vector2<f64>,
    pub vel_offset: Vector2<f64>,
}

/// Stateful SSD attacker: branch clocks and the held position offset.
#[derive(Debug, Clone)]
pub struct SsdAttack {
    params: AttackParams,
    prev_vel: Option<Vector3<f64>>,
    branch: Option<Branch>,
    branch_start: f64,
    held: Vector2<f64>,
    current: Vector2<f64>,
    pub log: Vec<SsdStep>,
}

impl SsdAttack {
    pub fn new(params: AttackParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            prev_vel: None,
            branch: None,
            branch_start: 0.0,
            held: Vector2::zeros(),
            current: Vector2::zeros(),
            log: Vec::new(),
        })
    }

    /// Feeds one observed velocity; outside the window it only updates the
    /// attacker's memory of the previous velocity.
    pub fn step(&mut self, z: &GnssMeasurement, observed_vel: Vector3<f64>, active: bool) -> GnssMeasurement {
        let prev = self.prev_vel.replace(observed_vel);
        if !active {
            return *z;
        }
        let p = &self.params;
        let a = match prev {
            Some(prev) => (observed_vel - prev) / (SAMPLES_PER_EPOCH as f64 * crate::DT),
            None => Vector3::zeros(),
        };
        let branch = classify(&a, p.trigger_eps);
        if self.branch != Some(branch) {
            self.held = if p.hold_offset { self.current } else { Vector2::zeros() };
            self.branch = Some(branch);
            self.branch_start = z.t;
        }
        let t_i = z.t - self.branch_start;
        let mut out = *z;
        let mut step = SsdStep {
            t: z.t,
            branch,
            t_branch: t_i,
            pos_offset: Vector2::zeros(),
            vel_scale: Vector2::new(1.0, 1.0),
            vel_offset: Vector2::zeros(),
        };

        let position = |held: Vector2<f64>| held + p.direction.spread(ssd_position_bias(t_i, p.theta, p.alpha), &observed_vel);
        let hold = if p.hold_offset { self.held } else { Vector2::zeros() };
        let (offset, scale, vel_offset) = match (p.mode, branch) {
            (SsdMode::Combined | SsdMode::PositionOnly, Branch::Linear) => (position(hold), (1.0, 1.0), Vector2::zeros()),
            (SsdMode::Combined | SsdMode::VelocityOnly, Branch::Nonlinear) => {
                (hold, velocity_factors(t_i, &a, p), Vector2::zeros())
            }
            (SsdMode::PositionOnly, Branch::Nonlinear) | (SsdMode::VelocityOnly, Branch::Linear) => {
                (hold, (1.0, 1.0), Vector2::zeros())
            }
            (SsdMode::Swapped, Branch::Linear) => {
                let bias = ssd_position_bias(t_i, p.theta, p.alpha);
                (hold, (1.0, 1.0), p.direction.spread(bias, &observed_vel))
            }
            (SsdMode::Swapped, Branch::Nonlinear) => (position(hold), (1.0, 1.0), Vector2::zeros()),
        };
        self.current = offset;
        out.pos_ne += offset;
        out.vel_ned.x = out.vel_ned.x * scale.0 + vel_offset.x;
        out.vel_ned.y = out.vel_ned.y * scale.1 + vel_offset.y;
        step.pos_offset = offset;
        step.vel_scale = Vector2::new(scale.0, scale.1);
        step.vel_offset = vel_offset;
        self.log.push(step);
        out
    }
}

/// GNSS hook applying a configured attack over its window.
#[derive(Debug, Clone)]
pub struct AttackHook {
    cfg: AttackConfig,
    seed: u64,
    observed: Vec<Vector3<f64>>,
    ssd: Option<SsdAttack>,
    origin: Vector2<f64>,
}

impl AttackHook {
    /// `traj` supplies the ground truth the attacker tracks.
    pub fn new(cfg: AttackConfig, traj: &Trajectory, seed: u64) -> Result<Self> {
        cfg.kind.validate()?;
        cfg.window.validate(Some(traj.duration()))?;
        let ssd = match cfg.kind {
            AttackKind::Ssd(p) => Some(SsdAttack::new(p)?),
            _ => None,
        };
        let observed = match cfg.kind {
            AttackKind::Ssd(AttackParams {
                observation: MotionObservation::Tracking { noise_std },
                ..
            }) => {
                let mut rng = substream(seed, STREAM_TRACKING);
                crate::sensors::epoch_indices(traj)
                    .map(|k| traj.samples[k].vel + gaussian3(&mut rng, noise_std))
                    .collect()
            }
            _ => Vec::new(),
        };
        Ok(Self {
            cfg,
            seed,
            observed,
            ssd,
            origin: Vector2::zeros(),
        })
    }

    pub fn ssd_log(&self) -> &[SsdStep] {
        self.ssd.as_ref().map_or(&[], |s| &s.log)
    }

    pub fn config(&self) -> &AttackConfig {
        &self.cfg
    }

    fn baseline(&self, epoch: usize, z: &GnssMeasurement) -> GnssMeasurement {
        match self.cfg.kind {
            AttackKind::None | AttackKind::Ssd(_) => *z,
            AttackKind::Bias {
                low,
                high,
                unit,
                target,
                reference_latitude,
            } => {
                let mut d = match bias_draw(low, high, self.seed, epoch) {
                    Ok(d) => d,
                    Err(_) => return *z,
                };
                if unit == BiasUnit::Degrees {
                    d = d.component_mul(&degrees_to_meters(1.0, reference_latitude));
                }
                let mut out = *z;
                match target {
                    BiasTarget::Position => out.pos_ne += d,
                    BiasTarget::Velocity => {
                        out.vel_ned.x += d.x;
                        out.vel_ned.y += d.y;
                    }
                }
                out
            }
            AttackKind::Multiplicative { factor } => multiplicative_attack(z, factor, &self.origin).unwrap_or(*z),
            AttackKind::Replacement { pos_ne, vel_ned } => replacement_attack(
                z,
                &GnssMeasurement {
                    t: z.t,
                    pos_ne: Vector2::from(pos_ne),
                    vel_ned: Vector3::from(vel_ned),
                },
            ),
        }
    }
}

impl GnssHook for AttackHook {
    fn apply(&mut self, epoch: usize, z: &GnssMeasurement) -> GnssMeasurement {
        let active = self.cfg.window.contains(z.t);
        if let Some(ssd) = self.ssd.as_mut() {
            let vel = self.observed.get(epoch).copied().unwrap_or(z.vel_ned);
            return ssd.step(z, vel, active);
        }
        if active {
            self.baseline(epoch, z)
        } else {
            *z
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{compose, MotionSegment, TurnDirection};
    use proptest::prelude::*;

    fn z(t: f64) -> GnssMeasurement {
        GnssMeasurement {
            t,
            pos_ne: Vector2::new(10.0, -4.0),
            vel_ned: Vector3::new(3.0, 4.0, 0.5),
        }
    }

    fn obs(vel: Vector3<f64>, prev: Vector3<f64>) -> ObservedVictimState {
        ObservedVictimState {
            t: 0.0,
            vel,
            prev_vel: prev,
            epoch_dt: 1.0,
        }
    }

    #[test]
    fn baseline_examples() {
        let m = z(1.0);
        assert_eq!(bias_attack(&m, 0.0, 0.0, 1, 3).unwrap(), m);
        let b = bias_attack(&m, 5.0, 5.0, 1, 3).unwrap();
        assert_eq!(b.pos_ne, m.pos_ne + Vector2::new(5.0, 5.0));
        assert_eq!(b.vel_ned, m.vel_ned);
        assert!(bias_attack(&m, 2.0, 1.0, 1, 3).is_err());
        assert_eq!(bias_attack(&m, 0.0, 9.0, 4, 7).unwrap(), bias_attack(&m, 0.0, 9.0, 4, 7).unwrap());
        assert_ne!(bias_attack(&m, 0.0, 9.0, 4, 7).unwrap(), bias_attack(&m, 0.0, 9.0, 4, 8).unwrap());

        let o = Vector2::zeros();
        assert_eq!(multiplicative_attack(&m, 1.0, &o).unwrap(), m);
        assert_eq!(multiplicative_attack(&m, 1.5, &o).unwrap().pos_ne, Vector2::new(15.0, -6.0));
        assert!(multiplicative_attack(&m, f64::NAN, &o).is_err());

        assert_eq!(replacement_attack(&m, &m), m);
        let fake = GnssMeasurement { t: 99.0, ..z(0.0) };
        assert_eq!(replacement_attack(&m, &fake).t, 1.0);
    }

    #[test]
    fn degree_payload_in_meters() {
        let m = degrees_to_meters(0.0005, 0.0);
        assert!((m.x - 55.66).abs() < 1e-9);
        assert!((m.y - 55.66).abs() < 1e-9);
        assert!(degrees_to_meters(0.0005, 60.0).y < 27.9);
    }

    #[test]
    fn f_and_g_values() {
        assert_eq!(ssd_position_bias(0.0, 20.0, 11.0), 20.0);
        assert!((ssd_position_bias(11.0, 20.0, 11.0) - 54.365_636_569).abs() < 1e-8);
        assert!((ssd_position_bias(22.0, 20.0, 11.0) - 147.781_121_978).abs() < 1e-8);
        assert_eq!(ssd_velocity_factor(123.0, 0.0, 0.08), 1.0);
        assert!((ssd_velocity_factor(10.0, 2.5, 0.08) - 2.0).abs() < 1e-15);
        // φ·a·t = -1.9375
        assert!((ssd_velocity_factor(1.0, -1.9375, 1.0) + 4.0).abs() < 1e-12);
        assert_eq!(ssd_velocity_factor(10.0, -100.0, 1.0), -20.0);
    }

    #[test]
    fn accel_estimate() {
        let v = Vector3::new(2.0, 0.0, 0.0);
        assert_eq!(ssd_accel_estimate(&obs(v, v)).unwrap(), Vector3::zeros());
        assert_eq!(ssd_accel_estimate(&obs(v, Vector3::zeros())).unwrap(), v);
        let mut bad = obs(v, v);
        bad.epoch_dt = 0.0;
        assert!(ssd_accel_estimate(&bad).is_err());
    }

    #[test]
    fn accel_estimate_on_arc() {
        let tr = compose(&[MotionSegment::arc(2.0, 10.0, TurnDirection::Right, 20.0)]).unwrap();
        let k = 10 * SAMPLES_PER_EPOCH;
        let o = ObservedVictimState {
            t: 10.0,
            vel: tr.samples[k + 80].vel,
            prev_vel: tr.samples[k - 80].vel,
            epoch_dt: 1.0,
        };
        let est = ssd_accel_estimate(&o).unwrap();
        let truth = crate::trajectory::acceleration_at(&tr, 10.0).unwrap();
        assert!((est - truth).norm() <= 0.05 * truth.norm());
    }

    #[test]
    fn apply_examples() {
        let p = AttackParams::default();
        let v = Vector3::new(5.0, 0.0, 0.0);
        let m = z(0.0);
        let out = ssd_apply(&m, &obs(v, v), 0.0, &p).unwrap();
        assert_eq!(out.pos_ne, m.pos_ne + Vector2::new(20.0, 20.0));
        assert_eq!(out.vel_ned, m.vel_ned);

        let out = ssd_apply(&m, &obs(Vector3::new(0.4, 0.0, 0.0), Vector3::zeros()), 10.0, &p).unwrap();
        assert_eq!(out.pos_ne, m.pos_ne);
        assert!((out.vel_ned.x / m.vel_ned.x - 2.32f64.log2()).abs() < 1e-12);
        assert_eq!(out.vel_ned.y, m.vel_ned.y);
        assert_eq!(out.vel_ned.z, m.vel_ned.z);
    }

    #[test]
    fn positive_gate_leaves_decelerating_axis() {
        let p = AttackParams {
            gate: VelocityGate::PositiveOnly,
            ..AttackParams::default()
        };
        let m = z(0.0);
        let out = ssd_apply(&m, &obs(Vector3::new(-1.0, 1.0, 0.0), Vector3::zeros()), 5.0, &p).unwrap();
        assert_eq!(out.vel_ned.x, m.vel_ned.x);
        assert!(out.vel_ned.y > m.vel_ned.y);
    }

    #[test]
    fn clock_resets_on_branch_switch() {
        let mut s = SsdAttack::new(AttackParams::default()).unwrap();
        let still = Vector3::new(5.0, 0.0, 0.0);
        for k in 0..3 {
            s.step(&z(k as f64), still, true);
        }
        assert_eq!(s.log[2].t_branch, 2.0);
        s.step(&z(3.0), Vector3::new(5.0, 1.0, 0.0), true);
        assert_eq!(s.log[3].branch, Branch::Nonlinear);
        assert_eq!(s.log[3].t_branch, 0.0);
        // held offset carried through the nonlinear epoch
        assert_eq!(s.log[3].pos_offset, s.log[2].pos_offset);
        s.step(&z(4.0), Vector3::new(5.0, 1.0, 0.0), true);
        assert_eq!(s.log[4].branch, Branch::Linear);
        assert_eq!(s.log[4].t_branch, 0.0);
        let f0 = Vector2::new(20.0, 20.0);
        assert!((s.log[4].pos_offset - (s.log[2].pos_offset + f0)).norm() < 1e-12);
    }

    #[test]
    fn hook_is_identity_outside_window() {
        let tr = compose(&[MotionSegment::straight(5.0, 10.0)]).unwrap();
        let cfg = AttackConfig {
            kind: AttackKind::Multiplicative { factor: 1.5 },
            window: AttackWindow::new(3.0, 2.0),
        };
        let mut hook = AttackHook::new(cfg, &tr, 1).unwrap();
        for e in 0..10 {
            let m = GnssMeasurement {
                t: e as f64,
                pos_ne: Vector2::new(5.0 * e as f64 + 1.0, 0.0),
                vel_ned: Vector3::new(5.0, 0.0, 0.0),
            };
            let out = hook.apply(e, &m);
            if (3..5).contains(&e) {
                assert_ne!(out, m);
            } else {
                assert_eq!(out, m);
            }
        }
    }

    fn arb_vel() -> impl Strategy<Value = Vector3<f64>> {
        (-5.0..5.0f64, -5.0..5.0f64, -1.0..1.0f64).prop_map(|(a, b, c)| Vector3::new(a, b, c))
    }

    proptest! {
        #[test]
        fn one_branch_per_epoch(vels in prop::collection::vec(arb_vel(), 2..30)) {
            let p = AttackParams { hold_offset: false, ..AttackParams::default() };
            let mut s = SsdAttack::new(p).unwrap();
            for (k, v) in vels.iter().enumerate() {
                let m = z(k as f64);
                let out = s.step(&m, *v, true);
                let pos_changed = out.pos_ne != m.pos_ne;
                let vel_changed = out.vel_ned != m.vel_ned;
                prop_assert!(!(pos_changed && vel_changed));
                prop_assert_eq!(out.vel_ned.z, m.vel_ned.z);
            }
        }

        #[test]
        fn f_monotone(t in 0.01..50.0f64, dt in 0.01..5.0f64, theta in 0.1..100.0f64, alpha in 1.0..30.0f64, da in 0.1..5.0f64) {
            prop_assert!(ssd_position_bias(t + dt, theta, alpha) > ssd_position_bias(t, theta, alpha));
            prop_assert!(ssd_position_bias(t, theta, alpha + da) < ssd_position_bias(t, theta, alpha));
        }

        #[test]
        fn g_unity_without_accel(t in 0.0..1e3f64, phi in -10.0..10.0f64) {
            prop_assert_eq!(ssd_velocity_factor(t, 0.0, phi), 1.0);
        }

        #[test]
        fn g_always_finite(t in 0.0..1e3f64, a in -1e3..1e3f64, phi in -10.0..10.0f64) {
            prop_assert!(ssd_velocity_factor(t, a, phi).is_finite());
        }

        #[test]
        fn hook_deterministic(seed in 0u64..1000) {
            let tr = compose(&[MotionSegment::straight(5.0, 6.0), MotionSegment::arc(5.0, 20.0, TurnDirection::Left, 6.0)]).unwrap();
            let cfg = AttackConfig {
                kind: AttackKind::Ssd(AttackParams::default()),
                window: AttackWindow::new(1.0, 10.0),
            };
            let run = || {
                let mut h = AttackHook::new(cfg, &tr, seed).unwrap();
                (0..13).map(|e| h.apply(e, &z(e as f64))).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(), run());
        }
    }
}
