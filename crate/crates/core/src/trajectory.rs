//! Kinematic ground truth for the mission paths.
//!
//! Trajectories are built from analytic motion segments sampled at the IMU
//! rate. Attitude follows the horizontal velocity heading with zero roll and
//! pitch, which is all the sensor synthesis needs.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::math::{quat_from_yaw, wrap_angle, Quat};
use crate::{Error, Result, DT, IMU_RATE_HZ};

/// A sample is linear when its analytic acceleration norm is at most this.
pub const LINEAR_ACCEL_TOL: f64 = 1e-6;

/// Heading mismatch tolerated between chained segments, rad.
pub const HEADING_CONTINUITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub pos: Vector3<f64>,
    pub vel: Vector3<f64>,
    pub accel: Vector3<f64>,
    /// Body-to-NED attitude, `[w, x, y, z]`.
    pub attitude: Quat,
    /// Body yaw rate (rad/s); equals the body z angular rate for level flight.
    pub yaw_rate: f64,
}

impl TrajectorySample {
    pub fn at_rest(pos: Vector3<f64>, yaw: f64) -> Self {
        Self {
            t: 0.0,
            pos,
            vel: Vector3::zeros(),
            accel: Vector3::zeros(),
            attitude: quat_from_yaw(yaw),
            yaw_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnDirection {
    /// Clockwise seen from above (yaw increasing).
    #[default]
    Right,
    Left,
}

impl TurnDirection {
    fn sign(self) -> f64 {
        match self {
            TurnDirection::Right => 1.0,
            TurnDirection::Left => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentKind {
    StraightLine,
    CircularArc {
        radius: f64,
        #[serde(default)]
        turn: TurnDirection,
    },
    Spiral {
        radius: f64,
        #[serde(default)]
        turn: TurnDirection,
        /// Upward rate, m/s.
        climb_rate: f64,
    },
    Hover,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionSegment {
    #[serde(flatten)]
    pub kind: SegmentKind,
    /// Horizontal speed, m/s.
    #[serde(default)]
    pub speed: f64,
    pub duration: f64,
    /// Initial heading (rad from north). `None` continues from the previous
    /// segment, or the start attitude for the first one.
    #[serde(default)]
    pub heading: Option<f64>,
}

impl MotionSegment {
    pub fn straight(speed: f64, duration: f64) -> Self {
        Self {
            kind: SegmentKind::StraightLine,
            speed,
            duration,
            heading: None,
        }
    }

    pub fn arc(speed: f64, radius: f64, turn: TurnDirection, duration: f64) -> Self {
        Self {
            kind: SegmentKind::CircularArc { radius, turn },
            speed,
            duration,
            heading: None,
        }
    }

    pub fn spiral(speed: f64, radius: f64, turn: TurnDirection, climb_rate: f64, duration: f64) -> Self {
        Self {
            kind: SegmentKind::Spiral {
                radius,
                turn,
                climb_rate,
            },
            speed,
            duration,
            heading: None,
        }
    }

    pub fn hover(duration: f64) -> Self {
        Self {
            kind: SegmentKind::Hover,
            speed: 0.0,
            duration,
            heading: None,
        }
    }

    pub fn with_heading(mut self, heading: f64) -> Self {
        self.heading = Some(heading);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid("segment", format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.speed.is_finite() && self.speed >= 0.0) {
            return Err(Error::invalid("segment", format!("speed must be >= 0, got {}", self.speed)));
        }
        match self.kind {
            SegmentKind::CircularArc { radius, .. } | SegmentKind::Spiral { radius, .. } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::invalid("segment", format!("radius must be > 0, got {radius}")));
                }
            }
            _ => {}
        }
        if let SegmentKind::Spiral { climb_rate, .. } = self.kind {
            if !climb_rate.is_finite() {
                return Err(Error::invalid("segment", "climb rate must be finite"));
            }
        }
        if let Some(h) = self.heading {
            if !h.is_finite() {
                return Err(Error::invalid("segment", "heading must be finite"));
            }
        }
        Ok(())
    }

    /// Number of IMU steps spanned by the segment.
    pub fn steps(&self) -> usize {
        ((self.duration * IMU_RATE_HZ as f64).round() as usize).max(1)
    }

    fn turn_rate(&self) -> f64 {
        match self.kind {
            SegmentKind::CircularArc { radius, turn } | SegmentKind::Spiral { radius, turn, .. } => {
                turn.sign() * self.speed / radius
            }
            _ => 0.0,
        }
    }

    fn climb_rate(&self) -> f64 {
        match self.kind {
            SegmentKind::Spiral { climb_rate, .. } => climb_rate,
            _ => 0.0,
        }
    }

    /// Analytic state `tau` seconds into the segment.
    fn evaluate(&self, origin: &Vector3<f64>, heading0: f64, tau: f64) -> Kinematics {
        let v = self.speed;
        let omega = self.turn_rate();
        match self.kind {
            SegmentKind::Hover => Kinematics {
                pos: *origin,
                vel: Vector3::zeros(),
                accel: Vector3::zeros(),
                yaw: heading0,
                yaw_rate: 0.0,
            },
            SegmentKind::StraightLine => {
                let dir = Vector3::new(heading0.cos(), heading0.sin(), 0.0);
                Kinematics {
                    pos: origin + dir * (v * tau),
                    vel: dir * v,
                    accel: Vector3::zeros(),
                    yaw: heading0,
                    yaw_rate: 0.0,
                }
            }
            SegmentKind::CircularArc { .. } | SegmentKind::Spiral { .. } => {
                let psi = heading0 + omega * tau;
                let (s, c) = psi.sin_cos();
                let (s0, c0) = heading0.sin_cos();
                let climb = self.climb_rate();
                let horiz = if omega == 0.0 {
                    Vector3::new(c0, s0, 0.0) * (v * tau)
                } else {
                    Vector3::new(s - s0, -(c - c0), 0.0) * (v / omega)
                };
                Kinematics {
                    pos: origin + horiz + Vector3::new(0.0, 0.0, -climb * tau),
                    vel: Vector3::new(v * c, v * s, -climb),
                    accel: Vector3::new(-s, c, 0.0) * (v * omega),
                    yaw: psi,
                    yaw_rate: omega,
                }
            }
        }
    }
}

struct Kinematics {
    pos: Vector3<f64>,
    vel: Vector3<f64>,
    accel: Vector3<f64>,
    yaw: f64,
    yaw_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionClass {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub index: usize,
    pub pos: Vector3<f64>,
}

/// Where a segment sits inside a composed trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpan {
    pub start_index: usize,
    pub end_index: usize,
    pub origin: Vector3<f64>,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub waypoints: Vec<Waypoint>,
    pub segments: Vec<MotionSegment>,
    pub spans: Vec<SegmentSpan>,
    pub classes: Vec<MotionClass>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Whole seconds covered, i.e. the number of fusion epochs minus one.
    pub fn whole_seconds(&self) -> usize {
        (self.len() - 1) / IMU_RATE_HZ
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.samples.iter().map(|s| s.pos).collect()
    }

    /// Index of the segment active at `t` (closed-left, the last segment also
    /// owns its end point).
    pub fn segment_index_at(&self, t: f64) -> Result<usize> {
        let end = self.duration();
        if !(t.is_finite() && t >= -1e-12 && t <= end + 1e-12) {
            return Err(Error::Range {
                what: "time",
                value: t,
                lo: 0.0,
                hi: end,
            });
        }
        let k = t / DT;
        for (i, span) in self.spans.iter().enumerate().rev() {
            if k + 1e-9 >= span.start_index as f64 {
                return Ok(i);
            }
        }
        Ok(0)
    }
}

fn sample_time(index: usize) -> f64 {
    index as f64 / IMU_RATE_HZ as f64
}

fn classify(accel: &Vector3<f64>) -> MotionClass {
    if accel.norm() <= LINEAR_ACCEL_TOL {
        MotionClass::Linear
    } else {
        MotionClass::Nonlinear
    }
}

fn start_heading(start: &TrajectorySample) -> f64 {
    let horiz = start.vel.xy();
    if horiz.norm() > 1e-9 {
        horiz.y.atan2(horiz.x)
    } else {
        crate::math::yaw_of(&start.attitude)
    }
}

/// Samples a single segment starting from `start` (its time is taken as 0).
pub fn build_segment(spec: &MotionSegment, start: &TrajectorySample) -> Result<Trajectory> {
    let norm = start.attitude.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("start sample", format!("attitude norm {norm} is not unit")));
    }
    let mut seg = *spec;
    if seg.heading.is_none() {
        seg.heading = Some(start_heading(start));
    }
    compose_from(&[seg], start.pos)
}

/// Chains segments end to end from the NED origin.
pub fn compose(segments: &[MotionSegment]) -> Result<Trajectory> {
    compose_from(segments, Vector3::zeros())
}

/// Chains segments end to end from `origin`.
pub fn compose_from(segments: &[MotionSegment], origin: Vector3<f64>) -> Result<Trajectory> {
    if segments.is_empty() {
        return Err(Error::invalid("trajectory", "segment list is empty"));
    }
    for s in segments {
        s.validate()?;
    }

    let total: usize = segments.iter().map(MotionSegment::steps).sum();
    let mut samples = Vec::with_capacity(total + 1);
    let mut classes = Vec::with_capacity(total + 1);
    let mut spans = Vec::with_capacity(segments.len());
    let mut waypoints = Vec::with_capacity(segments.len() + 1);

    let mut seg_origin = origin;
    let mut heading = segments[0].heading.unwrap_or(0.0);
    let mut prev_speed: Option<f64> = None;
    let mut start_index = 0usize;

    for (i, seg) in segments.iter().enumerate() {
        if let Some(h) = seg.heading {
            let moving = prev_speed.is_some_and(|v| v > 0.0) && seg.speed > 0.0;
            if i > 0 && moving && wrap_angle(h - heading).abs() > HEADING_CONTINUITY_TOL {
                return Err(Error::invalid(
                    "trajectory",
                    format!("segment {i} heading {h:.6} breaks continuity with {heading:.6}"),
                ));
            }
            heading = h;
        }
        let steps = seg.steps();
        let end_index = start_index + steps;
        spans.push(SegmentSpan {
            start_index,
            end_index,
            origin: seg_origin,
            heading,
        });
        waypoints.push(Waypoint {
            index: start_index,
            pos: seg_origin,
        });

        // the shared boundary sample belongs to the segment starting there
        for k in start_index..end_index {
            let tau = (k - start_index) as f64 * DT;
            let kin = seg.evaluate(&seg_origin, heading, tau);
            samples.push(TrajectorySample {
                t: sample_time(k),
                pos: if k == start_index { seg_origin } else { kin.pos },
                vel: kin.vel,
                accel: kin.accel,
                attitude: quat_from_yaw(kin.yaw),
                yaw_rate: kin.yaw_rate,
            });
            classes.push(classify(&kin.accel));
        }

        let end = seg.evaluate(&seg_origin, heading, steps as f64 * DT);
        seg_origin = end.pos;
        heading = wrap_angle(end.yaw);
        prev_speed = Some(seg.speed);
        start_index = end_index;

        if i + 1 == segments.len() {
            samples.push(TrajectorySample {
                t: sample_time(end_index),
                pos: end.pos,
                vel: end.vel,
                accel: end.accel,
                attitude: quat_from_yaw(end.yaw),
                yaw_rate: end.yaw_rate,
            });
            classes.push(classify(&end.accel));
            waypoints.push(Waypoint {
                index: end_index,
                pos: end.pos,
            });
        }
    }

    Ok(Trajectory {
        samples,
        waypoints,
        segments: segments.to_vec(),
        spans,
        classes,
    })
}

/// Analytic acceleration of the segment active at `t`.
pub fn acceleration_at(traj: &Trajectory, t: f64) -> Result<Vector3<f64>> {
    let i = traj.segment_index_at(t)?;
    let span = &traj.spans[i];
    let tau = (t - sample_time(span.start_index)).max(0.0);
    Ok(traj.segments[i].evaluate(&span.origin, span.heading, tau).accel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn origin() -> TrajectorySample {
        TrajectorySample::at_rest(Vector3::zeros(), 0.0)
    }

    #[test]
    fn straight_line_position() {
        let tr = build_segment(&MotionSegment::straight(2.0, 20.0), &origin()).unwrap();
        let s = &tr.samples[10 * IMU_RATE_HZ];
        assert!((s.t - 10.0).abs() < 1e-12);
        assert!((s.pos - Vector3::new(20.0, 0.0, 0.0)).norm() < 1e-9);
        assert_eq!(tr.len(), 20 * IMU_RATE_HZ + 1);
        assert_eq!(tr.waypoints.len(), 2);
    }

    #[test]
    fn quarter_arc_turns_ninety_degrees() {
        let dur = PI * 10.0 / (2.0 * 2.0);
        let tr = build_segment(&MotionSegment::arc(2.0, 10.0, TurnDirection::Right, dur), &origin()).unwrap();
        for s in &tr.samples {
            assert!((s.accel.norm() - 0.4).abs() < 1e-12);
        }
        // sampled duration is rounded to the IMU grid
        let last = tr.samples.last().unwrap();
        let expected = last.t * 2.0 / 10.0;
        assert!((crate::math::yaw_of(&last.attitude) - expected).abs() < 1e-9);
        assert!((expected - PI / 2.0).abs() < 2.0 * DT * 0.2);
    }

    #[test]
    fn invalid_segments_rejected() {
        assert!(MotionSegment::straight(1.0, 0.0).validate().is_err());
        assert!(MotionSegment::straight(-1.0, 1.0).validate().is_err());
        assert!(MotionSegment::arc(1.0, 0.0, TurnDirection::Left, 1.0).validate().is_err());
        assert!(compose(&[]).is_err());
    }

    #[test]
    fn discontinuous_heading_rejected() {
        let segs = [
            MotionSegment::straight(2.0, 5.0).with_heading(0.0),
            MotionSegment::straight(2.0, 5.0).with_heading(1.0),
        ];
        assert!(compose(&segs).is_err());
    }

    #[test]
    fn composed_ablation_path() {
        let tr = compose(&[
            MotionSegment::straight(2.0, 20.0),
            MotionSegment::arc(2.0, 10.0, TurnDirection::Right, 15.0),
        ])
        .unwrap();
        assert_eq!(tr.waypoints.len(), 3);
        assert_eq!(tr.waypoints[1].index, 20 * IMU_RATE_HZ);
        assert!((tr.samples[tr.waypoints[1].index].t - 20.0).abs() < 1e-12);
        assert_eq!(tr.classes[0], MotionClass::Linear);
        assert_eq!(tr.classes[20 * IMU_RATE_HZ], MotionClass::Nonlinear);
        assert_eq!(tr.classes[20 * IMU_RATE_HZ - 1], MotionClass::Linear);
    }

    #[test]
    fn single_segment_compose_matches_build() {
        let seg = MotionSegment::straight(3.0, 4.0).with_heading(0.3);
        let a = compose(&[seg]).unwrap();
        let b = build_segment(&seg, &TrajectorySample::at_rest(Vector3::zeros(), 0.3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn acceleration_lookup() {
        let tr = compose(&[
            MotionSegment::straight(2.0, 20.0),
            MotionSegment::arc(2.0, 10.0, TurnDirection::Right, 15.0),
        ])
        .unwrap();
        assert_eq!(acceleration_at(&tr, 5.0).unwrap(), Vector3::zeros());
        assert!((acceleration_at(&tr, 25.0).unwrap().norm() - 0.4).abs() < 1e-12);
        // closed-left: the boundary belongs to the arc
        assert!((acceleration_at(&tr, 20.0).unwrap().norm() - 0.4).abs() < 1e-12);
        assert!(acceleration_at(&tr, -1.0).is_err());
        assert!(acceleration_at(&tr, 35.5).is_err());
    }
}
