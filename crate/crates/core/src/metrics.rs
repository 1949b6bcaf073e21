//! Trajectory displacement metrics.
//!
//! All displacements are horizontal: only the north and east components of
//! the estimate are compared.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::trajectory::Waypoint;
use crate::{Error, Result};

fn check_lengths(est: &[Vector3<f64>], truth: &[Vector3<f64>]) -> Result<()> {
    if est.len() != truth.len() {
        return Err(Error::invalid(
            "metrics",
            format!("length mismatch: {} estimates vs {} truth frames", est.len(), truth.len()),
        ));
    }
    if est.is_empty() {
        return Err(Error::invalid("metrics", "empty series"));
    }
    Ok(())
}

fn horizontal(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Per-frame horizontal displacement.
pub fn loc_err(est: &[Vector3<f64>], truth: &[Vector3<f64>]) -> Result<Vec<f64>> {
    check_lengths(est, truth)?;
    Ok(est.iter().zip(truth).map(|(e, t)| horizontal(e, t)).collect())
}

/// RMSE of the per-frame displacement magnitude.
pub fn ade(est: &[Vector3<f64>], truth: &[Vector3<f64>]) -> Result<f64> {
    let err = loc_err(est, truth)?;
    Ok(rms(err.iter().copied()))
}

/// Per-axis RMSE, `(north, east)`.
pub fn per_axis_ade(est: &[Vector3<f64>], truth: &[Vector3<f64>]) -> Result<(f64, f64)> {
    check_lengths(est, truth)?;
    let n = rms(est.iter().zip(truth).map(|(e, t)| e.x - t.x));
    let e = rms(est.iter().zip(truth).map(|(e, t)| e.y - t.y));
    Ok((n, e))
}

/// Displacement at the final frame.
pub fn fde(est: &[Vector3<f64>], truth: &[Vector3<f64>]) -> Result<f64> {
    check_lengths(est, truth)?;
    Ok(horizontal(est.last().unwrap(), truth.last().unwrap()))
}

/// Mean displacement over waypoint frames.
pub fn apde(est: &[Vector3<f64>], truth: &[Vector3<f64>], waypoints: &[Waypoint]) -> Result<f64> {
    check_lengths(est, truth)?;
    if waypoints.is_empty() {
        return Err(Error::invalid("apde", "no waypoints"));
    }
    let mut sum = 0.0;
    for w in waypoints {
        if w.index >= est.len() {
            return Err(Error::Range {
                what: "waypoint index",
                value: w.index as f64,
                lo: 0.0,
                hi: (est.len() - 1) as f64,
            });
        }
        sum += horizontal(&est[w.index], &truth[w.index]);
    }
    Ok(sum / waypoints.len() as f64)
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ade: f64,
    pub fde: f64,
    pub apde: f64,
    pub loc_err: Vec<f64>,
    pub chi_max: f64,
    pub per_axis_ade: (f64, f64),
}

impl MetricReport {
    pub fn compute(
        est: &[Vector3<f64>],
        truth: &[Vector3<f64>],
        waypoints: &[Waypoint],
        chi_max: f64,
    ) -> Result<Self> {
        let loc_err = loc_err(est, truth)?;
        Ok(Self {
            ade: rms(loc_err.iter().copied()),
            fde: *loc_err.last().unwrap(),
            apde: apde(est, truth, waypoints)?,
            per_axis_ade: per_axis_ade(est, truth)?,
            loc_err,
            chi_max,
        })
    }

    pub fn peak_loc_err(&self) -> f64 {
        self.loc_err.iter().copied().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(n: f64, e: f64) -> Vector3<f64> {
        Vector3::new(n, e, 0.0)
    }

    fn wp(index: usize) -> Waypoint {
        Waypoint { index, pos: Vector3::zeros() }
    }

    #[test]
    fn basic_values() {
        let truth = vec![v(0.0, 0.0); 4];
        let est = vec![v(3.0, 4.0); 4];
        assert_eq!(ade(&truth, &truth).unwrap(), 0.0);
        assert!((ade(&est, &truth).unwrap() - 5.0).abs() < 1e-12);
        let mut last = truth.clone();
        last[3] = v(0.0, 2.0);
        assert_eq!(fde(&last, &truth).unwrap(), 2.0);
        let mut two = truth.clone();
        two[3] = v(3.0, 4.0);
        assert_eq!(apde(&two, &truth, &[wp(0), wp(3)]).unwrap(), 2.5);
        let ones = vec![v(1.0, 0.0); 4];
        assert_eq!(apde(&ones, &truth, &[wp(1)]).unwrap(), 1.0);
        assert_eq!(apde(&ones, &truth, &[wp(0), wp(1), wp(2)]).unwrap(), 1.0);
        let mut single = truth.clone();
        single[2] = v(1.0, 0.0);
        assert_eq!(loc_err(&single, &truth).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn errors() {
        let a = vec![v(0.0, 0.0); 3];
        assert!(ade(&a, &a[..2]).is_err());
        assert!(fde(&[], &[]).is_err());
        assert!(apde(&a, &a, &[wp(3)]).is_err());
        assert!(apde(&a, &a, &[]).is_err());
    }

    #[test]
    fn down_axis_is_ignored() {
        let truth = vec![Vector3::zeros(); 2];
        let est = vec![Vector3::new(0.0, 0.0, 7.0); 2];
        assert_eq!(ade(&est, &truth).unwrap(), 0.0);
    }

    fn series() -> impl Strategy<Value = (Vec<Vector3<f64>>, Vec<Vector3<f64>>)> {
        (1usize..20).prop_flat_map(|n| {
            let pt = (-50.0..50.0f64, -50.0..50.0f64, -5.0..5.0f64).prop_map(|(a, b, c)| Vector3::new(a, b, c));
            (prop::collection::vec(pt.clone(), n), prop::collection::vec(pt, n))
        })
    }

    proptest! {
        #[test]
        fn ade_bounded_by_peak((est, truth) in series()) {
            let r = MetricReport::compute(&est, &truth, &[wp(0)], 0.0).unwrap();
            prop_assert!(r.ade <= r.peak_loc_err() + 1e-12);
            prop_assert_eq!(r.fde, *r.loc_err.last().unwrap());
            prop_assert!(r.ade >= 0.0 && r.apde >= 0.0);
        }

        #[test]
        fn apde_over_all_frames_is_mean((est, truth) in series()) {
            let all: Vec<_> = (0..est.len()).map(wp).collect();
            let err = loc_err(&est, &truth).unwrap();
            let mean = err.iter().sum::<f64>() / err.len() as f64;
            prop_assert!((apde(&est, &truth, &all).unwrap() - mean).abs() < 1e-9);
        }

        #[test]
        fn translation_invariant((est, truth) in series(), dx in -1e3..1e3f64, dy in -1e3..1e3f64) {
            let off = Vector3::new(dx, dy, 0.0);
            let est2: Vec<_> = est.iter().map(|p| p + off).collect();
            let truth2: Vec<_> = truth.iter().map(|p| p + off).collect();
            prop_assert!((ade(&est, &truth).unwrap() - ade(&est2, &truth2).unwrap()).abs() < 1e-9);
            prop_assert!((fde(&est, &truth).unwrap() - fde(&est2, &truth2).unwrap()).abs() < 1e-9);
        }
    }
}
