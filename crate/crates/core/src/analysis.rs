//! Error-floor estimation from gap traces and log-log slope fitting.

use alloc::vec::Vec;

use crate::optimizer::RunTrace;
use crate::{Error, Result};

pub const MIN_TRACE_POINTS: usize = 100;
pub const MIN_TAIL_POINTS: usize = 10;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.1;
/// A tail whose fitted log10-gap trend moves by more than this many decades
/// end to end is reported as not plateaued.
pub const PLATEAU_DECADES: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorEstimate {
    /// Mean gap over the tail.
    pub value: f64,
    pub tail_fraction: f64,
    /// Sample standard deviation of the gap over the tail.
    pub dispersion: f64,
    /// Number of points in the tail.
    pub tail_points: usize,
    pub plateaued: bool,
}

pub fn estimate_floor(trace: &RunTrace, tail_fraction: f64) -> Result<FloorEstimate> {
    estimate_floor_from(&trace.gaps(), tail_fraction)
}

/// Floor statistics over the trailing `tail_fraction` of `gaps`.
pub fn estimate_floor_from(gaps: &[f64], tail_fraction: f64) -> Result<FloorEstimate> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::param("tail_fraction", "must lie in (0, 1]"));
    }
    if gaps.len() < MIN_TRACE_POINTS {
        return Err(Error::param("trace", "needs at least 100 recorded points"));
    }
    let count = libm::ceil(gaps.len() as f64 * tail_fraction) as usize;
    if count < MIN_TAIL_POINTS {
        return Err(Error::param("tail_fraction", "tail must cover at least 10 points"));
    }
    let tail = &gaps[gaps.len() - count..];
    let n = count as f64;
    let value = tail.iter().sum::<f64>() / n;
    let var = tail.iter().map(|g| (g - value) * (g - value)).sum::<f64>() / (n - 1.0);

    let logs: Vec<(f64, f64)> = tail
        .iter()
        .enumerate()
        .filter(|(_, g)| **g > 0.0)
        .map(|(i, g)| (i as f64, libm::log10(*g)))
        .collect();
    let plateaued = match linear_fit(&logs) {
        Some((slope, _)) => libm::fabs(slope * (n - 1.0)) <= PLATEAU_DECADES,
        None => true,
    };
    Ok(FloorEstimate {
        value: value.max(0.0),
        tail_fraction,
        dispersion: libm::sqrt(var),
        tail_points: count,
        plateaued,
    })
}

/// Least-squares `(slope, intercept)`; `None` with fewer than two distinct abscissae.
fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Least-squares slope of `log(floor)` against `log(Δ)`.
pub fn floor_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::param("points", "need at least two points"));
    }
    if points.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::param("points", "all values must be positive"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (libm::log(*x), libm::log(*y))).collect();
    linear_fit(&logs)
        .map(|(s, _)| s)
        .ok_or_else(|| Error::param("points", "noise levels must not all coincide"))
}

/// Least-squares slope of `log10(gap)` against iteration over `gaps[from..]`.
pub fn log_gap_trend(gaps: &[f64], from: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = gaps
        .iter()
        .enumerate()
        .skip(from)
        .filter(|(_, g)| **g > 0.0)
        .map(|(i, g)| (i as f64, libm::log10(*g)))
        .collect();
    linear_fit(&pts).map(|(s, _)| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn constant_trace() {
        let f = estimate_floor_from(&vec![0.25; 200], 0.1).unwrap();
        assert_eq!(f.value, 0.25);
        assert_eq!(f.dispersion, 0.0);
        assert_eq!(f.tail_points, 20);
        assert!(f.plateaued);
    }

    #[test]
    fn decreasing_trace_floor_below_tail_start() {
        let gaps: Vec<f64> = (0..500).map(|i| 0.99f64.powi(i)).collect();
        let f = estimate_floor_from(&gaps, 0.1).unwrap();
        assert!(f.value <= gaps[450]);
        // 50 steps at 0.99 is about 0.22 decades.
        assert!(f.plateaued);
        let steep: Vec<f64> = (0..500).map(|i| 0.9f64.powi(i)).collect();
        assert!(!estimate_floor_from(&steep, 0.1).unwrap().plateaued);
    }

    #[test]
    fn rejects_short_inputs() {
        assert!(estimate_floor_from(&[1.0; 99], 0.5).is_err());
        assert!(estimate_floor_from(&[1.0; 100], 0.05).is_err());
        assert!(estimate_floor_from(&[1.0; 100], 0.0).is_err());
        assert!(floor_slope(&[(1.0, 1.0)]).is_err());
        assert!(floor_slope(&[(1.0, 1.0), (0.0, 1.0)]).is_err());
        assert!(floor_slope(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = [1e-3, 1e-5, 1e-7].iter().map(|d: &f64| (*d, d.powf(4.0 / 3.0))).collect();
        assert!((floor_slope(&pts).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn trend_of_geometric_decay() {
        let gaps: Vec<f64> = (0..50).map(|i| 10f64.powi(-i)).collect();
        assert!((log_gap_trend(&gaps, 0).unwrap() + 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn slope_ignores_scale(c in 1e-3f64..1e3, p in 0.1f64..3.0) {
            let pts: Vec<(f64, f64)> = [1e-2, 1e-4, 1e-6, 1e-8].iter().map(|d: &f64| (*d, c * d.powf(p))).collect();
            prop_assert!((floor_slope(&pts).unwrap() - p).abs() < 1e-9);
        }
    }
}
