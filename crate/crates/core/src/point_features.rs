//! Per-point kinematic series: duration, speed, acceleration, jerk, bearing,
//! bearing rate and rate of the bearing rate.
//!
//! Every series has one value per point. Pairwise quantities are attached to
//! the later point of the pair and the first value copies the second, so
//! `speed[i] = dist(i-1, i) / (t[i] - t[i-1])` and `speed[0] = speed[1]`.
//! The two exceptions follow their forward definitions: `duration[i]` and
//! `bearing[i]` describe the step from `i` to `i + 1`, and their last value
//! copies the one before it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geo::{compass_bearing, haversine_distance};
use crate::ingest::TrajectoryPoint;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFeature {
    Duration,
    Speed,
    Acceleration,
    Jerk,
    Bearing,
    BearingRate,
    BearingRateRate,
}

impl PointFeature {
    /// Canonical order used for feature vectors.
    pub const ALL: [PointFeature; 7] = [
        PointFeature::Duration,
        PointFeature::Speed,
        PointFeature::Acceleration,
        PointFeature::Jerk,
        PointFeature::Bearing,
        PointFeature::BearingRate,
        PointFeature::BearingRateRate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PointFeature::Duration => "duration",
            PointFeature::Speed => "speed",
            PointFeature::Acceleration => "acceleration",
            PointFeature::Jerk => "jerk",
            PointFeature::Bearing => "bearing",
            PointFeature::BearingRate => "bearing_rate",
            PointFeature::BearingRateRate => "bearing_rate_rate",
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            PointFeature::Duration => "s",
            PointFeature::Speed => "m/s",
            PointFeature::Acceleration => "m/s^2",
            PointFeature::Jerk => "m/s^3",
            PointFeature::Bearing => "deg",
            PointFeature::BearingRate => "deg/s",
            PointFeature::BearingRateRate => "deg/s^2",
        }
    }
}

impl fmt::Display for PointFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PointFeature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PointFeature::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown point feature `{s}`")))
    }
}

/// How consecutive bearings are differenced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BearingDelta {
    /// `B[i+1] - B[i]` as is, so 350 -> 10 is -340.
    #[default]
    Raw,
    /// Difference mapped into `(-180, 180]`, so 350 -> 10 is +20.
    Wrapped,
}

impl BearingDelta {
    fn apply(self, from: f64, to: f64) -> f64 {
        let d = to - from;
        match self {
            BearingDelta::Raw => d,
            BearingDelta::Wrapped => {
                let w = d.rem_euclid(360.0);
                if w > 180.0 {
                    w - 360.0
                } else {
                    w
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFeatureSeries {
    pub feature: PointFeature,
    pub values: Vec<f64>,
}

fn require_pairs(points: &[TrajectoryPoint]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::domain("point series need at least two points"));
    }
    Ok(())
}

/// Time between each point and the next, seconds.
fn gaps(points: &[TrajectoryPoint]) -> Vec<f64> {
    points
        .windows(2)
        .map(|w| (w[1].timestamp - w[0].timestamp) as f64)
        .collect()
}

/// Backward rate of change: `out[i] = (v[i] - v[i-1]) / gaps[i-1]`, with
/// `out[0] = out[1]`. `gaps` has one element fewer than `values`.
pub fn rate_of_change(values: &[f64], gaps: &[f64]) -> Vec<f64> {
    rate_with(values, gaps, |a, b| b - a)
}

fn rate_with(values: &[f64], gaps: &[f64], delta: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    debug_assert_eq!(values.len(), gaps.len() + 1);
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    for i in 1..values.len() {
        out.push(delta(values[i - 1], values[i]) / gaps[i - 1]);
    }
    if out.len() > 1 {
        out[0] = out[1];
    }
    out
}

fn forward_pad(mut v: Vec<f64>) -> Vec<f64> {
    if let Some(&last) = v.last() {
        v.push(last);
    }
    v
}

pub fn duration_series(points: &[TrajectoryPoint]) -> Result<PointFeatureSeries> {
    require_pairs(points)?;
    Ok(PointFeatureSeries {
        feature: PointFeature::Duration,
        values: forward_pad(gaps(points)),
    })
}

fn speeds(points: &[TrajectoryPoint], gaps: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len());
    out.push(0.0);
    for (w, dt) in points.windows(2).zip(gaps) {
        out.push(haversine_distance(w[0].coord, w[1].coord) / dt);
    }
    out[0] = out[1];
    out
}

pub fn speed_series(points: &[TrajectoryPoint]) -> Result<PointFeatureSeries> {
    require_pairs(points)?;
    let g = gaps(points);
    Ok(PointFeatureSeries {
        feature: PointFeature::Speed,
        values: speeds(points, &g),
    })
}

pub fn acceleration_series(points: &[TrajectoryPoint]) -> Result<PointFeatureSeries> {
    Ok(all_series(points, BearingDelta::Raw)?.swap_remove(2))
}

pub fn jerk_series(points: &[TrajectoryPoint]) -> Result<PointFeatureSeries> {
    Ok(all_series(points, BearingDelta::Raw)?.swap_remove(3))
}

fn bearings(points: &[TrajectoryPoint]) -> Vec<f64> {
    forward_pad(
        points
            .windows(2)
            .map(|w| compass_bearing(w[0].coord, w[1].coord))
            .collect(),
    )
}

pub fn bearing_series(points: &[TrajectoryPoint]) -> Result<PointFeatureSeries> {
    require_pairs(points)?;
    Ok(PointFeatureSeries {
        feature: PointFeature::Bearing,
        values: bearings(points),
    })
}

pub fn bearing_rate_series(points: &[TrajectoryPoint], delta: BearingDelta) -> Result<PointFeatureSeries> {
    Ok(all_series(points, delta)?.swap_remove(5))
}

pub fn bearing_rate_rate_series(points: &[TrajectoryPoint], delta: BearingDelta) -> Result<PointFeatureSeries> {
    Ok(all_series(points, delta)?.swap_remove(6))
}

/// All seven series in [`PointFeature::ALL`] order.
pub fn all_series(points: &[TrajectoryPoint], delta: BearingDelta) -> Result<Vec<PointFeatureSeries>> {
    require_pairs(points)?;
    let g = gaps(points);
    let duration = forward_pad(g.clone());
    let speed = speeds(points, &g);
    let acceleration = rate_of_change(&speed, &g);
    let jerk = rate_of_change(&acceleration, &g);
    let bearing = bearings(points);
    let bearing_rate = rate_with(&bearing, &g, |a, b| delta.apply(a, b));
    let bearing_rate_rate = rate_of_change(&bearing_rate, &g);

    let out: Vec<PointFeatureSeries> = PointFeature::ALL
        .into_iter()
        .zip([duration, speed, acceleration, jerk, bearing, bearing_rate, bearing_rate_rate])
        .map(|(feature, values)| PointFeatureSeries { feature, values })
        .collect();
    if let Some(bad) = out.iter().find(|s| s.values.iter().any(|v| !v.is_finite())) {
        return Err(Error::domain(format!("non-finite {} value", bad.feature)));
    }
    Ok(out)
}
