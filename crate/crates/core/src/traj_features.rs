//! Trajectory features: ten statistics over each of the seven point series,
//! giving 70 named values per segment, plus min-max normalization.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureSet, FeatureVector};
use crate::ingest::Segment;
use crate::point_features::{all_series, BearingDelta, PointFeature};
use crate::{Error, Result};

pub const FEATURE_COUNT: usize = PointFeature::ALL.len() * Stat::ALL.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stat {
    Min,
    Max,
    Mean,
    Median,
    Std,
    P10,
    P25,
    P50,
    P75,
    P90,
}

impl Stat {
    pub const ALL: [Stat; 10] = [
        Stat::Min,
        Stat::Max,
        Stat::Mean,
        Stat::Median,
        Stat::Std,
        Stat::P10,
        Stat::P25,
        Stat::P50,
        Stat::P75,
        Stat::P90,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stat::Min => "min",
            Stat::Max => "max",
            Stat::Mean => "mean",
            Stat::Median => "median",
            Stat::Std => "std",
            Stat::P10 => "p10",
            Stat::P25 => "p25",
            Stat::P50 => "p50",
            Stat::P75 => "p75",
            Stat::P90 => "p90",
        }
    }
}

impl fmt::Display for Stat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn feature_name(p: PointFeature, s: Stat) -> String {
    format!("{}_{}", p.name(), s.name())
}

/// The 70 canonical names, point feature major, statistic minor.
pub fn feature_names() -> Vec<String> {
    PointFeature::ALL
        .iter()
        .flat_map(|&p| Stat::ALL.iter().map(move |&s| feature_name(p, s)))
        .collect()
}

/// Ten statistics of one series, indexed in [`Stat::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary(pub [f64; 10]);

impl Summary {
    pub fn get(&self, s: Stat) -> f64 {
        self.0[Stat::ALL.iter().position(|&x| x == s).unwrap()]
    }
}

/// Linear-interpolation quantile of sorted data at rank `q * (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    if frac == 0.0 || k + 1 >= sorted.len() {
        return sorted[k.min(sorted.len() - 1)];
    }
    let (a, b) = (sorted[k], sorted[k + 1]);
    (a + frac * (b - a)).clamp(a, b)
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Population statistics and linear-interpolation percentiles.
///
/// `p50` is the median. The mean is clamped into `[min, max]` to absorb
/// summation rounding.
pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::domain("cannot summarize an empty series"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("series contains non-finite values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let mean = (values.iter().sum::<f64>() / n).clamp(min, max);
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let median = median_sorted(&sorted);
    Ok(Summary([
        min,
        max,
        mean,
        median,
        var.sqrt(),
        quantile_sorted(&sorted, 0.10),
        quantile_sorted(&sorted, 0.25),
        median,
        quantile_sorted(&sorted, 0.75),
        quantile_sorted(&sorted, 0.90),
    ]))
}

/// Compute the 70 trajectory features of a segment.
pub fn build_feature_vector(segment: &Segment, segment_id: &str, delta: BearingDelta) -> Result<FeatureVector> {
    let series = all_series(segment.points(), delta)?;
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    for s in &series {
        values.extend_from_slice(&summarize(&s.values)?.0);
    }
    Ok(FeatureVector {
        segment_id: segment_id.to_string(),
        user_id: segment.user_id().to_string(),
        label: segment.label().to_string(),
        values,
        distance_m: Some(segment.path_length()),
    })
}

/// Feature table for a list of segments; ids are `<user>_<day>_<index>`.
pub fn build_feature_set(segments: &[Segment], delta: BearingDelta) -> Result<FeatureSet> {
    use rayon::prelude::*;
    let vectors = segments
        .par_iter()
        .enumerate()
        .map(|(i, s)| build_feature_vector(s, &format!("{}_{}_{i}", s.user_id(), s.day()), delta))
        .collect::<Result<Vec<_>>>()?;
    FeatureSet::new(feature_names(), vectors)
}

/// Per-column affine map onto `[0, 1]` fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(train: &FeatureSet) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::domain("cannot fit normalization on an empty set"));
        }
        let d = train.names.len();
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        for v in &train.vectors {
            for (j, &x) in v.values.iter().enumerate() {
                mins[j] = mins[j].min(x);
                maxs[j] = maxs[j].max(x);
            }
        }
        Ok(Self { mins, maxs })
    }

    pub fn scale(&self, j: usize, x: f64) -> f64 {
        let range = self.maxs[j] - self.mins[j];
        if range > 0.0 {
            (x - self.mins[j]) / range
        } else {
            0.0
        }
    }

    /// Values outside the fitted range map outside `[0, 1]`; no clipping.
    pub fn transform(&self, set: &FeatureSet) -> FeatureSet {
        FeatureSet {
            names: set.names.clone(),
            vectors: set
                .vectors
                .iter()
                .map(|v| FeatureVector {
                    values: v.values.iter().enumerate().map(|(j, &x)| self.scale(j, x)).collect(),
                    ..v.clone()
                })
                .collect(),
        }
    }
}

/// Fit on `train` and apply to both sets.
pub fn minmax_normalize(train: &FeatureSet, apply_to: &FeatureSet) -> Result<(FeatureSet, FeatureSet, MinMaxScaler)> {
    let scaler = MinMaxScaler::fit(train)?;
    Ok((scaler.transform(train), scaler.transform(apply_to), scaler))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{TrajectoryPoint, TransportMode};
    use crate::geo::EARTH_RADIUS_M;

    #[test]
    fn summary_examples() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        let s = summarize(&v).unwrap();
        assert_eq!(s.get(Stat::Mean), 5.5);
        assert_eq!(s.get(Stat::Median), 5.5);
        assert!((s.get(Stat::P25) - 3.25).abs() < 1e-12);
        assert!((s.get(Stat::P90) - 9.1).abs() < 1e-12);

        let c = summarize(&[0.1; 7]).unwrap();
        for stat in Stat::ALL {
            let expect = if stat == Stat::Std { 0.0 } else { 0.1 };
            assert_eq!(c.get(stat), expect, "{stat}");
        }

        let two = summarize(&[2.0, 4.0]).unwrap();
        assert_eq!((two.get(Stat::Mean), two.get(Stat::Std), two.get(Stat::P50)), (3.0, 1.0, 3.0));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn seventy_canonical_names() {
        let names = feature_names();
        assert_eq!(names.len(), 70);
        assert_eq!(names[0], "duration_min");
        assert!(names.contains(&"speed_p90".to_string()));
        assert_eq!(names[69], "bearing_rate_rate_p90");
    }

    fn track(step_lon_deg: f64, dt: i64, n: usize) -> Segment {
        let pts = (0..n)
            .map(|i| TrajectoryPoint::new(step_lon_deg * i as f64, 0.0, 1_224_720_000 + dt * i as i64).unwrap())
            .collect();
        Segment::new("u", TransportMode::Car, pts).unwrap()
    }

    #[test]
    fn feature_vector_of_uniform_track() {
        let step = (10.0 / EARTH_RADIUS_M).to_degrees();
        let fv = build_feature_vector(&track(step, 2, 20), "s", BearingDelta::Raw).unwrap();
        assert_eq!(fv.values.len(), 70);
        let set = FeatureSet::new(feature_names(), vec![fv]).unwrap();
        let get = |n: &str| set.vectors[0].values[set.index_of(n).unwrap()];
        for n in ["speed_mean", "speed_min", "speed_max"] {
            assert!((get(n) - 5.0).abs() < 1e-9, "{n}");
        }
        assert!((get("bearing_mean") - 90.0).abs() < 1e-9);
    }

    #[test]
    fn stationary_segment_has_zero_kinematics() {
        let fv = build_feature_vector(&track(0.0, 1, 12), "s", BearingDelta::Raw).unwrap();
        let names = feature_names();
        for (n, v) in names.iter().zip(&fv.values) {
            if n.starts_with("speed") || n.starts_with("acceleration") || n.starts_with("jerk") {
                assert_eq!(*v, 0.0, "{n}");
            }
        }
    }

    #[test]
    fn minmax_examples() {
        let mk = |col: &[f64]| {
            FeatureSet::new(
                vec!["x".into()],
                col.iter()
                    .map(|&x| FeatureVector {
                        segment_id: String::new(),
                        user_id: String::new(),
                        label: String::new(),
                        values: vec![x],
                        distance_m: None,
                    })
                    .collect(),
            )
            .unwrap()
        };
        let (tr, te, _) = minmax_normalize(&mk(&[2.0, 4.0, 6.0]), &mk(&[8.0])).unwrap();
        assert_eq!(tr.column(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(te.column(0), vec![1.5]);
        let (tr, te, _) = minmax_normalize(&mk(&[3.0, 3.0]), &mk(&[7.0])).unwrap();
        assert_eq!(tr.column(0), vec![0.0, 0.0]);
        assert_eq!(te.column(0), vec![0.0]);
        assert!(MinMaxScaler::fit(&mk(&[])).is_err());
    }
}
