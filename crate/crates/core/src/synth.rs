//! Seeded synthetic data: feature tables with known structure and a small
//! GeoLife-layout dataset whose modes are separable by speed.

use std::fs;
use std::path::Path;

use chrono::DateTime;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{FeatureSet, FeatureVector};
use crate::geo::EARTH_RADIUS_M;
use crate::ingest::{write_plt, TrajectoryPoint};
use crate::rng;
use crate::traj_features::feature_names;
use crate::Result;

fn row(i: usize, user: String, label: &str, values: Vec<f64>) -> FeatureVector {
    FeatureVector {
        segment_id: format!("s{i}"),
        user_id: user,
        label: label.to_string(),
        values,
        distance_m: None,
    }
}

fn names(prefix: &str, d: usize) -> Vec<String> {
    (0..d).map(|j| format!("{prefix}{j}")).collect()
}

/// Two classes split on `f0` with a clear margin (`a` below 0.4, `b` above
/// 0.6); remaining features are uniform noise. Users cycle over ten ids.
pub fn separable_blobs(n: usize, n_features: usize, seed: u64) -> FeatureSet {
    let mut r = rng::stream(seed, 1);
    let vectors = (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { "a" } else { "b" };
            let base = if label == "a" { 0.0 } else { 0.6 };
            let mut values = vec![base + 0.4 * r.random::<f64>()];
            values.extend((1..n_features).map(|_| r.random::<f64>()));
            row(i, format!("u{}", i % 10), label, values)
        })
        .collect();
    FeatureSet::new(names("f", n_features), vectors).expect("consistent widths")
}

/// Uniform features with two balanced labels assigned independently of them.
pub fn shuffled_labels(n: usize, n_features: usize, seed: u64) -> FeatureSet {
    let mut r = rng::stream(seed, 2);
    let mut labels: Vec<&str> = (0..n).map(|i| if i % 2 == 0 { "a" } else { "b" }).collect();
    labels.shuffle(&mut r);
    let vectors = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let values = (0..n_features).map(|_| r.random::<f64>()).collect();
            row(i, format!("u{}", i % 10), l, values)
        })
        .collect();
    FeatureSet::new(names("f", n_features), vectors).expect("consistent widths")
}

/// `n_signal` informative features plus `n_noise` uniform ones. The label is
/// the bit pattern of `signal_j > 0.5`, so every signal feature carries one
/// independent bit and no subset of them determines the label alone.
pub fn signal_and_noise(n: usize, n_signal: usize, n_noise: usize, seed: u64) -> FeatureSet {
    let mut r = rng::stream(seed, 3);
    let mut cols = names("signal_", n_signal);
    cols.extend(names("noise_", n_noise));
    let vectors = (0..n)
        .map(|i| {
            let values: Vec<f64> = (0..n_signal + n_noise).map(|_| r.random::<f64>()).collect();
            let label: String = values[..n_signal].iter().map(|&v| if v > 0.5 { '1' } else { '0' }).collect();
            row(i, format!("u{}", i % 10), &label, values)
        })
        .collect();
    FeatureSet::new(cols, vectors).expect("consistent widths")
}

/// Features over the canonical 70 names where every user shifts every
/// feature by a user-specific constant much larger than the within-user
/// spread. Labels are two balanced classes unrelated to the features.
pub fn user_biased(n_users: usize, per_user: usize, seed: u64) -> FeatureSet {
    let mut r = rng::stream(seed, 4);
    let names = feature_names();
    let offset = Normal::new(0.0, 5.0).unwrap();
    let spread = Normal::new(0.0, 1.0).unwrap();
    let mut vectors = Vec::with_capacity(n_users * per_user);
    for u in 0..n_users {
        let shifts: Vec<f64> = (0..names.len()).map(|_| offset.sample(&mut r)).collect();
        for s in 0..per_user {
            let values = shifts.iter().map(|m| m + spread.sample(&mut r)).collect();
            let i = vectors.len();
            vectors.push(row(i, format!("user{u:03}"), if s % 2 == 0 { "a" } else { "b" }, values));
        }
    }
    FeatureSet::new(names, vectors).expect("consistent widths")
}

/// Modes of the mini dataset with their nominal speeds in m/s.
pub const MINI_MODES: [(&str, f64); 4] = [("walk", 1.3), ("bike", 4.0), ("bus", 8.5), ("car", 15.0)];

/// Point reached from `(lon, lat)` after `dist` meters on `bearing` degrees.
fn destination(lon: f64, lat: f64, bearing: f64, dist: f64) -> (f64, f64) {
    let (phi1, lambda1, theta) = (lat.to_radians(), lon.to_radians(), bearing.to_radians());
    let delta = dist / EARTH_RADIUS_M;
    let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * theta.cos()).asin();
    let lambda2 =
        lambda1 + (theta.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * phi2.sin());
    (lambda2.to_degrees(), phi2.to_degrees())
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// A track at roughly `speed` m/s: 2-5 s sampling, gently wandering heading,
/// speed within 8% of nominal. Coordinates are rounded to six decimals.
pub fn mode_track(r: &mut ChaCha8Rng, speed: f64, start: i64, n_points: usize, origin: (f64, f64)) -> Vec<TrajectoryPoint> {
    let (mut lon, mut lat) = origin;
    let mut heading: f64 = r.random_range(0.0..360.0);
    let mut t = start;
    let mut out = Vec::with_capacity(n_points);
    for i in 0..n_points {
        if i > 0 {
            let dt = r.random_range(2..=5);
            let v = speed * r.random_range(0.92..1.08);
            heading = (heading + r.random_range(-10.0..10.0)).rem_euclid(360.0);
            (lon, lat) = destination(lon, lat, heading, v * dt as f64);
            t += dt;
        }
        out.push(TrajectoryPoint::new(round6(lon), round6(lat), t).expect("coordinates stay near origin"));
    }
    out
}

/// Write a GeoLife-layout tree under `root/Data`: `users` users, `days`
/// days each, one labeled trip per mode per day.
pub fn write_mini_geolife(root: &Path, users: usize, days: usize, seed: u64) -> Result<()> {
    let day0 = 1_207_008_000; // 2008-04-01T00:00:00Z
    for u in 0..users {
        let mut r = rng::stream(seed, 100 + u as u64);
        let dir = root.join("Data").join(format!("{u:03}"));
        fs::create_dir_all(dir.join("Trajectory"))?;
        let mut labels = String::from("Start Time\tEnd Time\tTransportation Mode\n");
        for d in 0..days {
            let mut t = day0 + 86_400 * (d as i64 + 3 * u as i64) + 7 * 3600 + r.random_range(0..1800);
            let mut day_points = Vec::new();
            for (mode, speed) in MINI_MODES {
                let n = r.random_range(40..80);
                let origin = (116.3 + r.random_range(-0.05..0.05), 39.9 + r.random_range(-0.05..0.05));
                let trip = mode_track(&mut r, speed, t, n, origin);
                let (first, last) = (trip[0].timestamp, trip[n - 1].timestamp);
                labels.push_str(&format!("{}\t{}\t{mode}\n", label_time(first), label_time(last)));
                t = last + 600;
                day_points.extend(trip);
            }
            let name = DateTime::from_timestamp(day_points[0].timestamp, 0)
                .expect("in range")
                .format("%Y%m%d%H%M%S");
            fs::write(dir.join("Trajectory").join(format!("{name}.plt")), write_plt(&day_points))?;
        }
        fs::write(dir.join("labels.txt"), labels)?;
    }
    Ok(())
}

fn label_time(ts: i64) -> String {
    DateTime::from_timestamp(ts, 0).expect("in range").format("%Y/%m/%d %H:%M:%S").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{haversine_distance, GeoCoordinate};
    use crate::ingest::ingest_dataset;

    #[test]
    fn destination_moves_the_requested_distance() {
        let (lon, lat) = destination(116.3, 39.9, 37.0, 1234.5);
        let d = haversine_distance(GeoCoordinate::new(116.3, 39.9).unwrap(), GeoCoordinate::new(lon, lat).unwrap());
        assert!((d - 1234.5).abs() < 1e-6);
    }

    #[test]
    fn generators_are_seeded() {
        assert_eq!(separable_blobs(20, 3, 1), separable_blobs(20, 3, 1));
        assert_ne!(separable_blobs(20, 3, 1), separable_blobs(20, 3, 2));
        let s = signal_and_noise(50, 3, 7, 0);
        assert_eq!(s.names.len(), 10);
        assert!(s.vectors.iter().all(|v| v.label.len() == 3));
        let u = user_biased(4, 5, 0);
        assert_eq!((u.len(), u.names.len()), (20, 70));
        let null = shuffled_labels(40, 2, 0);
        assert_eq!(null.labels().iter().filter(|l| **l == "a").count(), 20);
    }

    #[test]
    fn mini_dataset_ingests_into_one_segment_per_trip() {
        let dir = std::env::temp_dir().join(format!("trajmode-mini-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        write_mini_geolife(&dir, 2, 2, 7).unwrap();
        let (segs, report) = ingest_dataset(&dir).unwrap();
        fs::remove_dir_all(&dir).unwrap();
        assert_eq!(segs.len(), 2 * 2 * MINI_MODES.len());
        assert_eq!(report.unlabeled_points, 0);
        assert_eq!(report.malformed_lines, 0);
    }
}
