//! Noise removal: coordinate smoothing (Hampel, Savitzky-Golay), per-mode
//! speed bounds, and density-based outlier removal on one feature.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureSet;
use crate::geo::GeoCoordinate;
use crate::ingest::Segment;
use crate::{Error, Result};

/// Converts a MAD into a Gaussian-consistent standard deviation.
pub const MAD_SCALE: f64 = 1.4826;

/// Iterated passes stop here even if a pass still replaced values.
const MAX_HAMPEL_PASSES: usize = 1000;

fn median_in_place(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HampelConfig {
    pub window: usize,
    pub n_sigmas: f64,
}

impl Default for HampelConfig {
    fn default() -> Self {
        Self {
            window: 11,
            n_sigmas: 3.0,
        }
    }
}

impl HampelConfig {
    fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::config(format!("Hampel window must be odd and >= 3, got {}", self.window)));
        }
        if !(self.n_sigmas > 0.0) {
            return Err(Error::config("Hampel n_sigmas must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HampelOutput {
    pub values: Vec<f64>,
    /// Indices whose value was replaced, ascending.
    pub replaced: Vec<usize>,
    pub passes: usize,
    pub converged: bool,
}

/// One Hampel pass. Each point is compared with the median of its centered
/// window (truncated at the ends, clamped to the series length); a point more
/// than `n_sigmas * 1.4826 * MAD` away is replaced by that median. With
/// MAD = 0 any deviation at all counts.
pub fn hampel_pass(series: &[f64], cfg: HampelConfig) -> Result<HampelOutput> {
    cfg.validate()?;
    let n = series.len();
    let half = cfg.window.min(n) / 2;
    let mut values = series.to_vec();
    let mut replaced = Vec::new();
    let mut buf = Vec::with_capacity(cfg.window);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        buf.clear();
        buf.extend_from_slice(&series[lo..hi]);
        let med = median_in_place(&mut buf);
        for x in buf.iter_mut() {
            *x = (*x - med).abs();
        }
        let mad = median_in_place(&mut buf);
        if (series[i] - med).abs() > cfg.n_sigmas * MAD_SCALE * mad {
            values[i] = med;
            replaced.push(i);
        }
    }
    Ok(HampelOutput {
        values,
        replaced,
        passes: 1,
        converged: true,
    })
}

/// Hampel filter applied until a pass replaces nothing, which makes the
/// result a fixed point: filtering the output again changes nothing.
pub fn hampel_filter(series: &[f64], cfg: HampelConfig) -> Result<HampelOutput> {
    let mut current = series.to_vec();
    let mut replaced = std::collections::BTreeSet::new();
    for pass in 1..=MAX_HAMPEL_PASSES {
        let out = hampel_pass(&current, cfg)?;
        if out.replaced.is_empty() {
            return Ok(HampelOutput {
                values: current,
                replaced: replaced.into_iter().collect(),
                passes: pass,
                converged: true,
            });
        }
        replaced.extend(out.replaced);
        current = out.values;
    }
    Ok(HampelOutput {
        values: current,
        replaced: replaced.into_iter().collect(),
        passes: MAX_HAMPEL_PASSES,
        converged: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SavGolConfig {
    pub window: usize,
    pub polyorder: usize,
}

impl Default for SavGolConfig {
    fn default() -> Self {
        Self {
            window: 7,
            polyorder: 2,
        }
    }
}

/// Weights that evaluate, at offset 0, the least-squares polynomial of
/// degree `order` fitted at integer offsets `lo..=hi`.
fn savgol_weights(lo: isize, hi: isize, order: usize) -> Result<Vec<f64>> {
    let m = (hi - lo + 1) as usize;
    let scale = lo.unsigned_abs().max(hi.unsigned_abs()).max(1) as f64;
    let a = DMatrix::from_fn(m, order + 1, |r, c| ((lo + r as isize) as f64 / scale).powi(c as i32));
    let pinv = a
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::domain(format!("Savitzky-Golay fit failed: {e}")))?;
    Ok(pinv.row(0).iter().copied().collect())
}

/// Savitzky-Golay smoothing. Near the ends the window is truncated and the
/// fit order is reduced to `len - 1` where the truncated window is too short.
pub fn savitzky_golay(series: &[f64], cfg: SavGolConfig) -> Result<Vec<f64>> {
    let SavGolConfig { window, polyorder } = cfg;
    if window % 2 == 0 || polyorder >= window || window > series.len() {
        return Err(Error::config(format!(
            "Savitzky-Golay needs odd window > polyorder and window <= series length (window {window}, order {polyorder}, length {})",
            series.len()
        )));
    }
    let n = series.len() as isize;
    let half = (window / 2) as isize;
    let mut cache: HashMap<(isize, isize), Vec<f64>> = HashMap::new();
    let mut out = Vec::with_capacity(series.len());
    for i in 0..n {
        let lo = (i - half).max(0) - i;
        let hi = (i + half).min(n - 1) - i;
        let order = polyorder.min((hi - lo) as usize);
        if !cache.contains_key(&(lo, hi)) {
            cache.insert((lo, hi), savgol_weights(lo, hi, order)?);
        }
        let w = &cache[&(lo, hi)];
        let start = (i + lo) as usize;
        out.push(w.iter().zip(&series[start..]).map(|(a, b)| a * b).sum());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Smoother {
    Hampel(HampelConfig),
    SavitzkyGolay(SavGolConfig),
}

/// Smooth latitude and longitude independently. Returns the new segment and
/// the number of coordinate values the Hampel filter replaced (0 for
/// Savitzky-Golay).
pub fn smooth_segment(segment: &Segment, smoother: Smoother) -> Result<(Segment, usize)> {
    let lons: Vec<f64> = segment.points().iter().map(|p| p.coord.lon()).collect();
    let lats: Vec<f64> = segment.points().iter().map(|p| p.coord.lat()).collect();
    let (lons, lats, replaced) = match smoother {
        Smoother::Hampel(cfg) => {
            let a = hampel_filter(&lons, cfg)?;
            let b = hampel_filter(&lats, cfg)?;
            let count = a.replaced.len() + b.replaced.len();
            (a.values, b.values, count)
        }
        Smoother::SavitzkyGolay(cfg) => {
            let n = lons.len();
            let window = if cfg.window > n { n - (1 - n % 2) } else { cfg.window };
            let cfg = SavGolConfig { window, ..cfg };
            (savitzky_golay(&lons, cfg)?, savitzky_golay(&lats, cfg)?, 0)
        }
    };
    let coords = lons
        .iter()
        .zip(&lats)
        .map(|(&lon, &lat)| GeoCoordinate::new(lon, lat))
        .collect::<Result<Vec<_>>>()?;
    Ok((segment.with_coordinates(&coords)?, replaced))
}

/// Per-mode bounds on the segment mean speed (m/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBounds {
    bounds: BTreeMap<String, (f64, f64)>,
}

impl GroundTruthBounds {
    pub fn new(bounds: BTreeMap<String, (f64, f64)>) -> Result<Self> {
        if let Some((mode, _)) = bounds.iter().find(|(_, (lo, hi))| !(lo < hi)) {
            return Err(Error::config(format!("bounds for `{mode}` need lower < upper")));
        }
        Ok(Self { bounds })
    }

    /// Bounds fitted to the GeoLife mean-speed distributions.
    pub fn geolife() -> Self {
        let table = [
            ("car", 2.502, 20.629),
            ("bus", 1.278, 14.084),
            ("bike", 0.703, 5.832),
            ("taxi", 1.923, 17.214),
            ("train", 1.953, 52.957),
            ("walk", 0.379, 5.673),
        ];
        Self {
            bounds: table.iter().map(|&(m, lo, hi)| (m.to_string(), (lo, hi))).collect(),
        }
    }

    pub fn get(&self, mode: &str) -> Option<(f64, f64)> {
        self.bounds.get(mode).copied()
    }

    pub fn modes(&self) -> impl Iterator<Item = &str> {
        self.bounds.keys().map(String::as_str)
    }
}

/// Rows partitioned into kept and removed, with one reason per removed row.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: FeatureSet,
    pub removed: FeatureSet,
    pub reasons: Vec<String>,
    /// Indices (into the input) of removed rows.
    pub removed_indices: Vec<usize>,
    /// Kept rows whose label had no bounds.
    pub uncovered: usize,
}

fn partition(set: &FeatureSet, reasons: Vec<Option<String>>, uncovered: usize) -> FilterOutcome {
    let mut keep = Vec::new();
    let mut drop = Vec::new();
    let mut why = Vec::new();
    for (i, r) in reasons.into_iter().enumerate() {
        match r {
            None => keep.push(i),
            Some(r) => {
                drop.push(i);
                why.push(r);
            }
        }
    }
    FilterOutcome {
        kept: set.subset(&keep),
        removed: set.subset(&drop),
        reasons: why,
        removed_indices: drop,
        uncovered,
    }
}

/// Removal reason per row (None = keep) and the count of uncovered labels.
pub fn ground_truth_reasons(set: &FeatureSet, bounds: &GroundTruthBounds) -> Result<(Vec<Option<String>>, usize)> {
    let j = set.index_of("speed_mean")?;
    let mut uncovered = 0;
    let reasons = set
        .vectors
        .iter()
        .map(|v| {
            let speed = v.values[j];
            match bounds.get(&v.label) {
                None => {
                    uncovered += 1;
                    None
                }
                Some((lo, _)) if speed < lo => {
                    Some(format!("ground_truth: speed_mean {speed} below {} lower bound {lo}", v.label))
                }
                Some((_, hi)) if speed > hi => {
                    Some(format!("ground_truth: speed_mean {speed} above {} upper bound {hi}", v.label))
                }
                Some(_) => None,
            }
        })
        .collect();
    Ok((reasons, uncovered))
}

/// Keep a row iff `lower <= speed_mean <= upper` for its label. Rows whose
/// label has no bounds pass through and are counted in `uncovered`.
pub fn ground_truth_filter(set: &FeatureSet, bounds: &GroundTruthBounds) -> Result<FilterOutcome> {
    let (reasons, uncovered) = ground_truth_reasons(set, bounds)?;
    Ok(partition(set, reasons, uncovered))
}

/// One-dimensional DBSCAN noise mask. A point is core when at least
/// `min_pts` values (itself included) lie within `eps`; a point is noise
/// when it is neither core nor within `eps` of a core point.
pub fn dbscan_noise(values: &[f64], eps: f64, min_pts: usize) -> Result<Vec<bool>> {
    if !(eps > 0.0) {
        return Err(Error::config("DBSCAN eps must be positive"));
    }
    if min_pts < 1 {
        return Err(Error::config("DBSCAN min_pts must be at least 1"));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let n = sorted.len();

    let mut core = vec![false; n];
    let (mut lo, mut hi) = (0, 0);
    for i in 0..n {
        while sorted[i] - sorted[lo] > eps {
            lo += 1;
        }
        while hi + 1 < n && sorted[hi + 1] - sorted[i] <= eps {
            hi += 1;
        }
        core[i] = hi - lo + 1 >= min_pts;
    }
    let core_values: Vec<f64> = (0..n).filter(|&i| core[i]).map(|i| sorted[i]).collect();

    let mut noise = vec![false; values.len()];
    for (rank, &orig) in order.iter().enumerate() {
        if core[rank] {
            continue;
        }
        let x = sorted[rank];
        let at = core_values.partition_point(|&c| c < x);
        let near = [at.checked_sub(1), Some(at)]
            .into_iter()
            .flatten()
            .filter_map(|k| core_values.get(k))
            .any(|&c| (c - x).abs() <= eps);
        noise[orig] = !near;
    }
    Ok(noise)
}

/// Remove rows whose `feature` value is DBSCAN noise.
pub fn dbscan_outlier_filter(set: &FeatureSet, feature: &str, eps: f64, min_pts: usize) -> Result<FilterOutcome> {
    let j = set.index_of(feature)?;
    let noise = dbscan_noise(&set.column(j), eps, min_pts)?;
    let reasons = noise
        .into_iter()
        .map(|is_noise| is_noise.then(|| format!("dbscan: {feature} is noise (eps {eps}, min_pts {min_pts})")))
        .collect();
    Ok(partition(set, reasons, 0))
}
