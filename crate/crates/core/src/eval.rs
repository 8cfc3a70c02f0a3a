//! Cross-validation under random and user-oriented fold assignment,
//! accuracy metrics, and the train/test distribution-correlation study.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::ModelConfig;
use crate::dataset::FeatureSet;
use crate::noise::{dbscan_outlier_filter, ground_truth_filter, GroundTruthBounds};
use crate::rng;
use crate::stats::{mann_whitney_u, spearman, Alternative, TestResult};
use crate::traj_features::minmax_normalize;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvMode {
    Random,
    #[serde(alias = "user")]
    UserOriented,
}

impl CvMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CvMode::Random => "random",
            CvMode::UserOriented => "user_oriented",
        }
    }
}

impl fmt::Display for CvMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(CvMode::Random),
            "user" | "user_oriented" | "user-oriented" => Ok(CvMode::UserOriented),
            other => Err(Error::config(format!("unknown cv mode `{other}` (expected random or user)"))),
        }
    }
}

/// Fold index per sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub mode: CvMode,
    pub seed: u64,
    pub folds: Vec<usize>,
}

impl FoldAssignment {
    /// Train and test row indices for fold `f`, each ascending.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.folds.len()).partition(|&i| self.folds[i] != f)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Random mode shuffles with the seed and deals round-robin. User-oriented
/// mode places users, largest first (ties by id), into the currently
/// smallest fold (ties by index); samples follow their user.
pub fn assign_folds(user_ids: &[&str], k: usize, mode: CvMode, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::config("k must be at least 2"));
    }
    let n = user_ids.len();
    let mut folds = vec![0; n];
    match mode {
        CvMode::Random => {
            if n < k {
                return Err(Error::config(format!("too few samples: {n} samples for k={k}")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng::stream(seed, 10));
            for (pos, &i) in order.iter().enumerate() {
                folds[i] = pos % k;
            }
        }
        CvMode::UserOriented => {
            let mut counts: HashMap<&str, usize> = HashMap::new();
            for u in user_ids {
                *counts.entry(u).or_default() += 1;
            }
            if counts.len() < k {
                return Err(Error::config(format!(
                    "too few users: {} distinct users for k={k}",
                    counts.len()
                )));
            }
            let mut users: Vec<(&str, usize)> = counts.into_iter().collect();
            users.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            let mut load = vec![0usize; k];
            let mut fold_of: HashMap<&str, usize> = HashMap::new();
            for (u, c) in users {
                let f = (0..k).min_by_key(|&f| (load[f], f)).unwrap();
                load[f] += c;
                fold_of.insert(u, f);
            }
            for (i, u) in user_ids.iter().enumerate() {
                folds[i] = fold_of[u];
            }
        }
    }
    Ok(FoldAssignment { k, mode, seed, folds })
}

/// Fraction of positions where `pred` equals `truth`.
pub fn accuracy_by_segment<S: AsRef<str>, T: AsRef<str>>(pred: &[S], truth: &[T]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::domain("prediction and truth lengths differ"));
    }
    if pred.is_empty() {
        return Err(Error::domain("accuracy of an empty prediction"));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p.as_ref() == t.as_ref()).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Distance-weighted accuracy: correct meters over all meters.
pub fn accuracy_by_distance<S: AsRef<str>, T: AsRef<str>>(pred: &[S], truth: &[T], lengths_m: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.len() != lengths_m.len() {
        return Err(Error::domain("prediction, truth and distance lengths differ"));
    }
    if lengths_m.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
        return Err(Error::domain("distances must be finite and non-negative"));
    }
    let total: f64 = lengths_m.iter().sum();
    if total <= 0.0 {
        return Err(Error::domain("all segment distances are zero"));
    }
    let hit: f64 = pred
        .iter()
        .zip(truth)
        .zip(lengths_m)
        .filter(|((p, t), _)| p.as_ref() == t.as_ref())
        .map(|(_, d)| d)
        .sum();
    Ok(hit / total)
}

/// Noise removal applied inside each fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum NoiseStep {
    /// Speed bounds on raw `speed_mean`. Train rows only, unless
    /// `apply_to_test` (which lets label knowledge shape the test set).
    GroundTruth { bounds: GroundTruthBounds, apply_to_test: bool },
    /// DBSCAN on the train-normalized values of one feature, train rows only.
    Dbscan { feature: String, eps: f64, min_pts: usize },
}

/// Rows are true labels, columns predictions, both in `labels` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new<S: AsRef<str>, T: AsRef<str>>(labels: Vec<String>, pred: &[S], truth: &[T]) -> Self {
        let k = labels.len();
        let mut counts = vec![vec![0; k]; k];
        let pos = |l: &str| labels.iter().position(|x| x == l);
        for (p, t) in pred.iter().zip(truth) {
            if let (Some(i), Some(j)) = (pos(t.as_ref()), pos(p.as_ref())) {
                counts[i][j] += 1;
            }
        }
        Self { labels, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub removed_train: usize,
    pub removed_test: usize,
    pub accuracy_by_segment: f64,
    pub accuracy_by_distance: Option<f64>,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub k: usize,
    pub mode: CvMode,
    pub seed: u64,
    pub model: ModelConfig,
    pub noise: Option<NoiseStep>,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: EvaluationConfig,
    pub folds: Vec<FoldReport>,
    pub mean_accuracy_by_segment: f64,
    /// Population standard deviation over folds.
    pub std_accuracy_by_segment: f64,
    pub mean_accuracy_by_distance: Option<f64>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt())
}

fn evaluate_fold(
    set: &FeatureSet,
    model: &ModelConfig,
    folds: &FoldAssignment,
    f: usize,
    noise: Option<&NoiseStep>,
    features: &[String],
    labels: &[String],
) -> Result<FoldReport> {
    let (train_idx, test_idx) = folds.split(f);
    let mut train = set.subset(&train_idx);
    let mut test = set.subset(&test_idx);
    let (n_train0, n_test0) = (train.len(), test.len());

    if let Some(NoiseStep::GroundTruth { bounds, apply_to_test }) = noise {
        train = ground_truth_filter(&train, bounds)?.kept;
        if *apply_to_test {
            test = ground_truth_filter(&test, bounds)?.kept;
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::domain(format!("fold {f}: noise removal emptied the train or test set")));
    }
    let (mut train, test, _) = minmax_normalize(&train, &test)?;
    if let Some(NoiseStep::Dbscan { feature, eps, min_pts }) = noise {
        train = dbscan_outlier_filter(&train, feature, *eps, *min_pts)?.kept;
        if train.is_empty() {
            return Err(Error::domain(format!("fold {f}: DBSCAN marked every training row as noise")));
        }
    }
    let train = train.select(features)?;
    let test = test.select(features)?;
    let fitted = model.fit(&train)?;
    let pred = fitted.predict(&test)?;
    let truth = test.labels();
    let distances: Option<Vec<f64>> = test.vectors.iter().map(|v| v.distance_m).collect();
    let a_d = match distances {
        Some(d) if d.iter().sum::<f64>() > 0.0 => Some(accuracy_by_distance(&pred, &truth, &d)?),
        _ => None,
    };
    Ok(FoldReport {
        fold: f,
        n_train: train.len(),
        n_test: test.len(),
        removed_train: n_train0 - train.len(),
        removed_test: n_test0 - test.len(),
        accuracy_by_segment: accuracy_by_segment(&pred, &truth)?,
        accuracy_by_distance: a_d,
        confusion: ConfusionMatrix::new(labels.to_vec(), &pred, &truth),
    })
}

/// Run k-fold evaluation. Per fold: ground-truth bounds on raw values,
/// min-max scaling fitted on train, DBSCAN on the scaled train rows, column
/// restriction to `selection` (all columns when `None`), fit, score.
/// Folds run in parallel and are reported in index order.
pub fn cross_validate(
    set: &FeatureSet,
    model: &ModelConfig,
    folds: &FoldAssignment,
    noise: Option<&NoiseStep>,
    selection: Option<&[String]>,
) -> Result<EvaluationReport> {
    if folds.folds.len() != set.len() {
        return Err(Error::domain("fold assignment does not match the sample count"));
    }
    model.validate()?;
    let features = selection.map_or_else(|| set.names.clone(), <[String]>::to_vec);
    let labels = set.classes();
    let reports = (0..folds.k)
        .into_par_iter()
        .map(|f| evaluate_fold(set, model, folds, f, noise, &features, &labels))
        .collect::<Result<Vec<_>>>()?;
    let a_s: Vec<f64> = reports.iter().map(|r| r.accuracy_by_segment).collect();
    let (mean, std) = mean_std(&a_s);
    let a_d: Option<Vec<f64>> = reports.iter().map(|r| r.accuracy_by_distance).collect();
    Ok(EvaluationReport {
        config: EvaluationConfig {
            k: folds.k,
            mode: folds.mode,
            seed: folds.seed,
            model: model.clone(),
            noise: noise.cloned(),
            features,
        },
        folds: reports,
        mean_accuracy_by_segment: mean,
        std_accuracy_by_segment: std,
        mean_accuracy_by_distance: a_d.map(|v| mean_std(&v).0),
    })
}

impl EvaluationReport {
    pub fn fold_accuracies(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.accuracy_by_segment).collect()
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// One row per fold, then `mean` and `std` rows.
    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["fold", "n_train", "n_test", "removed_train", "removed_test", "accuracy_by_segment", "accuracy_by_distance"])?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for f in &self.folds {
            wr.write_record([
                (f.fold + 1).to_string(),
                f.n_train.to_string(),
                f.n_test.to_string(),
                f.removed_train.to_string(),
                f.removed_test.to_string(),
                f.accuracy_by_segment.to_string(),
                opt(f.accuracy_by_distance),
            ])?;
        }
        let blank = String::new;
        wr.write_record(["mean".into(), blank(), blank(), blank(), blank(), self.mean_accuracy_by_segment.to_string(), opt(self.mean_accuracy_by_distance)])?;
        wr.write_record(["std".into(), blank(), blank(), blank(), blank(), self.std_accuracy_by_segment.to_string(), blank()])?;
        wr.flush()?;
        Ok(())
    }

    /// Long-form confusion counts: `fold,truth,<predicted labels...>`.
    pub fn write_confusion_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let labels = self.folds.first().map(|f| f.confusion.labels.clone()).unwrap_or_default();
        let mut header = vec!["fold".to_string(), "truth".to_string()];
        header.extend(labels.iter().cloned());
        wr.write_record(&header)?;
        for f in &self.folds {
            for (label, row) in labels.iter().zip(&f.confusion.counts) {
                let mut rec = vec![(f.fold + 1).to_string(), label.clone()];
                rec.extend(row.iter().map(usize::to_string));
                wr.write_record(&rec)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// How a train column and a test column of unequal length are reduced to
/// paired vectors before taking Spearman's correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pairing {
    /// Relative frequencies over equal-width bins spanning the pooled range.
    Histogram { bins: usize },
    /// Empirical quantiles at `points` evenly spaced levels in [0, 1]. Both
    /// vectors are nondecreasing, so this is near 1 for almost any data.
    QuantileGrid { points: usize },
}

impl Default for Pairing {
    fn default() -> Self {
        Pairing::Histogram { bins: 100 }
    }
}

fn paired_vectors(train: &[f64], test: &[f64], pairing: Pairing) -> Option<(Vec<f64>, Vec<f64>)> {
    match pairing {
        Pairing::Histogram { bins } => {
            let lo = train.iter().chain(test).copied().fold(f64::INFINITY, f64::min);
            let hi = train.iter().chain(test).copied().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) || bins < 2 {
                return None;
            }
            let hist = |v: &[f64]| {
                let mut h = vec![0.0; bins];
                for x in v {
                    let b = (((x - lo) / (hi - lo)) * bins as f64) as usize;
                    h[b.min(bins - 1)] += 1.0;
                }
                h.iter_mut().for_each(|c| *c /= v.len() as f64);
                h
            };
            Some((hist(train), hist(test)))
        }
        Pairing::QuantileGrid { points } => {
            if points < 2 {
                return None;
            }
            let grid = |v: &[f64]| {
                let mut s = v.to_vec();
                s.sort_by(f64::total_cmp);
                (0..points)
                    .map(|i| crate::traj_features::quantile_sorted(&s, i as f64 / (points - 1) as f64))
                    .collect::<Vec<_>>()
            };
            Some((grid(train), grid(test)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub fold: usize,
    pub feature: String,
    pub correlation: f64,
    /// Correlation undefined (constant input); recorded as 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationStudy {
    pub k: usize,
    pub seed: u64,
    pub pairing: Pairing,
    pub random: Vec<CorrelationEntry>,
    pub user_oriented: Vec<CorrelationEntry>,
    pub random_mean: f64,
    pub user_oriented_mean: f64,
    /// Two-sided Mann-Whitney U between the two correlation columns.
    pub test: TestResult,
}

fn regime_correlations(set: &FeatureSet, folds: &FoldAssignment, pairing: Pairing) -> Vec<CorrelationEntry> {
    (0..folds.k)
        .into_par_iter()
        .flat_map_iter(|f| {
            let (tr, te) = folds.split(f);
            (0..set.names.len()).map(move |j| {
                let train: Vec<f64> = tr.iter().map(|&i| set.vectors[i].values[j]).collect();
                let test: Vec<f64> = te.iter().map(|&i| set.vectors[i].values[j]).collect();
                let rho = paired_vectors(&train, &test, pairing).and_then(|(a, b)| spearman(&a, &b));
                CorrelationEntry {
                    fold: f,
                    feature: set.names[j].clone(),
                    correlation: rho.unwrap_or(0.0),
                    degenerate: rho.is_none(),
                }
            })
        })
        .collect()
}

/// For both regimes and every (fold, feature): Spearman's correlation
/// between paired train-side and test-side distributions; then compare the
/// two columns with Mann-Whitney U.
pub fn fold_correlation_study(set: &FeatureSet, k: usize, seed: u64, pairing: Pairing) -> Result<CorrelationStudy> {
    let users = set.user_ids();
    let random = assign_folds(&users, k, CvMode::Random, seed)?;
    let user = assign_folds(&users, k, CvMode::UserOriented, seed)?;
    let random = regime_correlations(set, &random, pairing);
    let user_oriented = regime_correlations(set, &user, pairing);
    let col = |v: &[CorrelationEntry]| v.iter().map(|e| e.correlation).collect::<Vec<f64>>();
    let (rc, uc) = (col(&random), col(&user_oriented));
    let test = mann_whitney_u(&rc, &uc, Alternative::TwoSided)?;
    Ok(CorrelationStudy {
        k,
        seed,
        pairing,
        random_mean: mean_std(&rc).0,
        user_oriented_mean: mean_std(&uc).0,
        random,
        user_oriented,
        test,
    })
}

impl CorrelationStudy {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// Two-column table keyed by (fold, feature).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["fold", "feature", "random", "user_oriented", "random_degenerate", "user_oriented_degenerate"])?;
        for (r, u) in self.random.iter().zip(&self.user_oriented) {
            wr.write_record([
                (r.fold + 1).to_string(),
                r.feature.clone(),
                r.correlation.to_string(),
                u.correlation.to_string(),
                r.degenerate.to_string(),
                u.degenerate.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::DecisionTreeConfig;
    use crate::synth;
    use proptest::prelude::*;

    #[test]
    fn fold_examples() {
        let users = ["a", "b", "c", "d", "e"];
        let fa = assign_folds(&users, 5, CvMode::UserOriented, 0).unwrap();
        let mut f = fa.folds.clone();
        f.sort();
        assert_eq!(f, vec![0, 1, 2, 3, 4]);

        let ten = ["x"; 10];
        let fa = assign_folds(&ten, 5, CvMode::Random, 3).unwrap();
        assert_eq!(fa.fold_sizes(), vec![2; 5]);

        let mut ids = Vec::new();
        for (u, c) in [("u1", 8), ("u2", 4), ("u3", 3), ("u4", 3), ("u5", 2)] {
            ids.extend(std::iter::repeat_n(u, c));
        }
        let fa = assign_folds(&ids, 2, CvMode::UserOriented, 0).unwrap();
        assert_eq!(fa.fold_sizes(), vec![10, 10]);

        let err = assign_folds(&["a", "b", "c"], 5, CvMode::UserOriented, 0).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("too few users")));
        assert!(assign_folds(&["a"; 3], 5, CvMode::Random, 0).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy_by_segment(&["a", "b"], &["a", "b"]).unwrap(), 1.0);
        assert_eq!(accuracy_by_segment(&["a", "b"], &["b", "a"]).unwrap(), 0.0);
        assert_eq!(accuracy_by_segment(&["a", "a", "a", "b"], &["a", "a", "a", "a"]).unwrap(), 0.75);
        assert!(accuracy_by_segment(&["a"], &["a", "b"]).is_err());

        assert_eq!(accuracy_by_distance(&["a", "b"], &["a", "b"], &[3.0, 4.0]).unwrap(), 1.0);
        assert!((accuracy_by_distance(&["a", "x"], &["a", "b"], &[90.0, 10.0]).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(accuracy_by_distance(&["a", "x"], &["a", "b"], &[1.0, 1.0]).unwrap(), 0.5);
        assert!(accuracy_by_distance(&["a"], &["a"], &[0.0]).is_err());
    }

    #[test]
    fn separable_data_scores_perfectly_under_both_regimes() {
        let set = synth::separable_blobs(200, 4, 1);
        let model = ModelConfig::Tree(DecisionTreeConfig::default());
        for mode in [CvMode::Random, CvMode::UserOriented] {
            let folds = assign_folds(&set.user_ids(), 5, mode, 1).unwrap();
            let rep = cross_validate(&set, &model, &folds, None, None).unwrap();
            assert_eq!(rep.mean_accuracy_by_segment, 1.0);
            let tested: usize = rep.folds.iter().map(|f| f.n_test).sum();
            assert_eq!(tested, set.len());
            for f in &rep.folds {
                let rows: usize = f.confusion.counts.iter().flatten().sum();
                assert_eq!(rows, f.n_test);
            }
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let set = synth::separable_blobs(100, 3, 2);
        let folds = assign_folds(&set.user_ids(), 5, CvMode::Random, 4).unwrap();
        let run = || {
            let r = cross_validate(&set, &ModelConfig::default(), &folds, None, None).unwrap();
            let mut buf = Vec::new();
            r.write_json(&mut buf).unwrap();
            buf
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn ground_truth_step_is_train_only_by_default() {
        let mut set = synth::separable_blobs(40, 1, 5);
        set.names = vec!["speed_mean".into()];
        for v in &mut set.vectors {
            v.label = "walk".into();
            v.values[0] *= 10.0;
        }
        let folds = assign_folds(&set.user_ids(), 2, CvMode::Random, 0).unwrap();
        let model = ModelConfig::Tree(DecisionTreeConfig::default());
        let gt = NoiseStep::GroundTruth {
            bounds: GroundTruthBounds::geolife(),
            apply_to_test: false,
        };
        let rep = cross_validate(&set, &model, &folds, Some(&gt), None).unwrap();
        assert!(rep.folds.iter().all(|f| f.removed_test == 0 && f.removed_train > 0));
        let leak = NoiseStep::GroundTruth {
            bounds: GroundTruthBounds::geolife(),
            apply_to_test: true,
        };
        let rep = cross_validate(&set, &model, &folds, Some(&leak), None).unwrap();
        assert!(rep.folds.iter().any(|f| f.removed_test > 0));
    }

    #[test]
    fn identical_and_mirrored_distributions() {
        let v: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64).collect();
        let (a, b) = paired_vectors(&v, &v, Pairing::default()).unwrap();
        assert_eq!(spearman(&a, &b), Some(1.0));
        let (a, b) = paired_vectors(&v, &v, Pairing::QuantileGrid { points: 100 }).unwrap();
        assert_eq!(spearman(&a, &b), Some(1.0));
        assert!(paired_vectors(&[1.0, 1.0], &[1.0], Pairing::default()).is_none());
    }

    #[test]
    fn user_bias_lowers_user_oriented_correlation() {
        let set = synth::user_biased(20, 30, 3);
        let s = fold_correlation_study(&set, 5, 3, Pairing::default()).unwrap();
        assert_eq!(s.random.len(), 5 * 70);
        assert!(s.random_mean > s.user_oriented_mean, "{} vs {}", s.random_mean, s.user_oriented_mean);
        assert!(s.test.p_value < 0.05);
    }

    proptest! {
        #[test]
        fn user_folds_never_share_users(
            users in prop::collection::vec(0u8..15, 10..120), k in 2usize..6, seed in any::<u64>(),
        ) {
            let ids: Vec<String> = users.iter().map(|u| format!("u{u}")).collect();
            let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
            let distinct = users.iter().collect::<std::collections::BTreeSet<_>>().len();
            match assign_folds(&refs, k, CvMode::UserOriented, seed) {
                Err(_) => prop_assert!(distinct < k),
                Ok(fa) => {
                    let mut owner: HashMap<&str, usize> = HashMap::new();
                    for (u, f) in refs.iter().zip(&fa.folds) {
                        prop_assert_eq!(*owner.entry(u).or_insert(*f), *f);
                    }
                    prop_assert!(fa.fold_sizes().iter().all(|&s| s > 0));
                }
            }
        }

        #[test]
        fn random_folds_are_balanced(n in 2usize..200, k in 2usize..10, seed in any::<u64>()) {
            prop_assume!(n >= k);
            let ids = vec!["u"; n];
            let fa = assign_folds(&ids, k, CvMode::Random, seed).unwrap();
            let sizes = fa.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }

        #[test]
        fn equal_distances_make_metrics_agree(hits in prop::collection::vec(any::<bool>(), 1..50), d in 0.1f64..1e4) {
            let truth = vec!["a"; hits.len()];
            let pred: Vec<&str> = hits.iter().map(|&h| if h { "a" } else { "b" }).collect();
            let a_s = accuracy_by_segment(&pred, &truth).unwrap();
            let a_d = accuracy_by_distance(&pred, &truth, &vec![d; hits.len()]).unwrap();
            prop_assert!((a_s - a_d).abs() < 1e-12);
        }
    }
}
