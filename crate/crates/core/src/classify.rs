//! CART decision trees and random forests on Gini impurity.
//!
//! Classes are indexed in lexicographic order, so every "smallest index" tie
//! break below is also the lexicographically smallest label.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureSet;
use crate::rng;
use crate::{Error, Result};

/// Format version written into model dumps.
pub const MODEL_VERSION: u32 = 1;

/// `1 - sum(p_k^2)` of a class histogram.
pub fn gini_impurity(class_counts: &[f64]) -> Result<f64> {
    if class_counts.iter().any(|c| *c < 0.0 || !c.is_finite()) {
        return Err(Error::domain("class counts must be finite and non-negative"));
    }
    let n: f64 = class_counts.iter().sum();
    if n <= 0.0 {
        return Err(Error::domain("class counts are all zero"));
    }
    Ok((1.0 - class_counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    #[default]
    All,
    /// `ceil(sqrt(d))` candidates per split.
    Sqrt,
}

impl MaxFeatures {
    fn count(self, d: usize) -> usize {
        match self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => ((d as f64).sqrt().ceil() as usize).clamp(1, d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionTreeConfig {
    /// `None` grows until the other limits stop it; written as `"unlimited"`.
    #[serde(with = "depth")]
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub rng_seed: u64,
}

/// `Option<usize>` as an integer or `"unlimited"`, so formats without null
/// (TOML) keep the distinction.
mod depth {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Depth(usize),
        Word(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(d) => s.serialize_u64(*d as u64),
            None => s.serialize_str("unlimited"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            Some(Repr::Depth(n)) => Ok(Some(n)),
            Some(Repr::Word(w)) if w == "unlimited" => Ok(None),
            None => Ok(None),
            Some(Repr::Word(w)) => Err(serde::de::Error::custom(format!("max_depth: expected an integer or \"unlimited\", got `{w}`"))),
        }
    }
}

impl Default for DecisionTreeConfig {
    /// Standalone tree: depth 5, all features per split.
    fn default() -> Self {
        Self {
            max_depth: Some(5),
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
            rng_seed: 10,
        }
    }
}

impl DecisionTreeConfig {
    pub fn unlimited() -> Self {
        Self {
            max_depth: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::config("min_samples_split must be at least 2"));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::config("min_samples_leaf must be at least 1"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::config("max_depth must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomForestConfig {
    pub n_estimators: usize,
    /// Per-tree growth limits. Its `rng_seed` is ignored; tree `i` draws from
    /// the `i`-th stream derived from the forest seed.
    pub tree: DecisionTreeConfig,
    pub bootstrap: bool,
    pub rng_seed: u64,
}

impl Default for RandomForestConfig {
    fn default() -> Self {
        Self {
            n_estimators: 50,
            tree: DecisionTreeConfig {
                max_depth: None,
                max_features: MaxFeatures::Sqrt,
                ..DecisionTreeConfig::default()
            },
            bootstrap: true,
            rng_seed: 10,
        }
    }
}

impl RandomForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators < 1 {
            return Err(Error::config("n_estimators must be at least 1"));
        }
        self.tree.validate()
    }
}

/// Either classifier, as chosen in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Tree(DecisionTreeConfig),
    Forest(RandomForestConfig),
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Forest(RandomForestConfig::default())
    }
}

impl ModelConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ModelConfig::Tree(c) => c.rng_seed = seed,
            ModelConfig::Forest(c) => c.rng_seed = seed,
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::Tree(c) => c.validate(),
            ModelConfig::Forest(c) => c.validate(),
        }
    }

    pub fn fit(&self, train: &FeatureSet) -> Result<TrainedModel> {
        match self {
            ModelConfig::Tree(c) => fit_tree(train, c),
            ModelConfig::Forest(c) => fit_forest(train, c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tree,
    Forest,
}

/// Tree nodes live in a flat arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    /// Training samples reaching the leaf, per class.
    Leaf { counts: Vec<u32> },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf_counts(&self, x: &[f64]) -> &[u32] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

/// Index of the largest entry; ties go to the smallest index.
fn argmax<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub kind: ModelKind,
    pub feature_names: Vec<String>,
    pub classes: Vec<String>,
    pub trees: Vec<Tree>,
    /// Normalized Gini importance per feature, in `feature_names` order.
    pub importances: Vec<f64>,
}

/// Predicted label plus per-class vote fractions (in `classes` order).
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    pub votes: Vec<f64>,
}

impl TrainedModel {
    pub fn importance_map(&self) -> BTreeMap<String, f64> {
        self.feature_names.iter().cloned().zip(self.importances.iter().copied()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(s)?;
        if model.version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {}", model.version)));
        }
        Ok(model)
    }

    /// Rows of `x` reordered to the training schema.
    fn aligned_rows(&self, x: &FeatureSet) -> Result<Vec<Vec<f64>>> {
        if x.names.len() != self.feature_names.len() {
            return Err(Error::domain(format!(
                "schema mismatch: model has {} features, input has {}",
                self.feature_names.len(),
                x.names.len()
            )));
        }
        Ok(x.select(&self.feature_names)?.matrix())
    }

    fn predict_row(&self, row: &[f64]) -> Prediction {
        let k = self.classes.len();
        let votes = match self.kind {
            ModelKind::Tree => {
                let counts = self.trees[0].leaf_counts(row);
                let n: u32 = counts.iter().sum();
                counts.iter().map(|&c| c as f64 / n as f64).collect::<Vec<_>>()
            }
            ModelKind::Forest => {
                let mut tally = vec![0u32; k];
                for t in &self.trees {
                    tally[argmax(t.leaf_counts(row))] += 1;
                }
                let n = self.trees.len() as f64;
                tally.iter().map(|&c| c as f64 / n).collect()
            }
        };
        Prediction {
            label: self.classes[argmax(&votes)].clone(),
            votes,
        }
    }

    pub fn predict_with_votes(&self, x: &FeatureSet) -> Result<Vec<Prediction>> {
        let rows = self.aligned_rows(x)?;
        Ok(rows.iter().map(|r| self.predict_row(r)).collect())
    }

    pub fn predict(&self, x: &FeatureSet) -> Result<Vec<String>> {
        Ok(self.predict_with_votes(x)?.into_iter().map(|p| p.label).collect())
    }
}

/// Training data in column-major form with integer class codes.
struct Prepared {
    cols: Vec<Vec<f64>>,
    y: Vec<usize>,
    classes: Vec<String>,
}

fn prepare(set: &FeatureSet) -> Result<Prepared> {
    if set.is_empty() {
        return Err(Error::domain("cannot fit on an empty feature set"));
    }
    if set.names.is_empty() {
        return Err(Error::domain("cannot fit without features"));
    }
    if set.vectors.iter().flat_map(|v| &v.values).any(|x| !x.is_finite()) {
        return Err(Error::domain("feature values must be finite"));
    }
    let classes = set.classes();
    let y = set
        .vectors
        .iter()
        .map(|v| classes.binary_search(&v.label).unwrap())
        .collect();
    let cols = (0..set.names.len()).map(|j| set.column(j)).collect();
    Ok(Prepared { cols, y, classes })
}

struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        self.score > other.score
            || (self.score == other.score
                && (self.feature < other.feature || (self.feature == other.feature && self.threshold < other.threshold)))
    }
}

/// Sum of squared counts over size; larger means purer.
fn purity_score(counts: &[u32], n: usize) -> f64 {
    counts.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>() / n as f64
}

struct Grower<'a> {
    data: &'a Prepared,
    cfg: &'a DecisionTreeConfig,
    n_candidates: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.data.classes.len()];
        for &i in idx {
            c[self.data.y[i]] += 1;
        }
        c
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let id = self.nodes.len();
        let n = idx.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        self.nodes.push(Node::Leaf { counts: counts.clone() });
        if pure
            || self.cfg.max_depth.is_some_and(|m| depth >= m)
            || n < self.cfg.min_samples_split
            || n < 2 * self.cfg.min_samples_leaf
        {
            return id;
        }
        let Some(best) = self.best_split(&idx) else {
            return id;
        };
        let col = &self.data.cols[best.feature];
        let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| col[i] <= best.threshold);
        let decrease = best.score - purity_score(&counts, n);
        self.importance[best.feature] += decrease.max(0.0);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        id
    }

    /// Best split over up to `n_candidates` non-constant features. Zero-gain
    /// splits are accepted so impure nodes keep splitting.
    fn best_split(&mut self, idx: &[usize]) -> Option<Candidate> {
        let d = self.data.cols.len();
        let mut order: Vec<usize> = (0..d).collect();
        if self.n_candidates < d {
            order.shuffle(&mut self.rng);
        }
        let k = self.data.classes.len();
        let min_leaf = self.cfg.min_samples_leaf;
        let n = idx.len();
        let mut best: Option<Candidate> = None;
        let mut evaluated = 0;
        let mut sorted = idx.to_vec();
        for f in order {
            if evaluated >= self.n_candidates {
                break;
            }
            let col = &self.data.cols[f];
            sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            if col[sorted[0]] == col[sorted[n - 1]] {
                continue;
            }
            evaluated += 1;
            let mut left = vec![0u32; k];
            let mut right = self.counts(idx);
            for pos in 0..n - 1 {
                let c = self.data.y[sorted[pos]];
                left[c] += 1;
                right[c] -= 1;
                let (a, b) = (col[sorted[pos]], col[sorted[pos + 1]]);
                let nl = pos + 1;
                if a == b || nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                let cand = Candidate {
                    score: purity_score(&left, nl) + purity_score(&right, n - nl),
                    feature: f,
                    threshold,
                };
                if best.as_ref().is_none_or(|b| cand.beats(b)) {
                    best = Some(cand);
                }
            }
        }
        best
    }
}

fn grow_tree(data: &Prepared, sample: Vec<usize>, cfg: &DecisionTreeConfig, rng: ChaCha8Rng) -> (Tree, Vec<f64>) {
    let d = data.cols.len();
    let mut g = Grower {
        data,
        cfg,
        n_candidates: cfg.max_features.count(d),
        rng,
        nodes: Vec::new(),
        importance: vec![0.0; d],
    };
    g.grow(sample, 0);
    let mut imp = g.importance;
    normalize(&mut imp);
    (Tree { nodes: g.nodes }, imp)
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    }
}

pub fn fit_tree(train: &FeatureSet, cfg: &DecisionTreeConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    let data = prepare(train)?;
    let rng = rng::stream(cfg.rng_seed, 0);
    let (tree, importances) = grow_tree(&data, (0..train.len()).collect(), cfg, rng);
    Ok(TrainedModel {
        version: MODEL_VERSION,
        kind: ModelKind::Tree,
        feature_names: train.names.clone(),
        classes: data.classes,
        trees: vec![tree],
        importances,
    })
}

/// Random forest; trees grow in parallel and are kept in index order.
pub fn fit_forest(train: &FeatureSet, cfg: &RandomForestConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    let data = prepare(train)?;
    let n = train.len();
    let grown: Vec<(Tree, Vec<f64>)> = (0..cfg.n_estimators)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng::derive_seed(cfg.rng_seed, i as u64));
            let sample = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(&data, sample, &cfg.tree, rng)
        })
        .collect();
    let d = train.names.len();
    let mut importances = vec![0.0; d];
    for (_, imp) in &grown {
        for (acc, x) in importances.iter_mut().zip(imp) {
            *acc += x / cfg.n_estimators as f64;
        }
    }
    normalize(&mut importances);
    Ok(TrainedModel {
        version: MODEL_VERSION,
        kind: ModelKind::Forest,
        feature_names: train.names.clone(),
        classes: data.classes,
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        importances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureVector;
    use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, proptest, Just, Strategy};

    pub(crate) fn set_from(rows: &[(Vec<f64>, &str)]) -> FeatureSet {
        let d = rows.first().map_or(1, |r| r.0.len());
        FeatureSet::new(
            (0..d).map(|j| format!("f{j}")).collect(),
            rows.iter()
                .enumerate()
                .map(|(i, (x, l))| FeatureVector {
                    segment_id: format!("s{i}"),
                    user_id: format!("u{}", i % 3),
                    label: l.to_string(),
                    values: x.clone(),
                    distance_m: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn unlimited_depth_survives_serialization() {
        let cfg = ModelConfig::Forest(RandomForestConfig::default());
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"unlimited\""), "{json}");
        assert_eq!(serde_json::from_str::<ModelConfig>(&json).unwrap(), cfg);
        let t: DecisionTreeConfig = serde_json::from_str(r#"{"max_depth": 3}"#).unwrap();
        assert_eq!(t.max_depth, Some(3));
        assert!(serde_json::from_str::<DecisionTreeConfig>(r#"{"max_depth": "deep"}"#).is_err());
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini_impurity(&[7.0]).unwrap(), 0.0);
        assert_eq!(gini_impurity(&[5.0, 5.0]).unwrap(), 0.5);
        assert_eq!(gini_impurity(&[1.0, 3.0]).unwrap(), 0.375);
        assert!(gini_impurity(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn single_row_is_a_leaf() {
        let m = fit_tree(&set_from(&[(vec![1.0, 2.0], "bus")]), &DecisionTreeConfig::unlimited()).unwrap();
        assert_eq!(m.trees[0].nodes.len(), 1);
        assert_eq!(m.predict(&set_from(&[(vec![9.0, 9.0], "x")])).unwrap(), vec!["bus"]);
        assert_eq!(m.importances, vec![0.0, 0.0]);
    }

    #[test]
    fn pure_labels_give_single_leaf() {
        let rows: Vec<_> = (0..20).map(|i| (vec![i as f64, (i * 7 % 5) as f64], "walk")).collect();
        let m = fit_tree(&set_from(&rows), &DecisionTreeConfig::unlimited()).unwrap();
        assert_eq!(m.trees[0].nodes.len(), 1);
    }

    #[test]
    fn separable_line_gives_depth_one_tree() {
        let rows: Vec<_> = (-10..10)
            .map(|i| (vec![i as f64 + 0.5], if i < 0 { "a" } else { "b" }))
            .collect();
        let set = set_from(&rows);
        let m = fit_tree(&set, &DecisionTreeConfig::unlimited()).unwrap();
        assert_eq!(m.trees[0].depth(), 1);
        assert_eq!(m.predict(&set).unwrap(), set.labels());
        assert!(matches!(m.trees[0].nodes[0], Node::Split { threshold, .. } if threshold == 0.0));
    }

    #[test]
    fn xor_needs_zero_gain_first_split() {
        let rows = vec![
            (vec![0.0, 0.0], "a"),
            (vec![1.0, 1.0], "a"),
            (vec![0.0, 1.0], "b"),
            (vec![1.0, 0.0], "b"),
        ];
        let set = set_from(&rows);
        let m = fit_tree(&set, &DecisionTreeConfig::unlimited()).unwrap();
        assert_eq!(m.predict(&set).unwrap(), set.labels());
    }

    #[test]
    fn depth_limit_and_leaf_size_are_respected() {
        let rows: Vec<_> = (0..64).map(|i| (vec![i as f64], if (i / 2) % 2 == 0 { "a" } else { "b" })).collect();
        let set = set_from(&rows);
        let m = fit_tree(&set, &DecisionTreeConfig::default()).unwrap();
        assert!(m.trees[0].depth() <= 5);
        let cfg = DecisionTreeConfig {
            min_samples_leaf: 3,
            ..DecisionTreeConfig::unlimited()
        };
        let m = fit_tree(&set, &cfg).unwrap();
        for node in &m.trees[0].nodes {
            if let Node::Leaf { counts } = node {
                assert!(counts.iter().sum::<u32>() >= 3);
            }
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let set = set_from(&[(vec![1.0], "a")]);
        let bad = DecisionTreeConfig {
            min_samples_split: 1,
            ..Default::default()
        };
        assert!(matches!(fit_tree(&set, &bad), Err(Error::Config(_))));
        let bad = RandomForestConfig {
            n_estimators: 0,
            ..Default::default()
        };
        assert!(matches!(fit_forest(&set, &bad), Err(Error::Config(_))));
        assert!(fit_tree(&FeatureSet::new(vec!["f0".into()], vec![]).unwrap(), &Default::default()).is_err());
    }

    fn noisy_rows(seed: u64, n: usize) -> Vec<(Vec<f64>, &'static str)> {
        let mut r = rng::stream(seed, 99);
        (0..n)
            .map(|_| {
                let signal: f64 = r.random();
                let mut x = vec![signal];
                x.extend((0..9).map(|_| r.random::<f64>()));
                (x, if signal < 0.5 { "a" } else { "b" })
            })
            .collect()
    }

    #[test]
    fn forest_is_deterministic_and_finds_the_signal() {
        let set = set_from(&noisy_rows(1, 200));
        let test = set_from(&noisy_rows(2, 100));
        let cfg = RandomForestConfig {
            rng_seed: 10,
            ..Default::default()
        };
        let a = fit_forest(&set, &cfg).unwrap();
        let b = fit_forest(&set, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predict(&test).unwrap(), b.predict(&test).unwrap());
        assert_eq!(argmax(&a.importances), 0);
        assert!((a.importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for p in a.predict_with_votes(&test).unwrap() {
            assert!((p.votes.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let set = set_from(&noisy_rows(3, 120));
        let test = set_from(&noisy_rows(4, 60));
        let cfg = RandomForestConfig {
            n_estimators: 7,
            ..Default::default()
        };
        let m = fit_forest(&set, &cfg).unwrap();
        let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict(&test).unwrap(), m.predict(&test).unwrap());
        let bumped = m.to_json().unwrap().replace("\"version\":1", "\"version\":99");
        assert!(TrainedModel::from_json(&bumped).is_err());
    }

    #[test]
    fn prediction_checks_schema() {
        let set = set_from(&noisy_rows(5, 30));
        let m = fit_tree(&set, &DecisionTreeConfig::default()).unwrap();
        let empty = FeatureSet::new(set.names.clone(), vec![]).unwrap();
        assert!(m.predict(&empty).unwrap().is_empty());
        let narrow = set.select(&set.names[..3].to_vec()).unwrap();
        assert!(m.predict(&narrow).is_err());
        let mut renamed = set.clone();
        renamed.names[0] = "other".into();
        assert!(matches!(m.predict(&renamed), Err(Error::MissingColumn(_))));
        let mut reordered = set.select(&set.names.iter().rev().cloned().collect::<Vec<_>>()).unwrap();
        reordered.vectors.truncate(5);
        assert_eq!(m.predict(&reordered).unwrap(), m.predict(&set.subset(&[0, 1, 2, 3, 4])).unwrap());
    }

    fn unique_rows() -> impl Strategy<Value = Vec<(Vec<f64>, &'static str)>> {
        prop::collection::btree_set((0i32..20, 0i32..20), 2..40).prop_flat_map(|pts| {
            let n = pts.len();
            (Just(pts), prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), n)).prop_map(|(pts, labels)| {
                pts.into_iter()
                    .zip(labels)
                    .map(|((x, y), l)| (vec![x as f64, y as f64], l))
                    .collect()
            })
        })
    }

    proptest! {
        #[test]
        fn unlimited_tree_memorizes_unique_rows(rows in unique_rows()) {
            let set = set_from(&rows);
            let m = fit_tree(&set, &DecisionTreeConfig::unlimited()).unwrap();
            prop_assert_eq!(m.predict(&set).unwrap(), set.labels());
            let s: f64 = m.importances.iter().sum();
            prop_assert!(m.importances.iter().all(|&x| x >= 0.0));
            prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn row_order_does_not_change_tree(rows in unique_rows(), seed in any::<u64>()) {
            let mut shuffled = rows.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = fit_tree(&set_from(&rows), &DecisionTreeConfig::unlimited()).unwrap();
            let b = fit_tree(&set_from(&shuffled), &DecisionTreeConfig::unlimited()).unwrap();
            prop_assert_eq!(a.trees, b.trees);
        }
    }
}
