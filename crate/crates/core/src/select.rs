//! Forward feature selection scored by cross-validated accuracy: a greedy
//! wrapper search and an importance-ranked prefix search.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::ModelConfig;
use crate::dataset::FeatureSet;
use crate::eval::{cross_validate, FoldAssignment, NoiseStep};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub feature: String,
    pub cv_mean: f64,
    pub cv_folds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub steps: Vec<SelectionStep>,
    /// Prefix length with the highest mean; ties go to the shorter prefix.
    pub best_prefix_size: usize,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

impl SelectionTrace {
    fn from_steps(steps: Vec<SelectionStep>) -> Self {
        let mut best = 0;
        for (i, s) in steps.iter().enumerate() {
            if s.cv_mean > steps[best].cv_mean {
                best = i;
            }
        }
        let best_prefix_size = if steps.is_empty() { 0 } else { best + 1 };
        Self { steps, best_prefix_size }
    }

    pub fn selected(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.feature.clone()).collect()
    }

    pub fn best_features(&self) -> Vec<String> {
        self.selected()[..self.best_prefix_size].to_vec()
    }

    /// Columns `round,feature,cv_mean,fold_1..fold_k`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let k = self.steps.first().map_or(0, |s| s.cv_folds.len());
        let mut header = vec!["round".to_string(), "feature".to_string(), "cv_mean".to_string()];
        header.extend((1..=k).map(|i| format!("fold_{i}")));
        wr.write_record(&header)?;
        for (i, s) in self.steps.iter().enumerate() {
            let mut rec = vec![(i + 1).to_string(), s.feature.clone(), s.cv_mean.to_string()];
            rec.extend(s.cv_folds.iter().map(f64::to_string));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Greedy forward search over every feature.
pub fn wrapper_search<F>(features: &[String], scorer: F) -> Result<SelectionTrace>
where
    F: Fn(&[String]) -> Result<Vec<f64>> + Sync,
{
    wrapper_search_limited(features, features.len(), scorer)
}

/// Greedy forward search stopped after `max_rounds` rounds. Each round
/// scores every remaining feature joined to the current selection (in
/// parallel) and keeps the best mean, ties going to the smaller name.
pub fn wrapper_search_limited<F>(features: &[String], max_rounds: usize, scorer: F) -> Result<SelectionTrace>
where
    F: Fn(&[String]) -> Result<Vec<f64>> + Sync,
{
    if features.is_empty() {
        return Err(Error::domain("feature selection needs at least one feature"));
    }
    let mut pool: Vec<String> = features.to_vec();
    pool.sort();
    pool.dedup();
    let mut selected: Vec<String> = Vec::new();
    let mut steps = Vec::new();
    while !pool.is_empty() && steps.len() < max_rounds {
        let scored = pool
            .par_iter()
            .map(|c| {
                let mut cand = selected.clone();
                cand.push(c.clone());
                scorer(&cand).map(|folds| (mean(&folds), folds))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best = 0;
        for (i, (m, _)) in scored.iter().enumerate() {
            if *m > scored[best].0 {
                best = i;
            }
        }
        let feature = pool.remove(best);
        let (cv_mean, cv_folds) = scored.into_iter().nth(best).unwrap();
        selected.push(feature.clone());
        steps.push(SelectionStep {
            feature,
            cv_mean,
            cv_folds,
        });
    }
    Ok(SelectionTrace::from_steps(steps))
}

/// Append features by descending importance (ties by name) and score each
/// prefix.
pub fn importance_ranked_selection<F>(features: &[String], importance: &HashMap<String, f64>, scorer: F) -> Result<SelectionTrace>
where
    F: Fn(&[String]) -> Result<Vec<f64>> + Sync,
{
    if features.is_empty() {
        return Err(Error::domain("feature selection needs at least one feature"));
    }
    let mut ranked: Vec<(String, f64)> = features
        .iter()
        .map(|f| {
            importance
                .get(f)
                .map(|&w| (f.clone(), w))
                .ok_or_else(|| Error::domain(format!("no importance for feature `{f}`")))
        })
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let order: Vec<String> = ranked.into_iter().map(|(f, _)| f).collect();
    let steps = (1..=order.len())
        .into_par_iter()
        .map(|n| {
            let folds = scorer(&order[..n])?;
            Ok(SelectionStep {
                feature: order[n - 1].clone(),
                cv_mean: mean(&folds),
                cv_folds: folds,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SelectionTrace::from_steps(steps))
}

/// First `k` selected names.
pub fn top_k(trace: &SelectionTrace, k: usize) -> Result<Vec<String>> {
    if k == 0 || k > trace.steps.len() {
        return Err(Error::domain(format!("k={k} outside 1..={}", trace.steps.len())));
    }
    Ok(trace.steps[..k].iter().map(|s| s.feature.clone()).collect())
}

/// Scorer returning per-fold accuracy of `model` on `set` restricted to the
/// candidate columns, with folds fixed for the whole search.
pub fn cv_scorer<'a>(
    set: &'a FeatureSet,
    model: &'a ModelConfig,
    folds: &'a FoldAssignment,
    noise: Option<&'a NoiseStep>,
) -> impl Fn(&[String]) -> Result<Vec<f64>> + Sync + 'a {
    move |cols| Ok(cross_validate(set, model, folds, noise, Some(cols))?.fold_accuracies())
}
