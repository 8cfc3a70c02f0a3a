//! Rank-based hypothesis tests: Mann-Whitney U, Wilcoxon signed-rank and
//! rank-sum, Kruskal-Wallis H, and the one-sample Kolmogorov-Smirnov test.
//!
//! Small samples get exact p-values by enumeration; larger ones use normal
//! or chi-square approximations with tie and continuity corrections.

pub mod special;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};
use special::{chi2_sf, kolmogorov_sf, normal_cdf, normal_sf};

/// Largest pooled (or paired) sample size that gets an exact p-value.
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    TwoSided,
    /// The first sample tends to be smaller.
    Less,
    /// The first sample tends to be larger.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    MannWhitneyU,
    WilcoxonSignedRank,
    WilcoxonRankSum,
    KruskalWallis,
    KolmogorovSmirnov,
}

/// How the p-value is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PMethod {
    /// Exact when the sample is small enough (and, for Mann-Whitney, tie-free).
    #[default]
    Auto,
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub alternative: Alternative,
    pub exact: bool,
    /// Set when the data carry no information (e.g. all differences zero).
    #[serde(default)]
    pub degenerate: bool,
}

impl TestResult {
    fn new(method: TestMethod, alternative: Alternative, statistic: f64, p: f64, exact: bool) -> Self {
        Self {
            statistic,
            p_value: p.clamp(0.0, 1.0),
            method,
            alternative,
            exact,
            degenerate: false,
        }
    }
}

/// 1-based ranks; tied values share the mean of their rank span.
pub fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Sum of t^3 - t over groups of tied values.
fn tie_sum(values: &[f64]) -> f64 {
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for v in values {
        // Normalize -0.0 so it ties with 0.0.
        *counts.entry((v + 0.0).to_bits()).or_default() += 1;
    }
    counts
        .values()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum()
}

fn require_nonempty(x: &[f64], what: &str) -> Result<()> {
    if x.is_empty() {
        return Err(Error::domain(format!("{what} sample is empty")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(format!("{what} sample contains non-finite values")));
    }
    Ok(())
}

/// Two-sided p from one-sided tails.
fn two_sided(lower: f64, upper: f64) -> f64 {
    (2.0 * lower.min(upper)).min(1.0)
}

/// Number of ways each U value arises among all C(n1+n2, n1) placements.
fn mann_whitney_counts(n1: usize, n2: usize) -> Vec<f64> {
    // table[a][b] = distribution for sizes (a, b), built bottom-up.
    let mut table: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n2 + 1]; n1 + 1];
    for a in 0..=n1 {
        for b in 0..=n2 {
            table[a][b] = if a == 0 || b == 0 {
                vec![1.0]
            } else {
                let mut d = vec![0.0; a * b + 1];
                // Largest value belongs to the first sample: it beats all b.
                for (u, c) in table[a - 1][b].iter().enumerate() {
                    d[u + b] += c;
                }
                for (u, c) in table[a][b - 1].iter().enumerate() {
                    d[u] += c;
                }
                d
            };
        }
    }
    std::mem::take(&mut table[n1][n2])
}

pub fn mann_whitney_u(x: &[f64], y: &[f64], alternative: Alternative) -> Result<TestResult> {
    mann_whitney_u_with(x, y, alternative, PMethod::Auto)
}

/// Mann-Whitney U test. The statistic is U for `x`: the number of pairs with
/// `x > y`, ties counting one half.
pub fn mann_whitney_u_with(x: &[f64], y: &[f64], alternative: Alternative, method: PMethod) -> Result<TestResult> {
    require_nonempty(x, "first")?;
    require_nonempty(y, "second")?;
    let (n1, n2) = (x.len(), y.len());
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = rank_with_ties(&pooled);
    let r1: f64 = ranks[..n1].iter().sum();
    let u = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    let ties = tie_sum(&pooled);

    let exact = match method {
        PMethod::Exact if ties > 0.0 => return Err(Error::config("exact Mann-Whitney p-value requires tie-free data")),
        PMethod::Exact => true,
        PMethod::Asymptotic => false,
        PMethod::Auto => n1 + n2 <= EXACT_MAX_N && ties == 0.0,
    };

    let p = if exact {
        let counts = mann_whitney_counts(n1, n2);
        let total: f64 = counts.iter().sum();
        let u_int = u.round() as usize;
        let lower = counts[..=u_int].iter().sum::<f64>() / total;
        let upper = counts[u_int..].iter().sum::<f64>() / total;
        match alternative {
            Alternative::Less => lower,
            Alternative::Greater => upper,
            Alternative::TwoSided => two_sided(lower, upper),
        }
    } else {
        let n = (n1 + n2) as f64;
        let mu = (n1 * n2) as f64 / 2.0;
        let var = (n1 * n2) as f64 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let sd = var.sqrt();
            match alternative {
                Alternative::Less => normal_cdf((u - mu + 0.5) / sd),
                Alternative::Greater => normal_sf((u - mu - 0.5) / sd),
                Alternative::TwoSided => (2.0 * normal_sf(((u - mu).abs() - 0.5) / sd)).min(1.0),
            }
        }
    };
    Ok(TestResult::new(TestMethod::MannWhitneyU, alternative, u, p, exact))
}

pub fn wilcoxon_signed_rank(diffs: &[f64], alternative: Alternative) -> Result<TestResult> {
    wilcoxon_signed_rank_with(diffs, alternative, PMethod::Auto)
}

/// One-sample form: tests whether `sample` is centered on `mu`.
pub fn wilcoxon_one_sample(sample: &[f64], mu: f64, alternative: Alternative) -> Result<TestResult> {
    let diffs: Vec<f64> = sample.iter().map(|x| x - mu).collect();
    wilcoxon_signed_rank(&diffs, alternative)
}

/// Wilcoxon signed-rank test on paired differences. Exact zeros are dropped
/// before ranking. The statistic is min(W+, W-) for the two-sided test and
/// W+ otherwise.
pub fn wilcoxon_signed_rank_with(diffs: &[f64], alternative: Alternative, method: PMethod) -> Result<TestResult> {
    require_nonempty(diffs, "difference")?;
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Ok(TestResult {
            degenerate: true,
            ..TestResult::new(TestMethod::WilcoxonSignedRank, alternative, 0.0, 1.0, false)
        });
    }
    let n = nonzero.len();
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = rank_with_ties(&abs);
    let w_plus: f64 = ranks.iter().zip(&nonzero).filter(|(_, &d)| d > 0.0).map(|(r, _)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let statistic = match alternative {
        Alternative::TwoSided => w_plus.min(w_minus),
        _ => w_plus,
    };

    let exact = match method {
        PMethod::Exact if n > 20 => return Err(Error::config("exact signed-rank enumeration limited to 20 differences")),
        PMethod::Exact => true,
        PMethod::Asymptotic => false,
        PMethod::Auto => n <= EXACT_MAX_N,
    };

    let p = if exact {
        // Ranks are multiples of 1/2, so doubled sums compare exactly.
        let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
        let obs = (2.0 * w_plus).round() as u64;
        let (mut le, mut ge) = (0u64, 0u64);
        for mask in 0u64..(1 << n) {
            let s: u64 = doubled.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, r)| r).sum();
            le += (s <= obs) as u64;
            ge += (s >= obs) as u64;
        }
        let patterns = (1u64 << n) as f64;
        let (lower, upper) = (le as f64 / patterns, ge as f64 / patterns);
        match alternative {
            Alternative::Less => lower,
            Alternative::Greater => upper,
            Alternative::TwoSided => two_sided(lower, upper),
        }
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_sum(&abs) / 48.0;
        if var <= 0.0 {
            1.0
        } else {
            let sd = var.sqrt();
            match alternative {
                Alternative::Less => normal_cdf((w_plus - mean + 0.5) / sd),
                Alternative::Greater => normal_sf((w_plus - mean - 0.5) / sd),
                Alternative::TwoSided => (2.0 * normal_sf(((w_plus - mean).abs() - 0.5) / sd)).min(1.0),
            }
        }
    };
    Ok(TestResult::new(TestMethod::WilcoxonSignedRank, alternative, statistic, p, exact))
}

/// Wilcoxon rank-sum test (two-sided). The statistic is the standardized
/// rank sum of `x`, with the same tie and continuity corrections as the
/// Mann-Whitney normal approximation, so both give the same p-value.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64]) -> Result<TestResult> {
    require_nonempty(x, "first")?;
    require_nonempty(y, "second")?;
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = rank_with_ties(&pooled);
    let r1: f64 = ranks[..x.len()].iter().sum();
    let n = n1 + n2;
    let expected = n1 * (n + 1.0) / 2.0;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_sum(&pooled) / (n * (n - 1.0)));
    let (z, p) = if var <= 0.0 {
        (0.0, 1.0)
    } else {
        let d = r1 - expected;
        let z = d.signum() * (d.abs() - 0.5).max(0.0) / var.sqrt();
        (z, (2.0 * normal_sf(z.abs())).min(1.0))
    };
    Ok(TestResult::new(TestMethod::WilcoxonRankSum, Alternative::TwoSided, z, p, false))
}

/// Kruskal-Wallis H test with tie correction; p from chi-square with
/// `groups - 1` degrees of freedom.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult> {
    if groups.len() < 2 {
        return Err(Error::domain("Kruskal-Wallis needs at least two groups"));
    }
    for g in groups {
        require_nonempty(g, "group")?;
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    if pooled.len() < 3 {
        return Err(Error::domain("Kruskal-Wallis needs at least three observations"));
    }
    let ranks = rank_with_ties(&pooled);
    let mut offset = 0;
    let mut acc = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        acc += r * r / g.len() as f64;
        offset += g.len();
    }
    let h_raw = 12.0 / (n * (n + 1.0)) * acc - 3.0 * (n + 1.0);
    let correction = 1.0 - tie_sum(&pooled) / (n * n * n - n);
    let df = (groups.len() - 1) as f64;
    if correction <= 0.0 {
        return Ok(TestResult {
            degenerate: true,
            ..TestResult::new(TestMethod::KruskalWallis, Alternative::TwoSided, 0.0, 1.0, false)
        });
    }
    let h = (h_raw / correction).max(0.0);
    Ok(TestResult::new(TestMethod::KruskalWallis, Alternative::TwoSided, h, chi2_sf(h, df), false))
}

/// One-sample Kolmogorov-Smirnov goodness-of-fit test against a continuous
/// reference CDF; asymptotic p-value from the Kolmogorov distribution.
pub fn ks_one_sample(sample: &[f64], reference_cdf: impl Fn(f64) -> f64) -> Result<TestResult> {
    require_nonempty(sample, "")?;
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = reference_cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0f64, f64::max);
    let p = kolmogorov_sf(n.sqrt() * d);
    Ok(TestResult::new(TestMethod::KolmogorovSmirnov, Alternative::TwoSided, d, p, false))
}

/// Standard normal CDF, for use as a KS reference.
pub fn standard_normal_cdf(x: f64) -> f64 {
    normal_cdf(x)
}

/// Spearman rank correlation (Pearson on tie-averaged ranks). `None` when
/// either input has no rank variation or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (rank_with_ties(x), rank_with_ties(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
