use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trajmode::dataset::FeatureSet;
use trajmode::eval::{assign_folds, cross_validate, fold_correlation_study, EvaluationReport, FoldAssignment, Pairing};
use trajmode::ingest::{ingest_dataset, merge_labels, read_segments, write_segments, Segment};
use trajmode::noise::{dbscan_outlier_filter, ground_truth_filter, smooth_segment, FilterOutcome, GroundTruthBounds, Smoother};
use trajmode::select::{cv_scorer, importance_ranked_selection, top_k, wrapper_search, wrapper_search_limited, SelectionTrace};
use trajmode::stats::{
    kruskal_wallis, ks_one_sample, mann_whitney_u, standard_normal_cdf, wilcoxon_one_sample, wilcoxon_rank_sum,
    wilcoxon_signed_rank, Alternative, TestResult,
};
use trajmode::traj_features::{build_feature_set, minmax_normalize};

use crate::config::{ExperimentConfig, NoiseConfig, Overrides, SelectionConfig};
use crate::output::{Failure, OutDir};
use crate::{CleanMethod, Cli, Command, PairingArg};

type CmdResult = Result<(), Failure>;

pub fn dispatch(cli: Cli) -> CmdResult {
    let c = cli.common;
    let overrides = Overrides {
        seed: c.seed,
        k: c.k,
        cv_mode: c.cv_mode,
        label_scheme: c.label_scheme,
        noise: c.noise,
        select: c.select,
        leak_acknowledged: c.i_know_this_leaks,
        out: c.out,
        data: c.data,
    };
    let mut cfg = ExperimentConfig::load(c.config.as_deref())?;
    cfg.apply(&overrides)?;
    match cli.command {
        Command::Run => run(&cfg),
        Command::Ingest => ingest(&cfg),
        Command::Features { segments } => features(&cfg, &segments),
        Command::Clean { method, input } => clean(&cfg, method, &input, overrides.leak_acknowledged),
        Command::Select { features } => select(&cfg, &features),
        Command::Evaluate { features, selected } => evaluate(&cfg, &features, selected.as_deref()),
        Command::CompareCv { features, pairing, resolution } => compare_cv(&cfg, &features, pairing, resolution),
        Command::Stats { features, columns, reports, mu } => stats(&cfg, features.as_deref(), &columns, &reports, mu),
        Command::Synth { users, days } => synth(&cfg, users, days),
    }
}

/// Written next to every command's outputs.
#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: String,
    inputs: Vec<String>,
    config: &'a ExperimentConfig,
    outputs: Vec<String>,
    rerun: String,
}

fn finish(mut out: OutDir, cfg: &ExperimentConfig, name: &str, inputs: Vec<String>) -> CmdResult {
    out.write_text("config.toml", &cfg.to_toml())?;
    let args: Vec<String> = std::env::args().skip(1).collect();
    // Subcommand and its own arguments; global flags come from the saved config.
    let tail = args.iter().position(|a| a == name).map_or_else(|| name.to_string(), |i| args[i..].join(" "));
    let mut outputs = out.written().to_vec();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        tool: "trajmode",
        version: trajmode::VERSION,
        command: args.join(" "),
        inputs,
        config: cfg,
        outputs,
        rerun: format!(
            "trajmode --config {} --out <new directory> {}",
            out.path().join("config.toml").display(),
            tail
        ),
    };
    out.write_json("manifest.json", &manifest)?;
    eprintln!("wrote {} files to {}", out.written().len(), out.path().display());
    Ok(())
}

fn open_out(cfg: &ExperimentConfig, names: &[&str]) -> Result<OutDir, Failure> {
    let out = OutDir::create(cfg.require_out()?)?;
    let mut all = names.to_vec();
    all.extend(["config.toml", "manifest.json"]);
    out.ensure_free(&all)?;
    Ok(out)
}

fn open_input(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))
}

fn read_features(path: &Path) -> Result<FeatureSet, Failure> {
    FeatureSet::read_csv(open_input(path)?)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn read_segment_store(path: &Path) -> Result<Vec<Segment>, Failure> {
    read_segments(open_input(path)?).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn load_segments(cfg: &ExperimentConfig) -> Result<(PathBuf, Vec<Segment>, trajmode::ingest::IngestReport), Failure> {
    let root = cfg.dataset_root()?;
    let (segments, report) = ingest_dataset(&root)?;
    let segments = merge_labels(segments, cfg.label_scheme);
    if segments.is_empty() {
        return Err(Failure::data(format!("no labeled segments under {}", root.display())));
    }
    Ok((root, segments, report))
}

fn smooth_all(segments: &[Segment], smoother: Smoother) -> Result<(Vec<Segment>, usize), Failure> {
    let mut changed = 0;
    let mut out = Vec::with_capacity(segments.len());
    for s in segments {
        let (t, n) = smooth_segment(s, smoother)?;
        changed += n;
        out.push(t);
    }
    Ok((out, changed))
}

fn folds_for(cfg: &ExperimentConfig, set: &FeatureSet) -> Result<FoldAssignment, Failure> {
    let seed = cfg.require_seed()?;
    Ok(assign_folds(&set.user_ids(), cfg.cv.k, cfg.cv.mode, seed)?)
}

#[derive(Serialize, Deserialize)]
struct SelectionFile {
    method: String,
    features: Vec<String>,
}

fn run_selection(cfg: &ExperimentConfig, set: &FeatureSet, folds: &FoldAssignment) -> Result<Option<(String, Vec<String>, Option<SelectionTrace>)>, Failure> {
    // Selection scores without the fold noise step; cleaning comes after it.
    let scorer = cv_scorer(set, &cfg.model, folds, None);
    Ok(match &cfg.selection {
        SelectionConfig::None => None,
        SelectionConfig::List { features } => {
            for f in features {
                set.index_of(f)?;
            }
            Some(("list".into(), features.clone(), None))
        }
        SelectionConfig::Wrapper { max_features } => {
            let trace = match max_features {
                Some(m) => wrapper_search_limited(&set.names, *m, scorer)?,
                None => wrapper_search(&set.names, scorer)?,
            };
            let chosen = match max_features {
                Some(m) => top_k(&trace, (*m).min(trace.steps.len()))?,
                None => trace.best_features(),
            };
            Some(("wrapper".into(), chosen, Some(trace)))
        }
        SelectionConfig::Importance { max_features } => {
            let importance: HashMap<String, f64> = cfg.model.fit(set)?.importance_map().into_iter().collect();
            let mut ranked = set.names.clone();
            ranked.sort_by(|a, b| importance[b].total_cmp(&importance[a]).then_with(|| a.cmp(b)));
            if let Some(m) = max_features {
                ranked.truncate((*m).max(1));
            }
            let trace = importance_ranked_selection(&ranked, &importance, scorer)?;
            let chosen = match max_features {
                Some(_) => trace.selected(),
                None => trace.best_features(),
            };
            Some(("importance".into(), chosen, Some(trace)))
        }
    })
}

fn write_selection(out: &mut OutDir, sel: &Option<(String, Vec<String>, Option<SelectionTrace>)>) -> CmdResult {
    if let Some((method, features, trace)) = sel {
        if let Some(t) = trace {
            out.write_with("selection_trace.csv", |w| t.write_csv(w))?;
        }
        out.write_json("selection.json", &SelectionFile { method: method.clone(), features: features.clone() })?;
    }
    Ok(())
}

fn write_report(out: &mut OutDir, report: &EvaluationReport, folds: &FoldAssignment) -> CmdResult {
    out.write_with("report.json", |w| report.write_json(w))?;
    out.write_with("summary.csv", |w| report.write_summary_csv(w))?;
    out.write_with("confusion.csv", |w| report.write_confusion_csv(w))?;
    out.write_json("folds.json", folds)?;
    let a_d = report.mean_accuracy_by_distance.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"));
    println!(
        "{} {}-fold: A_s {:.4} (sd {:.4}), A_d {a_d}",
        folds.mode, folds.k, report.mean_accuracy_by_segment, report.std_accuracy_by_segment
    );
    Ok(())
}

fn run(cfg: &ExperimentConfig) -> CmdResult {
    let seed = cfg.require_seed()?;
    let mut names = vec!["segments.jsonl", "ingest_report.json", "features.csv", "report.json", "summary.csv", "confusion.csv", "folds.json"];
    if !matches!(cfg.selection, SelectionConfig::None) {
        names.extend(["selection.json", "selection_trace.csv"]);
    }
    let mut out = open_out(cfg, &names)?;
    let (root, mut segments, ingest_report) = load_segments(cfg)?;
    if let Some(s) = cfg.noise.smoother() {
        let (smoothed, changed) = smooth_all(&segments, s)?;
        eprintln!("smoothing changed {changed} point coordinates");
        segments = smoothed;
    }
    let set = build_feature_set(&segments, cfg.bearing_delta)?;
    let folds = assign_folds(&set.user_ids(), cfg.cv.k, cfg.cv.mode, seed)?;
    out.write_with("segments.jsonl", |w| write_segments(w, &segments))?;
    out.write_json("ingest_report.json", &ingest_report)?;
    out.write_with("features.csv", |w| set.write_csv(w))?;

    let sel = run_selection(cfg, &set, &folds)?;
    write_selection(&mut out, &sel)?;
    let step = cfg.noise.fold_step();
    let report = cross_validate(&set, &cfg.model, &folds, step.as_ref(), sel.as_ref().map(|s| s.1.as_slice()))?;
    write_report(&mut out, &report, &folds)?;
    finish(out, cfg, "run", vec![root.display().to_string()])
}

fn ingest(cfg: &ExperimentConfig) -> CmdResult {
    let mut out = open_out(cfg, &["segments.jsonl", "ingest_report.json"])?;
    let (root, segments, report) = load_segments(cfg)?;
    out.write_with("segments.jsonl", |w| write_segments(w, &segments))?;
    out.write_json("ingest_report.json", &report)?;
    println!("{} segments from {} users", segments.len(), report.users);
    finish(out, cfg, "ingest", vec![root.display().to_string()])
}

fn features(cfg: &ExperimentConfig, segments: &Path) -> CmdResult {
    let mut out = open_out(cfg, &["features.csv"])?;
    let segs = read_segment_store(segments)?;
    let set = build_feature_set(&segs, cfg.bearing_delta)?;
    out.write_with("features.csv", |w| set.write_csv(w))?;
    println!("{} feature vectors, {} columns", set.len(), set.names.len());
    finish(out, cfg, "features", vec![segments.display().to_string()])
}

fn clean(cfg: &ExperimentConfig, method: Option<CleanMethod>, input: &Path, leak_ok: bool) -> CmdResult {
    let noise = match method {
        None => cfg.noise.clone(),
        Some(m) => {
            let flag = match m {
                CleanMethod::Hampel => "hampel",
                CleanMethod::SavitzkyGolay => "savitzky-golay",
                CleanMethod::GroundTruth => "ground-truth",
                CleanMethod::Dbscan => "dbscan",
            };
            let from_flag = NoiseConfig::from_flag(flag)?;
            if std::mem::discriminant(&from_flag) == std::mem::discriminant(&cfg.noise) {
                cfg.noise.clone()
            } else {
                from_flag
            }
        }
    };
    if let Some(s) = noise.smoother() {
        let mut out = open_out(cfg, &["segments_clean.jsonl"])?;
        let segs = read_segment_store(input)?;
        let (smoothed, changed) = smooth_all(&segs, s)?;
        out.write_with("segments_clean.jsonl", |w| write_segments(w, &smoothed))?;
        println!("{changed} point coordinates changed in {} segments", smoothed.len());
        return finish(out, cfg, "clean", vec![input.display().to_string()]);
    }
    match &noise {
        NoiseConfig::GroundTruth { .. } if !leak_ok => {
            // A whole-matrix filter also removes rows that later land in
            // test folds, using their labels.
            return Err(Failure::config(
                "ground-truth cleaning of a whole feature matrix removes future test rows by label; \
                 use `--noise ground-truth` with `run` or `evaluate` for train-only cleaning, \
                 or pass --i-know-this-leaks",
            ));
        }
        NoiseConfig::GroundTruth { .. } | NoiseConfig::Dbscan { .. } => {}
        _ => return Err(Failure::config("no cleaning method: pass --method or set `noise` in the config")),
    }
    let mut out = open_out(cfg, &["features_clean.csv", "removed.csv"])?;
    let set = read_features(input)?;
    let outcome = match &noise {
        NoiseConfig::Dbscan { feature, eps, min_pts } => {
            set.index_of(feature)?;
            let (scaled, _, _) = minmax_normalize(&set, &set)?;
            let s = dbscan_outlier_filter(&scaled, feature, *eps, *min_pts)?;
            // Decide on scaled values, report raw ones.
            let kept: Vec<usize> = (0..set.len()).filter(|i| s.removed_indices.binary_search(i).is_err()).collect();
            FilterOutcome {
                kept: set.subset(&kept),
                removed: set.subset(&s.removed_indices),
                reasons: s.reasons,
                removed_indices: s.removed_indices,
                uncovered: s.uncovered,
            }
        }
        _ => ground_truth_filter(&set, &GroundTruthBounds::geolife())?,
    };
    write_filtered(&mut out, &outcome)?;
    finish(out, cfg, "clean", vec![input.display().to_string()])
}

fn write_filtered(out: &mut OutDir, o: &FilterOutcome) -> CmdResult {
    out.write_with("features_clean.csv", |w| o.kept.write_csv(w))?;
    out.write_with("removed.csv", |w| o.removed.write_audit_csv(w, &o.reasons))?;
    println!("kept {}, removed {}", o.kept.len(), o.removed.len());
    if o.uncovered > 0 {
        eprintln!("note: {} rows have a label with no bounds and were kept", o.uncovered);
    }
    Ok(())
}

fn select(cfg: &ExperimentConfig, features: &Path) -> CmdResult {
    if matches!(cfg.selection, SelectionConfig::None) {
        return Err(Failure::config("no selection method: pass --select or set `selection` in the config"));
    }
    let mut out = open_out(cfg, &["selection.json", "selection_trace.csv", "folds.json"])?;
    let set = read_features(features)?;
    let folds = folds_for(cfg, &set)?;
    let sel = run_selection(cfg, &set, &folds)?;
    write_selection(&mut out, &sel)?;
    out.write_json("folds.json", &folds)?;
    if let Some((_, f, _)) = &sel {
        println!("selected {} features: {}", f.len(), f.join(","));
    }
    finish(out, cfg, "select", vec![features.display().to_string()])
}

fn evaluate(cfg: &ExperimentConfig, features: &Path, selected: Option<&Path>) -> CmdResult {
    let mut out = open_out(cfg, &["report.json", "summary.csv", "confusion.csv", "folds.json"])?;
    let set = read_features(features)?;
    let mut inputs = vec![features.display().to_string()];
    let columns = match selected {
        Some(p) => {
            let file: SelectionFile = serde_json::from_reader(open_input(p)?)
                .map_err(|e| Failure::config(format!("invalid selection file {}: {e}", p.display())))?;
            inputs.push(p.display().to_string());
            Some(file.features)
        }
        None => match &cfg.selection {
            SelectionConfig::List { features } => Some(features.clone()),
            SelectionConfig::None => None,
            _ => {
                return Err(Failure::config(
                    "`evaluate` does not search for features; run `select` and pass --selected, or use `run`",
                ))
            }
        },
    };
    if let Some(cols) = &columns {
        set.select(cols)?;
    }
    let folds = folds_for(cfg, &set)?;
    let step = cfg.noise.fold_step();
    if cfg.noise.smoother().is_some() {
        return Err(Failure::config("smoothing applies to segments; use `clean` or `run` for it"));
    }
    let report = cross_validate(&set, &cfg.model, &folds, step.as_ref(), columns.as_deref())?;
    write_report(&mut out, &report, &folds)?;
    finish(out, cfg, "evaluate", inputs)
}

fn compare_cv(cfg: &ExperimentConfig, features: &Path, pairing: PairingArg, resolution: usize) -> CmdResult {
    let seed = cfg.require_seed()?;
    let mut out = open_out(cfg, &["correlation.csv", "correlation.json"])?;
    let set = read_features(features)?;
    let pairing = match pairing {
        PairingArg::Histogram => Pairing::Histogram { bins: resolution },
        PairingArg::QuantileGrid => Pairing::QuantileGrid { points: resolution },
    };
    let study = fold_correlation_study(&set, cfg.cv.k, seed, pairing)?;
    out.write_with("correlation.csv", |w| study.write_csv(w))?;
    out.write_with("correlation.json", |w| study.write_json(w))?;
    println!(
        "mean correlation: random {:.4}, user-oriented {:.4}; Mann-Whitney U {} p {:.3e}",
        study.random_mean, study.user_oriented_mean, study.test.statistic, study.test.p_value
    );
    finish(out, cfg, "compare-cv", vec![features.display().to_string()])
}

#[derive(Serialize)]
struct FeatureTests {
    feature: String,
    /// Kruskal-Wallis across label groups.
    kruskal_wallis: TestResult,
    /// KS against N(0, 1) after z-scoring; absent for constant columns.
    ks_normal: Option<TestResult>,
}

#[derive(Serialize)]
struct ReportTests {
    reports: Vec<String>,
    fold_accuracies: Vec<Vec<f64>>,
    mu: Option<f64>,
    one_sample: Option<TestResult>,
    signed_rank: Option<TestResult>,
    rank_sum: Option<TestResult>,
    mann_whitney: Option<TestResult>,
}

fn stats(cfg: &ExperimentConfig, features: Option<&Path>, columns: &[String], reports: &[PathBuf], mu: Option<f64>) -> CmdResult {
    let mut out = match &cfg.output_dir {
        Some(_) => Some(open_out(cfg, &["stats.json"])?),
        None => None,
    };
    let mut inputs = Vec::new();
    let value = match (features, reports.is_empty()) {
        (Some(path), true) => {
            inputs.push(path.display().to_string());
            serde_json::to_value(feature_tests(&read_features(path)?, columns)?).expect("serializable")
        }
        (None, false) => {
            let mut accs = Vec::new();
            for p in reports {
                let r: EvaluationReport = serde_json::from_reader(open_input(p)?)
                    .map_err(|e| Failure::data(format!("invalid report {}: {e}", p.display())))?;
                inputs.push(p.display().to_string());
                accs.push(r.fold_accuracies());
            }
            serde_json::to_value(report_tests(inputs.clone(), accs, mu)?).expect("serializable")
        }
        _ => return Err(Failure::config("pass either --features or --reports")),
    };
    let text = serde_json::to_string_pretty(&value).expect("serializable");
    match out.take() {
        Some(mut o) => {
            o.write_text("stats.json", &(text + "\n"))?;
            finish(o, cfg, "stats", inputs)
        }
        None => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn feature_tests(set: &FeatureSet, columns: &[String]) -> Result<Vec<FeatureTests>, Failure> {
    let names = if columns.is_empty() { set.names.clone() } else { columns.to_vec() };
    let classes = set.classes();
    let labels = set.labels();
    names
        .iter()
        .map(|name| {
            let col = set.column(set.index_of(name)?);
            let groups: Vec<Vec<f64>> = classes
                .iter()
                .map(|c| col.iter().zip(&labels).filter(|(_, l)| **l == c.as_str()).map(|(v, _)| *v).collect())
                .collect();
            let kw = kruskal_wallis(&groups)?;
            let n = col.len() as f64;
            let m = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            let ks = if sd > 0.0 && sd.is_finite() {
                let z: Vec<f64> = col.iter().map(|v| (v - m) / sd).collect();
                Some(ks_one_sample(&z, standard_normal_cdf)?)
            } else {
                None
            };
            Ok(FeatureTests { feature: name.clone(), kruskal_wallis: kw, ks_normal: ks })
        })
        .collect()
}

fn report_tests(reports: Vec<String>, accs: Vec<Vec<f64>>, mu: Option<f64>) -> Result<ReportTests, Failure> {
    let mut t = ReportTests {
        reports,
        fold_accuracies: accs.clone(),
        mu,
        one_sample: None,
        signed_rank: None,
        rank_sum: None,
        mann_whitney: None,
    };
    match accs.as_slice() {
        [a] => {
            let mu = mu.ok_or_else(|| Failure::config("a single report needs --mu"))?;
            t.one_sample = Some(wilcoxon_one_sample(a, mu, Alternative::TwoSided)?);
        }
        [a, b] => {
            if a.len() == b.len() {
                let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                t.signed_rank = Some(wilcoxon_signed_rank(&d, Alternative::TwoSided)?);
            } else {
                eprintln!("note: fold counts differ; skipping the paired test");
            }
            t.rank_sum = Some(wilcoxon_rank_sum(a, b)?);
            t.mann_whitney = Some(mann_whitney_u(a, b, Alternative::TwoSided)?);
        }
        _ => return Err(Failure::config("pass one or two reports")),
    }
    Ok(t)
}

fn synth(cfg: &ExperimentConfig, users: usize, days: usize) -> CmdResult {
    let seed = cfg.require_seed()?;
    let root = cfg.require_out()?;
    if root.join("Data").exists() {
        return Err(Failure::config(format!("refusing to overwrite {}", root.join("Data").display())));
    }
    if users == 0 || days == 0 {
        return Err(Failure::config("--users and --days must be positive"));
    }
    trajmode::synth::write_mini_geolife(root, users, days, seed)?;
    println!("wrote {users} users x {days} days under {}", root.join("Data").display());
    Ok(())
}
