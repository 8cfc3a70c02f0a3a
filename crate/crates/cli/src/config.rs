//! Experiment configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trajmode::classify::ModelConfig;
use trajmode::eval::{CvMode, NoiseStep};
use trajmode::ingest::LabelScheme;
use trajmode::noise::{GroundTruthBounds, HampelConfig, SavGolConfig, Smoother};
use trajmode::point_features::BearingDelta;

use crate::output::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub k: usize,
    pub mode: CvMode,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { k: 5, mode: CvMode::Random }
    }
}

fn default_window() -> usize {
    11
}
fn default_sigmas() -> f64 {
    3.0
}
fn default_sg_window() -> usize {
    7
}
fn default_polyorder() -> usize {
    2
}
fn default_dbscan_feature() -> String {
    "speed_mean".into()
}
fn default_eps() -> f64 {
    0.05
}
fn default_min_pts() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    #[default]
    None,
    /// Hampel filter on segment coordinates, before point features.
    Hampel {
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_sigmas")]
        n_sigmas: f64,
    },
    /// Savitzky-Golay smoothing of segment coordinates.
    SavitzkyGolay {
        #[serde(default = "default_sg_window")]
        window: usize,
        #[serde(default = "default_polyorder")]
        polyorder: usize,
    },
    /// Per-mode mean-speed bounds, train folds only unless `apply_to_test`.
    GroundTruth {
        #[serde(default)]
        apply_to_test: bool,
    },
    /// DBSCAN on one normalized feature, train folds only.
    Dbscan {
        #[serde(default = "default_dbscan_feature")]
        feature: String,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "default_min_pts")]
        min_pts: usize,
    },
}

impl NoiseConfig {
    pub fn from_flag(s: &str) -> Result<Self, Failure> {
        Ok(match s {
            "none" => NoiseConfig::None,
            "hampel" => NoiseConfig::Hampel { window: default_window(), n_sigmas: default_sigmas() },
            "savitzky-golay" | "savgol" => NoiseConfig::SavitzkyGolay {
                window: default_sg_window(),
                polyorder: default_polyorder(),
            },
            "ground-truth" => NoiseConfig::GroundTruth { apply_to_test: false },
            "dbscan" => NoiseConfig::Dbscan {
                feature: default_dbscan_feature(),
                eps: default_eps(),
                min_pts: default_min_pts(),
            },
            other => {
                return Err(Failure::config(format!(
                    "unknown noise method `{other}` (expected none, hampel, savitzky-golay, ground-truth or dbscan)"
                )))
            }
        })
    }

    fn same_method(&self, other: &NoiseConfig) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other)
    }

    /// Coordinate smoother applied to segments, if any.
    pub fn smoother(&self) -> Option<Smoother> {
        match *self {
            NoiseConfig::Hampel { window, n_sigmas } => Some(Smoother::Hampel(HampelConfig { window, n_sigmas })),
            NoiseConfig::SavitzkyGolay { window, polyorder } => {
                Some(Smoother::SavitzkyGolay(SavGolConfig { window, polyorder }))
            }
            _ => None,
        }
    }

    /// Feature-level step applied inside each fold, if any.
    pub fn fold_step(&self) -> Option<NoiseStep> {
        match self {
            NoiseConfig::GroundTruth { apply_to_test } => Some(NoiseStep::GroundTruth {
                bounds: GroundTruthBounds::geolife(),
                apply_to_test: *apply_to_test,
            }),
            NoiseConfig::Dbscan { feature, eps, min_pts } => Some(NoiseStep::Dbscan {
                feature: feature.clone(),
                eps: *eps,
                min_pts: *min_pts,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionConfig {
    #[default]
    None,
    /// Greedy forward search; stops after `max_features` rounds when set
    /// and keeps that many, otherwise keeps the best-scoring prefix.
    Wrapper {
        #[serde(default)]
        max_features: Option<usize>,
    },
    /// Prefixes of the forest-importance ranking.
    Importance {
        #[serde(default)]
        max_features: Option<usize>,
    },
    List { features: Vec<String> },
}

impl SelectionConfig {
    pub fn from_flag(s: &str) -> Result<Self, Failure> {
        if let Some(list) = s.strip_prefix("list:") {
            let features: Vec<String> = list.split(',').map(str::trim).filter(|f| !f.is_empty()).map(String::from).collect();
            if features.is_empty() {
                return Err(Failure::config("`--select list:` needs at least one feature name"));
            }
            return Ok(SelectionConfig::List { features });
        }
        Ok(match s {
            "none" => SelectionConfig::None,
            "wrapper" => SelectionConfig::Wrapper { max_features: None },
            "importance" => SelectionConfig::Importance { max_features: None },
            other => {
                return Err(Failure::config(format!(
                    "unknown selection `{other}` (expected none, wrapper, importance or list:<names>)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset_root: Option<PathBuf>,
    pub label_scheme: LabelScheme,
    pub bearing_delta: BearingDelta,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub cv: CvConfig,
    pub model: ModelConfig,
    pub noise: NoiseConfig,
    pub selection: SelectionConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset_root: None,
            label_scheme: LabelScheme::Identity,
            bearing_delta: BearingDelta::Raw,
            seed: None,
            output_dir: None,
            cv: CvConfig::default(),
            model: ModelConfig::default(),
            noise: NoiseConfig::None,
            selection: SelectionConfig::None,
        }
    }
}

/// Values given on the command line; each one overrides the file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub cv_mode: Option<String>,
    pub label_scheme: Option<String>,
    pub noise: Option<String>,
    pub select: Option<String>,
    pub leak_acknowledged: bool,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), Failure> {
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(k) = o.k {
            self.cv.k = k;
        }
        if let Some(m) = &o.cv_mode {
            self.cv.mode = m.parse()?;
        }
        if let Some(s) = &o.label_scheme {
            self.label_scheme = s.parse()?;
        }
        if let Some(n) = &o.noise {
            let flag = NoiseConfig::from_flag(n)?;
            if !flag.same_method(&self.noise) {
                self.noise = flag;
            }
        }
        if let Some(s) = &o.select {
            let flag = SelectionConfig::from_flag(s)?;
            if !matches!((&flag, &self.selection), (SelectionConfig::Wrapper { .. }, SelectionConfig::Wrapper { .. }) | (SelectionConfig::Importance { .. }, SelectionConfig::Importance { .. })) {
                self.selection = flag;
            }
        }
        if let Some(out) = &o.out {
            self.output_dir = Some(out.clone());
        }
        if let Some(d) = &o.data {
            self.dataset_root = Some(d.clone());
        }
        match &mut self.noise {
            NoiseConfig::GroundTruth { apply_to_test } => {
                if *apply_to_test && !o.leak_acknowledged {
                    return Err(Failure::config(
                        "ground-truth cleaning of test folds uses test labels; pass --i-know-this-leaks to allow it",
                    ));
                }
                *apply_to_test = o.leak_acknowledged;
            }
            _ if o.leak_acknowledged => {
                eprintln!("note: --i-know-this-leaks only affects ground-truth noise removal");
            }
            _ => {}
        }
        if self.cv.k < 2 {
            return Err(Failure::config("cv.k must be at least 2"));
        }
        if let Some(seed) = self.seed {
            self.model = self.model.clone().with_seed(seed);
        }
        self.model.validate()?;
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64, Failure> {
        self.seed.ok_or_else(|| Failure::config("a seed is required: set `seed` in the config or pass --seed"))
    }

    pub fn require_out(&self) -> Result<&Path, Failure> {
        self.output_dir
            .as_deref()
            .ok_or_else(|| Failure::config("an output directory is required: set `output_dir` or pass --out"))
    }

    /// Dataset root from flag or config, falling back to `TRAJMODE_DATA`.
    pub fn dataset_root(&self) -> Result<PathBuf, Failure> {
        let root = self
            .dataset_root
            .clone()
            .or_else(|| std::env::var_os("TRAJMODE_DATA").map(PathBuf::from))
            .ok_or_else(|| Failure::config("no dataset root: set `dataset_root`, pass --data, or set TRAJMODE_DATA"))?;
        if !root.is_dir() {
            return Err(Failure::data(format!("dataset root {} does not exist", root.display())));
        }
        Ok(root)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
