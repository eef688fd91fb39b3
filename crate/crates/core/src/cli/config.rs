//! Run configuration: a TOML file with one table per concern.
//!
//! ```toml
//! name = "web-single-d"   # run directory name; defaults to the file stem
//! seed = 40
//!
//! [dataset]
//! source = "synthetic"
//! num_queries = 50
//! pool_size = 200
//! relevant_fraction = 0.005
//!
//! [model]
//! kind = "linear"
//!
//! [pretrain]
//! learning_rate = 0.01
//!
//! [trainer]
//! name = "single-d"
//! learning_rate = 0.004
//! ```
//!
//! Unknown keys are rejected. Every `learning_rate` is required.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dataio::SyntheticSpec;
use crate::experiment::{DataSource, TrainerName};
use crate::metrics::Metric;
use crate::pgvar::StudyConfig;
use crate::scorers::ModelSpec;
use crate::trainers::{Baseline, RewardKind, TrainConfig};

fn default_seed() -> u64 {
    40
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub dataset: Option<DatasetSection>,
    #[serde(default)]
    pub model: ModelSection,
    pub pretrain: Option<PretrainSection>,
    pub trainer: Option<TrainerSection>,
    #[serde(default)]
    pub eval: EvalSection,
    pub compare: Option<CompareSection>,
    pub variance: Option<VarianceSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "source")]
pub enum DatasetSection {
    #[serde(rename_all = "snake_case")]
    Synthetic {
        num_queries: usize,
        pool_size: usize,
        relevant_fraction: f64,
        #[serde(default = "default_feature_dim")]
        feature_dim: usize,
        #[serde(default = "default_noise")]
        noise_sigma: f64,
        holdout_queries: Option<usize>,
    },
    #[serde(rename_all = "snake_case")]
    Letor {
        path: PathBuf,
        #[serde(default)]
        normalize: bool,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
    #[serde(rename_all = "snake_case")]
    Interactions {
        path: PathBuf,
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
    #[serde(rename_all = "snake_case")]
    Qa {
        path: PathBuf,
        vocab_size: u32,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
    #[serde(rename_all = "snake_case")]
    SyntheticInteractions {
        users: usize,
        items: usize,
        #[serde(default = "default_latent")]
        latent_dim: usize,
        positives_per_user: usize,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
    #[serde(rename_all = "snake_case")]
    SyntheticQa {
        questions: usize,
        pool_size: usize,
        topics: u32,
        words_per_topic: u32,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
}

fn default_feature_dim() -> usize {
    46
}
fn default_noise() -> f64 {
    0.5
}
fn default_test_fraction() -> f64 {
    0.2
}
fn default_threshold() -> f64 {
    crate::dataio::DEFAULT_RATING_THRESHOLD
}
fn default_latent() -> usize {
    8
}

impl DatasetSection {
    pub fn source(&self, seed: u64) -> DataSource {
        match self.clone() {
            DatasetSection::Synthetic {
                num_queries,
                pool_size,
                relevant_fraction,
                feature_dim,
                noise_sigma,
                holdout_queries,
            } => DataSource::Synthetic {
                spec: SyntheticSpec {
                    num_queries,
                    pool_size,
                    relevant_fraction,
                    feature_dim,
                    noise_sigma,
                    seed,
                },
                holdout_queries: holdout_queries.unwrap_or(num_queries),
            },
            DatasetSection::Letor {
                path,
                normalize,
                test_fraction,
            } => DataSource::Letor {
                path,
                normalize,
                test_fraction,
            },
            DatasetSection::Interactions {
                path,
                threshold,
                test_fraction,
            } => DataSource::Interactions {
                path,
                threshold,
                test_fraction,
            },
            DatasetSection::Qa {
                path,
                vocab_size,
                test_fraction,
            } => DataSource::Qa {
                path,
                vocab_size,
                test_fraction,
            },
            DatasetSection::SyntheticInteractions {
                users,
                items,
                latent_dim,
                positives_per_user,
                test_fraction,
            } => DataSource::SyntheticInteractions {
                users,
                items,
                latent_dim,
                positives_per_user,
                test_fraction,
            },
            DatasetSection::SyntheticQa {
                questions,
                pool_size,
                topics,
                words_per_topic,
                test_fraction,
            } => DataSource::SyntheticQa {
                questions,
                pool_size,
                topics,
                words_per_topic,
                test_fraction,
            },
        }
    }

    /// Resolve paths relative to the config file's directory.
    fn rebase(&mut self, dir: &Path) {
        if let DatasetSection::Letor { path, .. }
        | DatasetSection::Interactions { path, .. }
        | DatasetSection::Qa { path, .. } = self
        {
            if path.is_relative() {
                *path = dir.join(&*path);
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_embed")]
    pub embed_dim: usize,
    /// Half-width of the uniform initialization; 0 starts from zeros.
    #[serde(default)]
    pub init_scale: f64,
    /// Start training from this checkpoint instead of pretraining.
    pub checkpoint: Option<PathBuf>,
}

fn default_kind() -> String {
    "linear".into()
}
fn default_hidden() -> usize {
    32
}
fn default_embed() -> usize {
    20
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            hidden: default_hidden(),
            embed_dim: default_embed(),
            init_scale: 0.0,
            checkpoint: None,
        }
    }
}

impl ModelSection {
    pub fn spec(&self) -> Result<ModelSpec, String> {
        Ok(match self.kind.as_str() {
            "linear" => ModelSpec::Linear,
            "mlp1" => ModelSpec::Mlp1 { hidden: self.hidden },
            "matfac" => ModelSpec::MatFac {
                embed_dim: self.embed_dim,
            },
            "text-avg-embed" => ModelSpec::TextAvgEmbed {
                embed_dim: self.embed_dim,
            },
            other => {
                return Err(format!(
                    "`model.kind`: unknown model `{other}` (expected linear, mlp1, matfac or text-avg-embed)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainSection {
    pub learning_rate: f64,
    #[serde(default = "default_pretrain_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_pretrain_epochs() -> usize {
    50
}
fn default_batch() -> usize {
    8
}
fn default_temperature() -> f64 {
    1.0
}

impl PretrainSection {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            epochs_outer: self.epochs,
            batch_size: self.batch_size,
            temperature: self.temperature,
            seed,
            ..TrainConfig::default()
        }
    }
}

/// Trainer hyperparameters; defaults follow the web-search Single-D setting.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerSection {
    pub name: Option<String>,
    pub learning_rate: f64,
    pub batch_size: Option<usize>,
    pub epochs_outer: Option<usize>,
    pub epochs_inner: Option<usize>,
    pub k: Option<usize>,
    pub dns_k: Option<usize>,
    pub baseline: Option<String>,
    pub reward: Option<String>,
    pub temperature: Option<f64>,
    pub exclude_positives: Option<bool>,
    pub replacement: Option<bool>,
    pub d_steps: Option<usize>,
    pub g_steps: Option<usize>,
}

impl TrainerSection {
    pub fn trainer(&self) -> Result<TrainerName, String> {
        self.name
            .as_deref()
            .ok_or_else(|| "`trainer.name` is required".to_string())?
            .parse()
            .map_err(|e| format!("`trainer.name`: {e}"))
    }

    pub fn train_config(&self, seed: u64) -> Result<TrainConfig, String> {
        let d = TrainConfig::default();
        let baseline = match &self.baseline {
            Some(s) => s.parse::<Baseline>().map_err(|e| format!("`trainer.baseline`: {e}"))?,
            None => d.baseline,
        };
        let reward = match &self.reward {
            Some(s) => s.parse::<RewardKind>().map_err(|e| format!("`trainer.reward`: {e}"))?,
            None => d.reward,
        };
        let cfg = TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            epochs_outer: self.epochs_outer.unwrap_or(d.epochs_outer),
            epochs_inner: self.epochs_inner.unwrap_or(d.epochs_inner),
            k: self.k.unwrap_or(d.k),
            dns_k: self.dns_k.unwrap_or(d.dns_k),
            baseline,
            reward,
            seed,
            temperature: self.temperature.unwrap_or(d.temperature),
            exclude_positives: self.exclude_positives.unwrap_or(d.exclude_positives),
            replacement: self.replacement.unwrap_or(d.replacement),
            d_steps: self.d_steps.unwrap_or(d.d_steps),
            g_steps: self.g_steps.unwrap_or(d.g_steps),
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default = "default_metrics")]
    pub metrics: Vec<String>,
}

fn default_metrics() -> Vec<String> {
    ["ndcg@5", "p@5", "p@1"].map(String::from).to_vec()
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            metrics: default_metrics(),
        }
    }
}

impl EvalSection {
    pub fn metrics(&self) -> Result<Vec<Metric>, String> {
        if self.metrics.is_empty() {
            return Err("`eval.metrics` must not be empty".into());
        }
        self.metrics
            .iter()
            .map(|m| m.parse::<Metric>().map_err(|e| format!("`eval.metrics`: {e}")))
            .collect()
    }
}

/// Trainers compared under a shared budget of single-model epochs.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub trainers: Vec<String>,
    pub seeds: Option<Vec<u64>>,
    /// Defaults to `trainer.epochs_outer`.
    pub budget: Option<usize>,
    /// Per-trainer learning rates, e.g. `{ "dual-d" = 0.006 }`.
    #[serde(default)]
    pub learning_rates: std::collections::BTreeMap<String, f64>,
    /// Explicit Dual-D outer epochs; breaks budget parity when it disagrees.
    pub dual_epochs_outer: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceSection {
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    #[serde(default = "default_b")]
    pub b: f64,
    pub num_queries: Option<usize>,
    pub pool_size: Option<usize>,
    pub feature_dim: Option<usize>,
    pub noise_sigma: Option<f64>,
    pub d_epochs: Option<usize>,
    pub d_learning_rate: Option<f64>,
    pub mc_samples: Option<usize>,
    /// Baselines swept with the partition frozen at `b`.
    #[serde(default = "default_sweep")]
    pub sweep: Vec<f64>,
}

fn default_fractions() -> Vec<f64> {
    vec![0.002, 0.005, 0.015]
}
fn default_b() -> f64 {
    0.5
}
fn default_sweep() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

impl VarianceSection {
    pub fn study_config(&self) -> StudyConfig {
        let d = StudyConfig::default();
        StudyConfig {
            num_queries: self.num_queries.unwrap_or(d.num_queries),
            pool_size: self.pool_size.unwrap_or(d.pool_size),
            feature_dim: self.feature_dim.unwrap_or(d.feature_dim),
            noise_sigma: self.noise_sigma.unwrap_or(d.noise_sigma),
            b: self.b,
            d_epochs: self.d_epochs.unwrap_or(d.d_epochs),
            d_learning_rate: self.d_learning_rate.unwrap_or(d.d_learning_rate),
            mc_samples: self.mc_samples.unwrap_or(d.mc_samples),
        }
    }
}

impl RunConfig {
    /// Parse config text; relative data paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, String> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| e.message().to_string())?;
        if let Some(ds) = cfg.dataset.as_mut() {
            ds.rebase(base_dir);
        }
        Ok(cfg)
    }

    pub fn dataset(&self) -> Result<&DatasetSection, String> {
        self.dataset.as_ref().ok_or_else(|| "missing `[dataset]` section".into())
    }

    pub fn pretrain(&self) -> Result<&PretrainSection, String> {
        self.pretrain.as_ref().ok_or_else(|| "missing `[pretrain]` section".into())
    }

    pub fn trainer(&self) -> Result<&TrainerSection, String> {
        self.trainer.as_ref().ok_or_else(|| "missing `[trainer]` section".into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [dataset]
        source = "synthetic"
        num_queries = 4
        pool_size = 10
        relevant_fraction = 0.1

        [pretrain]
        learning_rate = 0.01

        [trainer]
        name = "single-d"
        learning_rate = 0.004
    "#;

    #[test]
    fn minimal_config() {
        let cfg = RunConfig::parse(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(cfg.seed, 40);
        let t = cfg.trainer().unwrap();
        assert_eq!(t.trainer().unwrap(), TrainerName::SingleD);
        let tc = t.train_config(cfg.seed).unwrap();
        assert_eq!((tc.batch_size, tc.epochs_outer, tc.k), (8, 50, 5));
        assert_eq!(cfg.eval.metrics().unwrap().len(), 3);
    }

    #[test]
    fn missing_learning_rate_is_named() {
        let text = MINIMAL.replace("learning_rate = 0.004", "");
        let err = RunConfig::parse(&text, Path::new(".")).unwrap_err();
        assert!(err.contains("learning_rate"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("learning_rate = 0.004", "learning_rate = 0.004\nlearnig_rate = 1");
        let err = RunConfig::parse(&text, Path::new(".")).unwrap_err();
        assert!(err.contains("learnig_rate"), "{err}");
    }

    #[test]
    fn bad_values_are_named() {
        let cfg = RunConfig::parse(&MINIMAL.replace("\"single-d\"", "\"bogus\""), Path::new(".")).unwrap();
        assert!(cfg.trainer().unwrap().trainer().unwrap_err().contains("bogus"));
        let cfg = RunConfig::parse(
            &MINIMAL.replace("name = \"single-d\"", "name = \"single-d\"\nepochs_inner = 0"),
            Path::new("."),
        )
        .unwrap();
        assert!(cfg.trainer().unwrap().train_config(1).unwrap_err().contains("epochs_inner"));
    }
}
