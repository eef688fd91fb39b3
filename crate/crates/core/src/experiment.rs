//! End-to-end runs shared by the command line and the comparison tests:
//! load data, pretrain, train one regime, evaluate every epoch.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataio::{
    parse_interactions, parse_letor, parse_qa_pairs, synth_interactions, synth_qa, synth_retrieval,
    synth_retrieval_with, normalize_min_max, DataError, SyntheticSpec, Vocab,
};
use crate::dataset::Dataset;
use crate::metrics::{evaluate_model, Metric};
use crate::policy::SoftmaxPolicy;
use crate::scorers::{Init, ModelSpec, Scorer, ScorerError};
use crate::trainers::{
    dns_epoch, dual_d_outer_epoch, irgan_pairwise_epoch, irgan_pointwise_epoch, pretrain_mle,
    single_d_epoch, DualChoice, EpochStats, RunRecord, TrainConfig, TrainError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TrainerName {
    IrganPointwise,
    IrganPairwise,
    SingleD,
    DualD,
    Dns,
}

impl TrainerName {
    pub const ALL: [TrainerName; 5] = [
        TrainerName::IrganPointwise,
        TrainerName::IrganPairwise,
        TrainerName::SingleD,
        TrainerName::DualD,
        TrainerName::Dns,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrainerName::IrganPointwise => "irgan-pointwise",
            TrainerName::IrganPairwise => "irgan-pairwise",
            TrainerName::SingleD => "single-d",
            TrainerName::DualD => "dual-d",
            TrainerName::Dns => "dns",
        }
    }

    /// Model tag whose metrics represent this trainer in comparisons.
    pub fn reported_model(self) -> &'static str {
        match self {
            TrainerName::IrganPointwise | TrainerName::IrganPairwise => "generator",
            TrainerName::SingleD => "single-d",
            TrainerName::DualD => "dual-d-chosen",
            TrainerName::Dns => "dns",
        }
    }
}

impl fmt::Display for TrainerName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrainerName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|t| t.as_str()).collect();
                format!("unknown trainer `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Policy(#[from] crate::policy::PolicyError),
}

/// Where the train and evaluation queries come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Planted linear task; evaluation uses `holdout_queries` fresh queries
    /// drawn from the same hidden weights.
    Synthetic {
        spec: SyntheticSpec,
        holdout_queries: usize,
    },
    Letor {
        path: PathBuf,
        normalize: bool,
        test_fraction: f64,
    },
    Interactions {
        path: PathBuf,
        threshold: f64,
        test_fraction: f64,
    },
    Qa {
        path: PathBuf,
        vocab_size: u32,
        test_fraction: f64,
    },
    SyntheticInteractions {
        users: usize,
        items: usize,
        latent_dim: usize,
        positives_per_user: usize,
        test_fraction: f64,
    },
    SyntheticQa {
        questions: usize,
        pool_size: usize,
        topics: u32,
        words_per_topic: u32,
        test_fraction: f64,
    },
}

/// Seed offset of held-out synthetic queries.
const HOLDOUT_SEED_OFFSET: u64 = 0x5EED_0F_4E1D;

/// `(train, eval)` datasets. Query-level splits for search and QA;
/// per-interaction splits for recommendation.
pub fn load_data(source: &DataSource, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    Ok(match source {
        DataSource::Synthetic {
            spec,
            holdout_queries,
        } => {
            let spec = SyntheticSpec { seed, ..*spec };
            let (train, truth) = synth_retrieval(&spec)?;
            let held = SyntheticSpec {
                num_queries: *holdout_queries,
                seed: seed.wrapping_add(HOLDOUT_SEED_OFFSET),
                ..spec
            };
            (train, synth_retrieval_with(&held, &truth)?)
        }
        DataSource::Letor {
            path,
            normalize,
            test_fraction,
        } => {
            let mut ds = parse_letor(path)?;
            if *normalize {
                ds = normalize_min_max(&ds)?;
            }
            ds.split_queries(*test_fraction, seed)?
        }
        DataSource::Interactions {
            path,
            threshold,
            test_fraction,
        } => parse_interactions(path, *threshold)?.split_positives(*test_fraction, seed)?,
        DataSource::Qa {
            path,
            vocab_size,
            test_fraction,
        } => parse_qa_pairs(path, Vocab::new(*vocab_size))?
            .dataset
            .split_queries(*test_fraction, seed)?,
        DataSource::SyntheticInteractions {
            users,
            items,
            latent_dim,
            positives_per_user,
            test_fraction,
        } => synth_interactions(*users, *items, *latent_dim, *positives_per_user, seed)?
            .split_positives(*test_fraction, seed)?,
        DataSource::SyntheticQa {
            questions,
            pool_size,
            topics,
            words_per_topic,
            test_fraction,
        } => synth_qa(*questions, *pool_size, *topics, *words_per_topic, seed)?
            .split_queries(*test_fraction, seed)?,
    })
}

/// Build a scorer for `train` and pretrain it as a softmax generator by
/// maximum likelihood. `init_scale == 0` starts from zeros.
pub fn pretrain(
    model: ModelSpec,
    init_scale: f64,
    train: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Scorer, RunRecord), ExperimentError> {
    let kind = model.resolve(train)?;
    let init = if init_scale > 0.0 {
        Init::Uniform {
            scale: init_scale,
            seed: cfg.seed,
        }
    } else {
        Init::Zeros
    };
    let scorer = Scorer::new(kind, init)?;
    scorer.check_dataset(train)?;
    let mut g = SoftmaxPolicy::new(scorer, cfg.temperature)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let record = pretrain_mle(&mut g, train, cfg, &mut rng)?;
    Ok((g.scorer, record))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub trainer: TrainerName,
    pub record: RunRecord,
    /// Final models keyed by tag.
    pub models: Vec<(String, Scorer)>,
    pub chosen: Option<DualChoice>,
}

impl TrainOutcome {
    pub fn model(&self, tag: &str) -> Option<&Scorer> {
        self.models.iter().find(|(t, _)| t == tag).map(|(_, s)| s)
    }

    /// Final value of `metric` for the trainer's reported model.
    pub fn final_metric(&self, metric: Metric) -> Option<f64> {
        self.record
            .last(self.trainer.reported_model(), &metric.to_string())
    }
}

fn evaluate_into(
    rec: &mut RunRecord,
    epoch: usize,
    tag: &str,
    scorer: &Scorer,
    eval: &Dataset,
    metrics: &[Metric],
) -> Result<(), ExperimentError> {
    let report = evaluate_model(scorer, eval, metrics)?;
    for s in &report.summaries {
        rec.push(epoch, tag, &s.metric.to_string(), s.value)?;
    }
    Ok(())
}

fn stats_into(rec: &mut RunRecord, epoch: usize, tag: &str, stats: &EpochStats) -> Result<(), TrainError> {
    stats.record(rec, epoch, tag)
}

/// Train one regime from `init` for `cfg.epochs_outer` epochs, evaluating on
/// `eval` before training (epoch 0) and after every (outer) epoch.
///
/// Adversarial trainers start both generator and discriminator from `init`;
/// Dual-D starts both of its models from `init` and draws the evaluation
/// model once per run.
pub fn run_trainer(
    trainer: TrainerName,
    init: &Scorer,
    train: &Dataset,
    eval: &Dataset,
    cfg: &TrainConfig,
    metrics: &[Metric],
) -> Result<TrainOutcome, ExperimentError> {
    cfg.validate()?;
    init.check_dataset(train)?;
    init.check_dataset(eval)?;
    let stream = |s: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
        r.set_stream(s);
        r
    };
    let mut rng = stream(0);
    let mut rec = RunRecord::new();
    let mut chosen = None;
    let models = match trainer {
        TrainerName::IrganPointwise | TrainerName::IrganPairwise => {
            let mut g = SoftmaxPolicy::new(init.clone(), cfg.temperature)?;
            let mut d = init.clone();
            evaluate_into(&mut rec, 0, "generator", &g.scorer, eval, metrics)?;
            evaluate_into(&mut rec, 0, "discriminator", &d, eval, metrics)?;
            for epoch in 1..=cfg.epochs_outer {
                let stats = if trainer == TrainerName::IrganPointwise {
                    irgan_pointwise_epoch(&mut g, &mut d, train, cfg, &mut rng)?
                } else {
                    irgan_pairwise_epoch(&mut g, &mut d, train, cfg, &mut rng)?
                };
                stats_into(&mut rec, epoch, "irgan", &stats)?;
                evaluate_into(&mut rec, epoch, "generator", &g.scorer, eval, metrics)?;
                evaluate_into(&mut rec, epoch, "discriminator", &d, eval, metrics)?;
            }
            vec![("generator".to_string(), g.scorer), ("discriminator".to_string(), d)]
        }
        TrainerName::SingleD | TrainerName::Dns => {
            let tag = trainer.reported_model();
            let mut m = init.clone();
            evaluate_into(&mut rec, 0, tag, &m, eval, metrics)?;
            for epoch in 1..=cfg.epochs_outer {
                let stats = if trainer == TrainerName::SingleD {
                    single_d_epoch(&mut m, train, cfg, &mut rng)?
                } else {
                    dns_epoch(&mut m, train, cfg, &mut rng)?
                };
                stats_into(&mut rec, epoch, tag, &stats)?;
                evaluate_into(&mut rec, epoch, tag, &m, eval, metrics)?;
            }
            vec![(tag.to_string(), m)]
        }
        TrainerName::DualD => {
            let choice = DualChoice::draw(&mut stream(3));
            chosen = Some(choice);
            let (mut a, mut b) = (init.clone(), init.clone());
            let (mut rng_a, mut rng_b) = (stream(1), stream(2));
            for epoch in 0..=cfg.epochs_outer {
                if epoch > 0 {
                    let (sa, sb) = dual_d_outer_epoch(&mut a, &mut b, train, cfg, &mut rng_a, &mut rng_b)?;
                    stats_into(&mut rec, epoch, "dual-d-a", &sa)?;
                    stats_into(&mut rec, epoch, "dual-d-b", &sb)?;
                }
                evaluate_into(&mut rec, epoch, "dual-d-a", &a, eval, metrics)?;
                evaluate_into(&mut rec, epoch, "dual-d-b", &b, eval, metrics)?;
                let pick = if choice == DualChoice::A { &a } else { &b };
                evaluate_into(&mut rec, epoch, "dual-d-chosen", pick, eval, metrics)?;
            }
            vec![("dual-d-a".to_string(), a), ("dual-d-b".to_string(), b)]
        }
    };
    Ok(TrainOutcome {
        trainer,
        record: rec,
        models,
        chosen,
    })
}

/// Per-trainer config under a shared budget of `budget` single-model epochs.
///
/// One Dual-D outer epoch with `epochs_inner = E` trains two models for `E`
/// epochs each and counts as `2E`. Returns the config and, when the budget
/// cannot be met exactly, the number of epochs actually spent.
pub fn matched_config(trainer: TrainerName, base: &TrainConfig, budget: usize) -> (TrainConfig, Option<usize>) {
    let mut cfg = base.clone();
    if trainer == TrainerName::DualD {
        let per_outer = 2 * cfg.epochs_inner;
        cfg.epochs_outer = ((budget as f64 / per_outer as f64).round() as usize).max(1);
        let spent = cfg.epochs_outer * per_outer;
        (cfg, (spent != budget).then_some(spent))
    } else {
        cfg.epochs_outer = budget;
        (cfg, None)
    }
}

/// Single-model epochs spent by a config.
pub fn budget_of(trainer: TrainerName, cfg: &TrainConfig) -> usize {
    if trainer == TrainerName::DualD {
        2 * cfg.epochs_outer * cfg.epochs_inner
    } else {
        cfg.epochs_outer
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> DataSource {
        DataSource::Synthetic {
            spec: SyntheticSpec {
                num_queries: 6,
                pool_size: 20,
                relevant_fraction: 0.1,
                feature_dim: 4,
                noise_sigma: 0.1,
                seed: 0,
            },
            holdout_queries: 4,
        }
    }

    #[test]
    fn names_roundtrip() {
        for t in TrainerName::ALL {
            assert_eq!(t.as_str().parse::<TrainerName>().unwrap(), t);
        }
        assert!("bogus".parse::<TrainerName>().is_err());
    }

    #[test]
    fn budgets() {
        let base = TrainConfig {
            epochs_inner: 5,
            ..TrainConfig::default()
        };
        let (c, warn) = matched_config(TrainerName::DualD, &base, 50);
        assert_eq!((c.epochs_outer, warn), (5, None));
        let (c, warn) = matched_config(TrainerName::DualD, &base, 52);
        assert_eq!((c.epochs_outer, warn), (5, Some(50)));
        assert_eq!(budget_of(TrainerName::SingleD, &matched_config(TrainerName::SingleD, &base, 50).0), 50);
    }

    #[test]
    fn every_trainer_runs_and_is_deterministic() {
        let (train, eval) = load_data(&tiny(), 3).unwrap();
        let pre = TrainConfig {
            epochs_outer: 3,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let (init, rec) = pretrain(ModelSpec::Linear, 0.0, &train, &pre).unwrap();
        assert_eq!(rec.series("pretrain", "log_likelihood").len(), 4);
        let cfg = TrainConfig {
            epochs_outer: 2,
            epochs_inner: 2,
            ..TrainConfig::default()
        };
        let metrics = [Metric::NdcgAt(5), Metric::PrecisionAt(5)];
        for t in TrainerName::ALL {
            let a = run_trainer(t, &init, &train, &eval, &cfg, &metrics).unwrap();
            let b = run_trainer(t, &init, &train, &eval, &cfg, &metrics).unwrap();
            assert_eq!(a.record, b.record, "{t}");
            assert_eq!(a.record.series(t.reported_model(), "ndcg@5").len(), 3, "{t}");
            assert!(a.final_metric(Metric::PrecisionAt(5)).is_some());
        }
    }
}
