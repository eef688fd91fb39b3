//! Training regimes: MLE pretraining, the adversarial generator/discriminator
//! game (pointwise and pairwise), self-contrastive and co-trained
//! discriminators, and dynamic negative sampling.

mod config;
mod objectives;
mod record;
mod regimes;

pub use config::{Baseline, RewardKind, TrainConfig};
pub use objectives::{
    discriminator_objective_gradient, discriminator_step, generator_gradient, irgan_objective,
    irgan_objective_exact, irgan_objective_mc, pairwise_discriminator_step,
    pairwise_objective_gradient, reinforce_reward_baselined, reinforce_reward_raw,
    value_function_baseline, value_function_baseline_mc, GeneratorSample, Sample, Triple,
    EXACT_OBJECTIVE_POOL_LIMIT,
};
pub use record::{RunRecord, RunRow};
pub use regimes::{
    contrastive_epoch, dns_epoch, dns_negative, dual_d_outer_epoch, irgan_pairwise_epoch, irgan_pointwise_epoch,
    mean_log_likelihood, pretrain_mle, single_d_epoch, DualChoice, EpochStats,
};

use crate::policy::PolicyError;
use crate::scorers::ScorerError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite parameters in {0} after update")]
    NonFinite(String),
    #[error("epoch {epoch} for {model}/{metric} does not follow epoch {last}")]
    EpochOrder {
        model: String,
        metric: String,
        epoch: usize,
        last: usize,
    },
    #[error("run record csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}
