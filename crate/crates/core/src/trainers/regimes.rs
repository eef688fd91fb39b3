//! Epoch loops for every training regime. All of them are plain SGD and are
//! deterministic functions of (parameters, dataset, config, rng state).

use rand::seq::SliceRandom;
use rand::Rng;

use super::objectives::{
    discriminator_step, generator_gradient, irgan_objective, pairwise_discriminator_step, Sample,
    Triple,
};
use super::{RunRecord, TrainConfig, TrainError};
use crate::dataset::Dataset;
use crate::math::axpy;
use crate::policy::{normalized_discriminator_sampling, SoftmaxPolicy};
use crate::scorers::Scorer;

/// Named scalar measurements produced by one epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochStats {
    values: Vec<(&'static str, f64)>,
}

impl EpochStats {
    fn set(&mut self, key: &'static str, value: f64) {
        match self.values.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.values.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| *k == key).map(|&(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.values.iter().copied()
    }

    pub fn record(&self, rec: &mut RunRecord, epoch: usize, model: &str) -> Result<(), TrainError> {
        for (k, v) in self.iter() {
            rec.push(epoch, model, k, v)?;
        }
        Ok(())
    }
}

fn shuffled_batches<R: Rng + ?Sized>(mut queries: Vec<usize>, batch: usize, rng: &mut R) -> Vec<Vec<usize>> {
    queries.shuffle(rng);
    queries.chunks(batch).map(|c| c.to_vec()).collect()
}

fn full_pool(ds: &Dataset, qi: usize) -> Vec<usize> {
    (0..ds.pool(qi).len()).collect()
}

fn check_finite(s: &Scorer, what: &str) -> Result<(), TrainError> {
    if s.params.all_finite() {
        Ok(())
    } else {
        Err(TrainError::NonFinite(what.to_string()))
    }
}

/// Queries usable for negative sampling: at least one positive and a
/// non-empty negative pool. Returns `(eligible, skipped)`.
fn contrastive_queries(ds: &Dataset, exclude_positives: bool) -> (Vec<usize>, usize) {
    let eligible: Vec<usize> = (0..ds.num_queries())
        .filter(|&qi| {
            ds.has_positive(qi) && ds.positives(qi).len() < ds.pool(qi).len()
        })
        .collect();
    let _ = exclude_positives;
    let skipped = ds.num_queries() - eligible.len();
    (eligible, skipped)
}

/// Mean `log p_θ(d⁺|q)` over all (query, positive) pairs.
pub fn mean_log_likelihood(g: &SoftmaxPolicy, ds: &Dataset) -> Result<f64, TrainError> {
    let mut total = 0.0;
    let mut n = 0usize;
    for qi in 0..ds.num_queries() {
        let pos = ds.positives(qi);
        if pos.is_empty() {
            continue;
        }
        let probs = g.probs(ds, qi, &full_pool(ds, qi))?;
        for di in pos {
            total += probs[di].ln();
            n += 1;
        }
    }
    Ok(if n > 0 { total / n as f64 } else { 0.0 })
}

/// Maximum-likelihood pretraining of a softmax generator on the relevant
/// documents; `cfg.epochs_outer` epochs of minibatch gradient ascent.
///
/// Records `log_likelihood` for epoch 0 (before training) and after every
/// epoch, plus the number of skipped queries, under model tag `pretrain`.
pub fn pretrain_mle<R: Rng + ?Sized>(
    g: &mut SoftmaxPolicy,
    ds: &Dataset,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<RunRecord, TrainError> {
    cfg.validate()?;
    let eligible: Vec<usize> = (0..ds.num_queries()).filter(|&qi| ds.has_positive(qi)).collect();
    let skipped = ds.num_queries() - eligible.len();
    if skipped > 0 {
        log::warn!("pretraining skips {skipped} queries without a relevant document");
    }
    let mut rec = RunRecord::new();
    rec.push(0, "pretrain", "log_likelihood", mean_log_likelihood(g, ds)?)?;
    rec.push(0, "pretrain", "skipped_queries", skipped as f64)?;
    for epoch in 1..=cfg.epochs_outer {
        for batch in shuffled_batches(eligible.clone(), cfg.batch_size, rng) {
            let mut grad = vec![0.0; g.scorer.num_params()];
            for &qi in &batch {
                let pool = full_pool(ds, qi);
                let pos = ds.positives(qi);
                if pool.len() == 1 {
                    continue;
                }
                let probs = g.probs(ds, qi, &pool)?;
                let expected = g.expected_score_gradient(ds, qi, &pool, &probs)?;
                let s = 1.0 / g.temperature();
                for &di in &pos {
                    g.scorer.accumulate_gradient(ds.pair(qi, di), s, &mut grad)?;
                }
                axpy(-s * pos.len() as f64, &expected, &mut grad);
            }
            if cfg.learning_rate != 0.0 {
                g.scorer.params.add_scaled(cfg.learning_rate, &grad);
                check_finite(&g.scorer, "generator")?;
            }
        }
        rec.push(epoch, "pretrain", "log_likelihood", mean_log_likelihood(g, ds)?)?;
        rec.push(epoch, "pretrain", "skipped_queries", skipped as f64)?;
    }
    Ok(rec)
}

/// Adversarial pointwise epoch.
///
/// Per query batch the discriminator sees the relevant documents as positives
/// and `k` generator draws per query (full pool) as negatives; the generator
/// then takes a REINFORCE step with `cfg.reward` and `cfg.baseline` against
/// the updated discriminator. Stats: `d_objective`, `g_reward`, `objective`
/// (minimax value after the epoch) and `skipped_queries`.
pub fn irgan_pointwise_epoch<R: Rng + ?Sized>(
    g: &mut SoftmaxPolicy,
    d: &mut Scorer,
    ds: &Dataset,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<EpochStats, TrainError> {
    cfg.validate()?;
    let eligible: Vec<usize> = (0..ds.num_queries()).filter(|&qi| ds.has_positive(qi)).collect();
    let skipped = ds.num_queries() - eligible.len();
    let mut d_obj = 0.0;
    let mut reward_sum = 0.0;
    let mut reward_n = 0usize;
    for batch in shuffled_batches(eligible, cfg.batch_size, rng) {
        for step in 0..cfg.d_steps {
            let mut pos: Vec<Sample> = Vec::new();
            let mut neg: Vec<Sample> = Vec::new();
            for &qi in &batch {
                pos.extend(ds.positives(qi).into_iter().map(|di| (qi, di)));
                let drawn = g.sample(ds, qi, &full_pool(ds, qi), cfg.k, cfg.replacement, rng)?;
                neg.extend(drawn.into_iter().map(|di| (qi, di)));
            }
            let obj = discriminator_step(d, ds, &pos, &neg, cfg.learning_rate)?;
            if step == 0 {
                d_obj += obj;
            }
        }
        for _ in 0..cfg.g_steps {
            let mut grad = vec![0.0; g.scorer.num_params()];
            for &qi in &batch {
                let reward = |di: usize| Ok(cfg.reward.reward(d.score(ds.pair(qi, di))?));
                let sample = generator_gradient(
                    g,
                    ds,
                    qi,
                    &full_pool(ds, qi),
                    cfg.k,
                    reward,
                    cfg.baseline,
                    cfg.replacement,
                    rng,
                )?;
                axpy(1.0, &sample.gradient, &mut grad);
                reward_sum += sample.mean_reward;
                reward_n += 1;
            }
            if cfg.learning_rate != 0.0 {
                g.scorer.params.add_scaled(cfg.learning_rate, &grad);
                check_finite(&g.scorer, "generator")?;
            }
        }
    }
    let mut stats = EpochStats::default();
    stats.set("d_objective", d_obj);
    stats.set(
        "g_reward",
        if reward_n > 0 { reward_sum / reward_n as f64 } else { 0.0 },
    );
    stats.set("objective", irgan_objective(g, d, ds, 100, rng)?);
    stats.set("skipped_queries", skipped as f64);
    Ok(stats)
}

/// Adversarial pairwise epoch.
///
/// The generator samples `d_j` from the pool minus the positives; each draw
/// is paired with a uniformly chosen positive `d_i`. The discriminator
/// maximizes `log σ(f(d_i) − f(d_j))`; the generator's reward for `d_j` is
/// `cfg.reward` applied to `f(d_j) − f(d_i)`.
pub fn irgan_pairwise_epoch<R: Rng + ?Sized>(
    g: &mut SoftmaxPolicy,
    d: &mut Scorer,
    ds: &Dataset,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<EpochStats, TrainError> {
    cfg.validate()?;
    let (eligible, skipped) = contrastive_queries(ds, true);
    let mut d_obj = 0.0;
    let mut reward_sum = 0.0;
    let mut reward_n = 0usize;
    for batch in shuffled_batches(eligible, cfg.batch_size, rng) {
        for step in 0..cfg.d_steps {
            let mut triples: Vec<Triple> = Vec::new();
            for &qi in &batch {
                let pos = ds.positives(qi);
                let negs = ds.candidates(qi, true);
                for dj in g.sample(ds, qi, &negs, cfg.k, cfg.replacement, rng)? {
                    let di = pos[rng.random_range(0..pos.len())];
                    triples.push((qi, di, dj));
                }
            }
            let obj = pairwise_discriminator_step(d, ds, &triples, cfg.learning_rate)?;
            if step == 0 {
                d_obj += obj;
            }
        }
        for _ in 0..cfg.g_steps {
            let mut grad = vec![0.0; g.scorer.num_params()];
            for &qi in &batch {
                let pos = ds.positives(qi);
                let anchor = pos[rng.random_range(0..pos.len())];
                let f_anchor = d.score(ds.pair(qi, anchor))?;
                let reward = |dj: usize| Ok(cfg.reward.reward(d.score(ds.pair(qi, dj))? - f_anchor));
                let sample = generator_gradient(
                    g,
                    ds,
                    qi,
                    &ds.candidates(qi, true),
                    cfg.k,
                    reward,
                    cfg.baseline,
                    cfg.replacement,
                    rng,
                )?;
                axpy(1.0, &sample.gradient, &mut grad);
                reward_sum += sample.mean_reward;
                reward_n += 1;
            }
            if cfg.learning_rate != 0.0 {
                g.scorer.params.add_scaled(cfg.learning_rate, &grad);
                check_finite(&g.scorer, "generator")?;
            }
        }
    }
    let mut stats = EpochStats::default();
    stats.set("d_objective", d_obj);
    stats.set(
        "g_reward",
        if reward_n > 0 { reward_sum / reward_n as f64 } else { 0.0 },
    );
    stats.set("skipped_queries", skipped as f64);
    Ok(stats)
}

/// One epoch of discriminator training on negatives drawn from the
/// σ-normalized distribution of `sampler`, or of the learner itself when
/// `sampler` is `None`. Positives are the judged relevant documents.
pub fn contrastive_epoch<R: Rng + ?Sized>(
    learner: &mut Scorer,
    sampler: Option<&Scorer>,
    ds: &Dataset,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<EpochStats, TrainError> {
    cfg.validate()?;
    let (eligible, skipped) = contrastive_queries(ds, cfg.exclude_positives);
    let mut d_obj = 0.0;
    for batch in shuffled_batches(eligible, cfg.batch_size, rng) {
        let mut pos: Vec<Sample> = Vec::new();
        let mut neg: Vec<Sample> = Vec::new();
        for &qi in &batch {
            pos.extend(ds.positives(qi).into_iter().map(|di| (qi, di)));
            let pool = ds.candidates(qi, cfg.exclude_positives);
            let source = sampler.unwrap_or(learner);
            let drawn = normalized_discriminator_sampling(source, ds, qi, &pool, cfg.k, rng)?;
            neg.extend(drawn.into_iter().map(|di| (qi, di)));
        }
        d_obj += discriminator_step(learner, ds, &pos, &neg, cfg.learning_rate)?;
    }
    let mut stats = EpochStats::default();
    stats.set("d_objective", d_obj);
    stats.set("skipped_queries", skipped as f64);
    Ok(stats)
}

/// Self-contrastive epoch: the model samples its own negatives.
pub fn single_d_epoch<R: Rng + ?Sized>(
    m: &mut Scorer,
    ds: &Dataset,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<EpochStats, TrainError> {
    contrastive_epoch(m, None, ds, cfg, rng)
}

/// Which of the two co-trained discriminators is used at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualChoice {
    A,
    B,
}

impl DualChoice {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random_bool(0.5) {
            DualChoice::A
        } else {
            DualChoice::B
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DualChoice::A => "a",
            DualChoice::B => "b",
        }
    }
}

/// One co-training outer epoch.
///
/// Both models are snapshotted first. `a` trains for `epochs_inner` epochs on
/// negatives from the frozen snapshot of `b`, then `b` trains for
/// `epochs_inner` epochs on negatives from the frozen snapshot of `a`. Each
/// model consumes only its own rng stream, so identical models with identical
/// streams stay identical.
pub fn dual_d_outer_epoch<R: Rng + ?Sized>(
    a: &mut Scorer,
    b: &mut Scorer,
    ds: &Dataset,
    cfg: &TrainConfig,
    rng_a: &mut R,
    rng_b: &mut R,
) -> Result<(EpochStats, EpochStats), TrainError> {
    cfg.validate()?;
    let frozen_a = a.clone();
    let frozen_b = b.clone();
    let (sum_a, sum_b) = (frozen_a.params.checksum(), frozen_b.params.checksum());

    let mut stats_a = EpochStats::default();
    for _ in 0..cfg.epochs_inner {
        stats_a = contrastive_epoch(a, Some(&frozen_b), ds, cfg, rng_a)?;
    }
    let mut stats_b = EpochStats::default();
    for _ in 0..cfg.epochs_inner {
        stats_b = contrastive_epoch(b, Some(&frozen_a), ds, cfg, rng_b)?;
    }
    debug_assert_eq!(frozen_a.params.checksum(), sum_a);
    debug_assert_eq!(frozen_b.params.checksum(), sum_b);
    Ok((stats_a, stats_b))
}

/// Draw `min(k, pool)` distinct candidates uniformly from `pool` and return
/// the one `d` scores highest; ties go to the lower pool position.
pub fn dns_negative<R: Rng + ?Sized>(
    d: &Scorer,
    ds: &Dataset,
    qi: usize,
    pool: &[usize],
    k: usize,
    rng: &mut R,
) -> Result<usize, TrainError> {
    if pool.is_empty() {
        return Err(crate::policy::PolicyError::EmptyPool.into());
    }
    let take = k.clamp(1, pool.len());
    let mut cand: Vec<usize> = rand::seq::index::sample(rng, pool.len(), take)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    cand.sort_unstable();
    let mut best = cand[0];
    let mut best_score = d.score(ds.pair(qi, best))?;
    for &c in &cand[1..] {
        let s = d.score(ds.pair(qi, c))?;
        if s > best_score {
            best = c;
            best_score = s;
        }
    }
    Ok(best)
}

/// Dynamic negative sampling: for every positive, train against the
/// [`dns_negative`] of `dns_k` candidates from the negative pool.
pub fn dns_epoch<R: Rng + ?Sized>(
    d: &mut Scorer,
    ds: &Dataset,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<EpochStats, TrainError> {
    cfg.validate()?;
    let (eligible, skipped) = contrastive_queries(ds, true);
    let mut d_obj = 0.0;
    for batch in shuffled_batches(eligible, cfg.batch_size, rng) {
        let mut pos: Vec<Sample> = Vec::new();
        let mut neg: Vec<Sample> = Vec::new();
        for &qi in &batch {
            let pool = ds.candidates(qi, true);
            for di in ds.positives(qi) {
                pos.push((qi, di));
                let best = dns_negative(d, ds, qi, &pool, cfg.dns_k, rng)?;
                neg.push((qi, best));
            }
        }
        d_obj += discriminator_step(d, ds, &pos, &neg, cfg.learning_rate)?;
    }
    let mut stats = EpochStats::default();
    stats.set("d_objective", d_obj);
    stats.set("skipped_queries", skipped as f64);
    Ok(stats)
}
