//! Rewards, baselines, the REINFORCE generator gradient and the
//! discriminator objectives.

use rand::Rng;

use super::{Baseline, RewardKind, TrainError};
use crate::dataset::{Dataset, Pair};
use crate::math::{axpy, log_one_minus_sigmoid, log_sigmoid, sigmoid, softplus};
use crate::policy::{sample_weighted, SoftmaxPolicy};
use crate::scorers::{Scorer, ScorerError};

/// `(query index, pool position)`
pub type Sample = (usize, usize);

/// `log(1 + exp(f(d, q)))`.
pub fn reinforce_reward_raw(d: &Scorer, pair: Pair<'_>) -> Result<f64, ScorerError> {
    Ok(softplus(d.score(pair)?))
}

/// `2(σ(f(d, q)) − b)`.
pub fn reinforce_reward_baselined(d: &Scorer, pair: Pair<'_>, b: f64) -> Result<f64, ScorerError> {
    Ok(RewardKind::SigmoidBaselined(b).reward(d.score(pair)?))
}

/// Exact value-function baseline `Σ_d p_θ(d|q) · reward(d)`.
pub fn value_function_baseline<F>(
    policy: &SoftmaxPolicy,
    ds: &Dataset,
    qi: usize,
    pool: &[usize],
    reward: F,
) -> Result<f64, TrainError>
where
    F: Fn(usize) -> Result<f64, ScorerError>,
{
    let probs = policy.probs(ds, qi, pool)?;
    expected_reward(&probs, pool, &reward)
}

fn expected_reward<F>(probs: &[f64], pool: &[usize], reward: &F) -> Result<f64, TrainError>
where
    F: Fn(usize) -> Result<f64, ScorerError>,
{
    let mut v = 0.0;
    for (&p, &d) in probs.iter().zip(pool) {
        v += p * reward(d)?;
    }
    Ok(v)
}

/// Monte-Carlo value-function baseline from `n` draws: `(estimate, standard error)`.
pub fn value_function_baseline_mc<F, R>(
    policy: &SoftmaxPolicy,
    ds: &Dataset,
    qi: usize,
    pool: &[usize],
    reward: F,
    n: usize,
    rng: &mut R,
) -> Result<(f64, f64), TrainError>
where
    F: Fn(usize) -> Result<f64, ScorerError>,
    R: Rng + ?Sized,
{
    let probs = policy.probs(ds, qi, pool)?;
    mc_mean(&probs, pool, &reward, n, rng)
}

fn mc_mean<F, R>(
    probs: &[f64],
    pool: &[usize],
    reward: &F,
    n: usize,
    rng: &mut R,
) -> Result<(f64, f64), TrainError>
where
    F: Fn(usize) -> Result<f64, ScorerError>,
    R: Rng + ?Sized,
{
    let draws = sample_weighted(probs, n, true, rng)?;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, slot) in draws.into_iter().enumerate() {
        let r = reward(pool[slot])?;
        let delta = r - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (r - mean);
    }
    let se = if n > 1 {
        (m2 / (n - 1) as f64 / n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok((mean, se))
}

/// One REINFORCE estimate for a query.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSample {
    /// `(1/K) Σ_k ∇ log p_θ(d_k|q) (reward(d_k) − b(q))`
    pub gradient: Vec<f64>,
    pub mean_reward: f64,
    pub baseline: f64,
}

/// REINFORCE gradient over `k` draws from the policy.
///
/// The draws are taken first; a Monte-Carlo baseline then consumes `n`
/// further draws from the same stream.
#[allow(clippy::too_many_arguments)]
pub fn generator_gradient<F, R>(
    policy: &SoftmaxPolicy,
    ds: &Dataset,
    qi: usize,
    pool: &[usize],
    k: usize,
    reward: F,
    baseline: Baseline,
    replacement: bool,
    rng: &mut R,
) -> Result<GeneratorSample, TrainError>
where
    F: Fn(usize) -> Result<f64, ScorerError>,
    R: Rng + ?Sized,
{
    let probs = policy.probs(ds, qi, pool)?;
    let slots = sample_weighted(&probs, k, replacement, rng)?;
    let rewards: Vec<f64> = slots
        .iter()
        .map(|&s| reward(pool[s]))
        .collect::<Result<_, _>>()?;
    let b = match baseline {
        Baseline::Constant(b) => b,
        Baseline::ValueExact => expected_reward(&probs, pool, &reward)?,
        Baseline::ValueMc(n) => mc_mean(&probs, pool, &reward, n, rng)?.0,
    };

    let mut gradient = vec![0.0; policy.scorer.num_params()];
    let scale = 1.0 / (k as f64 * policy.temperature());
    let mut total = 0.0;
    for (&s, &r) in slots.iter().zip(&rewards) {
        let c = (r - b) * scale;
        if c != 0.0 {
            policy
                .scorer
                .accumulate_gradient(ds.pair(qi, pool[s]), c, &mut gradient)?;
            total += c;
        }
    }
    if pool.len() == 1 {
        // log p ≡ 0 on a single-document pool
        gradient.iter_mut().for_each(|g| *g = 0.0);
    } else if total != 0.0 {
        let expected = policy.expected_score_gradient(ds, qi, pool, &probs)?;
        axpy(-total, &expected, &mut gradient);
    }
    Ok(GeneratorSample {
        gradient,
        mean_reward: rewards.iter().sum::<f64>() / k as f64,
        baseline: b,
    })
}

/// `Σ_pos log σ(f) + Σ_neg log(1 − σ(f))` and its gradient.
pub fn discriminator_objective_gradient(
    d: &Scorer,
    ds: &Dataset,
    positives: &[Sample],
    negatives: &[Sample],
) -> Result<(f64, Vec<f64>), ScorerError> {
    let mut grad = vec![0.0; d.num_params()];
    let mut obj = 0.0;
    for &(qi, di) in positives {
        let pair = ds.pair(qi, di);
        let f = d.score(pair)?;
        obj += log_sigmoid(f);
        d.accumulate_gradient(pair, 1.0 - sigmoid(f), &mut grad)?;
    }
    for &(qi, di) in negatives {
        let pair = ds.pair(qi, di);
        let f = d.score(pair)?;
        obj += log_one_minus_sigmoid(f);
        d.accumulate_gradient(pair, -sigmoid(f), &mut grad)?;
    }
    Ok((obj, grad))
}

/// One gradient-ascent step on the discriminator objective; returns the
/// objective before the step.
pub fn discriminator_step(
    d: &mut Scorer,
    ds: &Dataset,
    positives: &[Sample],
    negatives: &[Sample],
    lr: f64,
) -> Result<f64, TrainError> {
    let (obj, grad) = discriminator_objective_gradient(d, ds, positives, negatives)?;
    if lr != 0.0 {
        d.params.add_scaled(lr, &grad);
        if !d.params.all_finite() {
            return Err(TrainError::NonFinite("discriminator".into()));
        }
    }
    Ok(obj)
}

/// `(query, preferred doc, other doc)`
pub type Triple = (usize, usize, usize);

/// `Σ log σ(f(d_i) − f(d_j))` over triples and its gradient.
pub fn pairwise_objective_gradient(
    d: &Scorer,
    ds: &Dataset,
    triples: &[Triple],
) -> Result<(f64, Vec<f64>), ScorerError> {
    let mut grad = vec![0.0; d.num_params()];
    let mut obj = 0.0;
    for &(qi, i, j) in triples {
        let (pi, pj) = (ds.pair(qi, i), ds.pair(qi, j));
        let delta = d.score(pi)? - d.score(pj)?;
        obj += log_sigmoid(delta);
        let c = 1.0 - sigmoid(delta);
        d.accumulate_gradient(pi, c, &mut grad)?;
        d.accumulate_gradient(pj, -c, &mut grad)?;
    }
    Ok((obj, grad))
}

pub fn pairwise_discriminator_step(
    d: &mut Scorer,
    ds: &Dataset,
    triples: &[Triple],
    lr: f64,
) -> Result<f64, TrainError> {
    let (obj, grad) = pairwise_objective_gradient(d, ds, triples)?;
    if lr != 0.0 {
        d.params.add_scaled(lr, &grad);
        if !d.params.all_finite() {
            return Err(TrainError::NonFinite("discriminator".into()));
        }
    }
    Ok(obj)
}

/// `p_true(d|q)` proportional to the relevance grade.
fn true_distribution(ds: &Dataset, qi: usize) -> Vec<(usize, f64)> {
    let rel = ds.relevance(qi);
    let total: f64 = rel.iter().map(|&r| r as f64).sum();
    rel.iter()
        .enumerate()
        .filter(|(_, &r)| r > 0)
        .map(|(i, &r)| (i, r as f64 / total))
        .collect()
}

fn true_term(d: &Scorer, ds: &Dataset, qi: usize) -> Result<f64, ScorerError> {
    let mut t = 0.0;
    for (di, p) in true_distribution(ds, qi) {
        t += p * log_sigmoid(d.score(ds.pair(qi, di))?);
    }
    Ok(t)
}

/// Largest pool for which [`irgan_objective`] enumerates instead of sampling.
pub const EXACT_OBJECTIVE_POOL_LIMIT: usize = 1000;

/// Minimax value `Σ_q E_true[log D] + E_{p_θ}[log(1 − D)]` by enumeration.
///
/// Queries without a relevant document contribute only the generator term.
pub fn irgan_objective_exact(g: &SoftmaxPolicy, d: &Scorer, ds: &Dataset) -> Result<f64, TrainError> {
    let mut j = 0.0;
    for qi in 0..ds.num_queries() {
        let pool: Vec<usize> = (0..ds.pool(qi).len()).collect();
        let probs = g.probs(ds, qi, &pool)?;
        j += true_term(d, ds, qi)?;
        for (&p, &di) in probs.iter().zip(&pool) {
            j += p * log_one_minus_sigmoid(d.score(ds.pair(qi, di))?);
        }
    }
    Ok(j)
}

/// Same objective with the generator term sampled: `(estimate, standard error)`.
pub fn irgan_objective_mc<R: Rng + ?Sized>(
    g: &SoftmaxPolicy,
    d: &Scorer,
    ds: &Dataset,
    n_mc: usize,
    rng: &mut R,
) -> Result<(f64, f64), TrainError> {
    if n_mc < 1 {
        return Err(TrainError::Config("`n_mc` must be at least 1".into()));
    }
    let mut j = 0.0;
    let mut var = 0.0;
    for qi in 0..ds.num_queries() {
        let pool: Vec<usize> = (0..ds.pool(qi).len()).collect();
        let probs = g.probs(ds, qi, &pool)?;
        j += true_term(d, ds, qi)?;
        let term = |di: usize| Ok(log_one_minus_sigmoid(d.score(ds.pair(qi, di))?));
        let (m, se) = mc_mean(&probs, &pool, &term, n_mc, rng)?;
        j += m;
        if se.is_finite() {
            var += se * se;
        }
    }
    Ok((j, var.sqrt()))
}

/// Exact when every pool has at most [`EXACT_OBJECTIVE_POOL_LIMIT`] documents,
/// Monte-Carlo with `n_mc` draws per query otherwise.
pub fn irgan_objective<R: Rng + ?Sized>(
    g: &SoftmaxPolicy,
    d: &Scorer,
    ds: &Dataset,
    n_mc: usize,
    rng: &mut R,
) -> Result<f64, TrainError> {
    if n_mc < 1 {
        return Err(TrainError::Config("`n_mc` must be at least 1".into()));
    }
    let small = (0..ds.num_queries()).all(|qi| ds.pool(qi).len() <= EXACT_OBJECTIVE_POOL_LIMIT);
    if small {
        irgan_objective_exact(g, d, ds)
    } else {
        Ok(irgan_objective_mc(g, d, ds, n_mc, rng)?.0)
    }
}
