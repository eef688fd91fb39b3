//! Generator distributions over a query's candidate pool.
//!
//! Pools are passed as slices of pool positions (indices into
//! [`Dataset::pool`]), so the same query can be sampled over its full pool or
//! over the pool minus its positives.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::math::{axpy, sigmoid, softmax};
use crate::scorers::{Scorer, ScorerError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("temperature must be positive, got {0}")]
    Temperature(f64),
    #[error("document at pool position {0} is not in the candidate pool")]
    NotInPool(usize),
    #[error("cannot draw {k} distinct documents from a pool of {pool}")]
    PoolTooSmall { k: usize, pool: usize },
    #[error("sampling weights are not a valid distribution: {0}")]
    Weights(String),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

/// Draw `k` indices into `weights`, with or without replacement.
pub fn sample_weighted<R: Rng + ?Sized>(
    weights: &[f64],
    k: usize,
    replacement: bool,
    rng: &mut R,
) -> Result<Vec<usize>, PolicyError> {
    if weights.is_empty() {
        return Err(PolicyError::EmptyPool);
    }
    if k == 0 {
        return Err(PolicyError::NoSamples);
    }
    if weights.len() == 1 && replacement {
        return Ok(vec![0; k]);
    }
    if replacement {
        let dist = WeightedIndex::new(weights).map_err(|e| PolicyError::Weights(e.to_string()))?;
        Ok((0..k).map(|_| dist.sample(rng)).collect())
    } else {
        if k > weights.len() {
            return Err(PolicyError::PoolTooSmall {
                k,
                pool: weights.len(),
            });
        }
        let picked = rand::seq::index::sample_weighted(rng, weights.len(), |i| weights[i], k)
            .map_err(|e| PolicyError::Weights(e.to_string()))?;
        Ok(picked.into_iter().collect())
    }
}

/// `p_θ(d|q) ∝ exp(f_θ(d, q) / T)` over a candidate pool.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicy {
    pub scorer: Scorer,
    temperature: f64,
}

impl SoftmaxPolicy {
    pub fn new(scorer: Scorer, temperature: f64) -> Result<Self, PolicyError> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(PolicyError::Temperature(temperature));
        }
        Ok(Self {
            scorer,
            temperature,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn probs(&self, ds: &Dataset, qi: usize, pool: &[usize]) -> Result<Vec<f64>, PolicyError> {
        if pool.is_empty() {
            return Err(PolicyError::EmptyPool);
        }
        let scores = self.scorer.score_pool(ds, qi, pool)?;
        Ok(softmax(&scores, self.temperature))
    }

    /// `K` draws from [`Self::probs`]; returns pool positions.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        ds: &Dataset,
        qi: usize,
        pool: &[usize],
        k: usize,
        replacement: bool,
        rng: &mut R,
    ) -> Result<Vec<usize>, PolicyError> {
        if k == 0 {
            return Err(PolicyError::NoSamples);
        }
        let p = self.probs(ds, qi, pool)?;
        Ok(sample_weighted(&p, k, replacement, rng)?
            .into_iter()
            .map(|i| pool[i])
            .collect())
    }

    /// `Σ_i p_i ∇f_i` over the pool, given its probabilities.
    pub fn expected_score_gradient(
        &self,
        ds: &Dataset,
        qi: usize,
        pool: &[usize],
        probs: &[f64],
    ) -> Result<Vec<f64>, PolicyError> {
        let mut g = vec![0.0; self.scorer.num_params()];
        for (&di, &p) in pool.iter().zip(probs) {
            self.scorer.accumulate_gradient(ds.pair(qi, di), p, &mut g)?;
        }
        Ok(g)
    }

    /// `out += scale * ∇ log p(doc|q)` given precomputed `Σ p_i ∇f_i`.
    pub fn accumulate_log_prob_gradient(
        &self,
        ds: &Dataset,
        qi: usize,
        doc: usize,
        expected: &[f64],
        scale: f64,
        out: &mut [f64],
    ) -> Result<(), PolicyError> {
        let s = scale / self.temperature;
        self.scorer.accumulate_gradient(ds.pair(qi, doc), s, out)?;
        axpy(-s, expected, out);
        Ok(())
    }

    /// `∇_θ log p_θ(doc|q) = (∇f_doc − Σ_i p_i ∇f_i) / T`.
    pub fn log_prob_gradient(
        &self,
        ds: &Dataset,
        qi: usize,
        pool: &[usize],
        doc: usize,
    ) -> Result<Vec<f64>, PolicyError> {
        if !pool.contains(&doc) {
            return Err(PolicyError::NotInPool(doc));
        }
        let probs = self.probs(ds, qi, pool)?;
        let expected = self.expected_score_gradient(ds, qi, pool, &probs)?;
        let mut g = vec![0.0; self.scorer.num_params()];
        self.accumulate_log_prob_gradient(ds, qi, doc, &expected, 1.0, &mut g)?;
        Ok(g)
    }
}

/// Sampling weights `M(d|q) / Σ_d' M(d'|q)` with `M = σ(f)`.
pub fn normalized_discriminator_probs(
    model: &Scorer,
    ds: &Dataset,
    qi: usize,
    pool: &[usize],
) -> Result<Vec<f64>, PolicyError> {
    if pool.is_empty() {
        return Err(PolicyError::EmptyPool);
    }
    let mut w: Vec<f64> = model
        .score_pool(ds, qi, pool)?
        .into_iter()
        .map(sigmoid)
        .collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= z);
    Ok(w)
}

/// `k` draws with replacement from the σ-normalized distribution of `model`;
/// returns pool positions.
pub fn normalized_discriminator_sampling<R: Rng + ?Sized>(
    model: &Scorer,
    ds: &Dataset,
    qi: usize,
    pool: &[usize],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>, PolicyError> {
    let w = normalized_discriminator_probs(model, ds, qi, pool)?;
    Ok(sample_weighted(&w, k, true, rng)?
        .into_iter()
        .map(|i| pool[i])
        .collect())
}
