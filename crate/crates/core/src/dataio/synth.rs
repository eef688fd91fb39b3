use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::DataError;
use crate::dataset::{build_dataset, Dataset, DatasetKind, Document, Judgment, Query, Records};
use crate::scorers::{ParamVector, Scorer, ScorerKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub num_queries: usize,
    pub pool_size: usize,
    /// Share of each pool labeled relevant, in (0, 1].
    pub relevant_fraction: f64,
    pub feature_dim: usize,
    /// Standard deviation of the label noise added to `w*·x`.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::Spec(m.to_string()));
        if self.num_queries == 0 || self.pool_size == 0 || self.feature_dim == 0 {
            return bad("num_queries, pool_size and feature_dim must be positive");
        }
        if !(self.relevant_fraction > 0.0 && self.relevant_fraction <= 1.0) {
            return bad("relevant_fraction must lie in (0, 1]");
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad("noise_sigma must be a non-negative finite number");
        }
        Ok(())
    }

    /// `ceil(relevant_fraction · pool_size)`, guarded against float round-up.
    pub fn relevant_per_query(&self) -> usize {
        ((self.relevant_fraction * self.pool_size as f64 - 1e-9).ceil() as usize).clamp(1, self.pool_size)
    }
}

/// Hidden unit-norm weight vector that generated the labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTruth {
    pub w: Vec<f64>,
}

impl PlantedTruth {
    /// Linear scorer with weights `w*` and zero bias.
    pub fn scorer(&self) -> Scorer {
        let kind = ScorerKind::Linear { dim: self.w.len() };
        let mut params = ParamVector::zeros(&kind.layout());
        params.segment_mut("w").copy_from_slice(&self.w);
        Scorer::from_params(kind, params).expect("layout matches")
    }
}

fn width(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}

fn normal_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Seeded synthetic retrieval task. Features are standard normal; per query
/// the top `ceil(fraction · pool)` documents by `w*·x + noise` are relevant.
pub fn synth_retrieval(spec: &SyntheticSpec) -> Result<(Dataset, PlantedTruth), DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut w = normal_vec(&mut rng, spec.feature_dim);
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter_mut().for_each(|v| *v /= norm);
    let truth = PlantedTruth { w };
    Ok((synth_retrieval_with(spec, &truth)?, truth))
}

/// Like [`synth_retrieval`] but with a given `w*`; use a different seed to
/// draw held-out queries from the same task.
pub fn synth_retrieval_with(spec: &SyntheticSpec, truth: &PlantedTruth) -> Result<Dataset, DataError> {
    spec.validate()?;
    if truth.w.len() != spec.feature_dim {
        return Err(DataError::Spec("w* length differs from feature_dim".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let m = spec.relevant_per_query();
    let (qw, dw) = (width(spec.num_queries), width(spec.pool_size));
    let mut queries = Vec::with_capacity(spec.num_queries);
    let mut pools = Vec::with_capacity(spec.num_queries);
    let mut judgments = Vec::new();
    for q in 0..spec.num_queries {
        let qid = format!("q{q:0qw$}");
        let mut pool = Vec::with_capacity(spec.pool_size);
        let mut keyed = Vec::with_capacity(spec.pool_size);
        for d in 0..spec.pool_size {
            let x = normal_vec(&mut rng, spec.feature_dim);
            let noise: f64 = rng.sample(StandardNormal);
            let s = crate::math::dot(&truth.w, &x) + spec.noise_sigma * noise;
            keyed.push((s, d));
            pool.push(Document::with_features(format!("d{d:0dw$}"), x));
        }
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, d) in &keyed[..m] {
            judgments.push(Judgment::new(qid.as_str(), pool[d].id.clone(), 1));
        }
        queries.push(Query::new(qid.as_str()));
        pools.push(pool);
    }
    Ok(build_dataset(Records {
        kind: DatasetKind::Synthetic,
        queries,
        pools,
        judgments,
    })?)
}

/// Synthetic implicit feedback: latent user and item factors; each user's
/// `positives_per_user` highest `u·v + noise` items are relevant and every
/// pool is the full catalogue.
pub fn synth_interactions(
    num_users: usize,
    num_items: usize,
    latent_dim: usize,
    positives_per_user: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    if num_users == 0 || num_items == 0 || latent_dim == 0 {
        return Err(DataError::Spec("sizes must be positive".into()));
    }
    if positives_per_user == 0 || positives_per_user >= num_items {
        return Err(DataError::Spec("positives_per_user must lie in [1, num_items)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users: Vec<Vec<f64>> = (0..num_users).map(|_| normal_vec(&mut rng, latent_dim)).collect();
    let items: Vec<Vec<f64>> = (0..num_items).map(|_| normal_vec(&mut rng, latent_dim)).collect();
    let (uw, iw) = (width(num_users), width(num_items));
    let catalogue: Vec<Document> = (0..num_items).map(|i| Document::item(format!("i{i:0iw$}"))).collect();
    let mut queries = Vec::new();
    let mut judgments = Vec::new();
    for (u, uv) in users.iter().enumerate() {
        let uid = format!("u{u:0uw$}");
        let mut keyed: Vec<(f64, usize)> = items
            .iter()
            .enumerate()
            .map(|(i, iv)| {
                let noise: f64 = rng.sample(StandardNormal);
                (crate::math::dot(uv, iv) + 0.5 * noise, i)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in &keyed[..positives_per_user] {
            judgments.push(Judgment::new(uid.as_str(), catalogue[i].id.clone(), 1));
        }
        queries.push(Query::new(uid.as_str()));
    }
    let pools = vec![catalogue; num_users];
    Ok(build_dataset(Records {
        kind: DatasetKind::Recommendation,
        queries,
        pools,
        judgments,
    })?)
}

/// Synthetic answer selection. The vocabulary is split into `topics` blocks
/// of `words_per_topic` tokens; a question and its one correct answer draw
/// words from the same block, distractors from other blocks.
pub fn synth_qa(
    num_questions: usize,
    pool_size: usize,
    topics: u32,
    words_per_topic: u32,
    seed: u64,
) -> Result<Dataset, DataError> {
    if num_questions == 0 || pool_size < 2 || topics < 2 || words_per_topic == 0 {
        return Err(DataError::Spec(
            "need questions > 0, pool_size >= 2, topics >= 2, words_per_topic > 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = |rng: &mut ChaCha8Rng, topic: u32, n: usize| -> Vec<u32> {
        (0..n)
            .map(|_| topic * words_per_topic + rng.random_range(0..words_per_topic))
            .collect()
    };
    let (qw, aw) = (width(num_questions), width(pool_size));
    let mut queries = Vec::new();
    let mut pools = Vec::new();
    let mut judgments = Vec::new();
    for q in 0..num_questions {
        let qid = format!("q{q:0qw$}");
        let topic = rng.random_range(0..topics);
        queries.push(Query::with_tokens(qid.as_str(), words(&mut rng, topic, 4)));
        let correct = rng.random_range(0..pool_size);
        let mut pool = Vec::with_capacity(pool_size);
        for a in 0..pool_size {
            let t = if a == correct {
                topic
            } else {
                (topic + rng.random_range(1..topics)) % topics
            };
            let id = format!("{qid}_a{a:0aw$}");
            if a == correct {
                judgments.push(Judgment::new(qid.as_str(), id.as_str(), 1));
            }
            pool.push(Document::with_tokens(id, words(&mut rng, t, 6)));
        }
        pools.push(pool);
    }
    Ok(build_dataset(Records {
        kind: DatasetKind::Qa,
        queries,
        pools,
        judgments,
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{evaluate_model, Metric};

    fn spec() -> SyntheticSpec {
        SyntheticSpec {
            num_queries: 6,
            pool_size: 200,
            relevant_fraction: 0.005,
            feature_dim: 5,
            noise_sigma: 0.0,
            seed: 3,
        }
    }

    #[test]
    fn relevant_count_is_ceiling() {
        let (ds, _) = synth_retrieval(&spec()).unwrap();
        for qi in 0..ds.num_queries() {
            assert_eq!(ds.positives(qi).len(), 1);
        }
        let s = SyntheticSpec {
            relevant_fraction: 0.015,
            ..spec()
        };
        assert_eq!(s.relevant_per_query(), 3);
        let s = SyntheticSpec {
            relevant_fraction: 1.0,
            ..spec()
        };
        assert_eq!(s.relevant_per_query(), 200);
    }

    #[test]
    fn planted_weights_rank_perfectly_without_noise() {
        let s = SyntheticSpec {
            relevant_fraction: 0.02,
            ..spec()
        };
        let (ds, truth) = synth_retrieval(&s).unwrap();
        let r = evaluate_model(&truth.scorer(), &ds, &[Metric::NdcgAt(5)]).unwrap();
        assert_eq!(r.get(Metric::NdcgAt(5)), Some(1.0));
    }

    #[test]
    fn deterministic_and_holdout_differs() {
        let (a, ta) = synth_retrieval(&spec()).unwrap();
        let (b, tb) = synth_retrieval(&spec()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let other = SyntheticSpec { seed: 4, ..spec() };
        let held = synth_retrieval_with(&other, &ta).unwrap();
        assert_ne!(held, a);
    }

    #[test]
    fn invalid_specs() {
        for s in [
            SyntheticSpec { relevant_fraction: 0.0, ..spec() },
            SyntheticSpec { pool_size: 0, ..spec() },
            SyntheticSpec { noise_sigma: -1.0, ..spec() },
        ] {
            assert!(matches!(synth_retrieval(&s), Err(DataError::Spec(_))));
        }
    }

    #[test]
    fn other_generators() {
        let ds = synth_interactions(5, 30, 3, 4, 1).unwrap();
        assert_eq!(ds.num_queries(), 5);
        assert!((0..5).all(|u| ds.positives(u).len() == 4 && ds.pool(u).len() == 30));
        let ds = synth_qa(4, 6, 5, 8, 1).unwrap();
        assert!((0..4).all(|q| ds.positives(q).len() == 1 && ds.pool(q).len() == 6));
    }
}
