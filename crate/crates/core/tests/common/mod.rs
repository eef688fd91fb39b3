#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rank_lab::dataset::{build_dataset, Dataset, DatasetKind, Document, Judgment, Query, Records};
use rank_lab::scorers::{Init, Scorer, ScorerKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed)
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Queries with random feature pools; document 0 of every pool is relevant.
pub fn feature_dataset(rng: &mut impl Rng, queries: usize, pool: usize, dim: usize) -> Dataset {
    let mut qs = Vec::new();
    let mut pools = Vec::new();
    let mut judgments = Vec::new();
    for q in 0..queries {
        let qid = format!("q{q:03}");
        pools.push(
            (0..pool)
                .map(|d| Document::with_features(format!("d{d:03}"), (0..dim).map(|_| normal(rng)).collect()))
                .collect(),
        );
        judgments.push(Judgment::new(qid.as_str(), "d000", 1));
        qs.push(Query::new(qid));
    }
    build_dataset(Records {
        kind: DatasetKind::Synthetic,
        queries: qs,
        pools,
        judgments,
    })
    .unwrap()
}

/// Users over a shared item catalogue; item 0 is every user's positive.
pub fn item_dataset(users: usize, items: usize) -> Dataset {
    let pool: Vec<Document> = (0..items).map(|i| Document::item(format!("i{i:03}"))).collect();
    build_dataset(Records {
        kind: DatasetKind::Recommendation,
        queries: (0..users).map(|u| Query::new(format!("u{u:03}"))).collect(),
        pools: vec![pool; users],
        judgments: (0..users).map(|u| Judgment::new(format!("u{u:03}"), "i000", 1)).collect(),
    })
    .unwrap()
}

/// Token questions and answers over a vocabulary of `vocab` ids.
pub fn token_dataset(rng: &mut impl Rng, queries: usize, pool: usize, vocab: u32) -> Dataset {
    let tokens = |rng: &mut dyn rand::RngCore| -> Vec<u32> {
        let n = rng.random_range(1..6);
        (0..n).map(|_| rng.random_range(0..vocab)).collect()
    };
    let mut qs = Vec::new();
    let mut pools = Vec::new();
    let mut judgments = Vec::new();
    for q in 0..queries {
        let qid = format!("q{q:03}");
        qs.push(Query::with_tokens(qid.as_str(), tokens(rng)));
        pools.push(
            (0..pool)
                .map(|d| Document::with_tokens(format!("{qid}_a{d:02}"), tokens(rng)))
                .collect(),
        );
        judgments.push(Judgment::new(qid.as_str(), format!("{qid}_a00"), 1));
    }
    build_dataset(Records {
        kind: DatasetKind::Qa,
        queries: qs,
        pools,
        judgments,
    })
    .unwrap()
}

/// One of every scorer kind, paired with a dataset it can score.
pub fn scorer_zoo(seed: u64) -> Vec<(Scorer, Dataset)> {
    let mut r = rng(seed);
    let dim = 4;
    let features = feature_dataset(&mut r, 3, 5, dim);
    let items = item_dataset(3, 6);
    let text = token_dataset(&mut r, 3, 5, 12);
    let init = |s: u64| Init::Uniform { scale: 0.8, seed: s };
    vec![
        (Scorer::new(ScorerKind::Linear { dim }, init(seed)).unwrap(), features.clone()),
        (Scorer::new(ScorerKind::Mlp1 { dim, hidden: 3 }, init(seed)).unwrap(), features),
        (
            Scorer::new(
                ScorerKind::MatFac {
                    users: 3,
                    items: 6,
                    embed_dim: 3,
                },
                init(seed),
            )
            .unwrap(),
            items,
        ),
        (
            Scorer::new(ScorerKind::TextAvgEmbed { vocab: 12, embed_dim: 3 }, init(seed)).unwrap(),
            text,
        ),
    ]
}

/// Central differences of `f` around `params`.
pub fn numeric_gradient(params: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let x = p[i];
            p[i] = x + h;
            let up = f(&p);
            p[i] = x - h;
            let down = f(&p);
            p[i] = x;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest coordinate error relative to the larger gradient's scale.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(1e-6_f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

pub fn with_params(scorer: &Scorer, values: &[f64]) -> Scorer {
    let mut s = scorer.clone();
    s.params.values_mut().copy_from_slice(values);
    s
}
