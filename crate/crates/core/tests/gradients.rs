mod common;

use common::{numeric_gradient, rel_err, scorer_zoo, with_params};
use rand::Rng;
use rank_lab::math::sigmoid;
use rank_lab::policy::SoftmaxPolicy;
use rank_lab::trainers::{discriminator_objective_gradient, pairwise_objective_gradient, irgan_objective_exact};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

#[test]
fn score_gradients_match_finite_differences() {
    for seed in 0..25 {
        for (scorer, ds) in scorer_zoo(seed) {
            let mut r = common::rng(seed);
            let qi = r.random_range(0..ds.num_queries());
            let di = r.random_range(0..ds.pool(qi).len());
            let pair = ds.pair(qi, di);
            let analytic = scorer.score_gradient(pair).unwrap();
            let numeric = numeric_gradient(scorer.params.values(), H, |p| {
                with_params(&scorer, p).score(pair).unwrap()
            });
            let e = rel_err(&analytic, &numeric);
            assert!(e < TOL, "{} seed {seed}: rel err {e}", scorer.kind().name());
        }
    }
}

#[test]
fn log_prob_gradient_matches_finite_differences() {
    for seed in 0..25 {
        for (scorer, ds) in scorer_zoo(seed) {
            let mut r = common::rng(seed + 1000);
            let temperature = r.random_range(0.5..2.0);
            let qi = r.random_range(0..ds.num_queries());
            let pool: Vec<usize> = (0..ds.pool(qi).len()).collect();
            let doc = r.random_range(0..pool.len());
            let policy = SoftmaxPolicy::new(scorer.clone(), temperature).unwrap();
            let analytic = policy.log_prob_gradient(&ds, qi, &pool, doc).unwrap();
            let numeric = numeric_gradient(scorer.params.values(), H, |p| {
                let pol = SoftmaxPolicy::new(with_params(&scorer, p), temperature).unwrap();
                pol.probs(&ds, qi, &pool).unwrap()[doc].ln()
            });
            let e = rel_err(&analytic, &numeric);
            assert!(e < TOL, "{} seed {seed}: rel err {e}", scorer.kind().name());
        }
    }
}

#[test]
fn discriminator_objectives_match_finite_differences() {
    for seed in 0..10 {
        for (scorer, ds) in scorer_zoo(seed) {
            let pos = [(0, 0), (1, 0)];
            let neg = [(0, 1), (1, 2), (2, 3)];
            let (_, analytic) = discriminator_objective_gradient(&scorer, &ds, &pos, &neg).unwrap();
            let numeric = numeric_gradient(scorer.params.values(), H, |p| {
                discriminator_objective_gradient(&with_params(&scorer, p), &ds, &pos, &neg)
                    .unwrap()
                    .0
            });
            assert!(rel_err(&analytic, &numeric) < TOL);

            let triples = [(0, 0, 1), (1, 0, 3), (2, 2, 1)];
            let (_, analytic) = pairwise_objective_gradient(&scorer, &ds, &triples).unwrap();
            let numeric = numeric_gradient(scorer.params.values(), H, |p| {
                pairwise_objective_gradient(&with_params(&scorer, p), &ds, &triples)
                    .unwrap()
                    .0
            });
            assert!(rel_err(&analytic, &numeric) < TOL);
        }
    }
}

#[test]
fn discriminator_objective_value_matches_hand_formula() {
    let (scorer, ds) = scorer_zoo(3).remove(0);
    let f00 = scorer.score(ds.pair(0, 0)).unwrap();
    let f01 = scorer.score(ds.pair(0, 1)).unwrap();
    let (obj, _) = discriminator_objective_gradient(&scorer, &ds, &[(0, 0)], &[(0, 1)]).unwrap();
    let expected = sigmoid(f00).ln() + (1.0 - sigmoid(f01)).ln();
    assert!((obj - expected).abs() < 1e-12);
}

#[test]
fn irgan_objective_is_minimized_by_the_generator_direction() {
    // Moving the generator against dJ/dθ must lower the objective for a small step.
    let (scorer, ds) = scorer_zoo(5).remove(0);
    let d = with_params(&scorer, &scorer.params.values().iter().map(|v| -v).collect::<Vec<_>>());
    let j = |p: &[f64]| {
        let g = SoftmaxPolicy::new(with_params(&scorer, p), 1.0).unwrap();
        irgan_objective_exact(&g, &d, &ds).unwrap()
    };
    let grad = numeric_gradient(scorer.params.values(), H, j);
    let stepped: Vec<f64> = scorer
        .params
        .values()
        .iter()
        .zip(&grad)
        .map(|(p, g)| p - 1e-3 * g)
        .collect();
    assert!(j(&stepped) < j(scorer.params.values()));
}
