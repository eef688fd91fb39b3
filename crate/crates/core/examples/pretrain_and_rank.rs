//! Pretrain a linear softmax generator on the planted web-search task, rank
//! one held-out query, and round-trip the model through a checkpoint.

use anyhow::Result;
use rank_lab::dataio::SyntheticSpec;
use rank_lab::experiment::{load_data, pretrain, DataSource};
use rank_lab::metrics::{evaluate_model, rank, Metric};
use rank_lab::scorers::{read_checkpoint, write_checkpoint, ModelSpec, Scorer};
use rank_lab::trainers::TrainConfig;

fn main() -> Result<()> {
    let source = DataSource::Synthetic {
        spec: SyntheticSpec {
            num_queries: 50,
            pool_size: 200,
            relevant_fraction: 0.005,
            feature_dim: 46,
            noise_sigma: 0.5,
            seed: 0,
        },
        holdout_queries: 200,
    };
    let (train, eval) = load_data(&source, 1)?;
    let metrics = [Metric::NdcgAt(5), Metric::PrecisionAt(5), Metric::PrecisionAt(1)];

    let cfg = TrainConfig {
        learning_rate: 0.01,
        epochs_outer: 50,
        seed: 1,
        ..TrainConfig::default()
    };
    let (model, record) = pretrain(ModelSpec::Linear, 0.0, &train, &cfg)?;
    for (epoch, ll) in record.series("pretrain", "log_likelihood").iter().step_by(10) {
        println!("epoch {epoch:>2}  train log-likelihood {ll:.4}");
    }
    for s in evaluate_model(&model, &eval, &metrics)?.summaries {
        println!("{:<7} {:.4} over {} queries", s.metric.to_string(), s.value, s.queries_counted);
    }

    let qi = (0..eval.num_queries()).find(|&q| eval.has_positive(q)).unwrap_or(0);
    let pool: Vec<usize> = (0..eval.pool(qi).len()).collect();
    let ranked = rank(&model, &eval, qi, &pool)?;
    let qrels = eval.qrels(qi);
    println!("top 5 of {} for {}:", pool.len(), ranked.query.as_str());
    for (doc, score) in ranked.docs.iter().zip(&ranked.scores).take(5) {
        let rel = qrels.get(doc).copied().unwrap_or(0);
        println!("  {:<10} {score:>8.4}  rel {rel}", doc.as_str());
    }
    if let Some(pos) = ranked.docs.iter().position(|d| qrels.get(d).is_some_and(|&r| r > 0)) {
        println!("  first relevant document at rank {}", pos + 1);
    }

    let mut bytes = Vec::new();
    write_checkpoint(&model.params, &mut bytes)?;
    let restored = Scorer::from_params(model.kind(), read_checkpoint(bytes.as_slice())?)?;
    assert_eq!(restored.params, model.params);
    println!("checkpoint: {} bytes, {} parameters", bytes.len(), restored.num_params());
    Ok(())
}
