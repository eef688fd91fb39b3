//! Dynamic negative sampling for a matrix-factorization recommender on
//! synthetic implicit feedback.

use anyhow::Result;
use rank_lab::experiment::{load_data, pretrain, run_trainer, DataSource, TrainerName};
use rank_lab::metrics::Metric;
use rank_lab::scorers::ModelSpec;
use rank_lab::trainers::TrainConfig;

fn main() -> Result<()> {
    let source = DataSource::SyntheticInteractions {
        users: 100,
        items: 300,
        latent_dim: 8,
        positives_per_user: 20,
        test_fraction: 0.2,
    };
    let (train, test) = load_data(&source, 70)?;
    let pre = TrainConfig {
        learning_rate: 0.02,
        epochs_outer: 5,
        batch_size: 10,
        seed: 70,
        ..TrainConfig::default()
    };
    let (init, _) = pretrain(ModelSpec::MatFac { embed_dim: 20 }, 0.05, &train, &pre)?;

    let metrics = [Metric::PrecisionAt(5), Metric::NdcgAt(5)];
    let cfg = TrainConfig {
        epochs_outer: 20,
        ..TrainConfig::recommendation()
    };
    for trainer in [TrainerName::Dns, TrainerName::SingleD] {
        let out = run_trainer(trainer, &init, &train, &test, &cfg, &metrics)?;
        let tag = trainer.reported_model();
        println!(
            "{:<9} p@5 {:.4} -> {:.4}   ndcg@5 {:.4} -> {:.4}",
            trainer.as_str(),
            out.record.first(tag, "p@5").unwrap_or(f64::NAN),
            out.record.last(tag, "p@5").unwrap_or(f64::NAN),
            out.record.first(tag, "ndcg@5").unwrap_or(f64::NAN),
            out.record.last(tag, "ndcg@5").unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
