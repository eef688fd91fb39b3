//! Answer selection with a bag-of-embeddings text scorer, trained with
//! Dual-D on synthetic topic-word questions.

use anyhow::Result;
use rank_lab::experiment::{load_data, pretrain, run_trainer, DataSource, TrainerName};
use rank_lab::metrics::Metric;
use rank_lab::scorers::ModelSpec;
use rank_lab::trainers::TrainConfig;

fn main() -> Result<()> {
    let source = DataSource::SyntheticQa {
        questions: 200,
        pool_size: 50,
        topics: 10,
        words_per_topic: 30,
        test_fraction: 0.2,
    };
    let (train, test) = load_data(&source, 40)?;
    let pre = TrainConfig {
        learning_rate: 0.05,
        epochs_outer: 10,
        batch_size: 100,
        ..TrainConfig::default()
    };
    let (init, _) = pretrain(ModelSpec::TextAvgEmbed { embed_dim: 32 }, 0.5, &train, &pre)?;
    let cfg = TrainConfig {
        learning_rate: 0.05,
        batch_size: 100,
        epochs_outer: 20,
        epochs_inner: 1,
        ..TrainConfig::default()
    };
    let out = run_trainer(TrainerName::DualD, &init, &train, &test, &cfg, &[Metric::PrecisionAt(1)])?;
    println!("chosen model: {:?}", out.chosen);
    for (epoch, p1) in out.record.series("dual-d-chosen", "p@1").iter().step_by(5) {
        println!("epoch {epoch:>2}  p@1 {p1:.3}");
    }
    Ok(())
}
