//! Adversarial training of a pretrained generator on a sparse task: the
//! generator's held-out NDCG@5 per epoch, next to the discriminator's.

use anyhow::Result;
use rank_lab::dataio::SyntheticSpec;
use rank_lab::experiment::{load_data, pretrain, run_trainer, DataSource, TrainerName};
use rank_lab::metrics::Metric;
use rank_lab::scorers::ModelSpec;
use rank_lab::trainers::{Baseline, TrainConfig};

fn main() -> Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let source = DataSource::Synthetic {
        spec: SyntheticSpec {
            num_queries: 50,
            pool_size: 200,
            relevant_fraction: 0.005,
            feature_dim: 46,
            noise_sigma: 0.5,
            seed: 0,
        },
        holdout_queries: 500,
    };
    let (train, eval) = load_data(&source, seed)?;
    let pre = TrainConfig {
        learning_rate: 0.01,
        epochs_outer: 50,
        seed,
        ..TrainConfig::default()
    };
    let (init, _) = pretrain(ModelSpec::Linear, 0.0, &train, &pre)?;

    let cfg = TrainConfig {
        seed,
        baseline: Baseline::Constant(0.0),
        ..TrainConfig::web_single_d()
    };
    let out = run_trainer(TrainerName::IrganPointwise, &init, &train, &eval, &cfg, &[Metric::NdcgAt(5)])?;
    let g = out.record.series("generator", "ndcg@5");
    let d = out.record.series("discriminator", "ndcg@5");
    println!("epoch  generator  discriminator");
    for ((e, gv), (_, dv)) in g.iter().zip(&d).filter(|((e, _), _)| e % 5 == 0) {
        println!("{e:>5}  {gv:>9.4}  {dv:>13.4}");
    }
    let (first, last) = (g[0].1, g[g.len() - 1].1);
    println!("generator ndcg@5 {first:.4} -> {last:.4} ({:+.4})", last - first);
    Ok(())
}
