//! Single-D against Dual-D on the planted web-search task, at equal
//! single-model epoch budgets, over a few seeds.

use anyhow::Result;
use rank_lab::dataio::SyntheticSpec;
use rank_lab::experiment::{budget_of, load_data, pretrain, run_trainer, DataSource, TrainerName};
use rank_lab::metrics::Metric;
use rank_lab::scorers::ModelSpec;
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
        holdout_queries: 500,
    };
    let metric = Metric::NdcgAt(5);
    println!("seed  pretrained  single-d  dual-d  chosen");
    for seed in 1..=3 {
        let (train, eval) = load_data(&source, seed)?;
        let pre = TrainConfig {
            learning_rate: 0.01,
            epochs_outer: 50,
            seed,
            ..TrainConfig::default()
        };
        let (init, _) = pretrain(ModelSpec::Linear, 0.0, &train, &pre)?;
        let single = TrainConfig { seed, ..TrainConfig::web_single_d() };
        // 25 outer x 1 inner Dual-D epochs spend the same 50 single-model epochs
        let dual = TrainConfig {
            seed,
            epochs_outer: 25,
            epochs_inner: 1,
            ..TrainConfig::web_dual_d()
        };
        assert_eq!(budget_of(TrainerName::SingleD, &single), budget_of(TrainerName::DualD, &dual));
        let sd = run_trainer(TrainerName::SingleD, &init, &train, &eval, &single, &[metric])?;
        let dd = run_trainer(TrainerName::DualD, &init, &train, &eval, &dual, &[metric])?;
        println!(
            "{seed:>4}  {:>10.4}  {:>8.4}  {:>6.4}  {:?}",
            sd.record.first("single-d", "ndcg@5").unwrap_or(f64::NAN),
            sd.final_metric(metric).unwrap_or(f64::NAN),
            dd.final_metric(metric).unwrap_or(f64::NAN),
            dd.chosen,
        );
    }
    Ok(())
}
