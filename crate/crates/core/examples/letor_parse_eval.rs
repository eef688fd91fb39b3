//! Parse a LETOR file, min-max normalize per query, and score it with a
//! pretrained linear model. Pass a path, or run on a small built-in sample.
//!
//!     cargo run --example letor_parse_eval -- path/to/train.txt

use anyhow::Result;
use rank_lab::dataio::{normalize_min_max, parse_letor, parse_letor_str};
use rank_lab::experiment::pretrain;
use rank_lab::metrics::{evaluate_model, Metric};
use rank_lab::scorers::ModelSpec;
use rank_lab::trainers::TrainConfig;

const SAMPLE: &str = "\
2 qid:10 1:0.9 2:0.1 3:0.4 #docid = A
0 qid:10 1:0.2 2:0.8 3:0.3 #docid = B
1 qid:10 1:0.6 2:0.3 3:0.9 #docid = C
0 qid:10 1:0.1 2:0.5 3:0.2 #docid = D
1 qid:20 1:0.7 2:0.2 3:0.1 #docid = E
0 qid:20 1:0.3 2:0.9 3:0.6 #docid = F
0 qid:20 1:0.2 2:0.4 3:0.8 #docid = G
0 qid:30 1:0.5 2:0.5 3:0.5 #docid = H
";

fn main() -> Result<()> {
    let raw = match std::env::args().nth(1) {
        Some(path) => parse_letor(path)?,
        None => parse_letor_str(SAMPLE)?,
    };
    let ds = normalize_min_max(&raw)?;
    let judged = (0..ds.num_queries()).filter(|&q| ds.has_positive(q)).count();
    println!("{} queries ({judged} with a relevant document)", ds.num_queries());

    let cfg = TrainConfig {
        learning_rate: 0.1,
        epochs_outer: 30,
        ..TrainConfig::default()
    };
    let (model, _) = pretrain(ModelSpec::Linear, 0.0, &ds, &cfg)?;
    let report = evaluate_model(&model, &ds, &[Metric::NdcgAt(5), Metric::PrecisionAt(1)])?;
    for s in &report.summaries {
        println!(
            "{:<7} {:.4}  ({} counted, {} skipped)",
            s.metric.to_string(),
            s.value,
            s.queries_counted,
            s.queries_skipped
        );
    }
    Ok(())
}
