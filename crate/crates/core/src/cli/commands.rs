use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};

use super::config::RunConfig;
use super::CliError;
use crate::dataset::Dataset;
use crate::experiment::{budget_of, load_data, matched_config, pretrain as pretrain_model, run_trainer, TrainerName};
use crate::metrics::{evaluate_model, write_eval_csv, Metric};
use crate::pgvar::{
    b_sweep, partition_actions, sparsity_vs_bound_study, study_instance, verify_bound_chain, write_study_csv,
    write_sweep_csv,
};
use crate::scorers::{read_checkpoint, write_checkpoint, Scorer};
use crate::trainers::RunRecord;

/// Output directory of one run; created only once the config has been
/// fully validated.
pub(crate) struct RunDir {
    path: PathBuf,
    config: Vec<u8>,
}

impl RunDir {
    pub(crate) fn new(path: PathBuf, config: Vec<u8>) -> Self {
        Self { path, config }
    }

    pub(crate) fn path(&self) -> &Path {
        &self.path
    }

    fn open(&self) -> Result<(), CliError> {
        let ckpt = self.path.join("checkpoints");
        fs::create_dir_all(&ckpt).map_err(|e| CliError::io(&ckpt, e))?;
        self.write("config.copy", |w| w.write_all(&self.config))
    }

    fn write<F>(&self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.path.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))
    }

    fn write_csv<F>(&self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), csv::Error>,
    {
        self.write(name, |w| f(w).map_err(std::io::Error::other))
    }

    fn checkpoint(&self, tag: &str, scorer: &Scorer) -> Result<(), CliError> {
        self.write(&format!("checkpoints/{tag}.ckpt"), |w| write_checkpoint(&scorer.params, w))
    }
}

/// Row of a `model,metric,value` results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub model: String,
    pub metric: String,
    pub value: f64,
}

fn write_results<W: Write>(rows: &[ResultRow], w: W) -> Result<(), csv::Error> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record(["model", "metric", "value"])?;
    for r in rows {
        wtr.write_record([r.model.as_str(), r.metric.as_str(), &r.value.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads the first three columns of a results table, so the richer
/// per-model evaluation tables written by `train` parse as well.
pub fn read_results_csv<R: Read>(r: R) -> Result<Vec<ResultRow>, csv::Error> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().take(3).ne(["model", "metric", "value"]) {
        return Err(std::io::Error::other(format!("unexpected header {header:?}")).into());
    }
    rdr.records()
        .map(|row| {
            let row = row?;
            let value = row[2]
                .parse()
                .map_err(|_| std::io::Error::other(format!("bad value `{}`", &row[2])))?;
            Ok(ResultRow {
                model: row[0].to_string(),
                metric: row[1].to_string(),
                value,
            })
        })
        .collect()
}

/// Initial model: the configured checkpoint, or MLE pretraining on `train`.
fn initial_model(cfg: &RunConfig, seed: u64, train: &Dataset) -> Result<(Scorer, Option<RunRecord>), CliError> {
    let spec = cfg.model.spec().map_err(CliError::Config)?;
    if let Some(path) = &cfg.model.checkpoint {
        let kind = spec.resolve(train)?;
        let mut f = File::open(path).map_err(|e| CliError::io(path, e))?;
        let params = read_checkpoint(&mut f)?;
        let scorer = Scorer::from_params(kind, params)?;
        scorer.check_dataset(train)?;
        return Ok((scorer, None));
    }
    let pre = cfg.pretrain().map_err(CliError::Config)?.train_config(seed);
    pre.validate()?;
    let (scorer, record) = pretrain_model(spec, cfg.model.init_scale, train, &pre)?;
    Ok((scorer, Some(record)))
}

fn load(cfg: &RunConfig, seed: u64) -> Result<(Dataset, Dataset), CliError> {
    let source = cfg.dataset().map_err(CliError::Config)?.source(seed);
    let (train, eval) = load_data(&source, seed)?;
    info!(
        "loaded {} train and {} eval queries",
        train.num_queries(),
        eval.num_queries()
    );
    Ok((train, eval))
}

pub(crate) fn pretrain(cfg: &RunConfig, dir: &RunDir) -> Result<(), CliError> {
    let pre = cfg.pretrain().map_err(CliError::Config)?.train_config(cfg.seed);
    pre.validate()?;
    let spec = cfg.model.spec().map_err(CliError::Config)?;
    let (train, eval) = load(cfg, cfg.seed)?;
    let metrics = cfg.eval.metrics().map_err(CliError::Config)?;
    let (scorer, record) = pretrain_model(spec, cfg.model.init_scale, &train, &pre)?;
    let report = evaluate_model(&scorer, &eval, &metrics)?;
    dir.open()?;
    dir.checkpoint("pretrained", &scorer)?;
    dir.write_csv("curves.csv", |w| record.write_csv(w))?;
    dir.write_csv("results.csv", |w| write_eval_csv(&[("pretrained".into(), report)], w))?;
    Ok(())
}

pub(crate) fn train(cfg: &RunConfig, dir: &RunDir) -> Result<(), CliError> {
    let section = cfg.trainer().map_err(CliError::Config)?;
    let trainer = section.trainer().map_err(CliError::Config)?;
    let tcfg = section.train_config(cfg.seed).map_err(CliError::Config)?;
    let metrics = cfg.eval.metrics().map_err(CliError::Config)?;
    cfg.model.spec().map_err(CliError::Config)?;
    if cfg.model.checkpoint.is_none() {
        cfg.pretrain().map_err(CliError::Config)?;
    }

    let (train, eval) = load(cfg, cfg.seed)?;
    let (init, pre_record) = initial_model(cfg, cfg.seed, &train)?;
    info!("training {trainer} for {} epochs", tcfg.epochs_outer);
    let outcome = run_trainer(trainer, &init, &train, &eval, &tcfg, &metrics)?;

    let mut curves = pre_record.unwrap_or_default();
    curves.extend(&outcome.record)?;
    let mut reports = Vec::new();
    for (tag, model) in &outcome.models {
        reports.push((tag.clone(), evaluate_model(model, &eval, &metrics)?));
    }
    if let Some(choice) = outcome.chosen {
        let tag = format!("dual-d-{}", choice.name());
        let model = outcome.model(&tag).expect("dual-d keeps both models");
        reports.push(("dual-d-chosen".into(), evaluate_model(model, &eval, &metrics)?));
    }

    dir.open()?;
    if curves.rows().iter().any(|r| r.model == "pretrain") {
        dir.checkpoint("pretrained", &init)?;
    }
    for (tag, model) in &outcome.models {
        dir.checkpoint(tag, model)?;
    }
    if let Some(choice) = outcome.chosen {
        dir.write("chosen", |w| writeln!(w, "dual-d-{}", choice.name()))?;
    }
    dir.write_csv("curves.csv", |w| curves.write_csv(w))?;
    dir.write_csv("results.csv", |w| write_eval_csv(&reports, w))?;
    Ok(())
}

struct ComparePlan {
    trainer: TrainerName,
    learning_rate: f64,
}

pub(crate) fn compare(cfg: &RunConfig, dir: &RunDir) -> Result<(), CliError> {
    let section = cfg
        .compare
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `[compare]` section".into()))?;
    let base_section = cfg.trainer().map_err(CliError::Config)?;
    let base = base_section.train_config(cfg.seed).map_err(CliError::Config)?;
    let metrics = cfg.eval.metrics().map_err(CliError::Config)?;
    cfg.model.spec().map_err(CliError::Config)?;
    if cfg.model.checkpoint.is_none() {
        cfg.pretrain().map_err(CliError::Config)?;
    }

    let mut plans = Vec::new();
    for name in &section.trainers {
        let trainer: TrainerName = name.parse().map_err(|e| CliError::Config(format!("`compare.trainers`: {e}")))?;
        if plans.iter().any(|p: &ComparePlan| p.trainer == trainer) {
            return Err(CliError::Config(format!("`compare.trainers`: `{trainer}` listed twice")));
        }
        plans.push(ComparePlan {
            trainer,
            learning_rate: base.learning_rate,
        });
    }
    if plans.len() < 2 {
        return Err(CliError::Config("`compare.trainers` must list at least 2 trainers".into()));
    }
    for (name, &lr) in &section.learning_rates {
        let plan = plans
            .iter_mut()
            .find(|p| p.trainer.as_str() == name)
            .ok_or_else(|| CliError::Config(format!("`compare.learning_rates`: `{name}` is not compared")))?;
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(CliError::Config(format!("`compare.learning_rates`: bad rate for `{name}`")));
        }
        plan.learning_rate = lr;
    }
    let budget = section.budget.unwrap_or(base.epochs_outer);
    if budget == 0 {
        return Err(CliError::Config("`compare.budget` must be at least 1".into()));
    }
    if section.dual_epochs_outer == Some(0) {
        return Err(CliError::Config("`compare.dual_epochs_outer` must be at least 1".into()));
    }
    let seeds = section.seeds.clone().unwrap_or_else(|| vec![cfg.seed]);
    if seeds.is_empty() {
        return Err(CliError::Config("`compare.seeds` must not be empty".into()));
    }

    let mut per_seed = Vec::new();
    let mut spent = vec![0; plans.len()];
    for &seed in &seeds {
        let (train, eval) = load(cfg, seed)?;
        let (init, _) = initial_model(cfg, seed, &train)?;
        for (i, plan) in plans.iter().enumerate() {
            let seeded = crate::trainers::TrainConfig {
                learning_rate: plan.learning_rate,
                seed,
                ..base.clone()
            };
            let (mut tcfg, _) = matched_config(plan.trainer, &seeded, budget);
            if plan.trainer == TrainerName::DualD {
                if let Some(outer) = section.dual_epochs_outer {
                    tcfg.epochs_outer = outer;
                }
            }
            spent[i] = budget_of(plan.trainer, &tcfg);
            info!("seed {seed}: {} for {} epochs", plan.trainer, tcfg.epochs_outer);
            let outcome = run_trainer(plan.trainer, &init, &train, &eval, &tcfg, &metrics)?;
            for &m in &metrics {
                let value = outcome.final_metric(m).unwrap_or(f64::NAN);
                per_seed.push((seed, plan.trainer, m, value));
            }
        }
    }

    let mut rows = Vec::new();
    for (i, plan) in plans.iter().enumerate() {
        for &m in &metrics {
            rows.push(ResultRow {
                model: plan.trainer.to_string(),
                metric: m.to_string(),
                value: mean_of(&per_seed, plan.trainer, m),
            });
        }
        rows.push(ResultRow {
            model: plan.trainer.to_string(),
            metric: "budget_epochs".into(),
            value: spent[i] as f64,
        });
    }
    for (i, plan) in plans.iter().enumerate() {
        if spent[i] != budget {
            warn!("{} spends {} epochs against a budget of {budget}", plan.trainer, spent[i]);
            rows.push(ResultRow {
                model: "warning".into(),
                metric: format!("budget_mismatch:{}", plan.trainer),
                value: spent[i] as f64,
            });
        }
    }

    dir.open()?;
    dir.write_csv("results.csv", |w| write_results(&rows, w))?;
    dir.write_csv("per_seed.csv", |w| {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wtr.write_record(["seed", "model", "metric", "value"])?;
        for (seed, t, m, v) in &per_seed {
            wtr.write_record([seed.to_string(), t.to_string(), m.to_string(), v.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    Ok(())
}

fn mean_of(rows: &[(u64, TrainerName, Metric, f64)], t: TrainerName, m: Metric) -> f64 {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.1 == t && r.2 == m)
        .map(|r| r.3)
        .collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

pub(crate) fn variance(cfg: &RunConfig, dir: &RunDir) -> Result<(), CliError> {
    let section = cfg
        .variance
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `[variance]` section".into()))?;
    if section.fractions.is_empty() {
        return Err(CliError::Config("`variance.fractions` must not be empty".into()));
    }
    if let Some(f) = section.fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(CliError::Config(format!("`variance.fractions`: {f} outside (0, 1]")));
    }
    if !section.b.is_finite() || section.sweep.iter().any(|b| !b.is_finite()) {
        return Err(CliError::Config("`variance.b` and `variance.sweep` must be finite".into()));
    }
    let study = section.study_config();
    let rows = sparsity_vs_bound_study(&section.fractions, &study, cfg.seed)?;

    let mut chain = Vec::new();
    let mut sweep = None;
    for (i, &fraction) in section.fractions.iter().enumerate() {
        let (inst, pol) = study_instance(fraction, &study, cfg.seed)?;
        chain.push((fraction, verify_bound_chain(&inst, &pol, section.b)?));
        // the sweep freezes the first task's partition at `b`
        if i == 0 {
            let part = partition_actions(&inst, section.b);
            if let Some(q_max) = part.q_max {
                sweep = Some((q_max, b_sweep(&inst, &pol, &part, &section.sweep)?));
            } else {
                warn!("every A1 set is empty at b = {}; skipping the sweep", section.b);
            }
        }
    }

    dir.open()?;
    dir.write_csv("study.csv", |w| write_study_csv(&rows, w))?;
    if let Some((q_max, sweep)) = &sweep {
        dir.write_csv("sweep.csv", |w| write_sweep_csv(*q_max, sweep, w))?;
    }
    dir.write_csv("bound.csv", |w| {
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wtr.write_record([
            "fraction",
            "b",
            "q_max",
            "exact_variance",
            "term_a1",
            "term_a2",
            "bound_rhs",
            "bound_factored",
            "bound_uncentered",
            "p_a1",
            "a1_bound_holds",
            "full_bound_holds",
            "pointwise_holds",
        ])?;
        for (fraction, r) in &chain {
            let opt = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |v| v.to_string());
            let flag = |v: Option<bool>| v.map_or_else(String::new, |v| v.to_string());
            wtr.write_record([
                fraction.to_string(),
                r.b.to_string(),
                opt(r.q_max),
                r.exact_variance.to_string(),
                r.term_a1.to_string(),
                r.term_a2.to_string(),
                opt(r.bound_rhs.map(|b| b.value)),
                opt(r.bound_rhs.map(|b| b.factored)),
                opt(r.bound_rhs.map(|b| b.uncentered)),
                r.p_a1.to_string(),
                flag(r.a1_bound_holds),
                flag(r.full_bound_holds),
                r.pointwise_holds.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    Ok(())
}
