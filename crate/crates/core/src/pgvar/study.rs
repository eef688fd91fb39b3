use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    a1_mass, bound_rhs, build_instance, exact_variance, mc_variance, partition_actions, BaselineSpec,
    MdpInstance, Partition, PgVarError, PolicyTable,
};
use crate::dataio::{synth_retrieval, SyntheticSpec};
use crate::dataset::Dataset;
use crate::policy::{sample_weighted, SoftmaxPolicy};
use crate::scorers::{Init, Scorer, ScorerKind};
use crate::trainers::{discriminator_step, RewardKind};

/// Settings for [`sparsity_vs_bound_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub num_queries: usize,
    pub pool_size: usize,
    pub feature_dim: usize,
    pub noise_sigma: f64,
    /// Constant baseline.
    pub b: f64,
    /// Discriminator training: full passes over the queries.
    pub d_epochs: usize,
    pub d_learning_rate: f64,
    pub mc_samples: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            num_queries: 20,
            pool_size: 500,
            feature_dim: 8,
            noise_sigma: 0.1,
            b: 0.5,
            d_epochs: 30,
            d_learning_rate: 0.5,
            mc_samples: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub fraction: f64,
    pub b: f64,
    /// NaN when every A1 set is empty.
    pub q_max: f64,
    pub bound_rhs: f64,
    pub exact_variance: f64,
    pub mc_variance: f64,
    pub mc_se: f64,
    pub p_a1: f64,
}

/// Train a linear discriminator by balanced noise-contrastive estimation:
/// per query and epoch, as many draws from the relevance distribution as
/// there are relevant documents, and the same number of uniform draws from
/// the pool as noise.
fn train_discriminator<R: Rng>(ds: &Dataset, cfg: &StudyConfig, rng: &mut R) -> Result<Scorer, PgVarError> {
    let kind = ScorerKind::Linear { dim: cfg.feature_dim };
    let mut d = Scorer::new(kind, Init::Zeros)?;
    for _ in 0..cfg.d_epochs {
        for qi in 0..ds.num_queries() {
            let rel: Vec<f64> = ds.relevance(qi).iter().map(|&r| f64::from(r)).collect();
            let m = ds.positives(qi).len();
            if m == 0 {
                continue;
            }
            let pos: Vec<(usize, usize)> = sample_weighted(&rel, m, true, rng)?
                .into_iter()
                .map(|di| (qi, di))
                .collect();
            let n = ds.pool(qi).len();
            let neg: Vec<(usize, usize)> = (0..m).map(|_| (qi, rng.random_range(0..n))).collect();
            discriminator_step(&mut d, ds, &pos, &neg, cfg.d_learning_rate / (2 * m) as f64)?;
        }
    }
    Ok(d)
}

/// For each relevant fraction: build a synthetic task, train a discriminator
/// on it, and measure the gradient variance of a uniform softmax policy whose
/// rewards are that discriminator's `σ(f)`, under constant baseline `cfg.b`.
pub fn sparsity_vs_bound_study(fractions: &[f64], cfg: &StudyConfig, seed: u64) -> Result<Vec<StudyRow>, PgVarError> {
    if let Some(f) = fractions.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
        return Err(PgVarError::Invalid(format!("fraction {f} outside (0, 1]")));
    }
    let mut rows = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let (inst, pol, mut rng) = build_study(fraction, cfg, seed)?;
        rows.push(measure(fraction, &inst, &pol, cfg, &mut rng)?);
    }
    Ok(rows)
}

/// The instance and policy measured by [`sparsity_vs_bound_study`] at one
/// relevant fraction.
pub fn study_instance(fraction: f64, cfg: &StudyConfig, seed: u64) -> Result<(MdpInstance, PolicyTable), PgVarError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(PgVarError::Invalid(format!("fraction {fraction} outside (0, 1]")));
    }
    let (inst, pol, _) = build_study(fraction, cfg, seed)?;
    Ok((inst, pol))
}

fn build_study(
    fraction: f64,
    cfg: &StudyConfig,
    seed: u64,
) -> Result<(MdpInstance, PolicyTable, ChaCha8Rng), PgVarError> {
    let spec = SyntheticSpec {
        num_queries: cfg.num_queries,
        pool_size: cfg.pool_size,
        relevant_fraction: fraction,
        feature_dim: cfg.feature_dim,
        noise_sigma: cfg.noise_sigma,
        seed,
    };
    let (ds, _) = synth_retrieval(&spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = train_discriminator(&ds, cfg, &mut rng)?;
    let inst = build_instance(&ds, &d, RewardKind::Sigmoid)?;
    let generator = SoftmaxPolicy::new(Scorer::new(d.kind(), Init::Zeros)?, 1.0)?;
    let pol = PolicyTable::from_softmax_policy(&generator, &ds)?;
    Ok((inst, pol, rng))
}

fn measure<R: Rng>(
    fraction: f64,
    inst: &MdpInstance,
    pol: &PolicyTable,
    cfg: &StudyConfig,
    rng: &mut R,
) -> Result<StudyRow, PgVarError> {
    let part = partition_actions(inst, cfg.b);
    let baseline = BaselineSpec::Constant(cfg.b);
    let bound = match bound_rhs(inst, pol, cfg.b, &part) {
        Ok(r) => r.value,
        Err(PgVarError::UndefinedQmax) => f64::NAN,
        Err(e) => return Err(e),
    };
    let mc = mc_variance(inst, pol, baseline, cfg.mc_samples, rng)?;
    Ok(StudyRow {
        fraction,
        b: cfg.b,
        q_max: part.q_max.unwrap_or(f64::NAN),
        bound_rhs: bound,
        exact_variance: exact_variance(inst, pol, baseline)?,
        mc_variance: mc.estimate,
        mc_se: mc.standard_error,
        p_a1: a1_mass(inst, pol, &part),
    })
}

pub fn write_study_csv<W: Write>(rows: &[StudyRow], w: W) -> Result<(), csv::Error> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record([
        "fraction",
        "b",
        "q_max",
        "bound_rhs",
        "exact_variance",
        "mc_variance",
        "mc_se",
        "p_a1",
    ])?;
    for r in rows {
        wtr.write_record(
            [r.fraction, r.b, r.q_max, r.bound_rhs, r.exact_variance, r.mc_variance, r.mc_se, r.p_a1]
                .map(|v| v.to_string()),
        )?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub b: f64,
    pub bound_rhs: f64,
    pub exact_variance: f64,
}

/// Bound and exact variance along a baseline sweep with the partition frozen.
pub fn b_sweep(
    inst: &MdpInstance,
    pol: &PolicyTable,
    frozen: &Partition,
    bs: &[f64],
) -> Result<Vec<SweepRow>, PgVarError> {
    bs.iter()
        .map(|&b| {
            Ok(SweepRow {
                b,
                bound_rhs: bound_rhs(inst, pol, b, frozen)?.value,
                exact_variance: exact_variance(inst, pol, BaselineSpec::Constant(b))?,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(q_max: f64, rows: &[SweepRow], w: W) -> Result<(), csv::Error> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record(["b", "q_max", "bound_rhs", "exact_variance"])?;
    for r in rows {
        wtr.write_record([r.b, q_max, r.bound_rhs, r.exact_variance].map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

fn read_floats<R: std::io::Read>(r: R, header: &[&str]) -> Result<Vec<Vec<f64>>, PgVarError> {
    let bad = |m: String| PgVarError::Invalid(m);
    let mut rdr = csv::Reader::from_reader(r);
    let found = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(bad(format!("unexpected header {found:?}")));
    }
    rdr.records()
        .map(|row| {
            let row = row.map_err(|e| bad(e.to_string()))?;
            row.iter()
                .map(|v| v.parse::<f64>().map_err(|_| bad(format!("bad number `{v}`"))))
                .collect()
        })
        .collect()
}

pub fn read_study_csv<R: std::io::Read>(r: R) -> Result<Vec<StudyRow>, PgVarError> {
    let header = ["fraction", "b", "q_max", "bound_rhs", "exact_variance", "mc_variance", "mc_se", "p_a1"];
    Ok(read_floats(r, &header)?
        .into_iter()
        .map(|v| StudyRow {
            fraction: v[0],
            b: v[1],
            q_max: v[2],
            bound_rhs: v[3],
            exact_variance: v[4],
            mc_variance: v[5],
            mc_se: v[6],
            p_a1: v[7],
        })
        .collect())
}

/// `(q_max, rows)`; `q_max` is NaN for an empty file.
pub fn read_sweep_csv<R: std::io::Read>(r: R) -> Result<(f64, Vec<SweepRow>), PgVarError> {
    let rows = read_floats(r, &["b", "q_max", "bound_rhs", "exact_variance"])?;
    let q_max = rows.first().map_or(f64::NAN, |v| v[1]);
    Ok((
        q_max,
        rows.into_iter()
            .map(|v| SweepRow {
                b: v[0],
                bound_rhs: v[2],
                exact_variance: v[3],
            })
            .collect(),
    ))
}
