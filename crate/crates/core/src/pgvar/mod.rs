//! Exact and Monte-Carlo variance of the REINFORCE gradient on one-step
//! decision problems (state = query, action = document), and a checker for
//! the constant-baseline lower bound
//!
//! ```text
//! V(g(b)) ≳ (Q_max − b)² · E_ρ[ Σ_{a∈A1(s)} π(a|s) ||∇log π(a|s) − E[∇log π]||² ]
//! ```
//!
//! where `A1(s) = {a : Q̂(s,a) < b}` and `Q_max` is the largest `Q̂` over all
//! `A1` actions.

mod study;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::dataset::{Dataset, DocId, QueryId};
use crate::math::{axpy, norm_sq, sub};
use crate::policy::{PolicyError, SoftmaxPolicy};
use crate::scorers::{Scorer, ScorerError};
use crate::trainers::RewardKind;

pub use study::{
    b_sweep, read_study_csv, read_sweep_csv, sparsity_vs_bound_study, study_instance, write_study_csv,
    write_sweep_csv, StudyConfig, StudyRow, SweepRow,
};

/// Largest number of state-action pairs enumerated exactly.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

#[derive(Debug, thiserror::Error)]
pub enum PgVarError {
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("{pairs} state-action pairs exceed the enumeration limit of {limit}")]
    TooLarge { pairs: usize, limit: usize },
    #[error("Q_max is undefined: every A1 set is empty")]
    UndefinedQmax,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Data(#[from] crate::dataio::DataError),
    #[error(transparent)]
    Train(#[from] crate::trainers::TrainError),
}

/// One-step decision problem: `Q̂(s, a)` per state and action plus the state
/// visitation distribution `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpInstance {
    pub states: Vec<QueryId>,
    pub actions: Vec<Vec<DocId>>,
    pub q_table: Vec<Vec<f64>>,
    pub visitation: Vec<f64>,
}

fn close_to_one(total: f64) -> bool {
    (total - 1.0).abs() <= 1e-9
}

impl MdpInstance {
    pub fn new(
        states: Vec<QueryId>,
        actions: Vec<Vec<DocId>>,
        q_table: Vec<Vec<f64>>,
        visitation: Vec<f64>,
    ) -> Result<Self, PgVarError> {
        let invalid = |m: String| Err(PgVarError::Invalid(m));
        if states.is_empty() {
            return invalid("no states".into());
        }
        if actions.len() != states.len() || q_table.len() != states.len() || visitation.len() != states.len() {
            return invalid("states, actions, q_table and visitation differ in length".into());
        }
        for (s, (a, q)) in actions.iter().zip(&q_table).enumerate() {
            if a.is_empty() {
                return invalid(format!("state {s} has no actions"));
            }
            if a.len() != q.len() {
                return invalid(format!("state {s}: {} actions but {} Q values", a.len(), q.len()));
            }
            if q.iter().any(|v| !v.is_finite()) {
                return invalid(format!("state {s} has a non-finite Q value"));
            }
        }
        if visitation.iter().any(|&p| !(p >= 0.0)) || !close_to_one(visitation.iter().sum()) {
            return invalid("visitation must be a probability vector".into());
        }
        Ok(Self {
            states,
            actions,
            q_table,
            visitation,
        })
    }

    /// Instance with generated ids `s<i>` / `a<j>`.
    pub fn from_table(q_table: Vec<Vec<f64>>, visitation: Vec<f64>) -> Result<Self, PgVarError> {
        let states = (0..q_table.len()).map(|s| QueryId::new(format!("s{s}"))).collect();
        let actions = q_table
            .iter()
            .map(|q| (0..q.len()).map(|a| DocId::new(format!("a{a}"))).collect())
            .collect();
        Self::new(states, actions, q_table, visitation)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.q_table.iter().map(Vec::len).sum()
    }

    fn check_enumerable(&self) -> Result<(), PgVarError> {
        let pairs = self.num_pairs();
        if pairs > ENUMERATION_LIMIT {
            return Err(PgVarError::TooLarge {
                pairs,
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok(())
    }
}

/// States are the dataset's queries, actions their full pools and
/// `Q̂(s, a) = reward(f(a, s))`; visitation is uniform over queries.
pub fn build_instance(ds: &Dataset, d: &Scorer, reward: RewardKind) -> Result<MdpInstance, PgVarError> {
    let n = ds.num_queries();
    let mut q_table = Vec::with_capacity(n);
    for qi in 0..n {
        let pool: Vec<usize> = (0..ds.pool(qi).len()).collect();
        q_table.push(
            d.score_pool(ds, qi, &pool)?
                .into_iter()
                .map(|f| reward.reward(f))
                .collect(),
        );
    }
    MdpInstance::new(
        ds.queries().iter().map(|q| q.id.clone()).collect(),
        (0..n).map(|qi| ds.pool(qi).iter().map(|d| d.id.clone()).collect()).collect(),
        q_table,
        vec![1.0 / n as f64; n],
    )
}

/// Action probabilities `π(a|s)` and score functions `∇_θ log π(a|s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    probs: Vec<Vec<f64>>,
    grads: Vec<Vec<Vec<f64>>>,
    dim: usize,
}

impl PolicyTable {
    /// Explicit table. Every state's probabilities must sum to 1 and satisfy
    /// the score-function identity `Σ_a π(a|s) ∇log π(a|s) = 0`.
    pub fn explicit(probs: Vec<Vec<f64>>, grads: Vec<Vec<Vec<f64>>>) -> Result<Self, PgVarError> {
        let invalid = |m: String| Err(PgVarError::Invalid(m));
        if probs.is_empty() || probs.len() != grads.len() {
            return invalid("probs and grads must cover the same non-empty state set".into());
        }
        let dim = grads[0].first().map_or(0, Vec::len);
        for (s, (p, g)) in probs.iter().zip(&grads).enumerate() {
            if p.is_empty() || p.len() != g.len() {
                return invalid(format!("state {s}: probs and grads differ in length"));
            }
            if p.iter().any(|&v| !(v >= 0.0)) || !close_to_one(p.iter().sum()) {
                return invalid(format!("state {s}: probabilities must sum to 1"));
            }
            if g.iter().any(|v| v.len() != dim || v.iter().any(|x| !x.is_finite())) {
                return invalid(format!("state {s}: gradients must be finite and of length {dim}"));
            }
            let mut mean = vec![0.0; dim];
            let mut scale = 0.0f64;
            for (&pa, ga) in p.iter().zip(g) {
                axpy(pa, ga, &mut mean);
                scale = scale.max(norm_sq(ga).sqrt());
            }
            if norm_sq(&mean).sqrt() > 1e-9 * scale.max(1.0) {
                return invalid(format!("state {s}: E[∇log π] is not zero"));
            }
        }
        Ok(Self { probs, grads, dim })
    }

    /// Tabular softmax with one logit per state-action pair: θ is the
    /// concatenation of all logits and `∇log π(a|s) = (e_a − π(·|s)) / T`
    /// restricted to the block of state `s`.
    pub fn tabular_softmax(logits: &[Vec<f64>], temperature: f64) -> Result<Self, PgVarError> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(PolicyError::Temperature(temperature).into());
        }
        let dim: usize = logits.iter().map(Vec::len).sum();
        let mut probs = Vec::with_capacity(logits.len());
        let mut grads = Vec::with_capacity(logits.len());
        let mut offset = 0;
        for l in logits {
            if l.is_empty() {
                return Err(PolicyError::EmptyPool.into());
            }
            let p = crate::math::softmax(l, temperature);
            let g = (0..l.len())
                .map(|a| {
                    let mut v = vec![0.0; dim];
                    for (j, &pj) in p.iter().enumerate() {
                        v[offset + j] = -pj / temperature;
                    }
                    v[offset + a] += 1.0 / temperature;
                    v
                })
                .collect();
            offset += l.len();
            probs.push(p);
            grads.push(g);
        }
        Ok(Self { probs, grads, dim })
    }

    /// Table of a softmax policy over every query's full pool.
    pub fn from_softmax_policy(policy: &SoftmaxPolicy, ds: &Dataset) -> Result<Self, PgVarError> {
        let mut probs = Vec::with_capacity(ds.num_queries());
        let mut grads = Vec::with_capacity(ds.num_queries());
        for qi in 0..ds.num_queries() {
            let pool: Vec<usize> = (0..ds.pool(qi).len()).collect();
            let p = policy.probs(ds, qi, &pool)?;
            let expected = policy.expected_score_gradient(ds, qi, &pool, &p)?;
            let mut g = Vec::with_capacity(pool.len());
            for &di in &pool {
                let mut v = vec![0.0; policy.scorer.num_params()];
                policy.accumulate_log_prob_gradient(ds, qi, di, &expected, 1.0, &mut v)?;
                g.push(v);
            }
            probs.push(p);
            grads.push(g);
        }
        Ok(Self {
            probs,
            grads,
            dim: policy.scorer.num_params(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn probs(&self, s: usize) -> &[f64] {
        &self.probs[s]
    }

    pub fn score_function(&self, s: usize, a: usize) -> &[f64] {
        &self.grads[s][a]
    }

    fn check(&self, inst: &MdpInstance) -> Result<(), PgVarError> {
        let same = self.probs.len() == inst.num_states()
            && self.probs.iter().zip(&inst.q_table).all(|(p, q)| p.len() == q.len());
        if same {
            Ok(())
        } else {
            Err(PgVarError::Invalid("policy table and instance differ in shape".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineSpec {
    Constant(f64),
    /// `V(s) = Σ_a π(a|s) Q̂(s, a)`.
    ValueFunction,
}

impl BaselineSpec {
    fn value(self, inst: &MdpInstance, pol: &PolicyTable, s: usize) -> f64 {
        match self {
            BaselineSpec::Constant(b) => b,
            BaselineSpec::ValueFunction => pol.probs[s].iter().zip(&inst.q_table[s]).map(|(p, q)| p * q).sum(),
        }
    }
}

fn prepare(inst: &MdpInstance, pol: &PolicyTable, baseline: BaselineSpec) -> Result<Vec<f64>, PgVarError> {
    pol.check(inst)?;
    if let BaselineSpec::Constant(b) = baseline {
        if !b.is_finite() {
            return Err(PgVarError::Invalid("constant baseline must be finite".into()));
        }
    }
    Ok((0..inst.num_states()).map(|s| baseline.value(inst, pol, s)).collect())
}

/// `g(s, a) = ∇log π(a|s) (Q̂(s, a) − b(s))`.
fn gradient_at(inst: &MdpInstance, pol: &PolicyTable, b: &[f64], s: usize, a: usize) -> Vec<f64> {
    let c = inst.q_table[s][a] - b[s];
    pol.grads[s][a].iter().map(|g| g * c).collect()
}

/// One draw `s ∼ ρ`, `a ∼ π(·|s)` and its gradient `g(b)`.
pub fn gradient_sample<R: Rng + ?Sized>(
    inst: &MdpInstance,
    pol: &PolicyTable,
    baseline: BaselineSpec,
    rng: &mut R,
) -> Result<Vec<f64>, PgVarError> {
    let b = prepare(inst, pol, baseline)?;
    let sampler = Sampler::new(inst, pol);
    let (s, a) = sampler.draw(rng);
    Ok(gradient_at(inst, pol, &b, s, a))
}

struct Sampler {
    states: WeightedIndex<f64>,
    actions: Vec<WeightedIndex<f64>>,
}

impl Sampler {
    fn new(inst: &MdpInstance, pol: &PolicyTable) -> Self {
        Self {
            states: WeightedIndex::new(&inst.visitation).expect("valid visitation"),
            actions: pol
                .probs
                .iter()
                .map(|p| WeightedIndex::new(p).expect("valid policy"))
                .collect(),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let s = self.states.sample(rng);
        (s, self.actions[s].sample(rng))
    }
}

/// `E_{ρ,π}[g(b)]` by enumeration.
pub fn exact_gradient_mean(inst: &MdpInstance, pol: &PolicyTable, baseline: BaselineSpec) -> Result<Vec<f64>, PgVarError> {
    inst.check_enumerable()?;
    let b = prepare(inst, pol, baseline)?;
    let mut mean = vec![0.0; pol.dim];
    for s in 0..inst.num_states() {
        for (a, &p) in pol.probs[s].iter().enumerate() {
            let w = inst.visitation[s] * p;
            if w != 0.0 {
                axpy(w, &gradient_at(inst, pol, &b, s, a), &mut mean);
            }
        }
    }
    Ok(mean)
}

/// `E_{ρ,π}||g(b) − E[g(b)]||²` by enumeration.
pub fn exact_variance(inst: &MdpInstance, pol: &PolicyTable, baseline: BaselineSpec) -> Result<f64, PgVarError> {
    let (a1, a2) = split_variance(inst, pol, baseline, |_, _| true)?;
    Ok(a1 + a2)
}

/// Variance mass split by a per-action predicate: (matching, rest).
fn split_variance(
    inst: &MdpInstance,
    pol: &PolicyTable,
    baseline: BaselineSpec,
    in_first: impl Fn(usize, usize) -> bool,
) -> Result<(f64, f64), PgVarError> {
    let mean = exact_gradient_mean(inst, pol, baseline)?;
    let b = prepare(inst, pol, baseline)?;
    let (mut first, mut rest) = (0.0, 0.0);
    for s in 0..inst.num_states() {
        for (a, &p) in pol.probs[s].iter().enumerate() {
            let w = inst.visitation[s] * p;
            if w == 0.0 {
                continue;
            }
            let t = w * norm_sq(&sub(&gradient_at(inst, pol, &b, s, a), &mean));
            if in_first(s, a) {
                first += t;
            } else {
                rest += t;
            }
        }
    }
    Ok((first, rest))
}

/// Monte-Carlo variance estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McVariance {
    pub estimate: f64,
    pub standard_error: f64,
}

/// Streaming mean and summed squared deviation of vectors.
#[derive(Debug, Clone)]
struct Moments {
    n: usize,
    mean: Vec<f64>,
    m2: f64,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: 0.0,
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        let mut acc = 0.0;
        for (m, &v) in self.mean.iter_mut().zip(x) {
            let before = v - *m;
            *m += before * inv;
            acc += before * (v - *m);
        }
        self.m2 += acc;
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        let n = self.n + other.n;
        let (fa, fb) = (self.n as f64 / n as f64, other.n as f64 / n as f64);
        let mut cross = 0.0;
        for (m, &o) in self.mean.iter_mut().zip(&other.mean) {
            let delta = o - *m;
            cross += delta * delta;
            *m += delta * fb;
        }
        self.m2 += other.m2 + cross * fa * other.n as f64;
        self.n = n;
    }

    fn variance(&self) -> f64 {
        self.m2 / (self.n - 1) as f64
    }
}

/// Unbiased variance of `n` gradient samples, computed in one pass.
///
/// The samples are cut into `min(50, n/2)` consecutive batches; the standard
/// error is the spread of the per-batch variances over `√batches`.
pub fn mc_variance<R: Rng + ?Sized>(
    inst: &MdpInstance,
    pol: &PolicyTable,
    baseline: BaselineSpec,
    n: usize,
    rng: &mut R,
) -> Result<McVariance, PgVarError> {
    if n < 2 {
        return Err(PgVarError::TooFewSamples(n));
    }
    let b = prepare(inst, pol, baseline)?;
    let sampler = Sampler::new(inst, pol);
    let batches = (n / 2).min(50);
    let mut total = Moments::new(pol.dim);
    let mut batch_vars = Vec::with_capacity(batches);
    for i in 0..batches {
        let size = n / batches + usize::from(i < n % batches);
        let mut m = Moments::new(pol.dim);
        for _ in 0..size {
            let (s, a) = sampler.draw(rng);
            m.push(&gradient_at(inst, pol, &b, s, a));
        }
        batch_vars.push(m.variance());
        total.merge(&m);
    }
    let standard_error = if batches < 2 {
        f64::INFINITY
    } else {
        let k = batches as f64;
        let mean = batch_vars.iter().sum::<f64>() / k;
        let var = batch_vars.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    };
    Ok(McVariance {
        estimate: total.variance(),
        standard_error,
    })
}

/// Per-state split of actions by `Q̂ < b` (A1) versus `Q̂ ≥ b` (A2).
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub b: f64,
    pub a1: Vec<Vec<usize>>,
    pub a2: Vec<Vec<usize>>,
    /// Largest `Q̂` over all A1 actions; `None` when every A1 set is empty.
    pub q_max: Option<f64>,
    pub any_a1_empty: bool,
}

impl Partition {
    fn in_a1(&self, s: usize, a: usize) -> bool {
        self.a1[s].binary_search(&a).is_ok()
    }
}

pub fn partition_actions(inst: &MdpInstance, b: f64) -> Partition {
    let mut a1 = Vec::with_capacity(inst.num_states());
    let mut a2 = Vec::with_capacity(inst.num_states());
    let mut q_max: Option<f64> = None;
    for q in &inst.q_table {
        let (lo, hi): (Vec<usize>, Vec<usize>) = (0..q.len()).partition(|&a| q[a] < b);
        for &a in &lo {
            q_max = Some(q_max.map_or(q[a], |m| m.max(q[a])));
        }
        a1.push(lo);
        a2.push(hi);
    }
    Partition {
        b,
        any_a1_empty: a1.iter().any(Vec::is_empty),
        a1,
        a2,
        q_max,
    }
}

/// The variance under constant baseline `b` split into the A1 and A2
/// contributions, both centered on the global mean `E[g(b)]`.
pub fn variance_decomposition(inst: &MdpInstance, pol: &PolicyTable, b: f64) -> Result<(f64, f64), PgVarError> {
    let part = partition_actions(inst, b);
    split_variance(inst, pol, BaselineSpec::Constant(b), |s, a| part.in_a1(s, a))
}

/// Probability of drawing an A1 action.
pub fn a1_mass(inst: &MdpInstance, pol: &PolicyTable, part: &Partition) -> f64 {
    part.a1
        .iter()
        .enumerate()
        .map(|(s, acts)| inst.visitation[s] * acts.iter().map(|&a| pol.probs[s][a]).sum::<f64>())
        .sum()
}

/// The bound evaluated three algebraically equal ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRhs {
    /// `(q_max − b)² Σ_s ρ(s) Σ_{a∈A1} π(a|s) ||∇log π − E[∇log π]||²`
    pub value: f64,
    /// Same with the factor written as `b² (q_max/b − 1)²`.
    pub factored: f64,
    /// Same with the uncentered `||∇log π||²`.
    pub uncentered: f64,
}

/// Bound right-hand side at baseline `b` for a given (possibly frozen) partition.
pub fn bound_rhs(inst: &MdpInstance, pol: &PolicyTable, b: f64, part: &Partition) -> Result<BoundRhs, PgVarError> {
    inst.check_enumerable()?;
    pol.check(inst)?;
    let q_max = part.q_max.ok_or(PgVarError::UndefinedQmax)?;
    let mut center = vec![0.0; pol.dim];
    for s in 0..inst.num_states() {
        for (a, &p) in pol.probs[s].iter().enumerate() {
            axpy(inst.visitation[s] * p, &pol.grads[s][a], &mut center);
        }
    }
    let (mut centered, mut raw) = (0.0, 0.0);
    for (s, acts) in part.a1.iter().enumerate() {
        for &a in acts {
            let w = inst.visitation[s] * pol.probs[s][a];
            centered += w * norm_sq(&sub(&pol.grads[s][a], &center));
            raw += w * norm_sq(&pol.grads[s][a]);
        }
    }
    let factor = (q_max - b).powi(2);
    let factored = if b != 0.0 { b * b * (q_max / b - 1.0).powi(2) } else { factor };
    Ok(BoundRhs {
        value: factor * centered,
        factored: factored * centered,
        uncentered: factor * raw,
    })
}

/// Every quantity in the bound's derivation, with the inequalities checked.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub b: f64,
    pub q_max: Option<f64>,
    pub exact_variance: f64,
    pub term_a1: f64,
    pub term_a2: f64,
    pub bound_rhs: Option<BoundRhs>,
    /// Probability of drawing an A1 action.
    pub p_a1: f64,
    /// `term_a1 ≥ bound_rhs`; `None` when `Q_max` is undefined.
    pub a1_bound_holds: Option<bool>,
    /// `exact_variance ≥ bound_rhs`; holds only approximately when A2 has mass.
    pub full_bound_holds: Option<bool>,
    /// `(Q̂(s,a) − b)² ≥ (q_max − b)²` for every A1 action.
    pub pointwise_holds: bool,
}

fn ge(lhs: f64, rhs: f64) -> bool {
    lhs >= rhs - 1e-12 * rhs.abs().max(lhs.abs())
}

pub fn verify_bound_chain(inst: &MdpInstance, pol: &PolicyTable, b: f64) -> Result<BoundReport, PgVarError> {
    let part = partition_actions(inst, b);
    let (term_a1, term_a2) = variance_decomposition(inst, pol, b)?;
    let exact = exact_variance(inst, pol, BaselineSpec::Constant(b))?;
    let rhs = match bound_rhs(inst, pol, b, &part) {
        Ok(r) => Some(r),
        Err(PgVarError::UndefinedQmax) => None,
        Err(e) => return Err(e),
    };
    let pointwise_holds = part.q_max.is_none_or(|qm| {
        part.a1.iter().enumerate().all(|(s, acts)| {
            acts.iter()
                .all(|&a| (inst.q_table[s][a] - b).powi(2) >= (qm - b).powi(2))
        })
    });
    Ok(BoundReport {
        b,
        q_max: part.q_max,
        exact_variance: exact,
        term_a1,
        term_a2,
        bound_rhs: rhs,
        p_a1: a1_mass(inst, pol, &part),
        a1_bound_holds: rhs.map(|r| ge(term_a1, r.value)),
        full_bound_holds: rhs.map(|r| ge(exact, r.value)),
        pointwise_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_action() -> (MdpInstance, PolicyTable) {
        let inst = MdpInstance::from_table(vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
        let pol = PolicyTable::explicit(vec![vec![0.5, 0.5]], vec![vec![vec![0.5], vec![-0.5]]]).unwrap();
        (inst, pol)
    }

    #[test]
    fn hand_enumeration() {
        let (inst, pol) = two_action();
        let v = exact_variance(&inst, &pol, BaselineSpec::Constant(0.0)).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
        let m = exact_gradient_mean(&inst, &pol, BaselineSpec::Constant(0.0)).unwrap();
        assert_eq!(m, vec![0.0]);
        assert_eq!(exact_variance(&inst, &pol, BaselineSpec::Constant(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn deterministic_instance_has_no_variance() {
        let inst = MdpInstance::from_table(vec![vec![0.3]], vec![1.0]).unwrap();
        let pol = PolicyTable::tabular_softmax(&[vec![0.0]], 1.0).unwrap();
        assert_eq!(exact_variance(&inst, &pol, BaselineSpec::Constant(0.5)).unwrap(), 0.0);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let g = gradient_sample(&inst, &pol, BaselineSpec::Constant(0.5), &mut rng).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
        let mc = mc_variance(&inst, &pol, BaselineSpec::Constant(0.5), 100, &mut rng).unwrap();
        assert_eq!((mc.estimate, mc.standard_error), (0.0, 0.0));
        assert!(matches!(
            mc_variance(&inst, &pol, BaselineSpec::Constant(0.5), 1, &mut rng),
            Err(PgVarError::TooFewSamples(1))
        ));
    }

    #[test]
    fn partitions() {
        let inst = MdpInstance::from_table(vec![vec![0.2, 0.7]], vec![1.0]).unwrap();
        let p = partition_actions(&inst, 0.5);
        assert_eq!((p.a1[0].clone(), p.a2[0].clone(), p.q_max), (vec![0], vec![1], Some(0.2)));
        let p = partition_actions(&inst, 0.9);
        assert_eq!((p.a1[0].len(), p.q_max), (2, Some(0.7)));
        let p = partition_actions(&inst, 0.1);
        assert_eq!(p.q_max, None);
        assert!(p.any_a1_empty);
        let pol = PolicyTable::tabular_softmax(&[vec![0.0, 0.0]], 1.0).unwrap();
        assert!(matches!(bound_rhs(&inst, &pol, 0.1, &p), Err(PgVarError::UndefinedQmax)));
    }

    #[test]
    fn bound_vanishes_at_q_max() {
        let inst = MdpInstance::from_table(vec![vec![0.2, 0.7]], vec![1.0]).unwrap();
        let pol = PolicyTable::tabular_softmax(&[vec![0.3, -0.1]], 1.0).unwrap();
        let p = partition_actions(&inst, 0.5);
        assert_eq!(bound_rhs(&inst, &pol, 0.2, &p).unwrap().value, 0.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(MdpInstance::from_table(vec![vec![]], vec![1.0]).is_err());
        assert!(MdpInstance::from_table(vec![vec![1.0]], vec![0.5]).is_err());
        assert!(MdpInstance::from_table(vec![vec![f64::NAN]], vec![1.0]).is_err());
        assert!(PolicyTable::explicit(vec![vec![0.5, 0.5]], vec![vec![vec![1.0], vec![0.0]]]).is_err());
    }
}
