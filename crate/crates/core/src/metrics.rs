//! Ranking metrics and model evaluation.
//!
//! NDCG uses gain `2^rel − 1` and discount `1 / log2(i + 1)` for 1-based
//! positions. Queries without any relevant document are excluded from every
//! mean and reported as skipped.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::dataset::{Dataset, DocId, QueryId};
use crate::scorers::{Scorer, ScorerError};

/// Relevance grades of one query keyed by document id.
pub type Qrels = BTreeMap<DocId, u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query: QueryId,
    pub docs: Vec<DocId>,
    pub scores: Vec<f64>,
}

/// Sort a query's pool by score, descending; ties go to the smaller doc id.
pub fn rank(scorer: &Scorer, ds: &Dataset, qi: usize, pool: &[usize]) -> Result<RankedList, ScorerError> {
    assert!(!pool.is_empty(), "cannot rank an empty pool");
    let mut scored: Vec<(f64, &DocId)> = pool
        .iter()
        .map(|&di| Ok((scorer.score(ds.pair(qi, di))?, &ds.pool(qi)[di].id)))
        .collect::<Result<_, ScorerError>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(RankedList {
        query: ds.query(qi).id.clone(),
        docs: scored.iter().map(|(_, d)| (*d).clone()).collect(),
        scores: scored.iter().map(|(s, _)| *s).collect(),
    })
}

fn grade(qrels: &Qrels, doc: &DocId) -> u32 {
    qrels.get(doc).copied().unwrap_or(0)
}

/// Relevant documents in the top `min(k, len)`, divided by `k`.
pub fn precision_at_k(ranked: &RankedList, qrels: &Qrels, k: usize) -> f64 {
    assert!(k >= 1, "k must be at least 1");
    let hits = ranked
        .docs
        .iter()
        .take(k)
        .filter(|d| grade(qrels, d) > 0)
        .count();
    hits as f64 / k as f64
}

fn dcg(grades: impl Iterator<Item = u32>) -> f64 {
    grades
        .enumerate()
        .map(|(i, g)| ((1u64 << g.min(62)) as f64 - 1.0) / ((i + 2) as f64).log2())
        .sum()
}

/// `DCG@k / IDCG@k`; `None` when the query has no relevant document.
pub fn ndcg_at_k(ranked: &RankedList, qrels: &Qrels, k: usize) -> Option<f64> {
    assert!(k >= 1, "k must be at least 1");
    let mut ideal: Vec<u32> = qrels.values().copied().filter(|&g| g > 0).collect();
    if ideal.is_empty() {
        return None;
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal.into_iter().take(k));
    let got = dcg(ranked.docs.iter().take(k).map(|d| grade(qrels, d)));
    Some(got / idcg)
}

/// 1 when the top document is relevant, else 0.
pub fn p_at_1(ranked: &RankedList, qrels: &Qrels) -> f64 {
    assert!(!ranked.docs.is_empty(), "empty ranking");
    if grade(qrels, &ranked.docs[0]) > 0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    PrecisionAt(usize),
    NdcgAt(usize),
}

impl Metric {
    pub const P_AT_1: Metric = Metric::PrecisionAt(1);

    pub fn compute(self, ranked: &RankedList, qrels: &Qrels) -> Option<f64> {
        match self {
            Metric::PrecisionAt(1) => Some(p_at_1(ranked, qrels)),
            Metric::PrecisionAt(k) => Some(precision_at_k(ranked, qrels, k)),
            Metric::NdcgAt(k) => ndcg_at_k(ranked, qrels, k),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::PrecisionAt(k) => write!(f, "p@{k}"),
            Metric::NdcgAt(k) => write!(f, "ndcg@{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, k) = lower
            .split_once('@')
            .ok_or_else(|| format!("metric `{s}` must look like name@k"))?;
        let k: usize = k
            .parse()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| format!("bad cutoff in metric `{s}`"))?;
        match name {
            "p" | "precision" => Ok(Metric::PrecisionAt(k)),
            "ndcg" => Ok(Metric::NdcgAt(k)),
            _ => Err(format!("unknown metric `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: Metric,
    pub value: f64,
    pub queries_counted: usize,
    pub queries_skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub summaries: Vec<MetricSummary>,
}

impl EvalReport {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.summaries
            .iter()
            .find(|s| s.metric == metric)
            .map(|s| s.value)
    }
}

/// Mean of each metric over the queries with at least one relevant document.
pub fn evaluate_model(scorer: &Scorer, ds: &Dataset, metrics: &[Metric]) -> Result<EvalReport, ScorerError> {
    let mut sums = vec![0.0; metrics.len()];
    let mut counted = 0;
    let mut skipped = 0;
    for qi in 0..ds.num_queries() {
        if !ds.has_positive(qi) {
            skipped += 1;
            continue;
        }
        let pool: Vec<usize> = (0..ds.pool(qi).len()).collect();
        let ranked = rank(scorer, ds, qi, &pool)?;
        let qrels = ds.qrels(qi);
        for (s, m) in sums.iter_mut().zip(metrics) {
            *s += m.compute(&ranked, &qrels).expect("query has a relevant doc");
        }
        counted += 1;
    }
    Ok(EvalReport {
        summaries: metrics
            .iter()
            .zip(sums)
            .map(|(&metric, s)| MetricSummary {
                metric,
                value: if counted > 0 { s / counted as f64 } else { 0.0 },
                queries_counted: counted,
                queries_skipped: skipped,
            })
            .collect(),
    })
}

/// Write `model,metric,value,queries_counted,queries_skipped` rows.
pub fn write_eval_csv<W: std::io::Write>(
    rows: &[(String, EvalReport)],
    w: W,
) -> Result<(), csv::Error> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wtr.write_record(["model", "metric", "value", "queries_counted", "queries_skipped"])?;
    for (model, report) in rows {
        for s in &report.summaries {
            wtr.write_record([
                model.clone(),
                s.metric.to_string(),
                s.value.to_string(),
                s.queries_counted.to_string(),
                s.queries_skipped.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}
