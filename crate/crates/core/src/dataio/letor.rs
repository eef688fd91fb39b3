use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::{parse_err, read_file, DataError};
use crate::dataset::{build_dataset, Dataset, DatasetKind, DocId, Document, Judgment, Query, QueryId, Records};

/// Parse a LETOR feature file: `<rel> qid:<q> 1:<v> 2:<v> ... # <comment>`.
///
/// Features are stored as given. The document id is taken from `docid = X`
/// in the comment, else the comment's first token, else `q<q>_line<n>`.
/// Negative labels mark unjudged documents that still enter the pool.
pub fn parse_letor(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    parse_letor_str(&read_file(path.as_ref())?)
}

pub fn parse_letor_str(text: &str) -> Result<Dataset, DataError> {
    let mut order: Vec<String> = Vec::new();
    let mut pools: HashMap<String, Vec<Document>> = HashMap::new();
    let mut judgments = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let n = idx + 1;
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (b, Some(c)),
            None => (raw, None),
        };
        let mut fields = body.split_whitespace();
        let Some(label) = fields.next() else {
            continue;
        };
        let label: i64 = label
            .parse()
            .map_err(|_| parse_err(n, format!("bad relevance label `{label}`")))?;
        let qid = fields
            .next()
            .and_then(|f| f.strip_prefix("qid:"))
            .filter(|q| !q.is_empty())
            .ok_or_else(|| parse_err(n, "expected `qid:<id>` after the label"))?
            .to_string();
        let mut features = Vec::new();
        for f in fields {
            let (i, v) = f
                .split_once(':')
                .ok_or_else(|| parse_err(n, format!("bad feature `{f}`")))?;
            let i: usize = i
                .parse()
                .map_err(|_| parse_err(n, format!("bad feature index in `{f}`")))?;
            if i != features.len() + 1 {
                return Err(parse_err(
                    n,
                    format!("feature index {i} where {} was expected", features.len() + 1),
                ));
            }
            let v: f64 = v
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(n, format!("bad feature value in `{f}`")))?;
            features.push(v);
        }
        if features.is_empty() {
            return Err(parse_err(n, "no features"));
        }
        let doc = comment
            .and_then(doc_id_from_comment)
            .unwrap_or_else(|| format!("q{qid}_line{n}"));
        if label >= 0 {
            let rel = u32::try_from(label).map_err(|_| parse_err(n, "label out of range"))?;
            judgments.push(Judgment::new(qid.as_str(), doc.as_str(), rel));
        }
        if !pools.contains_key(&qid) {
            order.push(qid.clone());
        }
        pools
            .entry(qid)
            .or_default()
            .push(Document::with_features(doc.as_str(), features));
    }
    let queries: Vec<Query> = order.iter().map(|q| Query::new(q.as_str())).collect();
    let pools = order.iter().map(|q| pools.remove(q).unwrap_or_default()).collect();
    Ok(build_dataset(Records {
        kind: DatasetKind::WebSearch,
        queries,
        pools,
        judgments,
    })?)
}

fn doc_id_from_comment(comment: &str) -> Option<String> {
    if let Some(pos) = comment.find("docid") {
        let rest = comment[pos + "docid".len()..].trim_start();
        let rest = rest.strip_prefix('=').unwrap_or(rest).trim_start();
        return rest.split_whitespace().next().map(str::to_string);
    }
    comment.split_whitespace().next().map(str::to_string)
}

/// Serialize a feature-based dataset in LETOR format. Unjudged documents get
/// label `-1`; [`parse_letor_str`] reads the output back to an equal dataset.
pub fn write_letor(ds: &Dataset) -> Result<String, DataError> {
    let judged: BTreeMap<(&QueryId, &DocId), u32> = ds
        .judgments()
        .iter()
        .map(|j| ((&j.query, &j.doc), j.relevance))
        .collect();
    let mut out = String::new();
    for (qi, q) in ds.queries().iter().enumerate() {
        if q.id.as_str().contains(char::is_whitespace) {
            return Err(DataError::Unsupported(format!("query id `{}` contains whitespace", q.id)));
        }
        for doc in ds.pool(qi) {
            let features = doc.features.as_ref().ok_or_else(|| {
                DataError::Unsupported(format!("document `{}` has no feature vector", doc.id))
            })?;
            let label = judged.get(&(&q.id, &doc.id)).map_or(-1, |&r| i64::from(r));
            write!(out, "{label} qid:{}", q.id).unwrap();
            for (i, v) in features.iter().enumerate() {
                write!(out, " {}:{v}", i + 1).unwrap();
            }
            writeln!(out, " # docid = {}", doc.id).unwrap();
        }
    }
    Ok(out)
}

/// Per-query min-max scaling of every feature to [0, 1]; constant features become 0.
pub fn normalize_min_max(ds: &Dataset) -> Result<Dataset, DataError> {
    let mut records = ds.records();
    for pool in &mut records.pools {
        let Some(dim) = pool.first().and_then(|d| d.features.as_ref()).map(Vec::len) else {
            continue;
        };
        for j in 0..dim {
            let col = pool.iter().filter_map(|d| d.features.as_ref().map(|f| f[j]));
            let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
            for d in pool.iter_mut() {
                if let Some(f) = d.features.as_mut() {
                    f[j] = if hi > lo { (f[j] - lo) / (hi - lo) } else { 0.0 };
                }
            }
        }
    }
    Ok(build_dataset(records)?)
}
