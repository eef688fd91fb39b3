//! Immutable domain model: queries, closed per-query candidate pools and
//! graded relevance judgments.
//!
//! Everything is sorted lexicographically by id when a [`Dataset`] is built,
//! so a seed alone is enough to reproduce any run over it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("no records to build a dataset from")]
    Empty,
    #[error("query id must be non-empty")]
    EmptyQueryId,
    #[error("duplicate query `{0}`")]
    DuplicateQuery(String),
    #[error("query `{0}` has an empty candidate pool")]
    EmptyPool(String),
    #[error("document `{doc}` appears twice in the pool of query `{query}`")]
    DuplicatePoolDoc { query: String, doc: String },
    #[error("duplicate judgment for query `{query}`, document `{doc}`")]
    DuplicateJudgment { query: String, doc: String },
    #[error("judgment references unknown query `{0}`")]
    UnknownJudgedQuery(String),
    #[error("judged document `{doc}` is missing from the pool of query `{query}`")]
    JudgedDocMissing { query: String, doc: String },
    #[error("document `{doc}` has {found} features, expected {expected}")]
    FeatureDim {
        doc: String,
        expected: usize,
        found: usize,
    },
    #[error("document `{0}` has neither features nor tokens")]
    NoRepresentation(String),
    #[error("unknown query `{0}`")]
    UnknownQuery(String),
}

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(id: impl AsRef<str>) -> Self {
                Self(Arc::from(id.as_ref()))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:?}", &*self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self::new(s)
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self::new(s)
            }
        }
    };
}

string_id!(QueryId);
string_id!(DocId);

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: QueryId,
    /// Token ids for text tasks.
    pub tokens: Option<Vec<u32>>,
}

impl Query {
    pub fn new(id: impl Into<QueryId>) -> Self {
        Self {
            id: id.into(),
            tokens: None,
        }
    }

    pub fn with_tokens(id: impl Into<QueryId>, tokens: Vec<u32>) -> Self {
        Self {
            id: id.into(),
            tokens: Some(tokens),
        }
    }
}

/// A candidate document inside one query's pool.
///
/// For feature-based tasks the vector is the query-document feature vector,
/// so the same id may carry different features under different queries.
/// Recommendation items are identified by id alone.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: DocId,
    pub features: Option<Vec<f64>>,
    pub tokens: Option<Vec<u32>>,
}

impl Document {
    pub fn with_features(id: impl Into<DocId>, features: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            features: Some(features),
            tokens: None,
        }
    }

    pub fn with_tokens(id: impl Into<DocId>, tokens: Vec<u32>) -> Self {
        Self {
            id: id.into(),
            features: None,
            tokens: Some(tokens),
        }
    }

    pub fn item(id: impl Into<DocId>) -> Self {
        Self {
            id: id.into(),
            features: None,
            tokens: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Judgment {
    pub query: QueryId,
    pub doc: DocId,
    pub relevance: u32,
}

impl Judgment {
    pub fn new(query: impl Into<QueryId>, doc: impl Into<DocId>, relevance: u32) -> Self {
        Self {
            query: query.into(),
            doc: doc.into(),
            relevance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    WebSearch,
    Recommendation,
    Qa,
    Synthetic,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::WebSearch => "web-search",
            DatasetKind::Recommendation => "recommendation",
            DatasetKind::Qa => "qa",
            DatasetKind::Synthetic => "synthetic",
        }
    }
}

/// Unvalidated input to [`build_dataset`]. `pools[i]` belongs to `queries[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Records {
    pub kind: DatasetKind,
    pub queries: Vec<Query>,
    pub pools: Vec<Vec<Document>>,
    pub judgments: Vec<Judgment>,
}

/// A scoreable (query, document) pair borrowed from a dataset.
#[derive(Debug, Clone, Copy)]
pub struct Pair<'a> {
    pub query_index: usize,
    pub query: &'a Query,
    pub doc: &'a Document,
    /// Global item index of the document id (dense, lexicographic).
    pub item: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    kind: DatasetKind,
    queries: Vec<Query>,
    pools: Vec<Vec<Document>>,
    relevance: Vec<Vec<u32>>,
    judgments: Vec<Judgment>,
    items: Vec<DocId>,
    pool_items: Vec<Vec<usize>>,
    feature_dim: Option<usize>,
}

/// Validate records and build an immutable, lexicographically ordered dataset.
pub fn build_dataset(records: Records) -> Result<Dataset, DatasetError> {
    let Records {
        kind,
        queries,
        pools,
        judgments,
    } = records;
    if queries.is_empty() {
        return Err(DatasetError::Empty);
    }
    assert_eq!(queries.len(), pools.len(), "one pool per query");

    let mut entries: Vec<(Query, Vec<Document>)> = queries.into_iter().zip(pools).collect();
    entries.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    for w in entries.windows(2) {
        if w[0].0.id == w[1].0.id {
            return Err(DatasetError::DuplicateQuery(w[0].0.id.to_string()));
        }
    }

    let mut feature_dim = None;
    for (q, pool) in &mut entries {
        if q.id.as_str().is_empty() {
            return Err(DatasetError::EmptyQueryId);
        }
        if pool.is_empty() {
            return Err(DatasetError::EmptyPool(q.id.to_string()));
        }
        pool.sort_by(|a, b| a.id.cmp(&b.id));
        for w in pool.windows(2) {
            if w[0].id == w[1].id {
                return Err(DatasetError::DuplicatePoolDoc {
                    query: q.id.to_string(),
                    doc: w[0].id.to_string(),
                });
            }
        }
        for d in pool.iter() {
            match &d.features {
                Some(f) => match feature_dim {
                    None => feature_dim = Some(f.len()),
                    Some(dim) if dim != f.len() => {
                        return Err(DatasetError::FeatureDim {
                            doc: d.id.to_string(),
                            expected: dim,
                            found: f.len(),
                        })
                    }
                    _ => {}
                },
                None if d.tokens.is_none() && kind != DatasetKind::Recommendation => {
                    return Err(DatasetError::NoRepresentation(d.id.to_string()))
                }
                None => {}
            }
        }
    }

    let mut judgments = judgments;
    judgments.sort();
    for w in judgments.windows(2) {
        if w[0].query == w[1].query && w[0].doc == w[1].doc {
            return Err(DatasetError::DuplicateJudgment {
                query: w[0].query.to_string(),
                doc: w[0].doc.to_string(),
            });
        }
    }

    let mut relevance: Vec<Vec<u32>> = entries.iter().map(|(_, p)| vec![0; p.len()]).collect();
    for j in &judgments {
        let qi = entries
            .binary_search_by(|(q, _)| q.id.cmp(&j.query))
            .map_err(|_| DatasetError::UnknownJudgedQuery(j.query.to_string()))?;
        let di = entries[qi]
            .1
            .binary_search_by(|d| d.id.cmp(&j.doc))
            .map_err(|_| DatasetError::JudgedDocMissing {
                query: j.query.to_string(),
                doc: j.doc.to_string(),
            })?;
        relevance[qi][di] = j.relevance;
    }

    let items: Vec<DocId> = entries
        .iter()
        .flat_map(|(_, p)| p.iter().map(|d| d.id.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pool_items = entries
        .iter()
        .map(|(_, p)| {
            p.iter()
                .map(|d| items.binary_search(&d.id).expect("item indexed"))
                .collect()
        })
        .collect();

    let (queries, pools) = entries.into_iter().unzip();
    Ok(Dataset {
        kind,
        queries,
        pools,
        relevance,
        judgments,
        items,
        pool_items,
        feature_dim,
    })
}

impl Dataset {
    pub fn kind(&self) -> DatasetKind {
        self.kind
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn query(&self, qi: usize) -> &Query {
        &self.queries[qi]
    }

    pub fn query_index(&self, id: &str) -> Option<usize> {
        self.queries
            .binary_search_by(|q| q.id.as_str().cmp(id))
            .ok()
    }

    pub fn pool(&self, qi: usize) -> &[Document] {
        &self.pools[qi]
    }

    /// Relevance grade of every pool entry (0 when unjudged).
    pub fn relevance(&self, qi: usize) -> &[u32] {
        &self.relevance[qi]
    }

    pub fn judgments(&self) -> &[Judgment] {
        &self.judgments
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.feature_dim
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[DocId] {
        &self.items
    }

    /// Largest token id mentioned by any query or document, if any.
    pub fn max_token(&self) -> Option<u32> {
        let q = self.queries.iter().filter_map(|q| q.tokens.as_ref()).flatten();
        let d = self
            .pools
            .iter()
            .flatten()
            .filter_map(|d| d.tokens.as_ref())
            .flatten();
        q.chain(d).copied().max()
    }

    pub fn pair(&self, qi: usize, di: usize) -> Pair<'_> {
        Pair {
            query_index: qi,
            query: &self.queries[qi],
            doc: &self.pools[qi][di],
            item: self.pool_items[qi][di],
        }
    }

    /// Pool positions of documents with relevance > 0.
    pub fn positives(&self, qi: usize) -> Vec<usize> {
        self.relevance[qi]
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn has_positive(&self, qi: usize) -> bool {
        self.relevance[qi].iter().any(|&r| r > 0)
    }

    /// Pool positions for a query, optionally without its positives.
    pub fn candidates(&self, qi: usize, exclude_positives: bool) -> Vec<usize> {
        (0..self.pools[qi].len())
            .filter(|&i| !exclude_positives || self.relevance[qi][i] == 0)
            .collect()
    }

    /// Relevance judgments of one query keyed by document id.
    pub fn qrels(&self, qi: usize) -> BTreeMap<DocId, u32> {
        self.pools[qi]
            .iter()
            .zip(&self.relevance[qi])
            .map(|(d, &r)| (d.id.clone(), r))
            .collect()
    }

    /// The records this dataset was built from, in canonical order.
    pub fn records(&self) -> Records {
        Records {
            kind: self.kind,
            queries: self.queries.clone(),
            pools: self.pools.clone(),
            judgments: self.judgments.clone(),
        }
    }

    /// Keep only the queries at the given indices.
    pub fn select_queries(&self, indices: &[usize]) -> Result<Dataset, DatasetError> {
        let keep: BTreeSet<&QueryId> = indices.iter().map(|&i| &self.queries[i].id).collect();
        let queries: Vec<Query> = indices.iter().map(|&i| self.queries[i].clone()).collect();
        let pools = indices.iter().map(|&i| self.pools[i].clone()).collect();
        let judgments = self
            .judgments
            .iter()
            .filter(|j| keep.contains(&j.query))
            .cloned()
            .collect();
        build_dataset(Records {
            kind: self.kind,
            queries,
            pools,
            judgments,
        })
    }

    /// Random split of queries into (train, test); `test_fraction` of the
    /// queries (at least one, at most all but one) go to the test side.
    pub fn split_queries(
        &self,
        test_fraction: f64,
        seed: u64,
    ) -> Result<(Dataset, Dataset), DatasetError> {
        let n = self.num_queries();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));
        let (test, train) = order.split_at(n_test);
        let mut train = train.to_vec();
        let mut test = test.to_vec();
        train.sort_unstable();
        test.sort_unstable();
        if train.is_empty() {
            return Err(DatasetError::Empty);
        }
        Ok((self.select_queries(&train)?, self.select_queries(&test)?))
    }

    /// Hold out a fraction of every query's positives (per-interaction split,
    /// used for recommendation where test users must also be train users).
    ///
    /// The test side keeps the held-out positives judged and drops the train
    /// positives from its pools, so they are never ranked against the test items.
    pub fn split_positives(
        &self,
        test_fraction: f64,
        seed: u64,
    ) -> Result<(Dataset, Dataset), DatasetError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train_j = Vec::new();
        let mut test_j = Vec::new();
        let mut test_pools = Vec::with_capacity(self.num_queries());
        for qi in 0..self.num_queries() {
            let mut pos = self.positives(qi);
            pos.shuffle(&mut rng);
            let n_test = if pos.len() >= 2 {
                ((pos.len() as f64 * test_fraction).round() as usize).clamp(1, pos.len() - 1)
            } else {
                0
            };
            let held: BTreeSet<usize> = pos[..n_test].iter().copied().collect();
            let train_pos: BTreeSet<usize> = pos[n_test..].iter().copied().collect();
            let q = &self.queries[qi].id;
            let mut pool = Vec::new();
            for (di, doc) in self.pools[qi].iter().enumerate() {
                let rel = self.relevance[qi][di];
                if held.contains(&di) {
                    test_j.push(Judgment::new(q.clone(), doc.id.clone(), rel));
                    pool.push(doc.clone());
                } else {
                    if rel > 0 {
                        train_j.push(Judgment::new(q.clone(), doc.id.clone(), rel));
                    }
                    if !train_pos.contains(&di) {
                        pool.push(doc.clone());
                    }
                }
            }
            if pool.is_empty() {
                pool.push(self.pools[qi][0].clone());
            }
            test_pools.push(pool);
        }
        let train = build_dataset(Records {
            kind: self.kind,
            queries: self.queries.clone(),
            pools: self.pools.clone(),
            judgments: train_j,
        })?;
        let test = build_dataset(Records {
            kind: self.kind,
            queries: self.queries.clone(),
            pools: test_pools,
            judgments: test_j,
        })?
        .with_catalogue(&self.items);
        Ok((train, test))
    }

    /// Extend the item index to cover `items`, so item indices agree with a
    /// dataset whose pools reach items this one never ranks.
    fn with_catalogue(mut self, items: &[DocId]) -> Dataset {
        let all: BTreeSet<DocId> = self.items.iter().chain(items).cloned().collect();
        self.items = all.into_iter().collect();
        for (pool, idx) in self.pools.iter().zip(&mut self.pool_items) {
            for (d, i) in pool.iter().zip(idx.iter_mut()) {
                *i = self.items.binary_search(&d.id).expect("item indexed");
            }
        }
        self
    }
}

/// Documents of a query's pool, optionally minus those with relevance > 0.
pub fn candidate_pool<'a>(
    dataset: &'a Dataset,
    query: &QueryId,
    exclude_positives: bool,
) -> Result<Vec<&'a Document>, DatasetError> {
    let qi = dataset
        .query_index(query.as_str())
        .ok_or_else(|| DatasetError::UnknownQuery(query.to_string()))?;
    Ok(dataset
        .candidates(qi, exclude_positives)
        .into_iter()
        .map(|i| &dataset.pool(qi)[i])
        .collect())
}

/// Mean over queries of the share of pool documents with relevance > 0.
pub fn relevant_fraction(dataset: &Dataset) -> f64 {
    let n = dataset.num_queries();
    let total: f64 = (0..n)
        .map(|qi| {
            let rel = dataset.relevance(qi);
            rel.iter().filter(|&&r| r > 0).count() as f64 / rel.len() as f64
        })
        .sum();
    total / n as f64
}
