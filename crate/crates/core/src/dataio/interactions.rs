use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{parse_err, read_file, DataError};
use crate::dataset::{build_dataset, Dataset, DatasetKind, Document, Judgment, Query, Records};

/// Ratings at or above this value count as relevant.
pub const DEFAULT_RATING_THRESHOLD: f64 = 4.0;

/// Parse `user item rating` lines (tab or space separated; extra columns such
/// as timestamps are ignored). Users become queries and every user's pool is
/// the full item set. Ratings `>= threshold` are judged relevant, lower ones
/// are judged 0.
pub fn parse_interactions(path: impl AsRef<Path>, threshold: f64) -> Result<Dataset, DataError> {
    parse_interactions_str(&read_file(path.as_ref())?, threshold)
}

pub fn parse_interactions_str(text: &str, threshold: f64) -> Result<Dataset, DataError> {
    let mut users: BTreeSet<String> = BTreeSet::new();
    let mut items: BTreeSet<String> = BTreeSet::new();
    let mut ratings: BTreeMap<(String, String), (usize, u32)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let n = idx + 1;
        let mut fields = raw.split_whitespace();
        let Some(user) = fields.next() else { continue };
        let (Some(item), Some(rating)) = (fields.next(), fields.next()) else {
            return Err(parse_err(n, "expected `user item rating`"));
        };
        for (what, v) in [("user", user), ("item", item)] {
            if v.parse::<u64>().is_err() {
                return Err(parse_err(n, format!("non-numeric {what} `{v}`")));
            }
        }
        let rating: f64 = rating
            .parse()
            .ok()
            .filter(|r: &f64| r.is_finite())
            .ok_or_else(|| parse_err(n, format!("non-numeric rating `{rating}`")))?;
        let rel = u32::from(rating >= threshold);
        if ratings
            .insert((user.to_string(), item.to_string()), (n, rel))
            .is_some()
        {
            return Err(parse_err(n, format!("user {user} rated item {item} twice")));
        }
        users.insert(user.to_string());
        items.insert(item.to_string());
    }
    let pool: Vec<Document> = items.iter().map(|i| Document::item(i.as_str())).collect();
    let queries: Vec<Query> = users.iter().map(|u| Query::new(u.as_str())).collect();
    let pools = vec![pool; queries.len()];
    let judgments = ratings
        .into_iter()
        .map(|((u, i), (_, rel))| Judgment::new(u.as_str(), i.as_str(), rel))
        .collect();
    Ok(build_dataset(Records {
        kind: DatasetKind::Recommendation,
        queries,
        pools,
        judgments,
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold() {
        let ds = parse_interactions_str("1\t50\t5\n1\t60\t3\n2\t50\t4\t881250949\n", 4.0).unwrap();
        assert_eq!(ds.num_queries(), 2);
        assert_eq!(ds.num_items(), 2);
        assert_eq!(ds.pool(0).len(), 2);
        assert_eq!(ds.relevance(0), &[1, 0]);
        assert_eq!(ds.relevance(1), &[1, 0]);
    }

    #[test]
    fn bad_lines() {
        let err = parse_interactions_str("1\t50\t5\n1\tx\t3\n", 4.0).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 2, .. }));
        let err = parse_interactions_str("1\t50\tfive\n", 4.0).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 1, .. }));
        let err = parse_interactions_str("1\t50\n", 4.0).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 1, .. }));
    }
}
