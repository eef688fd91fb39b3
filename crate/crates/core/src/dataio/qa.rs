use std::path::Path;

use serde::Deserialize;

use super::{parse_err, read_file, DataError};
use crate::dataset::{build_dataset, Dataset, DatasetKind, Document, Judgment, Query, Records};

/// Token ids `0..size` are known; anything else maps to `unknown_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vocab {
    pub size: u32,
    pub unknown_id: u32,
}

impl Vocab {
    /// Vocabulary of `size` tokens with the unknown id reserved right after them.
    pub fn new(size: u32) -> Self {
        Self {
            size,
            unknown_id: size,
        }
    }

    fn map(&self, t: u32, unknown: &mut usize) -> u32 {
        if t < self.size {
            t
        } else {
            *unknown += 1;
            self.unknown_id
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaParse {
    pub dataset: Dataset,
    /// Tokens replaced by the unknown id.
    pub unknown_tokens: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QaLine {
    id: Option<String>,
    question: Vec<u32>,
    candidates: Vec<Vec<u32>>,
    correct: Vec<usize>,
    candidate_ids: Option<Vec<String>>,
}

/// Parse JSON lines `{"question": [ids], "candidates": [[ids], ...],
/// "correct": [indices]}` with optional `id` and `candidate_ids`.
pub fn parse_qa_pairs(path: impl AsRef<Path>, vocab: Vocab) -> Result<QaParse, DataError> {
    parse_qa_str(&read_file(path.as_ref())?, vocab)
}

pub fn parse_qa_str(text: &str, vocab: Vocab) -> Result<QaParse, DataError> {
    let mut unknown = 0;
    let mut queries = Vec::new();
    let mut pools = Vec::new();
    let mut judgments = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let n = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: QaLine = serde_json::from_str(raw).map_err(|e| parse_err(n, e.to_string()))?;
        let qid = rec.id.unwrap_or_else(|| format!("q{n:07}"));
        let ids: Vec<String> = match rec.candidate_ids {
            Some(ids) if ids.len() == rec.candidates.len() => ids,
            Some(_) => return Err(parse_err(n, "`candidate_ids` and `candidates` differ in length")),
            None => (0..rec.candidates.len()).map(|i| format!("{qid}_a{i:04}")).collect(),
        };
        for &c in &rec.correct {
            if c >= rec.candidates.len() {
                return Err(parse_err(n, format!("correct index {c} out of range")));
            }
            judgments.push(Judgment::new(qid.as_str(), ids[c].as_str(), 1));
        }
        let question = rec.question.iter().map(|&t| vocab.map(t, &mut unknown)).collect();
        queries.push(Query::with_tokens(qid.as_str(), question));
        pools.push(
            rec.candidates
                .iter()
                .zip(&ids)
                .map(|(toks, id)| {
                    let toks = toks.iter().map(|&t| vocab.map(t, &mut unknown)).collect();
                    Document::with_tokens(id.as_str(), toks)
                })
                .collect(),
        );
    }
    if unknown > 0 {
        log::warn!("{unknown} tokens outside the vocabulary mapped to id {}", vocab.unknown_id);
    }
    let dataset = build_dataset(Records {
        kind: DatasetKind::Qa,
        queries,
        pools,
        judgments,
    })?;
    Ok(QaParse {
        dataset,
        unknown_tokens: unknown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_question() {
        let p = parse_qa_str(
            r#"{"question": [1, 2], "candidates": [[3], [4, 5]], "correct": [1]}"#,
            Vocab::new(10),
        )
        .unwrap();
        assert_eq!(p.dataset.pool(0).len(), 2);
        assert_eq!(p.dataset.judgments().len(), 1);
        assert_eq!(p.dataset.relevance(0), &[0, 1]);
        assert_eq!(p.unknown_tokens, 0);
    }

    #[test]
    fn unknown_tokens_are_counted() {
        let p = parse_qa_str(
            r#"{"question": [100], "candidates": [[200, 300]], "correct": [0]}"#,
            Vocab::new(10),
        )
        .unwrap();
        assert_eq!(p.unknown_tokens, 3);
        assert_eq!(p.dataset.pool(0)[0].tokens.as_deref(), Some(&[10, 10][..]));
        assert_eq!(p.dataset.query(0).tokens.as_deref(), Some(&[10][..]));
    }

    #[test]
    fn bad_index() {
        let err = parse_qa_str(
            "\n{\"question\": [1], \"candidates\": [[1]], \"correct\": [3]}",
            Vocab::new(10),
        )
        .unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 2, .. }));
    }
}
