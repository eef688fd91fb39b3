mod common;

use proptest::prelude::*;
use rank_lab::dataio::{
    normalize_min_max, parse_interactions_str, parse_letor_str, parse_qa_str, synth_retrieval, write_letor,
    DataError, SyntheticSpec, Vocab,
};
use rank_lab::dataset::{build_dataset, DatasetKind, Document, Judgment, Query, Records};
use rank_lab::scorers::{read_checkpoint, write_checkpoint, Scorer};
use rank_lab::trainers::RunRecord;

prop_compose! {
    /// Up to 4 queries, each a pool of up to 6 documents labelled -1 (unjudged), 0, 1 or 2.
    fn letor_records()(dim in 1usize..5, sizes in prop::collection::vec(1usize..6, 1..4))
        (docs in sizes.iter().map(|&n| prop::collection::vec(
            (-1i64..3, prop::collection::vec(-1e3..1e3f64, dim)), n)).collect::<Vec<_>>())
        -> Records {
        let mut queries = Vec::new();
        let mut pools = Vec::new();
        let mut judgments = Vec::new();
        for (q, pool) in docs.into_iter().enumerate() {
            let qid = format!("{}", 10 + q);
            let mut docs = Vec::new();
            for (d, (label, features)) in pool.into_iter().enumerate() {
                let id = format!("GX{q:02}-{d:02}");
                if label >= 0 {
                    judgments.push(Judgment::new(qid.as_str(), id.as_str(), label as u32));
                }
                docs.push(Document::with_features(id, features));
            }
            queries.push(Query::new(qid));
            pools.push(docs);
        }
        Records { kind: DatasetKind::WebSearch, queries, pools, judgments }
    }
}

proptest! {
    #[test]
    fn letor_roundtrip(records in letor_records()) {
        let ds = build_dataset(records).unwrap();
        let text = write_letor(&ds).unwrap();
        prop_assert_eq!(parse_letor_str(&text).unwrap(), ds);
    }

    #[test]
    fn min_max_normalization_is_bounded_and_idempotent(records in letor_records()) {
        let ds = normalize_min_max(&build_dataset(records).unwrap()).unwrap();
        for qi in 0..ds.num_queries() {
            for d in ds.pool(qi) {
                prop_assert!(d.features.as_ref().unwrap().iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
        let again = normalize_min_max(&ds).unwrap();
        for qi in 0..ds.num_queries() {
            for (a, b) in ds.pool(qi).iter().zip(again.pool(qi)) {
                for (x, y) in a.features.as_ref().unwrap().iter().zip(b.features.as_ref().unwrap()) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn run_record_roundtrip(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 1..30)) {
        let mut rec = RunRecord::new();
        for (e, v) in values.iter().enumerate() {
            rec.push(e, "single-d", "ndcg@5", *v).unwrap();
            rec.push(e, "dual-d-a", "p@5", -*v).unwrap();
        }
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        prop_assert_eq!(RunRecord::read_csv(&buf[..]).unwrap(), rec);
    }
}

#[test]
fn checkpoints_roundtrip_for_every_scorer() {
    for (scorer, _) in common::scorer_zoo(4) {
        let mut buf = Vec::new();
        write_checkpoint(&scorer.params, &mut buf).unwrap();
        let params = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(Scorer::from_params(scorer.kind(), params).unwrap(), scorer);

        let mut bad = buf.clone();
        bad[0] = 99;
        assert!(read_checkpoint(&bad[..]).is_err());
        assert!(read_checkpoint(&buf[..buf.len() - 3]).is_err());
    }
}

#[test]
fn interactions() {
    let text = "1 10 5 881250949\n1 20 3 881250950\n2 10 4 881250951\n3 30 1 881250952\n";
    let ds = parse_interactions_str(text, 4.0).unwrap();
    assert_eq!((ds.num_queries(), ds.num_items()), (3, 3));
    let u1 = ds.query_index("1").unwrap();
    assert_eq!(ds.pool(u1).len(), 3);
    assert_eq!(ds.positives(u1).len(), 1);
    assert!(!ds.has_positive(ds.query_index("3").unwrap()));
    assert!(matches!(
        parse_interactions_str("1 10 5\n1 10 4\n", 4.0),
        Err(DataError::Parse { line: 2, .. })
    ));
    assert!(matches!(parse_interactions_str("1 x 5\n", 4.0), Err(DataError::Parse { line: 1, .. })));
}

#[test]
fn qa_pairs() {
    let text = r#"{"question": [1, 2], "candidates": [[3], [4, 5], [6, 99]], "correct": [1]}
{"id": "q-b", "question": [7], "candidates": [[1], [2]], "correct": [0, 1]}
"#;
    let parsed = parse_qa_str(text, Vocab::new(50)).unwrap();
    let ds = &parsed.dataset;
    assert_eq!((ds.num_queries(), parsed.unknown_tokens), (2, 1));
    assert_eq!(ds.max_token(), Some(50));
    let qb = ds.query_index("q-b").unwrap();
    assert_eq!(ds.positives(qb).len(), 2);
    assert!(parse_qa_str(r#"{"question": [1], "candidates": [[2]], "correct": [1]}"#, Vocab::new(5)).is_err());
    assert!(parse_qa_str(r#"{"question": [1], "candidates": [[2]], "correct": [0], "extra": 1}"#, Vocab::new(5)).is_err());
}

#[test]
fn letor_parser_reports_bad_lines() {
    for (text, line) in [
        ("1 qid:1 1:0.5\nx qid:1 1:0.5\n", 2),
        ("1 qid:1 2:0.5\n", 1),
        ("1 1:0.5\n", 1),
        ("1 qid:1 1:nan\n", 1),
    ] {
        match parse_letor_str(text) {
            Err(DataError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn synthetic_task_has_the_requested_sparsity() {
    let spec = SyntheticSpec {
        num_queries: 50,
        pool_size: 200,
        relevant_fraction: 0.005,
        feature_dim: 46,
        noise_sigma: 0.5,
        seed: 1,
    };
    let (ds, _) = synth_retrieval(&spec).unwrap();
    assert_eq!(ds.num_queries(), 50);
    assert_eq!(ds.feature_dim(), Some(46));
    for qi in 0..50 {
        assert_eq!(ds.pool(qi).len(), 200);
        assert_eq!(ds.positives(qi).len(), 1);
    }
    assert_eq!(synth_retrieval(&spec).unwrap().0, ds);
}
