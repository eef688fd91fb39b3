use std::collections::BTreeMap;

use rank_lab::dataset::{DocId, QueryId};
use rank_lab::metrics::{ndcg_at_k, p_at_1, precision_at_k, RankedList};

fn ranked(docs: &[usize]) -> RankedList {
    RankedList {
        query: QueryId::new("q"),
        docs: docs.iter().map(|d| DocId::new(format!("d{d}"))).collect(),
        scores: (0..docs.len()).rev().map(|s| s as f64).collect(),
    }
}

fn qrels(grades: &[u32]) -> BTreeMap<DocId, u32> {
    grades
        .iter()
        .enumerate()
        .map(|(d, &g)| (DocId::new(format!("d{d}")), g))
        .collect()
}

/// Textbook DCG with exponential gain, written independently of the library.
fn brute_ndcg(order: &[usize], grades: &[u32], k: usize) -> Option<f64> {
    let dcg = |list: &[u32]| -> f64 {
        list.iter()
            .take(k)
            .enumerate()
            .map(|(i, &g)| (2f64.powi(g as i32) - 1.0) / ((i + 2) as f64).log2())
            .sum()
    };
    let gains: Vec<u32> = order.iter().map(|&d| grades[d]).collect();
    let mut ideal = grades.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal);
    (idcg > 0.0).then(|| dcg(&gains) / idcg)
}

fn brute_precision(order: &[usize], grades: &[u32], k: usize) -> f64 {
    order.iter().take(k).filter(|&&d| grades[d] > 0).count() as f64 / k as f64
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn all_permutations_of_five_documents() {
    let perms = permutations(5);
    assert_eq!(perms.len(), 120);
    for grades in [[2, 1, 0, 0, 1], [0, 0, 0, 0, 1], [1, 1, 1, 1, 1], [3, 0, 2, 0, 0]] {
        let q = qrels(&grades);
        for order in &perms {
            let r = ranked(order);
            for k in [1, 3, 5] {
                let got = ndcg_at_k(&r, &q, k).unwrap();
                let want = brute_ndcg(order, &grades, k).unwrap();
                assert!((got - want).abs() < 1e-12, "{order:?} {grades:?} k={k}");
                let got = precision_at_k(&r, &q, k);
                assert!((got - brute_precision(order, &grades, k)).abs() < 1e-12);
            }
            assert_eq!(p_at_1(&r, &q), brute_precision(order, &grades, 1));
        }
    }
}

#[test]
fn hand_cases() {
    // single relevant document at rank 2 of 2
    let got = ndcg_at_k(&ranked(&[0, 1]), &qrels(&[0, 1]), 2).unwrap();
    assert!((got - 1.0 / 3f64.log2()).abs() < 1e-12);
    assert!((got - 0.63093).abs() < 1e-5);
    assert_eq!(ndcg_at_k(&ranked(&[0, 1]), &qrels(&[0, 0]), 2), None);
    // short list: precision divides by k, not list length
    assert_eq!(precision_at_k(&ranked(&[0, 1]), &qrels(&[1, 1]), 5), 0.4);
}
