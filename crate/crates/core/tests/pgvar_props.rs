mod common;

use proptest::prelude::*;
use rand::Rng;
use rank_lab::pgvar::{
    b_sweep, bound_rhs, exact_gradient_mean, exact_variance, mc_variance, partition_actions,
    variance_decomposition, verify_bound_chain, BaselineSpec, MdpInstance, PolicyTable,
};

/// Variance computed from the definition `E||g − E g||²`, enumerating every
/// (state, action) pair with its own loops.
fn oracle_variance(inst: &MdpInstance, pol: &PolicyTable, b: &[f64]) -> f64 {
    let mut mean = vec![0.0; pol.dim()];
    let mut items = Vec::new();
    for (s, q) in inst.q_table.iter().enumerate() {
        for (a, &qa) in q.iter().enumerate() {
            let w = inst.visitation[s] * pol.probs(s)[a];
            let g: Vec<f64> = pol.score_function(s, a).iter().map(|v| v * (qa - b[s])).collect();
            for (m, v) in mean.iter_mut().zip(&g) {
                *m += w * v;
            }
            items.push((w, g));
        }
    }
    items
        .iter()
        .map(|(w, g)| w * g.iter().zip(&mean).map(|(x, m)| (x - m).powi(2)).sum::<f64>())
        .sum()
}

fn instance_from(q: Vec<Vec<f64>>, logits: Vec<Vec<f64>>, rho: Vec<f64>) -> (MdpInstance, PolicyTable) {
    let z: f64 = rho.iter().sum();
    let inst = MdpInstance::from_table(q, rho.iter().map(|r| r / z).collect()).unwrap();
    let pol = PolicyTable::tabular_softmax(&logits, 1.0).unwrap();
    (inst, pol)
}

prop_compose! {
    fn instances()(shape in prop::collection::vec(1usize..8, 1..5))
        (q in shape.iter().map(|&n| prop::collection::vec(0.0..1.0f64, n)).collect::<Vec<_>>(),
         logits in shape.iter().map(|&n| prop::collection::vec(-3.0..3.0f64, n)).collect::<Vec<_>>(),
         rho in prop::collection::vec(0.1..1.0f64, shape.len()))
        -> (MdpInstance, PolicyTable) {
        instance_from(q, logits, rho)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_variance_matches_definition((inst, pol) in instances(), b in -1.0..2.0f64) {
        let got = exact_variance(&inst, &pol, BaselineSpec::Constant(b)).unwrap();
        let want = oracle_variance(&inst, &pol, &vec![b; inst.num_states()]);
        prop_assert!((got - want).abs() <= 1e-10 * want.max(1.0));
    }

    #[test]
    fn value_baseline_matches_definition((inst, pol) in instances()) {
        let v: Vec<f64> = (0..inst.num_states())
            .map(|s| pol.probs(s).iter().zip(&inst.q_table[s]).map(|(p, q)| p * q).sum())
            .collect();
        let got = exact_variance(&inst, &pol, BaselineSpec::ValueFunction).unwrap();
        prop_assert!((got - oracle_variance(&inst, &pol, &v)).abs() < 1e-10);
    }

    #[test]
    fn constant_baseline_leaves_the_mean_unchanged((inst, pol) in instances(), b in -1.0..2.0f64) {
        let m0 = exact_gradient_mean(&inst, &pol, BaselineSpec::Constant(0.0)).unwrap();
        let mb = exact_gradient_mean(&inst, &pol, BaselineSpec::Constant(b)).unwrap();
        for (x, y) in m0.iter().zip(&mb) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_sums_to_variance((inst, pol) in instances(), b in 0.0..1.0f64) {
        let (a1, a2) = variance_decomposition(&inst, &pol, b).unwrap();
        let v = exact_variance(&inst, &pol, BaselineSpec::Constant(b)).unwrap();
        prop_assert!(a1 >= 0.0 && a2 >= 0.0);
        prop_assert!((a1 + a2 - v).abs() < 1e-10);
    }

    #[test]
    fn bound_forms_agree((inst, pol) in instances(), b in 0.0..1.0f64) {
        let part = partition_actions(&inst, b);
        if part.q_max.is_some() {
            let r = bound_rhs(&inst, &pol, b, &part).unwrap();
            prop_assert!((r.value - r.factored).abs() <= 1e-12 * r.value.max(1e-300) + 1e-15);
            prop_assert!((r.value - r.uncentered).abs() <= 1e-10 * r.value.max(1.0));
            let report = verify_bound_chain(&inst, &pol, b).unwrap();
            prop_assert!(report.pointwise_holds);
        }
    }

    #[test]
    fn sweep_increases_above_q_max((inst, pol) in instances(), b in 0.2..0.8f64) {
        let part = partition_actions(&inst, b);
        if let Some(q_max) = part.q_max {
            let bs: Vec<f64> = (1..=10).map(|i| q_max + i as f64 * 0.1).collect();
            let rows = b_sweep(&inst, &pol, &part, &bs).unwrap();
            let mass = rows[0].bound_rhs;
            for w in rows.windows(2) {
                if mass > 0.0 {
                    prop_assert!(w[1].bound_rhs > w[0].bound_rhs);
                }
            }
        }
    }
}

#[test]
fn mc_variance_agrees_with_enumeration() {
    let mut r = common::rng(11);
    for _ in 0..5 {
        let q: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| r.random::<f64>()).collect()).collect();
        let l: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let (inst, pol) = instance_from(q, l, vec![1.0, 2.0, 3.0]);
        let exact = exact_variance(&inst, &pol, BaselineSpec::Constant(0.5)).unwrap();
        let mc = mc_variance(&inst, &pol, BaselineSpec::Constant(0.5), 200_000, &mut r).unwrap();
        assert!(
            (mc.estimate - exact).abs() < 5.0 * mc.standard_error + 1e-3 * exact,
            "mc {} ± {} vs {exact}",
            mc.estimate,
            mc.standard_error
        );
    }
}

#[test]
fn two_action_instance_by_hand() {
    // ∇log π = ±0.5 with π = (0.5, 0.5) and Q̂ − b = 1 for both actions
    let inst = MdpInstance::from_table(vec![vec![1.5, 1.5]], vec![1.0]).unwrap();
    let pol = PolicyTable::explicit(vec![vec![0.5, 0.5]], vec![vec![vec![0.5], vec![-0.5]]]).unwrap();
    let exact = exact_variance(&inst, &pol, BaselineSpec::Constant(0.5)).unwrap();
    assert!((exact - 0.25).abs() < 1e-12);
    let mc = mc_variance(&inst, &pol, BaselineSpec::Constant(0.5), 100_000, &mut common::rng(1)).unwrap();
    assert!((mc.estimate - exact).abs() < 3.0 * mc.standard_error.max(1e-12) + 1e-9);
}
