use std::collections::BTreeSet;

use dcmg_core::reconfig::{build_new_vset, components, ConnectivityMatrix, MatrixSource, MetricMatrix, ReconfigError};
use dcmg_core::DerId;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Instance {
    n: usize,
    edges: Vec<(usize, usize)>,
    jammed: Vec<bool>,
    vset: BTreeSet<DerId>,
    metric: Vec<Vec<f64>>,
}

/// Random spanning tree plus extra edges, a random jammed subset and VSC set.
fn instance() -> impl Strategy<Value = Instance> {
    (3usize..=8).prop_flat_map(|n| {
        (
            prop::collection::vec(any::<prop::sample::Index>(), n - 1),
            prop::collection::vec((0..n, 0..n), 0..n * 2),
            prop::collection::vec(prop::bool::weighted(0.25), n),
            prop::sample::subsequence((0..n).collect::<Vec<_>>(), 1..n),
            prop::collection::vec(0.0..500.0f64, n * n),
        )
            .prop_map(move |(parents, extra, jammed, vset, w)| {
                let mut edges: Vec<(usize, usize)> =
                    parents.iter().enumerate().map(|(i, p)| (i + 1, p.index(i + 1))).collect();
                edges.extend(extra.into_iter().filter(|(a, b)| a != b));
                let mut metric = vec![vec![0.0; n]; n];
                for a in 0..n {
                    for b in 0..a {
                        metric[a][b] = w[a * n + b];
                        metric[b][a] = w[a * n + b];
                    }
                }
                Instance { n, edges, jammed, vset: vset.into_iter().map(DerId::from_index).collect(), metric }
            })
    })
}

fn matrix(inst: &Instance) -> ConnectivityMatrix {
    let mut rows = vec![vec![false; inst.n]; inst.n];
    for &(a, b) in &inst.edges {
        if !inst.jammed[a] && !inst.jammed[b] {
            rows[a][b] = true;
            rows[b][a] = true;
        }
    }
    ConnectivityMatrix::from_rows(rows, MatrixSource::DecodedPtch)
}

fn connected(q: &ConnectivityMatrix, set: &BTreeSet<DerId>) -> bool {
    let Some(&start) = set.first() else { return true };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &j in set {
            if q.linked(u, j) && seen.insert(j) {
                stack.push(j);
            }
        }
    }
    seen.len() == set.len()
}

/// Every feasible replacement set, by exhaustive enumeration.
fn feasible_sets(q: &ConnectivityMatrix, must: &BTreeSet<DerId>, size: usize) -> Vec<BTreeSet<DerId>> {
    let n = q.len();
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (0..n).filter(|b| m >> b & 1 == 1).map(DerId::from_index).collect::<BTreeSet<_>>())
        .filter(|s| must.is_subset(s) && s.iter().all(|&u| !q.is_silent(u)) && connected(q, s))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn greedy_matches_brute_force(inst in instance()) {
        let q = matrix(&inst);
        let target = inst.vset.len();
        let comps = components(&q, &inst.vset);
        let result = build_new_vset(&q, &MetricMatrix::new(inst.metric.clone()), &inst.vset, target);

        if comps.len() <= 1 {
            let plan = result.unwrap();
            prop_assert_eq!(&plan.new_vset, &inst.vset);
            prop_assert!(plan.switches.is_empty());
            return Ok(());
        }
        let seed: BTreeSet<DerId> =
            comps.iter().find(|c| c.iter().all(|&u| !q.is_silent(u))).cloned().unwrap_or_default();
        let feasible = feasible_sets(&q, &seed, target);
        match result {
            Ok(plan) => {
                prop_assert!(plan.feasible);
                prop_assert!(feasible.contains(&plan.new_vset), "{:?} not in oracle set", plan.new_vset);
                let flips = plan.old_vset.symmetric_difference(&plan.new_vset).count();
                prop_assert_eq!(plan.switches.len(), flips);
            }
            Err(ReconfigError::Infeasible(p)) => {
                prop_assert!(feasible.is_empty(), "declared infeasible but {:?} works", feasible[0]);
                prop_assert!(!p.feasible && p.new_vset.len() < target);
            }
        }
    }

    /// Every unit running the planner on the same matrix gets the same plan.
    #[test]
    fn plan_is_deterministic(inst in instance()) {
        let q = matrix(&inst);
        let m = MetricMatrix::new(inst.metric.clone());
        let a = build_new_vset(&q, &m, &inst.vset, inst.vset.len());
        let b = build_new_vset(&q.clone(), &m, &inst.vset.clone(), inst.vset.len());
        prop_assert_eq!(a, b);
    }
}
