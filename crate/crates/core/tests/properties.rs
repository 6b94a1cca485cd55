// Licensed to the Apache Software Foundation (ASF) under one
// or more contributor license agreements.  See the NOTICE file
// distributed with this work for additional information
// regarding copyright ownership.  The ASF licenses this file
// to you under the Apache License, Version 2.0 (the
// "License"); you may not use this file except in compliance
// with the License.  You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing,
// software distributed under the License is distributed on an
// "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, either express or implied.  See the License for the
// specific language governing permissions and limitations
// under the License.

use proptest::prelude::*;

use bfr::annotation::AfkAnnotation;
use bfr::catalog::{reclaim_storage, Catalog, ReclaimPolicy, View};
use bfr::context::RewriteContext;
use bfr::cost::Stats;
use bfr::enumerator::enumerate_rewrites;
use bfr::optcost::{opt_cost, CandidateView};
use bfr::oracle::{oracle_scripted, OracleLimits};
use bfr::plan::{build_plan, NodeSpec};
use bfr::predicate::{CmpOp, FilterPredicate, Filters};
use bfr::semantics::{equivalent, guess_complete};
use bfr::workflow::{scripted_rewrite, Algo, ScriptedCandidate};

fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop_oneof![
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge),
        Just(CmpOp::Eq),
        Just(CmpOp::Ne),
    ]
}

fn pred() -> impl Strategy<Value = FilterPredicate> {
    (prop::sample::select(vec!["x", "y"]), cmp_op(), 0..6i32)
        .prop_map(|(a, op, c)| FilterPredicate::new(a, op, c as f64))
}

fn filters() -> impl Strategy<Value = Filters> {
    prop::collection::vec(pred(), 0..4).prop_map(Filters::from_preds)
}

fn holds(f: &Filters, x: f64, y: f64) -> bool {
    f.ranges().iter().all(|(a, r)| r.contains(if a == "x" { x } else { y }))
}

/// A random single-sink DAG with pinned node costs: every node but the
/// last feeds some later node.
fn dag() -> impl Strategy<Value = (Vec<f64>, Vec<(i64, i64)>)> {
    (2usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(1u32..20, n),
            prop::collection::vec((0usize..100, 0usize..100), n - 1),
            prop::collection::vec((0usize..100, 0usize..100), 0..3),
        )
            .prop_map(move |(costs, forward, extra)| {
                let mut edges = Vec::new();
                for (i, (pick, _)) in forward.into_iter().enumerate() {
                    let to = i + 1 + pick % (n - i - 1);
                    edges.push((i as i64 + 1, to as i64 + 1));
                }
                for (a, b) in extra {
                    let (a, b) = (a % n, b % n);
                    if a < b {
                        edges.push((a as i64 + 1, b as i64 + 1));
                    }
                }
                (costs.into_iter().map(f64::from).collect(), edges)
            })
    })
}

fn scripted(n: usize) -> impl Strategy<Value = Vec<ScriptedCandidate>> {
    prop::collection::vec((0..n, 0u32..30, prop::option::of(0u32..30)), 0..10).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(k, (t, bound, extra))| ScriptedCandidate {
                target: t as i64 + 1,
                view: format!("v{k}"),
                opt_cost: f64::from(bound),
                // Bounds are admissible: the rewrite never costs less.
                result: extra.map(|e| f64::from(bound + e)),
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn implication_matches_pointwise_truth(a in filters(), b in filters()) {
        if a.implies(&b) {
            for x in -1..8 {
                for y in -1..8 {
                    let (x, y) = (x as f64 + 0.5 * (x % 2) as f64, y as f64);
                    prop_assert!(!holds(&a, x, y) || holds(&b, x, y));
                }
            }
        }
        prop_assert!(a.union(&b).implies(&a));
        prop_assert!(a.implies(&a));
    }

    #[test]
    fn best_first_matches_exhaustive_and_oracle(
        (costs, edges, cands) in dag().prop_flat_map(|(c, e)| {
            let n = c.len();
            (Just(c), Just(e), scripted(n))
        }),
    ) {
        let nodes = costs.iter().enumerate().map(|(i, &c)| NodeSpec::with_cost(i as i64 + 1, c)).collect();
        let plan = build_plan(nodes, &edges).unwrap();
        let bfr = scripted_rewrite(&plan, &cands, Algo::Bfr).unwrap();
        let dp = scripted_rewrite(&plan, &cands, Algo::Dp).unwrap();
        let exact = oracle_scripted(&plan, &cands, OracleLimits::default()).unwrap();
        prop_assert_eq!(bfr.best.cost, dp.best.cost);
        prop_assert_eq!(bfr.best.cost, exact);
        prop_assert_eq!(bfr.metrics.violations, 0);
        prop_assert!(bfr.metrics.refine_attempts <= dp.metrics.refine_attempts);
        prop_assert!(bfr.best.cost <= bfr.metrics.original_cost);
    }

    #[test]
    fn bound_never_exceeds_rewrite(
        qf in filters(),
        vf in filters(),
        group in any::<bool>(),
        rows in 1.0f64..1e6,
    ) {
        let ctx = RewriteContext::default();
        let mut q = AfkAnnotation::base("t", ["x", "y"]);
        for p in qf.iter() {
            q = q.with_filter(p.clone());
        }
        if group {
            q = q.with_keys(["x"]);
        }
        let mut v = AfkAnnotation::base("t", ["x", "y"]);
        for p in vf.iter() {
            v = v.with_filter(p.clone());
        }
        let cv = CandidateView::materialized("v", v.clone(), Stats::new(rows, 16.0), &ctx);
        let bound = opt_cost(&q, &cv, &ctx);
        match enumerate_rewrites(&q, &cv, 0, &ctx).ok().and_then(|e| e.rewrite()) {
            Some(r) => {
                prop_assert!(guess_complete(&q, &v));
                prop_assert!(bound <= r.cost, "{} > {}", bound, r.cost);
            }
            None => prop_assert!(!equivalent(&q, &v)),
        }
    }

    #[test]
    fn random_reclaim_frees_enough_and_at_most_one_view_more(
        sizes in prop::collection::vec(1u32..1000, 0..12),
        fraction in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let views = sizes.iter().enumerate().map(|(i, &s)| {
            View::new(format!("v{i}"), AfkAnnotation::base("t", [format!("a{i}")]), Stats::new(f64::from(s), 1.0))
        });
        let cat = Catalog::from_views(views).unwrap();
        let left = reclaim_storage(&cat, &ReclaimPolicy::Random { fraction, seed }).unwrap();
        let total = cat.total_storage();
        let freed = total - left.total_storage();
        prop_assert!(left.total_storage() >= 0.0);
        prop_assert!(freed >= fraction * total - 1e-9);
        let largest = sizes.iter().copied().max().map_or(0.0, f64::from);
        if fraction < 1.0 {
            prop_assert!(freed <= fraction * total + largest);
        }
    }
}
