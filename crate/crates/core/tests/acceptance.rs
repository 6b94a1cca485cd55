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

//! Acceptance run. Prints one PASS/FAIL line per criterion and exits with a
//! failure status if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bfr::annotation::{AfkAnnotation, AfkOp};
use bfr::bench::{median, workload_context, workload_instances, Instance};
use bfr::catalog::{reclaim_storage, ReclaimPolicy};
use bfr::context::RewriteContext;
use bfr::cost::{op_cost, sequence_cost, CostConstants, OpKind, Stats};
use bfr::enumerator::enumerate_rewrites;
use bfr::optcost::{opt_cost, CandidateView};
use bfr::oracle::{merge_closure, oracle_optimal, OracleLimits};
use bfr::predicate::{CmpOp, FilterPredicate};
use bfr::workflow::{dp_rewrite, syntactic_rewrite, workflow_rewrite, Outcome};
use bfr::workload::{gen_workload, RevisionMix, WorkloadSpec};

const MIN_SUITE: usize = 200;
const SUITE_BUDGET: Duration = Duration::from_secs(60);
const FIXTURE_BUDGET: Duration = Duration::from_secs(1);
const RANDOM_COST_DRAWS: usize = 1000;
const SMALL_VIEWS: usize = 8;
const SMALL_ATTRS: usize = 5;
const LARGE_CATALOG: usize = 20;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/fork")
}

fn run_cli(args: &[&str]) -> (bool, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bfr"))
        .args(args)
        .output()
        .expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.success(), text)
}

fn golden_trace() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let plan = fixtures().join("plan.json");
    let cands = fixtures().join("search_order.jsonl");
    let t = Instant::now();
    let (ok, out) = run_cli(&[
        "rewrite",
        "--algo",
        "bfr",
        "--plan",
        plan.to_str().unwrap(),
        "--candidates",
        cands.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    let took = t.elapsed();
    let lines = std::fs::read_to_string(&trace).unwrap_or_default();
    let views: Vec<&str> = lines
        .lines()
        .filter_map(|l| l.split_whitespace().find_map(|w| w.strip_prefix("view=")))
        .collect();
    let pass = ok
        && out.starts_with("cost 10\n")
        && out.contains("original 13 rewritten 10")
        && views == ["a", "b", "c", "d"]
        && took < FIXTURE_BUDGET;
    verdict(pass, format!("refined {views:?}, {:?}", took))
}

fn composition() -> Verdict {
    let plan = fixtures().join("plan.json");
    let cands = fixtures().join("composition.jsonl");
    let (ok, out) = run_cli(&[
        "rewrite",
        "--plan",
        plan.to_str().unwrap(),
        "--candidates",
        cands.to_str().unwrap(),
    ]);
    let first = out.lines().next().unwrap_or("").to_string();
    verdict(ok && first == "cost 5", first)
}

struct Case {
    inst: Instance,
    ctx: RewriteContext,
    bfr: Outcome,
    dp: Outcome,
}

struct Suite {
    cases: Vec<Case>,
    oracle_mismatches: Vec<String>,
    skipped: usize,
    took: Duration,
}

fn suite() -> Suite {
    let t = Instant::now();
    let mut suite = Suite {
        cases: Vec::new(),
        oracle_mismatches: Vec::new(),
        skipped: 0,
        took: Duration::ZERO,
    };
    let mut seed = 0;
    while suite.cases.len() < MIN_SUITE {
        let spec = WorkloadSpec {
            seed,
            n_analysts: 4,
            versions_per_analyst: 4,
            targets_per_plan: 6,
            catalog_size: 30,
            ..WorkloadSpec::default()
        };
        seed += 1;
        let w = gen_workload(&spec, &CostConstants::default()).unwrap();
        let ctx = workload_context(&w, &RewriteContext::default());
        for inst in workload_instances(&w, &ctx).unwrap() {
            let Ok(oracle) = oracle_optimal(&inst.plan, &inst.views, &ctx, OracleLimits::default()) else {
                suite.skipped += 1;
                continue;
            };
            let bfr = workflow_rewrite(&inst.plan, &inst.views, &ctx);
            let dp = dp_rewrite(&inst.plan, &inst.views, &ctx);
            if !(bfr.best.cost == dp.best.cost && dp.best.cost == oracle.cost) {
                suite.oracle_mismatches.push(format!(
                    "{}: bfr {} dp {} oracle {}",
                    inst.id, bfr.best.cost, dp.best.cost, oracle.cost
                ));
            }
            suite.cases.push(Case {
                inst,
                ctx: ctx.clone(),
                bfr,
                dp,
            });
        }
    }
    suite.took = t.elapsed();
    suite
}

fn optimality(s: &Suite) -> Verdict {
    let pass = s.oracle_mismatches.is_empty() && s.took < SUITE_BUDGET;
    let mut detail = format!(
        "{} instances agree of {}, {} skipped as too large for the oracle, {:?}",
        s.cases.len() - s.oracle_mismatches.len(),
        s.cases.len(),
        s.skipped,
        s.took
    );
    for m in s.oracle_mismatches.iter().take(3) {
        detail.push_str(&format!("; {m}"));
    }
    verdict(pass, detail)
}

fn work_efficiency(s: &Suite) -> Verdict {
    let bad = s.cases.iter().filter(|c| c.bfr.metrics.violations > 0).count();
    verdict(bad == 0, format!("{bad} instances with violations"))
}

fn admissibility(s: &Suite) -> Verdict {
    let (mut pairs, mut bad) = (0, 0);
    for c in &s.cases {
        for q in &c.inst.plan.outputs {
            for v in merge_closure(q, &c.inst.views, c.ctx.max_join_arity) {
                if let Some(r) = enumerate_rewrites(q, &v, 0, &c.ctx).ok().and_then(|e| e.rewrite()) {
                    pairs += 1;
                    if opt_cost(q, &v, &c.ctx) > r.cost {
                        bad += 1;
                    }
                }
            }
        }
        bad += c.bfr.metrics.counters.admissibility_violations + c.dp.metrics.counters.admissibility_violations;
    }
    verdict(bad == 0, format!("{pairs} rewritable pairs, {bad} counterexamples"))
}

fn merge_monotonicity(s: &Suite) -> Verdict {
    let (mut merges, mut bad) = (0, 0);
    for c in &s.cases {
        for o in [&c.bfr, &c.dp] {
            merges += o.metrics.counters.candidates_considered;
            bad += o.metrics.counters.merge_violations;
        }
    }
    verdict(bad == 0, format!("{bad} counterexamples over {merges} candidates"))
}

fn attr_count(a: &AfkAnnotation) -> usize {
    a.attrs.len()
}

fn gc_negatives() -> Verdict {
    let mix = RevisionMix {
        parameter_change: 0.4,
        add_source: 0.0,
        add_udf: 0.3,
        add_subgoal: 0.3,
    };
    let (mut instances, mut checked, mut bad) = (0, 0, 0);
    for seed in 0..40 {
        let spec = WorkloadSpec {
            seed,
            n_analysts: 3,
            versions_per_analyst: 4,
            targets_per_plan: 4,
            catalog_size: SMALL_VIEWS,
            mix,
        };
        let w = gen_workload(&spec, &CostConstants::default()).unwrap();
        let ctx = workload_context(&w, &RewriteContext::default());
        for inst in workload_instances(&w, &ctx).unwrap() {
            let small = inst.views.len() <= SMALL_VIEWS
                && inst.views.iter().all(|v| attr_count(&v.annotation) <= SMALL_ATTRS)
                && inst.plan.outputs.iter().all(|q| attr_count(q) <= SMALL_ATTRS);
            if !small {
                continue;
            }
            let Ok(r) = oracle_optimal(&inst.plan, &inst.views, &ctx, OracleLimits::default()) else {
                continue;
            };
            instances += 1;
            checked += r.candidates;
            bad += r.gc_negatives.len();
        }
    }
    verdict(
        bad == 0 && instances > 0,
        format!("{instances} instances, {checked} candidates, {bad} counterexamples"),
    )
}

fn random_ops(rng: &mut ChaCha8Rng, attrs: &[&str]) -> Vec<AfkOp> {
    let n = rng.gen_range(1..=4);
    (0..n)
        .map(|_| {
            let a = attrs[rng.gen_range(0..attrs.len())].to_string();
            match rng.gen_range(0..3) {
                0 => AfkOp::Filter(vec![FilterPredicate::new(a, CmpOp::Lt, rng.gen_range(0.0..100.0))]),
                1 => AfkOp::Group([a].into()),
                _ => AfkOp::Drop([a].into()),
            }
        })
        .collect()
}

fn non_subsumable() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let names = ["a", "b", "c", "d"];
    let (mut draws, mut bad) = (0, 0);
    while draws < RANDOM_COST_DRAWS {
        let mut c = CostConstants::default();
        for w in c.op_base_cost.values_mut() {
            *w = rng.gen_range(0.01..2.0);
        }
        let mut st = Stats::new(rng.gen_range(1.0..1e7), rng.gen_range(8.0..256.0));
        for n in names {
            st.selectivity.insert(n.into(), rng.gen_range(0.001..1.0));
            st.distinct_ratio.insert(n.into(), rng.gen_range(0.001..1.0));
        }
        let input = AfkAnnotation::base("t", names);
        let ops = random_ops(&mut rng, &names);
        // Draws whose ops do not apply in sequence are redrawn.
        let Ok(total) = sequence_cost(&ops, &input, &st, &c) else {
            continue;
        };
        draws += 1;
        let cheapest = ops
            .iter()
            .map(|o| op_cost(o.kind(), &st, 1.0, &c))
            .fold(f64::INFINITY, f64::min);
        if total < cheapest {
            bad += 1;
        }
    }
    // The filter-before-group case, where a larger set costs less.
    let c = CostConstants::default();
    let st = Stats::new(1e6, 16.0);
    let a = AfkAnnotation::base("t", ["x", "y"]);
    let filter = AfkOp::Filter(vec![FilterPredicate::new("y", CmpOp::Lt, 5.0)]);
    let group = AfkOp::Group(["x".to_string()].into());
    let both = sequence_cost(&[filter, group.clone()], &a, &st, &c).unwrap();
    let alone = sequence_cost(&[group], &a, &st, &c).unwrap();
    let shown = both < alone && both >= op_cost(OpKind::Filter, &st, 1.0, &c);
    verdict(
        bad == 0 && shown,
        format!("{draws} draws, {bad} counterexamples; filter+group {both} < group {alone}"),
    )
}

fn baseline_dominance(s: &Suite) -> Verdict {
    let mut bad = 0;
    let mut ratios = Vec::new();
    for c in &s.cases {
        let (b, d) = (&c.bfr.metrics, &c.dp.metrics);
        if b.candidates_considered > d.candidates_considered || b.refine_attempts > d.refine_attempts {
            bad += 1;
        }
        if c.inst.views.len() >= LARGE_CATALOG {
            ratios.push(d.refine_attempts as f64 / b.refine_attempts.max(1) as f64);
        }
    }
    let n = ratios.len();
    let m = median(&mut ratios);
    verdict(
        bad == 0 && n > 0 && m > 1.0,
        format!("{bad} instances where bfr does more work; median dp/bfr refines {m:.2} over {n} large catalogs"),
    )
}

/// Whether some view matches a target in everything but its filters, and
/// those filters are strictly weaker.
fn has_weaker_filter_view(targets: &[AfkAnnotation], views: &[CandidateView]) -> bool {
    targets.iter().any(|q| {
        views.iter().any(|v| {
            let a = &v.annotation;
            a.attrs == q.attrs
                && a.keys == q.keys
                && a.sources == q.sources
                && a.filters != q.filters
                && q.filters.implies(&a.filters)
        })
    })
}

fn syntactic_gap() -> Verdict {
    let (mut n, mut syntactic_gain, mut bfr_negative) = (0, 0, 0);
    let (mut weaker, mut bfr_gain) = (0, 0);
    for seed in 0..10 {
        let spec = WorkloadSpec {
            seed,
            mix: RevisionMix::only_parameter_changes(),
            ..WorkloadSpec::default()
        };
        let w = gen_workload(&spec, &CostConstants::default()).unwrap();
        let ctx = workload_context(&w, &RewriteContext::default());
        for inst in workload_instances(&w, &ctx).unwrap() {
            let catalog =
                reclaim_storage(&w.catalog, &ReclaimPolicy::DropIdentical(inst.plan.outputs.clone())).unwrap();
            let views = catalog.candidates(&ctx);
            let s = syntactic_rewrite(&inst.plan, &views, &ctx).metrics.improvement_pct();
            let b = workflow_rewrite(&inst.plan, &views, &ctx).metrics.improvement_pct();
            n += 1;
            syntactic_gain += usize::from(s != 0.0);
            bfr_negative += usize::from(b < 0.0);
            if has_weaker_filter_view(&inst.plan.outputs, &views) {
                weaker += 1;
                bfr_gain += usize::from(b > 0.0);
            }
        }
    }
    verdict(
        syntactic_gain == 0 && bfr_negative == 0 && weaker > 0 && 2 * bfr_gain >= weaker,
        format!(
            "{n} instances: syntactic improved {syntactic_gain}; {weaker} hold a weaker-filter view, bfr improved {bfr_gain} of them"
        ),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let m = dir.path().join(format!("metrics-{tag}.csv"));
        let t = dir.path().join(format!("trace-{tag}.txt"));
        let (ok, _) = run_cli(&[
            "bench",
            "--seed",
            "11",
            "--seeds",
            "3",
            "--all-algos",
            "--no-timing",
            "--metrics-out",
            m.to_str().unwrap(),
            "--trace",
            t.to_str().unwrap(),
        ]);
        (
            ok,
            std::fs::read(m).unwrap_or_default(),
            std::fs::read(t).unwrap_or_default(),
        )
    };
    let (a_ok, a_m, a_t) = run("a");
    let (b_ok, b_m, b_t) = run("b");
    let pass = a_ok && b_ok && !a_m.is_empty() && !a_t.is_empty() && a_m == b_m && a_t == b_t;
    verdict(pass, format!("{} metric bytes, {} trace bytes", a_m.len(), a_t.len()))
}

fn main() {
    let s = suite();
    let results = [
        ("1 fork golden trace", golden_trace()),
        ("2 composition", composition()),
        ("3 optimality", optimality(&s)),
        ("4 work efficiency", work_efficiency(&s)),
        ("5 lower bound admissibility", admissibility(&s)),
        ("6 merge monotonicity", merge_monotonicity(&s)),
        ("7 guess-complete negatives", gc_negatives()),
        ("8 non-subsumable cost", non_subsumable()),
        ("9 baseline dominance", baseline_dominance(&s)),
        ("10 syntactic gap", syntactic_gap()),
        ("11 determinism", determinism()),
    ];
    let mut failed = 0;
    for (name, v) in &results {
        println!(
            "criterion {name}: {} ({})",
            if v.ok { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.ok);
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
