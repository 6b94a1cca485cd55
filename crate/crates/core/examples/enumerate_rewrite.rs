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

// Search the orderings of compensations that turn a view into a target.

use bfr::annotation::{AfkAnnotation, AfkOp, AggKind, AggOutput};
use bfr::context::{RewriteContext, RewriteLanguage};
use bfr::cost::Stats;
use bfr::enumerator::{enumerate_rewrites, Enumeration};
use bfr::optcost::CandidateView;
use bfr::predicate::{CmpOp, FilterPredicate};

fn main() {
    let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
    let base = AfkAnnotation::base("log", ["a", "b", "c"]);
    let q = base
        .apply(
            &AfkOp::Add {
                name: "d".into(),
                required: set(&["a", "b"]),
            },
            Some("U"),
        )
        .unwrap()
        .apply(&AfkOp::Filter(vec![FilterPredicate::new("d", CmpOp::Lt, 10.0)]), None)
        .unwrap()
        .apply(&AfkOp::Group(set(&["c"])), None)
        .unwrap();

    let stats = Stats::new(500.0, 24.0);
    let without_u = RewriteContext::default();
    let v = CandidateView::materialized("v", base.clone(), stats.clone(), &without_u);
    match enumerate_rewrites(&q, &v, 0, &without_u).unwrap() {
        Enumeration::LanguageExceeded(op) => println!("cannot rewrite without {op}"),
        other => panic!("unexpected {other:?}"),
    }

    let ctx = RewriteContext {
        lang: RewriteLanguage::default().with_udf("U"),
        ..RewriteContext::default()
    };
    let r = enumerate_rewrites(&q, &v, 0, &ctx).unwrap().rewrite().unwrap();
    println!("cost {:.1}", r.cost);
    for c in &r.compensations {
        println!("  {c:?}");
    }

    // Daily counts roll up into per-user counts.
    let counts = |keys: &[&str]| {
        AfkAnnotation::base("checkins", ["user", "day", "venue"])
            .apply(
                &AfkOp::Aggregate {
                    keys: set(keys),
                    outputs: vec![AggOutput {
                        name: "n".into(),
                        kind: AggKind::Count,
                        input: Some("venue".into()),
                    }],
                },
                None,
            )
            .unwrap()
    };
    let daily = CandidateView::materialized("daily", counts(&["user", "day"]), Stats::new(80.0, 32.0), &ctx);
    let r = enumerate_rewrites(&counts(&["user"]), &daily, 0, &ctx)
        .unwrap()
        .rewrite()
        .unwrap();
    println!("rollup {:?} cost {:.1}", r.compensations, r.cost);
}
