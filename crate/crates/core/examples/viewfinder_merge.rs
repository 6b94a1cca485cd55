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

// Two partial views, each covering half of a join, merged by the view
// finder into a candidate that answers the target alone.

use bfr::annotation::{AfkAnnotation, AfkOp, AggKind, AggOutput};
use bfr::context::RewriteContext;
use bfr::cost::Stats;
use bfr::optcost::CandidateView;
use bfr::viewfinder::ViewFinder;

fn per_user_count(source: &str, name: &str) -> AfkAnnotation {
    let mut a = AfkAnnotation::base(source, ["uid", "v"])
        .apply(
            &AfkOp::Aggregate {
                keys: ["uid".to_string()].into(),
                outputs: vec![AggOutput {
                    name: name.into(),
                    kind: AggKind::Count,
                    input: None,
                }],
            },
            None,
        )
        .unwrap();
    a.attrs.remove("v");
    a
}

fn main() {
    let ctx = RewriteContext::default();
    let (l, r) = (per_user_count("likes", "ln"), per_user_count("replies", "rn"));
    let q = AfkAnnotation::combine(&[l.clone(), r.clone()])
        .unwrap()
        .apply(&AfkOp::Group(["uid".to_string()].into()), None)
        .unwrap();
    let views = [
        CandidateView::materialized("likes_by_user", l, Stats::new(100.0, 16.0), &ctx),
        CandidateView::materialized("replies_by_user", r, Stats::new(50.0, 16.0), &ctx),
    ];
    let mut vf = ViewFinder::new(q, 0, &views, &ctx);
    while let Some(step) = vf.refine() {
        let result = step.rewrite.map_or("none".to_string(), |w| format!("{:.1}", w.cost));
        println!("popped {} bound {:.1} rewrite {result}", step.view_id, step.opt_cost);
    }
    let c = vf.counters();
    println!("candidates {} refines {}", c.candidates_considered, c.refine_attempts);
    assert_eq!(c.merge_violations, 0);
}
