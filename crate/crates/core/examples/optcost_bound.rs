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

// The quick lower bound never exceeds the cost of the rewrite it bounds.

use bfr::annotation::AfkAnnotation;
use bfr::context::RewriteContext;
use bfr::cost::Stats;
use bfr::enumerator::enumerate_rewrites;
use bfr::optcost::{opt_cost, CandidateView};
use bfr::predicate::{CmpOp, FilterPredicate};

fn main() {
    let ctx = RewriteContext::default();
    let q = AfkAnnotation::base("t", ["x", "y"])
        .with_filter(FilterPredicate::new("x", CmpOp::Gt, 5.0))
        .with_filter(FilterPredicate::new("y", CmpOp::Le, 2.0))
        .with_keys(["x"]);
    let loose = AfkAnnotation::base("t", ["x", "y"]).with_filter(FilterPredicate::new("x", CmpOp::Gt, 1.0));
    for rows in [1e3, 1e5, 1e7] {
        let v = CandidateView::materialized("v", loose.clone(), Stats::new(rows, 16.0), &ctx);
        let bound = opt_cost(&q, &v, &ctx);
        let actual = enumerate_rewrites(&q, &v, 0, &ctx).unwrap().rewrite().unwrap().cost;
        println!("rows {rows:e}: bound {bound:.1} rewrite {actual:.1}");
        assert!(bound <= actual);
    }
    let other = CandidateView::materialized("w", AfkAnnotation::base("s", ["x"]), Stats::new(10.0, 8.0), &ctx);
    println!("unrelated view bound {}", opt_cost(&q, &other, &ctx));
}
