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

// Best-first, exhaustive and exact-match rewriting on the same workload.

use bfr::bench::{workload_context, workload_instances};
use bfr::context::RewriteContext;
use bfr::cost::CostConstants;
use bfr::workflow::{optimize, Algo};
use bfr::workload::{gen_workload, WorkloadSpec};

fn main() {
    let w = gen_workload(&WorkloadSpec::default(), &CostConstants::default()).unwrap();
    let ctx = workload_context(&w, &RewriteContext::default());
    println!(
        "{:<10} {:>10} {:>10} {:>10} {:>8}",
        "instance", "algo", "cost", "refines", "gain%"
    );
    for inst in workload_instances(&w, &ctx).unwrap() {
        let mut costs = Vec::new();
        for algo in Algo::ALL {
            let out = optimize(&inst.plan, &inst.views, &ctx, algo);
            let m = &out.metrics;
            println!(
                "{:<10} {:>10} {:>10.3e} {:>10} {:>8.1}",
                inst.id,
                algo,
                m.rewrite_cost,
                m.refine_attempts,
                m.improvement_pct()
            );
            costs.push(out.best.cost);
        }
        assert_eq!(costs[0], costs[1]);
        assert!(costs[0] <= costs[2]);
    }
}
