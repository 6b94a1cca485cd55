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

// Compare the best-first result with an exhaustive search over every
// candidate, compensation order and plan composition.

use bfr::bench::{workload_context, workload_instances};
use bfr::context::RewriteContext;
use bfr::cost::CostConstants;
use bfr::oracle::{oracle_optimal, OracleLimits};
use bfr::workflow::workflow_rewrite;
use bfr::workload::{gen_workload, WorkloadSpec};

fn main() {
    let spec = WorkloadSpec {
        seed: 5,
        n_analysts: 4,
        ..WorkloadSpec::default()
    };
    let w = gen_workload(&spec, &CostConstants::default()).unwrap();
    let ctx = workload_context(&w, &RewriteContext::default());
    for inst in workload_instances(&w, &ctx).unwrap() {
        let bfr = workflow_rewrite(&inst.plan, &inst.views, &ctx);
        match oracle_optimal(&inst.plan, &inst.views, &ctx, OracleLimits::default()) {
            Ok(o) => {
                println!(
                    "{}: best-first {:.4e} exhaustive {:.4e} over {} candidates",
                    inst.id, bfr.best.cost, o.cost, o.candidates
                );
                assert_eq!(bfr.best.cost, o.cost);
            }
            Err(e) => println!("{}: skipped, {e}", inst.id),
        }
    }
}
