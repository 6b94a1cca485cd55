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

// Run every algorithm over a few workloads and write the metrics as CSV.

use bfr::bench::{plot_points, run_bench, workload_context, workload_instances, write_metrics};
use bfr::context::RewriteContext;
use bfr::cost::CostConstants;
use bfr::workflow::Algo;
use bfr::workload::{gen_workload, WorkloadSpec};

fn main() {
    let mut runs = Vec::new();
    for (seed, size) in [(1, 10), (2, 20), (3, 30)] {
        let spec = WorkloadSpec {
            seed,
            catalog_size: size,
            ..WorkloadSpec::default()
        };
        let w = gen_workload(&spec, &CostConstants::default()).unwrap();
        let ctx = workload_context(&w, &RewriteContext::default());
        let inst = workload_instances(&w, &ctx).unwrap();
        runs.extend(
            run_bench(&inst, &Algo::ALL, &ctx, false)
                .into_iter()
                .map(|r| (w.catalog.len(), r)),
        );
    }
    write_metrics(runs.iter().map(|(_, r)| r.row.clone()), std::io::stdout()).unwrap();
    for p in plot_points(&runs) {
        println!(
            "{} views {}: median refines {}",
            p.catalog_size, p.algo, p.median_refines
        );
    }
}
