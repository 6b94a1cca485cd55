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

// Generate analysts revising their queries and save the result to disk.

use bfr::cost::CostConstants;
use bfr::workload::{gen_workload, RevisionMix, Workload, WorkloadSpec};

fn main() {
    let spec = WorkloadSpec {
        seed: 3,
        n_analysts: 2,
        mix: RevisionMix {
            parameter_change: 0.25,
            add_source: 0.25,
            add_udf: 0.25,
            add_subgoal: 0.25,
        },
        ..WorkloadSpec::default()
    };
    let w = gen_workload(&spec, &CostConstants::default()).unwrap();
    for v in &w.versions {
        let ops: Vec<&str> = v.plan.nodes.iter().map(|n| n.spec.op.as_str()).collect();
        println!("{} {}", v.name, ops.join(" > "));
    }
    println!("catalog holds {} views", w.catalog.len());

    let dir = std::env::temp_dir().join(format!("bfr-workload-{}", std::process::id()));
    w.save(&dir).unwrap();
    let back = Workload::load(&dir).unwrap();
    assert_eq!(back.catalog.to_jsonl(), w.catalog.to_jsonl());
    std::fs::remove_dir_all(&dir).unwrap();
}
