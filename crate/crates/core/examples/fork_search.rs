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

// Best-first search across the targets of a small fork, driven by a
// scripted candidate list so every bound and rewrite cost is fixed.

use bfr::plan::Plan;
use bfr::workflow::{load_candidates, scripted_rewrite, Algo};
use std::path::Path;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/fork");
    let plan = Plan::load(&dir.join("plan.json")).unwrap();
    let candidates = load_candidates(&dir.join("search_order.jsonl")).unwrap();

    let out = scripted_rewrite(&plan, &candidates, Algo::Bfr).unwrap();
    for line in &out.trace {
        println!("{line}");
    }
    print!("{}", out.best);
    let dp = scripted_rewrite(&plan, &candidates, Algo::Dp).unwrap();
    println!(
        "bfr refined {}, exhaustive refined {}",
        out.metrics.refine_attempts, dp.metrics.refine_attempts
    );
    assert_eq!(out.best.cost, dp.best.cost);
}
