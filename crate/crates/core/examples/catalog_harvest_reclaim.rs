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

// Keep the outputs of an executed plan as views, then give storage back.

use bfr::catalog::{harvest_views, reclaim_storage, Catalog, ReclaimPolicy};
use bfr::cost::CostConstants;
use bfr::plan::annotate;
use bfr::workload::{gen_workload, WorkloadSpec};

fn main() {
    let w = gen_workload(&WorkloadSpec::default(), &CostConstants::default()).unwrap();
    let v = w.versions.iter().max_by_key(|v| v.plan.len()).unwrap();
    let ap = annotate(&v.plan, &w.registry, &CostConstants::default()).unwrap();

    let catalog = harvest_views(&ap, &Catalog::new(), &v.name);
    println!("{} nodes gave {} views", ap.plan.len(), catalog.len());
    let again = harvest_views(&ap, &catalog, "rerun");
    assert_eq!(again.len(), catalog.len());

    let half = reclaim_storage(&catalog, &ReclaimPolicy::Random { fraction: 0.5, seed: 1 }).unwrap();
    println!(
        "storage {:.3e} -> {:.3e} bytes",
        catalog.total_storage(),
        half.total_storage()
    );
    let gone = reclaim_storage(&catalog, &ReclaimPolicy::DropIdentical(ap.outputs.clone())).unwrap();
    println!("after dropping this plan's own outputs: {} views", gone.len());
    print!("{}", half.to_jsonl());
}
