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

// Describe a UDF by its local functions and watch it change the
// attributes, filters and keys of a small plan.

use bfr::annotation::AfkOp;
use bfr::cost::CostConstants;
use bfr::plan::{annotate, build_plan, NodeSpec};
use bfr::udf::{LocalFunction, Phase, UdfDescriptor, UdfRegistry};
use bfr::workload::source_input;
use serde_json::json;

fn main() {
    // A sentiment scorer: one map-side function adding a score computed from text.
    let sentiment = UdfDescriptor::new(
        "SENTIMENT",
        1,
        vec![LocalFunction::new(
            Phase::Map,
            vec![AfkOp::Add {
                name: "sent".into(),
                required: ["text".to_string()].into(),
            }],
        )],
    )
    .with_scalar(4.0);
    let mut registry = UdfRegistry::new();
    registry.register(sentiment).unwrap();

    let (tweets, stats) = source_input("tweets").unwrap();
    let plan = build_plan(
        vec![
            NodeSpec::new(1, "udf", json!({"name": "SENTIMENT", "sources": ["tweets"]})),
            NodeSpec::new(
                2,
                "filter",
                json!({"predicates": [{"attr": "sent", "op": ">", "const": 0.5}]}),
            ),
            NodeSpec::new(
                3,
                "aggregate",
                json!({"keys": ["uid"], "aggregates": [{"name": "n", "kind": "count"}]}),
            ),
        ],
        &[(1, 2), (2, 3)],
    )
    .unwrap()
    .with_base("tweets", tweets, stats);

    let ap = annotate(&plan, &registry, &CostConstants::default()).unwrap();
    for (i, out) in ap.outputs.iter().enumerate() {
        let attrs: Vec<&str> = out.names().into_iter().collect();
        println!(
            "node {}: attrs {attrs:?} filters {} keys {:?} rows {} cost {:.0}",
            ap.plan.id(i),
            out.filters.len(),
            out.keys,
            ap.stats[i].row_count,
            ap.node_costs[i]
        );
    }
    let sent = ap.outputs[0].get("sent").unwrap();
    println!("sent is derived by {}", sent.signature.as_ref().unwrap().udf_name);
    assert!(ap.outputs[2].keys.contains("uid"));
}
