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

// Decide whether a view might answer a query and, if so, what is missing.

use bfr::annotation::{AfkAnnotation, AfkOp};
use bfr::predicate::{CmpOp, FilterPredicate};
use bfr::semantics::{compute_fix, guess_complete, relevant};

fn main() {
    let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
    let v = AfkAnnotation::base("log", ["a", "b", "c"]);
    let q = v
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
        .unwrap()
        .apply(&AfkOp::Drop(set(&["a"])), None)
        .unwrap();

    println!(
        "relevant {} complete guess {}",
        relevant(&q, &v),
        guess_complete(&q, &v)
    );
    let fix = compute_fix(&q, &v).unwrap();
    let missing: Vec<&str> = fix.missing_attrs.iter().map(|a| a.name.as_str()).collect();
    println!("add {missing:?}");
    println!(
        "filter {:?}",
        fix.missing_filters.iter().map(ToString::to_string).collect::<Vec<_>>()
    );
    println!("regroup {:?} drop {:?}", fix.regroup, fix.surplus_attrs);
    assert_eq!(fix.size(), 3);

    // The other direction fails: the view is grouped and filtered already.
    assert!(!guess_complete(&v, &q));
}
