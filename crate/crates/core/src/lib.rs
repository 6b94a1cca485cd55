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

//! Rewriting of UDF-heavy query plans against a catalog of views left behind
//! by earlier executions.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annotation;
pub mod bench;
pub mod catalog;
pub mod context;
pub mod cost;
pub mod enumerator;
pub mod error;
pub mod optcost;
pub mod oracle;
pub mod plan;
pub mod predicate;
pub mod semantics;
pub mod udf;
pub mod viewfinder;
pub mod workflow;
pub mod workload;
