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

//! Candidate views and the OptCost lower bound on any rewrite that uses one.

use std::collections::BTreeMap;

use crate::annotation::AfkAnnotation;
use crate::context::RewriteContext;
use crate::cost::Stats;
use crate::enumerator::fix_steps;
use crate::semantics::{compute_fix, guess_complete, relevant};

/// One materialized view inside a candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Part {
    pub id: String,
    pub access_cost: f64,
    pub bytes: f64,
}

/// A materialized view, or a hypothetical join of several.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateView {
    pub id: String,
    pub annotation: AfkAnnotation,
    /// Constituent views, sorted by id.
    pub parts: Vec<Part>,
    pub materialized: bool,
    pub stats: Stats,
    /// Widest per-attribute width among the constituents carrying each attribute.
    pub attr_width: BTreeMap<String, f64>,
}

impl CandidateView {
    pub fn materialized(id: impl Into<String>, annotation: AfkAnnotation, stats: Stats, ctx: &RewriteContext) -> Self {
        let id = id.into();
        let per_attr = if annotation.attrs.is_empty() {
            0.0
        } else {
            stats.row_width_bytes / annotation.attrs.len() as f64
        };
        let part = Part {
            id: id.clone(),
            access_cost: ctx.constants.c_read * stats.bytes(),
            bytes: stats.bytes(),
        };
        Self {
            attr_width: annotation.attrs.keys().map(|n| (n.clone(), per_attr)).collect(),
            id,
            annotation,
            parts: vec![part],
            materialized: true,
            stats,
        }
    }

    pub fn constituents(&self) -> impl Iterator<Item = &str> {
        self.parts.iter().map(|p| p.id.as_str())
    }

    /// c1: reading every constituent.
    pub fn access_cost(&self) -> f64 {
        self.parts.iter().map(|p| p.access_cost).sum()
    }

    /// c2: shuffling the constituents through the joins and writing the
    /// result; zero for a materialized view.
    pub fn creation_cost(&self, ctx: &RewriteContext) -> f64 {
        if self.materialized {
            return 0.0;
        }
        let c = &ctx.constants;
        let moved: f64 = self.parts.iter().map(|p| p.bytes).sum();
        (c.shuffle_weight() + c.base(crate::cost::OpKind::Join)) * moved + c.c_write * self.stats.bytes()
    }
}

/// Lower bound on the cost of any rewrite of `q` that uses `v`. Irrelevant
/// views are infinite; partial views cost their access and creation only;
/// guessed-complete views add the cheapest single fix operation on `v`.
pub fn opt_cost(q: &AfkAnnotation, v: &CandidateView, ctx: &RewriteContext) -> f64 {
    if !relevant(q, &v.annotation) {
        return f64::INFINITY;
    }
    let base = v.access_cost() + v.creation_cost(ctx);
    if !guess_complete(q, &v.annotation) {
        return base;
    }
    let fix = compute_fix(q, &v.annotation).expect("guessed complete");
    let cheapest = fix_steps(&fix)
        .iter()
        .map(|s| s.cost(&v.stats, ctx))
        .min_by(f64::total_cmp)
        .unwrap_or(0.0);
    base + cheapest
}
