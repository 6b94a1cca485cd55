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

//! Brute-force reference optimizer for small instances. It shares the cost
//! model and the operation semantics with the search but none of its
//! pruning: every merge, every compensation sequence and every way of
//! combining per-target choices is tried.

use std::collections::BTreeMap;

use crate::annotation::AfkAnnotation;
use crate::context::RewriteContext;
use crate::cost::{transition_stats, Stats};
use crate::enumerator::{trailing_projection, Compensation};
use crate::error::{Error, Result};
use crate::optcost::CandidateView;
use crate::plan::{AnnotatedPlan, NodeId, Plan};
use crate::semantics::{guess_complete, relevant};
use crate::viewfinder::merge;
use crate::workflow::{ScriptedCandidate, SearchGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_targets: usize,
    /// Relevant catalog views per target.
    pub max_relevant: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_targets: 6,
            max_relevant: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub cost: f64,
    /// Cheapest rewrite per target, infinite when none exists.
    pub best_rewrite: Vec<f64>,
    /// Candidates that yield a rewrite although guessed incomplete.
    pub gc_negatives: Vec<(NodeId, String)>,
    /// Candidates examined over all targets, merges included.
    pub candidates: usize,
}

/// Every candidate reachable by repeatedly joining two partial candidates.
pub fn merge_closure(q: &AfkAnnotation, views: &[CandidateView], max_join_arity: usize) -> Vec<CandidateView> {
    let mut all: BTreeMap<Vec<String>, CandidateView> = BTreeMap::new();
    for v in views.iter().filter(|v| relevant(q, &v.annotation)) {
        all.entry(v.constituents().map(str::to_string).collect())
            .or_insert_with(|| v.clone());
    }
    loop {
        let partial: Vec<CandidateView> = all
            .values()
            .filter(|c| !guess_complete(q, &c.annotation))
            .cloned()
            .collect();
        let mut grown = false;
        for (i, x) in partial.iter().enumerate() {
            for y in &partial[i + 1..] {
                if let Some(m) = merge(x, y, q, max_join_arity) {
                    let key: Vec<String> = m.constituents().map(str::to_string).collect();
                    if let std::collections::btree_map::Entry::Vacant(e) = all.entry(key) {
                        e.insert(m);
                        grown = true;
                    }
                }
            }
        }
        if !grown {
            return all.into_values().collect();
        }
    }
}

/// The target's own operations: one select per filter, one derivation per
/// computed attribute, and a regroup onto its keys.
fn vocabulary(q: &AfkAnnotation, v: &AfkAnnotation) -> Vec<Compensation> {
    let mut vocab: Vec<Compensation> = q.filters.iter().cloned().map(Compensation::Select).collect();
    vocab.extend(
        q.attrs
            .values()
            .filter(|a| a.is_derived() && a.aggregate().is_none())
            .cloned()
            .map(Compensation::Derive),
    );
    if !q.keys.is_empty() {
        vocab.push(Compensation::Regroup {
            keys: q.keys.clone(),
            produce: q
                .attrs
                .values()
                .filter(|a| a.aggregate().is_some() && !v.contains_attr(a))
                .cloned()
                .collect(),
        });
    }
    vocab
}

/// Cheapest cost of turning `v` into `q` over all sequences of distinct
/// vocabulary operations, closed by a projection when needed.
pub fn brute_force_rewrite(q: &AfkAnnotation, v: &CandidateView, ctx: &RewriteContext) -> Option<f64> {
    let vocab = vocabulary(q, &v.annotation);
    let mut best: Option<f64> = None;
    let base = v.access_cost() + v.creation_cost(ctx);
    extend(q, &vocab, ctx, &v.annotation, &v.stats, 0, base, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn extend(
    q: &AfkAnnotation,
    vocab: &[Compensation],
    ctx: &RewriteContext,
    ann: &AfkAnnotation,
    stats: &Stats,
    used: u32,
    cost: f64,
    best: &mut Option<f64>,
) {
    let finished = match trailing_projection(ann, q) {
        None => Some((ann.clone(), cost)),
        Some(p) => p.apply(ann, &ctx.lang).ok().map(|a| (a, cost + p.cost(stats, ctx))),
    };
    if let Some((last, total)) = finished {
        if last == *q && best.is_none_or(|b| total < b) {
            *best = Some(total);
        }
    }
    for (i, step) in vocab.iter().enumerate() {
        if used & (1 << i) != 0 {
            continue;
        }
        if let Ok(next) = step.apply(ann, &ctx.lang) {
            let st = transition_stats(ann, &next, stats, &ctx.constants);
            extend(
                q,
                vocab,
                ctx,
                &next,
                &st,
                used | (1 << i),
                cost + step.cost(stats, ctx),
                best,
            );
        }
    }
}

/// Exact minimum plan cost over every candidate, every compensation order
/// and every assignment of original, rewrite or composition to the nodes.
pub fn oracle_optimal(
    ap: &AnnotatedPlan,
    views: &[CandidateView],
    ctx: &RewriteContext,
    limits: OracleLimits,
) -> Result<OracleReport> {
    let n = ap.plan.len();
    if n > limits.max_targets {
        return Err(Error::InstanceTooLarge(format!(
            "{n} targets, limit {}",
            limits.max_targets
        )));
    }
    let mut best_rewrite = vec![f64::INFINITY; n];
    let mut gc_negatives = Vec::new();
    let mut candidates = 0;
    for (i, q) in ap.outputs.iter().enumerate() {
        let rel = views.iter().filter(|v| relevant(q, &v.annotation)).count();
        if rel > limits.max_relevant {
            return Err(Error::InstanceTooLarge(format!(
                "node {} has {rel} relevant views, limit {}",
                ap.plan.id(i),
                limits.max_relevant
            )));
        }
        for c in merge_closure(q, views, ctx.max_join_arity) {
            candidates += 1;
            if let Some(cost) = brute_force_rewrite(q, &c, ctx) {
                if !guess_complete(q, &c.annotation) {
                    gc_negatives.push((ap.plan.id(i), c.id.clone()));
                }
                best_rewrite[i] = best_rewrite[i].min(cost);
            }
        }
    }
    let graph = SearchGraph::from_annotated(ap);
    let cost = best_assignment(&graph, &best_rewrite);
    Ok(OracleReport {
        cost,
        best_rewrite,
        gc_negatives,
        candidates,
    })
}

/// Exact minimum plan cost when every candidate's rewrite cost is given
/// up front, as in a scripted run.
pub fn oracle_scripted(plan: &Plan, candidates: &[ScriptedCandidate], limits: OracleLimits) -> Result<f64> {
    let n = plan.len();
    if n > limits.max_targets {
        return Err(Error::InstanceTooLarge(format!(
            "{n} targets, limit {}",
            limits.max_targets
        )));
    }
    let costs = plan
        .pinned_costs()
        .ok_or_else(|| Error::Invalid("scripted runs need a cost on every node".into()))?;
    let mut best_rewrite = vec![f64::INFINITY; n];
    for c in candidates {
        let i = plan.position(c.target)?;
        if let Some(cost) = c.result {
            best_rewrite[i] = best_rewrite[i].min(cost);
        }
    }
    Ok(best_assignment(&SearchGraph::new(plan, costs), &best_rewrite))
}

/// Minimum sink cost over all 3^n per-node choices.
fn best_assignment(graph: &SearchGraph, rewrite: &[f64]) -> f64 {
    let n = graph.len();
    let mut choice = vec![0u8; n];
    let mut val = vec![0.0; n];
    let mut best = f64::INFINITY;
    loop {
        for i in 0..n {
            val[i] = match choice[i] {
                0 => graph.original[i],
                1 => rewrite[i],
                _ => graph.compose(i, &val),
            };
        }
        best = best.min(val[n - 1]);
        let mut k = 0;
        while k < n && choice[k] == 2 {
            choice[k] = 0;
            k += 1;
        }
        if k == n {
            return best;
        }
        choice[k] += 1;
    }
}
