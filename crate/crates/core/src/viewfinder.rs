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

//! Per-target incremental search over candidate views, cheapest lower bound
//! first, growing the space by merging partial views as they are popped.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet};

use crate::annotation::AfkAnnotation;
use crate::context::RewriteContext;
use crate::cost::Stats;
use crate::enumerator::{enumerate_rewrites, Enumeration, Rewrite};
use crate::optcost::{opt_cost, CandidateView, Part};
use crate::semantics::guess_complete;

/// Work counters of one target search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchCounters {
    /// Views enqueued, catalog and merged.
    pub candidates_considered: usize,
    /// Guessed-complete views handed to the enumerator.
    pub refine_attempts: usize,
    pub false_positives: usize,
    pub language_exceeded: usize,
    pub fix_too_large: usize,
    /// Merged candidates enqueued below the popped view's bound.
    pub merge_violations: usize,
    /// Rewrites found cheaper than their view's bound.
    pub admissibility_violations: usize,
}

impl SearchCounters {
    pub fn add(&mut self, o: &SearchCounters) {
        self.candidates_considered += o.candidates_considered;
        self.refine_attempts += o.refine_attempts;
        self.false_positives += o.false_positives;
        self.language_exceeded += o.language_exceeded;
        self.fix_too_large += o.fix_too_large;
        self.merge_violations += o.merge_violations;
        self.admissibility_violations += o.admissibility_violations;
    }
}

/// What one refinement step popped and found.
#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub view_id: String,
    pub opt_cost: f64,
    pub rewrite: Option<Rewrite>,
}

/// The joined view of two disjoint candidates, if they share a join path:
/// common grouping keys, or else common attributes among the target's keys.
/// Stats and lineage depend only on the resulting set of constituents.
pub fn merge(x: &CandidateView, y: &CandidateView, q: &AfkAnnotation, max_join_arity: usize) -> Option<CandidateView> {
    if x.parts.len() + y.parts.len() > max_join_arity {
        return None;
    }
    if x.parts.iter().any(|p| y.parts.iter().any(|o| o.id == p.id)) {
        return None;
    }
    let (a, b) = (&x.annotation, &y.annotation);
    let shared: BTreeSet<&str> = a.names().intersection(&b.names()).copied().collect();
    if shared.iter().any(|n| a.get(n) != b.get(n)) {
        return None;
    }
    let joinable = a.keys.iter().any(|k| b.keys.contains(k)) || shared.iter().any(|n| q.keys.contains(*n));
    if !joinable {
        return None;
    }

    let mut annotation = a.clone();
    annotation
        .attrs
        .extend(b.attrs.iter().map(|(n, v)| (n.clone(), v.clone())));
    annotation.filters = a.filters.union(&b.filters);
    annotation.keys = if a.keys.is_empty() || b.keys.is_empty() {
        BTreeSet::new()
    } else {
        a.keys.union(&b.keys).cloned().collect()
    };
    annotation.sources = a.sources.union(&b.sources).cloned().collect();

    let mut attr_width = x.attr_width.clone();
    for (n, w) in &y.attr_width {
        let e = attr_width.entry(n.clone()).or_insert(*w);
        *e = e.max(*w);
    }
    let mut stats = Stats::new(x.stats.row_count.max(y.stats.row_count), attr_width.values().sum());
    stats.distinct_ratio = max_union(&x.stats.distinct_ratio, &y.stats.distinct_ratio);
    stats.selectivity = max_union(&x.stats.selectivity, &y.stats.selectivity);

    let mut parts: Vec<Part> = x.parts.iter().chain(&y.parts).cloned().collect();
    parts.sort_by(|p, o| p.id.cmp(&o.id));
    Some(CandidateView {
        id: parts.iter().map(|p| p.id.as_str()).collect::<Vec<_>>().join("+"),
        annotation,
        parts,
        materialized: false,
        stats,
        attr_width,
    })
}

fn max_union(x: &BTreeMap<String, f64>, y: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let mut out = x.clone();
    for (k, v) in y {
        let e = out.entry(k.clone()).or_insert(*v);
        *e = e.max(*v);
    }
    out
}

struct Queued {
    key: f64,
    view: CandidateView,
}

impl Queued {
    fn order(&self, o: &Self) -> Ordering {
        self.key
            .total_cmp(&o.key)
            .then_with(|| self.view.id.cmp(&o.view.id))
            .then_with(|| self.view.parts.len().cmp(&o.view.parts.len()))
    }
}

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        self.order(o) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    fn cmp(&self, o: &Self) -> Ordering {
        self.order(o)
    }
}

/// Search state for one target. Ties on the bound break by view id, then by
/// fewer constituents.
pub struct ViewFinder<'a> {
    query: AfkAnnotation,
    target: usize,
    ctx: &'a RewriteContext,
    pq: BinaryHeap<Reverse<Queued>>,
    /// Popped partial views, in pop order, kept for merging.
    partial_seen: Vec<CandidateView>,
    /// Constituent sets already enqueued or popped.
    known: HashSet<Vec<String>>,
    popped: Vec<(String, f64)>,
    counters: SearchCounters,
}

impl<'a> ViewFinder<'a> {
    /// Enqueues every view with a finite bound for `query`.
    pub fn new(query: AfkAnnotation, target: usize, views: &[CandidateView], ctx: &'a RewriteContext) -> Self {
        let mut vf = Self {
            query,
            target,
            ctx,
            pq: BinaryHeap::new(),
            partial_seen: Vec::new(),
            known: HashSet::new(),
            popped: Vec::new(),
            counters: SearchCounters::default(),
        };
        for v in views {
            let key = opt_cost(&vf.query, v, ctx);
            if key.is_finite() && vf.known.insert(constituent_key(v)) {
                vf.counters.candidates_considered += 1;
                vf.pq.push(Reverse(Queued { key, view: v.clone() }));
            }
        }
        vf
    }

    pub fn query(&self) -> &AfkAnnotation {
        &self.query
    }

    /// Bound of the next candidate, infinite when none is left.
    pub fn peek(&self) -> f64 {
        self.pq.peek().map_or(f64::INFINITY, |Reverse(q)| q.key)
    }

    pub fn queued(&self) -> usize {
        self.pq.len()
    }

    pub fn counters(&self) -> SearchCounters {
        self.counters
    }

    /// Ids and bounds of popped candidates, in pop order.
    pub fn popped(&self) -> &[(String, f64)] {
        &self.popped
    }

    /// Pops the cheapest candidate. A partial one is merged with the partial
    /// views seen so far; a guessed-complete one goes to the enumerator.
    pub fn refine(&mut self) -> Option<Refinement> {
        let Reverse(Queued { key, view }) = self.pq.pop()?;
        self.popped.push((view.id.clone(), key));
        let partial = !guess_complete(&self.query, &view.annotation);
        if partial {
            for s in &self.partial_seen {
                let Some(m) = merge(&view, s, &self.query, self.ctx.max_join_arity) else {
                    continue;
                };
                if !self.known.insert(constituent_key(&m)) {
                    continue;
                }
                let mk = opt_cost(&self.query, &m, self.ctx);
                if !mk.is_finite() {
                    continue;
                }
                if mk < key {
                    self.counters.merge_violations += 1;
                }
                self.counters.candidates_considered += 1;
                self.pq.push(Reverse(Queued { key: mk, view: m }));
            }
            self.partial_seen.push(view.clone());
            return Some(Refinement {
                view_id: view.id,
                opt_cost: key,
                rewrite: None,
            });
        }
        self.counters.refine_attempts += 1;
        let rewrite = match enumerate_rewrites(&self.query, &view, self.target, self.ctx) {
            Ok(Enumeration::Found(r)) => {
                if r.cost < key {
                    self.counters.admissibility_violations += 1;
                }
                Some(r)
            }
            Ok(Enumeration::NoRewrite) => {
                self.counters.false_positives += 1;
                None
            }
            Ok(Enumeration::LanguageExceeded(_)) => {
                self.counters.language_exceeded += 1;
                None
            }
            Err(_) => {
                self.counters.fix_too_large += 1;
                None
            }
        };
        Some(Refinement {
            view_id: view.id,
            opt_cost: key,
            rewrite,
        })
    }
}

fn constituent_key(v: &CandidateView) -> Vec<String> {
    v.constituents().map(str::to_string).collect()
}
