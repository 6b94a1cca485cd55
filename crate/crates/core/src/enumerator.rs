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

//! Compensation search: the cheapest ordering of the fix operations that
//! turns a candidate view into the target.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::annotation::{AfkAnnotation, Attribute};
use crate::context::{RewriteContext, RewriteLanguage};
use crate::cost::{op_cost, transition_stats, OpKind, Stats};
use crate::error::{Error, Result};
use crate::optcost::CandidateView;
use crate::predicate::FilterPredicate;
use crate::semantics::{compute_fix, keys_reachable, Fix};

/// One operation of the rewrite language applied on top of a view.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Compensation {
    Select(FilterPredicate),
    /// Recompute a derived attribute exactly as its signature records.
    Derive(Attribute),
    /// Group by `keys`, computing `produce` from scratch or by rolling up
    /// finer aggregates already present.
    Regroup {
        keys: BTreeSet<String>,
        produce: Vec<Attribute>,
    },
    Project(BTreeSet<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepError {
    Invalid(String),
    LanguageExceeded(String),
}

fn invalid<T>(msg: impl Into<String>) -> std::result::Result<T, StepError> {
    Err(StepError::Invalid(msg.into()))
}

impl Compensation {
    pub fn kind(&self) -> OpKind {
        match self {
            Compensation::Select(_) => OpKind::Filter,
            Compensation::Derive(_) => OpKind::Add,
            Compensation::Regroup { produce, .. } if produce.is_empty() => OpKind::Group,
            Compensation::Regroup { .. } => OpKind::Aggregate,
            Compensation::Project(_) => OpKind::Project,
        }
    }

    /// First operation this step needs that `lang` lacks.
    pub fn missing_language(&self, lang: &RewriteLanguage) -> Option<String> {
        let need: Vec<String> = match self {
            Compensation::Select(_) => vec!["select".into()],
            Compensation::Derive(a) => vec![a.signature.as_ref().map_or_else(String::new, |s| s.udf_name.clone())],
            Compensation::Regroup { produce, .. } => std::iter::once("group-by".to_string())
                .chain(
                    produce
                        .iter()
                        .filter_map(|a| a.aggregate())
                        .map(|k| k.name().to_string()),
                )
                .collect(),
            Compensation::Project(_) => vec!["project".into()],
        };
        need.into_iter().find(|op| !lang.allows(op))
    }

    /// Cost of this step over data described by `stats`.
    pub fn cost(&self, stats: &Stats, ctx: &RewriteContext) -> f64 {
        let c = &ctx.constants;
        match self {
            Compensation::Derive(a) => {
                let scalar = a.signature.as_ref().map_or(1.0, |s| ctx.registry.scalar(&s.udf_name));
                op_cost(OpKind::Add, stats, scalar, c)
            }
            Compensation::Regroup { .. } => op_cost(self.kind(), stats, 1.0, c) + c.shuffle_weight() * stats.bytes(),
            _ => op_cost(self.kind(), stats, 1.0, c),
        }
    }

    pub fn apply(
        &self,
        state: &AfkAnnotation,
        lang: &RewriteLanguage,
    ) -> std::result::Result<AfkAnnotation, StepError> {
        if let Some(op) = self.missing_language(lang) {
            return Err(StepError::LanguageExceeded(op));
        }
        let mut out = state.clone();
        match self {
            Compensation::Select(p) => {
                if !state.has(&p.attr) {
                    return invalid(format!("select on absent `{}`", p.attr));
                }
                out.filters = state.filters.with(p.clone());
            }
            Compensation::Derive(a) => {
                let Some(sig) = a.signature.as_ref().filter(|s| s.aggregate.is_none()) else {
                    return invalid(format!("`{}` is not a derivable attribute", a.name));
                };
                if state.has(&a.name) {
                    return invalid(format!("`{}` already present", a.name));
                }
                if !sig.required_attrs.iter().all(|r| state.has(r)) {
                    return invalid(format!("inputs of `{}` absent", a.name));
                }
                if sig.filters != state.filters || sig.keys != state.keys {
                    return invalid(format!("`{}` was computed in a different state", a.name));
                }
                out.attrs.insert(a.name.clone(), a.clone());
            }
            Compensation::Regroup { keys, produce } => {
                if keys.is_empty() || keys == &state.keys || !keys_reachable(&state.keys, keys) {
                    return invalid("grouping cannot move to these keys");
                }
                if !keys.iter().all(|k| state.has(k)) {
                    return invalid("group keys absent");
                }
                out.keys = keys.clone();
                for g in produce {
                    let Some((sig, kind)) = g.signature.as_ref().and_then(|s| s.aggregate.map(|k| (s, k))) else {
                        return invalid(format!("`{}` is not an aggregate", g.name));
                    };
                    if &sig.keys != keys {
                        return invalid(format!("`{}` is grouped differently", g.name));
                    }
                    if state.keys.is_empty() {
                        if sig.udf_name != kind.name()
                            || sig.filters != state.filters
                            || !sig.required_attrs.iter().all(|r| state.has(r))
                        {
                            return invalid(format!("`{}` cannot be computed here", g.name));
                        }
                    } else {
                        let finer = out.attrs.values().find(|h| {
                            h.signature.as_ref().is_some_and(|hs| {
                                hs.aggregate == Some(kind)
                                    && hs.required_attrs == sig.required_attrs
                                    && hs.udf_name == sig.udf_name
                                    && hs.filters == sig.filters
                                    && hs.keys == state.keys
                            })
                        });
                        let Some(h) = finer.map(|h| h.name.clone()) else {
                            return invalid(format!("no finer aggregate rolls up into `{}`", g.name));
                        };
                        out.attrs.remove(&h);
                    }
                    if out.has(&g.name) {
                        return invalid(format!("`{}` already present", g.name));
                    }
                    out.attrs.insert(g.name.clone(), g.clone());
                }
            }
            Compensation::Project(keep) => {
                if !keep.iter().all(|k| state.has(k)) {
                    return invalid("projection keeps absent attributes");
                }
                out.attrs.retain(|n, _| keep.contains(n));
                out.check_invariant().map_err(|e| StepError::Invalid(e.to_string()))?;
            }
        }
        Ok(out)
    }
}

/// The compensations a fix calls for: one select per missing predicate, one
/// derivation per missing non-aggregate attribute, and a single regroup
/// producing the missing aggregates.
pub fn fix_steps(fix: &Fix) -> Vec<Compensation> {
    let mut steps: Vec<Compensation> = fix.missing_filters.iter().cloned().map(Compensation::Select).collect();
    steps.extend(
        fix.missing_attrs
            .iter()
            .filter(|a| a.aggregate().is_none())
            .cloned()
            .map(Compensation::Derive),
    );
    if let Some(keys) = &fix.regroup {
        let produce = fix
            .missing_attrs
            .iter()
            .filter(|a| a.aggregate().is_some())
            .cloned()
            .collect();
        steps.push(Compensation::Regroup {
            keys: keys.clone(),
            produce,
        });
    }
    steps
}

/// A replacement for a target: a candidate view plus compensations.
#[derive(Clone, Debug, PartialEq)]
pub struct Rewrite {
    /// Plan position of the target root.
    pub target: usize,
    pub view_id: String,
    pub constituents: Vec<String>,
    pub compensations: Vec<Compensation>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Enumeration {
    Found(Rewrite),
    /// The view was guessed complete but no ordering works.
    NoRewrite,
    /// The fix needs an operation outside the rewrite language.
    LanguageExceeded(String),
}

impl Enumeration {
    pub fn rewrite(self) -> Option<Rewrite> {
        match self {
            Enumeration::Found(r) => Some(r),
            _ => None,
        }
    }
}

struct Orderings<'a> {
    steps: &'a [Compensation],
    q: &'a AfkAnnotation,
    ctx: &'a RewriteContext,
    best: Option<(f64, Vec<usize>, bool)>,
}

/// The projection closing a rewrite, when `state` carries attributes `q` lacks.
pub fn trailing_projection(state: &AfkAnnotation, q: &AfkAnnotation) -> Option<Compensation> {
    state
        .attrs
        .keys()
        .any(|n| !q.has(n))
        .then(|| Compensation::Project(q.attrs.keys().cloned().collect()))
}

impl Orderings<'_> {
    fn search(&mut self, ann: &AfkAnnotation, stats: &Stats, used: u32, cost: f64, order: &mut Vec<usize>) {
        if order.len() == self.steps.len() {
            let tail = trailing_projection(ann, self.q);
            let (last, total) = match &tail {
                None => (ann.clone(), cost),
                Some(t) => match t.apply(ann, &self.ctx.lang) {
                    Ok(a) => (a, cost + t.cost(stats, self.ctx)),
                    Err(_) => return,
                },
            };
            if last == *self.q && self.best.as_ref().is_none_or(|b| total < b.0) {
                self.best = Some((total, order.clone(), tail.is_some()));
            }
            return;
        }
        for (i, step) in self.steps.iter().enumerate() {
            if used & (1 << i) != 0 {
                continue;
            }
            let next_cost = cost + step.cost(stats, self.ctx);
            if self.best.as_ref().is_some_and(|b| next_cost >= b.0) {
                continue;
            }
            let Ok(next) = step.apply(ann, &self.ctx.lang) else {
                continue;
            };
            let next_stats = transition_stats(ann, &next, stats, &self.ctx.constants);
            order.push(i);
            self.search(&next, &next_stats, used | (1 << i), next_cost, order);
            order.pop();
        }
    }
}

/// Cheapest valid ordering of the fix between `q` and `v`, followed by a
/// projection when attributes outside `q` remain.
pub fn enumerate_rewrites(
    q: &AfkAnnotation,
    v: &CandidateView,
    target: usize,
    ctx: &RewriteContext,
) -> Result<Enumeration> {
    let fix = compute_fix(q, &v.annotation)?;
    let steps = fix_steps(&fix);
    if steps.len() > ctx.max_fix {
        return Err(Error::FixTooLarge {
            size: steps.len(),
            limit: ctx.max_fix,
        });
    }
    if let Some(op) = steps.iter().find_map(|s| s.missing_language(&ctx.lang)) {
        return Ok(Enumeration::LanguageExceeded(op));
    }
    let base = v.access_cost() + v.creation_cost(ctx);
    let mut search = Orderings {
        steps: &steps,
        q,
        ctx,
        best: None,
    };
    search.search(&v.annotation, &v.stats, 0, base, &mut Vec::new());
    Ok(match search.best {
        None => Enumeration::NoRewrite,
        Some((cost, order, projected)) => {
            let mut compensations: Vec<Compensation> = order.iter().map(|&i| steps[i].clone()).collect();
            if projected {
                compensations.push(Compensation::Project(q.attrs.keys().cloned().collect()));
            }
            Enumeration::Found(Rewrite {
                target,
                view_id: v.id.clone(),
                constituents: v.constituents().map(str::to_string).collect(),
                compensations,
                cost,
            })
        }
    })
}
