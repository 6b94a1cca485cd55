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

//! The plan-wide best-first search over all targets, and the exhaustive and
//! exact-match baselines it is measured against.

use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::context::RewriteContext;
use crate::enumerator::Rewrite;
use crate::error::{Error, Result};
use crate::optcost::CandidateView;
use crate::plan::{plan_cost, AnnotatedPlan, NodeId, Plan};
use crate::semantics::equivalent;
use crate::viewfinder::{Refinement, SearchCounters, ViewFinder};

/// A resumable search for rewrites of one target.
pub trait TargetSearch {
    /// Lower bound on any rewrite not yet found; infinite when exhausted.
    fn peek(&self) -> f64;
    fn refine(&mut self) -> Option<Refinement>;
    fn counters(&self) -> SearchCounters;
    /// Ids and bounds of popped candidates, in pop order.
    fn popped(&self) -> &[(String, f64)];
}

impl TargetSearch for ViewFinder<'_> {
    fn peek(&self) -> f64 {
        ViewFinder::peek(self)
    }
    fn refine(&mut self) -> Option<Refinement> {
        ViewFinder::refine(self)
    }
    fn counters(&self) -> SearchCounters {
        ViewFinder::counters(self)
    }
    fn popped(&self) -> &[(String, f64)] {
        ViewFinder::popped(self)
    }
}

/// A candidate with a fixed bound and a fixed outcome, for replaying
/// hand-built scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedCandidate {
    pub target: NodeId,
    pub view: String,
    pub opt_cost: f64,
    /// Cost of the rewrite the view yields, if any.
    pub result: Option<f64>,
}

/// Reads scripted candidates, one JSON object per line.
pub fn load_candidates(path: &Path) -> Result<Vec<ScriptedCandidate>> {
    let file = std::io::BufReader::new(std::fs::File::open(path).map_err(crate::error::at(path))?);
    let mut out = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub struct ScriptedSearch {
    target: usize,
    /// Sorted so the cheapest candidate is last.
    queue: Vec<ScriptedCandidate>,
    popped: Vec<(String, f64)>,
    counters: SearchCounters,
}

impl ScriptedSearch {
    pub fn new(target: usize, mut candidates: Vec<ScriptedCandidate>) -> Self {
        candidates.sort_by(|a, b| b.opt_cost.total_cmp(&a.opt_cost).then_with(|| b.view.cmp(&a.view)));
        Self {
            target,
            counters: SearchCounters {
                candidates_considered: candidates.len(),
                ..SearchCounters::default()
            },
            queue: candidates,
            popped: Vec::new(),
        }
    }

    /// One search per plan node, each holding the candidates scripted for it.
    pub fn for_plan(plan: &Plan, candidates: &[ScriptedCandidate]) -> Result<Vec<Self>> {
        let mut per: Vec<Vec<ScriptedCandidate>> = vec![Vec::new(); plan.len()];
        for c in candidates {
            per[plan.position(c.target)?].push(c.clone());
        }
        Ok(per.into_iter().enumerate().map(|(i, c)| Self::new(i, c)).collect())
    }
}

impl TargetSearch for ScriptedSearch {
    fn peek(&self) -> f64 {
        self.queue.last().map_or(f64::INFINITY, |c| c.opt_cost)
    }

    fn refine(&mut self) -> Option<Refinement> {
        let c = self.queue.pop()?;
        self.counters.refine_attempts += 1;
        self.popped.push((c.view.clone(), c.opt_cost));
        Some(Refinement {
            rewrite: c.result.map(|cost| Rewrite {
                target: self.target,
                view_id: c.view.clone(),
                constituents: vec![c.view.clone()],
                compensations: Vec::new(),
                cost,
            }),
            view_id: c.view,
            opt_cost: c.opt_cost,
        })
    }

    fn counters(&self) -> SearchCounters {
        self.counters
    }

    fn popped(&self) -> &[(String, f64)] {
        &self.popped
    }
}

/// Plan topology and costs as the search sees them.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchGraph {
    pub ids: Vec<NodeId>,
    pub inputs: Vec<Vec<usize>>,
    pub outputs: Vec<Vec<usize>>,
    pub node_costs: Vec<f64>,
    /// Cost of computing each target from scratch.
    pub original: Vec<f64>,
}

impl SearchGraph {
    pub fn new(plan: &Plan, node_costs: Vec<f64>) -> Self {
        let original = (0..plan.len())
            .map(|i| plan_cost(&plan.target(i), &node_costs))
            .collect();
        Self {
            ids: plan.nodes.iter().map(|n| n.spec.id).collect(),
            inputs: plan.nodes.iter().map(|n| n.inputs.clone()).collect(),
            outputs: plan.nodes.iter().map(|n| n.outputs.clone()).collect(),
            node_costs,
            original,
        }
    }

    pub fn from_annotated(ap: &AnnotatedPlan) -> Self {
        Self::new(&ap.plan, ap.node_costs.clone())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn sink(&self) -> usize {
        self.ids.len() - 1
    }

    /// Node cost plus the given costs of its inputs, summed in input order.
    pub fn compose(&self, i: usize, best: &[f64]) -> f64 {
        self.inputs[i].iter().fold(0.0, |acc, &j| acc + best[j]) + self.node_costs[i]
    }
}

/// How the best known plan produces one target.
#[derive(Clone, Debug, PartialEq)]
pub enum PlanChoice {
    Original,
    Rewrite(Rewrite),
    /// Run the node over the best plans of its inputs.
    Compose,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BestPlan {
    pub cost: f64,
    pub ids: Vec<NodeId>,
    pub inputs: Vec<Vec<usize>>,
    pub choices: Vec<PlanChoice>,
}

impl BestPlan {
    /// Rewrites the final plan uses, visited from the sink.
    pub fn rewrites(&self) -> Vec<&Rewrite> {
        let mut out = Vec::new();
        let mut stack = vec![self.choices.len() - 1];
        let mut seen = vec![false; self.choices.len()];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                continue;
            }
            match &self.choices[i] {
                PlanChoice::Rewrite(r) => out.push(r),
                PlanChoice::Compose => stack.extend(self.inputs[i].iter().rev()),
                PlanChoice::Original => {}
            }
        }
        out.sort_by_key(|r| r.target);
        out
    }
}

impl fmt::Display for BestPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cost {}", self.cost)?;
        let rewrites = self.rewrites();
        if rewrites.is_empty() {
            return writeln!(f, "original plan");
        }
        for r in rewrites {
            write!(f, "node {}: view {} ", self.ids[r.target], r.view_id)?;
            let steps: Vec<String> = r.compensations.iter().map(|c| format!("{c:?}")).collect();
            writeln!(f, "cost {} compensations [{}]", r.cost, steps.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub candidates_considered: usize,
    pub refine_attempts: usize,
    pub original_cost: f64,
    pub rewrite_cost: f64,
    pub wall_time_ms: f64,
    /// Popped candidates whose bound exceeds the final cost.
    pub violations: usize,
    /// Successive bounds returned by the target selection.
    pub frontier: Vec<f64>,
    /// (node id, view id) of every refinement, in order.
    pub refined: Vec<(NodeId, String)>,
    pub counters: SearchCounters,
}

impl Metrics {
    pub fn improvement_pct(&self) -> f64 {
        if self.original_cost <= 0.0 {
            return 0.0;
        }
        100.0 * (1.0 - self.rewrite_cost / self.original_cost)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub best: BestPlan,
    pub metrics: Metrics,
    pub trace: Vec<String>,
}

fn trace_line(id: NodeId, r: &Refinement) -> String {
    let result = r
        .rewrite
        .as_ref()
        .map_or_else(|| "none".to_string(), |w| w.cost.to_string());
    format!(
        "REFINE target={id} view={} optcost={} result={result}",
        r.view_id, r.opt_cost
    )
}

/// Best-first state over every target of one plan.
pub struct SearchState<S> {
    graph: SearchGraph,
    searches: Vec<S>,
    bst: Vec<f64>,
    choices: Vec<PlanChoice>,
    trace: Vec<String>,
    frontier: Vec<f64>,
    refined: Vec<(NodeId, String)>,
}

impl<S: TargetSearch> SearchState<S> {
    pub fn new(graph: SearchGraph, searches: Vec<S>) -> Self {
        assert_eq!(graph.len(), searches.len(), "one search per target");
        Self {
            bst: graph.original.clone(),
            choices: vec![PlanChoice::Original; graph.len()],
            graph,
            searches,
            trace: Vec::new(),
            frontier: Vec::new(),
            refined: Vec::new(),
        }
    }

    pub fn best_cost(&self, i: usize) -> f64 {
        self.bst[i]
    }

    /// The target to refine next below `i`, with the potential cost it stands
    /// for, or none once no refinement can beat the best plan of `i`.
    pub fn find_next_min_target(&self, i: usize) -> (Option<usize>, f64) {
        let mut d = 0.0;
        let mut w_min = None;
        let mut d_min = f64::INFINITY;
        for &k in &self.graph.inputs[i] {
            let (w_k, d_k) = self.find_next_min_target(k);
            d += d_k;
            if d_min > d_k && w_k.is_some() {
                w_min = w_k;
                d_min = d_k;
            }
        }
        d += self.graph.node_costs[i];
        let d_i = self.searches[i].peek();
        if d.min(d_i) >= self.bst[i] {
            (None, self.bst[i])
        } else if d < d_i {
            (w_min, d)
        } else {
            (Some(i), d_i)
        }
    }

    /// Advances the search at `i` by one candidate.
    pub fn refine_target(&mut self, i: usize) {
        let Some(r) = self.searches[i].refine() else {
            return;
        };
        self.trace.push(trace_line(self.graph.ids[i], &r));
        self.refined.push((self.graph.ids[i], r.view_id.clone()));
        if let Some(rw) = r.rewrite {
            if rw.cost < self.bst[i] {
                self.bst[i] = rw.cost;
                self.choices[i] = PlanChoice::Rewrite(rw);
                for k in self.graph.outputs[i].clone() {
                    self.propagate(k);
                }
            }
        }
    }

    fn propagate(&mut self, i: usize) {
        let c = self.graph.compose(i, &self.bst);
        if c < self.bst[i] {
            self.bst[i] = c;
            self.choices[i] = PlanChoice::Compose;
            for k in self.graph.outputs[i].clone() {
                self.propagate(k);
            }
        }
    }

    pub fn run(mut self) -> Outcome {
        let start = Instant::now();
        let sink = self.graph.sink();
        loop {
            let (w, d) = self.find_next_min_target(sink);
            let Some(i) = w else {
                break;
            };
            self.frontier.push(d);
            self.refine_target(i);
        }
        let cost = self.bst[sink];
        let violations = self
            .searches
            .iter()
            .flat_map(|s| s.popped())
            .filter(|(_, oc)| *oc > cost)
            .count();
        self.finish(start, violations)
    }

    fn finish(self, start: Instant, violations: usize) -> Outcome {
        let sink = self.graph.sink();
        let mut counters = SearchCounters::default();
        for s in &self.searches {
            counters.add(&s.counters());
        }
        let metrics = Metrics {
            candidates_considered: counters.candidates_considered,
            refine_attempts: counters.refine_attempts,
            original_cost: self.graph.original[sink],
            rewrite_cost: self.bst[sink],
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            violations,
            frontier: self.frontier,
            refined: self.refined,
            counters,
        };
        Outcome {
            best: BestPlan {
                cost: self.bst[sink],
                ids: self.graph.ids,
                inputs: self.graph.inputs,
                choices: self.choices,
            },
            metrics,
            trace: self.trace,
        }
    }

    /// Refines every target to exhaustion, then picks the cheapest of the
    /// original plan, the best rewrite and the composition at each node in
    /// plan order.
    pub fn run_exhaustive(mut self) -> Outcome {
        let start = Instant::now();
        for i in 0..self.graph.len() {
            let mut best: Option<Rewrite> = None;
            while let Some(r) = self.searches[i].refine() {
                self.trace.push(trace_line(self.graph.ids[i], &r));
                self.refined.push((self.graph.ids[i], r.view_id.clone()));
                if let Some(rw) = r.rewrite {
                    if best.as_ref().is_none_or(|b| rw.cost < b.cost) {
                        best = Some(rw);
                    }
                }
            }
            if let Some(rw) = best.filter(|rw| rw.cost < self.bst[i]) {
                self.bst[i] = rw.cost;
                self.choices[i] = PlanChoice::Rewrite(rw);
            }
            let c = self.graph.compose(i, &self.bst);
            if c < self.bst[i] {
                self.bst[i] = c;
                self.choices[i] = PlanChoice::Compose;
            }
        }
        self.finish(start, 0)
    }
}

/// Search algorithms a caller can pick from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Bfr,
    Dp,
    Syntactic,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::Bfr, Algo::Dp, Algo::Syntactic];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Bfr => "bfr",
            Algo::Dp => "dp",
            Algo::Syntactic => "syntactic",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown algorithm `{s}`")))
    }
}

fn view_finders<'a>(ap: &AnnotatedPlan, views: &[CandidateView], ctx: &'a RewriteContext) -> Vec<ViewFinder<'a>> {
    (0..ap.plan.len())
        .map(|i| ViewFinder::new(ap.outputs[i].clone(), i, views, ctx))
        .collect()
}

/// Cheapest rewrite of the whole plan by best-first search.
pub fn workflow_rewrite(ap: &AnnotatedPlan, views: &[CandidateView], ctx: &RewriteContext) -> Outcome {
    SearchState::new(SearchGraph::from_annotated(ap), view_finders(ap, views, ctx)).run()
}

/// Cheapest rewrite of the whole plan by exhausting every target's search.
pub fn dp_rewrite(ap: &AnnotatedPlan, views: &[CandidateView], ctx: &RewriteContext) -> Outcome {
    SearchState::new(SearchGraph::from_annotated(ap), view_finders(ap, views, ctx)).run_exhaustive()
}

/// Replaces a target only by a materialized view identical to it, composing
/// greedily from the sources toward the sink.
pub fn syntactic_rewrite(ap: &AnnotatedPlan, views: &[CandidateView], ctx: &RewriteContext) -> Outcome {
    let start = Instant::now();
    let graph = SearchGraph::from_annotated(ap);
    let mut bst = graph.original.clone();
    let mut choices = vec![PlanChoice::Original; graph.len()];
    let mut matches = 0;
    for i in 0..graph.len() {
        for v in views
            .iter()
            .filter(|v| v.materialized && equivalent(&ap.outputs[i], &v.annotation))
        {
            matches += 1;
            let cost = v.access_cost() + v.creation_cost(ctx);
            if cost < bst[i] {
                bst[i] = cost;
                choices[i] = PlanChoice::Rewrite(Rewrite {
                    target: i,
                    view_id: v.id.clone(),
                    constituents: vec![v.id.clone()],
                    compensations: Vec::new(),
                    cost,
                });
            }
        }
        let c = graph.compose(i, &bst);
        if c < bst[i] {
            bst[i] = c;
            choices[i] = PlanChoice::Compose;
        }
    }
    let sink = graph.sink();
    Outcome {
        metrics: Metrics {
            candidates_considered: matches,
            refine_attempts: 0,
            original_cost: graph.original[sink],
            rewrite_cost: bst[sink],
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            ..Metrics::default()
        },
        best: BestPlan {
            cost: bst[sink],
            ids: graph.ids,
            inputs: graph.inputs,
            choices,
        },
        trace: Vec::new(),
    }
}

pub fn optimize(ap: &AnnotatedPlan, views: &[CandidateView], ctx: &RewriteContext, algo: Algo) -> Outcome {
    match algo {
        Algo::Bfr => workflow_rewrite(ap, views, ctx),
        Algo::Dp => dp_rewrite(ap, views, ctx),
        Algo::Syntactic => syntactic_rewrite(ap, views, ctx),
    }
}

/// Runs a scripted scenario over a plan with pinned node costs.
pub fn scripted_rewrite(plan: &Plan, candidates: &[ScriptedCandidate], algo: Algo) -> Result<Outcome> {
    let costs = plan
        .pinned_costs()
        .ok_or_else(|| Error::Invalid("scripted runs need a cost on every node".into()))?;
    let searches = ScriptedSearch::for_plan(plan, candidates)?;
    let state = SearchState::new(SearchGraph::new(plan, costs), searches);
    match algo {
        Algo::Bfr => Ok(state.run()),
        Algo::Dp => Ok(state.run_exhaustive()),
        Algo::Syntactic => Err(Error::Invalid(
            "scripted candidates carry no annotations to match".into(),
        )),
    }
}
