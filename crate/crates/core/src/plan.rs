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

//! Query plans as topologically ordered DAGs of jobs, their targets, and
//! annotation of every node output.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::annotation::{AfkAnnotation, AfkOp, AggOutput, Attribute};
use crate::cost::{job_cost, CostBreakdown, CostConstants, Job, Stats};
use crate::error::{schema, Error, Result};
use crate::predicate::{FilterPredicate, Filters};
use crate::udf::{LocalFunction, Phase, UdfRegistry};

pub type NodeId = i64;

/// A node as written in a plan file. `cost` pins the node cost instead of
/// estimating it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub op: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

impl NodeSpec {
    pub fn new(id: NodeId, op: impl Into<String>, params: Value) -> Self {
        Self {
            id,
            op: op.into(),
            params,
            cost: None,
        }
    }

    pub fn with_cost(id: NodeId, cost: f64) -> Self {
        Self {
            id,
            op: "opaque".into(),
            params: Value::Null,
            cost: Some(cost),
        }
    }

    /// Base inputs this node reads directly.
    pub fn sources(&self) -> Vec<String> {
        self.params
            .get("sources")
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(|s| s.as_str().map(str::to_string)).collect())
            .unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanNode {
    pub spec: NodeSpec,
    /// Positions of parent nodes, in plan order.
    pub inputs: Vec<usize>,
    /// Positions of child nodes, in plan order.
    pub outputs: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaseInput {
    pub annotation: AfkAnnotation,
    pub stats: Stats,
}

/// A DAG of jobs in topological order with a single sink, last.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub nodes: Vec<PlanNode>,
    index: BTreeMap<NodeId, usize>,
    pub base: BTreeMap<String, BaseInput>,
}

/// Builds a plan, ordering nodes topologically (smallest id first among
/// ready nodes) and checking for cycles and a single sink.
pub fn build_plan(nodes: Vec<NodeSpec>, edges: &[(NodeId, NodeId)]) -> Result<Plan> {
    if nodes.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let mut pos = BTreeMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if pos.insert(n.id, i).is_some() {
            return Err(Error::DuplicateNode(n.id));
        }
    }
    let mut succ: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); nodes.len()];
    let mut indeg = vec![0usize; nodes.len()];
    for &(from, to) in edges {
        let f = *pos.get(&from).ok_or(Error::DanglingEdge(from))?;
        let t = *pos.get(&to).ok_or(Error::DanglingEdge(to))?;
        if succ[f].insert(to) {
            indeg[t] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<NodeId>> = nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| indeg[*i] == 0)
        .map(|(_, n)| Reverse(n.id))
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(Reverse(id)) = ready.pop() {
        let i = pos[&id];
        order.push(i);
        for s in &succ[i] {
            let j = pos[s];
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.push(Reverse(*s));
            }
        }
    }
    if order.len() < nodes.len() {
        let stuck = nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| indeg[*i] > 0)
            .map(|(_, n)| n.id)
            .min()
            .expect("some node remains");
        return Err(Error::CycleDetected(stuck));
    }
    let sinks: Vec<NodeId> = order
        .iter()
        .filter(|&&i| succ[i].is_empty())
        .map(|&i| nodes[i].id)
        .collect();
    if sinks.len() > 1 {
        return Err(Error::MultipleSinks(sinks));
    }
    let index: BTreeMap<NodeId, usize> = order.iter().enumerate().map(|(p, &i)| (nodes[i].id, p)).collect();
    let mut plan_nodes: Vec<PlanNode> = order
        .iter()
        .map(|&i| PlanNode {
            spec: nodes[i].clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
        .collect();
    for (p, &i) in order.iter().enumerate() {
        for s in &succ[i] {
            let q = index[s];
            plan_nodes[p].outputs.push(q);
            plan_nodes[q].inputs.push(p);
        }
    }
    for n in &mut plan_nodes {
        n.inputs.sort_unstable();
        n.outputs.sort_unstable();
    }
    Ok(Plan {
        nodes: plan_nodes,
        index,
        base: BTreeMap::new(),
    })
}

/// Node `root` and all of its ancestors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Target {
    pub root: usize,
    pub root_id: NodeId,
    /// Positions in plan order.
    pub members: Vec<usize>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sink(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn position(&self, id: NodeId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownNode(id))
    }

    pub fn id(&self, pos: usize) -> NodeId {
        self.nodes[pos].spec.id
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for n in &self.nodes {
            for &o in &n.outputs {
                out.push((n.spec.id, self.id(o)));
            }
        }
        out
    }

    pub fn target(&self, pos: usize) -> Target {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![pos];
        while let Some(p) = stack.pop() {
            if !std::mem::replace(&mut seen[p], true) {
                stack.extend(self.nodes[p].inputs.iter().copied());
            }
        }
        Target {
            root: pos,
            root_id: self.id(pos),
            members: (0..self.nodes.len()).filter(|&p| seen[p]).collect(),
        }
    }

    pub fn with_base(mut self, source: impl Into<String>, annotation: AfkAnnotation, stats: Stats) -> Self {
        self.base.insert(source.into(), BaseInput { annotation, stats });
        self
    }

    /// Node costs pinned in the plan, if every node has one.
    pub fn pinned_costs(&self) -> Option<Vec<f64>> {
        self.nodes.iter().map(|n| n.spec.cost).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PlanFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        file.into_plan()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&crate::error::read_file(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PlanFile::from_plan(self)).expect("plans serialize")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::error::write_file(path, self.to_json())?;
        Ok(())
    }
}

/// The members of the target rooted at node `id`.
pub fn target_of(plan: &Plan, id: NodeId) -> Result<Target> {
    Ok(plan.target(plan.position(id)?))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum AttrSpec {
    Name(String),
    Full(Attribute),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BaseSpec {
    source: String,
    attrs: Vec<AttrSpec>,
    #[serde(default)]
    filters: Filters,
    #[serde(default)]
    keys: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stats_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stats: Option<Stats>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PlanFile {
    nodes: Vec<NodeSpec>,
    #[serde(default)]
    edges: Vec<(NodeId, NodeId)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    base: Vec<BaseSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    stats: BTreeMap<String, Stats>,
}

impl PlanFile {
    fn into_plan(self) -> Result<Plan> {
        let mut plan = build_plan(self.nodes, &self.edges)?;
        for b in self.base {
            let stats = match (&b.stats, &b.stats_ref) {
                (Some(s), _) => s.clone(),
                (None, Some(r)) => self
                    .stats
                    .get(r)
                    .cloned()
                    .ok_or_else(|| Error::Invalid(format!("unknown stats_ref `{r}`")))?,
                (None, None) => return Err(Error::Invalid(format!("base `{}` has no stats", b.source))),
            };
            stats.validate()?;
            let mut ann = AfkAnnotation {
                sources: BTreeSet::from([b.source.clone()]),
                filters: b.filters,
                keys: b.keys,
                ..AfkAnnotation::default()
            };
            for a in b.attrs {
                let a = match a {
                    AttrSpec::Name(n) => Attribute::base(n),
                    AttrSpec::Full(a) => a,
                };
                ann.attrs.insert(a.name.clone(), a);
            }
            ann.check_invariant()?;
            plan.base.insert(b.source, BaseInput { annotation: ann, stats });
        }
        Ok(plan)
    }

    fn from_plan(plan: &Plan) -> Self {
        let base = plan
            .base
            .iter()
            .map(|(source, b)| BaseSpec {
                source: source.clone(),
                attrs: b.annotation.attrs.values().cloned().map(AttrSpec::Full).collect(),
                filters: b.annotation.filters.clone(),
                keys: b.annotation.keys.clone(),
                stats_ref: None,
                stats: Some(b.stats.clone()),
            })
            .collect();
        PlanFile {
            nodes: plan.nodes.iter().map(|n| n.spec.clone()).collect(),
            edges: plan.edges(),
            base,
            stats: BTreeMap::new(),
        }
    }
}

/// A plan with the annotation, stats and cost of every node output.
#[derive(Clone, Debug)]
pub struct AnnotatedPlan {
    pub plan: Plan,
    pub outputs: Vec<AfkAnnotation>,
    pub stats: Vec<Stats>,
    pub breakdowns: Vec<CostBreakdown>,
    pub node_costs: Vec<f64>,
}

impl AnnotatedPlan {
    /// Cost of the target rooted at `pos`: the sum of its member node costs.
    pub fn target_cost(&self, pos: usize) -> f64 {
        plan_cost(&self.plan.target(pos), &self.node_costs)
    }
}

/// Sum of node costs over the target's members, in plan order.
pub fn plan_cost(target: &Target, node_costs: &[f64]) -> f64 {
    target.members.iter().map(|&m| node_costs[m]).sum()
}

fn param<T: serde::de::DeserializeOwned>(spec: &NodeSpec, key: &str) -> Result<T> {
    let v = spec
        .params
        .get(key)
        .cloned()
        .ok_or_else(|| Error::Invalid(format!("node {} (`{}`) needs parameter `{key}`", spec.id, spec.op)))?;
    serde_json::from_value(v).map_err(|e| Error::Invalid(format!("node {} parameter `{key}`: {e}", spec.id)))
}

fn builtin(phase: Phase, ops: Vec<AfkOp>) -> Job {
    Job {
        udf_name: None,
        scalar: 1.0,
        local_functions: vec![LocalFunction::new(phase, ops)],
    }
}

/// The job a node runs over its (combined) input.
pub fn node_job(spec: &NodeSpec, registry: &UdfRegistry, input: &AfkAnnotation, n_inputs: usize) -> Result<Job> {
    let job = match spec.op.as_str() {
        "filter" => builtin(
            Phase::Map,
            vec![AfkOp::Filter(param::<Vec<FilterPredicate>>(spec, "predicates")?)],
        ),
        "project" => {
            let keep: BTreeSet<String> = param(spec, "attrs")?;
            let drop = input.attrs.keys().filter(|n| !keep.contains(*n)).cloned().collect();
            builtin(Phase::Map, vec![AfkOp::Drop(drop)])
        }
        "identity" => builtin(Phase::Map, vec![AfkOp::Drop(BTreeSet::new())]),
        "group" => builtin(Phase::Reduce, vec![AfkOp::Group(param(spec, "keys")?)]),
        "aggregate" => builtin(
            Phase::Reduce,
            vec![AfkOp::Aggregate {
                keys: param(spec, "keys")?,
                outputs: param::<Vec<AggOutput>>(spec, "aggregates")?,
            }],
        ),
        "join" => {
            if n_inputs < 2 {
                return Err(schema(format!("join node {} has {n_inputs} input(s)", spec.id)));
            }
            builtin(Phase::Reduce, vec![AfkOp::Group(param(spec, "keys")?)])
        }
        other => {
            let name = if other == "udf" {
                param::<String>(spec, "name")?
            } else {
                other.to_string()
            };
            let d = registry.get(&name).ok_or(Error::UnknownUdf(name))?;
            if d.inputs != n_inputs {
                return Err(schema(format!(
                    "`{}` takes {} inputs, node {} has {n_inputs}",
                    d.name, d.inputs, spec.id
                )));
            }
            d.job()
        }
    };
    Ok(job)
}

fn combine_stats(inputs: &[(&AfkAnnotation, &Stats)], combined: &AfkAnnotation) -> Stats {
    if let [(_, s)] = inputs {
        return (*s).clone();
    }
    let mut out = Stats::new(0.0, 0.0);
    let mut attr_count = 0usize;
    for (a, s) in inputs {
        out.row_count += s.row_count;
        out.row_width_bytes += s.row_width_bytes;
        attr_count += a.attrs.len();
        for (k, v) in &s.distinct_ratio {
            out.distinct_ratio.entry(k.clone()).or_insert(*v);
        }
        for (k, v) in &s.selectivity {
            out.selectivity.entry(k.clone()).or_insert(*v);
        }
    }
    if attr_count > 0 && !combined.attrs.is_empty() {
        out.row_width_bytes *= combined.attrs.len() as f64 / attr_count as f64;
    }
    out
}

/// Annotates every node output by composing operation transforms in plan
/// order, and estimates node costs. Pinned node costs take precedence.
pub fn annotate(plan: &Plan, registry: &UdfRegistry, c: &CostConstants) -> Result<AnnotatedPlan> {
    let n = plan.len();
    let mut outputs: Vec<AfkAnnotation> = Vec::with_capacity(n);
    let mut stats: Vec<Stats> = Vec::with_capacity(n);
    let mut breakdowns = Vec::with_capacity(n);
    let mut node_costs = Vec::with_capacity(n);
    for node in &plan.nodes {
        let mut inputs: Vec<(&AfkAnnotation, &Stats)> = node.inputs.iter().map(|&p| (&outputs[p], &stats[p])).collect();
        for s in node.spec.sources() {
            let b = plan
                .base
                .get(&s)
                .ok_or_else(|| schema(format!("node {} reads unknown source `{s}`", node.spec.id)))?;
            inputs.push((&b.annotation, &b.stats));
        }
        if inputs.is_empty() {
            return Err(schema(format!("node {} has no input", node.spec.id)));
        }
        let anns: Vec<AfkAnnotation> = inputs.iter().map(|(a, _)| (*a).clone()).collect();
        let combined = AfkAnnotation::combine(&anns)?;
        let in_stats = combine_stats(&inputs, &combined);
        let job = node_job(&node.spec, registry, &combined, inputs.len())?;
        if node.spec.op == "join" {
            for (i, a) in anns.iter().enumerate() {
                let keys: BTreeSet<String> = param(&node.spec, "keys")?;
                if let Some(k) = keys.iter().find(|k| !a.has(k)) {
                    return Err(schema(format!("join node {} input {i} lacks key `{k}`", node.spec.id)));
                }
            }
        }
        let est = job_cost(&job, &combined, &in_stats, c)?;
        node_costs.push(node.spec.cost.unwrap_or(est.breakdown.total()));
        breakdowns.push(est.breakdown);
        outputs.push(est.output);
        stats.push(est.stats);
    }
    Ok(AnnotatedPlan {
        plan: plan.clone(),
        outputs,
        stats,
        breakdowns,
        node_costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn opaque(ids: &[NodeId]) -> Vec<NodeSpec> {
        ids.iter().map(|&i| NodeSpec::with_cost(i, 1.0)).collect()
    }

    #[test]
    fn chain_order_and_sink() {
        let p = build_plan(opaque(&[3, 1, 2]), &[(1, 2), (2, 3)]).unwrap();
        let ids: Vec<NodeId> = (0..3).map(|i| p.id(i)).collect();
        assert_eq!(ids, vec![1, 2, 3]);
        assert_eq!(p.id(p.sink()), 3);
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            build_plan(opaque(&[1, 2]), &[(1, 2), (2, 1)]),
            Err(Error::CycleDetected(_))
        ));
        assert!(matches!(
            build_plan(opaque(&[1, 2, 3]), &[(1, 2), (1, 3)]),
            Err(Error::MultipleSinks(_))
        ));
        assert!(matches!(
            build_plan(opaque(&[1]), &[(1, 9)]),
            Err(Error::DanglingEdge(9))
        ));
        assert!(matches!(build_plan(opaque(&[1, 1]), &[]), Err(Error::DuplicateNode(1))));
        assert!(matches!(build_plan(vec![], &[]), Err(Error::EmptyPlan)));
    }

    #[test]
    fn chain_targets() {
        let p = build_plan(opaque(&[1, 2, 3]), &[(1, 2), (2, 3)]).unwrap();
        assert_eq!(target_of(&p, 2).unwrap().members, vec![0, 1]);
        assert_eq!(target_of(&p, 3).unwrap().members, vec![0, 1, 2]);
        assert!(matches!(target_of(&p, 7), Err(Error::UnknownNode(7))));
    }

    #[test]
    fn plan_file_round_trip() {
        let text = json!({
            "nodes": [
                {"id": 1, "op": "filter", "params": {"sources": ["t"], "predicates": [{"attr": "x", "op": "<", "const": 5.0}]}},
                {"id": 2, "op": "group", "params": {"keys": ["x"]}}
            ],
            "edges": [[1, 2]],
            "base": [{"source": "t", "attrs": ["x", "y"], "stats_ref": "t"}],
            "stats": {"t": {"row_count": 1000.0, "row_width_bytes": 16.0}}
        })
        .to_string();
        let p = Plan::from_json(&text).unwrap();
        let again = Plan::from_json(&p.to_json()).unwrap();
        assert_eq!(p, again);
        let ann = annotate(&p, &UdfRegistry::new(), &CostConstants::default()).unwrap();
        assert_eq!(ann.outputs[0].filters.len(), 1);
        assert_eq!(ann.outputs[1].keys, BTreeSet::from(["x".to_string()]));
        assert_eq!(ann.stats[1].row_count, 10.0);
    }

    #[test]
    fn identity_projection_keeps_annotation() {
        let base = AfkAnnotation::base("t", ["x", "y"]);
        let p = build_plan(
            vec![
                NodeSpec::new(1, "project", json!({"sources": ["t"], "attrs": ["x", "y"]})),
                NodeSpec::new(2, "identity", Value::Null),
            ],
            &[(1, 2)],
        )
        .unwrap()
        .with_base("t", base.clone(), Stats::new(10.0, 16.0));
        let ann = annotate(&p, &UdfRegistry::new(), &CostConstants::default()).unwrap();
        assert_eq!(ann.outputs[0], base);
        assert_eq!(ann.outputs[1], base);
    }

    #[test]
    fn unknown_udf_and_absent_attribute() {
        let base = AfkAnnotation::base("t", ["x"]);
        let p = build_plan(vec![NodeSpec::new(1, "MYSTERY", json!({"sources": ["t"]}))], &[])
            .unwrap()
            .with_base("t", base.clone(), Stats::new(10.0, 8.0));
        assert!(matches!(
            annotate(&p, &UdfRegistry::new(), &CostConstants::default()),
            Err(Error::UnknownUdf(_))
        ));
        let p = build_plan(
            vec![NodeSpec::new(1, "group", json!({"sources": ["t"], "keys": ["z"]}))],
            &[],
        )
        .unwrap()
        .with_base("t", base, Stats::new(10.0, 8.0));
        assert!(matches!(
            annotate(&p, &UdfRegistry::new(), &CostConstants::default()),
            Err(Error::InconsistentSchema(_))
        ));
    }

    #[test]
    fn chain_cost_is_prefix_plus_last() {
        let p = build_plan(
            vec![
                NodeSpec::with_cost(1, 6.0),
                NodeSpec::with_cost(2, 5.0),
                NodeSpec::with_cost(3, 2.0),
            ],
            &[(1, 2), (2, 3)],
        )
        .unwrap();
        let costs = p.pinned_costs().unwrap();
        let whole = plan_cost(&p.target(2), &costs);
        assert_eq!(whole, plan_cost(&p.target(1), &costs) + costs[2]);
        assert_eq!(whole, 13.0);
    }
}
