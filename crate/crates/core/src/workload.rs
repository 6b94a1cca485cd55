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

//! Synthetic analyst workloads: each analyst starts from a small query over
//! social logs and revises it version after version. Views harvested from
//! the earlier versions form the catalog later versions are rewritten against.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::annotation::{AfkAnnotation, AfkOp};
use crate::catalog::{harvest_views, Catalog};
use crate::cost::{CostConstants, Stats};
use crate::error::{Error, Result};
use crate::plan::{annotate, build_plan, NodeId, NodeSpec, Plan};
use crate::udf::{LocalFunction, Phase, UdfDescriptor, UdfRegistry};

/// Relative frequency of each kind of revision between versions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevisionMix {
    pub parameter_change: f64,
    pub add_source: f64,
    pub add_udf: f64,
    pub add_subgoal: f64,
}

impl Default for RevisionMix {
    fn default() -> Self {
        Self {
            parameter_change: 0.4,
            add_source: 0.2,
            add_udf: 0.2,
            add_subgoal: 0.2,
        }
    }
}

impl RevisionMix {
    pub fn only_parameter_changes() -> Self {
        Self {
            parameter_change: 1.0,
            add_source: 0.0,
            add_udf: 0.0,
            add_subgoal: 0.0,
        }
    }

    fn weights(&self) -> [f64; 4] {
        [self.parameter_change, self.add_source, self.add_udf, self.add_subgoal]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub seed: u64,
    pub n_analysts: usize,
    pub versions_per_analyst: usize,
    /// Upper bound on nodes per plan.
    pub targets_per_plan: usize,
    /// Upper bound on harvested views kept in the catalog.
    pub catalog_size: usize,
    pub mix: RevisionMix,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            n_analysts: 8,
            versions_per_analyst: 4,
            targets_per_plan: 6,
            catalog_size: 30,
            mix: RevisionMix::default(),
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_analysts == 0 || self.versions_per_analyst == 0 || self.catalog_size == 0 {
            return Err(Error::Invalid("workload counts must be positive".into()));
        }
        if self.targets_per_plan < 3 {
            return Err(Error::Invalid("plans need room for at least 3 nodes".into()));
        }
        let w = self.mix.weights();
        if w.iter().any(|x| !(*x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(
                "revision weights must be nonnegative and sum to 1".into(),
            ));
        }
        Ok(())
    }
}

struct SourceDef {
    name: &'static str,
    attrs: &'static [&'static str],
    rows: f64,
    width: f64,
    udf: &'static str,
    udf_attr: &'static str,
    udf_input: &'static str,
    udf_scalar: f64,
    count: &'static str,
    has_day: bool,
}

const SOURCES: [SourceDef; 3] = [
    SourceDef {
        name: "tweets",
        attrs: &["uid", "text", "day"],
        rows: 1.0e6,
        width: 96.0,
        udf: "SENTIMENT",
        udf_attr: "sent",
        udf_input: "text",
        udf_scalar: 4.0,
        count: "tw_n",
        has_day: true,
    },
    SourceDef {
        name: "checkins",
        attrs: &["uid", "venue", "day"],
        rows: 4.0e5,
        width: 48.0,
        udf: "CATEGORY",
        udf_attr: "cat",
        udf_input: "venue",
        udf_scalar: 2.0,
        count: "ck_n",
        has_day: true,
    },
    SourceDef {
        name: "friends",
        attrs: &["uid", "fid"],
        rows: 2.0e5,
        width: 16.0,
        udf: "AFFINITY",
        udf_attr: "aff",
        udf_input: "fid",
        udf_scalar: 3.0,
        count: "fr_n",
        has_day: false,
    },
];

const THRESHOLDS: [f64; 4] = [0.2, 0.4, 0.6, 0.8];
const MIN_COUNTS: [f64; 4] = [1.0, 2.0, 5.0, 10.0];

/// Descriptors of the scoring UDFs the generated plans call.
pub fn standard_registry() -> UdfRegistry {
    let mut r = UdfRegistry::new();
    for s in &SOURCES {
        let add = AfkOp::Add {
            name: s.udf_attr.into(),
            required: [s.udf_input.to_string()].into(),
        };
        let d = UdfDescriptor::new(s.udf, 1, vec![LocalFunction::new(Phase::Map, vec![add])]).with_scalar(s.udf_scalar);
        r.register(d).expect("standard descriptors are valid");
    }
    r
}

/// Annotation and stats of a generated source log.
pub fn source_input(name: &str) -> Option<(AfkAnnotation, Stats)> {
    let s = SOURCES.iter().find(|s| s.name == name)?;
    let mut st = Stats::new(s.rows, s.width);
    st.distinct_ratio.insert("uid".into(), 0.01);
    st.distinct_ratio.insert("day,uid".into(), 0.05);
    st.selectivity.insert(s.udf_attr.into(), 0.4);
    st.selectivity.insert(s.count.into(), 0.3);
    Some((AfkAnnotation::base(s.name, s.attrs.iter().copied()), st))
}

#[derive(Clone, Debug, PartialEq)]
struct Branch {
    source: usize,
    udf: bool,
    threshold: Option<usize>,
    /// Some(fine): aggregated per user, or per user and day when fine.
    agg: Option<bool>,
}

impl Branch {
    fn nodes(&self) -> usize {
        usize::from(self.udf) + usize::from(self.threshold.is_some()) + usize::from(self.agg.is_some())
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Query {
    branches: Vec<Branch>,
    final_filter: Option<usize>,
}

impl Query {
    fn nodes(&self) -> usize {
        self.branches.iter().map(Branch::nodes).sum::<usize>()
            + usize::from(self.branches.len() > 1)
            + usize::from(self.final_filter.is_some())
    }

    fn new_branch(source: usize, rng: &mut ChaCha8Rng) -> Branch {
        let udf = rng.gen_bool(0.6);
        let threshold = (udf && rng.gen_bool(0.7)).then(|| rng.gen_range(0..THRESHOLDS.len()));
        let agg = (!udf || rng.gen_bool(0.5)).then(|| SOURCES[source].has_day && rng.gen_bool(0.5));
        Branch {
            source,
            udf,
            threshold,
            agg,
        }
    }

    fn initial(rng: &mut ChaCha8Rng) -> Self {
        Query {
            branches: vec![Self::new_branch(rng.gen_range(0..SOURCES.len()), rng)],
            final_filter: None,
        }
    }

    /// Moves one filter constant a step tighter, wrapping to the loosest.
    fn change_parameter(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let mut knobs: Vec<&mut usize> = self.branches.iter_mut().filter_map(|b| b.threshold.as_mut()).collect();
        if let Some(f) = self.final_filter.as_mut() {
            knobs.push(f);
        }
        if knobs.is_empty() {
            return false;
        }
        let k = rng.gen_range(0..knobs.len());
        *knobs[k] = (*knobs[k] + 1) % THRESHOLDS.len();
        true
    }

    fn add_source(&mut self, cap: usize, rng: &mut ChaCha8Rng) -> bool {
        let unused: Vec<usize> = (0..SOURCES.len())
            .filter(|s| self.branches.iter().all(|b| b.source != *s))
            .collect();
        let Some(&source) = unused.choose(rng) else {
            return false;
        };
        let b = Self::new_branch(source, rng);
        let extra = b.nodes() + usize::from(self.branches.len() == 1);
        if self.nodes() + extra > cap {
            return false;
        }
        self.branches.push(b);
        true
    }

    fn add_udf(&mut self, cap: usize, rng: &mut ChaCha8Rng) -> bool {
        if self.nodes() + 1 > cap {
            return false;
        }
        let plain: Vec<usize> = (0..self.branches.len()).filter(|&i| !self.branches[i].udf).collect();
        let Some(&i) = plain.choose(rng) else {
            return false;
        };
        self.branches[i].udf = true;
        true
    }

    fn add_subgoal(&mut self, cap: usize, rng: &mut ChaCha8Rng) -> bool {
        if self.nodes() + 1 > cap {
            return false;
        }
        #[derive(Clone, Copy)]
        enum Goal {
            Threshold(usize),
            Aggregate(usize),
            Final,
        }
        let mut goals = Vec::new();
        for (i, b) in self.branches.iter().enumerate() {
            if b.udf && b.threshold.is_none() {
                goals.push(Goal::Threshold(i));
            }
            if b.agg.is_none() {
                goals.push(Goal::Aggregate(i));
            }
        }
        if self.final_filter.is_none() && self.branches.iter().any(|b| b.agg.is_some()) {
            goals.push(Goal::Final);
        }
        let Some(&g) = goals.choose(rng) else {
            return false;
        };
        match g {
            Goal::Threshold(i) => self.branches[i].threshold = Some(rng.gen_range(0..THRESHOLDS.len())),
            Goal::Aggregate(i) => {
                let fine = SOURCES[self.branches[i].source].has_day && rng.gen_bool(0.5);
                self.branches[i].agg = Some(fine);
            }
            Goal::Final => self.final_filter = Some(rng.gen_range(0..MIN_COUNTS.len())),
        }
        true
    }

    fn revise(&mut self, mix: &RevisionMix, cap: usize, rng: &mut ChaCha8Rng) {
        let w = mix.weights();
        let mut x = rng.gen::<f64>() * w.iter().sum::<f64>();
        let mut kind = 0;
        while kind < 3 && x >= w[kind] {
            x -= w[kind];
            kind += 1;
        }
        let done = match kind {
            0 => false,
            1 => self.add_source(cap, rng),
            2 => self.add_udf(cap, rng),
            _ => self.add_subgoal(cap, rng),
        };
        if !done {
            self.change_parameter(rng);
        }
    }

    fn to_plan(&self) -> Result<Plan> {
        let mut nodes = Vec::new();
        let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
        let mut tails = Vec::new();
        let mut next: NodeId = 1;
        for b in &self.branches {
            let s = &SOURCES[b.source];
            let mut prev: Option<NodeId> = None;
            let mut steps = Vec::new();
            if b.udf {
                steps.push(("udf", json!({"name": s.udf})));
            }
            if let Some(t) = b.threshold {
                steps.push((
                    "filter",
                    json!({"predicates": [{"attr": s.udf_attr, "op": ">", "const": THRESHOLDS[t]}]}),
                ));
            }
            if let Some(fine) = b.agg {
                let keys = if fine { json!(["uid", "day"]) } else { json!(["uid"]) };
                steps.push((
                    "aggregate",
                    json!({"keys": keys, "aggregates": [{"name": s.count, "kind": "count"}]}),
                ));
            }
            for (op, mut params) in steps {
                match prev {
                    None => params["sources"] = json!([s.name]),
                    Some(p) => edges.push((p, next)),
                }
                nodes.push(NodeSpec::new(next, op, params));
                prev = Some(next);
                next += 1;
            }
            tails.push(prev.expect("every branch has a node"));
        }
        let mut last = tails[0];
        if tails.len() > 1 {
            nodes.push(NodeSpec::new(next, "join", json!({"keys": ["uid"]})));
            edges.extend(tails.iter().map(|&t| (t, next)));
            last = next;
            next += 1;
        }
        if let Some(f) = self.final_filter {
            let b = self
                .branches
                .iter()
                .find(|b| b.agg.is_some())
                .expect("final filters follow an aggregate");
            let attr = SOURCES[b.source].count;
            nodes.push(NodeSpec::new(
                next,
                "filter",
                json!({"predicates": [{"attr": attr, "op": ">", "const": MIN_COUNTS[f]}]}),
            ));
            edges.push((last, next));
        }
        let mut plan = build_plan(nodes, &edges)?;
        for b in &self.branches {
            let (ann, st) = source_input(SOURCES[b.source].name).expect("known source");
            plan = plan.with_base(SOURCES[b.source].name, ann, st);
        }
        Ok(plan)
    }
}

/// One version of one analyst's query.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanVersion {
    pub name: String,
    pub analyst: usize,
    pub version: usize,
    pub plan: Plan,
}

#[derive(Clone, Debug)]
pub struct Workload {
    pub spec: WorkloadSpec,
    pub versions: Vec<PlanVersion>,
    pub catalog: Catalog,
    pub registry: UdfRegistry,
}

impl Workload {
    /// The newest version of every analyst's query.
    pub fn latest(&self) -> impl Iterator<Item = &PlanVersion> {
        let last = self.spec.versions_per_analyst - 1;
        self.versions.iter().filter(move |v| v.version == last)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let plans = dir.join("plans");
        std::fs::create_dir_all(&plans).map_err(crate::error::at(&plans))?;
        for v in &self.versions {
            v.plan.save(&dir.join("plans").join(format!("{}.json", v.name)))?;
        }
        self.catalog.save(&dir.join("catalog.jsonl"))?;
        self.registry.save(&dir.join("udfs.json"))?;
        let spec = serde_json::to_string_pretty(&self.spec).expect("specs serialize");
        crate::error::write_file(&dir.join("workload.json"), spec)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = crate::error::read_file(&dir.join("workload.json"))?;
        let spec: WorkloadSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut versions = Vec::new();
        for analyst in 0..spec.n_analysts {
            for version in 0..spec.versions_per_analyst {
                let name = version_name(analyst, version);
                let plan = Plan::load(&dir.join("plans").join(format!("{name}.json")))?;
                versions.push(PlanVersion {
                    name,
                    analyst,
                    version,
                    plan,
                });
            }
        }
        Ok(Workload {
            catalog: Catalog::load(&dir.join("catalog.jsonl"))?,
            registry: UdfRegistry::load(&dir.join("udfs.json"))?,
            spec,
            versions,
        })
    }
}

fn version_name(analyst: usize, version: usize) -> String {
    format!("a{analyst:02}v{version}")
}

/// Generates every analyst's versions and harvests the views of all but the
/// newest version into the catalog, keeping a random `catalog_size` of them.
pub fn gen_workload(spec: &WorkloadSpec, constants: &CostConstants) -> Result<Workload> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let registry = standard_registry();
    let mut versions = Vec::new();
    for analyst in 0..spec.n_analysts {
        let mut q = Query::initial(&mut rng);
        for version in 0..spec.versions_per_analyst {
            if version > 0 {
                q.revise(&spec.mix, spec.targets_per_plan, &mut rng);
            }
            versions.push(PlanVersion {
                name: version_name(analyst, version),
                analyst,
                version,
                plan: q.to_plan()?,
            });
        }
    }
    let mut catalog = Catalog::new();
    for v in versions.iter().filter(|v| v.version + 1 < spec.versions_per_analyst) {
        let ap = annotate(&v.plan, &registry, constants)?;
        catalog = harvest_views(&ap, &catalog, &v.name);
    }
    if catalog.len() > spec.catalog_size {
        let mut keep: Vec<usize> = (0..catalog.len()).collect();
        keep.shuffle(&mut rng);
        keep.truncate(spec.catalog_size);
        keep.sort_unstable();
        let mut i = 0;
        catalog.retain(|_| {
            i += 1;
            keep.binary_search(&(i - 1)).is_ok()
        });
    }
    Ok(Workload {
        spec: spec.clone(),
        versions,
        catalog,
        registry,
    })
}
