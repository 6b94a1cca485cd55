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

//! Statistics propagation and the map/shuffle/reduce cost function.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::annotation::{AfkAnnotation, AfkOp};
use crate::error::{Error, Result};
use crate::udf::{LocalFunction, Phase};

/// Row count and width of a data set, with optional per-key-set distinct
/// ratios and per-attribute selectivities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub row_count: f64,
    pub row_width_bytes: f64,
    /// Keyed by comma-joined sorted key names.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub distinct_ratio: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub selectivity: BTreeMap<String, f64>,
}

impl Stats {
    pub fn new(row_count: f64, row_width_bytes: f64) -> Self {
        Self {
            row_count,
            row_width_bytes,
            distinct_ratio: BTreeMap::new(),
            selectivity: BTreeMap::new(),
        }
    }

    pub fn bytes(&self) -> f64 {
        self.row_count * self.row_width_bytes
    }

    pub fn key_label(keys: &BTreeSet<String>) -> String {
        keys.iter().map(String::as_str).collect::<Vec<_>>().join(",")
    }

    pub fn distinct_ratio_for(&self, keys: &BTreeSet<String>, c: &CostConstants) -> f64 {
        self.distinct_ratio
            .get(&Self::key_label(keys))
            .copied()
            .unwrap_or(c.default_distinct_ratio)
    }

    pub fn selectivity_for(&self, attr: &str, c: &CostConstants) -> f64 {
        self.selectivity.get(attr).copied().unwrap_or(c.default_selectivity)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.row_count >= 0.0) || !(self.row_width_bytes > 0.0) {
            return Err(Error::Invalid(format!(
                "stats need row_count >= 0 and row_width_bytes > 0, got {} and {}",
                self.row_count, self.row_width_bytes
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Filter,
    Project,
    Add,
    Group,
    Aggregate,
    Join,
}

fn default_op_base_cost() -> BTreeMap<OpKind, f64> {
    BTreeMap::from([
        (OpKind::Filter, 0.1),
        (OpKind::Project, 0.05),
        (OpKind::Add, 0.5),
        (OpKind::Group, 0.5),
        (OpKind::Aggregate, 0.6),
        (OpKind::Join, 1.0),
    ])
}

/// Per-byte weights of the five job phases, per-operation base costs and
/// estimation defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConstants {
    pub c_read: f64,
    pub c_sort: f64,
    pub c_transfer: f64,
    pub c_reduce: f64,
    pub c_write: f64,
    pub op_base_cost: BTreeMap<OpKind, f64>,
    pub default_selectivity: f64,
    pub default_distinct_ratio: f64,
}

impl Default for CostConstants {
    fn default() -> Self {
        Self {
            c_read: 1.0,
            c_sort: 0.5,
            c_transfer: 1.0,
            c_reduce: 0.5,
            c_write: 2.0,
            op_base_cost: default_op_base_cost(),
            default_selectivity: 0.1,
            default_distinct_ratio: 0.1,
        }
    }
}

impl CostConstants {
    /// All weights set to one.
    pub fn unit() -> Self {
        Self {
            c_read: 1.0,
            c_sort: 1.0,
            c_transfer: 1.0,
            c_reduce: 1.0,
            c_write: 1.0,
            op_base_cost: default_op_base_cost().into_keys().map(|k| (k, 1.0)).collect(),
            ..Self::default()
        }
    }

    pub fn base(&self, kind: OpKind) -> f64 {
        self.op_base_cost.get(&kind).copied().unwrap_or(1.0)
    }

    /// Per-byte cost of moving data through a shuffle.
    pub fn shuffle_weight(&self) -> f64 {
        self.c_sort + self.c_transfer + self.c_reduce
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&crate::error::read_file(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [self.c_read, self.c_sort, self.c_transfer, self.c_reduce, self.c_write];
        let ratios = [self.default_selectivity, self.default_distinct_ratio];
        if weights.iter().chain(self.op_base_cost.values()).any(|w| !(*w > 0.0))
            || ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0))
        {
            return Err(Error::Invalid(
                "cost constants must be positive, ratios in (0,1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub cm: f64,
    pub cs: f64,
    pub ct: f64,
    pub cr: f64,
    pub cw: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.cm + self.cs + self.ct + self.cr + self.cw
    }

    fn add(&mut self, o: &CostBreakdown) {
        self.cm += o.cm;
        self.cs += o.cs;
        self.ct += o.ct;
        self.cr += o.cr;
        self.cw += o.cw;
    }
}

/// Stats of `annotation` computed directly from the stats of its unfiltered,
/// ungrouped base.
pub fn estimate_stats(annotation: &AfkAnnotation, base: &Stats, c: &CostConstants) -> Stats {
    let mut out = base.clone();
    for p in annotation.filters.iter() {
        out.row_count *= base.selectivity_for(&p.attr, c);
    }
    if !annotation.keys.is_empty() {
        out.row_count *= base.distinct_ratio_for(&annotation.keys, c);
    }
    out
}

/// Stats after one transform turned `before` into `after`. Each new canonical
/// predicate applies its selectivity; a change of grouping applies the ratio
/// between the new and old key sets; width follows the attribute count.
pub fn transition_stats(before: &AfkAnnotation, after: &AfkAnnotation, stats: &Stats, c: &CostConstants) -> Stats {
    let mut out = stats.clone();
    for p in after.filters.difference(&before.filters) {
        out.row_count *= stats.selectivity_for(&p.attr, c);
    }
    if after.keys != before.keys && !after.keys.is_empty() {
        let new = stats.distinct_ratio_for(&after.keys, c);
        let ratio = if !before.keys.is_empty() && after.keys.is_subset(&before.keys) {
            new / stats.distinct_ratio_for(&before.keys, c)
        } else {
            new
        };
        out.row_count *= ratio.min(1.0);
    }
    let (nb, na) = (before.attrs.len(), after.attrs.len());
    if nb > 0 && na > 0 && na != nb {
        out.row_width_bytes = stats.row_width_bytes * na as f64 / nb as f64;
    }
    out
}

/// Cost of one operation of the given kind over `stats`.
pub fn op_cost(kind: OpKind, stats: &Stats, scalar: f64, c: &CostConstants) -> f64 {
    scalar * c.base(kind) * stats.bytes()
}

/// Cost of a local function: the cheapest of its applicable operations,
/// since performing a set of operations costs at least its cheapest member.
pub fn local_function_cost(
    lf: &LocalFunction,
    input: &AfkAnnotation,
    stats: &Stats,
    scalar: f64,
    c: &CostConstants,
) -> Result<f64> {
    lf.ops
        .iter()
        .filter(|op| input.apply(op, Some("_")).is_ok())
        .map(|op| op_cost(op.kind(), stats, scalar, c))
        .min_by(f64::total_cmp)
        .ok_or(Error::NoApplicableOp)
}

/// Cost of executing `ops` one after another, propagating stats in between.
pub fn sequence_cost(ops: &[AfkOp], input: &AfkAnnotation, stats: &Stats, c: &CostConstants) -> Result<f64> {
    let (mut ann, mut st, mut total) = (input.clone(), stats.clone(), 0.0);
    for op in ops {
        total += op_cost(op.kind(), &st, 1.0, c);
        let next = ann.apply(op, Some("_"))?;
        st = transition_stats(&ann, &next, &st, c);
        ann = next;
    }
    Ok(total)
}

/// Local functions run by one plan node. A new MR round starts whenever a
/// map-phase function follows a reduce-phase one.
#[derive(Clone, Debug, PartialEq)]
pub struct Job {
    pub udf_name: Option<String>,
    pub scalar: f64,
    pub local_functions: Vec<LocalFunction>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobEstimate {
    pub breakdown: CostBreakdown,
    pub output: AfkAnnotation,
    pub stats: Stats,
}

/// Estimates the five phase costs of `job` over an input and returns the
/// output annotation and stats alongside.
pub fn job_cost(job: &Job, input: &AfkAnnotation, stats: &Stats, c: &CostConstants) -> Result<JobEstimate> {
    let mut total = CostBreakdown::default();
    let mut round = CostBreakdown::default();
    let (mut ann, mut st) = (input.clone(), stats.clone());
    let mut in_reduce = false;
    round.cm = c.c_read * st.bytes();
    for lf in &job.local_functions {
        match lf.phase {
            Phase::Map if in_reduce => {
                round.cw = c.c_write * st.bytes();
                total.add(&round);
                round = CostBreakdown {
                    cm: c.c_read * st.bytes(),
                    ..CostBreakdown::default()
                };
                in_reduce = false;
            }
            Phase::Reduce if !in_reduce => {
                let shuffled = st.bytes();
                round.cs = c.c_sort * shuffled;
                round.ct = c.c_transfer * shuffled;
                round.cr = c.c_reduce * shuffled;
                in_reduce = true;
            }
            _ => {}
        }
        let (mut next_ann, mut next_st) = (ann.clone(), st.clone());
        for op in &lf.ops {
            let next = next_ann.apply(op, job.udf_name.as_deref())?;
            next_st = transition_stats(&next_ann, &next, &next_st, c);
            next_ann = next;
        }
        let lf_cost = local_function_cost(lf, &ann, &st, job.scalar, c)?;
        if in_reduce {
            round.cr += lf_cost;
        } else {
            round.cm += lf_cost;
        }
        (ann, st) = (next_ann, next_st);
    }
    round.cw = c.c_write * st.bytes();
    total.add(&round);
    Ok(JobEstimate {
        breakdown: total,
        output: ann,
        stats: st,
    })
}
