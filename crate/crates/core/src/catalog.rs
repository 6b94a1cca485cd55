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

//! The store of materialized views: JSON-lines I/O, harvesting the outputs
//! of executed plans, and storage reclamation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotation::{AfkAnnotation, Attribute};
use crate::context::RewriteContext;
use crate::cost::Stats;
use crate::error::{Error, Result};
use crate::optcost::CandidateView;
use crate::plan::AnnotatedPlan;
use crate::predicate::Filters;
use crate::semantics::equivalent;

/// A stored view and what is known about its contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ViewRecord", into = "ViewRecord")]
pub struct View {
    pub id: String,
    pub annotation: AfkAnnotation,
    pub stats: Stats,
    pub storage_bytes: f64,
}

#[derive(Clone, Serialize, Deserialize)]
struct ViewRecord {
    id: String,
    attrs: Vec<Attribute>,
    #[serde(default)]
    filters: Filters,
    #[serde(default)]
    keys: BTreeSet<String>,
    row_count: f64,
    row_width_bytes: f64,
    #[serde(default)]
    storage_bytes: Option<f64>,
    #[serde(default)]
    sources: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    distinct_ratio: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    selectivity: BTreeMap<String, f64>,
}

impl TryFrom<ViewRecord> for View {
    type Error = Error;

    fn try_from(r: ViewRecord) -> Result<Self> {
        let mut attrs = BTreeMap::new();
        for a in r.attrs {
            if attrs.insert(a.name.clone(), a).is_some() {
                return Err(Error::Invalid(format!("view `{}` repeats an attribute", r.id)));
            }
        }
        let annotation = AfkAnnotation {
            attrs,
            filters: r.filters,
            keys: r.keys,
            sources: r.sources,
        };
        annotation.check_invariant()?;
        let stats = Stats {
            row_count: r.row_count,
            row_width_bytes: r.row_width_bytes,
            distinct_ratio: r.distinct_ratio,
            selectivity: r.selectivity,
        };
        stats.validate()?;
        Ok(View {
            storage_bytes: r.storage_bytes.unwrap_or_else(|| stats.bytes()),
            id: r.id,
            annotation,
            stats,
        })
    }
}

impl From<View> for ViewRecord {
    fn from(v: View) -> Self {
        ViewRecord {
            id: v.id,
            attrs: v.annotation.attrs.into_values().collect(),
            filters: v.annotation.filters,
            keys: v.annotation.keys,
            row_count: v.stats.row_count,
            row_width_bytes: v.stats.row_width_bytes,
            storage_bytes: Some(v.storage_bytes),
            sources: v.annotation.sources,
            distinct_ratio: v.stats.distinct_ratio,
            selectivity: v.stats.selectivity,
        }
    }
}

impl View {
    pub fn new(id: impl Into<String>, annotation: AfkAnnotation, stats: Stats) -> Self {
        Self {
            id: id.into(),
            storage_bytes: stats.bytes(),
            annotation,
            stats,
        }
    }

    pub fn candidate(&self, ctx: &RewriteContext) -> CandidateView {
        CandidateView::materialized(self.id.clone(), self.annotation.clone(), self.stats.clone(), ctx)
    }
}

/// Views with unique ids, in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Catalog {
    views: Vec<View>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_views(views: impl IntoIterator<Item = View>) -> Result<Self> {
        let mut c = Self::new();
        for v in views {
            c.insert(v)?;
        }
        Ok(c)
    }

    pub fn insert(&mut self, view: View) -> Result<()> {
        if self.get(&view.id).is_some() {
            return Err(Error::Invalid(format!("duplicate view id `{}`", view.id)));
        }
        self.views.push(view);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&View> {
        self.views.iter().find(|v| v.id == id)
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &View> {
        self.views.iter()
    }

    pub fn total_storage(&self) -> f64 {
        self.views.iter().fold(0.0, |acc, v| acc + v.storage_bytes)
    }

    pub fn retain(&mut self, keep: impl FnMut(&View) -> bool) {
        self.views.retain(keep);
    }

    pub fn candidates(&self, ctx: &RewriteContext) -> Vec<CandidateView> {
        self.views.iter().map(|v| v.candidate(ctx)).collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut c = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let view: View = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            c.insert(view).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(c)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for v in &self.views {
            out.push_str(&serde_json::to_string(v).expect("views serialize"));
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_jsonl(&crate::error::read_file(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::error::write_file(path, self.to_jsonl())?;
        Ok(())
    }
}

/// Retains every node output of an executed plan as a view named
/// `<prefix>.n<node id>`, skipping outputs identical to a stored view.
pub fn harvest_views(plan: &AnnotatedPlan, catalog: &Catalog, prefix: &str) -> Catalog {
    let mut out = catalog.clone();
    for (i, ann) in plan.outputs.iter().enumerate() {
        if out.iter().any(|v| equivalent(&v.annotation, ann)) {
            continue;
        }
        let base = format!("{prefix}.n{}", plan.plan.id(i));
        let mut id = base.clone();
        let mut k = 1;
        while out.get(&id).is_some() {
            k += 1;
            id = format!("{base}#{k}");
        }
        out.views.push(View::new(id, ann.clone(), plan.stats[i].clone()));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReclaimPolicy {
    /// Drop views in random order until the requested share of storage is freed.
    Random { fraction: f64, seed: u64 },
    /// Drop every view identical to one of these annotations.
    DropIdentical(Vec<AfkAnnotation>),
}

pub fn reclaim_storage(catalog: &Catalog, policy: &ReclaimPolicy) -> Result<Catalog> {
    let mut out = catalog.clone();
    match policy {
        ReclaimPolicy::Random { fraction, seed } => {
            if !(0.0..=1.0).contains(fraction) {
                return Err(Error::Invalid(format!("reclaim fraction {fraction} is outside [0, 1]")));
            }
            let goal = fraction * catalog.total_storage();
            let mut order: Vec<usize> = (0..catalog.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let mut freed = 0.0;
            let mut dropped = BTreeSet::new();
            for i in order {
                if freed >= goal && *fraction < 1.0 {
                    break;
                }
                freed += catalog.views[i].storage_bytes;
                dropped.insert(i);
            }
            let mut idx = 0;
            out.views.retain(|_| {
                idx += 1;
                !dropped.contains(&(idx - 1))
            });
        }
        ReclaimPolicy::DropIdentical(targets) => {
            out.retain(|v| !targets.iter().any(|t| equivalent(t, &v.annotation)));
        }
    }
    Ok(out)
}
