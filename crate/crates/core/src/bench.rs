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

//! Benchmark runs: instances from generated workloads, every algorithm on
//! every instance, one CSV row per run.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::context::RewriteContext;
use crate::error::Result;
use crate::optcost::CandidateView;
use crate::plan::{annotate, AnnotatedPlan};
use crate::workflow::{optimize, Algo, Outcome};
use crate::workload::Workload;

/// A plan to rewrite and the views available to it.
#[derive(Clone, Debug)]
pub struct Instance {
    pub id: String,
    pub plan: AnnotatedPlan,
    pub views: Vec<CandidateView>,
}

/// A context whose rewrite language includes every UDF of the workload.
pub fn workload_context(w: &Workload, base: &RewriteContext) -> RewriteContext {
    let mut lang = base.lang.clone();
    for d in w.registry.iter() {
        lang = lang.with_udf(d.name.clone());
    }
    RewriteContext {
        constants: base.constants.clone(),
        registry: w.registry.clone(),
        lang,
        max_join_arity: base.max_join_arity,
        max_fix: base.max_fix,
    }
}

/// The newest version of each analyst's query against the workload catalog.
pub fn workload_instances(w: &Workload, ctx: &RewriteContext) -> Result<Vec<Instance>> {
    let views = w.catalog.candidates(ctx);
    w.latest()
        .map(|v| {
            Ok(Instance {
                id: format!("s{}-{}", w.spec.seed, v.name),
                plan: annotate(&v.plan, &ctx.registry, &ctx.constants)?,
                views: views.clone(),
            })
        })
        .collect()
}

/// One line of the metrics file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub instance_id: String,
    pub algo: Algo,
    pub candidates_considered: usize,
    pub refine_attempts: usize,
    pub original_cost: f64,
    pub rewrite_cost: f64,
    pub improvement_pct: f64,
    pub wall_time_ms: f64,
    pub violations: usize,
}

impl MetricsRow {
    pub fn new(instance_id: &str, algo: Algo, out: &Outcome, timing: bool) -> Self {
        let m = &out.metrics;
        Self {
            instance_id: instance_id.to_string(),
            algo,
            candidates_considered: m.candidates_considered,
            refine_attempts: m.refine_attempts,
            original_cost: m.original_cost,
            rewrite_cost: m.rewrite_cost,
            improvement_pct: m.improvement_pct(),
            wall_time_ms: if timing { m.wall_time_ms } else { 0.0 },
            violations: m.violations,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchRun {
    pub row: MetricsRow,
    pub outcome: Outcome,
}

/// Runs every algorithm on every instance, in parallel across runs. Rows
/// come back in instance order, then algorithm order. With `timing` off the
/// wall-time column is zero so that files compare byte for byte.
pub fn run_bench(instances: &[Instance], algos: &[Algo], ctx: &RewriteContext, timing: bool) -> Vec<BenchRun> {
    let jobs: Vec<(&Instance, Algo)> = instances
        .iter()
        .flat_map(|i| algos.iter().map(move |&a| (i, a)))
        .collect();
    jobs.par_iter()
        .map(|&(inst, algo)| {
            let outcome = optimize(&inst.plan, &inst.views, ctx, algo);
            BenchRun {
                row: MetricsRow::new(&inst.id, algo, &outcome, timing),
                outcome,
            }
        })
        .collect()
}

pub fn write_metrics<W: Write>(rows: impl IntoIterator<Item = MetricsRow>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_metrics(rows: impl IntoIterator<Item = MetricsRow>, path: &Path) -> Result<()> {
    write_metrics(rows, std::fs::File::create(path).map_err(crate::error::at(path))?)
}

/// Trace lines of every run, prefixed by instance and algorithm.
pub fn traces(runs: &[BenchRun]) -> String {
    let mut out = String::new();
    for r in runs {
        for line in &r.outcome.trace {
            out.push_str(&format!("{} {} {line}\n", r.row.instance_id, r.row.algo));
        }
    }
    out
}

/// One point of the search-effort against catalog-size series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotPoint {
    pub catalog_size: usize,
    pub algo: Algo,
    pub median_candidates: f64,
    pub median_refines: f64,
}

pub fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Medians over runs grouped by catalog size and algorithm.
pub fn plot_points(runs: &[(usize, BenchRun)]) -> Vec<PlotPoint> {
    let mut keys: Vec<(usize, Algo)> = runs.iter().map(|(s, r)| (*s, r.row.algo)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(size, algo)| {
            let sel = || runs.iter().filter(move |(s, r)| *s == size && r.row.algo == algo);
            PlotPoint {
                catalog_size: size,
                algo,
                median_candidates: median(
                    &mut sel()
                        .map(|(_, r)| r.row.candidates_considered as f64)
                        .collect::<Vec<_>>(),
                ),
                median_refines: median(&mut sel().map(|(_, r)| r.row.refine_attempts as f64).collect::<Vec<_>>()),
            }
        })
        .collect()
}

pub fn save_plot_points(points: &[PlotPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(std::fs::File::create(path).map_err(crate::error::at(path))?);
    for p in points {
        w.serialize(p).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}
