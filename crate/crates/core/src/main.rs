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

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bfr::bench::{
    plot_points, run_bench, save_metrics, save_plot_points, traces, workload_context, workload_instances, MetricsRow,
};
use bfr::catalog::{harvest_views, reclaim_storage, Catalog, ReclaimPolicy};
use bfr::context::{RewriteContext, RewriteLanguage};
use bfr::cost::CostConstants;
use bfr::error::{Error, Result};
use bfr::oracle::{oracle_optimal, oracle_scripted, OracleLimits};
use bfr::plan::{annotate, AnnotatedPlan, Plan};
use bfr::udf::UdfRegistry;
use bfr::workflow::{load_candidates, optimize, scripted_rewrite, Algo, Outcome};
use bfr::workload::{gen_workload, RevisionMix, Workload, WorkloadSpec};

#[derive(Parser)]
#[command(name = "bfr", version, about = "Rewrite query plans against stored views")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the cheapest rewrite of one plan.
    Rewrite {
        #[command(flatten)]
        common: Common,
        /// Replay scripted candidates (JSON lines) instead of searching a catalog.
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
    /// Run algorithms over generated or saved workloads and write metrics.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        shape: Shape,
        /// Read a workload saved by `gen` instead of generating one.
        #[arg(long)]
        workload: Option<PathBuf>,
        /// Number of consecutive seeds to generate workloads for.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Run every algorithm, not only --algo.
        #[arg(long)]
        all_algos: bool,
        /// Write effort against catalog size, one row per size and algorithm.
        #[arg(long)]
        plot_data: Option<PathBuf>,
        /// Write zero wall times so repeated runs compare byte for byte.
        #[arg(long)]
        no_timing: bool,
    },
    /// Generate a workload into a directory.
    Gen {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        shape: Shape,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add the outputs of a plan to a catalog.
    Harvest {
        #[command(flatten)]
        common: Common,
        /// Prefix of the new view ids; defaults to the plan file stem.
        #[arg(long)]
        prefix: Option<String>,
        /// Defaults to overwriting --catalog.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drop views from a catalog.
    Reclaim {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Policy::Random)]
        policy: Policy,
        /// Share of storage to free under the random policy.
        #[arg(long, default_value_t = 0.0)]
        fraction: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact optimum of a small instance by exhaustive search.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        max_relevant: usize,
        /// Candidate list with known rewrite costs instead of a catalog.
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    udfs: Option<PathBuf>,
    #[arg(long)]
    constants: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AlgoArg::Bfr)]
    algo: AlgoArg,
    #[arg(long, default_value_t = 4)]
    max_join_arity: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    /// UDF the rewrite language may use; repeatable.
    #[arg(long = "lang-udf")]
    lang_udfs: Vec<String>,
}

#[derive(Args)]
struct Shape {
    #[arg(long, default_value_t = 8)]
    analysts: usize,
    #[arg(long, default_value_t = 4)]
    versions: usize,
    #[arg(long, default_value_t = 6)]
    targets: usize,
    #[arg(long, default_value_t = 30)]
    catalog_size: usize,
    /// Weights of parameter change, add source, add UDF and add subgoal.
    #[arg(long, num_args = 4, value_delimiter = ',')]
    mix: Option<Vec<f64>>,
}

impl Shape {
    fn spec(&self, seed: u64) -> WorkloadSpec {
        let mix = self.mix.as_ref().map_or_else(RevisionMix::default, |m| RevisionMix {
            parameter_change: m[0],
            add_source: m[1],
            add_udf: m[2],
            add_subgoal: m[3],
        });
        WorkloadSpec {
            seed,
            n_analysts: self.analysts,
            versions_per_analyst: self.versions,
            targets_per_plan: self.targets,
            catalog_size: self.catalog_size,
            mix,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Bfr,
    Dp,
    Syntactic,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Bfr => Algo::Bfr,
            AlgoArg::Dp => Algo::Dp,
            AlgoArg::Syntactic => Algo::Syntactic,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Policy {
    Random,
    DropIdentical,
}

impl Common {
    fn constants(&self) -> Result<CostConstants> {
        self.constants
            .as_deref()
            .map_or_else(|| Ok(CostConstants::default()), CostConstants::load)
    }

    fn registry(&self) -> Result<UdfRegistry> {
        self.udfs
            .as_deref()
            .map_or_else(|| Ok(UdfRegistry::new()), UdfRegistry::load)
    }

    fn context(&self) -> Result<RewriteContext> {
        let mut lang = RewriteLanguage::default();
        for u in &self.lang_udfs {
            lang = lang.with_udf(u.clone());
        }
        let mut ctx = RewriteContext::new(self.constants()?, self.registry()?, lang);
        ctx.max_join_arity = self.max_join_arity;
        Ok(ctx)
    }

    fn plan_path(&self) -> Result<&Path> {
        self.plan
            .as_deref()
            .ok_or_else(|| Error::Invalid("--plan is required".into()))
    }

    fn catalog(&self) -> Result<Catalog> {
        match &self.catalog {
            Some(p) if p.exists() => Catalog::load(p),
            _ => Ok(Catalog::new()),
        }
    }

    fn annotated(&self, ctx: &RewriteContext) -> Result<AnnotatedPlan> {
        annotate(&Plan::load(self.plan_path()?)?, &ctx.registry, &ctx.constants)
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "plan".into(), |s| s.to_string_lossy().into_owned())
}

fn write_trace(path: &Option<PathBuf>, text: &str) -> Result<()> {
    if let Some(p) = path {
        bfr::error::write_file(p, text)?;
    }
    Ok(())
}

fn report(out: &Outcome) {
    print!("{}", out.best);
    let m = &out.metrics;
    println!(
        "original {} rewritten {} improvement {:.2}% candidates {} refines {} violations {}",
        m.original_cost,
        m.rewrite_cost,
        m.improvement_pct(),
        m.candidates_considered,
        m.refine_attempts,
        m.violations
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Rewrite { common, candidates } => {
            let algo = Algo::from(common.algo);
            let plan_path = common.plan_path()?;
            let out = match &candidates {
                Some(c) => scripted_rewrite(&Plan::load(plan_path)?, &load_candidates(c)?, algo)?,
                None => {
                    let ctx = common.context()?;
                    let ap = common.annotated(&ctx)?;
                    optimize(&ap, &common.catalog()?.candidates(&ctx), &ctx, algo)
                }
            };
            report(&out);
            write_trace(
                &common.trace,
                &out.trace.iter().map(|l| format!("{l}\n")).collect::<String>(),
            )?;
            if let Some(p) = &common.metrics_out {
                save_metrics([MetricsRow::new(&stem(plan_path), algo, &out, true)], p)?;
            }
        }
        Command::Bench {
            common,
            shape,
            workload,
            seeds,
            all_algos,
            plot_data,
            no_timing,
        } => {
            let algos: Vec<Algo> = if all_algos {
                Algo::ALL.to_vec()
            } else {
                vec![common.algo.into()]
            };
            let base = common.context()?;
            let workloads: Vec<Workload> = match &workload {
                Some(dir) => vec![Workload::load(dir)?],
                None => (common.seed..common.seed + seeds)
                    .map(|s| gen_workload(&shape.spec(s), &base.constants))
                    .collect::<Result<_>>()?,
            };
            let mut runs = Vec::new();
            for w in &workloads {
                let ctx = workload_context(w, &base);
                let inst = workload_instances(w, &ctx)?;
                runs.extend(
                    run_bench(&inst, &algos, &ctx, !no_timing)
                        .into_iter()
                        .map(|r| (w.catalog.len(), r)),
                );
            }
            let only: Vec<_> = runs.iter().map(|(_, r)| r.clone()).collect();
            let rows: Vec<MetricsRow> = only.iter().map(|r| r.row.clone()).collect();
            match &common.metrics_out {
                Some(p) => save_metrics(rows.clone(), p)?,
                None => bfr::bench::write_metrics(rows.clone(), std::io::stdout())?,
            }
            write_trace(&common.trace, &traces(&only))?;
            if let Some(p) = &plot_data {
                save_plot_points(&plot_points(&runs), p)?;
            }
            eprintln!("{} runs over {} workload(s)", rows.len(), workloads.len());
        }
        Command::Gen { common, shape, out } => {
            let w = gen_workload(&shape.spec(common.seed), &common.constants()?)?;
            w.save(&out)?;
            println!("{} plan versions, {} catalog views", w.versions.len(), w.catalog.len());
        }
        Command::Harvest { common, prefix, out } => {
            let ctx = common.context()?;
            let ap = common.annotated(&ctx)?;
            let before = common.catalog()?;
            let prefix = prefix.unwrap_or_else(|| stem(common.plan.as_deref().expect("checked")));
            let after = harvest_views(&ap, &before, &prefix);
            let dest = out
                .or(common.catalog.clone())
                .ok_or_else(|| Error::Invalid("--out or --catalog is required".into()))?;
            after.save(&dest)?;
            println!("{} new views, {} total", after.len() - before.len(), after.len());
        }
        Command::Reclaim {
            common,
            policy,
            fraction,
            out,
        } => {
            let cat = common.catalog()?;
            let policy = match policy {
                Policy::Random => ReclaimPolicy::Random {
                    fraction,
                    seed: common.seed,
                },
                Policy::DropIdentical => {
                    let ctx = common.context()?;
                    ReclaimPolicy::DropIdentical(common.annotated(&ctx)?.outputs)
                }
            };
            let left = reclaim_storage(&cat, &policy)?;
            let dest = out
                .or(common.catalog.clone())
                .ok_or_else(|| Error::Invalid("--out or --catalog is required".into()))?;
            left.save(&dest)?;
            println!("{} views dropped, {} kept", cat.len() - left.len(), left.len());
        }
        Command::Oracle {
            common,
            max_relevant,
            candidates,
        } => {
            let limits = OracleLimits {
                max_relevant,
                ..OracleLimits::default()
            };
            if let Some(c) = &candidates {
                let cost = oracle_scripted(&Plan::load(common.plan_path()?)?, &load_candidates(c)?, limits)?;
                println!("optimal {cost}");
                return Ok(());
            }
            let ctx = common.context()?;
            let ap = common.annotated(&ctx)?;
            let r = oracle_optimal(&ap, &common.catalog()?.candidates(&ctx), &ctx, limits)?;
            println!("optimal {} over {} candidates", r.cost, r.candidates);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
