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
use std::process::{Command, Output};

fn bfr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bfr")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fork(file: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures/fork")
        .join(file)
        .to_string_lossy()
        .into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scripted_rewrite_and_oracle_agree_on_the_fork() {
    for (cands, cost) in [("search_order.jsonl", "10"), ("composition.jsonl", "5")] {
        for algo in ["bfr", "dp"] {
            let o = bfr(&[
                "rewrite",
                "--algo",
                algo,
                "--plan",
                &fork("plan.json"),
                "--candidates",
                &fork(cands),
            ]);
            assert!(o.status.success());
            assert_eq!(stdout(&o).lines().next().unwrap(), format!("cost {cost}"));
        }
        let o = bfr(&["oracle", "--plan", &fork("plan.json"), "--candidates", &fork(cands)]);
        assert_eq!(stdout(&o).trim(), format!("optimal {cost}"));
    }
}

#[test]
fn rewrite_writes_trace_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let (t, m) = (dir.path().join("t.txt"), dir.path().join("m.csv"));
    let o = bfr(&[
        "rewrite",
        "--plan",
        &fork("plan.json"),
        "--candidates",
        &fork("search_order.jsonl"),
        "--trace",
        s(&t),
        "--metrics-out",
        s(&m),
    ]);
    assert!(o.status.success());
    let trace = std::fs::read_to_string(t).unwrap();
    assert_eq!(
        trace.lines().next().unwrap(),
        "REFINE target=1 view=a optcost=1 result=4"
    );
    assert_eq!(
        trace.lines().last().unwrap(),
        "REFINE target=1 view=d optcost=3 result=none"
    );
    let csv = std::fs::read_to_string(m).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "instance_id,algo,candidates_considered,refine_attempts,original_cost,rewrite_cost,improvement_pct,wall_time_ms,violations"
    );
    assert!(lines.next().unwrap().starts_with("plan,bfr,6,4,13.0,10.0,"));
}

#[test]
fn syntactic_needs_annotations() {
    let o = bfr(&[
        "rewrite",
        "--algo",
        "syntactic",
        "--plan",
        &fork("plan.json"),
        "--candidates",
        &fork("composition.jsonl"),
    ]);
    assert!(!o.status.success());
    assert!(!o.stderr.is_empty());
}

#[test]
fn missing_files_fail_cleanly() {
    let o = bfr(&["rewrite", "--plan", "/nonexistent/plan.json"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonexistent"));
}

/// gen, then harvest an older version into a fresh catalog, rewrite the
/// newest version against it, check the oracle and reclaim storage.
#[test]
fn pipeline_over_generated_files() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w");
    let o = bfr(&["gen", "--seed", "4", "--analysts", "2", "--out", s(&w)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let udfs = w.join("udfs.json");
    let plans: Vec<PathBuf> = {
        let mut v: Vec<PathBuf> = std::fs::read_dir(w.join("plans"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        v.sort();
        v
    };
    assert_eq!(plans.len(), 8);
    let catalog = dir.path().join("catalog.jsonl");
    for p in &plans[..3] {
        let o = bfr(&["harvest", "--plan", s(p), "--udfs", s(&udfs), "--catalog", s(&catalog)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let newest = s(&plans[3]);
    let lang = [
        "--lang-udf",
        "SENTIMENT",
        "--lang-udf",
        "CATEGORY",
        "--lang-udf",
        "AFFINITY",
    ];
    let mut costs = Vec::new();
    for algo in ["bfr", "dp", "syntactic"] {
        let mut args = vec![
            "rewrite",
            "--algo",
            algo,
            "--plan",
            newest,
            "--udfs",
            s(&udfs),
            "--catalog",
            s(&catalog),
        ];
        args.extend(lang);
        let o = bfr(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        costs.push(stdout(&o).lines().next().unwrap().to_string());
    }
    assert_eq!(costs[0], costs[1]);
    let mut args = vec!["oracle", "--plan", newest, "--udfs", s(&udfs), "--catalog", s(&catalog)];
    args.extend(lang);
    let o = bfr(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        stdout(&o).split_whitespace().nth(1).unwrap(),
        costs[0].strip_prefix("cost ").unwrap()
    );

    let left = dir.path().join("left.jsonl");
    let o = bfr(&[
        "reclaim",
        "--catalog",
        s(&catalog),
        "--fraction",
        "1",
        "--out",
        s(&left),
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(left).unwrap(), "");
}

#[test]
fn bench_emits_one_row_per_instance_and_algo() {
    let dir = tempfile::tempdir().unwrap();
    let (m, plot) = (dir.path().join("m.csv"), dir.path().join("plot.csv"));
    let o = bfr(&[
        "bench",
        "--seed",
        "2",
        "--seeds",
        "2",
        "--analysts",
        "3",
        "--all-algos",
        "--metrics-out",
        s(&m),
        "--plot-data",
        s(&plot),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(&m).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 2 * 3 * 3);
    for pair in rows.chunks(3) {
        assert_eq!((&pair[0][1], &pair[1][1], &pair[2][1]), ("bfr", "dp", "syntactic"));
        assert_eq!(pair[0][5], pair[1][5], "bfr and dp disagree");
        assert_eq!(&pair[0][8], "0");
    }
    assert!(std::fs::read_to_string(plot).unwrap().starts_with("catalog_size,algo,"));
}

#[test]
fn bad_mix_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = bfr(&["gen", "--mix", "0.5,0.5,0.5,0.5", "--out", s(dir.path())]);
    assert!(!o.status.success());
}
