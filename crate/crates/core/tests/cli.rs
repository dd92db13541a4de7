use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures")
}

fn config() -> String {
    fixtures().join("config.toml").display().to_string()
}

fn convrel(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_convrel"));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("CONVREL_")) {
        cmd.env_remove(k);
    }
    cmd.envs(env.iter().copied()).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let o = convrel(args, &[]);
    assert!(o.status.success(), "convrel {args:?} failed:\n{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn retrieve_writes_trec_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fu.run");
    ok(&["--config", &config(), "--strategy", "FU", "--scorer", "bm25", "--out", s(&out), "retrieve", "--depth", "10"]);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut per_query: BTreeMap<&str, usize> = BTreeMap::new();
    for line in text.lines() {
        let cols: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(cols.len(), 6);
        assert_eq!((cols[1], cols[5]), ("Q0", "FU_bm25"));
        let n = per_query.entry(cols[0]).or_default();
        *n += 1;
        assert_eq!(cols[3], n.to_string());
    }
    // a query matching fewer than ten passages returns fewer lines
    assert_eq!(per_query.len(), 75);
    assert!(per_query.values().all(|&n| n <= 10));
    assert!(per_query.values().filter(|&&n| n == 10).count() > 60);
}

#[test]
fn several_runs_go_to_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    ok(&["--config", &config(), "--strategy", "Orig,AU", "--scorer", "ql", "--scorer", "dfr", "--out", s(&out), "retrieve"]);
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["AU_dfr.run", "AU_ql.run", "Orig_dfr.run", "Orig_ql.run"]);
}

#[test]
fn persisted_index_gives_same_run() {
    let dir = tempfile::tempdir().unwrap();
    let idx = dir.path().join("fixture.idx");
    ok(&["--config", &config(), "--out", s(&idx), "index"]);
    let a = dir.path().join("a.run");
    let b = dir.path().join("b.run");
    ok(&["--config", &config(), "--strategy", "FPU", "--scorer", "ql", "--out", s(&a), "retrieve"]);
    ok(&["--config", &config(), "--index", s(&idx), "--strategy", "FPU", "--scorer", "ql", "--out", s(&b), "retrieve"]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

fn read_metrics(path: &Path, skip_cols: usize) -> BTreeMap<String, Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').skip(skip_cols).collect();
            (c[0].to_string(), c[1..].iter().map(|v| v.parse().unwrap()).collect())
        })
        .collect()
}

#[test]
fn evaluate_matches_reference_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("metrics.csv");
    let run = fixtures().join("sample.run");
    ok(&["--config", &config(), "--out", s(&out), "evaluate", "--run", s(&run)]);
    let header = std::fs::read_to_string(&out).unwrap().lines().next().unwrap().to_lowercase();
    let want_header = std::fs::read_to_string(fixtures().join("sample_metrics.csv")).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, format!("run,{want_header}"));
    let got = read_metrics(&out, 1);
    let want = read_metrics(&fixtures().join("sample_metrics.csv"), 0);
    assert_eq!(got.len(), want.len());
    for (qid, w) in &want {
        for (g, w) in got[qid].iter().zip(w) {
            assert!((g - w).abs() < 1e-6, "{qid}: {g} vs {w}");
        }
    }
}

#[test]
fn report_emits_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    ok(&["--config", &config(), "--out", s(&out), "report", "--tables", "3", "4", "5"]);
    let read = |name: &str| std::fs::read_to_string(out.join(name)).unwrap();
    let t3 = read("table3.csv");
    assert!(t3.starts_with("predictor,precision,recall,f1"));
    assert!(t3.contains("\nAllPrevUtterances,"));
    let all_prev: Vec<&str> = t3.lines().find(|l| l.starts_with("AllPrevUtterances")).unwrap().split(',').collect();
    assert_eq!(all_prev[2], "1.000000");
    let t4 = read("table4.csv");
    // 3 scorers × 7 strategies × 8 metrics, one value per row
    assert!(t4.starts_with("model,strategy,metric,value,superscripts,bold\n"));
    assert_eq!(t4.lines().count(), 1 + 3 * 7 * 8);
    assert!(read("table4.txt").contains("Oracle"));
    let t5 = read("table5.csv");
    assert!(t5.starts_with("run,threshold,precision,recall,f1,map,ndcg@20,p@20\n"));
    assert_eq!(t5.lines().count(), 4);
}

#[test]
fn gold_predictions_reproduce_oracle_queries() {
    let dir = tempfile::tempdir().unwrap();
    let gold = fixtures().join("castur.csv");
    let pru = dir.path().join("pru.tsv");
    let oracle = dir.path().join("oracle.tsv");
    ok(&["--config", &config(), "--strategy", "PrU", "--out", s(&pru), "reformulate", "--predictions", s(&gold)]);
    ok(&["--config", &config(), "--strategy", "Oracle", "--out", s(&oracle), "reformulate"]);
    let strip = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| {
                let c: Vec<&str> = l.splitn(4, '\t').collect();
                format!("{}\t{}\t{}", c[0], c[1], c[3])
            })
            .collect()
    };
    assert_eq!(strip(&pru).len(), 75);
    assert_eq!(strip(&pru), strip(&oracle));
}

#[test]
fn predict_writes_every_turn() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pred.csv");
    let o = ok(&["--config", &config(), "--out", s(&out), "predict", "--target", "R"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("chosen for R on dev"));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 1 + 75);
}

#[test]
fn analyze_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let figs = dir.path().join("figs");
    let o = ok(&["--config", &config(), "--plot-data", s(&figs), "analyze"]);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["basic"]["turns"], 75);
    for n in 2..=9 {
        assert!(figs.join(format!("fig{n}.csv")).exists(), "fig{n}");
        assert!(figs.join(format!("fig{n}.json")).exists(), "fig{n}");
    }
}

#[test]
fn environment_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.run");
    let args = ["--config", &config(), "--strategy", "Orig", "--scorer", "bm25", "--out", s(&out), "retrieve"];
    let o = convrel(&args, &[("CONVREL_RETRIEVAL__DEPTH", "3")]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().all(|l| ["1", "2", "3"].contains(&l.split(' ').nth(3).unwrap())));
    assert!(text.lines().any(|l| l.split(' ').nth(3) == Some("3")));
    let o = convrel(&args, &[("CONVREL_RETRIEVAL__DEPHT", "3")]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("depht"));
}

#[test]
fn missing_inputs_fail_cleanly() {
    let o = convrel(&["--topics", "/nonexistent/topics.json", "analyze"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/topics.json"));
}
