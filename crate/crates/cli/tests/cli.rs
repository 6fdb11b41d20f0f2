use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").canonicalize().unwrap()
}

/// Writes `body` as `config.toml` in a fresh directory.
fn config(body: &str) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("config.toml");
    let body = body.replace("@FIXTURES@", fixtures().to_str().unwrap());
    fs::write(&path, body).unwrap();
    (dir, path)
}

fn epiext(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epiext"))
        .arg(cmd)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn records(stdout: &str) -> Vec<serde_json::Value> {
    stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn by_method<'a>(recs: &'a [serde_json::Value], method: &str) -> &'a serde_json::Value {
    recs.iter().find(|r| r["method"] == method).unwrap()
}

fn airport_config(ratio: f64, extra: &str) -> String {
    format!(
        r#"
[graph]
path = "@FIXTURES@/synthetic_airports.txt"
top = 20

[infection]
beta = "const:2"
beta_int = "const:2"
ratio = {ratio}
{extra}
"#
    )
}

#[test]
fn classify_follows_the_ratio() {
    for (ratio, regime) in [(1.10, "FastExtinction"), (0.90, "LongLasting")] {
        let (dir, cfg) = config(&airport_config(ratio, ""));
        let out = ok(&epiext("classify", &cfg, &dir.path().join("out"), &[]));
        let recs = records(&out);
        assert_eq!(by_method(&recs, "GeneralSpectral")["regime"], regime);
        let saved = fs::read_to_string(dir.path().join("out/classify.jsonl")).unwrap();
        assert_eq!(saved, out);
    }
}

#[test]
fn asymmetric_gap_is_indeterminate_only_for_decoupled_bounds() {
    // ρ(G) = 2, the decoupled bounds are [2, 2.5]
    let (dir, cfg) = config(
        r#"
[graph]
path = "@FIXTURES@/asymmetric_gap.txt"
normalize = false

[infection]
beta = "const:1"
beta_int = "const:0"
delta = 2.25
"#,
    );
    let recs = records(&ok(&epiext("classify", &cfg, &dir.path().join("out"), &[])));
    let methods: Vec<&str> = recs.iter().map(|r| r["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["GeneralSpectral", "ScalarD", "DecoupledWeyl"]);
    assert_eq!(by_method(&recs, "GeneralSpectral")["regime"], "FastExtinction");
    assert_eq!(by_method(&recs, "DecoupledWeyl")["regime"], "Indeterminate");
    assert!((by_method(&recs, "GeneralSpectral")["threshold"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn symmetric_graph_gets_a_symmetric_record() {
    let (dir, cfg) = config(
        r#"
[graph]
path = "edges.txt"

[infection]
beta = "harmonic:3"
beta_int = "const:0.5"
delta = 1.0
"#,
    );
    fs::write(dir.path().join("edges.txt"), "a b 1\nb a 1\nb c 2\nc b 2\n").unwrap();
    let recs = records(&ok(&epiext("classify", &cfg, &dir.path().join("out"), &[])));
    assert_eq!(recs[0]["method"], "SymmetricSpectral");
    // β_∞ = 0, so only the within-locality rate counts
    assert!(recs.iter().all(|r| r["regime"] == "FastExtinction"));
}

#[test]
fn missing_graph_fails_with_a_message() {
    let (dir, cfg) = config(
        r#"
[graph]
path = "nowhere.txt"

[infection]
beta = "const:1"
beta_int = "const:1"
delta = 1.0
"#,
    );
    let o = epiext("classify", &cfg, &dir.path().join("out"), &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.txt"));
}

#[test]
fn unknown_keys_are_rejected() {
    let (dir, cfg) = config("[infection]\nbeta = \"const:1\"\nbeta_int = \"const:1\"\ndelta = 1.0\ncolour = 3\n");
    let o = epiext("classify", &cfg, &dir.path().join("out"), &[]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

const SIM: &str = r#"
[simulation]
runs = RUNS
n0 = 20
t_max = 30.0
grid_step = 0.5
seed = 11
population_cap = 2000
"#;

#[test]
fn every_run_above_threshold_is_recorded_as_extinct() {
    let (dir, cfg) = config(&airport_config(1.10, &SIM.replace("RUNS", "1000")));
    let out = dir.path().join("out");
    ok(&epiext("simulate", &cfg, &out, &[]));
    let (header, rows) = csv(&out.join("extinctions.csv"));
    assert_eq!(header, "run_id,t_extinct");
    assert_eq!(rows.len(), 1000);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 11);
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn forty_runs_trim_one_run_per_side() {
    let (dir, cfg) = config(&airport_config(1.0, &SIM.replace("RUNS", "40")));
    let out = dir.path().join("out");
    ok(&epiext("simulate", &cfg, &out, &[]));
    let (header, traj) = csv(&out.join("trajectories.csv"));
    assert_eq!(header, "t,run_id,total");
    let (header, summary) = csv(&out.join("summary.csv"));
    assert_eq!(header, "t,mean,lower95,upper95,survival_fraction");
    assert_eq!(traj.len(), 40 * summary.len());
    for row in &summary {
        let mut totals: Vec<u64> = traj.iter().filter(|r| r[0] == row[0]).map(|r| r[2].parse().unwrap()).collect();
        totals.sort_unstable();
        assert_eq!(totals.len(), 40);
        assert_eq!(row[2].parse::<u64>().unwrap(), totals[1], "t = {}", row[0]);
        assert_eq!(row[3].parse::<u64>().unwrap(), totals[38], "t = {}", row[0]);
        let mean = totals.iter().sum::<u64>() as f64 / 40.0;
        assert!((row[1].parse::<f64>().unwrap() - mean).abs() < 1e-9);
    }
}

#[test]
fn outputs_are_reproducible_and_seed_sensitive() {
    let (dir, cfg) = config(&airport_config(0.95, &SIM.replace("RUNS", "50")));
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        ok(&epiext("simulate", &cfg, &out, extra));
        ["trajectories.csv", "summary.csv", "extinctions.csv"].map(|f| fs::read(out.join(f)).unwrap())
    };
    let a = run("a", &[]);
    let b = run("b", &["--threads", "1"]);
    let c = run("c", &["--seed", "12"]);
    assert_eq!(a, b);
    assert_ne!(a[0], c[0]);
    let meta = fs::read_to_string(dir.path().join("c/meta.json")).unwrap();
    assert!(meta.contains("\"seed\": 12"));
}

#[test]
fn event_log_is_written_on_request() {
    let sim = SIM.replace("RUNS", "40") + "events = true\ninitial_node = \"b\"\n";
    let body = format!(
        "[graph]\npath = \"@FIXTURES@/asymmetric_gap.txt\"\n\n[infection]\nbeta = \"const:0.2\"\nbeta_int = \"const:0.2\"\ndelta = 2.0\n{sim}"
    );
    let (dir, cfg) = config(&body);
    let out = dir.path().join("out");
    ok(&epiext("simulate", &cfg, &out, &[]));
    let (header, events) = csv(&out.join("events.csv"));
    assert_eq!(header, "t,node_label,delta");
    let net: i64 = events.iter().map(|e| e[2].parse::<i64>().unwrap()).sum();
    assert_eq!(net, -20);
    assert!(events.iter().all(|e| (e[2] == "+1" || e[2] == "-1") && (e[1] == "a" || e[1] == "b")));
    let (_, traj) = csv(&out.join("trajectories.csv"));
    assert_eq!(traj[0], ["0", "0", "20"]);
}

#[test]
fn hitting_table_matches_the_closed_form() {
    let (dir, cfg) = config("[hitting]\ngamma = \"harmonic:5\"\ndelta = 1.0\nn_max = 10000\n");
    let out = dir.path().join("out");
    ok(&epiext("hitting", &cfg, &out, &[]));
    let (header, rows) = csv(&out.join("hitting.csv"));
    assert_eq!(header, "n,S_n,T_n,certified");
    assert_eq!(rows.len(), 10_000);
    let t: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    let exact = (5f64.exp() - 1.0) / 5.0;
    assert!((t[0] - exact).abs() < 1e-12 * exact);
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert!(rows.iter().all(|r| r[3] == "true"));
    // decimal strings carry far more digits than an f64
    assert!(rows[0][2].len() > 60);
}

#[test]
fn constant_rate_table_respects_the_log_envelope() {
    let (dir, cfg) = config("[hitting]\ngamma = \"const:0.5\"\ndelta = 1.0\nn_max = 2000\n");
    let out = dir.path().join("out");
    ok(&epiext("hitting", &cfg, &out, &[]));
    let (_, rows) = csv(&out.join("hitting.csv"));
    for r in rows {
        let (n, t): (f64, f64) = (r[0].parse().unwrap(), r[2].parse().unwrap());
        assert!((n + 1.0).ln() <= t && t <= (1.0 + n.ln()) / 0.5, "n = {n}: {t}");
    }
}

#[test]
fn divergent_chain_exits_nonzero() {
    let (dir, cfg) = config("[hitting]\ngamma = \"const:1\"\ndelta = 1.0\n");
    let o = epiext("hitting", &cfg, &dir.path().join("out"), &[]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("infinite expected extinction time"), "{err}");
    assert!(err.contains("threshold"), "{err}");
}

#[test]
fn hitting_uses_the_bounding_chains_of_the_graph() {
    let table = |ratio: f64, chain: &str| {
        let (dir, cfg) = config(&airport_config(ratio, &format!("[hitting]\nn_max = 50\n{chain}")));
        let out = dir.path().join("out");
        let o = epiext("hitting", &cfg, &out, &[]);
        o.status.success().then(|| csv(&out.join("hitting.csv")).1[49][2].parse::<f64>().unwrap())
    };
    let lower = table(3.0, "chain = \"lower\"").unwrap();
    let upper = table(3.0, "").unwrap();
    assert!(lower < upper);
    // at ratio 1.1 the largest weighted degree pushes the upper chain past δ
    assert!(table(1.1, "chain = \"lower\"").is_some());
    assert!(table(1.1, "").is_none());
}

#[test]
fn asymptote_writes_one_column_per_profile() {
    let (dir, cfg) = config(
        "[asymptote]\ngammas = [\"harmonic:5\", \"harmonic:5.2\", \"logn:2\"]\nn_max = 100000\nper_decade = 4\n",
    );
    let out = dir.path().join("out");
    ok(&epiext("asymptote", &cfg, &out, &[]));
    let (header, rows) = csv(&out.join("ratios.csv"));
    assert_eq!(header, "n,ratio_1,ratio_2,ratio_3");
    assert_eq!(rows.last().unwrap()[0], "100000");
    for col in 1..=3 {
        let r: Vec<f64> = rows.iter().map(|row| row[col].parse().unwrap()).collect();
        let tail = &r[r.len() - 5..];
        assert!(tail.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()), "column {col}: {tail:?}");
    }

    let (dir, cfg) = config("[asymptote]\ngammas = [\"harmonic:1\"]\nn = [2, 10, 100]\n");
    let out = dir.path().join("out");
    ok(&epiext("asymptote", &cfg, &out, &[]));
    let (header, rows) = csv(&out.join("ratios.csv"));
    assert_eq!(header, "n,ratio");
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["2", "10", "100"]);
}

#[test]
fn meanfield_without_infection_decays_exponentially() {
    let (dir, cfg) = config(
        r#"
[graph]
path = "@FIXTURES@/asymmetric_gap.txt"

[infection]
beta = "const:0"
beta_int = "const:0"
delta = 0.5

[meanfield]
t_max = 4.0
step = 0.5
n0 = 10.0
initial_node = "b"
"#,
    );
    let out = dir.path().join("out");
    ok(&epiext("meanfield", &cfg, &out, &[]));
    let (header, rows) = csv(&out.join("meanfield.csv"));
    assert_eq!(header, "t,a,b,total");
    assert_eq!(rows.len(), 9);
    for r in rows {
        let v: Vec<f64> = r.iter().map(|x| x.parse().unwrap()).collect();
        let expect = 10.0 * (-0.5 * v[0]).exp();
        assert_eq!(v[1], 0.0);
        assert!((v[2] - expect).abs() < 1e-12 * expect);
        assert!((v[3] - expect).abs() < 1e-12 * expect);
    }
}
