use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gef-lab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--output-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn inline_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const INLINE_CIRCLE: &str = r#"
[[chains.chain]]
id = "circle"
[[chains.chain.terms]]
kind = "circle"
weight = 1.0
center = [0.0, 0.0]
radius = 1.0
"#;

#[test]
fn signed_length_of_collinear_segments() {
    let out = TempDir::new().unwrap();
    let o = run(&["signed-length"], &fixture("collinear.toml"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.trim(), "left\tright\t1.0");
    let csv = read(out.path().join("signed_length.csv"));
    assert!(csv.starts_with("chain_a,chain_b,value\n"));
    assert!(out.path().join("manifest.json").exists());
}

#[test]
fn zero_radius_arc_is_rejected_with_term_index() {
    let out = TempDir::new().unwrap();
    let o = run(&["signed-length"], &fixture("bad_arc.toml"), out.path());
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("chain 'broken' term 1 (line 7)"), "{stderr}");
    assert!(stderr.contains("radius"), "{stderr}");
}

#[test]
fn variance_sweep_writes_one_summary_row_per_radius() {
    let out = TempDir::new().unwrap();
    let o = run(&["variance-sweep"], &fixture("circle_sweep.toml"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read(out.path().join("summary.csv"));
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "chain_id,R,n,mean,mean_stderr,variance,variance_stderr,skew,ex_kurt,ks,quad_cov,quad_bound,asym_cov"
    );
    assert_eq!(lines.count(), 2);
    let replicates = read(out.path().join("replicates.csv"));
    assert!(replicates.starts_with("replicate,chain_id,R,raw,centered,min_modulus,warnings\n"));
    assert_eq!(replicates.lines().count(), 1 + 2 * 200);
    let manifest: serde_json::Value = serde_json::from_str(&read(out.path().join("manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 2024);
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["config"]["experiment"]["replicates"], 200);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let o = run(&["increment", "--threads", threads, "--seed", "77"], &fixture("circle_sweep.toml"), dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["replicates.csv", "manifest.json"] {
        assert_eq!(read(a.path().join(name)), read(b.path().join(name)), "{name}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&read(a.path().join("manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 77);
}

#[test]
fn quadrature_budget_failure_writes_partial_outputs() {
    let dir = TempDir::new().unwrap();
    let config = inline_config(
        dir.path(),
        &format!("{INLINE_CIRCLE}\n[experiment]\nR_grid = [8.0]\n\n[numerics.cov]\nmax_evaluations = 1000\n"),
    );
    let out = dir.path().join("out");
    let o = run(&["cov-quad"], &config, &out);
    assert_eq!(o.status.code(), Some(3));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("cov-quad"), "{stderr}");
    let partial = read(out.join("cov_quad_partial.csv"));
    assert!(partial.starts_with("chain_a,chain_b,R,value,bound,alpha_terms,evaluations,asym_cov\n"));
    assert_eq!(partial.lines().count(), 2);
    let manifest: serde_json::Value = serde_json::from_str(&read(out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["status"], "numerical-failure");
}

#[test]
fn config_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let config = inline_config(dir.path(), &format!("{INLINE_CIRCLE}\n[experiment]\nR_grid = [4.0, 2.0]\n"));
    let o = run(&["mean"], &config, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("experiment.R_grid"));

    let config = inline_config(dir.path(), &format!("{INLINE_CIRCLE}\n[experiment]\nreplicate = 3\n"));
    let o = run(&["mean"], &config, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("replicate"));

    let config = inline_config(dir.path(), &format!("{INLINE_CIRCLE}\n[experiment]\nR_grid = [40.0]\n"));
    let o = run(&["increment"], &config, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("R_grid"));
}

#[test]
fn remaining_subcommands_write_their_tables() {
    let dir = TempDir::new().unwrap();
    let config = inline_config(
        dir.path(),
        &format!(
            "{INLINE_CIRCLE}
[experiment]
seed = 5
R_grid = [1.0, 2.0]
replicates = 20
draws = 2000
theta_grid = [0.5]
truncation_orders = [1, 2]
points = [[0.1, 0.0], [0.0, 0.3]]
alphas = [[1], [1, 2]]
"
        ),
    );
    let cases: [(&str, &[&str]); 7] = [
        ("sample", &["coefficients.csv"]),
        ("mean", &["mean.csv"]),
        ("cov-quad", &["cov_quad.csv"]),
        ("clt", &["replicates.csv", "theory.csv", "summary.csv", "normality.csv"]),
        ("wick-check", &["wick.csv", "log_truncation.csv"]),
        ("diagram-check", &["diagram.csv"]),
        ("zeros-check", &["zeros.csv", "zeros_summary.csv"]),
    ];
    for (cmd, files) in cases {
        let out = dir.path().join(cmd);
        let o = run(&[cmd], &config, &out);
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        for f in files {
            let text = read(out.join(f));
            assert!(text.lines().count() >= 2, "{cmd}/{f}");
        }
    }
    let mean = read(dir.path().join("mean/mean.csv"));
    assert_eq!(mean.lines().count(), 3);
    let diagram = read(dir.path().join("diagram-check/diagram.csv"));
    assert_eq!(diagram.lines().count(), 1 + 2 * 2);
}
