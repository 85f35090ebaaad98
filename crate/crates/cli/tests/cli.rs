use std::fs;
use std::path::Path;
use std::process::Command;

const CONFIG: &str = r#"
setting = "gaussian-sparse"
rule = "srlasso-l1"
N = 60
m = 30
s = 3
eta_list = [1e-3, 1e-2]
lambda_min = 1e-2
lambda_max = 1.0
lambda_count = 3
K = 5
n_trials = 2
base_seed = 11
"#;

fn womp(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_womp"))
        .args(args)
        .env("WOMP_THREADS", "2")
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "womp {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn lambda_sweep_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let table = dir.path().join("lambda.csv");
    womp(&["sweep-lambda", "--config", path(&cfg), "--out", path(&table)]);
    let text = fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "level_id,level_desc,lambda,trial,rel_error,status");
    assert_eq!(lines.len(), 1 + 2 * 3 * 2);

    // same seed, same bytes
    let again = womp(&["sweep-lambda", "--config", path(&cfg)]);
    assert_eq!(again.stdout, text.as_bytes());

    let summary = womp(&["stats", "--input", path(&table)]);
    let summary = String::from_utf8(summary.stdout).unwrap();
    assert!(summary.starts_with("level_id,level_desc,lambda,n,failed,median"));
    assert_eq!(summary.lines().count(), 1 + 2 * 3);

    let best = womp(&["stats", "--input", path(&table), "--best", "--by", "log-mean"]);
    let best = String::from_utf8(best.stdout).unwrap();
    assert_eq!(best.lines().count(), 3);
    assert!(best.lines().nth(1).unwrap().starts_with("0,eta=0.001 corrupt=0,"));

    let svg = dir.path().join("lambda.svg");
    womp(&["plot", "--input", path(&table), "--out", path(&svg)]);
    assert!(fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn gen_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let inst = dir.path().join("inst.json");
    womp(&["gen", "--config", path(&cfg), "--level", "1", "--trial", "0", "--out", path(&inst)]);
    let json = fs::read_to_string(&inst).unwrap();
    assert!(json.contains("womp-instance"));

    let out = womp(&[
        "solve", "--instance", path(&inst), "--rule", "lasso-l0", "--lambda", "0", "--iterations", "4",
    ]);
    let trace = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("k,selected_index,support_size"));
    let idx: usize = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((1..=60).contains(&idx));
}

#[test]
fn iteration_sweep_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("iter.toml");
    fs::write(&cfg, CONFIG.replace("eta_list = [1e-3, 1e-2]", "eta_list = [1e-3]")).unwrap();
    let out = womp(&["sweep-iter", "--config", path(&cfg)]);
    let text = String::from_utf8(out.stdout).unwrap();
    // λ = 0 plus a 3-point grid, 2 trials, 5 iterations
    assert_eq!(text.lines().count(), 1 + 4 * 2 * 5);

    let bad = Command::new(env!("CARGO_BIN_EXE_womp"))
        .args(["solve", "--instance", "/nonexistent.json", "--rule", "lasso-l1", "--lambda", "0", "--iterations", "1"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));

    let unknown = Command::new(env!("CARGO_BIN_EXE_womp"))
        .args(["solve", "--instance", "x", "--rule", "ridge", "--lambda", "0", "--iterations", "1"])
        .output()
        .unwrap();
    assert!(!unknown.status.success());
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            womp::harness::SweepConfig::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, CONFIG.replace("srlasso-l1", "ladlasso-l1")).unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_womp"))
            .args(["sweep-lambda", "--config", path(&cfg)])
            .env("WOMP_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("4"));
}
