use std::path::Path;
use std::process::{Command, Output};

fn streamopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamopt")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.conf");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "problem=ls\nmethod=sgd,ssn,wassn\nd=3\nsamples=3000\nruns=3\nseed=9\ncheckpoints=8\np=0.5\n";

#[test]
fn run_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out.csv");
    let o = streamopt(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("method,run_id,t,n_seen,sq_error,wall_ns,rank_one_updates\n"));
    assert!(csv.lines().any(|l| l.starts_with("wassn,-1,")));
    let meta = std::fs::read_to_string(dir.path().join("out.csv.meta")).unwrap();
    assert!(meta.contains("version=") && meta.contains("p=0.5") && meta.contains("failed_runs=0"));
}

#[test]
fn seed_override_changes_output_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = streamopt(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", seed]);
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_ne!(a, run("c.csv", "2"));
}

#[test]
fn validate_reports_bad_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), SMALL);
    assert!(streamopt(&["validate", "--config", &good]).status.success());
    let bad = write_config(dir.path(), &format!("{SMALL}step.gamma=0.4\n"));
    let o = streamopt(&["validate", "--config", &bad]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid"));
    let unknown = write_config(dir.path(), "problem=ls\nlearning_rate=3\n");
    assert!(!streamopt(&["validate", "--config", &unknown]).status.success());
}

#[test]
fn report_cost_reads_p_from_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out.csv");
    let out_s = out.to_str().unwrap();
    assert!(streamopt(&["run", "--config", &cfg, "--out", out_s]).status.success());
    let o = streamopt(&["report-cost", "--in", out_s]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.ends_with("PASS")).count(), 3);
    // a wildly wrong p puts the subsampled methods outside their band
    assert!(!streamopt(&["report-cost", "--in", out_s, "--p", "0.05"]).status.success());
}

#[test]
fn dump_stream_emits_d_plus_one_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = streamopt(&["dump-stream", "--config", &cfg, "--samples", "25"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 25);
    for line in text.lines() {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 4);
    }
}

#[test]
fn missing_output_path_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = streamopt(&["run", "--config", &cfg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("output"));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let o = streamopt(&["validate", "--config", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        seen += 1;
    }
    assert!(seen >= 5);
}
