use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
seed = 2
[dictionary]
kind = "gaussian"
width = 0.02
samples = 96
domain = [0.1, 0.9]
[measure]
n = 2
[truth]
s = 2
separation = 2.0
[noise]
sigma = 0.5
per_sample = true
[solver]
kappa_constant = 2.0
[study]
p = 1.0
samples = [64, 96]
replicates = 3
"#;

fn offgrid(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_offgrid"))
        .args(&args[..1])
        .arg("--config")
        .arg(config)
        .args(&args[1..])
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn certify_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("cert");
    let o = offgrid(&["certify", "--out", out.to_str().unwrap()], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("status,pass"));
    assert_eq!(first_line(&out.join("diagnostics.csv")), "quantity,value,grid_step");
    assert_eq!(
        first_line(&out.join("verification.csv")),
        "point,assumption,region,theta,margin,pass"
    );
}

#[test]
fn refusal_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = CONFIG.replace("separation = 2.0", "separation = 2.0\ntheta = [0.5, 0.502]");
    let cfg = write_config(dir.path(), &text);
    let o = offgrid(&["certify"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("status,refused"));
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("kind = \"gaussian\"", "kind = \"spline\""));
    assert_eq!(offgrid(&["certify"], &cfg).status.code(), Some(1));
    let missing = dir.path().join("absent.toml");
    assert_eq!(offgrid(&["trial"], &missing).status.code(), Some(1));
}

#[test]
fn trial_writes_row_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("t");
    let o = offgrid(&["trial", "--rep", "4", "--out", out.to_str().unwrap()], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let mut lines = stdout.lines();
    assert!(lines.next().unwrap().ends_with(",warning,runtime_ms"));
    assert!(lines.next().unwrap().starts_with("96,2,2,4,"));
    assert_eq!(first_line(&out.join("trace.csv")), "iter,objective,event,dual_sup");
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.lines().nth(1).unwrap().starts_with("0,"));
    assert!(trace.lines().nth(1).unwrap().contains(",init,"));
    let signals = std::fs::read_to_string(out.join("signals.csv")).unwrap();
    assert!(signals.starts_with("z,y_0,y_1,"));
    assert_eq!(signals.lines().count(), 3);
    assert_eq!(first_line(&out.join("truth.csv")), "k,theta,b_z0,b_z1");
    assert_eq!(first_line(&out.join("estimate.csv")), "k,theta,b_z0,b_z1");
}

#[test]
fn study_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = offgrid(&["study", "--out", out.to_str().unwrap(), "--seed", seed], &cfg);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b, c) = (run("a", "8"), run("b", "8"), run("c", "9"));
    for f in ["trials.csv", "summary.csv", "slopes.csv", "plot.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(std::fs::read(a.join("trials.csv")).unwrap(), std::fs::read(c.join("trials.csv")).unwrap());
    assert_eq!(first_line(&a.join("plot.csv")), "x,y,lo,hi");
    let plot = std::fs::read_to_string(a.join("plot.csv")).unwrap();
    let xs: Vec<&str> = plot.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(xs, ["64", "96"]);
    assert_eq!(first_line(&a.join("slopes.csv")), "sparsity,signals,points,slope");
}
