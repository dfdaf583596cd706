use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_advection-dg");

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL_CONVERGE: &str = r#"
[problem]
name = "translate1d"

[mesh]
sizes = [4, 8, 16]

[solver]
degrees = [1, 2]
t_end = 0.1
"#;

#[test]
fn converge_output_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONVERGE);
    let mut tables = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("out{threads}"));
        fs::create_dir(&out).unwrap();
        let o = run(&["converge", "--config", &cfg, "--out", out.to_str().unwrap()], &[("DG_THREADS", threads)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        tables.push(fs::read(out.join("converge.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn tables_start_with_the_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_CONVERGE);
    let o = run(&["converge", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("converge.csv")).unwrap();
    let echo: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(echo.iter().any(|l| l.contains("translate1d")), "{echo:?}");
    assert!(echo.iter().any(|l| l.contains("t_end = 0.1")), "{echo:?}");
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "p,n,h,linf_l2,l2_l2,eoc_linf,eoc_l2,status");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 6);
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["converge"], &[]).status.code(), Some(1));
    assert_eq!(run(&["nonsense"], &[]).status.code(), Some(1));
    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&["mu", "--config", missing.to_str().unwrap()], &[]).status.code(), Some(1));
    let cfg = write_config(dir.path(), "[problem]\nname = \"translate1d\"\nbogus = 1\n");
    let o = run(&["converge", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    assert_eq!(run(&["--help"], &[]).status.code(), Some(0));
}

#[test]
fn failed_assertion_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL_CONVERGE}\n[assert]\nmin_order = 10.0\n"));
    let out = dir.path().to_str().unwrap();
    let o = run(&["converge", "--config", &cfg, "--out", out, "--assert"], &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    // without --assert the thresholds are ignored
    assert_eq!(run(&["converge", "--config", &cfg, "--out", out], &[]).status.code(), Some(0));
}

#[test]
fn closed_orbits_are_flagged_unbounded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/mu_rotation.toml");
    let o = run(&["mu", "--config", cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("mu_summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l == "possibly_unbounded,true"), "{summary}");
}

#[test]
fn pathline_table_ends_at_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[problem]\nname = \"stretch1d\"\n\n[pathline]\nx = [0.5]\nt = 2.0\n");
    let o = run(&["pathline", "--config", &cfg, "--out", dir.path().to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("pathline.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let first = &rows[0];
    let last = rows.last().unwrap();
    assert!((first[0] - 2.0).abs() < 1e-12 && (first[1] - 0.5).abs() < 1e-12);
    // origin on the inlet x = 0 at t = 2 - ln 1.5
    assert!(last[1].abs() < 1e-9, "{last:?}");
    assert!((last[0] - (2.0 - 1.5f64.ln())).abs() < 1e-6, "{last:?}");
}
