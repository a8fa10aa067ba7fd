use std::path::Path;
use std::process::{Command, Output};

fn vem3d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vem3d")).args(args).output().unwrap()
}

fn run_config(dir: &Path, text: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("study.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join("out");
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    vem3d(&args)
}

fn records(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(Result::unwrap).collect()
}

fn col(path: &Path, name: &str) -> usize {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().position(|h| h == name).unwrap()
}

#[test]
fn patch_study_reproduces_linear_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(
        dir.path(),
        "study = \"patch\"\np = [1, 2, 3]\n[mesh]\nkind = \"cube\"\nn = [2]\n",
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = dir.path().join("out/report.csv");
    let (h1, st) = (col(&report, "h1_rel"), col(&report, "status"));
    let rows = records(&report);
    assert_eq!(rows.len(), 9);
    for r in &rows {
        assert_eq!(&r[st], "ok");
        assert!(r[h1].parse::<f64>().unwrap() <= 1e-9, "{r:?}");
    }
    assert!(dir.path().join("out/patch_h1.svg").exists());
}

#[test]
fn h_study_rate_and_rates_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(
        dir.path(),
        "study = \"h_study\"\np = [1]\nchoices = [\"standard\"]\ncondition = false\n[mesh]\nkind = \"cube\"\nn = [2, 4, 8]\n",
        &["--jobs", "2"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rates = dir.path().join("out/rates.csv");
    let rows = records(&rates);
    assert_eq!(rows.len(), 2);
    let rate: f64 = rows[1][col(&rates, "h1_rate")].parse().unwrap();
    assert!((0.8..=1.4).contains(&rate), "H1 rate {rate}");
}

#[test]
fn runs_are_deterministic_except_timings() {
    let text = "study = \"p_study\"\np = [1, 2]\n[mesh]\nkind = \"collapse\"\nlevels = [0, 2]\n";
    let strip = |dir: &Path| -> Vec<Vec<String>> {
        let report = dir.join("out/report.csv");
        let sec = col(&report, "seconds");
        records(&report)
            .iter()
            .map(|r| r.iter().enumerate().filter(|(i, _)| *i != sec).map(|(_, s)| s.to_string()).collect())
            .collect()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_config(a.path(), text, &["--jobs", "1"]).status.success());
    assert!(run_config(b.path(), text, &["--jobs", "4"]).status.success());
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn failing_mesh_is_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.mesh");
    assert!(vem3d(&["mesh", "gen", "cube", "--n", "2", "-o", good.to_str().unwrap()]).status.success());
    let text = format!(
        "study = \"patch\"\np = [1]\nchoices = [\"hybrid\"]\n[mesh]\nkind = \"file\"\npaths = [\"{}\", \"missing.mesh\"]\n",
        good.display()
    );
    let out = run_config(dir.path(), &text, &[]);
    assert_eq!(out.status.code(), Some(1));
    let report = dir.path().join("out/report.csv");
    let st = col(&report, "status");
    let rows = records(&report);
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][st], "ok");
    assert!(rows[1][st].starts_with("error:io"), "{:?}", rows[1]);
}

#[test]
fn extreme_degree_needs_flag() {
    let dir = tempfile::tempdir().unwrap();
    let text = "study = \"p_study\"\np = [7]\n[mesh]\nkind = \"cube\"\nn = [1]\n";
    let out = run_config(dir.path(), text, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("allow-extreme-p"));
}

#[test]
fn mesh_gen_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.mesh");
    assert!(vem3d(&["mesh", "gen", "collapse", "--level", "3", "-o", file.to_str().unwrap()]).status.success());
    let out = vem3d(&["mesh", "check", file.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("cells           5"), "{text}");
    std::fs::write(&file, "vem3d-mesh 1\nvertices 1\n0 0\n").unwrap();
    assert!(!vem3d(&["mesh", "check", file.to_str().unwrap()]).status.success());
}
