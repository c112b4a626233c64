use std::path::Path;
use std::process::{Command, Output};

fn nv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_newsvendor")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn series(dir: &Path, name: &str, values: &[f64]) -> String {
    let mut body = String::from("t,value\n");
    for (i, v) in values.iter().enumerate() {
        body.push_str(&format!("{},{v}\n", i + 1));
    }
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn variation_of_a_ramp() {
    let dir = tempfile::tempdir().unwrap();
    let p = series(dir.path(), "ramp.csv", &[1.0, 2.0, 3.0, 4.0, 5.0]);
    let o = nv(&["variation", "--input", &p]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("T = 5\n"), "{out}");
    assert!(out.contains("V = 16\n"), "{out}");
    assert!(out.contains("exponent = 1\n"), "{out}");
}

#[test]
fn variation_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let single = series(dir.path(), "one.csv", &[3.0]);
    assert!(stdout(&nv(&["variation", "--input", &single])).contains("V = 0\n"));
    let zig = series(dir.path(), "zig.csv", &[1.0, 0.0, 1.0, 0.0, 1.0]);
    assert!(stdout(&nv(&["variation", "--input", &zig, "--theta", "1"])).contains("V = 4\n"));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "t,value\n1,2\n2,oops\n").unwrap();
    let o = nv(&["variation", "--input", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 3") && err.contains("oops"), "{err}");
}

#[test]
fn gap_from_costs() {
    let g: f64 = stdout(&nv(&["gap", "23899", "35600", "23460"])).trim().parse().unwrap();
    assert!((g - 0.0362).abs() < 5e-5, "{g}");
    assert_eq!(stdout(&nv(&["gap", "5", "10", "10"])).trim(), "undefined");
    let g: f64 = stdout(&nv(&["gap", "1", "2", "3"])).trim().parse().unwrap();
    assert_eq!(g, -1.0);
}

#[test]
fn run_with_empty_seeds_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "format = \"newsvendor-experiment/1\"\nname = \"x\"\nmaster_seed = 1\nseeds = []\nhorizons = [64]\n\
         [[instances]]\nname = \"i\"\ngenerator = \"lower-bound\"\nv = 0\na = 0\n\
         [[policies]]\nname = \"p\"\nkind = \"prediction\"\n",
    )
    .unwrap();
    let o = nv(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("seeds"), "{err}");
}

#[test]
fn run_writes_a_report_and_seed_override_changes_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "format = \"newsvendor-experiment/1\"\nname = \"x\"\nmaster_seed = 1\nreplications = 2\nhorizons = [128]\n\
         [[instances]]\nname = \"i\"\ngenerator = \"lower-bound\"\nv = 0\na = 1\n\
         [[policies]]\nname = \"pure\"\nkind = \"prediction\"\n\
         [[policies]]\nname = \"blind\"\nkind = \"fixed-window\"\nv = 0\n\
         [[policies]]\nname = \"perp\"\nkind = \"perp\"\nv = 0\ngamma = 1\n\
         [gap]\nperp = \"perp\"\npure = \"pure\"\nnopred = \"blind\"\n",
    )
    .unwrap();
    let out = |name: &str, extra: &[&str]| {
        let d = dir.path().join(name);
        let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = nv(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("GAP"));
        std::fs::read_to_string(d.join("report.json")).unwrap()
    };
    let a = out("a", &[]);
    let b = out("b", &[]);
    let c = out("c", &["--seed", "2"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(dir.path().join("a/gap.csv").exists());
    let o = nv(&["gap", "--report", dir.path().join("a/report.json").to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("mean: "));
}

#[test]
fn lowerbound_and_hw_forecast_write_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = nv(&["lowerbound", "--v", "0.5", "--a", "0.5", "--horizon", "100", "--out", d]);
    assert!(o.status.success());
    let means = std::fs::read_to_string(dir.path().join("means.csv")).unwrap();
    assert!(means.starts_with("t,value\n"));
    assert_eq!(means.lines().count(), 101);
    let preds = std::fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    assert!(preds.starts_with("t,prediction\n"));

    let hist = series(dir.path(), "h.csv", &[20.0; 21]);
    let o = nv(&["hw-forecast", "--input", &hist, "--steps", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "t,prediction\n1,20\n2,20\n3,20\n");
}

#[test]
fn presets_are_listed() {
    let out = stdout(&nv(&["presets"]));
    for name in ["synthetic-fixed-v", "synthetic-fixed-a", "lower-bound-slope", "perp-robustness", "real-data-gap"] {
        assert!(out.contains(name));
    }
}
