use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adsb_osp::io;

fn osp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osp"))
        .args(args)
        .env("OSP_LOG", "warn")
        .output()
        .expect("osp binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, ga: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(
        &path,
        format!(
            r#"{{
  "grid": {{ "lat_count": 5, "lon_count": 5 }},
  "candidates": {{ "count": 36 }},
  "jammers": {{ "count": 6 }},
  "ga": {ga}
}}"#
        ),
    )
    .unwrap();
    path
}

fn small(dir: &Path) -> PathBuf {
    write_config(dir, "small.json", r#"{ "population_size": 12, "generations": 4, "n_max": 8 }"#)
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/clustered21.csv")
}

#[test]
fn optimize_writes_front_and_progress() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small(tmp.path());
    let out = tmp.path().join("run");
    let o = osp(&["optimize", "--config", s(&config), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let (meta, rows) = io::read_pareto(&out.join("pareto.csv")).unwrap();
    assert_eq!(meta.seed, Some(0));
    assert_eq!(meta.config_hash.as_deref().map(str::len), Some(16));
    assert!(meta.bounds.is_some());
    for r in &rows {
        let (m, sites) = io::read_sites(&out.join(format!("solution_{}.csv", r.id))).unwrap();
        assert_eq!(m.config_hash, meta.config_hash);
        assert_eq!(m.solution_id, Some(r.id));
        assert_eq!(sites.len(), r.n_sensors);
        assert!(sites.len() <= 8);
    }

    let progress: Vec<serde_json::Value> = stderr(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(progress.len(), 5);
    for (g, p) in progress.iter().enumerate() {
        assert_eq!(p["gen"], g);
        assert!(p["front_size"].as_u64().unwrap() >= 1);
        assert_eq!(p["best"].as_array().unwrap().len(), 3);
    }
}

#[test]
fn rerun_removes_stale_solutions() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small(tmp.path());
    let out = tmp.path().join("run");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("solution_999.csv"), "stale").unwrap();
    fs::write(out.join("notes.txt"), "kept").unwrap();
    assert_eq!(code(&osp(&["optimize", "--config", s(&config), "--out", s(&out)])), 0);
    assert!(!out.join("solution_999.csv").exists());
    assert!(out.join("notes.txt").exists());
}

#[test]
fn zero_generations_returns_initial_front() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "zero.json", r#"{ "population_size": 8, "generations": 0 }"#);
    let out = tmp.path().join("run");
    let o = osp(&["optimize", "--config", s(&config), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stderr(&o).lines().count(), 1);
    let (_, rows) = io::read_pareto(&out.join("pareto.csv")).unwrap();
    assert!(!rows.is_empty() && rows.len() <= 8);
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&osp(&["optimize", "--config", s(&config), "--out", s(&a), "--seed", "11"])), 0);
    assert_eq!(code(&osp(&["optimize", "--config", s(&config), "--out", s(&b)])), 0);
    let (ma, _) = io::read_pareto(&a.join("pareto.csv")).unwrap();
    let (mb, _) = io::read_pareto(&b.join("pareto.csv")).unwrap();
    assert_eq!(ma.seed, Some(11));
    assert_eq!(mb.seed, Some(0));
    assert_ne!(ma.config_hash, mb.config_hash);
}

#[test]
fn invalid_config_exits_2_with_field() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{ "of3_weights": [0.5, 0.5, 0.5] }"#).unwrap();
    let o = osp(&["optimize", "--config", s(&bad), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("of3_weights"), "{}", stderr(&o));

    fs::write(&bad, "{\n  \"grid\": {\n    \"lat_cont\": 3\n  }\n}").unwrap();
    let o = osp(&["optimize", "--config", s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(":3:"), "{}", stderr(&o));

    let o = osp(&["optimize", "--config", s(&tmp.path().join("missing.json"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&osp(&["optimize"])), 2);
    assert_eq!(code(&osp(&["frobnicate"])), 2);
    assert_eq!(code(&osp(&["report", "--out", ".", "--weights", "1,0"])), 2);
    assert_eq!(code(&osp(&["--help"])), 0);
}

#[test]
fn augment_requires_deployed_sites() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small(tmp.path());
    let o = osp(&["augment", "--config", s(&config), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("deployed_path"));
}

#[test]
fn augment_marks_forced_and_reads_config_path() {
    let tmp = tempfile::tempdir().unwrap();
    fs::copy(fixture(), tmp.path().join("deployed.csv")).unwrap();
    let config = tmp.path().join("aug.json");
    fs::write(
        &config,
        r#"{
  "grid": { "lat_count": 5, "lon_count": 5 },
  "candidates": { "count": 36 },
  "jammers": { "count": 6 },
  "ga": { "population_size": 12, "generations": 3, "n_max": 4 },
  "scenario": { "kind": "augment", "deployed_path": "deployed.csv" }
}"#,
    )
    .unwrap();
    let out = tmp.path().join("run");
    let o = osp(&["augment", "--config", s(&config), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = io::read_pareto(&out.join("pareto.csv")).unwrap();
    for r in rows {
        let (_, sites) = io::read_sites(&out.join(format!("solution_{}.csv", r.id))).unwrap();
        assert_eq!(sites.iter().filter(|x| x.forced).count(), 21);
        assert!(sites.len() <= 25);
    }
}

#[test]
fn malformed_deployed_row_is_line_numbered() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small(tmp.path());
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "# deployed\nid,lat_deg,lon_deg,alt_m\na,48.0,8.0,10\nb,48.5,eight,10\n").unwrap();
    let o = osp(&["augment", "--config", s(&config), "--sensors", s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.csv:4:"), "{}", stderr(&o));
}

#[test]
fn deployed_row_outside_area_is_kept_with_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small(tmp.path());
    let deployed = tmp.path().join("outside.csv");
    fs::write(&deployed, "id,lat_deg,lon_deg,alt_m\nfar,45.0,8.0,10\n").unwrap();
    let out = tmp.path().join("run");
    let o = Command::new(env!("CARGO_BIN_EXE_osp"))
        .args(["augment", "--config", s(&config), "--sensors", s(&deployed), "--out", s(&out)])
        .env("OSP_LOG", "warn")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("outside the area"), "{}", stderr(&o));
    let (_, sites) = io::read_sites(&out.join("solution_0.csv")).unwrap();
    assert!(sites.iter().any(|x| x.site.id == "far" && x.forced));
}

#[test]
fn evaluate_fixture_and_empty_file() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = osp(&["evaluate", "--config", s(&config), "--sensors", s(&fixture()), "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["scores.json", "coverage.csv", "jam_report.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("scores.json")).unwrap()).unwrap();
    for k in ["of1", "of2", "of3"] {
        assert!(doc[k].as_f64().unwrap().is_finite(), "{k}");
    }
    assert_eq!(doc["bounds_source"], "reference");
    assert_eq!(doc["n_sensors"], 21);
    let jam = fs::read_to_string(a.join("jam_report.csv")).unwrap();
    assert!(jam.contains("jammer_id,lat_deg,lon_deg,alt_m,affected,min_dist_km"));
    assert_eq!(jam.lines().filter(|l| l.starts_with('j') && !l.starts_with("jammer")).count(), 6);

    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "id,lat_deg,lon_deg,alt_m\n").unwrap();
    let e = tmp.path().join("e");
    let o = osp(&["evaluate", "--config", s(&config), "--sensors", s(&empty), "--out", s(&e)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(e.join("scores.json")).unwrap()).unwrap();
    assert_eq!(doc["n_sensors"], 0);
    assert_eq!(doc["normalized"][0], 1.0);
    assert_eq!(doc["normalized"][1], 1.0);
    let coverage = fs::read_to_string(e.join("coverage.csv")).unwrap();
    let cells: Vec<&str> = coverage.lines().skip_while(|l| !l.starts_with("lat_deg")).skip(1).collect();
    assert_eq!(cells.len(), 5 * 5 * 3);
    assert!(cells.iter().all(|l| l.split(',').nth(3) == Some("0")));
    assert!(cells.iter().all(|l| l.split(',').nth(4) == Some("inf")));
}

#[test]
fn report_selects_and_signals_infeasible() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small(tmp.path());
    let out = tmp.path().join("run");
    assert_eq!(code(&osp(&["optimize", "--config", s(&config), "--out", s(&out)])), 0);
    let (_, rows) = io::read_pareto(&out.join("pareto.csv")).unwrap();

    let o = osp(&["report", "--out", s(&out), "--weights", "1,0,0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let table_rows = text
        .lines()
        .skip(1)
        .take_while(|l| !l.starts_with("solution files"))
        .count();
    assert_eq!(table_rows, rows.len());
    assert!(text.contains(&format!("solution files: {}", rows.len())));
    let best = rows
        .iter()
        .min_by(|a, b| {
            a.normalized[0]
                .total_cmp(&b.normalized[0])
                .then(a.n_sensors.cmp(&b.n_sensors))
                .then(a.id.cmp(&b.id))
        })
        .unwrap();
    assert!(text.contains(&format!("selected: {} ", best.id)), "{text}");

    let min_n = rows.iter().map(|r| r.n_sensors).min().unwrap();
    if min_n > 0 {
        let o = osp(&["report", "--out", s(&out), "--budget", &(min_n - 1).to_string()]);
        assert_eq!(code(&o), 3);
        assert!(stderr(&o).contains("no feasible solution"));
    }

    let o = osp(&["report", "--out", s(&tmp.path().join("nowhere"))]);
    assert_eq!(code(&o), 2);
    let o = osp(&["report", "--out", s(&out), "--weights", "0.5,0.5,0.5"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn threads_flag_is_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small(tmp.path());
    let o = osp(&["optimize", "--threads", "0", "--config", s(&config)]);
    assert_eq!(code(&o), 2);
}
