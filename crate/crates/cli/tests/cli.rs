use std::path::Path;
use std::process::Command;

fn uasflow(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_uasflow")).args(args).output().expect("binary runs").status.code().unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn col(path: &Path, name: &str) -> usize {
    csv::Reader::from_path(path).unwrap().headers().unwrap().iter().position(|h| h == name).unwrap()
}

#[test]
fn baseline_simulation_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(uasflow(&["--mode", "simulate", "--events", "--out", out]), 0);
    for f in ["metrics.json", "zones.csv", "spread.json", "events.log"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["deployed"], 1200);
    assert_eq!(m["delivered"], 1200);
    assert_eq!(rows(&dir.path().join("zones.csv")).len(), 110);
}

#[test]
fn bad_configuration_exits_with_two() {
    assert_eq!(uasflow(&["--lambda", "-0.1"]), 2);
    assert_eq!(uasflow(&["--M", "0"]), 2);
    assert_eq!(uasflow(&["--config", "/nonexistent/scenario.toml"]), 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "lambda = 0.2\n[grid]\nl = 5\n").unwrap();
    assert_eq!(uasflow(&["--config", bad.to_str().unwrap()]), 2);
}

#[test]
fn repeated_seed_gives_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(uasflow(&["--lambda", "0.6", "--seed", "17", "--uas", "300", "--out", d.path().to_str().unwrap()]), 0);
    }
    assert_eq!(std::fs::read(a.path().join("zones.csv")).unwrap(), std::fs::read(b.path().join("zones.csv")).unwrap());
}

#[test]
fn analyze_saturated_source() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(uasflow(&["--mode", "analyze", "--lambda", "1", "--M", "2", "--out", dir.path().to_str().unwrap()]), 0);
    let p = dir.path().join("zones.csv");
    let (s, l, t) = (col(&p, "stream"), col(&p, "level"), col(&p, "theta0_star"));
    let r = rows(&p).into_iter().find(|r| &r[s] == "0" && &r[l] == "1").unwrap();
    let th: f64 = r[t].parse().unwrap();
    assert!((th - 0.818).abs() < 0.01, "{th}");
    assert!(dir.path().join("spread.json").exists());
}

#[test]
fn analyze_zero_traffic() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(uasflow(&["--mode", "analyze", "--lambda", "0", "--out", dir.path().to_str().unwrap()]), 0);
    let p = dir.path().join("zones.csv");
    let t = col(&p, "theta0");
    assert!(rows(&p).iter().all(|r| r[t].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn single_point_sweep_matches_analyze() {
    let a = tempfile::tempdir().unwrap();
    let s = tempfile::tempdir().unwrap();
    let args = ["--lambda", "0.4", "--M", "3", "--eta", "0.3"];
    assert_eq!(uasflow(&[&args[..], &["--mode", "analyze", "--out", a.path().to_str().unwrap()]].concat()), 0);
    assert_eq!(uasflow(&[&args[..], &["--mode", "sweep", "--no-sim", "--out", s.path().to_str().unwrap()]].concat()), 0);
    let an = rows(&a.path().join("zones.csv"));
    let sw = rows(&s.path().join("sweep.csv"));
    let sp = s.path().join("sweep.csv");
    let cols: Vec<usize> = ["stream", "level", "theta0", "theta0_star", "mean_in_service", "mean_in_queue", "phi", "sigma", "pi"]
        .iter()
        .map(|c| col(&sp, c))
        .collect();
    assert_eq!(an.len(), sw.len());
    for (x, y) in an.iter().zip(&sw) {
        let projected: Vec<&str> = cols.iter().map(|&i| &y[i]).collect();
        assert_eq!(x.iter().collect::<Vec<_>>(), projected);
    }
}

#[test]
fn sweep_writes_one_file_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(uasflow(&["--mode", "sweep", "--sweep-lambda", "0.2,0.8", "--sweep-M", "2,4", "--uas", "200", "--out", out]), 0);
    assert_eq!(std::fs::read_dir(dir.path().join("points")).unwrap().count(), 4);
    let p = dir.path().join("sweep.csv");
    let seed = col(&p, "seed");
    let seeds: std::collections::BTreeSet<String> = rows(&p).iter().map(|r| r[seed].to_string()).collect();
    assert_eq!(seeds.len(), 4);
}

#[test]
fn compare_zero_traffic_has_no_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(uasflow(&["--mode", "compare", "--lambda", "0", "--slots", "400", "--replications", "2", "--out", out]), 0);
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("compare_report.json")).unwrap()).unwrap();
    assert_eq!(r["pass"], true);
    for z in r["zones"].as_array().unwrap() {
        for k in ["delta_theta0", "delta_in_service", "delta_in_queue", "delta_overflow"] {
            assert_eq!(z[k].as_f64().unwrap(), 0.0, "{k} at {}", z);
        }
    }
}

#[test]
fn compare_source_zone_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = uasflow(&["--mode", "compare", "--lambda", "0.5", "--M", "2", "--zone", "0,1", "--out", out]);
    assert_eq!(code, 0);
}
