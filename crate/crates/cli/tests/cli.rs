use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn fput() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fput"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("fput-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn scaling_prints_json() {
    let out = fput().args(["scaling", "--m", "2", "--omega", "40"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["omega", "delta", "xi", "alpha", "beta"] {
        assert!(v[key].is_number(), "{key}");
    }
    assert_eq!(v["delta"], 0.025);
}

#[test]
fn empty_ladder_fails_with_structured_error() {
    let dir = scratch("empty");
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, r#"{"experiment": "sweep", "omegas": []}"#).unwrap();
    let out = fput().arg("--config").arg(&cfg).args(["sweep", "--out"]).arg(dir.join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"], "config");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn flags_override_config() {
    let dir = scratch("override");
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, r#"{"m": 4.0, "omegas": [20.0]}"#).unwrap();
    let out = fput().arg("--config").arg(&cfg).args(["scaling", "--omega", "80"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["omega"], 80.0);
    assert!((v["delta"].as_f64().unwrap() - 80f64.powf(-0.5)).abs() < 1e-15);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn shape_and_wave_outputs_repeat_byte_for_byte() {
    let dir = scratch("repeat");
    for _ in 0..2 {
        let s = fput().args(["shape-ode", "--m", "2", "--xmax", "20", "--tol", "1e-10", "--out"]).arg(dir.join("shape.csv")).output().unwrap();
        assert!(s.status.success());
        let w = fput().args(["wave", "--potential", "lj:2", "--omega", "40", "--out"]).arg(dir.join("wave.csv")).output().unwrap();
        assert!(w.status.success());
        fs::rename(dir.join("wave.csv"), dir.join(format!("wave-{}.csv", fs::read_dir(&dir).unwrap().count()))).unwrap();
    }
    let mut waves: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.to_string_lossy().contains("wave-")).collect();
    waves.sort();
    assert_eq!(waves.len(), 2);
    assert_eq!(fs::read(&waves[0]).unwrap(), fs::read(&waves[1]).unwrap());
    let shape = fs::read_to_string(dir.join("shape.csv")).unwrap();
    assert!(shape.starts_with("x,Y,Yp,Te,Tep,To,Top\n0,1,0,1,0,0,1\n"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn bad_potential_string() {
    let out = fput().args(["wave", "--potential", "cubic:3", "--omega", "40"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["error"], "config");
}
