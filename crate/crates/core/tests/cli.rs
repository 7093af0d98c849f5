use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use shapinglab::cli::RunManifest;

fn shapinglab(args: &[&str], data_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_shapinglab"));
    cmd.args(args).env_remove("SHAPINGLAB_DATA_DIR");
    if let Some(d) = data_dir {
        cmd.env("SHAPINGLAB_DATA_DIR", d);
    }
    cmd.output().unwrap()
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("shapinglab-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(shapinglab(&["optimize-gs", "--M", "3", "--snr", "5"], None).status.code(), Some(2));
    assert_eq!(shapinglab(&["rates", "--uniform-ask", "8"], None).status.code(), Some(2));
    assert_eq!(shapinglab(&["rates", "--uniform-ask", "8", "--metric", "xmd", "--snr", "0"], None).status.code(), Some(2));
    assert_eq!(shapinglab(&["no-such-command"], None).status.code(), Some(2));
}

#[test]
fn rate_sweep_csv() {
    let out = shapinglab(&["rates", "--uniform-ask", "8", "--metric", "bmd", "--snr", "0:20:0.5"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "snr_db,rate_bpcu,gap_db,metric,constellation_id");
    assert_eq!(lines.len(), 42);
    let rates: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(rates.windows(2).all(|w| w[1] > w[0]));
    assert!(rates[40] < 3.0);
}

#[test]
fn manifest_replays() {
    let dir = scratch_dir("replay");
    let out = dir.join("plan.csv");
    let run = shapinglab(&["pas-plan", "--se-grid", "2:4:1", "--out", out.to_str().unwrap()], None);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let manifest_file = dir.join("plan.csv.manifest.json");
    let manifest = RunManifest::load(&manifest_file).unwrap();
    assert_eq!(manifest.command, "pas-plan");
    assert_eq!(manifest.outputs.len(), 1);

    let ok = shapinglab(&["replay", manifest_file.to_str().unwrap()], None);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    // a tampered digest is reported
    let mut bad = manifest.clone();
    bad.outputs[0].sha256 = "0".repeat(64);
    bad.save(dir.join("bad.json")).unwrap();
    assert_eq!(shapinglab(&["replay", dir.join("bad.json").to_str().unwrap()], None).status.code(), Some(1));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn exported_code_loads_from_data_dir() {
    let dir = scratch_dir("alist");
    let alist = dir.join("toy.alist");
    let export = shapinglab(&["export", "--peg", "96:48:3", "--out", alist.to_str().unwrap()], None);
    assert!(export.status.success());
    let sim = shapinglab(
        &["simulate", "--uniform-ask", "2", "--alist", "toy.alist", "--snr", "8", "--max-frames", "32"],
        Some(&dir),
    );
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let text = String::from_utf8(sim.stdout).unwrap();
    assert!(text.starts_with("snr_db,frames,frame_errors,bit_errors,fer,ber\n8,32,0,0,0,0"));
    std::fs::remove_dir_all(dir).unwrap();
}
