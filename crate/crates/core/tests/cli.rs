//! Command-line behaviour: config layering, outputs and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn icgnn(args: &[&str], extra: &[&Path]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_icgnn"));
    cmd.args(args);
    for p in extra {
        cmd.arg(p);
    }
    cmd.output().unwrap()
}

fn gen_sbm(dir: &Path) {
    let out = icgnn(&["gen-sbm", "--blocks", "30,30", "--p-in", "0.2", "--seed", "1", "--out"], &[dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_layers_apply_in_order() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_sbm(&data);
    let cfg = tmp.path().join("c.cfg");
    std::fs::write(&cfg, "# layered\nmax_epochs = 5\nlr = 0.02\nseeds = 1,2\ndropout = 0.3\n").unwrap();
    let out = tmp.path().join("out");
    let res = Command::new(env!("CARGO_BIN_EXE_icgnn"))
        .args(["train", "--data"])
        .arg(&data)
        .arg("--config")
        .arg(&cfg)
        .args(["--set", "lr=0.03", "--set", "seeds=4,5", "--seed", "9", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    let c = &report["config"];
    assert_eq!(c["hidden_dim"], 64, "default survives");
    assert_eq!(c["max_epochs"], 5, "file overrides default");
    assert_eq!(c["dropout"], 0.3);
    assert_eq!(c["lr"], 0.03, "--set overrides file");
    assert_eq!(c["seeds"], serde_json::json!([9]), "--seed overrides everything");
    assert_eq!(report["seeds"].as_array().unwrap().len(), 1);
}

#[test]
fn validate_data_reports_the_offending_edge_line() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_sbm(&data);
    let edges = data.join("edges.txt");
    let mut text = std::fs::read_to_string(&edges).unwrap();
    let line = text.lines().count() + 1;
    text.push_str("0 60\n");
    std::fs::write(&edges, text).unwrap();

    let out = icgnn(&["validate-data", "--data"], &[&data]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("edges.txt:{line}")), "{err}");
}

#[test]
fn validate_data_accepts_a_good_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    gen_sbm(tmp.path());
    let out = icgnn(&["validate-data", "--data"], &[tmp.path()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("60"));
}

#[test]
fn ablate_emits_one_row_per_variant() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_sbm(&data);
    let out_dir = tmp.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_icgnn"))
        .args(["ablate", "--set", "max_epochs=3", "--seed", "0", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(out_dir.join("ablation.csv")).unwrap();
    let variants: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        variants,
        ["full", "no_s_ics", "no_a_ics", "no_nc", "no_pl", "adjacency_instead_of_T"]
    );
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    assert_eq!(icgnn(&["validate-data", "--data"], &[&missing]).status.code(), Some(4));
    assert_eq!(icgnn(&["no-such-command"], &[]).status.code(), Some(2));
    assert_eq!(icgnn(&["--help"], &[]).status.code(), Some(0));

    gen_sbm(tmp.path());
    let bad_set = icgnn(&["train", "--set", "alpha=2", "--data"], &[tmp.path()]);
    assert_eq!(bad_set.status.code(), Some(2));
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "lr = 0.01\nbogus = 1\n").unwrap();
    let bad_file = Command::new(env!("CARGO_BIN_EXE_icgnn"))
        .args(["train", "--data"])
        .arg(tmp.path())
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(bad_file.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_file.stderr).contains("bad.cfg:2"));
}

#[test]
fn inject_noise_writes_a_consistent_label_table() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_sbm(&data);
    let out_dir = tmp.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_icgnn"))
        .args(["inject-noise", "--set", "noise_rate=0.5", "--set", "label_rate=0.1", "--seed", "2", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(out_dir.join("noisy_labels.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("node_id,clean_label,noisy_label,flipped"));
    let mut rows = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[1] != f[2], f[3] == "1", "{l}");
        rows += 1;
    }
    assert_eq!(rows, 6);
}
