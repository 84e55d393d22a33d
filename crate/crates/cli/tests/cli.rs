use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitplan")).args(args).env_clear().output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Column `name` of the single data row of a two-line CSV.
fn csv_field(text: &str, name: &str) -> String {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    row[header.iter().position(|h| *h == name).unwrap()].to_string()
}

#[test]
fn profile_all_on_aggregator_row() {
    let net = fixture("mobilenet_v2.json");
    let csv = ok(&["profile", path(&net), "--strategy", "all-on-agg"]);
    let overall: f64 = csv_field(&csv, "overall_ms").parse().unwrap();
    assert!((overall - 4.25).abs() < 0.01, "{overall}");
}

#[test]
fn split_zero_is_all_on_aggregator() {
    let net = fixture("mobilenet_v2.json");
    let by_index = ok(&["profile", path(&net), "--split", "0"]);
    let by_name = ok(&["profile", path(&net), "--strategy", "all-on-agg"]);
    let strip = |s: &str| s.lines().nth(1).unwrap().split_once(',').unwrap().1.to_string();
    assert_eq!(strip(&by_index), strip(&by_name));
}

#[test]
fn bad_json_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"input_resolution": 8, "input_channels": 3, "layers": [{"kind": "conv", "in_ch": 3, "out_ch": 4, "k": 3, "stide": 1}]}"#,
    )
    .unwrap();
    let out = run(&["profile", path(&bad), "--split", "0"]);
    assert!(!out.status.success());
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["error"], "parse");
    assert!(record["message"].as_str().unwrap().contains("layers[0]"), "{record}");
}

#[test]
fn hardware_flags_carry_units() {
    let net = fixture("mobilenet_v2.json");
    let csv = ok(&["profile", path(&net), "--split", "0", "--bw-total-bps", "2.4e9"]);
    let comm: f64 = csv_field(&csv, "t_comm_ms").parse().unwrap();
    assert!((comm - 2.007).abs() < 0.001, "{comm}");
}

#[test]
fn split_table_lists_each_applicable_strategy() {
    let single = ok(&["split", path(&fixture("mnasnet_1_0.json"))]);
    let methods: Vec<&str> = single.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["all-on-sen", "all-on-agg", "neurosurgeon"]);
    let multi = ok(&["split", path(&fixture("resnet18_mv.json"))]);
    assert!(multi.lines().any(|l| l.starts_with("split-at-fusion,resnet18_mv")));
}

fn search(out: &Path, extra: &[&str]) -> serde_json::Value {
    let space = fixture("space_toy_a.json");
    let hw = fixture("hw_toy_a.json");
    let mut args = vec!["search", path(&space), "--hw", path(&hw), "--surrogate", "--accuracy-floor", "0.41", "--out", path(out)];
    args.extend_from_slice(extra);
    ok(&args);
    serde_json::from_str(&std::fs::read_to_string(out.join("best.json")).unwrap()).unwrap()
}

#[test]
fn search_is_reproducible_and_stays_in_its_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    search(&a, &["--seed", "7"]);
    search(&b, &["--seed", "7"]);
    for name in ["front.json", "log.csv", "best.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let mut files: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert_eq!(files, ["best.json", "front.json", "log.csv"]);
    let top: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(top.len(), 2);
}

#[test]
fn faster_sensors_keep_at_least_as_much_work_on_the_sensor() {
    let dir = tempfile::tempdir().unwrap();
    let share = |v: &serde_json::Value| {
        let head = v["report"]["head_ops"].as_f64().unwrap();
        head / (head + v["report"]["tail_ops"].as_f64().unwrap())
    };
    let base = search(&dir.path().join("x1"), &["--seed", "3"]);
    let fast = search(&dir.path().join("x4"), &["--seed", "3", "--comp-sen-scale", "4"]);
    assert!(share(&fast) >= share(&base));
}

#[test]
fn zero_generations_still_produce_a_front() {
    let dir = tempfile::tempdir().unwrap();
    search(dir.path(), &["--generations", "0", "--population", "32"]);
    let front: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("front.json")).unwrap()).unwrap();
    assert!(!front.as_array().unwrap().is_empty());
    let log = std::fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert_eq!(log.lines().count(), 2);
}

#[test]
fn init_check_reports_every_scheme_and_shape() {
    let csv = ok(&["init-check", "--shapes", "1:256:8", "--trials", "50"]);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("kaiming_fan_in,1,256,8,0.007812500"));
    assert!(rows[3].starts_with("geometric,1,256,8,0.044194174"));
    let bad = run(&["init-check", "--shapes", "1:0:8"]);
    assert!(!bad.status.success());
}

#[test]
fn sample_plans_are_seeded() {
    let space = fixture("space_single_view.json");
    let plan = |mode: &str, seed: &str| -> serde_json::Value {
        serde_json::from_str(&ok(&["sample-plan", path(&space), "--mode", mode, "--seed", seed])).unwrap()
    };
    assert_eq!(plan("single", "1").as_array().unwrap().len(), 5);
    let multi = plan("multi", "1");
    assert_eq!(multi.as_array().unwrap().len(), 3);
    for entry in multi.as_array().unwrap() {
        let gates = entry["descriptor"]["gates"].as_array().unwrap();
        assert_eq!(gates.iter().filter(|g| g.as_bool().unwrap()).count(), 1);
    }
    assert_eq!(multi, plan("multi", "1"));
}

#[test]
fn enumerate_respects_the_cap() {
    let out = ok(&["enumerate", path(&fixture("space_toy_b.json")), "--max-count", "7"]);
    assert_eq!(out.lines().count(), 7);
}

#[test]
fn version_and_help() {
    assert!(ok(&["--version"]).starts_with("splitplan "));
    let help = ok(&["--help"]);
    for cmd in ["profile", "split", "search", "init-check", "sample-plan", "enumerate"] {
        assert!(help.contains(cmd), "{cmd}");
    }
}
