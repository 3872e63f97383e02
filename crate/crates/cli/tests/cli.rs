use std::process::{Command, Output};

use splitplan_cli::SweepRow;
use splitplan_core::problem::evaluate_split;
use splitplan_core::profile::bundled;
use splitplan_core::{true_selection, Normalization, ProblemInstance};

fn splitplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitplan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn sweep(model: &str) -> Vec<SweepRow> {
    let text = stdout(&splitplan(&["sweep", model]));
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

#[test]
fn optimize_alexnet_matches_oracle() {
    let doc: serde_json::Value =
        serde_json::from_str(&stdout(&splitplan(&["optimize", "alexnet"]))).unwrap();
    let inst = ProblemInstance::reference(bundled("alexnet").unwrap());
    let oracle = true_selection(&inst, Normalization::Vector).unwrap();
    let l1 = oracle.choice.individual.candidate.l1;
    assert_eq!(doc["chosen_l1"], l1);
    assert_eq!(doc["chosen_l2"], 21 - l1);
    assert_eq!(doc["seed"], 42);
    assert_eq!(doc["ga_config"]["population_size"], 40);
    let t_total = doc["breakdown"]["t_total"].as_f64().unwrap();
    assert_eq!(t_total, oracle.choice.individual.objectives.f1);
    assert!(doc["pareto_set"].as_array().unwrap().len() > 1);
}

#[test]
fn optimize_is_reproducible_for_a_seed() {
    let a = stdout(&splitplan(&["optimize", "mobilenet_v2", "--seed", "7"]));
    let b = stdout(&splitplan(&["optimize", "mobilenet_v2", "--seed", "7"]));
    assert_eq!(a, b);
}

#[test]
fn sweep_alexnet_round_trips() {
    let rows = sweep("alexnet");
    assert_eq!(rows.len(), 20);
    let inst = ProblemInstance::reference(bundled("alexnet").unwrap());
    for (row, l1) in rows.iter().zip(1..) {
        let v = evaluate_split(&inst, l1).unwrap();
        assert_eq!((row.l1, row.l2), (l1, 21 - l1));
        assert_eq!(row.f1_s.to_bits(), v.f1.to_bits());
        assert_eq!(row.f2_mj.to_bits(), v.f2.to_bits());
        assert_eq!(row.f3_bytes.to_bits(), v.f3.to_bits());
        assert!(row.feasible);
    }
    assert_eq!(rows.iter().filter(|r| r.chosen).count(), 1);
    assert!(rows.iter().filter(|r| r.chosen).all(|r| r.pareto));
}

#[test]
fn sweep_header() {
    let text = stdout(&splitplan(&["sweep", "alexnet"]));
    assert_eq!(
        text.lines().next().unwrap(),
        "l1,l2,f1_s,f2_mJ,f3_bytes,feasible,pareto,chosen"
    );
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn sweep_vgg16_one_chosen_row() {
    let rows = sweep("vgg16");
    assert_eq!(rows.len(), 38);
    assert_eq!(rows.iter().filter(|r| r.chosen).count(), 1);
}

#[test]
fn compare_alexnet() {
    let text = stdout(&splitplan(&["compare", "alexnet", "--output", "json"]));
    let rows: Vec<splitplan_cli::CompareRow> = serde_json::from_str(&text).unwrap();
    let labels: Vec<&str> = rows.iter().map(|r| r.algorithm.as_str()).collect();
    assert_eq!(labels, ["NSGA2-TOPSIS", "LBO", "EBO", "COS", "COC", "RS"]);
    let by = |name: &str| rows.iter().find(|r| r.algorithm == name).unwrap();
    assert_eq!(by("COS").l1, 21);
    assert_eq!(by("COC").l1, 0);
    let lbo = by("LBO").f1_s;
    // COS skips the network and server entirely, so it is the one row LBO cannot beat.
    for r in rows.iter().filter(|r| r.in_feasible_set) {
        assert!(lbo <= r.f1_s, "{} has f1 {}", r.algorithm, r.f1_s);
    }
    let ebo = by("EBO").f2_mj;
    for r in rows.iter().filter(|r| r.in_feasible_set) {
        assert!(ebo <= r.f2_mj, "{} has f2 {}", r.algorithm, r.f2_mj);
    }
}

#[test]
fn profile_lists_every_layer() {
    let text = stdout(&splitplan(&["profile", "alexnet", "--output", "csv"]));
    assert_eq!(text.lines().count(), 22);
    assert!(text.lines().nth(1).unwrap().starts_with("1,conv2d,64x55x55,23296,"));
}

#[test]
fn profile_from_file_path() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/vgg11.json");
    let text = stdout(&splitplan(&["profile", path]));
    assert!(text.starts_with("model vgg11 (29 layers"));
}

#[test]
fn memory_cap_too_small_exits_two() {
    let out = splitplan(&["optimize", "alexnet", "--memory-cap", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
}

#[test]
fn garbage_input_exits_one() {
    let dir = std::env::temp_dir().join(format!("splitplan-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("garbage.json");
    std::fs::write(&path, "not json {").unwrap();
    let out = splitplan(&["optimize", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_values_exit_three() {
    let out = splitplan(&["optimize", "alexnet", "--bandwidth", "0"]);
    assert_eq!(out.status.code(), Some(3));
    let out = splitplan(&["optimize", "alexnet", "--pop", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(splitplan(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(splitplan(&["optimize", "alexnet", "--output", "xml"]).status.code(), Some(1));
    assert_eq!(splitplan(&["--help"]).status.code(), Some(0));
}

#[test]
fn bandwidth_flag_scales_upload_time() {
    let at = |bw: &str| -> f64 {
        let text = stdout(&splitplan(&["sweep", "alexnet", "--bandwidth", bw, "--output", "json"]));
        let rows: Vec<SweepRow> = serde_json::from_str(&text).unwrap();
        rows[0].f1_s
    };
    assert!(at("20") < at("10"));
}
