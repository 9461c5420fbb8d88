use std::path::PathBuf;

use ncl_cli::{run_command, CommandResult};
use serde_json::Value;

fn run(args: &str) -> CommandResult {
    run_command(std::iter::once("ncl").chain(args.split_whitespace()))
}

fn schema(name: &str) -> jsonschema::Validator {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "schemas", &format!("{name}.schema.json")]
        .iter()
        .collect();
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

/// Runs, checks the exit code, and validates stdout against the named schema.
fn run_valid(args: &str, schema_name: &str, exit: i32) -> Value {
    let r = run(args);
    assert_eq!(r.exit_code, exit, "{args}\nstdout: {}\nstderr: {}", r.stdout, r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap_or_else(|e| panic!("{args}: {e}\n{}", r.stdout));
    let validator = schema(schema_name);
    let errors: Vec<String> = validator.iter_errors(&v).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{args} vs {schema_name}: {errors:?}");
    v
}

#[test]
fn choi12_bound() {
    let v = run_valid("bound choi12 --r 1", "bound_report", 0);
    assert!((v["value"].as_f64().unwrap() - 0.466_506_350_946_109_6).abs() < 1e-12);
    assert!(v["comparisons"].is_object());
}

#[test]
fn every_bound_family_matches_schema() {
    for args in [
        "bound general --d 2 --n 1 --m 2",
        "bound general --d 3 --n 2 --m 3 --eps 0.1",
        "bound multiphase --d 2 --n 1 --m 3",
        "bound choi --d 2 --n 1 --m 2",
        "bound choi12 --r 2",
        "bound spin --s 1 --n 1 --m 2",
    ] {
        run_valid(args, "bound_report", 0);
    }
    let v = run_valid("bound multiphase --d 2 --n 1 --m 2", "bound_report", 0);
    assert_eq!(v["exact"], "3/4");
}

#[test]
fn multiphase_design_verifies() {
    let v = run_valid("design verify --family multiphase --d 2 --n 2", "design_verify", 0);
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["pass"], true);
}

#[test]
fn perturbed_design_fails_verification() {
    let v = run_valid("design verify --family multiphase --d 2 --n 2 --delta 0.1", "design_verify", 1);
    assert_eq!(v["pass"], false);
    assert!(v["epsilon_estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run("bound general --d 2 --n 1 --m 2 --size 2 --eps 1.5").exit_code, 2);
    assert_eq!(run("frobnicate").exit_code, 2);
    assert_eq!(run("design verify --family spin --n 1").exit_code, 2);
    assert_eq!(run("design build --family computational --d 3 --n 2").exit_code, 2);
    let r = run("bound general --d 2 --n 1 --m 2 --size 2 --eps 1.5");
    assert!(r.stdout.is_empty());
    assert!(!r.stderr.is_empty());
}

#[test]
fn guard_exits_3() {
    assert_eq!(run("bound multiphase --d 50 --n 20 --m 40").exit_code, 3);
    assert_eq!(run("oracle syt --max-m 40").exit_code, 3);
}

#[test]
fn help_goes_to_stdout() {
    let r = run("--help");
    assert_eq!(r.exit_code, 0);
    assert!(r.stdout.contains("Usage"));
}

#[test]
fn design_build_round_trips_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.json");
    let p = path.to_str().unwrap();
    let v = run_valid(&format!("design build --family spin --s 1 --n 2 --out {p}"), "design_build", 0);
    assert_eq!(v["size"], 15);
    let text = std::fs::read_to_string(&path).unwrap();
    let ens: Value = serde_json::from_str(&text).unwrap();
    assert!(schema("ensemble").is_valid(&ens));
    let v = run_valid(&format!("design verify --family spin --s 1 --n 2 --input {p}"), "design_verify", 0);
    assert_eq!(v["pass"], true);
}

#[test]
fn design_build_prints_ensemble() {
    for args in [
        "design build --family general --d 2 --n 2",
        "design build --family computational --d 3",
        "design build --family mub --d 3 --n 2",
        "design build --family pauli-choi --r 1",
        "design build --family weyl-choi --d 3",
        "design build --family multiphase --d 2 --n 1 --delta 0.2",
    ] {
        run_valid(args, "ensemble", 0);
    }
}

#[test]
fn protocol_runs() {
    let v = run_valid("protocol run --family general --d 2 --n 2 --samples 4", "protocol_run", 0);
    assert!((v["p_suc"].as_f64().unwrap() - v["p_suc_expected"].as_f64().unwrap()).abs() < 1e-10);
    let v = run_valid("protocol run --family multiphase --d 2 --n 2 --delta 0.05 --samples 4", "protocol_run", 0);
    let eps = v["epsilon"].as_f64().unwrap();
    assert!(v["max_p_res_given_suc"].as_f64().unwrap() <= 2.0 * eps / (1.0 + eps));
}

#[test]
fn nosig_verdicts() {
    let v = run_valid("nosig check --cloner werner --family multiphase --d 2 --n 1 --m 2", "nosig_check", 0);
    assert_eq!(v["linear"], true);
    run_valid("nosig check --cloner depolarizing --p 0.3 --family general --d 2 --n 2 --m 3 --samples 5", "nosig_check", 0);
    run_valid("nosig check --cloner werner --family multiphase --d 2 --n 2 --m 3 --delta 0.05 --samples 5", "nosig_check", 0);
    let v = run_valid("nosig check --cloner bestguess --family multiphase --d 2 --n 1 --m 2", "nosig_check", 1);
    assert!(v["max_pairwise_trace_distance"].as_f64().unwrap() > 0.01);
}

#[test]
fn oracles_pass() {
    for args in [
        "oracle pinching --trials 50",
        "oracle rank --trials 50",
        "oracle haar-choi --samples 2000",
        "oracle syt --max-m 5",
        "oracle quadrature",
    ] {
        let v = run_valid(args, "oracle", 0);
        assert_eq!(v["pass"], true, "{args}");
    }
}

#[test]
fn cloner_eval_respects_bound() {
    let v = run_valid(
        "cloner eval --cloner werner --family general --d 2 --n 1 --m 2 --refinements 30 --samples 200",
        "cloner_eval",
        0,
    );
    let worst = v["estimate"]["worst_case"].as_f64().unwrap();
    assert!((worst - 2.0 / 3.0).abs() < 1e-9);
    run_valid(
        "cloner eval --cloner measure-prepare --family spin --s 0.5 --n 1 --m 2 --refinements 30 --samples 200",
        "cloner_eval",
        0,
    );
}

#[test]
fn identical_argv_gives_identical_stdout() {
    for args in [
        "--seed 7 protocol run --family general --d 2 --n 2 --samples 3",
        "--seed 7 nosig check --cloner bestguess --family multiphase --d 2 --n 1 --m 2 --samples 5",
        "--seed 3 oracle haar-choi --samples 500",
        "--seed 3 design build --family multiphase --d 2 --n 2 --delta 0.1",
    ] {
        assert_eq!(run(args).stdout, run(args).stdout, "{args}");
    }
    assert_ne!(
        run("--seed 1 oracle haar-choi --samples 500").stdout,
        run("--seed 2 oracle haar-choi --samples 500").stdout
    );
}

#[test]
fn sweep_csv_is_lossless() {
    let r = run("sweep --family multiphase --d 2 --n 1 --vary m --from 2 --to 6 --step 1");
    assert_eq!(r.exit_code, 0, "{}", r.stderr);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines.len(), 6);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(&header[..8], &["family", "d", "n", "m", "eps", "size", "bound", "qm_bound"]);
    for (i, line) in lines[1..].iter().enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), header.len());
        assert_eq!(cols[3], (i + 2).to_string());
        let bound: f64 = cols[6].parse().unwrap();
        // 17 significant digits in scientific form
        let mantissa = cols[6].split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        let direct = run(&format!("bound multiphase --d 2 --n 1 --m {}", i + 2));
        let v: Value = serde_json::from_str(&direct.stdout).unwrap();
        assert_eq!(bound.to_bits(), v["value"].as_f64().unwrap().to_bits());
    }
}

#[test]
fn sweep_json_and_file_output() {
    let v = run_valid("--json sweep --family spin --s 0.5 --n 1 --vary eps --from 0 --to 0.2 --step 0.1", "sweep", 0);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1]["bound"].as_f64() >= w[0]["bound"].as_f64()));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let p = path.to_str().unwrap();
    let v = run_valid(&format!("sweep --family general --d 2 --n 1 --from 2 --to 4 --out {p}"), "sweep_written", 0);
    assert_eq!(v["rows"], 3);
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 4);
    assert_eq!(run("sweep --family general --d 2 --n 1 --from 2.5 --to 4").exit_code, 2);
}
