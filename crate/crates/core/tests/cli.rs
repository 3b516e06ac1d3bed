use std::path::PathBuf;
use std::process::{Command, Output};

use wdm_ep::cli::{parse_config, Action, CSV_HEADER};

fn wdm_ep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wdm-ep")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wdm-ep-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn rows(stdout: &[u8]) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(stdout);
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn single_run_writes_three_metric_rows() {
    let out = wdm_ep(&["--requests", "500", "--replications", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows(&out.stdout);
    let metrics: Vec<&str> = rows.iter().map(|r| r[10].as_str()).collect();
    assert_eq!(metrics, ["blocking_probability", "mean_execution_time_ms", "total_fitness_evaluations"]);
    assert_eq!(&rows[0][..10], ["single", "nsf14", "8", "60", "exponential", "first-fit", "500", "8", "15", "1"]);
    // every request costs 1 + G*C evaluations, identically in each replication
    assert_eq!(rows[2][11].parse::<f64>().unwrap(), 121.0 * 500.0);
    assert_eq!(rows[2][12].parse::<f64>().unwrap(), 0.0);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("blocking") && stderr.contains("warm-up 0.05"), "{stderr}");
}

#[test]
fn generation_sweep_has_a_point_per_value() {
    let out = wdm_ep(&["--requests", "300", "--replications", "1", "--sweep", "generations", "1:8"]);
    assert!(out.status.success());
    let rows = rows(&out.stdout);
    assert_eq!(rows.len(), 24);
    let gs: Vec<&str> = rows.iter().step_by(3).map(|r| r[7].as_str()).collect();
    assert_eq!(gs, ["1", "2", "3", "4", "5", "6", "7", "8"]);
    assert!(rows.iter().all(|r| r[0] == "sweep-generations"));
}

#[test]
fn compare_modes() {
    let out = wdm_ep(&["--requests", "300", "--replications", "1", "--compare", "strategies"]);
    assert!(out.status.success());
    let strategies: Vec<String> = rows(&out.stdout).iter().step_by(3).map(|r| r[5].clone()).collect();
    assert_eq!(strategies, ["first-fit", "random", "round-robin"]);

    let out = wdm_ep(&[
        "--requests", "300", "--replications", "1", "--compare", "holding", "--holding", "pareto:1.2:1",
    ]);
    assert!(out.status.success());
    let holding: Vec<String> = rows(&out.stdout).iter().step_by(3).map(|r| r[4].clone()).collect();
    assert_eq!(holding, ["exponential", "pareto:1.2:1"]);
}

#[test]
fn csv_row_reproduces_its_configuration() {
    let out = wdm_ep(&[
        "--requests", "400", "--replications", "1", "--wavelengths", "4", "--strategy", "round-robin",
        "--load", "30", "--seed", "9", "--holding", "pareto-matched:1",
    ]);
    assert!(out.status.success());
    let first = rows(&out.stdout).remove(0);
    let args = [
        "wdm-ep", "--topology", &first[1], "--wavelengths", &first[2], "--load", &first[3], "--holding", &first[4],
        "--strategy", &first[5], "--requests", &first[6], "--generations", &first[7], "--offspring", &first[8],
        "--seed", &first[9], "--replications", "1",
    ];
    let again = wdm_ep(&args[1..]);
    assert!(again.status.success());
    assert_eq!(rows(&again.stdout)[..3], rows(&out.stdout)[..3]);
    assert_eq!(parse_config(args).unwrap().action, Action::Single);
}

#[test]
fn config_file_with_flag_override() {
    let path = scratch("exp.conf");
    std::fs::write(&path, "# experiment\nwavelengths = 4\nrequests = 200\nreplications = 1\nstrategy = random\n").unwrap();
    let out = wdm_ep(&["--config", path.to_str().unwrap(), "--wavelengths", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = rows(&out.stdout).remove(0);
    assert_eq!((first[2].as_str(), first[5].as_str(), first[6].as_str()), ("6", "random", "200"));
}

#[test]
fn output_file_and_custom_topology() {
    let topo = scratch("square.topo");
    std::fs::write(&topo, "nodes 4\nlink 0 1 1\nlink 1 2 1\nlink 2 3 1\nlink 3 0 2.5\n").unwrap();
    let csv_path = scratch("square.csv");
    let out = wdm_ep(&[
        "--topology", topo.to_str().unwrap(), "--requests", "200", "--replications", "1", "--load", "2",
        "--output", csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let rows = rows(&std::fs::read(&csv_path).unwrap());
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], topo.to_str().unwrap());
}

#[test]
fn error_exit_codes() {
    let out = wdm_ep(&["--wavelengths", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wavelengths"));
    assert_eq!(wdm_ep(&["--no-such-flag"]).status.code(), Some(1));
    assert_eq!(wdm_ep(&["--sweep", "generations", "3:1"]).status.code(), Some(1));

    let out = wdm_ep(&["--topology", "/nonexistent/net.topo", "--requests", "10"]);
    assert_eq!(out.status.code(), Some(2));

    let bad = scratch("bad.topo");
    std::fs::write(&bad, "nodes 3\nlink 0 1 1\n").unwrap();
    assert_eq!(wdm_ep(&["--topology", bad.to_str().unwrap()]).status.code(), Some(2));

    let help = wdm_ep(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("--sweep"));
}
