use replimut::config::{Command, RunConfig};
use std::fs;
use std::path::Path;
use std::process::{Command as Process, Output};

fn replimut(args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_replimut")).args(args).output().unwrap()
}

fn run_with(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{sub}.json"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("{sub}-out"));
    let mut args = vec![sub, "-q", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    replimut(&args)
}

fn error_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn config_round_trips_canonically() {
    let text = r#"{"fitness":{"catalog":"zaslavski","params":{"b":0.25,"c":0}},
        "sigma":1,"grid":{"half_length":8,"nodes":401},"k":"all",
        "initial":{"preset":"off_centered_mixture","epsilon":0.01},"times":[0.5,1],"method":"both"}"#;
    let parsed = RunConfig::from_json(text).unwrap().resolve(Command::Evolve).unwrap();
    let canonical = parsed.canonical_json();
    let again = RunConfig::from_json(&canonical).unwrap();
    assert_eq!(again, parsed);
    assert_eq!(again.canonical_json(), canonical);
    let verify = RunConfig::default_verify();
    assert_eq!(RunConfig::from_json(&verify.canonical_json()).unwrap(), verify);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for (sub, cfg) in [
        ("eigs", r#"{"fitness":{"catalog":"harmonic"},"k":0}"#),
        ("evolve", r#"{"fitness":{"catalog":"harmonic"},"initial":{"preset":"centered_gaussian"},"times":[]}"#),
        ("eigs", r#"{"fitness":{"catalog":"nonesuch"}}"#),
        ("eigs", r#"{"fitness":{"catalog":"harmonic"},"typo":1}"#),
        ("sweep", r#"{"fitness":{"catalog":"double_well"},"sigmas":[0.1,0.3,0.2]}"#),
        ("eigs", r#"{"fitness":{"polynomial":[0,0,1]}}"#),
        ("eigs", r#"{"command":"sweep","fitness":{"catalog":"harmonic"}}"#),
    ] {
        let out = run_with(dir.path(), sub, cfg, &[]);
        assert_eq!(out.status.code(), Some(2), "{cfg}");
        assert_eq!(error_json(&out)["error"]["kind"], "config");
    }
    let out = replimut(&["eigs", "-q", "-c", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_errors_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"fitness":{"catalog":"double_well"},"sigma":1e-3,"grid":"auto","k":1,
        "auto_grid":{"target_rel_error":1e-7,"max_nodes":101}}"#;
    let out = run_with(dir.path(), "eigs", cfg, &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"]["kind"], "solver");
}

#[test]
fn eigs_writes_spectrum_and_eigenfunctions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"fitness":{"catalog":"harmonic"},"sigma":1,"grid":{"half_length":10,"nodes":2001},"k":5,"eigenfunction_columns":3}"#;
    let out = run_with(dir.path(), "eigs", cfg, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("eigs-out");
    let (header, rows) = read_csv(&root.join("eigs.csv"));
    assert_eq!(header, ["k", "lambda", "mass", "weighted_mass", "l1", "linf", "wl1"]);
    assert_eq!(rows.len(), 5);
    for (k, row) in rows.iter().enumerate() {
        let lambda: f64 = row[1].parse().unwrap();
        assert!((lambda - (2 * k + 1) as f64).abs() < 1e-3);
        assert!(row[1].contains('e'));
    }
    let (header, rows) = read_csv(&root.join("eigenfunctions.csv"));
    assert_eq!(header, ["x", "phi0", "phi1", "phi2"]);
    assert_eq!(rows.len(), 2001);
    let echoed = fs::read_to_string(root.join("config.json")).unwrap();
    let config = RunConfig::from_json(&echoed).unwrap();
    assert_eq!(config.canonical_json(), echoed);
}

#[test]
fn evolve_from_csv_initial_data() {
    let dir = tempfile::tempdir().unwrap();
    let n = 801;
    let mut csv = String::from("x,u\n");
    for j in 0..n {
        let x = -8.0 + 16.0 * j as f64 / (n - 1) as f64;
        csv.push_str(&format!("{x},{}\n", 3.0 * (-(x - 1.0) * (x - 1.0)).exp()));
    }
    let data = dir.path().join("u0.csv");
    fs::write(&data, csv).unwrap();
    let cfg = format!(
        r#"{{"fitness":{{"catalog":"harmonic"}},"sigma":1,"grid":{{"half_length":8,"nodes":{n}}},"k":"all",
            "initial":{{"preset":"csv","path":{:?}}},"times":[0,0.5,2],"method":"both"}}"#,
        data.to_str().unwrap()
    );
    let out = run_with(dir.path(), "evolve", &cfg, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("evolve-out");
    let (header, rows) = read_csv(&root.join("summary.csv"));
    assert_eq!(header, ["t", "mass", "mean_fitness", "l1_gap", "l2_gap", "linf_gap"]);
    for row in &rows {
        assert!((row[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-10);
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    let (header, rows) = read_csv(&root.join("trajectory.csv"));
    assert_eq!(header, ["t", "x", "u"]);
    assert_eq!(rows.len(), 3 * n);
    assert!(root.join("trajectory_cn.csv").exists());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("summary.json")).unwrap()).unwrap();
    assert!(summary["method_gap"][2]["linf"].as_f64().unwrap() < 1e-4);

    let short = cfg.replace("\"nodes\":801", "\"nodes\":401");
    let out = run_with(dir.path(), "evolve", &short, &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_output_is_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"fitness":{"catalog":"scaled_double_well"},"sigmas":[2.0,1.0,0.5,0.25]}"#;
    let read = |jobs: &str| {
        let sub = tempfile::tempdir_in(dir.path()).unwrap();
        let out = run_with(sub.path(), "sweep", cfg, &["-j", jobs]);
        assert!(out.status.success());
        let root = sub.path().join("sweep-out");
        (fs::read(root.join("sweep.csv")).unwrap(), fs::read(root.join("summary.json")).unwrap())
    };
    let one = read("1");
    assert_eq!(one, read("3"));
    let text = String::from_utf8(one.0).unwrap();
    let counts: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(counts, ["1", "1", "2", "2"]);
}

#[test]
fn jobs_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.json");
    fs::write(&cfg, r#"{"fitness":{"catalog":"double_well"},"sigmas":[1.0,0.5]}"#).unwrap();
    let out = Process::new(env!("CARGO_BIN_EXE_replimut"))
        .args(["sweep", "-c", cfg.to_str().unwrap(), "-o", dir.path().join("o").to_str().unwrap()])
        .env("REPLIMUT_JOBS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("2 job(s)"));
}

#[test]
fn verify_reports_modality_and_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"fitness":{"catalog":"zaslavski","params":{"b":0.25,"c":0}},"grid":{"half_length":8,"nodes":4001},"criteria":false}"#;
    let out = run_with(dir.path(), "verify", cfg, &[]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify-out/report.json")).unwrap()).unwrap();
    let modality = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "modality").unwrap();
    assert_eq!(modality["value"], 2.0);

    let sub = tempfile::tempdir_in(dir.path()).unwrap();
    let cfg = r#"{"fitness":{"catalog":"harmonic"},"sigma":1,"grid":{"half_length":3,"nodes":601},"criteria":false}"#;
    let out = run_with(sub.path(), "verify", cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(sub.path().join("verify-out/report.json")).unwrap()).unwrap();
    let truncation = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "truncation").unwrap();
    assert_eq!(truncation["passed"], false);
}

#[test]
fn every_catalog_entry_builds() {
    use replimut::config::{build_model, catalog_names, FitnessSpec};
    for name in catalog_names() {
        let spec = FitnessSpec::Catalog { catalog: name.into(), params: Default::default() };
        let model = build_model(&spec, Some(0.5)).unwrap();
        assert!(model.fitness.value(0.0).is_finite(), "{name}");
    }
    let spec = FitnessSpec::Catalog { catalog: "zaslavski".into(), params: [("d".to_string(), 1.0)].into() };
    assert!(build_model(&spec, None).is_err());
    let model = build_model(&FitnessSpec::Coefficients { coefficients: vec![0.0, 1.0] }, None).unwrap();
    assert!(model.fitness.value(2.0) < model.fitness.value(0.0));
}

#[test]
fn floats_keep_seventeen_significant_digits() {
    for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
        let s = replimut::output::fmt(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }
    assert_eq!(replimut::output::join([1.0, 2.0]), "1.0000000000000000e0;2.0000000000000000e0");
}

#[test]
fn identical_configs_give_identical_bytes() {
    let files = |sub: &str, cfg: &str, names: &[&str]| -> Vec<Vec<u8>> {
        let dir = tempfile::tempdir().unwrap();
        let out = run_with(dir.path(), sub, cfg, &[]);
        assert!(out.status.success());
        names.iter().map(|n| fs::read(dir.path().join(format!("{sub}-out")).join(n)).unwrap()).collect()
    };
    let eigs = r#"{"fitness":{"catalog":"decic"},"grid":{"half_length":3,"nodes":1201},"k":4}"#;
    let names = ["eigs.csv", "eigenfunctions.csv", "summary.json", "config.json"];
    assert_eq!(files("eigs", eigs, &names), files("eigs", eigs, &names));
    let verify = r#"{"fitness":{"catalog":"decic"},"grid":{"half_length":3,"nodes":1201},"k":4,"criteria":false}"#;
    assert_eq!(files("verify", verify, &["report.json"]), files("verify", verify, &["report.json"]));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = RunConfig::load(&path).unwrap();
        let command = config.command.expect("shipped configs name their command");
        config.resolve(command).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 5);
}
