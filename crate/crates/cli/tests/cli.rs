use std::path::Path;
use std::process::{Command, Output};

use jcas_core::channel::load_channels;
use serde_json::Value;

fn jcas(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jcas"))
        .current_dir(dir)
        .env_remove("JCAS_OUTPUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: [&str; 6] = [
    "--set",
    "sweep.base.K=2",
    "--set",
    "sweep.base.n_tx=4",
    "--set",
    "sweep.base.p_tx_dbm=10",
];

fn small(extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = vec!["pareto".into()];
    v.extend(SMALL.iter().map(|s| s.to_string()));
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn run(dir: &Path, args: &[String]) -> Output {
    let a: Vec<&str> = args.iter().map(String::as_str).collect();
    jcas(dir, &a)
}

#[test]
fn default_config_runs_the_default_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let o = jcas(dir.path(), &["pareto"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("jcas-out/pareto.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,K,n_tx,n_rx,p_tx_dbm,eirp_dbm,seed,alpha,mi_bits,fi,power_used,converged,iterations"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 41);
    assert!(rows
        .iter()
        .all(|r| r.starts_with("multiuser,4,10,10,30.0,,1,")));
    assert!(rows.iter().all(|r| r.contains(",true,")));
}

#[test]
fn alphas_flag_emits_two_rows_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &small(&["--alphas", "0,1", "--set", "sweep.param_grid.seed=[1,2,3]"]),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("jcas-out/pareto.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    let plot = std::fs::read_to_string(dir.path().join("jcas-out/pareto_plot.csv")).unwrap();
    assert_eq!(plot.lines().next().unwrap(), "cell,alpha,fi,mi_bits");
    assert_eq!(plot.lines().count(), 1 + 3 * 2);
}

#[test]
fn rerun_is_identical_apart_from_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| std::fs::read(dir.path().join("jcas-out").join(name)).unwrap();
    let strip = |bytes: Vec<u8>| {
        let mut v: Value = serde_json::from_slice(&bytes).unwrap();
        v.as_object_mut().unwrap().remove("created_unix_s");
        v
    };
    assert!(run(dir.path(), &small(&["--svg"])).status.success());
    let (csv, plot, svg, record) = (
        read("pareto.csv"),
        read("pareto_plot.csv"),
        read("pareto.svg"),
        read("pareto.json"),
    );
    assert!(run(dir.path(), &small(&["--svg"])).status.success());
    assert_eq!(csv, read("pareto.csv"));
    assert_eq!(plot, read("pareto_plot.csv"));
    assert_eq!(svg, read("pareto.svg"));
    assert_eq!(strip(record), strip(read("pareto.json")));
}

#[test]
fn run_record_embeds_config_versions_and_hashes() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &small(&["--alphas", "0,0.5,1"]))
        .status
        .success());
    let rec: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("jcas-out/pareto.json")).unwrap())
            .unwrap();
    assert_eq!(rec["config"]["sweep"]["base"]["K"], 2);
    assert_eq!(rec["core_version"], jcas_core::VERSION);
    let hash = rec["cells"][0]["channel_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(rec["points"]
        .as_array()
        .unwrap()
        .iter()
        .all(|p| p["channel_hash"] == hash));
    assert!(rec["created_unix_s"].as_u64().is_some());
}

#[test]
fn generated_channel_file_reproduces_the_seeded_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = jcas(
        dir.path(),
        &[
            "channels",
            "gen",
            "--set",
            "channels.channel.n_users=2",
            "--set",
            "channels.channel.user_distances_m=[1.0,1.0]",
            "--set",
            "channels.array.n_tx=4",
            "--set",
            "channels.array.n_rx=4",
            "--seed",
            "1",
            "-o",
            "h.json",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let cs = load_channels(&dir.path().join("h.json"), Some(4)).unwrap();
    assert_eq!(cs.n_users(), 2);

    assert!(run(
        dir.path(),
        &small(&["--alphas", "0,1", "--set", "output.prefix=seeded"])
    )
    .status
    .success());
    let from_file = small(&[
        "--alphas",
        "0,1",
        "--set",
        "output.prefix=file",
        "--set",
        r#"sweep.channel_source={"kind":"file","path":"h.json"}"#,
    ]);
    let o = run(dir.path(), &from_file);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read(dir.path().join("jcas-out/seeded.csv")).unwrap();
    let b = std::fs::read(dir.path().join("jcas-out/file.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seed_flag_beats_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"channels": {"channel": {"rng_seed": 5}}}"#,
    )
    .unwrap();
    let gen = |extra: &[&str], out: &str| {
        let mut a = vec!["channels", "gen", "-c", "cfg.json", "-o", out];
        a.extend_from_slice(extra);
        assert!(jcas(dir.path(), &a).status.success());
        load_channels(&dir.path().join(out), None)
            .unwrap()
            .provenance
            .seed
    };
    assert_eq!(gen(&[], "a.json"), Some(5));
    assert_eq!(gen(&["--seed", "9"], "b.json"), Some(9));
}

#[test]
fn bad_field_type_is_a_validation_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"channels": {"channel": {"pathloss_exponent": "steep"}}}"#,
    )
    .unwrap();
    let o = jcas(dir.path(), &["channels", "gen", "-c", "cfg.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("channels.channel.pathloss_exponent"),
        "{}",
        stderr(&o)
    );
    let o = jcas(dir.path(), &["pareto", "--set", "sweep.base.K=0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sweep."), "{}", stderr(&o));
}

#[test]
fn strict_mode_exits_2_on_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let args = small(&[
        "--preset",
        "eirp",
        "--set",
        "sweep.pgd.max_iters=1",
        "--alphas",
        "0.5",
    ]);
    let o = run(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("jcas-out/pareto.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|r| r.contains(",false,")), "{csv}");
    let mut strict = args.clone();
    strict.push("--strict".into());
    assert_eq!(run(dir.path(), &strict).status.code(), Some(2));
}

#[test]
fn output_dir_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_jcas"))
        .current_dir(dir.path())
        .env("JCAS_OUTPUT_DIR", "envout")
        .args(small(&["--alphas", "0"]))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("envout/pareto.csv").exists());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("blocker"), "x").unwrap();
    let o = run(
        dir.path(),
        &small(&["--alphas", "0", "--out-dir", "blocker/sub"]),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn verify_only_runs_the_selected_group() {
    let dir = tempfile::tempdir().unwrap();
    let o = jcas(dir.path(), &["verify", "--only", "fisher", "-o", "v.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rep: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("v.json")).unwrap()).unwrap();
    assert_eq!(rep["groups"], serde_json::json!(["fisher"]));
    assert_eq!(rep["passed"], true);
    for c in rep["checks"].as_array().unwrap() {
        assert_eq!(c["group"], "fisher");
        assert!(c["tolerance"].is_number() && c["error"].is_number());
    }
    let o = jcas(dir.path(), &["verify", "--only", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn full_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = jcas(dir.path(), &["verify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("jcas-out/verify.json").exists());
}
