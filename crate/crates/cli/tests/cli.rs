use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_ppcl");

const HEADER: &str = "experiment_id,axis,axis_value,repeat,seed,mode,scheme,N,rho,epsilon,f,kappa,test_accuracy,\
f1_class_0,f1_class_1,ncl_min,ncl_mean,ncl_max,overlap_rate,bytes_per_participant,adds_per_participant,\
muls_per_participant,participant_time_s,coordinator_time_s";

fn minimal(extra: &str) -> String {
    format!(
        r#"
name = "tiny"
n_participants = 2
master_seed = 5
scheme = {{ type = "projection", kind = {{ type = "gaussian", sigma = 1.0 }}, compression_ratio = 1.0 }}
model = {{ type = "mlp", layer_sizes = [6, 2] }}
train = {{ learning_rate = 0.05, batch_size = 16, epochs = 2 }}
data = {{ source = {{ kind = "gaussian2d", n_per_class = 60 }} }}
overlap = {{ subsample = 40 }}
{extra}
"#
    )
}

fn ppcl(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("PPCL_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    fs::write(&p, text).unwrap();
    p
}

fn run_config(text: &str, env: &[(&str, &str)]) -> (TempDir, Output) {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), text);
    let out = dir.path().join("out");
    let o = ppcl(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], env);
    (dir, o)
}

fn results(dir: &TempDir) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(dir.path().join("out/results.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>().join(","), HEADER);
    r.records().map(Result::unwrap).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn single_run_writes_header_and_one_row() {
    let (dir, o) = run_config(&minimal(""), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = results(&dir);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "tiny");
    assert_eq!(&rows[0][1], "none");
    assert_eq!(&rows[0][6], "grp");
    let acc: f64 = rows[0][12].parse().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["master_seed"], 5);
    assert!(manifest["started_unix"].as_u64().unwrap() <= manifest["finished_unix"].as_u64().unwrap());
    assert!(manifest["tool_version"].is_string());
    assert!(!dir.path().join("out/results.tmp").exists());
}

#[test]
fn sweep_writes_one_row_per_value_and_repeat() {
    let sweep = "[sweep]\naxis = \"n\"\nvalues = [1, 2, 3, 4, 5]\nrepeats = 3\n";
    let (dir, o) = run_config(&minimal(sweep), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = results(&dir);
    assert_eq!(rows.len(), 15);
    let order: Vec<(String, String)> = rows.iter().map(|r| (r[2].to_string(), r[3].to_string())).collect();
    assert_eq!(order[0], ("1".into(), "0".into()));
    assert_eq!(order[4], ("2".into(), "1".into()));
    assert_eq!(order[14], ("5".into(), "2".into()));
    assert!(rows.iter().all(|r| r[7] == r[2]));
}

#[test]
fn compression_below_one_is_a_config_error() {
    let text = minimal("").replace("compression_ratio = 1.0", "compression_ratio = 0.5");
    let (_dir, o) = run_config(&text, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("compression_ratio"), "{}", stderr(&o));
}

#[test]
fn unknown_field_is_a_config_error_naming_it() {
    let (_dir, o) = run_config(&minimal("learning_rat = 3"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("learning_rat"), "{}", stderr(&o));
}

#[test]
fn missing_data_file_is_a_runtime_error() {
    let text = minimal("").replace(r#"{ kind = "gaussian2d", n_per_class = 60 }"#, r#"{ kind = "cache", path = "absent.bin" }"#);
    let (_dir, o) = run_config(&text, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn seed_variable_overrides_config() {
    let (dir, o) = run_config(&minimal(""), &[("PPCL_SEED", "77")]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(&results(&dir)[0][4], "77");

    let (_dir, o) = run_config(&minimal(""), &[("PPCL_SEED", "seven")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("PPCL_SEED"));
}

fn without_timings(dir: &TempDir) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(dir.path().join("out/results.csv")).unwrap();
    let headers = r.headers().unwrap().clone();
    let keep: Vec<usize> = (0..headers.len()).filter(|&i| !headers[i].ends_with("_time_s")).collect();
    r.records().map(|rec| keep.iter().map(|&i| rec.as_ref().unwrap()[i].to_string()).collect()).collect()
}

#[test]
fn rerun_reproduces_results() {
    let (a, oa) = run_config(&minimal(""), &[]);
    let (b, ob) = run_config(&minimal(""), &[]);
    assert!(oa.status.success() && ob.status.success());
    assert_eq!(without_timings(&a), without_timings(&b));
}

#[test]
fn gen_data_writes_cache_of_expected_size() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.bin");
    let b = dir.path().join("b.bin");
    for p in [&a, &b] {
        let o = ppcl(&["gen-data", "--kind", "gaussian2d", "--n-per-class", "10000", "--seed", "3", "--out", p.to_str().unwrap()], &[]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let n = 20_000u64;
    let d = 2u64;
    assert_eq!(fs::metadata(&a).unwrap().len(), 52 + n * (8 * d + 2));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(&fs::read(&a).unwrap()[..8], b"PPCLDAT1");
}

#[test]
fn gen_data_cache_feeds_a_run() {
    let dir = TempDir::new().unwrap();
    let cache = dir.path().join("ten.bin");
    let o = ppcl(&["gen-data", "--kind", "gaussian10d", "--n-per-class", "50", "--out", cache.to_str().unwrap()], &[]);
    assert!(o.status.success());
    let text = minimal("").replace(r#"{ kind = "gaussian2d", n_per_class = 60 }"#, r#"{ kind = "cache", path = "ten.bin" }"#);
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = ppcl(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let muls: f64 = results(&dir)[0][21].parse().unwrap();
    assert!(muls > 0.0);
}

#[test]
fn gen_data_unknown_kind_exits_one() {
    let o = ppcl(&["gen-data", "--kind", "cifar", "--out", "/dev/null"], &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gen_data_csv_needs_its_flags() {
    let o = ppcl(&["gen-data", "--kind", "csv", "--out", "/dev/null"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--path"));
}

#[test]
fn verify_gradcheck_passes() {
    let o = ppcl(&["verify", "--suite", "gradcheck"], &[]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("max relative error") && text.trim_end().ends_with("PASS"), "{text}");
}

#[test]
fn verify_property2_prints_deviation() {
    let o = ppcl(&["verify", "--suite", "property2"], &[]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("adjoint max variance deviation"));
}

#[test]
fn verify_unknown_suite_exits_one() {
    assert_eq!(ppcl(&["verify", "--suite", "property3"], &[]).status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    assert_eq!(ppcl(&["--help"], &[]).status.code(), Some(0));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            // threads = 0 fails after the config is accepted, so nothing runs.
            let o = ppcl(&["run", "--config", path.to_str().unwrap(), "--out", "/nonexistent", "--threads", "0"], &[]);
            let err = stderr(&o);
            assert!(err.contains("threads"), "{}: {err}", path.display());
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
