use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use ppcl::sim::{run_single, sweep_with, write_csv, ExperimentConfig, ResultRow, SweepConfig};

use crate::config;
use crate::Failure;

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config_path: PathBuf,
    pub config: ExperimentConfig,
    pub sweep: Option<SweepConfig>,
    pub output_dir: PathBuf,
    pub tool_version: &'static str,
    pub threads: usize,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn run(config_path: &Path, out: &Path, threads: usize) -> Result<(), Failure> {
    let file = config::load(config_path)?;
    if threads == 0 {
        return Err(Failure::config("threads: must be at least 1"));
    }
    let n_classes = config::n_classes(&file.experiment.model);
    let started = unix_now();
    fs::create_dir_all(out).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", out.display())))?;

    let rows = match &file.sweep {
        None => {
            eprintln!("running {} (seed {})", file.experiment.name, file.experiment.master_seed);
            let row = run_single(&file.experiment, threads)?;
            report(&row, 1, 1);
            vec![row]
        }
        Some(plan) => {
            let total = plan.values.len() * plan.repeats;
            eprintln!("running {}: {} values of {} x {} repeats", file.experiment.name, plan.values.len(), plan.axis.label(), plan.repeats);
            let mut done = 0;
            sweep_with(&file.experiment, plan, threads, |row| {
                done += 1;
                report(row, done, total);
            })?
        }
    };

    let mut csv = Vec::new();
    write_csv(&mut csv, &rows, n_classes)?;
    write_atomic(&out.join(RESULTS_FILE), &csv)?;

    let manifest = RunManifest {
        config_path: config_path.to_path_buf(),
        config: file.experiment,
        sweep: file.sweep,
        output_dir: out.to_path_buf(),
        tool_version: env!("CARGO_PKG_VERSION"),
        threads,
        started_unix: started,
        finished_unix: unix_now(),
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Failure::runtime(e.to_string()))?;
    write_atomic(&out.join(MANIFEST_FILE), &json)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.join(RESULTS_FILE).display());
    Ok(())
}

fn report(row: &ResultRow, done: usize, total: usize) {
    let label = if row.axis_value.is_empty() { String::new() } else { format!(" {}={} repeat {}", row.axis, row.axis_value, row.repeat) };
    match (&row.report, &row.failure) {
        (Some(r), _) => eprintln!("[{done}/{total}]{label} accuracy {:.4}", r.test_accuracy),
        (None, Some(f)) => eprintln!("[{done}/{total}]{label} {f}"),
        (None, None) => eprintln!("[{done}/{total}]{label}"),
    }
}

/// Writes to a sibling temporary file, then renames over `path`.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let tmp = path.with_extension("tmp");
    let io = |e: std::io::Error| Failure::runtime(format!("cannot write {}: {e}", path.display()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io)
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}
