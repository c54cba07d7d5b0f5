use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use ppcl::learner::Architecture;
use ppcl::sim::{DataSource, ExperimentConfig, SweepConfig};

use crate::Failure;

pub const SEED_VAR: &str = "PPCL_SEED";

/// An experiment file: the experiment itself plus an optional `[sweep]` table.
#[derive(Debug, Clone)]
pub struct RunFile {
    pub experiment: ExperimentConfig,
    pub sweep: Option<SweepConfig>,
}

pub fn load(path: &Path) -> Result<RunFile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut file = parse(&text, base)?;
    if let Ok(raw) = env::var(SEED_VAR) {
        file.experiment.master_seed = raw
            .trim()
            .parse()
            .map_err(|_| Failure::config(format!("{SEED_VAR}: expected an unsigned integer, got {raw:?}")))?;
    }
    file.experiment.validate()?;
    Ok(file)
}

/// Parses the TOML text; relative data paths are taken relative to `base`.
pub fn parse(text: &str, base: &Path) -> Result<RunFile, Failure> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Failure::config(e.to_string()))?;
    let sweep = match table.remove("sweep") {
        Some(v) => Some(v.try_into::<SweepConfig>().map_err(|e| Failure::config(format!("sweep: {e}")))?),
        None => None,
    };
    let mut experiment: ExperimentConfig =
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Failure::config(e.to_string()))?;
    rebase(&mut experiment.data.source, base);
    Ok(RunFile { experiment, sweep })
}

fn rebase(source: &mut DataSource, base: &Path) {
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    match source {
        DataSource::MnistDir { dir, .. } => fix(dir),
        DataSource::MnistIdx { train_images, train_labels, test_images, test_labels } => {
            for p in [train_images, train_labels, test_images, test_labels] {
                fix(p);
            }
        }
        DataSource::Csv { path, .. } | DataSource::Cache { path } => fix(path),
        DataSource::Gaussian2d { .. } | DataSource::Gaussian10d { .. } | DataSource::GaussianClasses { .. } => {}
    }
}

/// Class count implied by the model's output layer.
pub fn n_classes(arch: &Architecture) -> usize {
    match arch {
        Architecture::Mlp { layer_sizes, .. } => layer_sizes.last().copied().unwrap_or(0),
        Architecture::Cnn { dense_sizes, .. } => dense_sizes.last().copied().unwrap_or(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n_participants = 4
master_seed = 3
scheme = { type = "projection", kind = { type = "gaussian", sigma = 1.0 }, compression_ratio = 1.0 }
model = { type = "mlp", layer_sizes = [8, 2] }
train = { learning_rate = 0.05, batch_size = 16, epochs = 1 }
data = { source = { kind = "cache", path = "toy.bin" } }
"#;

    #[test]
    fn relative_paths_follow_the_config_file() {
        let f = parse(MINIMAL, Path::new("/cfg")).unwrap();
        assert_eq!(f.experiment.data.source, DataSource::Cache { path: PathBuf::from("/cfg/toy.bin") });
        assert!(f.sweep.is_none());
        assert_eq!(n_classes(&f.experiment.model), 2);
    }

    #[test]
    fn sweep_table_is_split_off() {
        let text = format!("{MINIMAL}\n[sweep]\naxis = \"n\"\nvalues = [1, 2]\nrepeats = 2\n");
        let f = parse(&text, Path::new(".")).unwrap();
        let s = f.sweep.unwrap();
        assert_eq!((s.values.len(), s.repeats), (2, 2));
    }

    #[test]
    fn unknown_field_is_named() {
        let err = parse(&format!("bogus_field = 1\n{MINIMAL}"), Path::new(".")).unwrap_err();
        assert_eq!(err.code, 1);
        assert!(err.message.contains("bogus_field"), "{}", err.message);
    }
}
