use std::path::{Path, PathBuf};

use ppcl::data::{load_csv, load_mnist_dir, two_gaussians_10d, two_gaussians_2d, Dataset};

use crate::Failure;

pub enum Request {
    Gaussian2d { n_per_class: usize, seed: u64 },
    Gaussian10d { n_per_class: usize, seed: u64 },
    Mnist { dir: Option<PathBuf> },
    Csv { path: Option<PathBuf>, label_column: Option<usize>, n_classes: Option<usize> },
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::config(format!("{flag} is required for this kind")))
}

pub fn generate(request: Request, out: &Path) -> Result<(), Failure> {
    let ds: Dataset = match request {
        Request::Gaussian2d { n_per_class, seed } => two_gaussians_2d(n_per_class, seed)?,
        Request::Gaussian10d { n_per_class, seed } => two_gaussians_10d(n_per_class, seed)?,
        Request::Mnist { dir } => load_mnist_dir(required(dir, "--dir")?)?,
        Request::Csv { path, label_column, n_classes } => {
            load_csv(required(path, "--path")?, required(label_column, "--label-column")?, required(n_classes, "--n-classes")?)?
        }
    };
    ds.save(out)?;
    eprintln!("wrote {} samples of dimension {} to {}", ds.len(), ds.dim(), out.display());
    Ok(())
}
