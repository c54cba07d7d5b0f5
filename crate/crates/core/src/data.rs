//! Datasets: synthetic Gaussian classes, MNIST IDX files, CSV tables,
//! additive-noise augmentation and a small binary cache format.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::rng::Prng;

const CACHE_MAGIC: &[u8; 8] = b"PPCLDAT1";
const CACHE_HEADER_LEN: usize = 8 + 8 + 4 + 4 + 8 + 8 + 12;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: usize,
}

impl LabeledSample {
    pub fn new(x: Vec<f64>, y: usize) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<LabeledSample>,
    d: usize,
    n_classes: usize,
    value_range: (f64, f64),
    shape: Option<(usize, usize, usize)>,
}

impl Dataset {
    /// Validates and wraps samples; the value range is computed from the data.
    pub fn new(samples: Vec<LabeledSample>, d: usize, n_classes: usize) -> Result<Self> {
        let range = observed_range(&samples);
        Self::with_range(samples, d, n_classes, range)
    }

    /// As [`Dataset::new`] with an explicit value range, which must bracket
    /// every element (e.g. `(0, 255)` for raw pixels).
    pub fn with_range(samples: Vec<LabeledSample>, d: usize, n_classes: usize, value_range: (f64, f64)) -> Result<Self> {
        let (lo, hi) = value_range;
        if !(lo <= hi) {
            return Err(Error::config("value_range", format!("empty range ({lo}, {hi})")));
        }
        for s in &samples {
            if s.x.len() != d {
                return Err(Error::Dimension { expected: d, got: s.x.len() });
            }
            if s.y >= n_classes {
                return Err(Error::Label { label: s.y, n_classes });
            }
            for &v in &s.x {
                if !v.is_finite() {
                    return Err(Error::Numerical("dataset"));
                }
                if v < lo || v > hi {
                    return Err(Error::Quantization { value: v, lo, hi });
                }
            }
        }
        Ok(Self { samples, d, n_classes, value_range, shape: None })
    }

    /// Attaches an image shape `(channels, height, width)`.
    pub fn with_shape(mut self, shape: (usize, usize, usize)) -> Result<Self> {
        if shape.0 * shape.1 * shape.2 != self.d {
            return Err(Error::Dimension { expected: self.d, got: shape.0 * shape.1 * shape.2 });
        }
        self.shape = Some(shape);
        Ok(self)
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<LabeledSample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.value_range
    }

    pub fn shape(&self) -> Option<(usize, usize, usize)> {
        self.shape
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.y).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for s in &self.samples {
            counts[s.y] += 1;
        }
        counts
    }

    /// New dataset with the samples at `indices`, keeping metadata.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            ..self.empty_like()
        }
    }

    fn empty_like(&self) -> Dataset {
        Dataset { samples: Vec::new(), d: self.d, n_classes: self.n_classes, value_range: self.value_range, shape: self.shape }
    }

    /// Concatenates datasets of equal dimension; the value range is the hull.
    pub fn concat(parts: &[Dataset]) -> Result<Dataset> {
        let first = parts.first().ok_or_else(|| Error::config("datasets", "nothing to concatenate"))?;
        let mut out = first.empty_like();
        for p in parts {
            if p.d != first.d {
                return Err(Error::Dimension { expected: first.d, got: p.d });
            }
            out.n_classes = out.n_classes.max(p.n_classes);
            out.value_range = (out.value_range.0.min(p.value_range.0), out.value_range.1.max(p.value_range.1));
            if p.shape != first.shape {
                out.shape = None;
            }
            out.samples.extend_from_slice(&p.samples);
        }
        Ok(out)
    }

    /// Class-balanced subset: after a seeded shuffle, the first `per_class`
    /// samples of every class are kept (in shuffled order).
    pub fn class_balanced_subset(&self, per_class: usize, seed: u64) -> Result<Dataset> {
        let counts = self.class_counts();
        if let Some((c, &have)) = counts.iter().enumerate().find(|(_, &n)| n < per_class) {
            return Err(Error::config("per_class", format!("class {c} has only {have} samples, {per_class} requested")));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        Prng::new(seed).shuffle(&mut order);
        let mut taken = vec![0; self.n_classes];
        let keep: Vec<usize> = order
            .into_iter()
            .filter(|&i| {
                let y = self.samples[i].y;
                taken[y] += 1;
                taken[y] <= per_class
            })
            .collect();
        Ok(self.subset(&keep))
    }

    /// Per-class split: `round(n_c · test_fraction)` samples of each class go
    /// to the test set. Both halves keep the shuffled order.
    pub fn stratified_split(&self, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(0.0..=1.0).contains(&test_fraction) {
            return Err(Error::config("test_fraction", format!("must lie in [0, 1], got {test_fraction}")));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        Prng::new(seed).shuffle(&mut order);
        let quota: Vec<usize> = self.class_counts().iter().map(|&n| (n as f64 * test_fraction).round() as usize).collect();
        let mut seen = vec![0; self.n_classes];
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for i in order {
            let y = self.samples[i].y;
            if seen[y] < quota[y] {
                test.push(i);
            } else {
                train.push(i);
            }
            seen[y] += 1;
        }
        Ok((self.subset(&train), self.subset(&test)))
    }

    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        let (c, h, wd) = self.shape.unwrap_or((0, 0, 0));
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&(self.d as u32).to_le_bytes())?;
        w.write_all(&(self.n_classes as u32).to_le_bytes())?;
        w.write_all(&self.value_range.0.to_le_bytes())?;
        w.write_all(&self.value_range.1.to_le_bytes())?;
        for v in [c, h, wd] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(8 * self.d + 2);
        for s in &self.samples {
            buf.clear();
            for v in &s.x {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            let label = u16::try_from(s.y).map_err(|_| Error::Format(format!("label {} does not fit in u16", s.y)))?;
            buf.extend_from_slice(&label.to_le_bytes());
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(fs::File::create(path)?);
        self.write_cache(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Dataset> {
        let mut raw = Vec::new();
        r.read_to_end(&mut raw)?;
        if raw.len() < CACHE_HEADER_LEN || &raw[..8] != CACHE_MAGIC {
            return Err(Error::Format("not a dataset cache".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(raw[o..o + 4].try_into().unwrap()) as usize;
        let f64_at = |o: usize| f64::from_le_bytes(raw[o..o + 8].try_into().unwrap());
        let n = u64::from_le_bytes(raw[8..16].try_into().unwrap()) as usize;
        let d = u32_at(16);
        let n_classes = u32_at(20);
        let range = (f64_at(24), f64_at(32));
        let shape = (u32_at(40), u32_at(44), u32_at(48));
        let record = 8 * d + 2;
        if raw.len() != cache_size(n, d) {
            return Err(Error::Format(format!("cache holds {} bytes, header implies {}", raw.len(), cache_size(n, d))));
        }
        let samples = raw[CACHE_HEADER_LEN..]
            .chunks_exact(record)
            .map(|rec| {
                let x = rec[..8 * d].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
                let y = u16::from_le_bytes(rec[8 * d..].try_into().unwrap()) as usize;
                LabeledSample { x, y }
            })
            .collect();
        let ds = Dataset::with_range(samples, d, n_classes, range)?;
        if shape.0 * shape.1 * shape.2 > 0 {
            ds.with_shape(shape)
        } else {
            Ok(ds)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        Dataset::read_cache(std::io::BufReader::new(fs::File::open(path)?))
    }
}

/// Byte size of a cached dataset with `n` samples of dimension `d`.
pub fn cache_size(n: usize, d: usize) -> usize {
    CACHE_HEADER_LEN + n * (8 * d + 2)
}

fn observed_range(samples: &[LabeledSample]) -> (f64, f64) {
    let mut it = samples.iter().flat_map(|s| s.x.iter().copied());
    match it.next() {
        None => (0.0, 0.0),
        Some(first) => it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))),
    }
}

/// Isotropic Gaussian classes: class `c` draws `n_per_class` points from
/// `N(means[c], cov_scale · I)`.
pub fn gen_gaussian_classes(means: &[Vec<f64>], cov_scale: f64, n_per_class: usize, seed: u64) -> Result<Dataset> {
    let d = means.first().map(Vec::len).ok_or_else(|| Error::config("means", "at least one class mean is required"))?;
    if let Some(m) = means.iter().find(|m| m.len() != d) {
        return Err(Error::Dimension { expected: d, got: m.len() });
    }
    if !(cov_scale > 0.0) {
        return Err(Error::config("cov_scale", format!("must be positive, got {cov_scale}")));
    }
    let sd = cov_scale.sqrt();
    let mut rng = Prng::new(seed);
    let mut samples = Vec::with_capacity(means.len() * n_per_class);
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..n_per_class {
            let x = mean.iter().map(|m| m + sd * rng.gaussian()).collect();
            samples.push(LabeledSample { x, y: c });
        }
    }
    Dataset::new(samples, d, means.len())
}

/// The two-class 2-D problem: means `(-2,-2)` and `(2,2)`, identity covariance.
pub fn two_gaussians_2d(n_per_class: usize, seed: u64) -> Result<Dataset> {
    gen_gaussian_classes(&[vec![-2.0, -2.0], vec![2.0, 2.0]], 1.0, n_per_class, seed)
}

/// The 10-D analogue with means `±(2, …, 2)`.
pub fn two_gaussians_10d(n_per_class: usize, seed: u64) -> Result<Dataset> {
    gen_gaussian_classes(&[vec![-2.0; 10], vec![2.0; 10]], 1.0, n_per_class, seed)
}

/// Parses an IDX image file (magic `0x00000803`) into `(n, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    let header = read_be_u32s(bytes, 4)?;
    if header[0] != 0x0803 {
        return Err(Error::Format(format!("bad IDX image magic {:#010x}", header[0])));
    }
    let (n, rows, cols) = (header[1] as usize, header[2] as usize, header[3] as usize);
    let body = &bytes[16..];
    if body.len() < n * rows * cols {
        return Err(Error::Format(format!("truncated IDX image file: {} pixel bytes, expected {}", body.len(), n * rows * cols)));
    }
    Ok((n, rows, cols, &body[..n * rows * cols]))
}

/// Parses an IDX label file (magic `0x00000801`).
pub fn parse_idx_labels(bytes: &[u8]) -> Result<&[u8]> {
    let header = read_be_u32s(bytes, 2)?;
    if header[0] != 0x0801 {
        return Err(Error::Format(format!("bad IDX label magic {:#010x}", header[0])));
    }
    let n = header[1] as usize;
    let body = &bytes[8..];
    if body.len() < n {
        return Err(Error::Format(format!("truncated IDX label file: {} labels, expected {n}", body.len())));
    }
    Ok(&body[..n])
}

fn read_be_u32s(bytes: &[u8], count: usize) -> Result<Vec<u32>> {
    if bytes.len() < 4 * count {
        return Err(Error::Format("truncated IDX header".into()));
    }
    Ok(bytes[..4 * count].chunks_exact(4).map(|c| u32::from_be_bytes(c.try_into().unwrap())).collect())
}

/// Decodes a pair of IDX buffers into a raw-pixel dataset (values in [0, 255]).
pub fn mnist_from_idx(images: &[u8], labels: &[u8]) -> Result<Dataset> {
    let (n, rows, cols, pixels) = parse_idx_images(images)?;
    let labels = parse_idx_labels(labels)?;
    if labels.len() != n {
        return Err(Error::Format(format!("count mismatch: {n} images but {} labels", labels.len())));
    }
    let d = rows * cols;
    let n_classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0).max(10);
    let samples = pixels
        .chunks_exact(d.max(1))
        .zip(labels)
        .map(|(px, &l)| LabeledSample { x: px.iter().map(|&p| p as f64).collect(), y: l as usize })
        .collect();
    Dataset::with_range(samples, d, n_classes, (0.0, 255.0))?.with_shape((1, rows, cols))
}

pub fn load_mnist_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    mnist_from_idx(&fs::read(images_path)?, &fs::read(labels_path)?)
}

/// Loads and concatenates every `*-images-idx3-ubyte` / `*-labels-idx1-ubyte`
/// pair found in `dir`, in file-name order.
pub fn load_mnist_dir(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let mut images: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with("-images-idx3-ubyte")))
        .collect();
    images.sort();
    if images.is_empty() {
        return Err(Error::Format(format!("no IDX image files in {}", dir.display())));
    }
    let parts = images
        .iter()
        .map(|img| {
            let name = img.file_name().unwrap().to_str().unwrap().replace("-images-idx3-ubyte", "-labels-idx1-ubyte");
            load_mnist_idx(img, img.with_file_name(name))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::concat(&parts)
}

/// Reads a numeric CSV. Every column except `label_column` becomes a feature
/// (in file order). A first row containing any non-numeric cell is treated
/// as a header. Row numbers in errors are 1-based file lines.
pub fn load_csv(path: impl AsRef<Path>, label_column: usize, n_classes: usize) -> Result<Dataset> {
    parse_csv(fs::File::open(path)?, label_column, n_classes)
}

pub fn parse_csv<R: Read>(reader: R, label_column: usize, n_classes: usize) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut samples = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse { row, reason: format!("non-numeric cell: {e}") }),
        };
        let w = *width.get_or_insert(values.len());
        if values.len() != w {
            return Err(Error::Parse { row, reason: format!("expected {w} columns, found {}", values.len()) });
        }
        if label_column >= w {
            return Err(Error::Parse { row, reason: format!("label column {label_column} out of {w} columns") });
        }
        let label = values[label_column];
        if label < 0.0 || label.fract() != 0.0 {
            return Err(Error::Parse { row, reason: format!("label {label} is not a non-negative integer") });
        }
        if label as usize >= n_classes {
            return Err(Error::Parse { row, reason: format!("label {label} out of range for {n_classes} classes") });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse { row, reason: "non-finite value".into() });
        }
        let x = values.iter().enumerate().filter(|&(j, _)| j != label_column).map(|(_, &v)| v).collect();
        samples.push(LabeledSample { x, y: label as usize });
    }
    let d = width.map_or(0, |w| w - 1);
    Dataset::new(samples, d, n_classes)
}

/// Appends `copies - 1` noisy replicas of the dataset; replica `i ≥ 1` adds
/// i.i.d. `N(0, sigma²)` to every element. Copy 0 is the original.
pub fn augment_gaussian(ds: &Dataset, sigma: f64, copies: usize, seed: u64) -> Result<Dataset> {
    augment_per_feature(ds, &vec![sigma; ds.dim()], copies, seed)
}

/// As [`augment_gaussian`] with noise `factor · std_j` on feature `j`.
pub fn augment_gaussian_scaled(ds: &Dataset, factor: f64, copies: usize, seed: u64) -> Result<Dataset> {
    let n = ds.len().max(1) as f64;
    let sigmas: Vec<f64> = (0..ds.dim())
        .map(|j| {
            let mean = ds.samples.iter().map(|s| s.x[j]).sum::<f64>() / n;
            let var = ds.samples.iter().map(|s| (s.x[j] - mean).powi(2)).sum::<f64>() / n;
            factor * var.sqrt()
        })
        .collect();
    augment_per_feature(ds, &sigmas, copies, seed)
}

fn augment_per_feature(ds: &Dataset, sigmas: &[f64], copies: usize, seed: u64) -> Result<Dataset> {
    if copies == 0 {
        return Err(Error::config("copies", "must be at least 1"));
    }
    if sigmas.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::config("sigma_aug", "must be non-negative"));
    }
    let mut rng = Prng::new(seed);
    let mut samples = ds.samples.clone();
    for _ in 1..copies {
        for s in &ds.samples {
            let x = s.x.iter().zip(sigmas).map(|(v, sd)| v + sd * rng.gaussian()).collect();
            samples.push(LabeledSample { x, y: s.y });
        }
    }
    let (lo, hi) = observed_range(&samples);
    let range = (lo.min(ds.value_range.0), hi.max(ds.value_range.1));
    let out = Dataset::with_range(samples, ds.d, ds.n_classes, range)?;
    match ds.shape {
        Some(shape) => out.with_shape(shape),
        None => Ok(out),
    }
}

/// Element scaling applied before obfuscation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// Values as loaded.
    #[default]
    Raw,
    /// Affine map of the value range onto [0, 1].
    Unit,
    /// Per-feature zero mean, unit variance (statistics from the fitting set).
    Standardized,
}

/// A fitted element transform, so train and test sets share one scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    shift: Vec<f64>,
    scale: Vec<f64>,
}

impl Scaler {
    pub fn fit(kind: Scaling, ds: &Dataset) -> Scaler {
        let d = ds.dim();
        match kind {
            Scaling::Raw => Scaler { shift: vec![0.0; d], scale: vec![1.0; d] },
            Scaling::Unit => {
                let (lo, hi) = ds.value_range();
                let w = if hi > lo { hi - lo } else { 1.0 };
                Scaler { shift: vec![lo; d], scale: vec![1.0 / w; d] }
            }
            Scaling::Standardized => {
                let n = ds.len().max(1) as f64;
                let mut shift = vec![0.0; d];
                let mut scale = vec![0.0; d];
                for j in 0..d {
                    let mean = ds.samples.iter().map(|s| s.x[j]).sum::<f64>() / n;
                    let var = ds.samples.iter().map(|s| (s.x[j] - mean).powi(2)).sum::<f64>() / n;
                    shift[j] = mean;
                    scale[j] = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
                }
                Scaler { shift, scale }
            }
        }
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.dim() != self.shift.len() {
            return Err(Error::Dimension { expected: self.shift.len(), got: ds.dim() });
        }
        let samples: Vec<LabeledSample> = ds
            .samples
            .iter()
            .map(|s| {
                let x = s.x.iter().zip(&self.shift).zip(&self.scale).map(|((v, a), b)| (v - a) * b).collect();
                LabeledSample { x, y: s.y }
            })
            .collect();
        let map = |v: f64, j: usize| (v - self.shift[j]) * self.scale[j];
        let (lo, hi) = ds.value_range();
        let range = if self.shift.iter().all(|&a| a == self.shift[0]) && self.scale.iter().all(|&b| b == self.scale[0]) && !self.shift.is_empty() {
            (map(lo, 0), map(hi, 0))
        } else {
            observed_range(&samples)
        };
        let out = Dataset::with_range(samples, ds.d, ds.n_classes, (range.0.min(range.1), range.0.max(range.1)))?;
        match ds.shape {
            Some(shape) => out.with_shape(shape),
            None => Ok(out),
        }
    }
}
