use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{Model, ModelSpec, Real};

const MAGIC: &[u8; 8] = b"PPCLMDL1";

/// Layout: `"PPCLMDL1"`, spec as u64-length-prefixed JSON, parameter count
/// as u64, then the parameters as f64 LE.
pub fn write_checkpoint<T: Real, W: Write>(model: &Model<T>, mut w: W) -> Result<()> {
    let spec = serde_json::to_vec(model.spec()).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_all(&(spec.len() as u64).to_le_bytes())?;
    w.write_all(&spec)?;
    w.write_all(&(model.param_count() as u64).to_le_bytes())?;
    for p in model.params() {
        w.write_all(&p.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint<T: Real, R: Read>(mut r: R) -> Result<Model<T>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let spec_len = read_u64(&mut r)? as usize;
    let mut spec = vec![0u8; spec_len];
    r.read_exact(&mut spec)?;
    let spec: ModelSpec = serde_json::from_slice(&spec).map_err(|e| Error::Format(e.to_string()))?;
    let n = read_u64(&mut r)? as usize;
    let mut raw = vec![0u8; 8 * n];
    r.read_exact(&mut raw)?;
    let params = raw.chunks_exact(8).map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap()))).collect();
    Model::from_params(spec, params)
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn save_checkpoint<T: Real>(model: &Model<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint<T: Real>(path: impl AsRef<Path>) -> Result<Model<T>> {
    read_checkpoint(fs::File::open(path)?)
}
