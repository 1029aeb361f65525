//! The model file container: magic "KTHB", a format version, the training
//! config, then per-component class lists and little-endian f32 weight
//! rows. Writing is deterministic, so equal models produce equal bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::scalar::RealScalar;

use super::logistic::LinearModel;
use super::parser::ParserModel;
use super::TrainConfig;

const MAGIC: &[u8; 4] = b"KTHB";
/// Current container version; loaders reject anything else.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Guard against nonsense allocations from corrupt headers.
const MAX_HASH_DIM: u32 = 1 << 26;
const MAX_CLASSES: u32 = 1 << 20;
const MAX_LABEL_BYTES: u32 = 1 << 16;

/// Errors from reading or writing model files.
#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("model io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt model file: {0}")]
    Corrupt(String),
}

fn write_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_component<S: RealScalar>(
    w: &mut impl Write,
    m: &LinearModel<S>,
) -> std::io::Result<()> {
    write_u32(w, m.class_labels.len() as u32)?;
    for label in &m.class_labels {
        let bytes = label.as_bytes();
        write_u32(w, bytes.len() as u32)?;
        w.write_all(bytes)?;
    }
    write_u64(w, m.trained_epochs)?;
    write_u64(w, m.seed)?;
    for &b in &m.bias {
        let v = b.to_f64().expect("finite bias") as f32;
        w.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(4096);
    for row in &m.weights {
        buf.clear();
        for &x in row {
            let v = x.to_f64().expect("finite weight") as f32;
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Writes the model container. In-memory scalars are stored as f32, which
/// is the interchange precision of the format.
pub fn save_model<S: RealScalar>(m: &ParserModel<S>, path: &Path) -> Result<(), ModelIoError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    write_u32(&mut w, MODEL_FORMAT_VERSION)?;
    write_u32(&mut w, m.config.window as u32)?;
    write_u32(&mut w, m.config.hash_dim)?;
    write_u32(&mut w, m.config.epochs)?;
    write_u64(&mut w, m.config.seed)?;
    write_f64(&mut w, m.config.lr0)?;
    write_f64(&mut w, m.config.decay)?;
    write_f64(&mut w, m.config.l2)?;
    write_component(&mut w, &m.tagger)?;
    write_component(&mut w, &m.arc_scorer)?;
    write_component(&mut w, &m.labeler)?;
    w.flush()?;
    Ok(())
}

fn read_exact_buf(r: &mut impl Read, len: usize) -> Result<Vec<u8>, ModelIoError> {
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)
        .map_err(|e| ModelIoError::Corrupt(format!("unexpected end of file: {e}")))?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> Result<u32, ModelIoError> {
    let buf = read_exact_buf(r, 4)?;
    Ok(u32::from_le_bytes(buf.try_into().unwrap()))
}

fn read_u64(r: &mut impl Read) -> Result<u64, ModelIoError> {
    let buf = read_exact_buf(r, 8)?;
    Ok(u64::from_le_bytes(buf.try_into().unwrap()))
}

fn read_f64(r: &mut impl Read) -> Result<f64, ModelIoError> {
    let buf = read_exact_buf(r, 8)?;
    Ok(f64::from_le_bytes(buf.try_into().unwrap()))
}

fn read_component<S: RealScalar>(
    r: &mut impl Read,
    hash_dim: u32,
) -> Result<LinearModel<S>, ModelIoError> {
    let class_count = read_u32(r)?;
    if class_count > MAX_CLASSES {
        return Err(ModelIoError::Corrupt(format!(
            "class count {class_count} out of range"
        )));
    }
    let mut class_labels = Vec::with_capacity(class_count as usize);
    for _ in 0..class_count {
        let len = read_u32(r)?;
        if len > MAX_LABEL_BYTES {
            return Err(ModelIoError::Corrupt(format!("label length {len}")));
        }
        let bytes = read_exact_buf(r, len as usize)?;
        let label = String::from_utf8(bytes)
            .map_err(|_| ModelIoError::Corrupt("label is not UTF-8".to_string()))?;
        class_labels.push(label);
    }
    let trained_epochs = read_u64(r)?;
    let seed = read_u64(r)?;

    let mut bias = Vec::with_capacity(class_count as usize);
    for _ in 0..class_count {
        let buf = read_exact_buf(r, 4)?;
        let v = f32::from_le_bytes(buf.try_into().unwrap());
        bias.push(S::from_f32(v).expect("f32 fits scalar"));
    }

    let mut weights = Vec::with_capacity(class_count as usize);
    for _ in 0..class_count {
        let buf = read_exact_buf(r, hash_dim as usize * 4)?;
        let mut row = Vec::with_capacity(hash_dim as usize);
        for chunk in buf.chunks_exact(4) {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            row.push(S::from_f32(v).expect("f32 fits scalar"));
        }
        weights.push(row);
    }

    Ok(LinearModel {
        class_labels,
        weights,
        bias,
        trained_epochs,
        seed,
    })
}

/// Reads a model container, rejecting unknown versions and trailing bytes.
pub fn load_model<S: RealScalar>(path: &Path) -> Result<ParserModel<S>, ModelIoError> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);

    let magic = read_exact_buf(&mut r, 4)?;
    if magic != MAGIC {
        return Err(ModelIoError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != MODEL_FORMAT_VERSION {
        return Err(ModelIoError::UnsupportedVersion(version));
    }

    let window = read_u32(&mut r)? as usize;
    let hash_dim = read_u32(&mut r)?;
    if hash_dim == 0 || hash_dim > MAX_HASH_DIM {
        return Err(ModelIoError::Corrupt(format!(
            "hash dimension {hash_dim} out of range"
        )));
    }
    let epochs = read_u32(&mut r)?;
    let seed = read_u64(&mut r)?;
    let lr0 = read_f64(&mut r)?;
    let decay = read_f64(&mut r)?;
    let l2 = read_f64(&mut r)?;
    let config = TrainConfig {
        window,
        hash_dim,
        epochs,
        seed,
        lr0,
        decay,
        l2,
    };

    let tagger = read_component(&mut r, hash_dim)?;
    let arc_scorer = read_component(&mut r, hash_dim)?;
    let labeler = read_component(&mut r, hash_dim)?;

    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(ModelIoError::Corrupt("trailing data".to_string()));
    }

    Ok(ParserModel {
        tagger,
        arc_scorer,
        labeler,
        config,
    })
}
