//! Embedding table persistence.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! magic   4 bytes  "KGE1"
//! u32     format version (1)
//! u32     model kind code (0 transe, 1 rotate, 2 quate, 3 note, 4 deepwalk)
//! u32     entity_count
//! u32     relation_count
//! u32     entity_dim
//! u32     relation_dim
//! f64     gamma
//! f32[..] entity matrix, row-major
//! f32[..] relation matrix, row-major
//! ```
//!
//! A sidecar text file `<path>.meta` mirrors the geometry as `key=value`
//! lines; when present at load time it is cross-checked against the binary
//! header.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{KgError, Result};
use crate::models::{EmbeddingTable, GeometryConfig, ModelKind, PNorm};

const MAGIC: &[u8; 4] = b"KGE1";
const VERSION: u32 = 1;

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn save_embeddings(table: &EmbeddingTable, path: &Path) -> Result<()> {
    let g = table.geometry();
    let mut buf = Vec::with_capacity(
        36 + 4 * (table.entity_matrix().len() + table.relation_matrix().len()),
    );
    buf.extend_from_slice(MAGIC);
    for field in [
        VERSION,
        g.model_kind.code(),
        table.entity_count() as u32,
        table.relation_count() as u32,
        g.entity_dim() as u32,
        g.relation_dim() as u32,
    ] {
        buf.extend_from_slice(&field.to_le_bytes());
    }
    buf.extend_from_slice(&g.gamma.to_le_bytes());
    for v in table.entity_matrix() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in table.relation_matrix() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| KgError::io(path, e))?;

    let meta = format!(
        "model_kind={}\nhidden_size={}\ngamma={}\nnorm_p={}\note_size={}\n",
        g.model_kind.name(),
        g.hidden_size,
        g.gamma,
        g.norm_p.as_u32(),
        g.ote_size
    );
    let meta_path = sidecar_path(path);
    fs::write(&meta_path, meta).map_err(|e| KgError::io(&meta_path, e))
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let bytes = fs::read(path).map_err(|e| KgError::io(path, e))?;
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        let found: Vec<u8> = bytes.iter().take(4).copied().collect();
        return Err(KgError::Format(format!(
            "{}: bad magic {:?}, expected {:?}",
            path.display(),
            String::from_utf8_lossy(&found),
            String::from_utf8_lossy(MAGIC)
        )));
    }
    if bytes.len() < 36 {
        return Err(KgError::Format(format!(
            "{}: truncated header, expected at least 36 bytes, found {}",
            path.display(),
            bytes.len()
        )));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(KgError::Format(format!(
            "{}: unsupported format version {version}",
            path.display()
        )));
    }
    let kind = ModelKind::from_code(u32_at(8))?;
    let entity_count = u32_at(12) as usize;
    let relation_count = u32_at(16) as usize;
    let entity_dim = u32_at(20) as usize;
    let relation_dim = u32_at(24) as usize;
    let gamma = f64::from_le_bytes(bytes[28..36].try_into().unwrap());

    let expected = 36 + 4 * (entity_count * entity_dim + relation_count * relation_dim);
    if bytes.len() != expected {
        return Err(KgError::Format(format!(
            "{}: expected {expected} bytes, found {}",
            path.display(),
            bytes.len()
        )));
    }

    let geometry = resolve_geometry(path, kind, entity_dim, relation_dim, gamma)?;
    if geometry.entity_dim() != entity_dim || geometry.relation_dim() != relation_dim {
        return Err(KgError::Format(format!(
            "{}: dimension disagreement: geometry implies entity_dim {} / relation_dim {}, header says {entity_dim} / {relation_dim}",
            path.display(),
            geometry.entity_dim(),
            geometry.relation_dim()
        )));
    }

    let mut at = 36;
    let mut read_matrix = |len: usize| -> Vec<f32> {
        let out = bytes[at..at + 4 * len]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        at += 4 * len;
        out
    };
    let entity = read_matrix(entity_count * entity_dim);
    let relation = read_matrix(relation_count * relation_dim);
    EmbeddingTable::from_parts(geometry, entity_count, relation_count, entity, relation)
}

/// Reconstructs the geometry from the sidecar when present, otherwise from
/// the binary header alone.
fn resolve_geometry(
    path: &Path,
    kind: ModelKind,
    entity_dim: usize,
    relation_dim: usize,
    gamma: f64,
) -> Result<GeometryConfig> {
    let meta_path = sidecar_path(path);
    let mut geometry = GeometryConfig::new(kind)
        .with_hidden_size(entity_dim)
        .with_gamma(gamma);
    if kind == ModelKind::Note {
        // relation_dim = K(ds^2 + ds) with K = hidden/ds, i.e.
        // relation_dim = hidden * (ds + 1).
        if entity_dim == 0 || relation_dim % entity_dim != 0 || relation_dim / entity_dim < 2 {
            return Err(KgError::Format(format!(
                "{}: cannot derive a block size from entity_dim {entity_dim}, relation_dim {relation_dim}",
                path.display()
            )));
        }
        geometry = geometry.with_ote_size(relation_dim / entity_dim - 1);
    }
    if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).map_err(|e| KgError::io(&meta_path, e))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                KgError::parse(&meta_path, lineno + 1, "expected key=value")
            })?;
            let parse_err =
                |msg: String| KgError::parse(&meta_path, lineno + 1, msg);
            match key.trim() {
                "model_kind" => {
                    let declared = ModelKind::parse(value.trim())?;
                    if declared != kind {
                        return Err(KgError::Format(format!(
                            "{}: sidecar declares model {}, binary holds {}",
                            meta_path.display(),
                            declared.name(),
                            kind.name()
                        )));
                    }
                }
                "hidden_size" => {
                    geometry.hidden_size = value
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(format!("bad hidden_size {value:?}")))?;
                }
                "gamma" => {
                    geometry.gamma = value
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(format!("bad gamma {value:?}")))?;
                }
                "norm_p" => {
                    let p: u32 = value
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(format!("bad norm_p {value:?}")))?;
                    geometry.norm_p = PNorm::from_u32(p)?;
                }
                "ote_size" => {
                    geometry.ote_size = value
                        .trim()
                        .parse()
                        .map_err(|_| parse_err(format!("bad ote_size {value:?}")))?;
                }
                other => {
                    return Err(parse_err(format!("unknown key {other:?}")));
                }
            }
        }
    }
    geometry.validate()?;
    Ok(geometry)
}
