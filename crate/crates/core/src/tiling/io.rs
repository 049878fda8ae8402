use super::{GenerationMeta, Polygon, PolygonKind, Tiling, TilingError};
use crate::lattice::LatticeCoord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const TILING_FORMAT: &str = "hatlab-tiling/1";
const A_UNITS: &str = "shortest-edge";

#[derive(Serialize, Deserialize)]
struct FileMeta {
    inflation_steps: u32,
    seed: String,
    checksum: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TilingFile {
    format: String,
    a_units: String,
    vertices: Vec<LatticeCoord>,
    polygons: Vec<Polygon>,
    meta: FileMeta,
}

#[derive(Deserialize)]
struct Header {
    format: Option<serde_json::Value>,
}

fn checksum(vertices: &[LatticeCoord], polygons: &[Polygon]) -> String {
    let mut h = Sha256::new();
    h.update((vertices.len() as u64).to_le_bytes());
    for v in vertices {
        h.update(v.p.to_le_bytes());
        h.update(v.q.to_le_bytes());
    }
    h.update((polygons.len() as u64).to_le_bytes());
    for p in polygons {
        h.update([match p.kind {
            PolygonKind::Hat13 => 13u8,
            PolygonKind::Repaired14 => 14u8,
        }]);
        h.update((p.vertex_ids.len() as u64).to_le_bytes());
        for &id in &p.vertex_ids {
            h.update((id as u64).to_le_bytes());
        }
    }
    let digest = h.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

pub fn save_tiling(t: &Tiling, path: impl AsRef<Path>) -> Result<(), TilingError> {
    let file = TilingFile {
        format: TILING_FORMAT.into(),
        a_units: A_UNITS.into(),
        vertices: t.vertices.clone(),
        polygons: t.polygons.clone(),
        meta: FileMeta {
            inflation_steps: t.meta.inflation_steps,
            seed: t.meta.seed.clone(),
            checksum: checksum(&t.vertices, &t.polygons),
        },
    };
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer(&mut w, &file).map_err(|e| TilingError::Malformed(e.to_string()))?;
    w.flush()?;
    Ok(())
}

/// Read a tiling file. Version, structure and checksum failures are reported
/// as distinct errors and never yield a partially built tiling.
pub fn load_tiling(path: impl AsRef<Path>) -> Result<Tiling, TilingError> {
    let text = fs::read_to_string(path)?;
    let header: Header = serde_json::from_str(&text).map_err(|e| TilingError::Malformed(e.to_string()))?;
    match header.format {
        Some(serde_json::Value::String(f)) if f == TILING_FORMAT => {}
        Some(other) => {
            let found = other.as_str().map(str::to_owned).unwrap_or_else(|| other.to_string());
            return Err(TilingError::VersionMismatch { found, expected: TILING_FORMAT.into() });
        }
        None => return Err(TilingError::Malformed("missing \"format\" key".into())),
    }
    let file: TilingFile = serde_json::from_str(&text).map_err(|e| TilingError::Malformed(e.to_string()))?;
    if file.a_units != A_UNITS {
        return Err(TilingError::Malformed(format!("unsupported a_units {:?}", file.a_units)));
    }
    let computed = checksum(&file.vertices, &file.polygons);
    if computed != file.meta.checksum {
        return Err(TilingError::Checksum { stored: file.meta.checksum, computed });
    }
    Tiling::new(
        file.vertices,
        file.polygons,
        GenerationMeta { inflation_steps: file.meta.inflation_steps, seed: file.meta.seed },
    )
}
