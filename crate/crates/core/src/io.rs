//! File formats: WGRD binary grids, PGM heatmaps and CSV grids with JSON sidecars.
//!
//! WGRD layout, all little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `WGRD` |
//! | 4     | version `u32` (1) |
//! | 8     | `nq`, `np` as `u32` |
//! | 32    | `q_min, q_max, p_min, p_max` as `f64` |
//! | 8 nq np | values, row-major (`q` rows) |

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor2d::{Grid2D, GridSpec};

pub const WGRD_MAGIC: &[u8; 4] = b"WGRD";
pub const WGRD_VERSION: u32 = 1;

pub fn encode_wgrd(grid: &Grid2D) -> Vec<u8> {
    let mut out = Vec::with_capacity(48 + 8 * grid.values.len());
    out.extend_from_slice(WGRD_MAGIC);
    out.extend_from_slice(&WGRD_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.nq() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.np() as u32).to_le_bytes());
    for e in [grid.q_min, grid.q_max, grid.p_min, grid.p_max] {
        out.extend_from_slice(&e.to_le_bytes());
    }
    for v in grid.values.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_wgrd(bytes: &[u8]) -> Result<Grid2D> {
    if bytes.len() < 48 || &bytes[..4] != WGRD_MAGIC {
        return Err(Error::Format("not a WGRD file".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(4);
    if version != WGRD_VERSION {
        return Err(Error::Format(format!("unsupported WGRD version {version}")));
    }
    let (nq, np) = (u32_at(8) as usize, u32_at(12) as usize);
    let expected = 48 + 8 * nq * np;
    if bytes.len() != expected {
        return Err(Error::Format(format!("WGRD size {} but header implies {expected}", bytes.len())));
    }
    let values: Vec<f64> = (0..nq * np).map(|k| f64_at(48 + 8 * k)).collect();
    let values = Array2::from_shape_vec((nq, np), values).map_err(|e| Error::Format(e.to_string()))?;
    Grid2D::new(values, (f64_at(16), f64_at(24)), (f64_at(32), f64_at(40)))
}

/// 8-bit binary PGM; `v` maps to `round(255 (v - min) / (max - min))`, constant fields to 0.
pub fn encode_pgm(grid: &Grid2D) -> Vec<u8> {
    let (lo, hi) = grid
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    let mut out = format!(
        "P5\n# linear min-max map: gray = round(255 * (v - min) / (max - min)), min = {lo:.9e}, max = {hi:.9e}; rows are q, columns are p\n{} {}\n255\n",
        grid.np(),
        grid.nq()
    )
    .into_bytes();
    out.extend(grid.values.iter().map(|&v| {
        if span > 0.0 {
            (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

/// Sidecar describing a CSV grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSidecar {
    pub grid: GridSpec,
    pub layout: String,
}

/// CSV rows (one per `q` node) plus a JSON sidecar.
pub fn encode_csv(grid: &Grid2D) -> (String, String) {
    let mut csv = String::new();
    for row in grid.values.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        csv.push_str(&line.join(","));
        csv.push('\n');
    }
    let sidecar = CsvSidecar {
        grid: grid.spec(),
        layout: "rows are q nodes, columns are p nodes".into(),
    };
    (csv, serde_json::to_string_pretty(&sidecar).expect("serializable") + "\n")
}

pub fn decode_csv(csv: &str, sidecar: &str) -> Result<Grid2D> {
    let meta: CsvSidecar = serde_json::from_str(sidecar)?;
    meta.grid.validate()?;
    let values: Vec<f64> = csv
        .lines()
        .filter(|l| !l.trim().is_empty())
        .flat_map(|l| l.split(',').map(|v| v.trim().parse::<f64>()))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Format(e.to_string()))?;
    let values = Array2::from_shape_vec((meta.grid.nq, meta.grid.np), values)
        .map_err(|_| Error::Format("CSV size does not match the sidecar".into()))?;
    Ok(Grid2D::from_spec(&meta.grid, values))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Format(format!("no file name in {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_wgrd(path: &Path, grid: &Grid2D) -> Result<()> {
    write_atomic(path, &encode_wgrd(grid))
}

pub fn read_wgrd(path: &Path) -> Result<Grid2D> {
    decode_wgrd(&std::fs::read(path)?)
}

pub fn write_pgm(path: &Path, grid: &Grid2D) -> Result<()> {
    write_atomic(path, &encode_pgm(grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Grid2D {
        GridSpec::symmetric(4, 2.0).sample(|q, p| q * 0.1 - p * p + 1.0 / 3.0)
    }

    #[test]
    fn wgrd_round_trip_is_bit_exact() {
        let g = sample();
        let bytes = encode_wgrd(&g);
        assert_eq!(&bytes[..4], b"WGRD");
        assert_eq!(bytes.len(), 48 + 8 * 16);
        assert_eq!(decode_wgrd(&bytes).unwrap(), g);
    }

    #[test]
    fn wgrd_rejects_garbage() {
        assert!(decode_wgrd(b"nope").is_err());
        let mut bytes = encode_wgrd(&sample());
        bytes.pop();
        assert!(decode_wgrd(&bytes).is_err());
        let mut bytes = encode_wgrd(&sample());
        bytes[4] = 9;
        assert!(decode_wgrd(&bytes).is_err());
    }

    #[test]
    fn pgm_maps_extremes() {
        let g = sample();
        let bytes = encode_pgm(&g);
        assert!(bytes.starts_with(b"P5\n# linear min-max map"));
        let body = &bytes[bytes.len() - 16..];
        assert_eq!(*body.iter().min().unwrap(), 0);
        assert_eq!(*body.iter().max().unwrap(), 255);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = sample();
        let (csv, side) = encode_csv(&g);
        assert_eq!(decode_csv(&csv, &side).unwrap(), g);
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.wgrd");
        write_wgrd(&p, &sample()).unwrap();
        assert_eq!(read_wgrd(&p).unwrap(), sample());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
