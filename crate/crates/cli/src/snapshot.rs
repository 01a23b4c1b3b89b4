//! Binary field snapshots: one text header line, then little-endian `f64` values in row-major order.
//!
//! ```text
//! FCHSNAP1 dim=2 n=128,128 len=1.0,1.0 h=0.0078125,0.0078125 t=0.5 step=250 seed=1 params=3f1a...
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use fch_core::{Field, Grid, PhysParams};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MAGIC: &str = "FCHSNAP1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected {MAGIC}, found {0:?}")]
    Magic(String),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("grid mismatch: {0}")]
    Grid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub grid: Grid,
    pub t: f64,
    pub step: usize,
    pub seed: u64,
    /// Hex SHA-256 of the model constants, see [`params_hash`].
    pub params: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub field: Field,
}

/// SHA-256 over the exact bit patterns of `eps, eta, lam` and `p`.
pub fn params_hash(pp: &PhysParams) -> String {
    let mut h = Sha256::new();
    for v in [pp.eps, pp.eta, pp.lam] {
        h.update(v.to_bits().to_le_bytes());
    }
    h.update(pp.p.to_le_bytes());
    hex::encode(h.finalize())
}

fn join(v: impl Iterator<Item = String>) -> String {
    v.collect::<Vec<_>>().join(",")
}

impl SnapshotHeader {
    pub fn to_line(&self) -> String {
        let g = &self.grid;
        let axes = 0..g.dim();
        format!(
            "{MAGIC} dim={} n={} len={} h={} t={:?} step={} seed={} params={}",
            g.dim(),
            join(axes.clone().map(|a| g.n(a).to_string())),
            join(axes.clone().map(|a| format!("{:?}", g.len(a)))),
            join(axes.map(|a| format!("{:?}", g.h(a)))),
            self.t,
            self.step,
            self.seed,
            self.params
        )
    }

    pub fn parse(line: &str) -> Result<Self, SnapshotError> {
        let mut words = line.split_whitespace();
        let magic = words.next().unwrap_or("");
        if magic != MAGIC {
            return Err(SnapshotError::Magic(magic.chars().take(16).collect()));
        }
        let mut get = |name: &str| -> Result<String, SnapshotError> {
            let w = words.next().ok_or_else(|| SnapshotError::Header(format!("missing {name}")))?;
            w.strip_prefix(name)
                .and_then(|r| r.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| SnapshotError::Header(format!("expected {name}=..., found {w:?}")))
        };
        fn list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, SnapshotError> {
            s.split(',')
                .map(|x| x.parse().map_err(|_| SnapshotError::Header(format!("bad {what} entry {x:?}"))))
                .collect()
        }
        fn one<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, SnapshotError> {
            s.parse().map_err(|_| SnapshotError::Header(format!("bad {what} {s:?}")))
        }
        let dim: usize = one(&get("dim")?, "dim")?;
        let n: Vec<usize> = list(&get("n")?, "n")?;
        let len: Vec<f64> = list(&get("len")?, "len")?;
        let _h: Vec<f64> = list(&get("h")?, "h")?;
        let t = one(&get("t")?, "t")?;
        let step = one(&get("step")?, "step")?;
        let seed = one(&get("seed")?, "seed")?;
        let params = get("params")?;
        if n.len() != dim || len.len() != dim {
            return Err(SnapshotError::Header(format!("dim={dim} but {} sizes and {} lengths", n.len(), len.len())));
        }
        let grid = match dim {
            1 => Grid::new_1d(n[0], len[0]),
            2 => Grid::new_2d([n[0], n[1]], [len[0], len[1]]),
            _ => return Err(SnapshotError::Header(format!("unsupported dim {dim}"))),
        }
        .map_err(|e| SnapshotError::Header(e.to_string()))?;
        Ok(SnapshotHeader { grid, t, step, seed, params })
    }
}

pub fn write_snapshot(path: &Path, header: &SnapshotHeader, field: &Field) -> Result<(), SnapshotError> {
    if header.grid != *field.grid() {
        return Err(SnapshotError::Grid("header grid differs from field grid".into()));
    }
    let mut buf = Vec::with_capacity(field.values().len() * 8 + 256);
    writeln!(buf, "{}", header.to_line())?;
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    let text = String::from_utf8_lossy(&line);
    let header = SnapshotHeader::parse(text.trim_end())?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let cells = header.grid.cells();
    if payload.len() != cells * 8 {
        return Err(SnapshotError::Grid(format!("header promises {cells} values, payload holds {} bytes", payload.len())));
    }
    let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let field = Field::new(header.grid, values).map_err(|e| SnapshotError::Grid(e.to_string()))?;
    Ok(Snapshot { header, field })
}

/// Reads a snapshot and checks that it lives on `grid`.
pub fn read_snapshot_on(path: &Path, grid: &Grid) -> Result<Snapshot, SnapshotError> {
    let s = read_snapshot(path)?;
    if s.header.grid != *grid {
        return Err(SnapshotError::Grid(format!("expected {grid:?}, file has {:?}", s.header.grid)));
    }
    Ok(s)
}

/// Whitespace-separated matrix, one grid row per line.
pub fn write_text(path: &Path, field: &Field) -> Result<(), SnapshotError> {
    let g = field.grid();
    let cols = if g.dim() == 2 { g.n(1) } else { g.n(0) };
    let mut out = String::new();
    for row in field.values().chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
