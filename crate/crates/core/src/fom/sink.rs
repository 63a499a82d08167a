//! Destinations for the time levels produced by a full-order march.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::solver::FomState;
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 5] = b"MMRB1";

/// Receives every time level `0..=N_t` in order.
pub trait SnapshotSink {
    fn begin(&mut self, _n_dof: usize, _n_nodes: usize, _n_steps: usize) -> Result<()> {
        Ok(())
    }

    fn record(&mut self, state: &FomState) -> Result<()>;

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl SnapshotSink for NullSink {
    fn record(&mut self, _state: &FomState) -> Result<()> {
        Ok(())
    }
}

/// Keeps every full state in memory.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub states: Vec<FomState>,
}

impl SnapshotSink for MemorySink {
    fn record(&mut self, state: &FomState) -> Result<()> {
        self.states.push(state.clone());
        Ok(())
    }
}

/// Keeps only the scalar flux of every level.
#[derive(Debug, Default, Clone)]
pub struct RhoSink {
    pub rho: Vec<Vec<f64>>,
}

impl SnapshotSink for RhoSink {
    fn record(&mut self, state: &FomState) -> Result<()> {
        self.rho.push(state.rho.clone());
        Ok(())
    }
}

/// Adapts a closure into a sink.
pub struct FnSink<F: FnMut(&FomState) -> Result<()>>(pub F);

impl<F: FnMut(&FomState) -> Result<()>> SnapshotSink for FnSink<F> {
    fn record(&mut self, state: &FomState) -> Result<()> {
        (self.0)(state)
    }
}

/// Streams levels to a little-endian binary file.
///
/// Layout: magic, then `n_dof`, `N_v`, `N_t` as `u64`, then for each level
/// the `rho` block followed by the `g` columns.
pub struct FileSink {
    path: PathBuf,
    writer: Option<BufWriter<File>>,
    expected: usize,
    written: usize,
}

impl FileSink {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let writer = BufWriter::new(File::create(&path)?);
        Ok(Self {
            path,
            writer: Some(writer),
            expected: 0,
            written: 0,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn writer(&mut self) -> Result<&mut BufWriter<File>> {
        self.writer
            .as_mut()
            .ok_or_else(|| Error::Format("snapshot file already closed".into()))
    }
}

impl SnapshotSink for FileSink {
    fn begin(&mut self, n_dof: usize, n_nodes: usize, n_steps: usize) -> Result<()> {
        self.expected = n_steps + 1;
        let w = self.writer()?;
        w.write_all(SNAPSHOT_MAGIC)?;
        for v in [n_dof, n_nodes, n_steps] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        Ok(())
    }

    fn record(&mut self, state: &FomState) -> Result<()> {
        let w = self.writer()?;
        for v in state.rho.iter().chain(state.g.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
        self.written += 1;
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        if self.written != self.expected {
            return Err(Error::Format(format!(
                "snapshot file holds {} levels, header promised {}",
                self.written, self.expected
            )));
        }
        if let Some(mut w) = self.writer.take() {
            w.flush()?;
        }
        Ok(())
    }
}

/// Contents of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub n_dof: usize,
    pub n_nodes: usize,
    pub n_steps: usize,
    pub levels: Vec<FomState>,
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated snapshot header: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_snapshot_file(path: impl AsRef<Path>) -> Result<SnapshotFile> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Format(format!("truncated snapshot file: {e}")))?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format("not a snapshot file".into()));
    }
    let n_dof = read_u64(&mut r)? as usize;
    let n_nodes = read_u64(&mut r)? as usize;
    let n_steps = read_u64(&mut r)? as usize;
    let per_level = n_dof * (n_nodes + 1);
    let mut levels = Vec::with_capacity(n_steps + 1);
    let mut buf = vec![0u8; per_level * 8];
    for n in 0..=n_steps {
        r.read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("snapshot level {n} truncated: {e}")))?;
        let vals: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        levels.push(FomState {
            rho: vals[..n_dof].to_vec(),
            g: DMatrix::from_column_slice(n_dof, n_nodes, &vals[n_dof..]),
            time_index: n,
        });
    }
    Ok(SnapshotFile {
        n_dof,
        n_nodes,
        n_steps,
        levels,
    })
}

/// Writes `rho` as CSV, one row per level: `level,time,rho_0,...`.
pub struct RhoCsvSink {
    writer: BufWriter<File>,
    dt: f64,
}

impl RhoCsvSink {
    pub fn create(path: impl AsRef<Path>, dt: f64) -> Result<Self> {
        Ok(Self {
            writer: BufWriter::new(File::create(path)?),
            dt,
        })
    }
}

impl SnapshotSink for RhoCsvSink {
    fn begin(&mut self, n_dof: usize, _n_nodes: usize, _n_steps: usize) -> Result<()> {
        let mut header = String::from("level,time");
        for k in 0..n_dof {
            header.push_str(&format!(",rho_{k}"));
        }
        writeln!(self.writer, "{header}")?;
        Ok(())
    }

    fn record(&mut self, state: &FomState) -> Result<()> {
        let mut line = format!(
            "{},{:?}",
            state.time_index,
            state.time_index as f64 * self.dt
        );
        for v in &state.rho {
            line.push_str(&format!(",{v:?}"));
        }
        writeln!(self.writer, "{line}")?;
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(n: usize) -> FomState {
        FomState {
            rho: vec![n as f64, -1.5, 1e-300],
            g: DMatrix::from_fn(3, 2, |k, j| (k * 10 + j + n) as f64 * 0.1),
            time_index: n,
        }
    }

    #[test]
    fn binary_roundtrip_is_bitwise() {
        let dir = std::env::temp_dir().join(format!("mmrb-sink-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("snap.bin");
        let mut sink = FileSink::create(&path).unwrap();
        sink.begin(3, 2, 2).unwrap();
        for n in 0..3 {
            sink.record(&level(n)).unwrap();
        }
        sink.finish().unwrap();
        let back = read_snapshot_file(&path).unwrap();
        assert_eq!((back.n_dof, back.n_nodes, back.n_steps), (3, 2, 2));
        for n in 0..3 {
            assert_eq!(back.levels[n], level(n));
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn short_file_is_a_format_error() {
        let dir = std::env::temp_dir().join(format!("mmrb-sink-short-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("snap.bin");
        let mut sink = FileSink::create(&path).unwrap();
        sink.begin(3, 2, 2).unwrap();
        sink.record(&level(0)).unwrap();
        assert!(matches!(sink.finish(), Err(Error::Format(_))));
        drop(sink);
        assert!(matches!(read_snapshot_file(&path), Err(Error::Format(_))));
        std::fs::write(&path, b"XXXXX").unwrap();
        assert!(matches!(read_snapshot_file(&path), Err(Error::Format(_))));
        std::fs::remove_dir_all(&dir).ok();
    }
}
