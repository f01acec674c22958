//! Snapshot files (JSONL and the SPLX binary frame format), CSV tables and
//! output manifests.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Snapshot, Trajectory};

pub const SUITE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const FRAME_MAGIC: &[u8; 4] = b"SPLX";
pub const FRAME_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: String,
    pub config_hash: String,
    pub first_site: i64,
    pub n_domain: usize,
    pub epsilon: f64,
    pub kappa: f64,
    pub dt: f64,
    pub t_fin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotRecord {
    pub t: f64,
    pub tau: f64,
    pub u: Vec<f64>,
    pub k: i64,
}

/// One header line followed by one record per snapshot.
pub fn write_jsonl<W: Write>(mut w: W, traj: &Trajectory, config_hash: &str) -> Result<()> {
    let header = SnapshotHeader {
        format: "splx-snapshots".into(),
        version: SUITE_VERSION.into(),
        config_hash: config_hash.into(),
        first_site: traj.first_site,
        n_domain: traj.n_domain,
        epsilon: traj.epsilon,
        kappa: traj.kappa,
        dt: traj.dt,
        t_fin: traj.t_fin,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let e2 = traj.epsilon * traj.epsilon;
    for s in &traj.snapshots {
        let rec = SnapshotRecord { t: s.t, tau: s.t * e2, u: s.u.clone(), k: s.k };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<(SnapshotHeader, Trajectory)> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Format("empty snapshot file".into()))??;
    let header: SnapshotHeader = serde_json::from_str(&first)?;
    if header.format != "splx-snapshots" {
        return Err(Error::Format(format!("unexpected format tag {}", header.format)));
    }
    let mut snapshots = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SnapshotRecord = serde_json::from_str(&line)?;
        snapshots.push(Snapshot { t: rec.t, u: rec.u, k: rec.k });
    }
    let traj = Trajectory {
        first_site: header.first_site,
        n_domain: header.n_domain,
        epsilon: header.epsilon,
        kappa: header.kappa,
        dt: header.dt,
        t_fin: header.t_fin,
        snapshots,
    };
    Ok((header, traj))
}

pub fn save_trajectory(path: &Path, traj: &Trajectory, config_hash: &str) -> Result<()> {
    write_jsonl(BufWriter::new(File::create(path)?), traj, config_hash)
}

pub fn load_trajectory(path: &Path) -> Result<(SnapshotHeader, Trajectory)> {
    read_jsonl(BufReader::new(File::open(path)?))
}

/// Frame: `"SPLX"`, version `u32`, length `u32`, `t: f64`, then the values, all little endian.
pub fn write_frame<W: Write>(w: &mut W, t: f64, values: &[f64]) -> Result<()> {
    let n = u32::try_from(values.len()).map_err(|_| Error::Format("frame longer than u32::MAX".into()))?;
    w.write_all(FRAME_MAGIC)?;
    w.write_all(&FRAME_VERSION.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Next frame, `None` at a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<(f64, Vec<f64>)>> {
    let mut magic = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        let m = r.read(&mut magic[got..])?;
        if m == 0 {
            break;
        }
        got += m;
    }
    if got == 0 {
        return Ok(None);
    }
    if got < 4 || &magic != FRAME_MAGIC {
        return Err(Error::Format("bad frame magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != FRAME_VERSION {
        return Err(Error::Format(format!("unsupported frame version {version}")));
    }
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let t = f64::from_le_bytes(b8);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    Ok(Some((t, values)))
}

pub fn write_frames(path: &Path, frames: &[(f64, &[f64])]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (t, v) in frames {
        write_frame(&mut w, *t, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_frames(path: &Path) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    while let Some(f) = read_frame(&mut r)? {
        out.push(f);
    }
    Ok(out)
}

/// CSV with `# `-prefixed comment lines before the column header.
pub fn write_csv<W: Write>(mut w: W, comments: &[String], columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut cw = csv::Writer::from_writer(w);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    cw.write_record(columns).map_err(fmt)?;
    for r in rows {
        if r.len() != columns.len() {
            return Err(Error::Format(format!("row of {} values under {} columns", r.len(), columns.len())));
        }
        cw.write_record(r.iter().map(|v| v.to_string())).map_err(fmt)?;
    }
    cw.flush()?;
    Ok(())
}

pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_csv<R: Read>(r: R) -> Result<CsvTable> {
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    let mut cr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let columns = cr.headers().map_err(fmt)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in cr.records() {
        let rec = rec.map_err(fmt)?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad number {s}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { columns, rows })
}

pub fn save_csv(path: &Path, comments: &[String], columns: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), comments, columns, rows)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
    pub description: String,
}

/// Index of the files written by one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_hash: String,
    pub command: String,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(command: &str, config_hash: &str) -> Self {
        Self { version: SUITE_VERSION.into(), config_hash: config_hash.into(), command: command.into(), files: Vec::new() }
    }

    pub fn add(&mut self, path: &str, kind: &str, columns: &[&str], description: &str) {
        self.files.push(ManifestEntry {
            path: path.into(),
            kind: kind.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            description: description.into(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_roundtrip() {
        let mut buf = Vec::new();
        write_frame(&mut buf, 0.25, &[1.0, -0.1, f64::MIN_POSITIVE]).unwrap();
        write_frame(&mut buf, 3.0, &[]).unwrap();
        assert_eq!(&buf[..4], b"SPLX");
        assert_eq!(buf.len(), 2 * 20 + 3 * 8);
        let mut r = &buf[..];
        assert_eq!(read_frame(&mut r).unwrap(), Some((0.25, vec![1.0, -0.1, f64::MIN_POSITIVE])));
        assert_eq!(read_frame(&mut r).unwrap(), Some((3.0, vec![])));
        assert_eq!(read_frame(&mut r).unwrap(), None);
    }

    #[test]
    fn bad_magic() {
        let mut r: &[u8] = b"SPLY\x01\x00\x00\x00";
        assert!(read_frame(&mut r).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let rows = vec![vec![0.1, 1e-300, -3.0], vec![2.0 / 3.0, 0.0, 5e10]];
        let mut buf = Vec::new();
        write_csv(&mut buf, &["config abc".into()], &["a", "b", "c"], &rows).unwrap();
        let t = read_csv(&buf[..]).unwrap();
        assert_eq!(t.columns, vec!["a", "b", "c"]);
        assert_eq!(t.rows, rows);
    }
}
