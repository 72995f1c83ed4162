//! Files written by an experiment. Every writer goes through [`Artifacts`],
//! which records the file for the manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use foch_core::diagnostics::ConservationReport;
use foch_core::{GridSpec, SpectralField};
use serde::{Deserialize, Serialize};

/// Snapshot magic, first 8 bytes of the 32-byte header.
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"FOCHSNAP";
pub const SNAPSHOT_HEADER: usize = 32;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: String,
    pub bytes: u64,
}

pub struct Artifacts {
    root: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl Artifacts {
    /// Prepare `root`, removing the files listed by a previous manifest there.
    pub fn open(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        let old = root.join(MANIFEST);
        if let Ok(text) = fs::read_to_string(&old) {
            if let Ok(m) = serde_json::from_str::<serde_json::Value>(&text) {
                let listed = m["artifacts"].as_array().cloned().unwrap_or_default();
                for e in listed {
                    if let Some(p) = e["path"].as_str() {
                        let _ = fs::remove_file(root.join(p));
                    }
                }
            }
            fs::remove_file(&old)?;
        }
        let probe = root.join(".foch-lab-write-test");
        fs::write(&probe, b"")?;
        fs::remove_file(&probe)?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.entries
    }

    fn put(&mut self, rel: &str, kind: &str, bytes: &[u8]) -> io::Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.entries.push(ArtifactEntry {
            path: rel.to_string(),
            kind: kind.to_string(),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, kind: &str, value: &T) -> io::Result<()> {
        let mut text = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
        text.push(b'\n');
        self.put(rel, kind, &text)
    }

    pub fn text(&mut self, rel: &str, kind: &str, text: &str) -> io::Result<()> {
        self.put(rel, kind, text.as_bytes())
    }

    /// CSV with a header row; every record must match its length.
    pub fn csv<R: AsRef<[String]>>(&mut self, rel: &str, kind: &str, header: &[&str], rows: &[R]) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(io::Error::other)?;
        for r in rows {
            w.write_record(r.as_ref()).map_err(io::Error::other)?;
        }
        let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
        self.put(rel, kind, &bytes)
    }

    pub fn snapshot(&mut self, rel: &str, t: f64, u: &SpectralField) -> io::Result<()> {
        self.put(rel, "snapshot", &encode_snapshot(t, u))
    }

    /// Write the manifest; it lists every artifact written so far.
    pub fn finish<T: Serialize>(self, manifest: &T) -> io::Result<PathBuf> {
        let path = self.root.join(MANIFEST);
        let mut text = serde_json::to_vec_pretty(manifest).map_err(io::Error::other)?;
        text.push(b'\n');
        let mut f = fs::File::create(&path)?;
        f.write_all(&text)?;
        Ok(path)
    }
}

/// Header `FOCHSNAP | L: f64 | N: u64 | t: f64`, then N samples, all little-endian.
pub fn encode_snapshot(t: f64, u: &SpectralField) -> Vec<u8> {
    let g = u.grid();
    let mut out = Vec::with_capacity(SNAPSHOT_HEADER + 8 * g.points());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&g.length().to_le_bytes());
    out.extend_from_slice(&(g.points() as u64).to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in u.samples() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotData {
    pub length: f64,
    pub t: f64,
    pub samples: Vec<f64>,
}

impl SnapshotData {
    pub fn field(&self, dealias_cut: f64) -> Result<SpectralField, String> {
        let grid = GridSpec::new(self.length, self.samples.len(), dealias_cut).map_err(|e| e.to_string())?;
        SpectralField::from_samples(grid, self.samples.clone()).map_err(|e| e.to_string())
    }
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<SnapshotData, String> {
    if bytes.len() < SNAPSHOT_HEADER || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err("not a snapshot file".into());
    }
    let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().expect("8-byte slice") };
    let length = f64::from_le_bytes(word(8));
    let points = u64::from_le_bytes(word(16)) as usize;
    let t = f64::from_le_bytes(word(24));
    if bytes.len() != SNAPSHOT_HEADER + 8 * points {
        return Err(format!("snapshot holds {} bytes, header says {points} samples", bytes.len()));
    }
    let samples = bytes[SNAPSHOT_HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(SnapshotData { length, t, samples })
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotData, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    decode_snapshot(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub const DIAGNOSTICS_HEADER: [&str; 8] = ["t", "E", "F", "h2", "w1inf", "b0inf_n", "q_min", "q_argmin"];

pub fn diagnostics_rows(times: &[f64], reports: &[ConservationReport]) -> Vec<Vec<String>> {
    times
        .iter()
        .zip(reports)
        .map(|(t, d)| {
            [*t, d.e, d.f, d.h2, d.w1inf, d.b0inf_n, d.q_min, d.q_argmin]
                .into_iter()
                .map(num)
                .collect()
        })
        .collect()
}
