//! Iteration record files and the output-directory manifest.
//!
//! CSV records have the header
//! `t,re_eta,im_eta,phi,re_eta_slow,im_eta_slow,region_label`, one row per
//! boundary node, numbers with 17 significant digits.
//!
//! Binary records are little-endian: the magic `MSBIEREC`, a `u32` version,
//! `u64` n, `u64` m, `u64` obstacle, `f64` k, then six `f64` columns of
//! length n in the CSV order and one `u8` column of region codes
//! (0 illuminated, 1 shadow, 2 near boundary).

use crate::error::{Error, Result};
use crate::multiscatter::IterationRecord;
use crate::rays::Region;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

use super::config::OutputFormat;

pub const RECORD_COLUMNS: [&str; 7] = ["t", "re_eta", "im_eta", "phi", "re_eta_slow", "im_eta_slow", "region_label"];
pub const BIN_MAGIC: &[u8; 8] = b"MSBIEREC";
pub const BIN_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

/// Columns of one iteration record.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordData {
    pub m: usize,
    pub obstacle: usize,
    pub k: f64,
    pub t: Vec<f64>,
    pub eta: Vec<Complex64>,
    pub phi: Vec<f64>,
    pub eta_slow: Vec<Complex64>,
    pub labels: Vec<Region>,
}

impl From<&IterationRecord> for RecordData {
    fn from(r: &IterationRecord) -> Self {
        Self {
            m: r.m,
            obstacle: r.obstacle,
            k: r.eta.meta.k,
            t: r.eta.grid.params.clone(),
            eta: r.eta.values.clone(),
            phi: r.phi.values.iter().map(|p| p.re).collect(),
            eta_slow: r.eta_slow.values.clone(),
            labels: r.partition.labels.clone(),
        }
    }
}

/// `record_k<k>_m<mm>.<ext>`
pub fn record_file_name(k: f64, m: usize, format: OutputFormat) -> String {
    format!("record_k{k}_m{m:02}.{}", format.extension())
}

/// Fixed 17-significant-digit formatting.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn encode(rec: &RecordData, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Csv => encode_csv(rec),
        OutputFormat::Bin => Ok(encode_bin(rec)),
    }
}

pub fn decode(bytes: &[u8], format: OutputFormat, m: usize, obstacle: usize, k: f64) -> Result<RecordData> {
    match format {
        OutputFormat::Csv => decode_csv(bytes, m, obstacle, k),
        OutputFormat::Bin => {
            let rec = decode_bin(bytes)?;
            if rec.m != m || rec.obstacle != obstacle || rec.k != k {
                return Err(Error::Format(format!(
                    "binary record header says m={} obstacle={} k={}",
                    rec.m, rec.obstacle, rec.k
                )));
            }
            Ok(rec)
        }
    }
}

pub fn encode_csv(rec: &RecordData) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(RECORD_COLUMNS).map_err(csv_err)?;
    for i in 0..rec.t.len() {
        w.write_record([
            fmt17(rec.t[i]),
            fmt17(rec.eta[i].re),
            fmt17(rec.eta[i].im),
            fmt17(rec.phi[i]),
            fmt17(rec.eta_slow[i].re),
            fmt17(rec.eta_slow[i].im),
            rec.labels[i].label().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

pub fn decode_csv(bytes: &[u8], m: usize, obstacle: usize, k: f64) -> Result<RecordData> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(|e| Error::Format(e.to_string()))?;
    if header.iter().ne(RECORD_COLUMNS) {
        return Err(Error::Format(format!("unexpected record header {header:?}")));
    }
    let mut out = RecordData { m, obstacle, k, t: vec![], eta: vec![], phi: vec![], eta_slow: vec![], labels: vec![] };
    for (line, row) in r.records().enumerate() {
        let row = row.map_err(|e| Error::Format(e.to_string()))?;
        let num = |j: usize| -> Result<f64> {
            row[j].parse().map_err(|_| Error::Format(format!("row {}: bad number {:?}", line + 2, &row[j])))
        };
        out.t.push(num(0)?);
        out.eta.push(Complex64::new(num(1)?, num(2)?));
        out.phi.push(num(3)?);
        out.eta_slow.push(Complex64::new(num(4)?, num(5)?));
        out.labels.push(
            Region::from_label(&row[6])
                .ok_or_else(|| Error::Format(format!("row {}: bad label {:?}", line + 2, &row[6])))?,
        );
    }
    Ok(out)
}

pub fn encode_bin(rec: &RecordData) -> Vec<u8> {
    let n = rec.t.len();
    let mut out = Vec::with_capacity(44 + n * 49);
    out.extend_from_slice(BIN_MAGIC);
    out.extend_from_slice(&BIN_VERSION.to_le_bytes());
    for v in [n as u64, rec.m as u64, rec.obstacle as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&rec.k.to_le_bytes());
    let columns: [Vec<f64>; 6] = [
        rec.t.clone(),
        rec.eta.iter().map(|c| c.re).collect(),
        rec.eta.iter().map(|c| c.im).collect(),
        rec.phi.clone(),
        rec.eta_slow.iter().map(|c| c.re).collect(),
        rec.eta_slow.iter().map(|c| c.im).collect(),
    ];
    for col in &columns {
        for v in col {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend(rec.labels.iter().map(|l| l.code()));
    out
}

pub fn decode_bin(bytes: &[u8]) -> Result<RecordData> {
    let bad = |what: &str| Error::Format(format!("binary record: {what}"));
    if bytes.len() < 44 || &bytes[..8] != BIN_MAGIC {
        return Err(bad("missing magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    if u32_at(8) != BIN_VERSION {
        return Err(bad("unsupported version"));
    }
    let n = u64_at(12) as usize;
    let (m, obstacle) = (u64_at(20) as usize, u64_at(28) as usize);
    let k = f64::from_bits(u64_at(36));
    if bytes.len() != 44 + n * 49 {
        return Err(bad("length does not match the header"));
    }
    let col = |c: usize| -> Vec<f64> { (0..n).map(|i| f64::from_bits(u64_at(44 + 8 * (c * n + i)))).collect() };
    let cols: Vec<Vec<f64>> = (0..6).map(col).collect();
    let labels = bytes[44 + 48 * n..]
        .iter()
        .map(|&c| Region::from_code(c).ok_or_else(|| bad("bad region code")))
        .collect::<Result<Vec<_>>>()?;
    let cplx = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    Ok(RecordData {
        m,
        obstacle,
        k,
        t: cols[0].clone(),
        eta: cplx(&cols[1], &cols[2]),
        phi: cols[3].clone(),
        eta_slow: cplx(&cols[4], &cols[5]),
        labels,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub obstacle: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    /// sha256 of the configuration that determines the data files
    pub config_digest: String,
    pub complete: bool,
    pub files: Vec<FileEntry>,
    /// scene, grid sizes, timings and other run information
    pub info: serde_json::Value,
}

/// An output directory whose manifest lists every data file written.
pub struct OutputDir {
    path: PathBuf,
    manifest: Manifest,
}

impl OutputDir {
    /// Opens `path` for `command`. An existing manifest with the same
    /// command and digest is kept (for resuming); any other is replaced and
    /// the files it listed are deleted.
    pub fn open(path: &Path, command: &str, digest: &str) -> Result<Self> {
        fs::create_dir_all(path)?;
        let existing = fs::read(path.join(MANIFEST)).ok().and_then(|b| serde_json::from_slice::<Manifest>(&b).ok());
        let manifest = match existing {
            Some(m) if m.command == command && m.config_digest == digest => m,
            other => {
                // a superseded output is removed so nothing unlisted remains
                for f in other.iter().flat_map(|m| &m.files) {
                    let _ = fs::remove_file(path.join(&f.name));
                }
                Manifest {
                    command: command.into(),
                    config_digest: digest.into(),
                    complete: false,
                    files: Vec::new(),
                    info: serde_json::Value::Null,
                }
            }
        };
        let mut dir = Self { path: path.to_path_buf(), manifest };
        dir.prune()?;
        dir.save()?;
        Ok(dir)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Drop manifest entries whose file is missing or altered, and stray
    /// partial files.
    fn prune(&mut self) -> Result<()> {
        let path = self.path.clone();
        self.manifest
            .files
            .retain(|f| fs::read(path.join(&f.name)).map(|b| sha256_hex(&b) == f.sha256).unwrap_or(false));
        for entry in fs::read_dir(&self.path)? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if name.ends_with(".partial") {
                fs::remove_file(self.path.join(&name))?;
            }
        }
        Ok(())
    }

    /// Removes every listed file (a run that cannot resume starts over).
    pub fn reset(&mut self) -> Result<()> {
        for f in self.manifest.files.drain(..) {
            let _ = fs::remove_file(self.path.join(&f.name));
        }
        self.manifest.complete = false;
        self.save()
    }

    pub fn set_info(&mut self, info: serde_json::Value) -> Result<()> {
        self.manifest.info = info;
        self.save()
    }

    pub fn entry(&self, name: &str) -> Option<&FileEntry> {
        self.manifest.files.iter().find(|f| f.name == name)
    }

    /// Writes `bytes` as `entry.name` (through a partial file) and lists it.
    pub fn write(&mut self, mut entry: FileEntry, bytes: &[u8]) -> Result<()> {
        entry.sha256 = sha256_hex(bytes);
        entry.bytes = bytes.len();
        let tmp = self.path.join(format!("{}.partial", entry.name));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, self.path.join(&entry.name))?;
        self.manifest.files.retain(|f| f.name != entry.name);
        self.manifest.files.push(entry);
        self.save()
    }

    /// Convenience for files without record metadata.
    pub fn write_plain(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.write(FileEntry::named(name), bytes)
    }

    pub fn read(&self, name: &str) -> Result<Vec<u8>> {
        let bytes = fs::read(self.path.join(name))?;
        match self.entry(name) {
            Some(e) if e.sha256 == sha256_hex(&bytes) => Ok(bytes),
            _ => Err(Error::Format(format!("{name} is not listed in the manifest or its checksum differs"))),
        }
    }

    pub fn finish(&mut self) -> Result<()> {
        self.manifest.complete = true;
        self.save()
    }

    fn save(&self) -> Result<()> {
        let text = serde_json::to_vec_pretty(&self.manifest).map_err(|e| Error::Format(e.to_string()))?;
        let tmp = self.path.join(format!("{MANIFEST}.partial"));
        fs::write(&tmp, text)?;
        fs::rename(&tmp, self.path.join(MANIFEST))?;
        Ok(())
    }
}

impl FileEntry {
    pub fn named(name: &str) -> Self {
        Self { name: name.into(), sha256: String::new(), bytes: 0, m: None, obstacle: None, n: None, seconds: None }
    }
}
