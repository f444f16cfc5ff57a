//! Output formats: trajectory CSV, `PLF1` field snapshots, NDJSON reports.
//! Every file is written to a temporary sibling and renamed into place.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use polaron_core::{ComplexField, FourierGrid3, Representation};

use crate::error::CliError;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"PLF1";

/// Writes `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// One check of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: Option<f64>,
    /// Human-readable threshold, e.g. `"< 1e-6"`.
    pub threshold: String,
    pub pass: bool,
    pub window: Option<[f64; 2]>,
}

impl CheckRecord {
    pub fn new(name: &str, value: f64, threshold: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            value: Some(value),
            threshold: threshold.into(),
            pass: pass && value.is_finite(),
            window: None,
        }
    }

    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Self::new(name, value, &format!("< {limit:e}"), value < limit)
    }

    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self::new(name, value, &format!("<= {limit}"), value <= limit)
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, value, &format!("in [{lo}, {hi}]"), (lo..=hi).contains(&value))
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: None,
            threshold: "true".into(),
            pass: ok,
            window: None,
        }
    }

    pub fn with_window(mut self, w: [f64; 2]) -> Self {
        self.window = Some(w);
        self
    }
}

/// Provenance header written as the first report line.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub name: String,
    pub version: String,
    pub kind: String,
    pub config: serde_json::Value,
}

/// Failure record appended when an operation aborts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FailureRecord {
    pub name: String,
    pub class: String,
    pub error: String,
}

pub fn ndjson<T: Serialize>(records: &[T]) -> Result<String, CliError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| CliError::Io(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

/// One trajectory row in physical units.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: [f64; 3],
    pub p: [f64; 3],
    pub energy: f64,
    pub momentum: [f64; 3],
    pub re_delta_linf: Option<f64>,
    pub im_delta_linf: Option<f64>,
}

pub const TRAJECTORY_HEADER: &str =
    "t,X1,X2,X3,P1,P2,P3,energy,mom1,mom2,mom3,re_delta_linf,im_delta_linf";

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = String::with_capacity(rows.len() * 200);
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{}\n",
            r.t,
            r.x[0],
            r.x[1],
            r.x[2],
            r.p[0],
            r.p[1],
            r.p[2],
            r.energy,
            r.momentum[0],
            r.momentum[1],
            r.momentum[2],
            opt(r.re_delta_linf),
            opt(r.im_delta_linf)
        ));
    }
    s
}

/// Generic numeric CSV.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Encodes a physical-space field as `PLF1`, scaling values by `scale`.
pub fn encode_snapshot(field: &ComplexField, t: f64, box_length: f64, scale: f64) -> Vec<u8> {
    let f = field.clone().into_physical();
    let n = f.grid().n();
    let mut out = Vec::with_capacity(24 + 16 * f.data().len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&box_length.to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for z in f.data() {
        out.extend_from_slice(&(z.re * scale).to_le_bytes());
        out.extend_from_slice(&(z.im * scale).to_le_bytes());
    }
    out
}

/// Decoded `PLF1` snapshot.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub field: ComplexField,
}

pub fn decode_snapshot(mut bytes: &[u8]) -> Result<Snapshot, CliError> {
    let bad = |m: &str| CliError::Io(format!("malformed snapshot: {m}"));
    let mut magic = [0u8; 4];
    bytes.read_exact(&mut magic).map_err(|_| bad("short header"))?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    bytes.read_exact(&mut b4).map_err(|_| bad("short header"))?;
    let n = u32::from_le_bytes(b4) as usize;
    bytes.read_exact(&mut b8).map_err(|_| bad("short header"))?;
    let l = f64::from_le_bytes(b8);
    bytes.read_exact(&mut b8).map_err(|_| bad("short header"))?;
    let t = f64::from_le_bytes(b8);
    let count = n.checked_pow(3).ok_or_else(|| bad("size overflow"))?;
    if bytes.len() != count * 16 {
        return Err(bad("payload length"));
    }
    let data: Vec<Complex64> = bytes
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    let grid = FourierGrid3::new(n, l).map_err(|e| bad(&e.to_string()))?;
    let field = ComplexField::from_data(&grid, data, Representation::Physical).map_err(|e| bad(&e.to_string()))?;
    Ok(Snapshot { t, field })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_roundtrip() {
        let g = FourierGrid3::new(8, 5.0).unwrap();
        let f = ComplexField::from_fn(&g, |x| Complex64::new(x[0] - 0.5 * x[2], x[1] * x[1]));
        let bytes = encode_snapshot(&f, 2.5, 5.0, 2.0);
        assert_eq!(&bytes[..4], b"PLF1");
        assert_eq!(bytes.len(), 24 + 16 * 512);
        let s = decode_snapshot(&bytes).unwrap();
        assert_eq!(s.t, 2.5);
        assert_eq!(s.field.grid().n(), 8);
        assert_eq!(s.field.grid().box_length(), 5.0);
        for (a, b) in s.field.data().iter().zip(f.data()) {
            assert_eq!(*a, b * 2.0);
        }
    }

    #[test]
    fn malformed_snapshots_are_rejected() {
        let g = FourierGrid3::new(8, 5.0).unwrap();
        let bytes = encode_snapshot(&ComplexField::zeros(&g, Representation::Physical), 0.0, 5.0, 1.0);
        assert!(decode_snapshot(&bytes[..10]).is_err());
        assert!(decode_snapshot(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_snapshot(&bad).is_err());
    }

    #[test]
    fn trajectory_csv_layout() {
        let row = TrajectoryRow {
            t: 0.5,
            x: [1.0, 2.0, 3.0],
            p: [0.0, 0.0, 0.4],
            energy: -1.25,
            momentum: [0.0, 0.0, 0.5],
            re_delta_linf: Some(1e-3),
            im_delta_linf: None,
        };
        let s = trajectory_csv(&[row]);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), TRAJECTORY_HEADER.split(',').count());
        assert_eq!(cells[0].parse::<f64>().unwrap(), 0.5);
        assert_eq!(cells[7].parse::<f64>().unwrap(), -1.25);
        assert_eq!(cells[11].parse::<f64>().unwrap(), 1e-3);
        assert_eq!(cells[12], "");
    }

    #[test]
    fn table_and_ndjson() {
        let s = table_csv(&["a", "b"], &[vec![1.0, 2.0]]);
        assert_eq!(s, "a,b\n1e0,2e0\n");
        let recs = vec![CheckRecord::below("x", 0.5, 1.0), CheckRecord::flag("y", false)];
        let text = ndjson(&recs).unwrap();
        let back: Vec<CheckRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(back, recs);
        assert!(back[0].pass && !back[1].pass);
        assert!(!CheckRecord::below("nan", f64::NAN, 1.0).pass);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
