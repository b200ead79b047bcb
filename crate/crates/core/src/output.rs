//! On-disk formats: `run.csv`, raw `SVMF` snapshots, P5 graymaps and the
//! configuration echo.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::{RunSeries, StepRecord};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::RealField;

pub const CSV_HEADER: &str = "step,t,energy,energy_target,mass,alpha,beta,solver_iters,dissipation,wall_ns";
pub const SNAPSHOT_MAGIC: &[u8; 4] = b"SVMF";
pub const CONFIG_ECHO: &str = "config.txt";
pub const RUN_CSV: &str = "run.csv";

/// Range mapped linearly onto gray levels `0..=255`.
pub const PGM_RANGE: (f64, f64) = (-1.2, 1.2);

pub fn csv_row(r: &StepRecord) -> String {
    format!(
        "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{}",
        r.step, r.t, r.energy, r.energy_target, r.mass, r.alpha, r.beta, r.solver_iters, r.dissipation, r.wall_ns
    )
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_run_csv(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut w = create(path)?;
    let mut body = || -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in records {
            writeln!(w, "{}", csv_row(r))?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

/// Parses a `run.csv` written by [`write_run_csv`].
pub fn read_run_csv(path: &Path) -> Result<Vec<StepRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad =
        |line: usize| Error::io(path, io::Error::new(io::ErrorKind::InvalidData, format!("malformed row {line}")));
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(bad(1));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(bad(i + 2));
            }
            let float = |k: usize| f[k].parse::<f64>().map_err(|_| bad(i + 2));
            let int = |k: usize| f[k].parse::<u64>().map_err(|_| bad(i + 2));
            Ok(StepRecord {
                step: int(0)? as usize,
                t: float(1)?,
                energy: float(2)?,
                energy_target: float(3)?,
                mass: float(4)?,
                alpha: float(5)?,
                beta: float(6)?,
                solver_iters: int(7)? as usize,
                dissipation: float(8)?,
                wall_ns: int(9)?,
            })
        })
        .collect()
}

/// 16-byte header (`SVMF`, `u32` n, then eight zero bytes) followed by n²
/// little-endian `f64` values in row-major order.
pub fn encode_snapshot<T: Scalar>(phi: &RealField<T>) -> Vec<u8> {
    let n = phi.grid().n();
    let mut buf = Vec::with_capacity(16 + 8 * n * n);
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&[0u8; 8]);
    for v in phi.values() {
        buf.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    buf
}

pub fn decode_snapshot(bytes: &[u8]) -> std::result::Result<(usize, Vec<f64>), String> {
    if bytes.len() < 16 || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err("missing SVMF header".into());
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if body.len() != 8 * n * n {
        return Err(format!("expected {} bytes of data for n = {n}, found {}", 8 * n * n, body.len()));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((n, values))
}

pub fn write_snapshot<T: Scalar>(path: &Path, phi: &RealField<T>) -> Result<()> {
    fs::write(path, encode_snapshot(phi)).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<(usize, Vec<f64>)> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes).map_err(|msg| Error::io(path, io::Error::new(io::ErrorKind::InvalidData, msg)))
}

pub fn gray_level(v: f64) -> u8 {
    let (lo, hi) = PGM_RANGE;
    let s = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    (s * 255.0).round() as u8
}

/// Binary P5 graymap; image row `i` holds the nodes with x-index `i`.
pub fn encode_pgm<T: Scalar>(phi: &RealField<T>) -> Vec<u8> {
    let n = phi.grid().n();
    let mut buf = format!("P5\n{n} {n}\n255\n").into_bytes();
    buf.extend(phi.values().iter().map(|v| gray_level(v.as_f64())));
    buf
}

pub fn write_pgm<T: Scalar>(path: &Path, phi: &RealField<T>) -> Result<()> {
    fs::write(path, encode_pgm(phi)).map_err(|e| Error::io(path, e))
}

/// Paths of the two files written for a snapshot at `step`.
pub fn snapshot_paths(dir: &Path, step: usize) -> (PathBuf, PathBuf) {
    (dir.join(format!("phi_{step:08}.bin")), dir.join(format!("phi_{step:08}.pgm")))
}

/// Writes `run.csv`, the config echo and every snapshot into `dir`.
pub fn write_series<T: Scalar>(dir: &Path, series: &RunSeries<T>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let echo = dir.join(CONFIG_ECHO);
    fs::write(&echo, &series.config_echo).map_err(|e| Error::io(&echo, e))?;
    write_run_csv(&dir.join(RUN_CSV), &series.records)?;
    for s in &series.snapshots {
        let (bin, pgm) = snapshot_paths(dir, s.step);
        write_snapshot(&bin, &s.phi)?;
        write_pgm(&pgm, &s.phi)?;
    }
    Ok(())
}
