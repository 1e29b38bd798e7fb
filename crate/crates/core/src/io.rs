//! Shared serialization helpers: digests, number formatting, JSON and CSV
//! emission for fields, traces and summaries.

use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::solver::{DensityField, SolveTrace};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Shortest round-trip decimal representation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Pretty JSON with a trailing newline; field order follows struct order, so
/// equal values give equal bytes.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// Long-format snapshot CSV: `t,x,u`.
pub fn write_snapshots_csv<'a, W, I>(w: W, snapshots: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a DensityField>,
{
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "x", "u"])?;
    for field in snapshots {
        let t = fmt_f64(field.time);
        for (j, u) in field.values.iter().enumerate() {
            out.write_record([t.as_str(), &fmt_f64(field.grid.x(j)), &fmt_f64(*u)])?;
        }
    }
    out.flush()?;
    Ok(())
}

const FRAME_MAGIC: &[u8; 8] = b"SPMEFRAM";

/// Binary frames: per snapshot the magic, a tag (`m` for pressure frames, NaN
/// for density), time, `a`, `b`, cell count, then the values. Little-endian.
pub fn write_frames_binary<'a, W, I>(mut w: W, frames: I, tag: f64) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a DensityField>,
{
    for f in frames {
        w.write_all(FRAME_MAGIC)?;
        for v in [tag, f.time, f.grid.a, f.grid.b] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&(f.values.len() as u64).to_le_bytes())?;
        for v in &f.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Per-step diagnostics CSV.
pub fn write_diagnostics_csv<W: Write>(w: W, trace: &SolveTrace) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "t",
        "dt",
        "drift",
        "energy_after",
        "dissipation",
        "grad_wm_sq",
        "lap_wm_sq",
        "min_u",
        "max_u",
    ])?;
    for s in &trace.steps {
        out.write_record(
            [
                s.t,
                s.dt,
                s.drift,
                s.energy_after,
                s.dissipation,
                s.grad_wm_sq,
                s.lap_wm_sq,
                s.min_u,
                s.max_u,
            ]
            .map(fmt_f64),
        )?;
    }
    out.flush()?;
    Ok(())
}
