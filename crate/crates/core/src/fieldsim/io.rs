//! Ensemble files.
//!
//! CSV layout:
//!
//! ```text
//! dim,n,seed,spec_digest
//! 2,3,7,<64 hex chars or empty>
//! re_1,im_1,re_2,im_2
//! <n rows of interleaved re/im values>
//! ```
//!
//! Binary layout (little endian): magic `PCSFTENS`, `u32` version (1),
//! `u64` dim, `u64` n, `u8` seed flag, `u64` seed, `u8` digest flag,
//! 32 digest bytes, then `n·dim` pairs of `f64` (re, im).
//!
//! Values are written in shortest round-trip form, so reading back is exact.

use std::io::{BufRead, Read, Write};

use num_complex::Complex;

use super::FieldEnsemble;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAGIC: &[u8; 8] = b"PCSFTENS";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnsembleHeader {
    pub dim: usize,
    pub n: usize,
    pub seed: Option<u64>,
    pub spec_digest: Option<String>,
}

impl EnsembleHeader {
    pub fn of<T: Real>(e: &FieldEnsemble<T>) -> Self {
        Self {
            dim: e.dim(),
            n: e.len(),
            seed: e.seed(),
            spec_digest: e.spec().map(|s| s.digest()),
        }
    }
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn write_ensemble_csv<T: Real, W: Write>(e: &FieldEnsemble<T>, mut w: W) -> Result<()> {
    let h = EnsembleHeader::of(e);
    writeln!(w, "dim,n,seed,spec_digest")?;
    writeln!(
        w,
        "{},{},{},{}",
        h.dim,
        h.n,
        h.seed.map(|s| s.to_string()).unwrap_or_default(),
        h.spec_digest.unwrap_or_default()
    )?;
    let cols: Vec<String> = (1..=h.dim).map(|k| format!("re_{k},im_{k}")).collect();
    writeln!(w, "{}", cols.join(","))?;
    let mut line = String::new();
    for row in e.samples() {
        line.clear();
        for (k, z) in row.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&format!("{},{}", z.re.as_f64(), z.im.as_f64()));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_ensemble_csv<T: Real, R: BufRead>(r: R) -> Result<(EnsembleHeader, FieldEnsemble<T>)> {
    let mut lines = r.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| fmt_err(format!("missing {what}")))?
            .map_err(Error::from)
    };
    if next("header names")?.trim() != "dim,n,seed,spec_digest" {
        return Err(fmt_err("unexpected header names"));
    }
    let meta = next("header values")?;
    let fields: Vec<&str> = meta.trim().split(',').collect();
    if fields.len() != 4 {
        return Err(fmt_err("header needs 4 fields"));
    }
    let dim: usize = fields[0].parse().map_err(|_| fmt_err("bad dim"))?;
    let n: usize = fields[1].parse().map_err(|_| fmt_err("bad n"))?;
    let seed = match fields[2] {
        "" => None,
        s => Some(s.parse().map_err(|_| fmt_err("bad seed"))?),
    };
    let spec_digest = (!fields[3].is_empty()).then(|| fields[3].to_string());
    next("column names")?;

    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        let line = next(&format!("row {i}"))?;
        let vals: Vec<f64> = line
            .trim()
            .split(',')
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| fmt_err(format!("bad number in row {i}")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != 2 * dim {
            return Err(fmt_err(format!(
                "row {i} has {} values, expected {}",
                vals.len(),
                2 * dim
            )));
        }
        data.extend(
            vals.chunks_exact(2)
                .map(|p| Complex::new(T::lit(p[0]), T::lit(p[1]))),
        );
    }
    let header = EnsembleHeader {
        dim,
        n,
        seed,
        spec_digest,
    };
    Ok((header, FieldEnsemble::from_flat(dim, data, None)?))
}

pub fn write_ensemble_binary<T: Real, W: Write>(e: &FieldEnsemble<T>, mut w: W) -> Result<()> {
    let h = EnsembleHeader::of(e);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(h.dim as u64).to_le_bytes())?;
    w.write_all(&(h.n as u64).to_le_bytes())?;
    w.write_all(&[h.seed.is_some() as u8])?;
    w.write_all(&h.seed.unwrap_or(0).to_le_bytes())?;
    let mut digest = [0u8; 32];
    if let Some(hex) = &h.spec_digest {
        for (i, b) in digest.iter_mut().enumerate() {
            *b = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
                .map_err(|_| fmt_err("bad digest"))?;
        }
    }
    w.write_all(&[h.spec_digest.is_some() as u8])?;
    w.write_all(&digest)?;
    for z in e.flat() {
        w.write_all(&z.re.as_f64().to_le_bytes())?;
        w.write_all(&z.im.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_ensemble_binary<T: Real, R: Read>(
    mut r: R,
) -> Result<(EnsembleHeader, FieldEnsemble<T>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(fmt_err("not an ensemble file"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != VERSION {
        return Err(fmt_err("unsupported version"));
    }
    r.read_exact(&mut b8)?;
    let dim = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b1)?;
    let has_seed = b1[0] != 0;
    r.read_exact(&mut b8)?;
    let seed = has_seed.then(|| u64::from_le_bytes(b8));
    r.read_exact(&mut b1)?;
    let has_digest = b1[0] != 0;
    let mut digest = [0u8; 32];
    r.read_exact(&mut digest)?;
    let spec_digest = has_digest.then(|| digest.iter().map(|b| format!("{b:02x}")).collect());

    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n * dim {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        data.push(Complex::new(T::lit(re), T::lit(im)));
    }
    let header = EnsembleHeader {
        dim,
        n,
        seed,
        spec_digest,
    };
    Ok((header, FieldEnsemble::from_flat(dim, data, None)?))
}
