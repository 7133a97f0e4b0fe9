//! Versioned little-endian binary model files.
//!
//! Layout: 4-byte magic `LSM1`, u16 format version, u8 model kind, then
//! kind-specific parameters and arrays. See docs/model-format.md.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::linear::LinearFn;
use super::pgm::Segment;
use super::{LinearCdfModel, Model, PgmModel, RmiModel, RsModel};

const MAGIC: &[u8; 4] = b"LSM1";
const VERSION: u16 = 1;

const KIND_LINEAR: u8 = 0;
const KIND_RMI: u8 = 1;
const KIND_PGM: u8 = 2;
const KIND_RS: u8 = 3;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.0.write_all(&[v])?)
    }
    fn u16(&mut self, v: u16) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.0
            .read_exact(&mut buf)
            .map_err(|_| Error::Format("truncated model file".into()))?;
        Ok(buf)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

pub fn write_model(path: &Path, model: &Model) -> Result<()> {
    let mut w = Writer(BufWriter::new(File::create(path)?));
    w.0.write_all(MAGIC)?;
    w.u16(VERSION)?;
    match model {
        Model::Linear(m) => {
            w.u8(KIND_LINEAR)?;
            w.f64(m.slope())?;
            w.f64(m.intercept())?;
            w.f64(m.max_abs_error())?;
            w.u64(m.eps() as u64)?;
            w.u64(m.table_len() as u64)?;
        }
        Model::Rmi(m) => {
            w.u8(KIND_RMI)?;
            let (root, leaves, err_lo, err_hi, branching, n) = m.clone().into_parts();
            w.f64(root.slope)?;
            w.f64(root.intercept)?;
            w.u64(branching as u64)?;
            w.u64(n as u64)?;
            for ((leaf, lo), hi) in leaves.iter().zip(&err_lo).zip(&err_hi) {
                w.f64(leaf.slope)?;
                w.f64(leaf.intercept)?;
                w.u64(*lo as u64)?;
                w.u64(*hi as u64)?;
            }
        }
        Model::Pgm(m) => {
            w.u8(KIND_PGM)?;
            w.u64(m.eps() as u64)?;
            w.u64(m.table_len() as u64)?;
            w.u64(m.levels().len() as u64)?;
            for level in m.levels() {
                w.u64(level.len() as u64)?;
                for seg in level {
                    w.u64(seg.first_key)?;
                    w.f64(seg.slope)?;
                    w.f64(seg.intercept)?;
                }
            }
        }
        Model::Rs(m) => {
            w.u8(KIND_RS)?;
            let (radix_bits, shift, min_key, max_key, table, spline, eps, n) = m.parts();
            w.u32(radix_bits)?;
            w.u32(shift)?;
            w.u64(min_key)?;
            w.u64(max_key)?;
            w.u64(eps as u64)?;
            w.u64(n as u64)?;
            w.u64(table.len() as u64)?;
            for &e in table {
                w.u32(e)?;
            }
            w.u64(spline.len() as u64)?;
            for &(k, r) in spline {
                w.u64(k)?;
                w.u64(r as u64)?;
            }
        }
    }
    w.0.flush()?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<Model> {
    let mut r = Reader(BufReader::new(File::open(path)?));
    let magic: [u8; 4] = r.bytes()?;
    if &magic != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported model format version {version} (expected {VERSION})"
        )));
    }
    match r.u8()? {
        KIND_LINEAR => {
            let slope = r.f64()?;
            let intercept = r.f64()?;
            let max_err = r.f64()?;
            let eps = r.u64()? as usize;
            let n = r.u64()? as usize;
            Ok(Model::Linear(LinearCdfModel::from_parts(slope, intercept, max_err, eps, n)))
        }
        KIND_RMI => {
            let root = LinearFn { slope: r.f64()?, intercept: r.f64()? };
            let branching = r.u64()? as usize;
            let n = r.u64()? as usize;
            let mut leaves = Vec::with_capacity(branching);
            let mut err_lo = Vec::with_capacity(branching);
            let mut err_hi = Vec::with_capacity(branching);
            for _ in 0..branching {
                leaves.push(LinearFn { slope: r.f64()?, intercept: r.f64()? });
                err_lo.push(r.u64()? as usize);
                err_hi.push(r.u64()? as usize);
            }
            Ok(Model::Rmi(RmiModel::from_parts(root, leaves, err_lo, err_hi, branching, n)))
        }
        KIND_PGM => {
            let eps = r.u64()? as usize;
            let n = r.u64()? as usize;
            let num_levels = r.u64()? as usize;
            let mut levels = Vec::with_capacity(num_levels);
            for _ in 0..num_levels {
                let count = r.u64()? as usize;
                let mut segs = Vec::with_capacity(count);
                for _ in 0..count {
                    segs.push(Segment {
                        first_key: r.u64()?,
                        slope: r.f64()?,
                        intercept: r.f64()?,
                    });
                }
                levels.push(segs);
            }
            if levels.is_empty() || levels[0].len() != 1 {
                return Err(Error::Format("PGM model must have a single-segment root".into()));
            }
            Ok(Model::Pgm(PgmModel::from_parts(levels, eps, n)))
        }
        KIND_RS => {
            let radix_bits = r.u32()?;
            let shift = r.u32()?;
            let min_key = r.u64()?;
            let max_key = r.u64()?;
            let eps = r.u64()? as usize;
            let n = r.u64()? as usize;
            let table_len = r.u64()? as usize;
            let mut table = Vec::with_capacity(table_len);
            for _ in 0..table_len {
                table.push(r.u32()?);
            }
            let spline_len = r.u64()? as usize;
            let mut spline = Vec::with_capacity(spline_len);
            for _ in 0..spline_len {
                let k = r.u64()?;
                let rank = r.u64()? as usize;
                spline.push((k, rank));
            }
            Ok(Model::Rs(RsModel::from_parts(
                radix_bits, shift, min_key, max_key, table, spline, eps, n,
            )))
        }
        kind => Err(Error::Format(format!("unknown model kind {kind}"))),
    }
}
