//! Binary containers.
//!
//! `DTF1` tensor: magic `DTF1`, u32 order N, N x u64 extents, then the
//! payload as little-endian f64 in first-index-fastest order. All integers
//! are little-endian.
//!
//! Model files (`MPS1`, `TKR1`) are defined in [`crate::mps`] and
//! [`crate::hooi`] and embed tensors as DTF1 blobs using the helpers here.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const DTF_MAGIC: &[u8; 4] = b"DTF1";

/// Orders above this are rejected as corrupt headers.
const MAX_ORDER: u32 = 64;

pub fn write_dtf<W: Write>(w: &mut W, t: &DenseTensor) -> Result<()> {
    w.write_all(DTF_MAGIC)?;
    write_u32(w, t.order() as u32)?;
    for &e in t.shape() {
        write_u64(w, e as u64)?;
    }
    let mut buf = Vec::with_capacity(t.len() * 8);
    for v in t.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_dtf<R: Read>(r: &mut R) -> Result<DenseTensor> {
    expect_magic(r, DTF_MAGIC)?;
    let order = read_u32(r)?;
    if order == 0 || order > MAX_ORDER {
        return Err(Error::Format(format!("bad tensor order {order}")));
    }
    let mut shape = Vec::with_capacity(order as usize);
    let mut len: usize = 1;
    for _ in 0..order {
        let e = usize::try_from(read_u64(r)?)
            .map_err(|_| Error::Format("extent overflows usize".into()))?;
        len = len
            .checked_mul(e)
            .ok_or_else(|| Error::Format("tensor size overflows".into()))?;
        shape.push(e);
    }
    let bytes = len
        .checked_mul(8)
        .ok_or_else(|| Error::Format("tensor size overflows".into()))?;
    let mut raw = Vec::new();
    r.take(bytes as u64).read_to_end(&mut raw)?;
    if raw.len() != bytes {
        return Err(Error::Format(format!(
            "truncated payload: {} of {bytes} bytes",
            raw.len()
        )));
    }
    let data = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    DenseTensor::new(shape, data)
}

pub fn save_dtf(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dtf(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load_dtf(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let mut r = BufReader::new(File::open(path)?);
    read_dtf(&mut r)
}

pub(crate) fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<()> {
    let mut got = [0u8; 4];
    r.read_exact(&mut got)
        .map_err(|_| Error::Format("missing magic".into()))?;
    if &got != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

pub(crate) fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(f64::from_le_bytes(b))
}
