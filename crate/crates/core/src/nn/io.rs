//! Little-endian binary weight files.
//!
//! Layout:
//!
//! ```text
//! magic    8 bytes  "NCAEWTS\0"
//! version  u32      1
//! width    u32      bytes per value (4 = f32, 8 = f64)
//! count    u32      number of tensors
//! repeated count times:
//!   name_len u32, name (UTF-8)
//!   ndim     u32, dims (u64 each)
//!   values   product(dims) little-endian floats
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::scalar::Scalar;

pub const WEIGHTS_MAGIC: &[u8; 8] = b"NCAEWTS\0";
pub const WEIGHTS_VERSION: u32 = 1;

pub fn encode_tensors<T: Scalar>(tensors: &[(String, &Tensor<T>)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(T::BYTES as u32).to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.ndim() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in t.data() {
            v.write_le(&mut out);
        }
    }
    out
}

pub fn write_tensors<T: Scalar>(path: &Path, tensors: &[(String, &Tensor<T>)]) -> Result<()> {
    fs::write(path, encode_tensors(tensors))?;
    Ok(())
}

pub(crate) struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(bytes: &'a [u8], path: &'a Path) -> Self {
        Self { bytes, pos: 0, path }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(self.path, "unexpected end of file"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::format(self.path, "name is not UTF-8"))
    }

    pub(crate) fn values<T: Scalar>(&mut self, count: usize) -> Result<Vec<T>> {
        let raw = self.take(count.checked_mul(T::BYTES).ok_or_else(|| {
            Error::format(self.path, "value count overflows")
        })?)?;
        Ok(raw.chunks_exact(T::BYTES).map(T::read_le).collect())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::format(self.path, "trailing bytes after last record"));
        }
        Ok(())
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> Error {
        Error::format(self.path, msg)
    }
}

pub fn decode_tensors<T: Scalar>(bytes: &[u8], path: &Path) -> Result<Vec<(String, Tensor<T>)>> {
    let mut cur = Cursor::new(bytes, path);
    if cur.take(8)? != WEIGHTS_MAGIC {
        return Err(cur.error("not a weight file (bad magic)"));
    }
    let version = cur.u32()?;
    if version != WEIGHTS_VERSION {
        return Err(cur.error(format!("unsupported weight file version {version}")));
    }
    let width = cur.u32()? as usize;
    if width != T::BYTES {
        return Err(cur.error(format!(
            "weights stored with {width}-byte values, expected {}",
            T::BYTES
        )));
    }
    let count = cur.u32()? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name = cur.string()?;
        let ndim = cur.u32()? as usize;
        let shape = (0..ndim)
            .map(|_| cur.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let len = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| cur.error("tensor size overflows"))?;
        let data = cur.values(len)?;
        out.push((name, Tensor::new(shape, data)?));
    }
    cur.finish()?;
    Ok(out)
}

pub fn read_tensors<T: Scalar>(path: &Path) -> Result<Vec<(String, Tensor<T>)>> {
    let bytes = fs::read(path)?;
    decode_tensors(&bytes, path)
}
