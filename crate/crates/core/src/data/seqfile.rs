//! Cached sequences.
//!
//! ```text
//! magic    8 bytes  "NCAESEQ\0"
//! version  u32      1
//! count    u32      number of sequences
//! rows     u32      S
//! cols     u32      D
//! repeated count times:
//!   id_len u32, id (UTF-8)
//!   start  f64      seconds
//!   values rows·cols little-endian f64, row-major
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dsp::MfccSequence;
use crate::error::{Error, Result};
use crate::nn::io::Cursor;
use crate::scalar::Scalar;

pub const SEQUENCE_MAGIC: &[u8; 8] = b"NCAESEQ\0";
pub const SEQUENCE_VERSION: u32 = 1;

pub fn encode_sequences<T: Scalar>(seqs: &[MfccSequence<T>]) -> Result<Vec<u8>> {
    let (rows, cols) = seqs.first().map_or((0, 0), |s| (s.rows, s.cols));
    let mut out = Vec::new();
    out.extend_from_slice(SEQUENCE_MAGIC);
    out.extend_from_slice(&SEQUENCE_VERSION.to_le_bytes());
    for v in [seqs.len(), rows, cols] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for s in seqs {
        if (s.rows, s.cols) != (rows, cols) {
            return Err(Error::shape(format!(
                "sequence '{}' is {}×{}, file holds {rows}×{cols}",
                s.source_id, s.rows, s.cols
            )));
        }
        out.extend_from_slice(&(s.source_id.len() as u32).to_le_bytes());
        out.extend_from_slice(s.source_id.as_bytes());
        s.start_time.write_le(&mut out);
        for &v in &s.data {
            v.as_f64().write_le(&mut out);
        }
    }
    Ok(out)
}

pub fn write_sequences<T: Scalar>(path: &Path, seqs: &[MfccSequence<T>]) -> Result<()> {
    fs::write(path, encode_sequences(seqs)?)?;
    Ok(())
}

pub fn decode_sequences<T: Scalar>(bytes: &[u8], path: &Path) -> Result<Vec<MfccSequence<T>>> {
    let mut cur = Cursor::new(bytes, path);
    if cur.take(8)? != SEQUENCE_MAGIC {
        return Err(cur.error("not a sequence file (bad magic)"));
    }
    let version = cur.u32()?;
    if version != SEQUENCE_VERSION {
        return Err(cur.error(format!("unsupported sequence file version {version}")));
    }
    let count = cur.u32()? as usize;
    let rows = cur.u32()? as usize;
    let cols = cur.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let id = cur.string()?;
        let start = cur.values::<f64>(1)?[0];
        let data: Vec<f64> = cur.values(rows * cols)?;
        let seq = MfccSequence::new(data.into_iter().map(T::lit).collect(), rows, cols, id, start)
            .map_err(|e| cur.error(e.to_string()))?;
        out.push(seq);
    }
    cur.finish()?;
    Ok(out)
}

pub fn read_sequences<T: Scalar>(path: &Path) -> Result<Vec<MfccSequence<T>>> {
    let bytes = fs::read(path).map_err(|e| Error::format(path, e.to_string()))?;
    decode_sequences(&bytes, path)
}

/// Debug dump with one row per MFCC vector:
/// `source_id,start_time,row,c0,…,c{D−1}`.
pub fn sequences_csv<T: Scalar>(seqs: &[MfccSequence<T>]) -> String {
    let cols = seqs.first().map_or(0, |s| s.cols);
    let mut out = String::from("source_id,start_time,row");
    for c in 0..cols {
        let _ = write!(out, ",c{c}");
    }
    out.push('\n');
    for s in seqs {
        for r in 0..s.rows {
            let _ = write!(out, "{},{},{r}", s.source_id, s.start_time);
            for v in s.row(r) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seqs(n: usize, s: usize, d: usize) -> Vec<MfccSequence<f64>> {
        (0..n)
            .map(|i| {
                let data = (0..s * d).map(|j| (i * 31 + j) as f64 * 0.25 - 3.0).collect();
                MfccSequence::new(data, s, d, format!("ev{i}"), i as f64 * 7.5).unwrap()
            })
            .collect()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.seq");
        let original = seqs(3, 4, 5);
        write_sequences(&p, &original).unwrap();
        assert_eq!(read_sequences::<f64>(&p).unwrap(), original);
    }

    #[test]
    fn truncated_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("broken.seq");
        let bytes = encode_sequences(&seqs(2, 3, 3)).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        let msg = read_sequences::<f64>(&p).unwrap_err().to_string();
        assert!(msg.contains("broken.seq"), "{msg}");
    }

    #[test]
    fn garbage_rejected() {
        let p = Path::new("x.seq");
        assert!(decode_sequences::<f64>(b"hello world, not a file", p).is_err());
    }

    #[test]
    fn csv_rows() {
        let text = sequences_csv(&seqs(2, 3, 2));
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "source_id,start_time,row,c0,c1");
        assert_eq!(lines.len(), 1 + 6);
        assert!(lines[4].starts_with("ev1,7.5,0,"));
    }

    proptest! {
        #[test]
        fn arbitrary_values_survive(values in prop::collection::vec(-1e6f64..1e6, 6), t in 0.0f64..1e4) {
            let s = MfccSequence::new(values, 2, 3, "p", t).unwrap();
            let back = decode_sequences::<f64>(&encode_sequences(&[s.clone()]).unwrap(), Path::new("m")).unwrap();
            prop_assert_eq!(back, vec![s]);
        }
    }
}
