//! Binary parameter checkpoints.
//!
//! ```text
//! u8      version (= 1)
//! u32     segment count
//! repeat: u16 name length, name bytes (UTF-8), u64 offset, u64 length
//! u64     value count
//! f64 * n values
//! ```
//! All integers and floats are little-endian.

use std::io::{self, Read, Write};

use super::params::{ParamVector, Segment};
use super::ScorerError;

pub const CHECKPOINT_VERSION: u8 = 1;

pub fn write_checkpoint<W: Write>(params: &ParamVector, mut w: W) -> io::Result<()> {
    w.write_all(&[CHECKPOINT_VERSION])?;
    w.write_all(&(params.layout().len() as u32).to_le_bytes())?;
    for s in params.layout() {
        let name = s.name.as_bytes();
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&(s.offset as u64).to_le_bytes())?;
        w.write_all(&(s.len as u64).to_le_bytes())?;
    }
    w.write_all(&(params.len() as u64).to_le_bytes())?;
    for v in params.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], ScorerError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| ScorerError::Checkpoint(e.to_string()))?;
    Ok(buf)
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ParamVector, ScorerError> {
    let [version] = read_exact::<1, _>(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(ScorerError::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let n_seg = u32::from_le_bytes(read_exact(&mut r)?) as usize;
    let mut layout = Vec::with_capacity(n_seg);
    for _ in 0..n_seg {
        let name_len = u16::from_le_bytes(read_exact(&mut r)?) as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)
            .map_err(|e| ScorerError::Checkpoint(e.to_string()))?;
        let name = String::from_utf8(name).map_err(|e| ScorerError::Checkpoint(e.to_string()))?;
        let offset = u64::from_le_bytes(read_exact(&mut r)?) as usize;
        let len = u64::from_le_bytes(read_exact(&mut r)?) as usize;
        layout.push(Segment { name, offset, len });
    }
    let n = u64::from_le_bytes(read_exact(&mut r)?) as usize;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(f64::from_le_bytes(read_exact(&mut r)?));
    }
    ParamVector::from_parts(values, layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrip(a in prop::collection::vec(-1e6f64..1e6, 0..20),
                     b in prop::collection::vec(-1e6f64..1e6, 0..20)) {
            let mut p = ParamVector::zeros(&[("first", a.len()), ("second", b.len())]);
            p.segment_mut("first").copy_from_slice(&a);
            p.segment_mut("second").copy_from_slice(&b);
            let mut buf = Vec::new();
            write_checkpoint(&p, &mut buf).unwrap();
            prop_assert_eq!(buf[0], CHECKPOINT_VERSION);
            prop_assert_eq!(read_checkpoint(&buf[..]).unwrap(), p);
        }
    }

    #[test]
    fn rejects_unknown_version_and_truncation() {
        let p = ParamVector::zeros(&[("w", 3)]);
        let mut buf = Vec::new();
        write_checkpoint(&p, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = 9;
        assert!(read_checkpoint(&bad[..]).is_err());
        assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
    }
}
