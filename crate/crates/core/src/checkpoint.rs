//! Binary tensor container shared by the policy and the trainer.
//!
//! Layout:
//! - magic string `DROROUTE1`
//! - u32 LE entry count
//! - per entry: u32 LE name length, UTF-8 name, u32 LE rank, rank x u64 LE dims
//! - payload: each entry's values as little-endian f64, in manifest order
//!
//! Loading rejects unknown magic; shape/name consistency against a model is
//! checked by the caller. Values round-trip bit-exactly.

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 9] = b"DROROUTE1";

pub fn write_tensors(path: &Path, entries: &[(String, Tensor)]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(entries.len() as u32).to_le_bytes())?;
    for (name, tensor) in entries {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        w.write_all(&(tensor.shape().len() as u32).to_le_bytes())?;
        for &d in tensor.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
    }
    for (_, tensor) in entries {
        for v in tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_tensors(path: &Path) -> Result<Vec<(String, Tensor)>> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 9];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "bad magic {:?} in {}",
            magic,
            path.display()
        )));
    }
    let count = read_u32(&mut r)? as usize;
    let mut manifest = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        if name_len > 4096 {
            return Err(Error::Checkpoint(format!("name length {name_len} too big")));
        }
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::Checkpoint("non-UTF8 tensor name".into()))?;
        let rank = read_u32(&mut r)? as usize;
        if rank > 8 {
            return Err(Error::Checkpoint(format!("rank {rank} too big")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u64(&mut r)? as usize);
        }
        manifest.push((name, shape));
    }
    let mut out = Vec::with_capacity(count);
    for (name, shape) in manifest {
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        let mut buf = [0u8; 8];
        for _ in 0..numel {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        out.push((name, Tensor::new(shape, data)?));
    }
    Ok(out)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}
