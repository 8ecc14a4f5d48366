//! Binary triplet dump/load for oracle cross-checks.
//!
//! Layout (little-endian): magic "MCTR0001", n u64, nnz u64, then nnz
//! records of (row u64, col u64, value f64).

use crate::{Error, Result};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"MCTR0001";

pub fn dump_triplets(path: &Path, n: usize, triplets: &[(usize, usize, f64)]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&(n as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(triplets.len() as u64).to_le_bytes())
        .map_err(io_err)?;
    for &(r, c, v) in triplets {
        w.write_all(&(r as u64).to_le_bytes()).map_err(io_err)?;
        w.write_all(&(c as u64).to_le_bytes()).map_err(io_err)?;
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn load_triplets(path: &Path) -> Result<(usize, Vec<(usize, usize, f64)>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = BufReader::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(Error::format(path.display().to_string(), "bad magic"));
    }
    let mut u = [0u8; 8];
    r.read_exact(&mut u).map_err(io_err)?;
    let n = u64::from_le_bytes(u) as usize;
    r.read_exact(&mut u).map_err(io_err)?;
    let nnz = u64::from_le_bytes(u) as usize;
    let mut out = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let mut rec = [0u8; 24];
        r.read_exact(&mut rec).map_err(io_err)?;
        out.push((
            u64::from_le_bytes(rec[0..8].try_into().unwrap()) as usize,
            u64::from_le_bytes(rec[8..16].try_into().unwrap()) as usize,
            f64::from_le_bytes(rec[16..24].try_into().unwrap()),
        ));
    }
    Ok((n, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mat.trip");
        let trips = vec![(0usize, 0usize, 1.5), (1, 0, -2.25), (2, 2, 0.0)];
        dump_triplets(&path, 3, &trips).unwrap();
        let (n, loaded) = load_triplets(&path).unwrap();
        assert_eq!(n, 3);
        assert_eq!(loaded, trips);
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk");
        std::fs::write(&path, b"NOTMAGIC........").unwrap();
        assert!(load_triplets(&path).is_err());
    }
}
