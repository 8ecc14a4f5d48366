//! Collated file layout: header (magic "DFCOLL01", version u32,
//! rank_count u32, payload descriptor: name length u32 + name bytes +
//! dtype code u8 + per-rank element count u64 array) followed by the rank
//! payloads concatenated in rank order. Little-endian throughout; the
//! layout is normative and bit-exact.

use crate::{Error, Result};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

pub const COLLATED_MAGIC: &[u8; 8] = b"DFCOLL01";
pub const COLLATED_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    Bytes,
    F32,
    F64,
    U32,
    U64,
}

impl DType {
    pub fn code(self) -> u8 {
        match self {
            DType::Bytes => 0,
            DType::F32 => 1,
            DType::F64 => 2,
            DType::U32 => 3,
            DType::U64 => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<DType> {
        Some(match code {
            0 => DType::Bytes,
            1 => DType::F32,
            2 => DType::F64,
            3 => DType::U32,
            4 => DType::U64,
            _ => return None,
        })
    }

    pub fn size(self) -> usize {
        match self {
            DType::Bytes => 1,
            DType::F32 | DType::U32 => 4,
            DType::F64 | DType::U64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CollatedHeader {
    pub version: u32,
    pub name: String,
    pub dtype: DType,
    /// Elements (not bytes) per rank.
    pub counts: Vec<u64>,
    /// Total header length in bytes; payload 0 starts here.
    pub header_len: u64,
}

impl CollatedHeader {
    pub fn rank_count(&self) -> usize {
        self.counts.len()
    }

    pub fn payload_len(&self, rank: usize) -> u64 {
        self.counts[rank] * self.dtype.size() as u64
    }

    pub fn payload_offset(&self, rank: usize) -> u64 {
        self.header_len + self.counts[..rank].iter().sum::<u64>() * self.dtype.size() as u64
    }
}

pub fn write_collated(path: &Path, name: &str, dtype: DType, payloads: &[Vec<u8>]) -> Result<()> {
    if payloads.is_empty() {
        return Err(Error::format(path.display().to_string(), "need >= 1 rank"));
    }
    let elem = dtype.size() as u64;
    for (r, p) in payloads.iter().enumerate() {
        if p.len() as u64 % elem != 0 {
            return Err(Error::format(
                path.display().to_string(),
                &format!("rank {r} payload not a multiple of the element size"),
            ));
        }
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    w.write_all(COLLATED_MAGIC).map_err(io_err)?;
    w.write_all(&COLLATED_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(payloads.len() as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(name.len() as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(name.as_bytes()).map_err(io_err)?;
    w.write_all(&[dtype.code()]).map_err(io_err)?;
    for p in payloads {
        w.write_all(&(p.len() as u64 / elem).to_le_bytes()).map_err(io_err)?;
    }
    for p in payloads {
        w.write_all(p).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_header(path: &Path) -> Result<CollatedHeader> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = std::io::BufReader::new(file);
    read_header_from(&mut r, path)
}

pub(crate) fn read_header_from<R: Read>(r: &mut R, path: &Path) -> Result<CollatedHeader> {
    let io_err = |e| Error::io(path.display().to_string(), e);
    let bad = |reason: &str| Error::format(path.display().to_string(), reason);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != COLLATED_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(io_err)?;
    let version = u32::from_le_bytes(b4);
    if version != COLLATED_VERSION {
        return Err(bad("unsupported version"));
    }
    r.read_exact(&mut b4).map_err(io_err)?;
    let rank_count = u32::from_le_bytes(b4) as usize;
    if rank_count == 0 {
        return Err(bad("zero rank count"));
    }
    r.read_exact(&mut b4).map_err(io_err)?;
    let name_len = u32::from_le_bytes(b4) as usize;
    if name_len > 4096 {
        return Err(bad("implausible payload name length"));
    }
    let mut name_bytes = vec![0u8; name_len];
    r.read_exact(&mut name_bytes).map_err(io_err)?;
    let name = String::from_utf8(name_bytes).map_err(|_| bad("payload name not utf-8"))?;
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1).map_err(io_err)?;
    let dtype = DType::from_code(b1[0]).ok_or_else(|| bad("unknown dtype code"))?;
    let mut counts = Vec::with_capacity(rank_count);
    let mut b8 = [0u8; 8];
    for _ in 0..rank_count {
        r.read_exact(&mut b8).map_err(io_err)?;
        counts.push(u64::from_le_bytes(b8));
    }
    let header_len = 8 + 4 + 4 + 4 + name_len as u64 + 1 + 8 * rank_count as u64;
    Ok(CollatedHeader {
        version,
        name,
        dtype,
        counts,
        header_len,
    })
}

/// Read every rank payload sequentially (the non-strategy reference path).
pub fn read_all(path: &Path) -> Result<(CollatedHeader, Vec<Vec<u8>>)> {
    let header = read_header(path)?;
    let io_err = |e| Error::io(path.display().to_string(), e);
    let mut file = std::fs::File::open(path).map_err(io_err)?;
    let total: u64 = (0..header.rank_count()).map(|r| header.payload_len(r)).sum();
    let actual = file.metadata().map_err(io_err)?.len();
    if actual != header.header_len + total {
        return Err(Error::format(
            path.display().to_string(),
            &format!("file length {actual} != header + payloads {}", header.header_len + total),
        ));
    }
    file.seek(SeekFrom::Start(header.header_len)).map_err(io_err)?;
    let mut payloads = Vec::with_capacity(header.rank_count());
    for rank in 0..header.rank_count() {
        let mut buf = vec![0u8; header.payload_len(rank) as usize];
        file.read_exact(&mut buf).map_err(io_err)?;
        payloads.push(buf);
    }
    Ok((header, payloads))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_rank_layout_is_header_plus_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.dfc");
        write_collated(&path, "phi", DType::Bytes, &[vec![1, 2, 3, 4, 5, 6, 7, 8]]).unwrap();
        let header = read_header(&path).unwrap();
        assert_eq!(header.rank_count(), 1);
        assert_eq!(header.counts, vec![8]);
        let size = std::fs::metadata(&path).unwrap().len();
        assert_eq!(size, header.header_len + 8);
    }

    #[test]
    fn round_trip_unequal_ranks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("four.dfc");
        let payloads: Vec<Vec<u8>> = vec![
            (0..24u8).collect(),
            (0..8u8).collect(),
            vec![],
            (100..180u8).collect(),
        ];
        write_collated(&path, "T", DType::F64, &payloads).unwrap();
        let (header, back) = read_all(&path).unwrap();
        assert_eq!(header.name, "T");
        assert_eq!(header.dtype, DType::F64);
        assert_eq!(back, payloads);
    }

    #[test]
    fn deterministic_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        let payloads = vec![vec![9u8; 40], vec![3u8; 16]];
        write_collated(&a, "rho", DType::U32, &payloads).unwrap();
        write_collated(&b, "rho", DType::U32, &payloads).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn malformed_inputs_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad");
        assert!(write_collated(&path, "x", DType::F64, &[]).is_err());
        assert!(write_collated(&path, "x", DType::F64, &[vec![0u8; 7]]).is_err());
        std::fs::write(&path, b"WRONGMAG").unwrap();
        assert!(read_header(&path).is_err());
        // Truncated payload region.
        let good = dir.path().join("good");
        write_collated(&good, "x", DType::Bytes, &[vec![1u8; 32]]).unwrap();
        let bytes = std::fs::read(&good).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert!(read_all(&path).is_err());
    }
}
