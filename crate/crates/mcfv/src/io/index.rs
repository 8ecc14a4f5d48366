//! Byte-offset index sidecar: magic "DFIDX001", rank_count u32, then one
//! (offset u64, length u64) record per rank into the companion collated
//! file. Little-endian; offsets strictly increasing and gap-free over the
//! payload region.

use super::collated::read_header;
use crate::{Error, Result};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub const INDEX_MAGIC: &[u8; 8] = b"DFIDX001";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSidecar {
    pub records: Vec<(u64, u64)>,
}

impl IndexSidecar {
    pub fn rank_count(&self) -> usize {
        self.records.len()
    }

    /// Offsets increasing, extents contiguous, all within `file_size`.
    pub fn validate(&self, file_size: u64) -> Result<()> {
        let mut expected_next: Option<u64> = None;
        for (i, &(off, len)) in self.records.iter().enumerate() {
            if let Some(next) = expected_next {
                if off != next {
                    return Err(Error::Partition(format!(
                        "index record {i} not contiguous: offset {off}, expected {next}"
                    )));
                }
            }
            if off + len > file_size {
                return Err(Error::Partition(format!(
                    "index record {i} exceeds file size {file_size}"
                )));
            }
            expected_next = Some(off + len);
        }
        Ok(())
    }
}

/// `<file>.idx` next to the collated file.
pub fn index_path(collated: &Path) -> PathBuf {
    let mut os = collated.as_os_str().to_owned();
    os.push(".idx");
    PathBuf::from(os)
}

/// Scan the collated header and write the sidecar alongside.
pub fn build_index(collated: &Path) -> Result<IndexSidecar> {
    let header = read_header(collated)?;
    let records: Vec<(u64, u64)> = (0..header.rank_count())
        .map(|r| (header.payload_offset(r), header.payload_len(r)))
        .collect();
    let index = IndexSidecar { records };
    write_index(&index_path(collated), &index)?;
    Ok(index)
}

pub fn write_index(path: &Path, index: &IndexSidecar) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    w.write_all(INDEX_MAGIC).map_err(io_err)?;
    w.write_all(&(index.records.len() as u32).to_le_bytes()).map_err(io_err)?;
    for &(off, len) in &index.records {
        w.write_all(&off.to_le_bytes()).map_err(io_err)?;
        w.write_all(&len.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_index(path: &Path) -> Result<IndexSidecar> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = std::io::BufReader::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != INDEX_MAGIC {
        return Err(Error::format(path.display().to_string(), "bad magic"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(io_err)?;
    let n = u32::from_le_bytes(b4) as usize;
    let mut records = Vec::with_capacity(n);
    let mut b8 = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b8).map_err(io_err)?;
        let off = u64::from_le_bytes(b8);
        r.read_exact(&mut b8).map_err(io_err)?;
        records.push((off, u64::from_le_bytes(b8)));
    }
    Ok(IndexSidecar { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::collated::{write_collated, DType};

    fn sample_file(dir: &Path, payloads: &[Vec<u8>]) -> PathBuf {
        let path = dir.join("data.dfc");
        write_collated(&path, "U", DType::Bytes, payloads).unwrap();
        path
    }

    #[test]
    fn single_rank_record_starts_at_header_end() {
        let dir = tempfile::tempdir().unwrap();
        let path = sample_file(dir.path(), &[vec![7u8; 16]]);
        let index = build_index(&path).unwrap();
        let header = read_header(&path).unwrap();
        assert_eq!(index.records, vec![(header.header_len, 16)]);
    }

    #[test]
    fn records_cover_payload_region_without_gaps() {
        let dir = tempfile::tempdir().unwrap();
        let payloads = vec![vec![1u8; 13], vec![2u8; 7], vec![3u8; 0], vec![4u8; 21]];
        let path = sample_file(dir.path(), &payloads);
        let index = build_index(&path).unwrap();
        let size = std::fs::metadata(&path).unwrap().len();
        index.validate(size).unwrap();
        let last = index.records.last().unwrap();
        assert_eq!(last.0 + last.1, size);
        // Per-rank extraction matches the original payloads bytewise.
        let bytes = std::fs::read(&path).unwrap();
        for (r, p) in payloads.iter().enumerate() {
            let (off, len) = index.records[r];
            assert_eq!(&bytes[off as usize..(off + len) as usize], &p[..]);
        }
    }

    #[test]
    fn regeneration_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = sample_file(dir.path(), &[vec![5u8; 9], vec![6u8; 33]]);
        build_index(&path).unwrap();
        let first = std::fs::read(index_path(&path)).unwrap();
        build_index(&path).unwrap();
        assert_eq!(std::fs::read(index_path(&path)).unwrap(), first);
        let loaded = read_index(&index_path(&path)).unwrap();
        assert_eq!(loaded, build_index(&path).unwrap());
    }

    #[test]
    fn validate_catches_inconsistencies() {
        let bad = IndexSidecar { records: vec![(10, 5), (16, 4)] };
        assert!(bad.validate(100).is_err());
        let oob = IndexSidecar { records: vec![(10, 200)] };
        assert!(oob.validate(100).is_err());
    }
}
