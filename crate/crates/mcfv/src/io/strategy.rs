//! Read strategies over an indexed collated file, with rank readers
//! emulated as threads.
//!
//! master: rank 0 reads the whole payload region in one request and
//! scatters. parallel: every rank opens the file and reads its own
//! extent. grouped: √P group leaders (by default) each read their
//! group's merged extent — contiguous because payloads are laid out in
//! rank order — and scatter within the group. Instrumentation counts
//! opens, the maximum number of concurrently open descriptors (with
//! optional injected per-open latency so overlap is observable), and the
//! bytes funnelled through scattering ranks.

use super::index::IndexSidecar;
use crate::registry::Registry;
use crate::{Error, Result};
use std::io::{Read, Seek, SeekFrom};
use std::path::Path;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Barrier;
use std::time::Duration;

#[derive(Debug, Default)]
pub struct IoStats {
    pub open_latency: Duration,
    total_opens: AtomicUsize,
    current_opens: AtomicUsize,
    max_concurrent_opens: AtomicUsize,
    scattered_bytes: AtomicU64,
}

impl IoStats {
    pub fn new(open_latency: Duration) -> IoStats {
        IoStats {
            open_latency,
            ..IoStats::default()
        }
    }

    pub fn opens(&self) -> usize {
        self.total_opens.load(Ordering::SeqCst)
    }

    pub fn max_concurrent_opens(&self) -> usize {
        self.max_concurrent_opens.load(Ordering::SeqCst)
    }

    pub fn scattered_bytes(&self) -> u64 {
        self.scattered_bytes.load(Ordering::SeqCst)
    }

    fn enter_open(&self) {
        self.total_opens.fetch_add(1, Ordering::SeqCst);
        let now = self.current_opens.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_concurrent_opens.fetch_max(now, Ordering::SeqCst);
    }

    fn exit_open(&self) {
        self.current_opens.fetch_sub(1, Ordering::SeqCst);
    }
}

/// Open the file, hold the descriptor (plus injected latency) while
/// reading `len` bytes at `off`, and release the concurrency gauge only
/// after the read completes.
fn open_and_read(path: &Path, off: u64, len: u64, stats: &IoStats) -> Result<Vec<u8>> {
    let io_err = |e| Error::io(path.display().to_string(), e);
    stats.enter_open();
    let result = (|| {
        if !stats.open_latency.is_zero() {
            std::thread::sleep(stats.open_latency);
        }
        let mut file = std::fs::File::open(path).map_err(io_err)?;
        file.seek(SeekFrom::Start(off)).map_err(io_err)?;
        let mut buf = vec![0u8; len as usize];
        file.read_exact(&mut buf).map_err(io_err)?;
        Ok(buf)
    })();
    stats.exit_open();
    result
}

/// Slice a merged extent read back into per-rank payloads.
fn split_extent(merged: Vec<u8>, base: u64, records: &[(u64, u64)]) -> Vec<Vec<u8>> {
    records
        .iter()
        .map(|&(off, len)| {
            let s = (off - base) as usize;
            merged[s..s + len as usize].to_vec()
        })
        .collect()
}

fn merged_extent(records: &[(u64, u64)]) -> (u64, u64) {
    let base = records[0].0;
    let end = records.last().map(|&(o, l)| o + l).unwrap();
    (base, end - base)
}

pub trait ReadStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn read(&self, path: &Path, index: &IndexSidecar, stats: &IoStats) -> Result<Vec<Vec<u8>>>;
}

pub struct MasterScatter;

impl ReadStrategy for MasterScatter {
    fn name(&self) -> &'static str {
        "master"
    }

    fn read(&self, path: &Path, index: &IndexSidecar, stats: &IoStats) -> Result<Vec<Vec<u8>>> {
        check_index(path, index)?;
        let (base, len) = merged_extent(&index.records);
        let merged = open_and_read(path, base, len, stats)?;
        stats.scattered_bytes.fetch_add(len, Ordering::SeqCst);
        Ok(split_extent(merged, base, &index.records))
    }
}

pub struct Parallel;

impl ReadStrategy for Parallel {
    fn name(&self) -> &'static str {
        "parallel"
    }

    fn read(&self, path: &Path, index: &IndexSidecar, stats: &IoStats) -> Result<Vec<Vec<u8>>> {
        check_index(path, index)?;
        let p = index.rank_count();
        let barrier = Barrier::new(p);
        let mut results: Vec<Result<Vec<u8>>> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = index
                .records
                .iter()
                .map(|&(off, len)| {
                    let barrier = &barrier;
                    scope.spawn(move || {
                        // All ranks open together so the gauge sees P.
                        barrier.wait();
                        open_and_read(path, off, len, stats)
                    })
                })
                .collect();
            results = handles.into_iter().map(|h| h.join().unwrap()).collect();
        });
        results.into_iter().collect()
    }
}

pub struct Grouped {
    /// Number of groups; `None` selects round(√P).
    pub groups: Option<usize>,
}

impl Grouped {
    pub fn group_count(&self, p: usize) -> usize {
        self.groups
            .unwrap_or_else(|| ((p as f64).sqrt().round() as usize).max(1))
            .min(p)
    }
}

impl ReadStrategy for Grouped {
    fn name(&self) -> &'static str {
        "grouped"
    }

    fn read(&self, path: &Path, index: &IndexSidecar, stats: &IoStats) -> Result<Vec<Vec<u8>>> {
        check_index(path, index)?;
        let p = index.rank_count();
        let g = self.group_count(p);
        if g == 0 {
            return Err(Error::Config("group count must be >= 1".into()));
        }
        // Balanced contiguous rank groups.
        let bounds: Vec<usize> = (0..=g).map(|i| i * p / g).collect();
        let barrier = Barrier::new(g);
        let mut per_group: Vec<Result<Vec<Vec<u8>>>> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..g)
                .map(|i| {
                    let records = &index.records[bounds[i]..bounds[i + 1]];
                    let barrier = &barrier;
                    scope.spawn(move || {
                        barrier.wait();
                        let (base, len) = merged_extent(records);
                        let merged = open_and_read(path, base, len, stats)?;
                        stats.scattered_bytes.fetch_add(len, Ordering::SeqCst);
                        Ok(split_extent(merged, base, records))
                    })
                })
                .collect();
            per_group = handles.into_iter().map(|h| h.join().unwrap()).collect();
        });
        let mut out = Vec::with_capacity(p);
        for group in per_group {
            out.extend(group?);
        }
        Ok(out)
    }
}

fn check_index(path: &Path, index: &IndexSidecar) -> Result<()> {
    if index.records.is_empty() {
        return Err(Error::format(path.display().to_string(), "empty index"));
    }
    let size = std::fs::metadata(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?
        .len();
    index.validate(size)
}

pub static READ_STRATEGIES: Registry<dyn ReadStrategy> = Registry::new(
    "read strategy",
    &[
        ("master", || Box::new(MasterScatter)),
        ("parallel", || Box::new(Parallel)),
        ("grouped", || Box::new(Grouped { groups: None })),
    ],
);

/// Parse "master" | "parallel" | "grouped" | "grouped:<g>".
pub fn parse_read_strategy(spec: &str) -> Result<Box<dyn ReadStrategy>> {
    if let Some(g) = spec.strip_prefix("grouped:") {
        let groups: usize = g
            .parse()
            .map_err(|_| Error::Config(format!("bad group count {g:?}")))?;
        if groups == 0 {
            return Err(Error::Config("group count must be >= 1".into()));
        }
        return Ok(Box::new(Grouped { groups: Some(groups) }));
    }
    READ_STRATEGIES.create(spec)
}
