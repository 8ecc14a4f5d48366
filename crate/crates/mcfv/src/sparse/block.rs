//! Block-CSR storage aligned with thread-owned contiguous row ranges, and
//! the static LDU -> block conversion map.
//!
//! The sparsity pattern is fixed once per mesh; only values change between
//! time steps, so conversion reduces to a precomputed scatter.

use super::LduMatrix;
use crate::pool::{run_workers, SharedSliceMut};
use crate::{Error, Result};
use std::ops::Range;

/// One CSR sub-matrix; rows local to its block row range, columns local to
/// its block column range. Empty blocks are not stored at all.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrBlock {
    pub row_offsets: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCsrMatrix {
    /// Block grid size (thread count).
    pub t: usize,
    pub n: usize,
    /// Per-thread contiguous cell ranges, ordered.
    pub row_ranges: Vec<Range<usize>>,
    /// t x t grid, row-major; None for structurally empty blocks.
    pub blocks: Vec<Option<CsrBlock>>,
    /// Fingerprint of the sparsity pattern, shared with the map built for it.
    pub pattern_id: u64,
}

impl BlockCsrMatrix {
    pub fn block(&self, i: usize, j: usize) -> Option<&CsrBlock> {
        self.blocks[i * self.t + j].as_ref()
    }

    pub fn nnz(&self) -> usize {
        self.blocks
            .iter()
            .flatten()
            .map(|b| b.values.len())
            .sum()
    }

    /// All nonzeros as (row, col, value) in global indices.
    pub fn to_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.t {
            for j in 0..self.t {
                if let Some(b) = self.block(i, j) {
                    let (r0, c0) = (self.row_ranges[i].start, self.row_ranges[j].start);
                    for lr in 0..b.row_offsets.len() - 1 {
                        for k in b.row_offsets[lr]..b.row_offsets[lr + 1] {
                            out.push((r0 + lr, c0 + b.cols[k], b.values[k]));
                        }
                    }
                }
            }
        }
        out
    }

    /// Dense reconstruction; intended for small oracle checks only.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (r, c, v) in self.to_triplets() {
            d[r][c] += v;
        }
        d
    }

    /// Extract the diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0; self.n];
        for i in 0..self.t {
            if let Some(b) = self.block(i, i) {
                let r0 = self.row_ranges[i].start;
                for lr in 0..b.row_offsets.len() - 1 {
                    for k in b.row_offsets[lr]..b.row_offsets[lr + 1] {
                        if b.cols[k] == lr {
                            diag[r0 + lr] = b.values[k];
                        }
                    }
                }
            }
        }
        diag
    }
}

/// Source slot in the LDU arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LduSlot {
    Diag(u32),
    Lower(u32),
    Upper(u32),
}

#[derive(Debug, Clone, Copy)]
pub struct MapEntry {
    pub slot: LduSlot,
    /// Flat block index (block_row * t + block_col).
    pub block: u32,
    /// Offset into that block's value array.
    pub offset: u32,
}

/// Static positional map from LDU slots to block-CSR value slots, segmented
/// by target block row so workers refresh disjoint regions.
#[derive(Debug, Clone)]
pub struct LduBlockMap {
    pub t: usize,
    /// Entries targeting block row i, for each i.
    pub by_block_row: Vec<Vec<MapEntry>>,
    pub pattern_id: u64,
    pub n_cells: usize,
    pub n_internal_faces: usize,
}

impl LduBlockMap {
    pub fn len(&self) -> usize {
        self.by_block_row.iter().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn fnv1a(data: impl IntoIterator<Item = u64>) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for x in data {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

fn pattern_fingerprint(ldu: &LduMatrix, ranges: &[Range<usize>]) -> u64 {
    fnv1a(
        [ldu.n_cells as u64, ldu.owner.len() as u64]
            .into_iter()
            .chain(ldu.owner.iter().map(|&v| v as u64))
            .chain(ldu.neighbour.iter().map(|&v| v as u64))
            .chain(ranges.iter().flat_map(|r| [r.start as u64, r.end as u64])),
    )
}

/// Build the structure-only block matrix (values zeroed) and the complete
/// slot map for the sparsity pattern of `ldu` under `row_ranges`.
pub fn build_block_map(
    ldu: &LduMatrix,
    row_ranges: &[Range<usize>],
) -> Result<(BlockCsrMatrix, LduBlockMap)> {
    ldu.validate()?;
    let n = ldu.n_cells;
    let t = row_ranges.len();
    let mut covered = 0;
    for r in row_ranges {
        if r.start != covered {
            return Err(Error::Partition(format!(
                "row ranges not contiguous at {covered}"
            )));
        }
        covered = r.end;
    }
    if covered != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: covered,
        });
    }
    let mut part_of = vec![0usize; n];
    for (i, r) in row_ranges.iter().enumerate() {
        for c in r.clone() {
            part_of[c] = i;
        }
    }

    // Collect (block, local row, local col, slot) for every nonzero.
    struct Raw {
        block: usize,
        lr: usize,
        lc: usize,
        slot: LduSlot,
    }
    let mut raw = Vec::with_capacity(ldu.nnz());
    let push = |r: usize, c: usize, slot: LduSlot, raw: &mut Vec<Raw>| {
        let (bi, bj) = (part_of[r], part_of[c]);
        raw.push(Raw {
            block: bi * t + bj,
            lr: r - row_ranges[bi].start,
            lc: c - row_ranges[bj].start,
            slot,
        });
    };
    for c in 0..n {
        push(c, c, LduSlot::Diag(c as u32), &mut raw);
    }
    for f in 0..ldu.owner.len() {
        push(
            ldu.owner[f],
            ldu.neighbour[f],
            LduSlot::Upper(f as u32),
            &mut raw,
        );
        push(
            ldu.neighbour[f],
            ldu.owner[f],
            LduSlot::Lower(f as u32),
            &mut raw,
        );
    }
    // CSR order inside each block: by (row, col), ascending.
    raw.sort_by_key(|e| (e.block, e.lr, e.lc));

    let pattern_id = pattern_fingerprint(ldu, row_ranges);
    let mut blocks: Vec<Option<CsrBlock>> = vec![None; t * t];
    let mut by_block_row: Vec<Vec<MapEntry>> = vec![Vec::new(); t];
    let mut idx = 0;
    while idx < raw.len() {
        let block = raw[idx].block;
        let end = raw[idx..]
            .iter()
            .position(|e| e.block != block)
            .map_or(raw.len(), |p| idx + p);
        let (bi, bj) = (block / t, block % t);
        let n_rows = row_ranges[bi].len();
        let _n_cols = row_ranges[bj].len();
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut cols = Vec::with_capacity(end - idx);
        for e in &raw[idx..end] {
            row_offsets[e.lr + 1] += 1;
            cols.push(e.lc);
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        for (off, e) in raw[idx..end].iter().enumerate() {
            by_block_row[bi].push(MapEntry {
                slot: e.slot,
                block: block as u32,
                offset: off as u32,
            });
        }
        blocks[block] = Some(CsrBlock {
            row_offsets,
            values: vec![0.0; cols.len()],
            cols,
        });
        idx = end;
    }

    Ok((
        BlockCsrMatrix {
            t,
            n,
            row_ranges: row_ranges.to_vec(),
            blocks,
            pattern_id,
        },
        LduBlockMap {
            t,
            by_block_row,
            pattern_id,
            n_cells: n,
            n_internal_faces: ldu.owner.len(),
        },
    ))
}

/// Scatter the LDU values into the block matrix through the precomputed
/// map. Workers handle one target block row each; targets are disjoint by
/// construction.
pub fn refresh_values(ldu: &LduMatrix, map: &LduBlockMap, dst: &mut BlockCsrMatrix) -> Result<()> {
    if map.pattern_id != dst.pattern_id {
        return Err(Error::StaleBlockMap(
            "map was built for a different sparsity pattern".into(),
        ));
    }
    if ldu.n_cells != map.n_cells || ldu.owner.len() != map.n_internal_faces {
        return Err(Error::StaleBlockMap(format!(
            "LDU shape ({} cells, {} faces) does not match map ({}, {})",
            ldu.n_cells,
            ldu.owner.len(),
            map.n_cells,
            map.n_internal_faces
        )));
    }
    let t = dst.t;
    let shared = SharedSliceMut::new(&mut dst.blocks);
    run_workers(t, |w| {
        for entry in &map.by_block_row[w.id] {
            let v = match entry.slot {
                LduSlot::Diag(i) => ldu.diag[i as usize],
                LduSlot::Lower(i) => ldu.lower[i as usize],
                LduSlot::Upper(i) => ldu.upper[i as usize],
            };
            // Block rows are disjoint across workers: block w.id*t ..< (w.id+1)*t.
            debug_assert_eq!(entry.block as usize / t, w.id);
            unsafe {
                let block = shared.get_mut(entry.block as usize);
                block.as_mut().unwrap().values[entry.offset as usize] = v;
            }
        }
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_box_mesh;
    use rand::{Rng, SeedableRng};

    fn random_ldu(mesh: &crate::mesh::UnstructuredMesh, seed: u64) -> LduMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = LduMatrix::zeros_like(mesh);
        for d in &mut a.diag {
            *d = rng.gen_range(1.0..10.0);
        }
        for f in 0..a.lower.len() {
            a.lower[f] = rng.gen_range(-1.0..1.0);
            a.upper[f] = rng.gen_range(-1.0..1.0);
        }
        a
    }

    fn quarter_ranges(n: usize, t: usize) -> Vec<Range<usize>> {
        (0..t)
            .map(|i| (i * n / t)..((i + 1) * n / t))
            .collect()
    }

    #[test]
    fn single_block_two_cells() {
        let mesh = build_box_mesh(2, 1, 1, [1.0; 3]).unwrap();
        let ldu = LduMatrix::zeros_like(&mesh);
        let (m, map) = build_block_map(&ldu, &[0..2]).unwrap();
        assert_eq!(m.t, 1);
        assert_eq!(m.nnz(), 4);
        assert_eq!(map.len(), 4);
    }

    #[test]
    fn nnz_identity_on_444() {
        let mesh = build_box_mesh(4, 4, 4, [1.0; 3]).unwrap();
        let ldu = LduMatrix::zeros_like(&mesh);
        let (m, map) = build_block_map(&ldu, &quarter_ranges(64, 4)).unwrap();
        assert_eq!(m.nnz(), 64 + 2 * 144);
        assert_eq!(map.len(), 64 + 2 * 144);
    }

    #[test]
    fn map_targets_unique() {
        let mesh = build_box_mesh(3, 3, 3, [1.0; 3]).unwrap();
        let ldu = LduMatrix::zeros_like(&mesh);
        let (_, map) = build_block_map(&ldu, &quarter_ranges(27, 3)).unwrap();
        let mut targets: Vec<(u32, u32)> = map
            .by_block_row
            .iter()
            .flatten()
            .map(|e| (e.block, e.offset))
            .collect();
        let before = targets.len();
        targets.sort_unstable();
        targets.dedup();
        assert_eq!(targets.len(), before);
    }

    #[test]
    fn refresh_matches_dense_reconstruction() {
        let mesh = build_box_mesh(4, 4, 4, [1.0; 3]).unwrap();
        let ldu = random_ldu(&mesh, 42);
        let (mut m, map) = build_block_map(&ldu, &quarter_ranges(64, 4)).unwrap();
        refresh_values(&ldu, &map, &mut m).unwrap();
        assert_eq!(ldu.to_dense(), m.to_dense());
    }

    #[test]
    fn second_refresh_overwrites_first() {
        let mesh = build_box_mesh(3, 2, 2, [1.0; 3]).unwrap();
        let a = random_ldu(&mesh, 1);
        let b = random_ldu(&mesh, 2);
        let (mut m, map) = build_block_map(&a, &quarter_ranges(12, 2)).unwrap();
        refresh_values(&a, &map, &mut m).unwrap();
        refresh_values(&b, &map, &mut m).unwrap();
        assert_eq!(b.to_dense(), m.to_dense());
    }

    #[test]
    fn zero_ldu_gives_zero_blocks() {
        let mesh = build_box_mesh(2, 2, 1, [1.0; 3]).unwrap();
        let ldu = LduMatrix::zeros_like(&mesh);
        let (mut m, map) = build_block_map(&ldu, &quarter_ranges(4, 2)).unwrap();
        refresh_values(&ldu, &map, &mut m).unwrap();
        assert!(m.to_triplets().iter().all(|&(_, _, v)| v == 0.0));
    }

    #[test]
    fn stale_map_is_rejected() {
        let mesh_a = build_box_mesh(4, 2, 1, [1.0; 3]).unwrap();
        let mesh_b = build_box_mesh(2, 2, 2, [1.0; 3]).unwrap();
        let a = random_ldu(&mesh_a, 3);
        let b = random_ldu(&mesh_b, 4);
        let (_, map_a) = build_block_map(&a, &quarter_ranges(8, 2)).unwrap();
        let (mut m_b, _) = build_block_map(&b, &quarter_ranges(8, 2)).unwrap();
        match refresh_values(&a, &map_a, &mut m_b) {
            Err(Error::StaleBlockMap(_)) => {}
            other => panic!("expected stale-map error, got {other:?}"),
        }
    }
}
