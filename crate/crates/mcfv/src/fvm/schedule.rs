//! Face update schedule for conflict-free thread-parallel assembly.
//!
//! Assembly runs in two barrier-separated phases. Phase 1 writes per-face
//! coefficients: every face is assigned to exactly one thread (intra faces
//! to their region's thread, inter and boundary faces to the owner cell's
//! thread), so face slots are written once with no contention. Phase 2
//! gathers each cell's diagonal and right-hand side from its faces in
//! ascending face order; cells are written only by the thread owning their
//! row range. The fixed gather order makes the result bitwise identical
//! for any thread count.

use crate::mesh::UnstructuredMesh;
use crate::{Error, Result};
use std::ops::Range;

#[derive(Debug, Clone)]
pub struct FaceSchedule {
    /// Contiguous cell range per thread.
    pub ranges: Vec<Range<usize>>,
    pub thread_of_cell: Vec<usize>,
    /// Internal faces with both cells in thread i's region.
    pub intra_faces: Vec<Vec<usize>>,
    /// Internal faces crossing regions, assigned to the owner's thread.
    pub inter_faces: Vec<Vec<usize>>,
    /// Boundary faces, assigned to the owner's thread.
    pub boundary_faces: Vec<Vec<usize>>,
    /// Ascending face ids per cell (internal and boundary).
    pub cell_faces: Vec<Vec<usize>>,
}

impl FaceSchedule {
    pub fn t(&self) -> usize {
        self.ranges.len()
    }

    pub fn n_intra(&self) -> usize {
        self.intra_faces.iter().map(Vec::len).sum()
    }

    pub fn n_inter(&self) -> usize {
        self.inter_faces.iter().map(Vec::len).sum()
    }

    /// Fraction of internal faces that cross thread regions.
    pub fn inter_fraction(&self) -> f64 {
        let total = self.n_intra() + self.n_inter();
        if total == 0 {
            0.0
        } else {
            self.n_inter() as f64 / total as f64
        }
    }
}

pub fn build_face_schedule(mesh: &UnstructuredMesh, ranges: &[Range<usize>]) -> Result<FaceSchedule> {
    let t = ranges.len();
    let mut thread_of_cell = vec![usize::MAX; mesh.n_cells];
    for (i, r) in ranges.iter().enumerate() {
        for c in r.clone() {
            if c >= mesh.n_cells || thread_of_cell[c] != usize::MAX {
                return Err(Error::Partition(format!(
                    "thread ranges must tile 0..{} disjointly",
                    mesh.n_cells
                )));
            }
            thread_of_cell[c] = i;
        }
    }
    if thread_of_cell.contains(&usize::MAX) {
        return Err(Error::Partition("thread ranges leave cells unassigned".into()));
    }

    let mut intra_faces = vec![Vec::new(); t];
    let mut inter_faces = vec![Vec::new(); t];
    let mut boundary_faces = vec![Vec::new(); t];
    let ni = mesh.n_internal_faces();
    for f in 0..ni {
        let to = thread_of_cell[mesh.owner[f]];
        let tn = thread_of_cell[mesh.neighbour[f]];
        if to == tn {
            intra_faces[to].push(f);
        } else {
            inter_faces[to].push(f);
        }
    }
    for f in ni..mesh.n_faces() {
        boundary_faces[thread_of_cell[mesh.owner[f]]].push(f);
    }

    Ok(FaceSchedule {
        ranges: ranges.to_vec(),
        thread_of_cell,
        intra_faces,
        inter_faces,
        boundary_faces,
        cell_faces: mesh.cell_faces(),
    })
}

/// Write-conflict instrumentation for one assembly phase: which thread
/// touched which slot, tagged by phase.
#[derive(Debug, Clone, Default)]
pub struct ConflictReport {
    /// (phase name, slot index, threads that wrote it) for every slot
    /// written by more than one thread within the phase.
    pub conflicts: Vec<(&'static str, usize, Vec<usize>)>,
    pub face_writes: usize,
    pub cell_writes: usize,
}

/// Replay the write pattern of the two assembly phases and count
/// concurrent same-slot writes. Phase 1 targets face slots, phase 2 cell
/// slots; the schedule is conflict-free iff this reports none.
pub fn probe_conflicts(schedule: &FaceSchedule) -> ConflictReport {
    let mut report = ConflictReport::default();
    let t = schedule.t();

    let n_faces = schedule
        .cell_faces
        .iter()
        .flatten()
        .copied()
        .max()
        .map_or(0, |m| m + 1);
    let mut touched: Vec<Vec<usize>> = vec![Vec::new(); n_faces];
    for i in 0..t {
        for &f in schedule.intra_faces[i]
            .iter()
            .chain(&schedule.inter_faces[i])
            .chain(&schedule.boundary_faces[i])
        {
            touched[f].push(i);
            report.face_writes += 1;
        }
    }
    for (f, writers) in touched.iter().enumerate() {
        if writers.len() > 1 {
            report.conflicts.push(("face-coefficients", f, writers.clone()));
        }
    }

    let mut touched: Vec<Vec<usize>> = vec![Vec::new(); schedule.thread_of_cell.len()];
    for (i, r) in schedule.ranges.iter().enumerate() {
        for c in r.clone() {
            touched[c].push(i);
            report.cell_writes += 1;
        }
    }
    for (c, writers) in touched.iter().enumerate() {
        if writers.len() > 1 {
            report.conflicts.push(("cell-gather", c, writers.clone()));
        }
    }
    report
}
