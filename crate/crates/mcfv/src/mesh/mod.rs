//! Unstructured hexahedral mesh in face-addressed (owner/neighbour) form.
//!
//! Faces are quads. Internal faces come first and satisfy
//! `owner[f] < neighbour[f]`; boundary faces follow, grouped into named
//! contiguous patches. Meshes are immutable after construction.

mod boxgen;
mod geometry;
mod graph;
mod refine;

pub use boxgen::build_box_mesh;
pub use geometry::{closure_residual, compute_geometry, MeshGeometry};
pub use graph::{mesh_to_graph, CellGraph};
pub use refine::{refine_uniform, refined_cell_count};

use crate::{Error, Result};

pub type Vec3 = [f64; 3];

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPatch {
    pub name: String,
    /// First face of the patch (absolute face index).
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnstructuredMesh {
    pub n_cells: usize,
    pub points: Vec<Vec3>,
    /// Quad faces; point order gives an area vector oriented owner -> neighbour
    /// (outward from the owner on boundary faces).
    pub faces: Vec<[usize; 4]>,
    /// Owning cell per face.
    pub owner: Vec<usize>,
    /// Neighbour cell per internal face; internal faces are `0..neighbour.len()`.
    pub neighbour: Vec<usize>,
    pub patches: Vec<BoundaryPatch>,
}

impl UnstructuredMesh {
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_internal_faces(&self) -> usize {
        self.neighbour.len()
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.faces.len() - self.neighbour.len()
    }

    pub fn is_internal(&self, face: usize) -> bool {
        face < self.neighbour.len()
    }

    /// Faces of each cell, ascending face index.
    pub fn cell_faces(&self) -> Vec<Vec<usize>> {
        let mut cf = vec![Vec::new(); self.n_cells];
        for f in 0..self.faces.len() {
            cf[self.owner[f]].push(f);
            if f < self.neighbour.len() {
                cf[self.neighbour[f]].push(f);
            }
        }
        cf
    }

    /// Structural integrity check of all mesh invariants.
    pub fn validate(&self) -> Result<()> {
        let nf = self.faces.len();
        let ni = self.neighbour.len();
        if self.owner.len() != nf {
            return Err(Error::InvalidMesh(format!(
                "owner length {} != face count {nf}",
                self.owner.len()
            )));
        }
        if ni > nf {
            return Err(Error::InvalidMesh("more neighbours than faces".into()));
        }
        for f in 0..nf {
            if self.owner[f] >= self.n_cells {
                return Err(Error::InvalidMesh(format!("face {f}: owner out of range")));
            }
            for &p in &self.faces[f] {
                if p >= self.points.len() {
                    return Err(Error::InvalidMesh(format!("face {f}: point out of range")));
                }
            }
        }
        for f in 0..ni {
            if self.neighbour[f] >= self.n_cells {
                return Err(Error::InvalidMesh(format!(
                    "face {f}: neighbour out of range"
                )));
            }
            if self.owner[f] >= self.neighbour[f] {
                return Err(Error::InvalidMesh(format!(
                    "face {f}: owner {} !< neighbour {}",
                    self.owner[f], self.neighbour[f]
                )));
            }
        }
        // Patch ranges must tile the boundary face range exactly.
        let mut next = ni;
        for p in &self.patches {
            if p.start != next {
                return Err(Error::InvalidMesh(format!(
                    "patch {:?} starts at {}, expected {next}",
                    p.name, p.start
                )));
            }
            next += p.len;
        }
        if next != nf {
            return Err(Error::InvalidMesh(format!(
                "patches cover up to {next}, expected {nf}"
            )));
        }
        // Every cell referenced, adjacency connected.
        let mut touched = vec![false; self.n_cells];
        for f in 0..nf {
            touched[self.owner[f]] = true;
        }
        for f in 0..ni {
            touched[self.neighbour[f]] = true;
        }
        if let Some(c) = touched.iter().position(|&t| !t) {
            return Err(Error::InvalidMesh(format!("cell {c} has no faces")));
        }
        if self.n_cells > 0 && !mesh_to_graph(self).is_connected() {
            return Err(Error::InvalidMesh("cell graph is disconnected".into()));
        }
        Ok(())
    }

    /// Deterministic canonical form: faces keyed by sorted point ids, internal
    /// faces ordered by (owner, neighbour, key), boundary faces by
    /// (patch, owner, key). Two meshes describing the same cells, points and
    /// patches compare equal in canonical form regardless of face order.
    pub fn canonical_form(&self) -> UnstructuredMesh {
        let ni = self.neighbour.len();
        let key = |f: usize| {
            let mut k = self.faces[f];
            k.sort_unstable();
            k
        };
        let mut internal: Vec<usize> = (0..ni).collect();
        internal.sort_by_key(|&f| (self.owner[f], self.neighbour[f], key(f)));
        let mut faces = Vec::with_capacity(self.faces.len());
        let mut owner = Vec::with_capacity(self.faces.len());
        let mut neighbour = Vec::with_capacity(ni);
        for &f in &internal {
            faces.push(canonical_quad(self.faces[f]));
            owner.push(self.owner[f]);
            neighbour.push(self.neighbour[f]);
        }
        let mut patches = Vec::with_capacity(self.patches.len());
        for p in &self.patches {
            let mut bf: Vec<usize> = (p.start..p.start + p.len).collect();
            bf.sort_by_key(|&f| (self.owner[f], key(f)));
            let start = faces.len();
            for &f in &bf {
                faces.push(canonical_quad(self.faces[f]));
                owner.push(self.owner[f]);
            }
            patches.push(BoundaryPatch {
                name: p.name.clone(),
                start,
                len: p.len,
            });
        }
        UnstructuredMesh {
            n_cells: self.n_cells,
            points: self.points.clone(),
            faces,
            owner,
            neighbour,
            patches,
        }
    }
}

/// Rotate the quad so the smallest point id comes first, preserving the
/// cyclic orientation (and hence the area-vector direction).
fn canonical_quad(q: [usize; 4]) -> [usize; 4] {
    let lo = (0..4).min_by_key(|&i| q[i]).unwrap();
    [q[lo], q[(lo + 1) % 4], q[(lo + 2) % 4], q[(lo + 3) % 4]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_mesh_validates() {
        let m = build_box_mesh(3, 2, 2, [1.0, 1.0, 1.0]).unwrap();
        m.validate().unwrap();
        assert_eq!(m.n_cells, 12);
    }

    #[test]
    fn canonical_quad_preserves_cycle() {
        assert_eq!(canonical_quad([7, 3, 9, 5]), [3, 9, 5, 7]);
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let m = build_box_mesh(2, 2, 2, [1.0, 1.0, 1.0]).unwrap();
        let c = m.canonical_form();
        assert_eq!(c, c.canonical_form());
        c.validate().unwrap();
    }
}
