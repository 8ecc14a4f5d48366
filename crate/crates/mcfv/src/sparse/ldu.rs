//! LDU sparse storage: one diagonal array plus lower/upper arrays addressed
//! by internal faces. The native layout assembled by the fvm module.

use crate::mesh::UnstructuredMesh;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LduMatrix {
    pub n_cells: usize,
    pub diag: Vec<f64>,
    /// Coefficient at (row = neighbour, col = owner) per internal face.
    pub lower: Vec<f64>,
    /// Coefficient at (row = owner, col = neighbour) per internal face.
    pub upper: Vec<f64>,
    /// Face addressing (owner < neighbour), shared with the mesh.
    pub owner: Vec<usize>,
    pub neighbour: Vec<usize>,
}

impl LduMatrix {
    /// Zero matrix with the sparsity pattern of `mesh`.
    pub fn zeros_like(mesh: &UnstructuredMesh) -> LduMatrix {
        let ni = mesh.n_internal_faces();
        LduMatrix {
            n_cells: mesh.n_cells,
            diag: vec![0.0; mesh.n_cells],
            lower: vec![0.0; ni],
            upper: vec![0.0; ni],
            owner: mesh.owner[..ni].to_vec(),
            neighbour: mesh.neighbour.clone(),
        }
    }

    pub fn n_internal_faces(&self) -> usize {
        self.lower.len()
    }

    pub fn nnz(&self) -> usize {
        self.n_cells + 2 * self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.diag.len() != self.n_cells {
            return Err(Error::DimensionMismatch {
                expected: self.n_cells,
                got: self.diag.len(),
            });
        }
        if self.lower.len() != self.upper.len() || self.lower.len() != self.owner.len() {
            return Err(Error::DimensionMismatch {
                expected: self.lower.len(),
                got: self.upper.len().max(self.owner.len()),
            });
        }
        for f in 0..self.owner.len() {
            if self.owner[f] >= self.neighbour[f] || self.neighbour[f] >= self.n_cells {
                return Err(Error::InvalidMesh(format!(
                    "face {f}: bad owner/neighbour {}/{}",
                    self.owner[f], self.neighbour[f]
                )));
            }
        }
        Ok(())
    }

    /// y = A x using face addressing directly (sequential reference path).
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cells {
            return Err(Error::DimensionMismatch {
                expected: self.n_cells,
                got: x.len(),
            });
        }
        let mut y: Vec<f64> = (0..self.n_cells).map(|c| self.diag[c] * x[c]).collect();
        for f in 0..self.lower.len() {
            let (o, n) = (self.owner[f], self.neighbour[f]);
            y[o] += self.upper[f] * x[n];
            y[n] += self.lower[f] * x[o];
        }
        Ok(y)
    }

    /// All nonzeros as (row, col, value), diagonal first, then per-face
    /// upper/lower pairs.
    pub fn to_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for c in 0..self.n_cells {
            t.push((c, c, self.diag[c]));
        }
        for f in 0..self.lower.len() {
            t.push((self.owner[f], self.neighbour[f], self.upper[f]));
            t.push((self.neighbour[f], self.owner[f], self.lower[f]));
        }
        t
    }

    /// Dense reconstruction; intended for small oracle checks only.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cells]; self.n_cells];
        for (r, c, v) in self.to_triplets() {
            d[r][c] += v;
        }
        d
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .all(|(l, u)| (l - u).abs() <= tol * (l.abs() + u.abs()).max(1e-300))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_box_mesh;

    #[test]
    fn matvec_matches_dense() {
        let mesh = build_box_mesh(3, 2, 1, [1.0; 3]).unwrap();
        let mut a = LduMatrix::zeros_like(&mesh);
        for (i, d) in a.diag.iter_mut().enumerate() {
            *d = 2.0 + i as f64;
        }
        for f in 0..a.lower.len() {
            a.lower[f] = -(f as f64 + 1.0);
            a.upper[f] = -(f as f64 + 0.5);
        }
        let x: Vec<f64> = (0..a.n_cells).map(|i| (i as f64).sin() + 1.0).collect();
        let y = a.matvec(&x).unwrap();
        let d = a.to_dense();
        for r in 0..a.n_cells {
            let yr: f64 = (0..a.n_cells).map(|c| d[r][c] * x[c]).sum();
            assert!((y[r] - yr).abs() <= 1e-13 * yr.abs().max(1.0));
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mesh = build_box_mesh(2, 1, 1, [1.0; 3]).unwrap();
        let a = LduMatrix::zeros_like(&mesh);
        assert!(a.matvec(&[1.0]).is_err());
    }
}
