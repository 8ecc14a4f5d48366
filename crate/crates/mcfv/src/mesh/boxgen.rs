//! Structured hexahedral box generator, stored in unstructured form.

use super::{BoundaryPatch, UnstructuredMesh, Vec3};
use crate::{Error, Result};

/// Build an `nx x ny x nz` hexahedral box mesh covering `[0, lengths]`.
///
/// Cells are numbered x-fastest; internal faces are emitted in ascending
/// (owner, neighbour) order, boundary faces grouped into the six patches
/// xMin/xMax/yMin/yMax/zMin/zMax.
pub fn build_box_mesh(nx: usize, ny: usize, nz: usize, lengths: Vec3) -> Result<UnstructuredMesh> {
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::InvalidMesh("box dimensions must be >= 1".into()));
    }
    let n_cells = nx
        .checked_mul(ny)
        .and_then(|v| v.checked_mul(nz))
        .ok_or_else(|| Error::CellCountOverflow(format!("{nx}x{ny}x{nz}")))?;
    let n_points = (nx + 1)
        .checked_mul(ny + 1)
        .and_then(|v| v.checked_mul(nz + 1))
        .ok_or_else(|| Error::CellCountOverflow(format!("{nx}x{ny}x{nz} points")))?;

    let (dx, dy, dz) = (
        lengths[0] / nx as f64,
        lengths[1] / ny as f64,
        lengths[2] / nz as f64,
    );
    let pid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let cid = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);

    let mut points = Vec::with_capacity(n_points);
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                points.push([i as f64 * dx, j as f64 * dy, k as f64 * dz]);
            }
        }
    }

    let mut faces = Vec::new();
    let mut owner = Vec::new();
    let mut neighbour = Vec::new();

    // Internal faces: per cell its +x, +y, +z neighbours (ascending ids).
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let c = cid(i, j, k);
                if i + 1 < nx {
                    faces.push([
                        pid(i + 1, j, k),
                        pid(i + 1, j + 1, k),
                        pid(i + 1, j + 1, k + 1),
                        pid(i + 1, j, k + 1),
                    ]);
                    owner.push(c);
                    neighbour.push(cid(i + 1, j, k));
                }
                if j + 1 < ny {
                    faces.push([
                        pid(i, j + 1, k),
                        pid(i, j + 1, k + 1),
                        pid(i + 1, j + 1, k + 1),
                        pid(i + 1, j + 1, k),
                    ]);
                    owner.push(c);
                    neighbour.push(cid(i, j + 1, k));
                }
                if k + 1 < nz {
                    faces.push([
                        pid(i, j, k + 1),
                        pid(i + 1, j, k + 1),
                        pid(i + 1, j + 1, k + 1),
                        pid(i, j + 1, k + 1),
                    ]);
                    owner.push(c);
                    neighbour.push(cid(i, j, k + 1));
                }
            }
        }
    }

    let mut patches = Vec::new();
    let mut patch = |name: &str,
                     faces: &mut Vec<[usize; 4]>,
                     owner: &mut Vec<usize>,
                     quads: Vec<([usize; 4], usize)>| {
        let start = faces.len();
        let len = quads.len();
        for (q, o) in quads {
            faces.push(q);
            owner.push(o);
        }
        patches.push(BoundaryPatch {
            name: name.to_string(),
            start,
            len,
        });
    };

    let mut q = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            q.push((
                [pid(0, j, k), pid(0, j, k + 1), pid(0, j + 1, k + 1), pid(0, j + 1, k)],
                cid(0, j, k),
            ));
        }
    }
    patch("xMin", &mut faces, &mut owner, std::mem::take(&mut q));
    for k in 0..nz {
        for j in 0..ny {
            q.push((
                [
                    pid(nx, j, k),
                    pid(nx, j + 1, k),
                    pid(nx, j + 1, k + 1),
                    pid(nx, j, k + 1),
                ],
                cid(nx - 1, j, k),
            ));
        }
    }
    patch("xMax", &mut faces, &mut owner, std::mem::take(&mut q));
    for k in 0..nz {
        for i in 0..nx {
            q.push((
                [pid(i, 0, k), pid(i + 1, 0, k), pid(i + 1, 0, k + 1), pid(i, 0, k + 1)],
                cid(i, 0, k),
            ));
        }
    }
    patch("yMin", &mut faces, &mut owner, std::mem::take(&mut q));
    for k in 0..nz {
        for i in 0..nx {
            q.push((
                [
                    pid(i, ny, k),
                    pid(i, ny, k + 1),
                    pid(i + 1, ny, k + 1),
                    pid(i + 1, ny, k),
                ],
                cid(i, ny - 1, k),
            ));
        }
    }
    patch("yMax", &mut faces, &mut owner, std::mem::take(&mut q));
    for j in 0..ny {
        for i in 0..nx {
            q.push((
                [pid(i, j, 0), pid(i, j + 1, 0), pid(i + 1, j + 1, 0), pid(i + 1, j, 0)],
                cid(i, j, 0),
            ));
        }
    }
    patch("zMin", &mut faces, &mut owner, std::mem::take(&mut q));
    for j in 0..ny {
        for i in 0..nx {
            q.push((
                [
                    pid(i, j, nz),
                    pid(i + 1, j, nz),
                    pid(i + 1, j + 1, nz),
                    pid(i, j + 1, nz),
                ],
                cid(i, j, nz - 1),
            ));
        }
    }
    patch("zMax", &mut faces, &mut owner, std::mem::take(&mut q));

    Ok(UnstructuredMesh {
        n_cells,
        points,
        faces,
        owner,
        neighbour,
        patches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let m = build_box_mesh(1, 1, 1, [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(m.n_cells, 1);
        assert_eq!(m.n_internal_faces(), 0);
        assert_eq!(m.n_boundary_faces(), 6);
        m.validate().unwrap();
    }

    #[test]
    fn two_cells_share_one_face() {
        let m = build_box_mesh(2, 1, 1, [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(m.n_cells, 2);
        assert_eq!(m.n_internal_faces(), 1);
        assert_eq!(m.owner[0], 0);
        assert_eq!(m.neighbour[0], 1);
        m.validate().unwrap();
    }

    #[test]
    fn internal_face_count_formula() {
        // 3 n^2 (n-1) internal faces on an n^3 box, checked by brute-force
        // enumeration of axis-neighbour cell pairs.
        for n in [2usize, 3, 4] {
            let m = build_box_mesh(n, n, n, [1.0, 1.0, 1.0]).unwrap();
            let mut brute = 0;
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        brute += usize::from(i + 1 < n) + usize::from(j + 1 < n) + usize::from(k + 1 < n);
                    }
                }
            }
            assert_eq!(m.n_internal_faces(), brute);
            assert_eq!(m.n_internal_faces(), 3 * n * n * (n - 1));
        }
        assert_eq!(
            build_box_mesh(4, 4, 4, [1.0; 3]).unwrap().n_internal_faces(),
            144
        );
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(build_box_mesh(0, 1, 1, [1.0; 3]).is_err());
        assert!(build_box_mesh(1 << 40, 1 << 40, 1 << 40, [1.0; 3]).is_err());
    }

    #[test]
    fn internal_faces_sorted_by_owner_neighbour() {
        let m = build_box_mesh(3, 3, 3, [1.0; 3]).unwrap();
        let pairs: Vec<_> = m.owner[..m.n_internal_faces()]
            .iter()
            .zip(&m.neighbour)
            .collect();
        let mut sorted = pairs.clone();
        sorted.sort();
        assert_eq!(pairs, sorted);
    }
}
