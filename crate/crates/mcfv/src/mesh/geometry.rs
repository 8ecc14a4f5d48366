//! Finite-volume mesh geometry: face area vectors, centroids, cell volumes.

use super::{cross, dot, sub, UnstructuredMesh, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct MeshGeometry {
    pub cell_volumes: Vec<f64>,
    /// Oriented owner -> neighbour (outward from owner on the boundary).
    pub face_areas: Vec<Vec3>,
    pub cell_centroids: Vec<Vec3>,
    pub face_centroids: Vec<Vec3>,
}

impl MeshGeometry {
    pub fn face_area_mag(&self, f: usize) -> f64 {
        super::norm(self.face_areas[f])
    }
}

/// Compute volumes, area vectors and centroids.
///
/// Faces are decomposed into a triangle fan around the quad mean point, so
/// mildly non-planar quads from perturbed meshes stay exact: the per-cell
/// sum of outward area vectors closes to roundoff and volumes computed from
/// signed tetrahedra are consistent between the two cells of a face.
pub fn compute_geometry(mesh: &UnstructuredMesh) -> Result<MeshGeometry> {
    let nf = mesh.faces.len();
    let mut face_areas = vec![[0.0; 3]; nf];
    let mut face_centroids = vec![[0.0; 3]; nf];

    for f in 0..nf {
        let q: Vec<Vec3> = mesh.faces[f].iter().map(|&p| mesh.points[p]).collect();
        let m = [
            (q[0][0] + q[1][0] + q[2][0] + q[3][0]) * 0.25,
            (q[0][1] + q[1][1] + q[2][1] + q[3][1]) * 0.25,
            (q[0][2] + q[1][2] + q[2][2] + q[3][2]) * 0.25,
        ];
        let mut area = [0.0; 3];
        let mut ctr = [0.0; 3];
        let mut area_mag = 0.0;
        for i in 0..4 {
            let a = q[i];
            let b = q[(i + 1) % 4];
            let n = cross(sub(a, m), sub(b, m));
            let tri = [n[0] * 0.5, n[1] * 0.5, n[2] * 0.5];
            let tmag = super::norm(tri);
            let tc = [
                (a[0] + b[0] + m[0]) / 3.0,
                (a[1] + b[1] + m[1]) / 3.0,
                (a[2] + b[2] + m[2]) / 3.0,
            ];
            for d in 0..3 {
                area[d] += tri[d];
                ctr[d] += tc[d] * tmag;
            }
            area_mag += tmag;
        }
        face_areas[f] = area;
        face_centroids[f] = if area_mag > 0.0 {
            [ctr[0] / area_mag, ctr[1] / area_mag, ctr[2] / area_mag]
        } else {
            m
        };
    }

    // Signed tetrahedra with apex at the origin: exact for any closed
    // polyhedron with the triangulation fixed above.
    let mut cell_volumes = vec![0.0; mesh.n_cells];
    let mut cell_moments = vec![[0.0; 3]; mesh.n_cells];
    let mut add_cell = |cell: usize, q: &[Vec3; 4], m: Vec3, sign: f64| {
        for i in 0..4 {
            let a = q[i];
            let b = q[(i + 1) % 4];
            let v = sign * dot(a, cross(b, m)) / 6.0;
            cell_volumes[cell] += v;
            for d in 0..3 {
                cell_moments[cell][d] += v * (a[d] + b[d] + m[d]) * 0.25;
            }
        }
    };
    for f in 0..nf {
        let q = [
            mesh.points[mesh.faces[f][0]],
            mesh.points[mesh.faces[f][1]],
            mesh.points[mesh.faces[f][2]],
            mesh.points[mesh.faces[f][3]],
        ];
        let m = [
            (q[0][0] + q[1][0] + q[2][0] + q[3][0]) * 0.25,
            (q[0][1] + q[1][1] + q[2][1] + q[3][1]) * 0.25,
            (q[0][2] + q[1][2] + q[2][2] + q[3][2]) * 0.25,
        ];
        add_cell(mesh.owner[f], &q, m, 1.0);
        if f < mesh.neighbour.len() {
            add_cell(mesh.neighbour[f], &q, m, -1.0);
        }
    }

    let mut cell_centroids = vec![[0.0; 3]; mesh.n_cells];
    for c in 0..mesh.n_cells {
        let v = cell_volumes[c];
        if !(v > 0.0) {
            return Err(Error::DegenerateCell { cell: c, volume: v });
        }
        for d in 0..3 {
            cell_centroids[c][d] = cell_moments[c][d] / v;
        }
    }

    Ok(MeshGeometry {
        cell_volumes,
        face_areas,
        cell_centroids,
        face_centroids,
    })
}

/// Max per-cell closure residual |sum of outward area vectors|, normalized
/// by the largest face area magnitude. Zero (to roundoff) for valid meshes.
pub fn closure_residual(mesh: &UnstructuredMesh, geom: &MeshGeometry) -> f64 {
    let mut sums = vec![[0.0f64; 3]; mesh.n_cells];
    for f in 0..mesh.faces.len() {
        for d in 0..3 {
            sums[mesh.owner[f]][d] += geom.face_areas[f][d];
            if f < mesh.neighbour.len() {
                sums[mesh.neighbour[f]][d] -= geom.face_areas[f][d];
            }
        }
    }
    let max_area = (0..mesh.faces.len())
        .map(|f| geom.face_area_mag(f))
        .fold(0.0f64, f64::max);
    let worst = sums.iter().map(|s| super::norm(*s)).fold(0.0f64, f64::max);
    if max_area > 0.0 {
        worst / max_area
    } else {
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_box_mesh;
    use rand::{Rng, SeedableRng};

    #[test]
    fn unit_cube_geometry() {
        let m = build_box_mesh(1, 1, 1, [1.0, 1.0, 1.0]).unwrap();
        let g = compute_geometry(&m).unwrap();
        assert!((g.cell_volumes[0] - 1.0).abs() < 1e-14);
        for f in 0..6 {
            assert!((g.face_area_mag(f) - 1.0).abs() < 1e-14);
        }
        assert!((g.cell_centroids[0][0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn eighth_volumes_on_222() {
        let m = build_box_mesh(2, 2, 2, [1.0, 1.0, 1.0]).unwrap();
        let g = compute_geometry(&m).unwrap();
        for &v in &g.cell_volumes {
            assert!((v - 0.125).abs() < 1e-14);
        }
    }

    #[test]
    fn perturbed_mesh_closes() {
        let mut m = build_box_mesh(4, 4, 4, [1.0, 1.0, 1.0]).unwrap();
        let h = 0.25;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for p in &mut m.points {
            // Interior points only, displaced by at most 10% of the spacing.
            if p.iter().all(|&x| x > 1e-9 && x < 1.0 - 1e-9) {
                for x in p.iter_mut() {
                    *x += rng.gen_range(-0.1 * h..0.1 * h);
                }
            }
        }
        let g = compute_geometry(&m).unwrap();
        assert!(closure_residual(&m, &g) <= 1e-12);
        let total: f64 = g.cell_volumes.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cell_reported() {
        let mut m = build_box_mesh(2, 1, 1, [1.0, 1.0, 1.0]).unwrap();
        // Collapse cell 1 onto the shared face plane.
        for p in &mut m.points {
            if p[0] > 0.75 {
                p[0] = 0.5;
            }
        }
        match compute_geometry(&m) {
            Err(crate::Error::DegenerateCell { cell, .. }) => assert_eq!(cell, 1),
            other => panic!("expected degenerate cell, got {other:?}"),
        }
    }
}
