//! Green-Gauss cell gradients.

use super::field::{patch_of_face, BoundaryCondition, ScalarField};
use super::schedule::FaceSchedule;
use crate::mesh::{MeshGeometry, UnstructuredMesh, Vec3};
use crate::pool::{run_workers, split_ranges_mut, SharedSliceMut};
use crate::Result;

/// (1/V)·Σ_f Ψ_f·S_f with linear (0.5/0.5) face interpolation. Boundary
/// faces use the fixed value or, for zero-gradient patches, the owner cell
/// value. Exact for linear fields on interior cells of uniform box meshes.
/// Per-cell gather in ascending face order keeps the result independent of
/// the thread count.
pub fn compute_gradient(
    mesh: &UnstructuredMesh,
    geom: &MeshGeometry,
    field: &ScalarField,
    schedule: &FaceSchedule,
) -> Result<Vec<Vec3>> {
    field.validate(mesh)?;
    let ni = mesh.n_internal_faces();
    let psi = &field.values;
    let mut grad = vec![[0.0f64; 3]; mesh.n_cells];
    let parts: Vec<_> = split_ranges_mut(&mut grad, &schedule.ranges)
        .into_iter()
        .map(SharedSliceMut::new)
        .collect();
    run_workers(schedule.t(), |w| {
        let i = w.id;
        let range = schedule.ranges[i].clone();
        for c in range.clone() {
            let mut acc = [0.0f64; 3];
            for &f in &schedule.cell_faces[c] {
                let (psi_f, sign) = if f < ni {
                    let v = 0.5 * (psi[mesh.owner[f]] + psi[mesh.neighbour[f]]);
                    (v, if mesh.owner[f] == c { 1.0 } else { -1.0 })
                } else {
                    let patch = patch_of_face(mesh, f).expect("boundary face outside patches");
                    let v = match field.bcs[patch] {
                        BoundaryCondition::FixedValue(b) => b,
                        BoundaryCondition::ZeroGradient => psi[c],
                    };
                    (v, 1.0)
                };
                let s = geom.face_areas[f];
                for k in 0..3 {
                    acc[k] += psi_f * sign * s[k];
                }
            }
            let inv_v = 1.0 / geom.cell_volumes[c];
            unsafe {
                *parts[i].get_mut(c - range.start) = [acc[0] * inv_v, acc[1] * inv_v, acc[2] * inv_v];
            }
        }
    });
    Ok(grad)
}
