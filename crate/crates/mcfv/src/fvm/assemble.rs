//! Thread-parallel FV operator assembly into LDU form.
//!
//! Both operators share the two-phase engine: phase 1 evaluates per-face
//! coefficients in parallel (each face written by exactly one thread per
//! the schedule), phase 2 gathers diagonals and right-hand sides per cell
//! in ascending face order, so the assembled system is bitwise identical
//! for every thread count.

use super::field::{patch_of_face, BoundaryCondition};
use super::schedule::FaceSchedule;
use crate::mesh::{dot, sub, MeshGeometry, UnstructuredMesh};
use crate::pool::{run_workers, split_ranges_mut, SharedSliceMut};
use crate::sparse::LduMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivScheme {
    Upwind,
    Linear,
}

/// Per internal face: (lower, upper, diag-owner, diag-neighbour) increments.
type InternalCoeffs = [f64; 4];
/// Per boundary face: (diag-owner, rhs-owner) increments.
type BoundaryCoeffs = (f64, f64);

fn run_assembly<FI, FB>(
    mesh: &UnstructuredMesh,
    schedule: &FaceSchedule,
    internal: FI,
    boundary: FB,
) -> (LduMatrix, Vec<f64>)
where
    FI: Fn(usize) -> InternalCoeffs + Sync,
    FB: Fn(usize) -> BoundaryCoeffs + Sync,
{
    let ni = mesh.n_internal_faces();
    let nb = mesh.n_boundary_faces();
    let t = schedule.t();

    let mut mat = LduMatrix::zeros_like(mesh);
    let mut rhs = vec![0.0; mesh.n_cells];
    let mut dov = vec![0.0; ni];
    let mut dnv = vec![0.0; ni];
    let mut bdiag = vec![0.0; nb];
    let mut brhs = vec![0.0; nb];

    {
        let lower = SharedSliceMut::new(&mut mat.lower);
        let upper = SharedSliceMut::new(&mut mat.upper);
        let dov_s = SharedSliceMut::new(&mut dov);
        let dnv_s = SharedSliceMut::new(&mut dnv);
        let bdiag_s = SharedSliceMut::new(&mut bdiag);
        let brhs_s = SharedSliceMut::new(&mut brhs);
        let diag_parts: Vec<_> = split_ranges_mut(&mut mat.diag, &schedule.ranges)
            .into_iter()
            .map(SharedSliceMut::new)
            .collect();
        let rhs_parts: Vec<_> = split_ranges_mut(&mut rhs, &schedule.ranges)
            .into_iter()
            .map(SharedSliceMut::new)
            .collect();

        run_workers(t, |w| {
            let i = w.id;
            // Phase 1: face coefficients. Slot-disjoint by schedule.
            for &f in schedule.intra_faces[i].iter().chain(&schedule.inter_faces[i]) {
                let [lo, up, d_o, d_n] = internal(f);
                unsafe {
                    *lower.get_mut(f) = lo;
                    *upper.get_mut(f) = up;
                    *dov_s.get_mut(f) = d_o;
                    *dnv_s.get_mut(f) = d_n;
                }
            }
            for &f in &schedule.boundary_faces[i] {
                let (d, r) = boundary(f);
                unsafe {
                    *bdiag_s.get_mut(f - ni) = d;
                    *brhs_s.get_mut(f - ni) = r;
                }
            }
            w.sync();
            // Phase 2: per-cell gather in ascending face order.
            let range = schedule.ranges[i].clone();
            for c in range.clone() {
                let mut d_acc = 0.0;
                let mut r_acc = 0.0;
                for &f in &schedule.cell_faces[c] {
                    if f < ni {
                        d_acc += if mesh.owner[f] == c {
                            unsafe { *dov_s.get(f) }
                        } else {
                            unsafe { *dnv_s.get(f) }
                        };
                    } else {
                        d_acc += unsafe { *bdiag_s.get(f - ni) };
                        r_acc += unsafe { *brhs_s.get(f - ni) };
                    }
                }
                let local = c - range.start;
                unsafe {
                    *diag_parts[i].get_mut(local) = d_acc;
                    *rhs_parts[i].get_mut(local) = r_acc;
                }
            }
        });
    }
    (mat, rhs)
}

/// Two-point-flux Laplacian of -∇·Γ∇: face coefficient c_f = Γ_f·|S_f|/d
/// enters both diagonals as +c_f and the off-diagonals as -c_f, making the
/// operator symmetric positive semi-definite. Fixed-value boundaries add
/// their coefficient to the owner diagonal and c_f·Ψ_b to the RHS;
/// zero-gradient boundaries contribute nothing.
pub fn assemble_laplacian(
    mesh: &UnstructuredMesh,
    geom: &MeshGeometry,
    diffusivity: &[f64],
    bcs: &[BoundaryCondition],
    schedule: &FaceSchedule,
) -> Result<(LduMatrix, Vec<f64>)> {
    if diffusivity.len() != mesh.n_faces() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_faces(),
            got: diffusivity.len(),
        });
    }
    if bcs.len() != mesh.patches.len() {
        return Err(Error::DimensionMismatch {
            expected: mesh.patches.len(),
            got: bcs.len(),
        });
    }
    if let Some(f) = diffusivity.iter().position(|g| !(*g > 0.0)) {
        return Err(Error::Config(format!(
            "diffusivity must be positive and finite, face {f}"
        )));
    }
    let ni = mesh.n_internal_faces();
    for f in 0..ni {
        let d = sub(
            geom.cell_centroids[mesh.neighbour[f]],
            geom.cell_centroids[mesh.owner[f]],
        );
        if dot(d, d) == 0.0 {
            return Err(Error::InvalidMesh(format!(
                "coincident cell centroids across face {f}"
            )));
        }
    }

    let coeff_internal = |f: usize| {
        let d = sub(
            geom.cell_centroids[mesh.neighbour[f]],
            geom.cell_centroids[mesh.owner[f]],
        );
        let c = diffusivity[f] * geom.face_area_mag(f) / dot(d, d).sqrt();
        [-c, -c, c, c]
    };
    let coeff_boundary = |f: usize| {
        let patch = patch_of_face(mesh, f).expect("boundary face outside patches");
        match bcs[patch] {
            BoundaryCondition::ZeroGradient => (0.0, 0.0),
            BoundaryCondition::FixedValue(v) => {
                let d = sub(geom.face_centroids[f], geom.cell_centroids[mesh.owner[f]]);
                let c = diffusivity[f] * geom.face_area_mag(f) / dot(d, d).sqrt();
                (c, c * v)
            }
        }
    };
    Ok(run_assembly(mesh, schedule, coeff_internal, coeff_boundary))
}

/// FV convection matrix for ∇·(φΨ) with the given face fluxes φ_f
/// (positive owner→neighbour). Upwind takes the upstream cell value by
/// flux sign; linear interpolates 0.5/0.5. Row sums equal the cell's net
/// flux imbalance. Fixed-value boundaries move the known flux to the RHS;
/// zero-gradient boundaries add the flux to the owner diagonal.
pub fn assemble_divergence(
    mesh: &UnstructuredMesh,
    geom: &MeshGeometry,
    face_flux: &[f64],
    scheme: DivScheme,
    bcs: &[BoundaryCondition],
    schedule: &FaceSchedule,
) -> Result<(LduMatrix, Vec<f64>)> {
    if face_flux.len() != mesh.n_faces() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_faces(),
            got: face_flux.len(),
        });
    }
    if bcs.len() != mesh.patches.len() {
        return Err(Error::DimensionMismatch {
            expected: mesh.patches.len(),
            got: bcs.len(),
        });
    }
    if let Some(f) = face_flux.iter().position(|p| !p.is_finite()) {
        return Err(Error::Config(format!("non-finite face flux at face {f}")));
    }
    let _ = geom;

    let coeff_internal = move |f: usize| {
        let phi = face_flux[f];
        match scheme {
            DivScheme::Upwind => [-phi.max(0.0), phi.min(0.0), phi.max(0.0), -phi.min(0.0)],
            DivScheme::Linear => [-0.5 * phi, 0.5 * phi, 0.5 * phi, -0.5 * phi],
        }
    };
    let coeff_boundary = move |f: usize| {
        let patch = patch_of_face(mesh, f).expect("boundary face outside patches");
        let phi = face_flux[f];
        match bcs[patch] {
            BoundaryCondition::ZeroGradient => (phi, 0.0),
            BoundaryCondition::FixedValue(v) => (0.0, -phi * v),
        }
    };
    Ok(run_assembly(mesh, schedule, coeff_internal, coeff_boundary))
}

/// Face fluxes φ_f = u·S_f for a uniform velocity.
pub fn uniform_velocity_flux(geom: &MeshGeometry, velocity: [f64; 3]) -> Vec<f64> {
    geom.face_areas.iter().map(|&s| dot(velocity, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fvm::build_face_schedule;
    use crate::mesh::{build_box_mesh, compute_geometry};

    fn even_ranges(n: usize, t: usize) -> Vec<std::ops::Range<usize>> {
        (0..t).map(|i| (i * n / t)..((i + 1) * n / t)).collect()
    }

    fn zg(mesh: &crate::mesh::UnstructuredMesh) -> Vec<BoundaryCondition> {
        vec![BoundaryCondition::ZeroGradient; mesh.patches.len()]
    }

    #[test]
    fn two_cell_laplacian_hand_value() {
        let mesh = build_box_mesh(2, 1, 1, [1.0; 3]).unwrap();
        let geom = compute_geometry(&mesh).unwrap();
        let s = build_face_schedule(&mesh, &[0..2]).unwrap();
        let gamma = vec![1.0; mesh.n_faces()];
        let (m, rhs) = assemble_laplacian(&mesh, &geom, &gamma, &zg(&mesh), &s).unwrap();
        // c = 1.0 * area(1.0) / dist(0.5) = 2.0
        assert_eq!(m.to_dense(), vec![vec![2.0, -2.0], vec![-2.0, 2.0]]);
        assert_eq!(rhs, vec![0.0, 0.0]);
    }

    #[test]
    fn laplacian_symmetric_for_uniform_gamma() {
        let mesh = build_box_mesh(4, 3, 2, [1.0, 2.0, 0.5]).unwrap();
        let geom = compute_geometry(&mesh).unwrap();
        let s = build_face_schedule(&mesh, &even_ranges(24, 3)).unwrap();
        let gamma = vec![0.7; mesh.n_faces()];
        let (m, _) = assemble_laplacian(&mesh, &geom, &gamma, &zg(&mesh), &s).unwrap();
        assert!(m.is_symmetric(0.0));
    }

    #[test]
    fn laplacian_fixed_value_boundary_row() {
        let mesh = build_box_mesh(2, 1, 1, [1.0; 3]).unwrap();
        let geom = compute_geometry(&mesh).unwrap();
        let s = build_face_schedule(&mesh, &[0..2]).unwrap();
        let gamma = vec![1.0; mesh.n_faces()];
        let mut bcs = zg(&mesh);
        // xMin patch is first; fixed value 10 at distance 0.25 with area 1.
        bcs[0] = BoundaryCondition::FixedValue(10.0);
        let (m, rhs) = assemble_laplacian(&mesh, &geom, &gamma, &bcs, &s).unwrap();
        let cb = 1.0 / 0.25;
        assert_eq!(m.diag, vec![2.0 + cb, 2.0]);
        assert_eq!(rhs, vec![cb * 10.0, 0.0]);
    }

    #[test]
    fn assembly_bitwise_identical_across_thread_counts() {
        let mesh = build_box_mesh(8, 8, 8, [1.0; 3]).unwrap();
        let geom = compute_geometry(&mesh).unwrap();
        let gamma: Vec<f64> = (0..mesh.n_faces()).map(|f| 1.0 + (f % 7) as f64 * 0.1).collect();
        let flux = uniform_velocity_flux(&geom, [1.0, -0.5, 0.25]);
        let mut bcs = zg(&mesh);
        bcs[2] = BoundaryCondition::FixedValue(3.5);
        let mut reference: Option<(LduMatrix, Vec<f64>, LduMatrix, Vec<f64>)> = None;
        for t in [1usize, 2, 4, 8] {
            let s = build_face_schedule(&mesh, &even_ranges(512, t)).unwrap();
            let (lm, lr) = assemble_laplacian(&mesh, &geom, &gamma, &bcs, &s).unwrap();
            let (dm, dr) =
                assemble_divergence(&mesh, &geom, &flux, DivScheme::Upwind, &bcs, &s).unwrap();
            match &reference {
                None => reference = Some((lm, lr, dm, dr)),
                Some((rlm, rlr, rdm, rdr)) => {
                    assert_eq!(lm.diag, rlm.diag, "t={t}");
                    assert_eq!(lm.lower, rlm.lower, "t={t}");
                    assert_eq!(lm.upper, rlm.upper, "t={t}");
                    assert_eq!(&lr, rlr, "t={t}");
                    assert_eq!(dm.diag, rdm.diag, "t={t}");
                    assert_eq!(dm.lower, rdm.lower, "t={t}");
                    assert_eq!(dm.upper, rdm.upper, "t={t}");
                    assert_eq!(&dr, rdr, "t={t}");
                }
            }
        }
    }

    #[test]
    fn zero_flux_gives_zero_matrix() {
        let mesh = build_box_mesh(3, 3, 3, [1.0; 3]).unwrap();
        let geom = compute_geometry(&mesh).unwrap();
        let s = build_face_schedule(&mesh, &even_ranges(27, 2)).unwrap();
        let flux = vec![0.0; mesh.n_faces()];
        let (m, rhs) =
            assemble_divergence(&mesh, &geom, &flux, DivScheme::Upwind, &zg(&mesh), &s).unwrap();
        assert!(m.diag.iter().all(|&v| v == 0.0));
        assert!(m.lower.iter().all(|&v| v == 0.0));
        assert!(m.upper.iter().all(|&v| v == 0.0));
        assert!(rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_cell_upwind_hand_value() {
        let mesh = build_box_mesh(2, 1, 1, [1.0; 3]).unwrap();
        let geom = compute_geometry(&mesh).unwrap();
        let s = build_face_schedule(&mesh, &[0..2]).unwrap();
        let flux = uniform_velocity_flux(&geom, [1.0, 0.0, 0.0]);
        let (m, _) =
            assemble_divergence(&mesh, &geom, &flux, DivScheme::Upwind, &zg(&mesh), &s).unwrap();
        // Internal flux = 1.0, upwind cell is 0; boundary xMin flux -1 on
        // cell 0, xMax flux +1 on cell 1. Downwind row keeps the upstream
        // value coefficient -1.
        assert_eq!(m.to_dense(), vec![vec![0.0, 0.0], vec![-1.0, 1.0]]);
    }

    #[test]
    fn divergence_free_flux_row_sums_vanish() {
        let mesh = build_box_mesh(4, 4, 4, [1.0, 1.5, 0.75]).unwrap();
        let geom = compute_geometry(&mesh).unwrap();
        let s = build_face_schedule(&mesh, &even_ranges(64, 4)).unwrap();
        let flux = uniform_velocity_flux(&geom, [1.0, 2.0, 3.0]);
        let max_flux = flux.iter().fold(0.0f64, |a, &p| a.max(p.abs()));
        for scheme in [DivScheme::Upwind, DivScheme::Linear] {
            let (m, _) =
                assemble_divergence(&mesh, &geom, &flux, scheme, &zg(&mesh), &s).unwrap();
            let dense = m.to_dense();
            for row in &dense {
                let sum: f64 = row.iter().sum();
                assert!(sum.abs() <= 1e-13 * max_flux, "row sum {sum}");
            }
        }
    }
}
