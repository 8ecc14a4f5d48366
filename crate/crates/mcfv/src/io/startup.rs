//! Mesh (de)serialization through the collated format and the two
//! startup paths: reading a fully refined mesh from disk versus reading
//! only the coarse mesh and refining in memory. The latter trades the
//! large input file for arithmetic, so only coarse bytes cross the
//! filesystem; a configured cell budget refuses allocations that cannot
//! fit before anything is built.

use super::collated::{read_all, write_collated, DType};
use crate::mesh::{refine_uniform, refined_cell_count, BoundaryPatch, UnstructuredMesh};
use crate::partition::{two_level_decompose, Partitioner, TwoLevelPartition};
use crate::{Error, Result};
use std::path::Path;

pub fn mesh_to_bytes(mesh: &UnstructuredMesh) -> Vec<u8> {
    let mut out = Vec::new();
    let push_u64 = |out: &mut Vec<u8>, v: u64| out.extend_from_slice(&v.to_le_bytes());
    push_u64(&mut out, mesh.n_cells as u64);
    push_u64(&mut out, mesh.points.len() as u64);
    push_u64(&mut out, mesh.faces.len() as u64);
    push_u64(&mut out, mesh.neighbour.len() as u64);
    push_u64(&mut out, mesh.patches.len() as u64);
    for p in &mesh.points {
        for &x in p {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    for f in &mesh.faces {
        for &p in f {
            push_u64(&mut out, p as u64);
        }
    }
    for &o in &mesh.owner {
        push_u64(&mut out, o as u64);
    }
    for &n in &mesh.neighbour {
        push_u64(&mut out, n as u64);
    }
    for p in &mesh.patches {
        push_u64(&mut out, p.name.len() as u64);
        out.extend_from_slice(p.name.as_bytes());
        push_u64(&mut out, p.start as u64);
        push_u64(&mut out, p.len as u64);
    }
    out
}

pub fn mesh_from_bytes(bytes: &[u8], context: &str) -> Result<UnstructuredMesh> {
    let mut pos = 0usize;
    let bad = |reason: &str| Error::format(context, reason);
    let take_u64 = |pos: &mut usize| -> Result<u64> {
        let end = *pos + 8;
        if end > bytes.len() {
            return Err(Error::format(context, "truncated mesh payload"));
        }
        let v = u64::from_le_bytes(bytes[*pos..end].try_into().unwrap());
        *pos = end;
        Ok(v)
    };
    let n_cells = take_u64(&mut pos)? as usize;
    let n_points = take_u64(&mut pos)? as usize;
    let n_faces = take_u64(&mut pos)? as usize;
    let n_internal = take_u64(&mut pos)? as usize;
    let n_patches = take_u64(&mut pos)? as usize;
    if n_internal > n_faces {
        return Err(bad("internal face count exceeds face count"));
    }
    let need = n_points * 24 + n_faces * 32 + n_faces * 8 + n_internal * 8;
    if pos + need > bytes.len() {
        return Err(bad("truncated mesh payload"));
    }
    let mut points = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let mut p = [0.0f64; 3];
        for x in &mut p {
            *x = f64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
            pos += 8;
        }
        points.push(p);
    }
    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let mut q = [0usize; 4];
        for v in &mut q {
            *v = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap()) as usize;
            pos += 8;
        }
        faces.push(q);
    }
    let mut owner = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        owner.push(take_u64(&mut pos)? as usize);
    }
    let mut neighbour = Vec::with_capacity(n_internal);
    for _ in 0..n_internal {
        neighbour.push(take_u64(&mut pos)? as usize);
    }
    let mut patches = Vec::with_capacity(n_patches);
    for _ in 0..n_patches {
        let name_len = take_u64(&mut pos)? as usize;
        if pos + name_len > bytes.len() {
            return Err(bad("truncated patch name"));
        }
        let name = String::from_utf8(bytes[pos..pos + name_len].to_vec())
            .map_err(|_| bad("patch name not utf-8"))?;
        pos += name_len;
        let start = take_u64(&mut pos)? as usize;
        let len = take_u64(&mut pos)? as usize;
        patches.push(BoundaryPatch { name, start, len });
    }
    if pos != bytes.len() {
        return Err(bad("trailing bytes after mesh payload"));
    }
    let mesh = UnstructuredMesh {
        n_cells,
        points,
        faces,
        owner,
        neighbour,
        patches,
    };
    mesh.validate()?;
    Ok(mesh)
}

pub fn write_mesh_collated(path: &Path, mesh: &UnstructuredMesh) -> Result<()> {
    write_collated(path, "mesh", DType::Bytes, &[mesh_to_bytes(mesh)])
}

pub fn read_mesh_collated(path: &Path) -> Result<UnstructuredMesh> {
    let (header, payloads) = read_all(path)?;
    if header.name != "mesh" || header.rank_count() != 1 {
        return Err(Error::format(
            path.display().to_string(),
            "not a single-rank mesh file",
        ));
    }
    mesh_from_bytes(&payloads[0], &path.display().to_string())
}

#[derive(Debug, Clone)]
pub struct Startup {
    pub mesh: UnstructuredMesh,
    pub partition: TwoLevelPartition,
    /// Bytes read from disk to obtain the mesh.
    pub bytes_read: u64,
}

fn file_len(path: &Path) -> Result<u64> {
    Ok(std::fs::metadata(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?
        .len())
}

/// Baseline path: read the full mesh file, then decompose.
pub fn startup_direct(
    path: &Path,
    n_ranks: usize,
    n_threads: usize,
    partitioner: &dyn Partitioner,
    seed: u64,
) -> Result<Startup> {
    let mesh = read_mesh_collated(path)?;
    let partition = two_level_decompose(&mesh, n_ranks, n_threads, partitioner, seed)?;
    Ok(Startup {
        bytes_read: file_len(path)?,
        mesh,
        partition,
    })
}

/// Refinement-integrated path: read only the coarse mesh, refine in
/// memory, then decompose. Refuses up front if the refined cell count
/// exceeds `cell_budget`.
pub fn startup_with_runtime_refinement(
    coarse_path: &Path,
    levels: u32,
    n_ranks: usize,
    n_threads: usize,
    partitioner: &dyn Partitioner,
    seed: u64,
    cell_budget: u64,
) -> Result<Startup> {
    let coarse = read_mesh_collated(coarse_path)?;
    let cells = refined_cell_count(coarse.n_cells as u64, levels)?;
    if cells > cell_budget {
        return Err(Error::MemoryBudgetExceeded {
            cells,
            budget: cell_budget,
        });
    }
    let mesh = refine_uniform(&coarse, levels)?;
    let partition = two_level_decompose(&mesh, n_ranks, n_threads, partitioner, seed)?;
    Ok(Startup {
        bytes_read: file_len(coarse_path)?,
        mesh,
        partition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_box_mesh;
    use crate::partition::Multilevel;

    #[test]
    fn mesh_round_trip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.dfc");
        let mesh = build_box_mesh(3, 4, 2, [1.0, 0.5, 2.0]).unwrap();
        write_mesh_collated(&path, &mesh).unwrap();
        let back = read_mesh_collated(&path).unwrap();
        assert_eq!(back.n_cells, mesh.n_cells);
        assert_eq!(back.points, mesh.points);
        assert_eq!(back.faces, mesh.faces);
        assert_eq!(back.owner, mesh.owner);
        assert_eq!(back.neighbour, mesh.neighbour);
        assert_eq!(back.patches, mesh.patches);
    }

    #[test]
    fn zero_levels_matches_direct_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.dfc");
        let mesh = build_box_mesh(4, 4, 4, [1.0; 3]).unwrap();
        write_mesh_collated(&path, &mesh).unwrap();
        let direct = startup_direct(&path, 1, 2, &Multilevel, 9).unwrap();
        let refined = startup_with_runtime_refinement(&path, 0, 1, 2, &Multilevel, 9, 1 << 20).unwrap();
        assert_eq!(direct.bytes_read, refined.bytes_read);
        assert_eq!(direct.mesh.canonical_form(), refined.mesh.canonical_form());
        assert_eq!(direct.partition.permutation, refined.partition.permutation);
    }

    #[test]
    fn runtime_refinement_reads_coarse_bytes_only() {
        let dir = tempfile::tempdir().unwrap();
        let coarse_path = dir.path().join("coarse.dfc");
        let full_path = dir.path().join("full.dfc");
        let coarse = build_box_mesh(4, 4, 4, [1.0; 3]).unwrap();
        let full = refine_uniform(&coarse, 2).unwrap();
        write_mesh_collated(&coarse_path, &coarse).unwrap();
        write_mesh_collated(&full_path, &full).unwrap();

        let a = startup_direct(&full_path, 1, 4, &Multilevel, 5).unwrap();
        let b =
            startup_with_runtime_refinement(&coarse_path, 2, 1, 4, &Multilevel, 5, 1 << 20).unwrap();
        assert_eq!(a.mesh.canonical_form(), b.mesh.canonical_form());
        assert_eq!(a.partition.permutation, b.partition.permutation);
        // 8^2 more cells on disk; headers and patch metadata keep the
        // ratio a bit above 1/64.
        let ratio = b.bytes_read as f64 / a.bytes_read as f64;
        assert!(ratio < 0.03, "ratio {ratio}");
    }

    #[test]
    fn budget_refusal_before_allocation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coarse.dfc");
        let coarse = build_box_mesh(2, 2, 2, [1.0; 3]).unwrap();
        write_mesh_collated(&path, &coarse).unwrap();
        match startup_with_runtime_refinement(&path, 3, 1, 1, &Multilevel, 1, 1000) {
            Err(Error::MemoryBudgetExceeded { cells, budget }) => {
                assert_eq!(cells, 8 * 8u64.pow(3));
                assert_eq!(budget, 1000);
            }
            other => panic!("expected budget refusal, got {other:?}"),
        }
    }

    #[test]
    fn extreme_scale_count_is_arithmetic_only() {
        assert_eq!(
            refined_cell_count(18_874_368, 5).unwrap(),
            618_475_290_624u64
        );
    }
}
