//! Uniform 1-to-8 hexahedral refinement.
//!
//! Every hex is split by edge midpoints, face points and the cell point,
//! all placed at arithmetic means of their defining points. Shared faces
//! split identically on both sides because midpoints are keyed on global
//! point ids, not per cell.

use super::{BoundaryPatch, UnstructuredMesh, Vec3};
use crate::{Error, Result};
use std::collections::HashMap;

/// Cell count after `levels` uniform refinements, without materializing.
pub fn refined_cell_count(n_cells: u64, levels: u32) -> Result<u64> {
    let factor = 8u64
        .checked_pow(levels)
        .ok_or_else(|| Error::CellCountOverflow(format!("8^{levels}")))?;
    n_cells
        .checked_mul(factor)
        .ok_or_else(|| Error::CellCountOverflow(format!("{n_cells} * 8^{levels}")))
}

pub fn refine_uniform(mesh: &UnstructuredMesh, levels: u32) -> Result<UnstructuredMesh> {
    let mut out = mesh.clone();
    for _ in 0..levels {
        out = refine_once(&out)?;
    }
    Ok(out)
}

/// Hex corner ordering: c0..c3 the bottom loop (outward orientation, i.e.
/// area vector pointing away from the cell), c4..c7 the matching top loop.
fn hex_corners(
    mesh: &UnstructuredMesh,
    cell: usize,
    faces: &[usize],
) -> Result<[usize; 8]> {
    if faces.len() != 6 {
        return Err(Error::NonHexCell(cell));
    }
    // Outward-oriented quad of a face as seen from `cell`.
    let outward = |f: usize| -> [usize; 4] {
        let q = mesh.faces[f];
        if mesh.owner[f] == cell {
            q
        } else {
            [q[3], q[2], q[1], q[0]]
        }
    };
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for &f in faces {
        let q = mesh.faces[f];
        for i in 0..4 {
            let (a, b) = (q[i], q[(i + 1) % 4]);
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
    }
    if adj.len() != 8 {
        return Err(Error::NonHexCell(cell));
    }
    let bottom = outward(faces[0]);
    let mut corners = [0usize; 8];
    corners[..4].copy_from_slice(&bottom);
    for i in 0..4 {
        let mut top = None;
        for &w in &adj[&bottom[i]] {
            if !bottom.contains(&w) && top != Some(w) {
                if top.is_some() {
                    return Err(Error::NonHexCell(cell));
                }
                top = Some(w);
            }
        }
        corners[4 + i] = top.ok_or(Error::NonHexCell(cell))?;
    }
    let mut uniq: Vec<usize> = corners.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() != 8 {
        return Err(Error::NonHexCell(cell));
    }
    Ok(corners)
}

fn mean(points: &[Vec3]) -> Vec3 {
    let mut m = [0.0; 3];
    for p in points {
        for d in 0..3 {
            m[d] += p[d];
        }
    }
    for d in 0..3 {
        m[d] /= points.len() as f64;
    }
    m
}

fn sorted4(q: [usize; 4]) -> [usize; 4] {
    let mut s = q;
    s.sort_unstable();
    s
}

/// Local coordinates of the 8 hex corners on the 3x3x3 refinement lattice.
const CORNER_POS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [2, 0, 0],
    [2, 2, 0],
    [0, 2, 0],
    [0, 0, 2],
    [2, 0, 2],
    [2, 2, 2],
    [0, 2, 2],
];

/// The six hex faces as corner index quads.
const HEX_FACES: [[usize; 4]; 6] = [
    [0, 1, 2, 3], // bottom
    [4, 5, 6, 7], // top
    [0, 1, 5, 4],
    [1, 2, 6, 5],
    [2, 3, 7, 6],
    [3, 0, 4, 7],
];

fn refine_once(mesh: &UnstructuredMesh) -> Result<UnstructuredMesh> {
    let new_cells = mesh
        .n_cells
        .checked_mul(8)
        .ok_or_else(|| Error::CellCountOverflow(format!("{} * 8", mesh.n_cells)))?;
    let cell_faces = mesh.cell_faces();
    let corners: Vec<[usize; 8]> = (0..mesh.n_cells)
        .map(|c| hex_corners(mesh, c, &cell_faces[c]))
        .collect::<Result<_>>()?;

    let mut points = mesh.points.clone();
    // Midpoint of every unique mesh edge.
    let mut edge_mid: HashMap<(usize, usize), usize> = HashMap::new();
    for f in &mesh.faces {
        for i in 0..4 {
            let (a, b) = (f[i], f[(i + 1) % 4]);
            let key = (a.min(b), a.max(b));
            edge_mid.entry(key).or_insert_with(|| {
                points.push(mean(&[mesh.points[a], mesh.points[b]]));
                points.len() - 1
            });
        }
    }
    // One face point per parent face, keyed by sorted corner ids so both
    // sides agree; also remember which parent face owns each key for patch
    // attribution of child boundary faces.
    let mut face_pt: HashMap<[usize; 4], (usize, usize)> = HashMap::new();
    for (f, q) in mesh.faces.iter().enumerate() {
        let key = sorted4(*q);
        face_pt.entry(key).or_insert_with(|| {
            points.push(mean(&[
                mesh.points[q[0]],
                mesh.points[q[1]],
                mesh.points[q[2]],
                mesh.points[q[3]],
            ]));
            (points.len() - 1, f)
        });
    }
    let n_before_cell_pts = points.len();
    for c in 0..mesh.n_cells {
        let pts: Vec<Vec3> = corners[c].iter().map(|&p| mesh.points[p]).collect();
        points.push(mean(&pts));
    }
    let cell_pt = |c: usize| n_before_cell_pts + c;
    // Reverse lookup: face point id -> parent face, for patch attribution.
    let mut face_of_facept: HashMap<usize, usize> = HashMap::new();
    for (pt, f) in face_pt.values() {
        face_of_facept.insert(*pt, *f);
    }
    let patch_of_face: HashMap<usize, usize> = mesh
        .patches
        .iter()
        .enumerate()
        .flat_map(|(pi, p)| (p.start..p.start + p.len).map(move |f| (f, pi)))
        .collect();

    struct PendingFace {
        quad: [usize; 4], // outward from `owner`
        owner: usize,
        neighbour: Option<usize>,
    }
    let mut pending: Vec<PendingFace> = Vec::new();
    let mut by_key: HashMap<[usize; 4], usize> = HashMap::new();

    for c in 0..mesh.n_cells {
        // 3x3x3 lattice of point ids for this cell.
        let mut lattice = [[[usize::MAX; 3]; 3]; 3];
        for (i, pos) in CORNER_POS.iter().enumerate() {
            lattice[pos[0]][pos[1]][pos[2]] = corners[c][i];
        }
        // Edge midpoints sit between corner pairs differing in one coordinate.
        for (i, pi) in CORNER_POS.iter().enumerate() {
            for (j, pj) in CORNER_POS.iter().enumerate().skip(i + 1) {
                let diff: usize = (0..3).filter(|&d| pi[d] != pj[d]).count();
                if diff == 1 {
                    let (a, b) = (corners[c][i], corners[c][j]);
                    let mid = edge_mid[&(a.min(b), a.max(b))];
                    let pos = [
                        (pi[0] + pj[0]) / 2,
                        (pi[1] + pj[1]) / 2,
                        (pi[2] + pj[2]) / 2,
                    ];
                    lattice[pos[0]][pos[1]][pos[2]] = mid;
                }
            }
        }
        for hf in &HEX_FACES {
            let quad = [
                corners[c][hf[0]],
                corners[c][hf[1]],
                corners[c][hf[2]],
                corners[c][hf[3]],
            ];
            let (pt, _) = face_pt[&sorted4(quad)];
            let pos = [
                (CORNER_POS[hf[0]][0] + CORNER_POS[hf[2]][0]) / 2,
                (CORNER_POS[hf[0]][1] + CORNER_POS[hf[2]][1]) / 2,
                (CORNER_POS[hf[0]][2] + CORNER_POS[hf[2]][2]) / 2,
            ];
            lattice[pos[0]][pos[1]][pos[2]] = pt;
        }
        lattice[1][1][1] = cell_pt(c);
        debug_assert!(lattice
            .iter()
            .flatten()
            .flatten()
            .all(|&p| p != usize::MAX));

        for oz in 0..2 {
            for oy in 0..2 {
                for ox in 0..2 {
                    let child = c * 8 + ox + 2 * oy + 4 * oz;
                    let at = |dx: usize, dy: usize, dz: usize| lattice[ox + dx][oy + dy][oz + dz];
                    let sub = [
                        at(0, 0, 0),
                        at(1, 0, 0),
                        at(1, 1, 0),
                        at(0, 1, 0),
                        at(0, 0, 1),
                        at(1, 0, 1),
                        at(1, 1, 1),
                        at(0, 1, 1),
                    ];
                    let centroid = mean(&sub.iter().map(|&p| points[p]).collect::<Vec<_>>());
                    for hf in &HEX_FACES {
                        let mut quad = [sub[hf[0]], sub[hf[1]], sub[hf[2]], sub[hf[3]]];
                        // Orient outward from this child.
                        let q: Vec<Vec3> = quad.iter().map(|&p| points[p]).collect();
                        let n = super::cross(super::sub(q[2], q[0]), super::sub(q[3], q[1]));
                        let fm = mean(&q);
                        if super::dot(n, super::sub(fm, centroid)) < 0.0 {
                            quad = [quad[0], quad[3], quad[2], quad[1]];
                        }
                        let key = sorted4(quad);
                        match by_key.get(&key) {
                            None => {
                                by_key.insert(key, pending.len());
                                pending.push(PendingFace {
                                    quad,
                                    owner: child,
                                    neighbour: None,
                                });
                            }
                            Some(&idx) => {
                                debug_assert!(pending[idx].neighbour.is_none());
                                debug_assert!(pending[idx].owner < child);
                                pending[idx].neighbour = Some(child);
                            }
                        }
                    }
                }
            }
        }
    }

    // Internal child faces are claimed by two children; the rest lie on
    // parent boundary faces and inherit the parent patch.
    let mut internal: Vec<usize> = Vec::new();
    let mut boundary_by_patch: Vec<Vec<usize>> = vec![Vec::new(); mesh.patches.len()];
    for (idx, pf) in pending.iter().enumerate() {
        match pf.neighbour {
            Some(_) => internal.push(idx),
            None => {
                let pt = pf
                    .quad
                    .iter()
                    .find_map(|p| face_of_facept.get(p))
                    .copied()
                    .ok_or_else(|| {
                        Error::InvalidMesh(format!(
                            "unmatched child face without a parent face point (cell {})",
                            pf.owner / 8
                        ))
                    })?;
                let patch = *patch_of_face.get(&pt).ok_or_else(|| {
                    Error::InvalidMesh(format!(
                        "child face of cell {} lies on internal parent face {pt}",
                        pf.owner / 8
                    ))
                })?;
                boundary_by_patch[patch].push(idx);
            }
        }
    }
    internal.sort_by_key(|&i| (pending[i].owner, pending[i].neighbour.unwrap(), sorted4(pending[i].quad)));

    let mut faces = Vec::with_capacity(pending.len());
    let mut owner = Vec::with_capacity(pending.len());
    let mut neighbour = Vec::with_capacity(internal.len());
    for &i in &internal {
        faces.push(pending[i].quad);
        owner.push(pending[i].owner);
        neighbour.push(pending[i].neighbour.unwrap());
    }
    let mut patches = Vec::with_capacity(mesh.patches.len());
    for (pi, p) in mesh.patches.iter().enumerate() {
        let mut list = std::mem::take(&mut boundary_by_patch[pi]);
        list.sort_by_key(|&i| (pending[i].owner, sorted4(pending[i].quad)));
        let start = faces.len();
        for &i in &list {
            faces.push(pending[i].quad);
            owner.push(pending[i].owner);
        }
        patches.push(BoundaryPatch {
            name: p.name.clone(),
            start,
            len: list.len(),
        });
    }

    Ok(UnstructuredMesh {
        n_cells: new_cells,
        points,
        faces,
        owner,
        neighbour,
        patches,
    })
}
