//! Pluggable graph partitioner strategies.

use super::multilevel::partition_recursive;
use crate::mesh::CellGraph;
use crate::registry::Registry;
use crate::{Error, Result};

pub trait Partitioner: Send + Sync {
    fn name(&self) -> &'static str;

    /// Assign every node a part in `[0, n_parts)`. Deterministic for a
    /// fixed seed. `weights` defaults to unit node weights.
    fn partition(
        &self,
        graph: &CellGraph,
        n_parts: usize,
        weights: Option<&[f64]>,
        seed: u64,
    ) -> Result<Vec<u32>>;
}

fn check_args(graph: &CellGraph, n_parts: usize) -> Result<()> {
    if n_parts == 0 {
        return Err(Error::Partition("n_parts must be >= 1".into()));
    }
    if n_parts > graph.n_nodes() {
        return Err(Error::Partition(format!(
            "n_parts {n_parts} exceeds node count {}",
            graph.n_nodes()
        )));
    }
    Ok(())
}

/// Multilevel recursive bisection with boundary refinement (default).
pub struct Multilevel;

impl Partitioner for Multilevel {
    fn name(&self) -> &'static str {
        "multilevel"
    }

    fn partition(
        &self,
        graph: &CellGraph,
        n_parts: usize,
        weights: Option<&[f64]>,
        seed: u64,
    ) -> Result<Vec<u32>> {
        check_args(graph, n_parts)?;
        Ok(partition_recursive(graph, n_parts, weights, seed))
    }
}

/// Naive baseline: contiguous equal chunks of the existing node numbering.
/// Ignores adjacency entirely; useful as the comparison point for
/// decomposition quality.
pub struct IndexBlocks;

impl Partitioner for IndexBlocks {
    fn name(&self) -> &'static str {
        "index-blocks"
    }

    fn partition(
        &self,
        graph: &CellGraph,
        n_parts: usize,
        _weights: Option<&[f64]>,
        _seed: u64,
    ) -> Result<Vec<u32>> {
        check_args(graph, n_parts)?;
        let n = graph.n_nodes();
        Ok((0..n)
            .map(|v| ((v * n_parts) / n).min(n_parts - 1) as u32)
            .collect())
    }
}

pub static PARTITIONERS: Registry<dyn Partitioner> = Registry::new(
    "partitioner",
    &[
        ("multilevel", || Box::new(Multilevel)),
        ("index-blocks", || Box::new(IndexBlocks)),
    ],
);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, mesh_to_graph};

    #[test]
    fn registry_resolves_both() {
        assert_eq!(PARTITIONERS.create("multilevel").unwrap().name(), "multilevel");
        assert_eq!(PARTITIONERS.create("index-blocks").unwrap().name(), "index-blocks");
        assert!(PARTITIONERS.create("scotch").is_err());
    }

    #[test]
    fn index_blocks_gives_contiguous_chunks() {
        let g = mesh_to_graph(&build_box_mesh(8, 1, 1, [1.0; 3]).unwrap());
        let p = IndexBlocks.partition(&g, 4, None, 0).unwrap();
        assert_eq!(p, vec![0, 0, 1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn too_many_parts_rejected() {
        let g = mesh_to_graph(&build_box_mesh(2, 1, 1, [1.0; 3]).unwrap());
        assert!(Multilevel.partition(&g, 3, None, 0).is_err());
    }
}
