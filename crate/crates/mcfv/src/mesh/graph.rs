//! Cell adjacency graph: cells are nodes, internal faces are edges.

use super::UnstructuredMesh;

#[derive(Debug, Clone)]
pub struct CellGraph {
    /// Sorted neighbour lists, no self-loops or duplicates.
    pub adj: Vec<Vec<usize>>,
}

impl CellGraph {
    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> CellGraph {
        let mut adj = vec![Vec::new(); n];
        for (a, b) in edges {
            if a == b {
                continue;
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        CellGraph { adj }
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() <= 1
    }

    /// Connected components, each sorted ascending, ordered by smallest node.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut head = 0;
            while head < comp.len() {
                let v = comp[head];
                head += 1;
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Subgraph induced by `nodes` (ascending). Returns the subgraph with
    /// local ids `0..nodes.len()` in the order given.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> CellGraph {
        let mut local = std::collections::HashMap::with_capacity(nodes.len());
        for (i, &v) in nodes.iter().enumerate() {
            local.insert(v, i);
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        for (i, &v) in nodes.iter().enumerate() {
            for &w in &self.adj[v] {
                if let Some(&j) = local.get(&w) {
                    adj[i].push(j);
                }
            }
            adj[i].sort_unstable();
        }
        CellGraph { adj }
    }
}

/// One node per cell, one undirected edge per internal face.
pub fn mesh_to_graph(mesh: &UnstructuredMesh) -> CellGraph {
    CellGraph::from_edges(
        mesh.n_cells,
        (0..mesh.n_internal_faces()).map(|f| (mesh.owner[f], mesh.neighbour[f])),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_box_mesh;

    #[test]
    fn two_cell_graph() {
        let m = build_box_mesh(2, 1, 1, [1.0; 3]).unwrap();
        let g = mesh_to_graph(&m);
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(g.n_edges(), 1);
    }

    #[test]
    fn single_cell_graph() {
        let m = build_box_mesh(1, 1, 1, [1.0; 3]).unwrap();
        let g = mesh_to_graph(&m);
        assert_eq!(g.n_nodes(), 1);
        assert_eq!(g.n_edges(), 0);
        assert!(g.is_connected());
    }

    #[test]
    fn cube_edge_count_matches_formula() {
        for n in 2..=5 {
            let m = build_box_mesh(n, n, n, [1.0; 3]).unwrap();
            let g = mesh_to_graph(&m);
            assert_eq!(g.n_edges(), 3 * n * n * (n - 1));
            assert_eq!(g.n_edges(), m.n_internal_faces());
            assert!(g.is_connected());
            // Hex cells have at most 6 neighbours.
            assert!((0..g.n_nodes()).all(|v| g.degree(v) <= 6));
        }
    }

    #[test]
    fn induced_subgraph_of_slab() {
        let m = build_box_mesh(4, 1, 1, [1.0; 3]).unwrap();
        let g = mesh_to_graph(&m);
        let sub = g.induced_subgraph(&[0, 1, 3]);
        assert_eq!(sub.n_edges(), 1); // only 0-1 survives
    }
}
