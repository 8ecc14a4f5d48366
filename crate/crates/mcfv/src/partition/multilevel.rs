//! Multilevel recursive bisection: greedy heavy-edge matching coarsening,
//! BFS region-growing initial bisection, Kernighan-Lin style boundary
//! refinement during uncoarsening. Deterministic for a fixed seed.

use crate::mesh::CellGraph;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Weighted working graph for the multilevel hierarchy.
#[derive(Clone)]
struct WGraph {
    /// Sorted (neighbour, edge weight) lists.
    adj: Vec<Vec<(usize, f64)>>,
    wnode: Vec<f64>,
}

impl WGraph {
    fn n(&self) -> usize {
        self.adj.len()
    }

    fn total_weight(&self) -> f64 {
        self.wnode.iter().sum()
    }

    fn from_graph(g: &CellGraph, weights: Option<&[f64]>) -> WGraph {
        WGraph {
            adj: g
                .adj
                .iter()
                .map(|l| l.iter().map(|&w| (w, 1.0)).collect())
                .collect(),
            wnode: match weights {
                Some(w) => w.to_vec(),
                None => vec![1.0; g.n_nodes()],
            },
        }
    }
}

/// Partition `graph` into `n_parts` parts minimizing edge cut, with node
/// weight balance. Returns per-node part ids in `[0, n_parts)`.
pub fn partition_recursive(
    graph: &CellGraph,
    n_parts: usize,
    weights: Option<&[f64]>,
    seed: u64,
) -> Vec<u32> {
    let wg = WGraph::from_graph(graph, weights);
    let mut parts = vec![0u32; graph.n_nodes()];
    let nodes: Vec<usize> = (0..graph.n_nodes()).collect();
    split(&wg, &nodes, n_parts, 0, seed, &mut parts);
    parts
}

fn split(wg: &WGraph, nodes: &[usize], k: usize, first_part: u32, seed: u64, out: &mut Vec<u32>) {
    if k == 1 {
        for &v in nodes {
            out[v] = first_part;
        }
        return;
    }
    let k_left = k / 2;
    let frac = k_left as f64 / k as f64;
    let sub = induced(wg, nodes);
    let side = bisect(&sub, frac, seed);
    let left: Vec<usize> = nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| side[*i] == 0)
        .map(|(_, &v)| v)
        .collect();
    let right: Vec<usize> = nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| side[*i] == 1)
        .map(|(_, &v)| v)
        .collect();
    split(wg, &left, k_left, first_part, seed.wrapping_mul(6364136223846793005).wrapping_add(1), out);
    split(
        wg,
        &right,
        k - k_left,
        first_part + k_left as u32,
        seed.wrapping_mul(6364136223846793005).wrapping_add(2),
        out,
    );
}

fn induced(wg: &WGraph, nodes: &[usize]) -> WGraph {
    let mut local = std::collections::HashMap::with_capacity(nodes.len());
    for (i, &v) in nodes.iter().enumerate() {
        local.insert(v, i);
    }
    let mut adj = vec![Vec::new(); nodes.len()];
    for (i, &v) in nodes.iter().enumerate() {
        for &(w, ew) in &wg.adj[v] {
            if let Some(&j) = local.get(&w) {
                adj[i].push((j, ew));
            }
        }
    }
    WGraph {
        adj,
        wnode: nodes.iter().map(|&v| wg.wnode[v]).collect(),
    }
}

const COARSEST: usize = 48;
const BALANCE_EPS: f64 = 0.02;
const REFINE_PASSES: usize = 8;

/// Bisect into side 0 (target weight `frac` of the total) and side 1.
fn bisect(wg: &WGraph, frac: f64, seed: u64) -> Vec<u8> {
    // Coarsening phase.
    let mut levels: Vec<(WGraph, Vec<usize>)> = Vec::new(); // (coarse graph, fine->coarse map)
    let mut cur = wg.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while cur.n() > COARSEST {
        let (coarse, map) = coarsen(&cur, &mut rng);
        if coarse.n() as f64 > 0.95 * cur.n() as f64 {
            break; // matching stalled
        }
        levels.push((std::mem::replace(&mut cur, coarse), map));
    }

    let mut side = initial_bisection(&cur, frac);
    refine(&cur, &mut side, frac);

    // Uncoarsen, projecting and refining at every level.
    while let Some((fine, map)) = levels.pop() {
        let mut fine_side = vec![0u8; fine.n()];
        for v in 0..fine.n() {
            fine_side[v] = side[map[v]];
        }
        side = fine_side;
        refine(&fine, &mut side, frac);
        cur = fine;
    }
    // Refinement works inside a slack band that compounds across the
    // recursion levels; pull the split back to its target so nested
    // bisections stay within a few cells of perfect balance.
    rebalance(&cur, &mut side, frac);
    side
}

/// Move min-cut-cost boundary nodes from the heavy side until the split
/// weight is as close to its target as node granularity allows.
fn rebalance(wg: &WGraph, side: &mut [u8], frac: f64) {
    let total = wg.total_weight();
    let target0 = frac * total;
    let max_node_w = wg.wnode.iter().cloned().fold(0.0, f64::max);
    let tol = (0.005 * total).max(0.5 * max_node_w);
    let mut w0: f64 = (0..wg.n()).filter(|&v| side[v] == 0).map(|v| wg.wnode[v]).sum();
    let mut locked = vec![false; wg.n()];
    loop {
        let excess = w0 - target0;
        if excess.abs() <= tol {
            break;
        }
        let heavy = if excess > 0.0 { 0u8 } else { 1u8 };
        // Prefer boundary nodes (cheapest cut growth, highest gain).
        let pick = (0..wg.n())
            .filter(|&v| {
                side[v] == heavy
                    && !locked[v]
                    && wg.adj[v].iter().any(|&(w, _)| side[w] != heavy)
            })
            .map(|v| {
                let g: f64 = wg
                    .adj[v]
                    .iter()
                    .map(|&(w, ew)| if side[w] == heavy { -ew } else { ew })
                    .sum();
                (v, g)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let Some((v, _)) = pick else { break };
        // Stop when node granularity would overshoot.
        if (excess.abs() - wg.wnode[v]).abs() >= excess.abs() {
            break;
        }
        w0 += if heavy == 0 { -wg.wnode[v] } else { wg.wnode[v] };
        side[v] ^= 1;
        locked[v] = true;
    }
}

/// Greedy heavy-edge matching; merged nodes sum weights, parallel edges
/// accumulate.
fn coarsen(wg: &WGraph, rng: &mut ChaCha8Rng) -> (WGraph, Vec<usize>) {
    let n = wg.n();
    let mut visit: Vec<usize> = (0..n).collect();
    visit.shuffle(rng);
    let mut mate = vec![usize::MAX; n];
    for &v in &visit {
        if mate[v] != usize::MAX {
            continue;
        }
        let mut best = None;
        let mut best_w = -1.0;
        for &(w, ew) in &wg.adj[v] {
            if mate[w] == usize::MAX && (ew > best_w || (ew == best_w && Some(w) < best)) {
                best = Some(w);
                best_w = ew;
            }
        }
        match best {
            Some(w) => {
                mate[v] = w;
                mate[w] = v;
            }
            None => mate[v] = v,
        }
    }
    let mut map = vec![usize::MAX; n];
    let mut next = 0;
    for v in 0..n {
        if map[v] == usize::MAX {
            map[v] = next;
            if mate[v] != v && mate[v] != usize::MAX {
                map[mate[v]] = next;
            }
            next += 1;
        }
    }
    let mut wnode = vec![0.0; next];
    for v in 0..n {
        wnode[map[v]] += wg.wnode[v];
    }
    let mut edge_acc: std::collections::HashMap<(usize, usize), f64> = std::collections::HashMap::new();
    for v in 0..n {
        for &(w, ew) in &wg.adj[v] {
            let (a, b) = (map[v], map[w]);
            if a < b {
                *edge_acc.entry((a, b)).or_insert(0.0) += ew;
            }
        }
    }
    let mut adj = vec![Vec::new(); next];
    let mut keys: Vec<_> = edge_acc.into_iter().collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0));
    for ((a, b), ew) in keys {
        adj[a].push((b, ew));
        adj[b].push((a, ew));
    }
    for l in &mut adj {
        l.sort_by(|a, b| a.0.cmp(&b.0));
    }
    (WGraph { adj, wnode }, map)
}

/// BFS region growing from a low-degree node until side 0 reaches its
/// target weight.
fn initial_bisection(wg: &WGraph, frac: f64) -> Vec<u8> {
    let n = wg.n();
    let target = frac * wg.total_weight();
    let start = (0..n)
        .min_by_key(|&v| (wg.adj[v].len(), v))
        .unwrap_or(0);
    let mut side = vec![1u8; n];
    let mut grown = 0.0;
    let mut queue = std::collections::VecDeque::from([start]);
    let mut seen = vec![false; n];
    seen[start] = true;
    while let Some(v) = queue.pop_front() {
        if grown + wg.wnode[v] > target && grown > 0.0 {
            continue;
        }
        side[v] = 0;
        grown += wg.wnode[v];
        for &(w, _) in &wg.adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
        // Restart BFS from an unseen node if the frontier empties early.
        if queue.is_empty() && grown < target {
            if let Some(u) = (0..n).find(|&u| !seen[u]) {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    side
}

/// Kernighan-Lin style pass: tentatively move max-gain boundary nodes under
/// the balance constraint, then keep the best prefix.
fn refine(wg: &WGraph, side: &mut [u8], frac: f64) {
    let total = wg.total_weight();
    let target0 = frac * total;
    let max_node_w = wg.wnode.iter().cloned().fold(0.0, f64::max);
    let slack = (BALANCE_EPS * total).max(max_node_w);

    for _ in 0..REFINE_PASSES {
        let mut w0: f64 = (0..wg.n()).filter(|&v| side[v] == 0).map(|v| wg.wnode[v]).sum();
        // gain[v]: cut reduction if v switches sides.
        let gain = |v: usize, side: &[u8]| -> f64 {
            let mut g = 0.0;
            for &(w, ew) in &wg.adj[v] {
                if side[w] == side[v] {
                    g -= ew;
                } else {
                    g += ew;
                }
            }
            g
        };
        let mut locked = vec![false; wg.n()];
        let mut candidates: Vec<usize> = (0..wg.n())
            .filter(|&v| wg.adj[v].iter().any(|&(w, _)| side[w] != side[v]))
            .collect();
        let mut trail: Vec<usize> = Vec::new();
        let mut cum = 0.0;
        let mut best_cum = 0.0;
        let mut best_len = 0;
        let move_cap = (2 * candidates.len()).max(16);

        while trail.len() < move_cap {
            let mut best: Option<(f64, usize)> = None;
            candidates.retain(|&v| !locked[v]);
            for &v in &candidates {
                let balanced = if side[v] == 0 {
                    (w0 - wg.wnode[v] - target0).abs() <= slack
                } else {
                    (w0 + wg.wnode[v] - target0).abs() <= slack
                };
                if !balanced {
                    continue;
                }
                let g = gain(v, side);
                if best.map_or(true, |(bg, bv)| g > bg || (g == bg && v < bv)) {
                    best = Some((g, v));
                }
            }
            let Some((g, v)) = best else { break };
            if side[v] == 0 {
                w0 -= wg.wnode[v];
                side[v] = 1;
            } else {
                w0 += wg.wnode[v];
                side[v] = 0;
            }
            locked[v] = true;
            trail.push(v);
            cum += g;
            if cum > best_cum + 1e-12 {
                best_cum = cum;
                best_len = trail.len();
            }
            for &(w, _) in &wg.adj[v] {
                if !locked[w] && !candidates.contains(&w) {
                    candidates.push(w);
                }
            }
        }
        // Roll back moves past the best prefix.
        for &v in trail.iter().skip(best_len) {
            side[v] ^= 1;
        }
        if best_len == 0 {
            break;
        }
    }
}
