//! Fill-reducing elimination ordering.
//!
//! A plain minimum-degree ordering on an explicit elimination graph. Nodes
//! carry a weight (their scalar size) and the degree of a node is the total
//! weight of its current neighbours. Nodes flagged `late` are only eliminated
//! once every regular node is gone.

use std::cmp::Reverse;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BinaryHeap, HashSet};
use std::hash::BuildHasherDefault;

type Adjacency = HashSet<usize, BuildHasherDefault<DefaultHasher>>;

/// Computes an elimination order for the symmetric graph given by `edges`.
///
/// `edges` may contain duplicates and self loops; both are ignored. The
/// result is deterministic for fixed input.
pub fn minimum_degree(
    n: usize,
    edges: &[(usize, usize)],
    weight: &[usize],
    late: &[bool],
) -> Vec<usize> {
    assert_eq!(weight.len(), n);
    assert_eq!(late.len(), n);

    let mut adj: Vec<Adjacency> = (0..n).map(|_| Adjacency::default()).collect();
    for &(a, b) in edges {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }

    let mut degree: Vec<usize> = (0..n)
        .map(|v| adj[v].iter().map(|&u| weight[u]).sum())
        .collect();
    let mut heap: BinaryHeap<Reverse<(bool, usize, usize)>> =
        (0..n).map(|v| Reverse((late[v], degree[v], v))).collect();
    let mut eliminated = vec![false; n];
    let mut order = Vec::with_capacity(n);

    while let Some(Reverse((_, d, v))) = heap.pop() {
        if eliminated[v] || d != degree[v] {
            continue;
        }
        eliminated[v] = true;
        order.push(v);

        let mut nbrs: Vec<usize> = adj[v].iter().copied().collect();
        nbrs.sort_unstable();
        adj[v].clear();

        let before: Vec<usize> = nbrs.iter().map(|&u| degree[u]).collect();
        for &u in &nbrs {
            if adj[u].remove(&v) {
                degree[u] -= weight[v];
            }
        }
        for (i, &u) in nbrs.iter().enumerate() {
            for &w in &nbrs[i + 1..] {
                if adj[u].insert(w) {
                    degree[u] += weight[w];
                }
                if adj[w].insert(u) {
                    degree[w] += weight[u];
                }
            }
        }
        for (&u, &d0) in nbrs.iter().zip(&before) {
            if degree[u] != d0 {
                heap.push(Reverse((late[u], degree[u], u)));
            }
        }
    }

    debug_assert_eq!(order.len(), n);
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_is_eliminated_from_the_ends() {
        let edges: Vec<_> = (0..5).map(|i| (i, i + 1)).collect();
        let order = minimum_degree(6, &edges, &[1; 6], &[false; 6]);
        assert_eq!(order.len(), 6);
        assert_eq!(order[0], 0);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn late_nodes_come_last() {
        // star: node 0 has degree 4, leaves have degree 1
        let edges = [(0, 1), (0, 2), (0, 3), (0, 4)];
        let late = [false, true, false, false, false];
        let order = minimum_degree(5, &edges, &[1; 5], &late);
        assert_eq!(*order.last().unwrap(), 1);
    }

    #[test]
    fn deterministic() {
        let edges: Vec<_> = (0..50).map(|i| (i, (i * 7 + 3) % 50)).collect();
        let a = minimum_degree(50, &edges, &[1; 50], &[false; 50]);
        let b = minimum_degree(50, &edges, &[1; 50], &[false; 50]);
        assert_eq!(a, b);
    }
}
