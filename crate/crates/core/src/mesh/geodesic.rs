//! Edge-path distances, used to tell topological neighbours from
//! Euclidean ones.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::vec3::dist;
use super::TriMesh;

#[derive(PartialEq, PartialOrd)]
struct Key(f64);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Dijkstra distances along mesh edges from `src`; unreachable = `inf`.
pub fn edge_path_distances(mesh: &TriMesh, adjacency: &[Vec<usize>], src: usize) -> Vec<f64> {
    let v = mesh.vertices();
    let mut d = vec![f64::INFINITY; v.len()];
    d[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Key(0.0), src)));
    while let Some(Reverse((Key(du), u))) = heap.pop() {
        if du > d[u] {
            continue;
        }
        for &w in &adjacency[u] {
            let nd = du + dist(v[u], v[w]);
            if nd < d[w] {
                d[w] = nd;
                heap.push(Reverse((Key(nd), w)));
            }
        }
    }
    d
}

/// Count edges whose along-surface distance exceeds `ratio` times their
/// Euclidean length ("false connections").
pub fn count_false_edges(mesh: &TriMesh, edges: &[[usize; 2]], ratio: f64) -> usize {
    let adj = mesh.adjacency();
    let mut by_src: Vec<Vec<usize>> = vec![Vec::new(); mesh.num_vertices()];
    for &[a, b] in edges {
        by_src[a].push(b);
    }
    let v = mesh.vertices();
    let mut count = 0;
    for (a, targets) in by_src.iter().enumerate() {
        if targets.is_empty() {
            continue;
        }
        let d = edge_path_distances(mesh, &adj, a);
        for &b in targets {
            if d[b] > ratio * dist(v[a], v[b]) {
                count += 1;
            }
        }
    }
    count
}
