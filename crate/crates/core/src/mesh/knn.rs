use super::vec3::{dist, Vec3};
use crate::error::{Error, Result};

/// Symmetrized k-nearest-neighbour graph; ties broken by index.
/// Returns sorted undirected edges `[a, b]`, `a < b`.
pub fn knn_graph(points: &[Vec3], k: usize) -> Result<Vec<[usize; 2]>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if k >= points.len() {
        return Err(Error::Invalid(format!(
            "k = {k} must be smaller than the point count {}",
            points.len()
        )));
    }
    let mut edges = Vec::with_capacity(points.len() * k);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(points.len());
    for (i, &p) in points.iter().enumerate() {
        cand.clear();
        cand.extend(
            points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, &q)| (dist(p, q), j)),
        );
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in cand.iter().take(k) {
            edges.push([i.min(j), i.max(j)]);
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_chain() {
        let pts: Vec<Vec3> = (0..6).map(|i| [i as f64, 0.0, 0.0]).collect();
        let e = knn_graph(&pts, 2).unwrap();
        // interior points pick both neighbours; endpoints add a skip edge
        for i in 0..5 {
            assert!(e.contains(&[i, i + 1]));
        }
        assert!(e.iter().all(|[a, b]| b - a <= 2));
    }

    #[test]
    fn k_zero_and_too_large() {
        let pts = vec![[0.0; 3], [1.0, 0.0, 0.0]];
        assert!(knn_graph(&pts, 0).unwrap().is_empty());
        assert!(knn_graph(&pts, 2).is_err());
    }

    #[test]
    fn duplicates_break_ties_by_index() {
        let pts = vec![[0.0; 3], [0.0; 3], [0.0; 3], [1.0, 0.0, 0.0]];
        let e = knn_graph(&pts, 1).unwrap();
        assert!(e.contains(&[0, 1]));
        assert!(e.contains(&[0, 2]));
    }
}
