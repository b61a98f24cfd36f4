//! Sparse weighted (di)graphs and the graph-metric primitives the rest of the crate builds on.

mod generate;
mod io;

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use generate::{random_geometric_graph, threshold_for_mean_degree};
pub use io::{
    load_edge_list, load_labels, load_matrix_market, write_edge_list, write_matrix_market,
    EdgeListOptions, IndexBase, Loaded, LoadReport,
};

/// An `(i, j, value)` triple: a sensitivity, a weight, or an edge update depending on context.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgePair<T> {
    pub i: usize,
    pub j: usize,
    pub value: T,
}

impl<T> EdgePair<T> {
    pub fn new(i: usize, j: usize, value: T) -> Self {
        Self { i, j, value }
    }
}

/// Compressed sparse rows with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    /// Builds from entries already sorted by `(row, col)` without duplicates.
    fn from_sorted(n: usize, entries: &[(usize, usize, T)]) -> Self {
        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in entries {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx: entries.iter().map(|e| e.1).collect(),
            vals: entries.iter().map(|e| e.2).collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.vals[a..b])
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let (cols, vals) = self.row(i);
            let mut acc = T::zero();
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }
}

/// Weighted (di)graph on nodes `0..n`, stored as its adjacency matrix `A` with `a_ij = w_ij`.
///
/// Both `A` and `Aᵀ` are kept in row-compressed form so products with either are `O(nnz)`.
/// Self-loops never appear, all weights are strictly positive, and an undirected graph stores
/// each edge as two mirrored entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T = f64> {
    directed: bool,
    out: Csr<T>,
    inc: Csr<T>,
}

/// Outcome of merging a raw list of entries into a graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub dropped_self_loops: usize,
    pub merged_duplicates: usize,
}

impl<T: Scalar> Graph<T> {
    /// Builds a graph from raw `(i, j, w)` entries.
    ///
    /// Self-loops are dropped and counted; duplicate entries are summed. For undirected graphs
    /// each entry describes the unordered pair `{i, j}` and is mirrored.
    pub fn from_entries<I>(n: usize, directed: bool, entries: I) -> Result<(Self, BuildStats)>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut stats = BuildStats::default();
        let mut merged: BTreeMap<(usize, usize), T> = BTreeMap::new();
        for (i, j, w) in entries {
            for &k in &[i, j] {
                if k >= n {
                    return Err(Error::Index { index: k, size: n });
                }
            }
            if !(w > T::zero()) || !w.is_finite() {
                return Err(Error::Weight { i, j, weight: w.to_f64_lossy() });
            }
            if i == j {
                stats.dropped_self_loops += 1;
                continue;
            }
            let key = if directed { (i, j) } else { (i.min(j), i.max(j)) };
            match merged.get_mut(&key) {
                Some(acc) => {
                    *acc += w;
                    stats.merged_duplicates += 1;
                }
                None => {
                    merged.insert(key, w);
                }
            }
        }
        let mut list: Vec<(usize, usize, T)> = Vec::with_capacity(merged.len() * 2);
        for (&(i, j), &w) in &merged {
            list.push((i, j, w));
            if !directed {
                list.push((j, i, w));
            }
        }
        Ok((Self::from_directed_list(n, directed, list), stats))
    }

    fn from_directed_list(n: usize, directed: bool, mut list: Vec<(usize, usize, T)>) -> Self {
        list.sort_unstable_by_key(|e| (e.0, e.1));
        let out = Csr::from_sorted(n, &list);
        let mut tr: Vec<(usize, usize, T)> = list.iter().map(|&(i, j, w)| (j, i, w)).collect();
        tr.sort_unstable_by_key(|e| (e.0, e.1));
        let inc = Csr::from_sorted(n, &tr);
        Self { directed, out, inc }
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize, directed: bool) -> Self {
        Self::from_directed_list(n, directed, Vec::new())
    }

    /// Unweighted undirected graph from a list of node pairs.
    pub fn undirected_from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::from_entries(n, false, pairs.iter().map(|&(i, j)| (i, j, T::one()))).map(|r| r.0)
    }

    /// Unweighted directed graph from a list of arcs.
    pub fn directed_from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::from_entries(n, true, pairs.iter().map(|&(i, j)| (i, j, T::one()))).map(|r| r.0)
    }

    pub fn n(&self) -> usize {
        self.out.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Number of stored entries of `A` (an undirected edge counts twice).
    pub fn nnz(&self) -> usize {
        self.out.nnz()
    }

    /// Number of edges: `nnz` for digraphs, `nnz / 2` for undirected graphs.
    pub fn edge_count(&self) -> usize {
        if self.directed {
            self.nnz()
        } else {
            self.nnz() / 2
        }
    }

    pub fn adjacency(&self) -> &Csr<T> {
        &self.out
    }

    pub fn adjacency_transpose(&self) -> &Csr<T> {
        &self.inc
    }

    /// Out-neighbours of `i` with weights `a_ij`.
    pub fn out_edges(&self, i: usize) -> (&[usize], &[T]) {
        self.out.row(i)
    }

    /// In-neighbours of `j` with weights `a_ij`.
    pub fn in_edges(&self, j: usize) -> (&[usize], &[T]) {
        self.inc.row(j)
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<T> {
        self.out.get(i, j)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out.get(i, j).is_some()
    }

    /// All stored entries `(i, j, a_ij)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n()).flat_map(move |i| {
            let (c, v) = self.out.row(i);
            c.iter().zip(v).map(move |(&j, &w)| (i, j, w))
        })
    }

    /// `y = A x`, or `y = Aᵀ x` when `transposed`.
    pub fn apply_into(&self, x: &[T], y: &mut [T], transposed: bool) {
        if transposed {
            self.inc.matvec_into(x, y)
        } else {
            self.out.matvec_into(x, y)
        }
    }

    pub fn apply(&self, x: &[T], transposed: bool) -> Vec<T> {
        let mut y = vec![T::zero(); self.n()];
        self.apply_into(x, &mut y, transposed);
        y
    }

    /// `deg(v) = Σ_u w_vu`, the sum of outgoing weights.
    pub fn weighted_degree(&self, v: usize) -> T {
        self.out.row(v).1.iter().copied().sum()
    }

    pub fn max_weighted_degree(&self) -> T {
        (0..self.n()).map(|v| self.weighted_degree(v)).fold(T::zero(), T::max)
    }

    pub fn max_in_weighted_degree(&self) -> T {
        (0..self.n()).map(|v| self.inc.row(v).1.iter().copied().sum()).fold(T::zero(), T::max)
    }

    /// `‖A‖₁` and `‖A‖_∞` give `‖A‖₂ ≤ √(‖A‖₁‖A‖_∞)`.
    pub fn norm2_upper(&self) -> T {
        (self.max_weighted_degree() * self.max_in_weighted_degree()).sqrt()
    }

    /// Hop distances from `source` following edge direction; `None` marks unreachable nodes.
    pub fn geodesic_distances(&self, source: usize) -> Vec<Option<usize>> {
        self.bfs(source, false)
    }

    /// Hop distances `d(u, target)` for every `u`, i.e. BFS against edge direction.
    pub fn distances_to(&self, target: usize) -> Vec<Option<usize>> {
        self.bfs(target, true)
    }

    fn bfs(&self, start: usize, reverse: bool) -> Vec<Option<usize>> {
        let csr = if reverse { &self.inc } else { &self.out };
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        dist[start] = Some(0);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &w in csr.row(u).0 {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Applies weight increments `(i, j, δ)`; undirected updates are mirrored.
    ///
    /// A resulting weight of (numerically) zero removes the edge; a negative one is an error.
    pub fn with_updates(&self, updates: &[EdgePair<T>]) -> Result<Self> {
        let n = self.n();
        let mut map: BTreeMap<(usize, usize), T> =
            self.entries().map(|(i, j, w)| ((i, j), w)).collect();
        for u in updates {
            if u.i >= n || u.j >= n {
                return Err(Error::Index { index: u.i.max(u.j), size: n });
            }
            if u.i == u.j {
                return Err(Error::InvalidArgument(format!("self-loop update ({}, {})", u.i, u.j)));
            }
            let mut targets = vec![(u.i, u.j)];
            if !self.directed {
                targets.push((u.j, u.i));
            }
            for key in targets {
                let w = *map.get(&key).unwrap_or(&T::zero()) + u.value;
                let tiny = T::epsilon() * T::lit(16.0) * u.value.abs().max(T::one());
                if w.abs() <= tiny {
                    map.remove(&key);
                } else if w < T::zero() {
                    return Err(Error::Weight { i: key.0, j: key.1, weight: w.to_f64_lossy() });
                } else {
                    map.insert(key, w);
                }
            }
        }
        let list = map.into_iter().map(|((i, j), w)| (i, j, w)).collect();
        Ok(Self::from_directed_list(n, self.directed, list))
    }

    /// Dense copy of `A` (row-major), for oracles and small problems.
    pub fn to_dense(&self) -> crate::dense::DenseMatrix<T> {
        let mut m = crate::dense::DenseMatrix::zeros(self.n(), self.n());
        for (i, j, w) in self.entries() {
            m[(i, j)] = w;
        }
        m
    }

    /// Induced subgraph on nodes `0..k`.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.n());
        let list = self.entries().filter(|&(i, j, _)| i < k && j < k).collect();
        Self::from_directed_list(k, self.directed, list)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> Graph<f64> {
        Graph::undirected_from_pairs(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn path_distances() {
        assert_eq!(p3().geodesic_distances(0), vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn directed_arc_distances_follow_direction() {
        let g = Graph::<f64>::directed_from_pairs(2, &[(0, 1)]).unwrap();
        assert_eq!(g.geodesic_distances(1), vec![None, Some(0)]);
        assert_eq!(g.distances_to(1), vec![Some(1), Some(0)]);
    }

    #[test]
    fn degrees() {
        let g = p3();
        assert_eq!(g.weighted_degree(1), 2.0);
        let iso = Graph::<f64>::empty(4, false);
        assert_eq!(iso.weighted_degree(2), 0.0);
        let star: Vec<_> = (1..8).map(|k| (0, k)).collect();
        let s = Graph::<f64>::undirected_from_pairs(8, &star).unwrap();
        assert_eq!(s.weighted_degree(0), 7.0);
        assert_eq!(s.max_weighted_degree(), 7.0);
    }

    #[test]
    fn self_loops_dropped_duplicates_summed() {
        let (g, stats) =
            Graph::<f64>::from_entries(3, true, vec![(0, 0, 1.0), (0, 1, 1.0), (0, 1, 2.0)])
                .unwrap();
        assert_eq!(stats.dropped_self_loops, 1);
        assert_eq!(stats.merged_duplicates, 1);
        assert_eq!(g.weight(0, 1), Some(3.0));
        assert_eq!(g.nnz(), 1);
    }

    #[test]
    fn rejects_bad_weights_and_indices() {
        assert!(matches!(
            Graph::<f64>::from_entries(2, true, vec![(0, 1, -1.0)]),
            Err(Error::Weight { .. })
        ));
        assert!(matches!(
            Graph::<f64>::from_entries(2, true, vec![(0, 2, 1.0)]),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn undirected_operator_is_symmetric() {
        let g = p3();
        let x = [0.3, -1.2, 2.5];
        assert_eq!(g.apply(&x, false), g.apply(&x, true));
    }

    #[test]
    fn add_then_remove_restores() {
        let g = p3();
        let added = g.with_updates(&[EdgePair::new(0, 2, 1.0)]).unwrap();
        assert_eq!(added.nnz(), 6);
        let back = added.with_updates(&[EdgePair::new(2, 0, -1.0)]).unwrap();
        assert_eq!(back, g);
    }
}
