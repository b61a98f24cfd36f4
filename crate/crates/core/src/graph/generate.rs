use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Random geometric graph: `n` uniform points in the unit square, an edge between every pair
/// closer than `d`. Deterministic for a fixed seed.
pub fn random_geometric_graph<T: Scalar>(n: usize, d: f64, seed: u64) -> Result<Graph<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("random geometric graph needs n >= 1".into()));
    }
    if !(d > 0.0 && d <= std::f64::consts::SQRT_2) {
        return Err(Error::InvalidArgument(format!("distance threshold {d} outside (0, sqrt 2]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();

    // bucket into cells of side >= d so only neighbouring cells need checking
    let cells = ((1.0 / d).floor() as usize).clamp(1, 4096);
    let cell_of = |x: f64| ((x * cells as f64) as usize).min(cells - 1);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
    for (k, &(x, y)) in pts.iter().enumerate() {
        buckets[cell_of(y) * cells + cell_of(x)].push(k);
    }
    let d2 = d * d;
    let mut pairs = Vec::new();
    for (k, &(x, y)) in pts.iter().enumerate() {
        let (cx, cy) = (cell_of(x), cell_of(y));
        for gy in cy.saturating_sub(1)..=(cy + 1).min(cells - 1) {
            for gx in cx.saturating_sub(1)..=(cx + 1).min(cells - 1) {
                for &l in &buckets[gy * cells + gx] {
                    if l > k {
                        let (dx, dy) = (pts[l].0 - x, pts[l].1 - y);
                        if dx * dx + dy * dy < d2 {
                            pairs.push((k, l));
                        }
                    }
                }
            }
        }
    }
    Graph::undirected_from_pairs(n, &pairs)
}

/// Threshold `d` for which the expected mean degree of a random geometric graph on `n` points
/// is `mean_degree`, accounting for the boundary of the unit square
/// (`P(dist < d) = πd² − 8d³/3 + d⁴/2`).
pub fn threshold_for_mean_degree(n: usize, mean_degree: f64) -> f64 {
    let target = (mean_degree / (n.max(2) - 1) as f64).min(1.0);
    let prob = |d: f64| std::f64::consts::PI * d * d - 8.0 / 3.0 * d.powi(3) + 0.5 * d.powi(4);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if prob(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
