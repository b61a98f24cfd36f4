//! Bundled example networks.

use crate::error::Result;
use crate::graph::{load_labels, load_matrix_market, Graph};
use crate::scalar::Scalar;

/// Marriage ties between 15 Florentine families (Padgett), pattern-symmetric MatrixMarket.
pub const FLORENTINE_MTX: &str = include_str!("../fixtures/florentine.mtx");
/// The same network as a 1-based edge list.
pub const FLORENTINE_EDGES: &str = include_str!("../fixtures/florentine.edges");
/// Family names; line `k` names node `k` (alphabetical).
pub const FLORENTINE_LABELS: &str = include_str!("../fixtures/florentine.labels");

pub fn florentine<T: Scalar>() -> Result<(Graph<T>, Vec<String>)> {
    let g = load_matrix_market(FLORENTINE_MTX.as_bytes())?.graph;
    Ok((g, load_labels(FLORENTINE_LABELS.as_bytes())?))
}

/// Node id of a Florentine family.
pub fn florentine_id(name: &str) -> Option<usize> {
    FLORENTINE_LABELS.lines().position(|l| l.trim() == name)
}

/// Synthetic transport-like network with a single high-degree hub.
///
/// A 10 × 10 grid (node `10 r + c`), a complete bipartite `K₄,₄` hanging off eight boundary
/// nodes, and three diagonal shortcuts raising the interior node 55 to degree 7, the maximum.
/// The bipartite block pins the spectrum to contain `[−4, 4]`. Returns the graph and the hub.
pub fn london_like<T: Scalar>() -> Result<(Graph<T>, usize)> {
    let side = 10;
    let mut pairs = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let v = r * side + c;
            if c + 1 < side {
                pairs.push((v, v + 1));
            }
            if r + 1 < side {
                pairs.push((v, v + side));
            }
        }
    }
    let hub = 55;
    pairs.extend([(hub, 44), (hub, 46), (hub, 64)]);
    let base = side * side;
    for a in 0..4 {
        for b in 4..8 {
            pairs.push((base + a, base + b));
        }
    }
    for (k, &anchor) in [0, 9, 90, 99, 4, 40, 49, 94].iter().enumerate() {
        pairs.push((base + k, anchor));
    }
    Ok((Graph::undirected_from_pairs(base + 8, &pairs)?, hub))
}
