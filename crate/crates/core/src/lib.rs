//! Sensitivity analysis of matrix-exponential communicability measures.
//!
//! The crate computes total communicability `1ᵀ exp(A) 1`, subgraph centrality and the Estrada
//! index of a (directed, weighted) network together with their sensitivities to edge and node
//! modifications. Sensitivities with respect to *all* edges are entries of a single Fréchet
//! derivative `L_exp(Aᵀ, b cᵀ)`, which [`krylov`] approximates in low-rank factored form; the
//! largest entries of a masked version of that factorization are located by the implicit
//! estimator in [`maxelem`] without ever forming an `n × n` matrix. [`bounds`] provides a priori
//! decay bounds driven by geodesic distances.
//!
//! The numerical core is generic over the [`Scalar`] type. The aliases below fix it to `f64`,
//! which is what the command-line tool uses.

pub mod bounds;
pub mod dense;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod krylov;
pub mod maxelem;
mod scalar;
pub mod sensitivity;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Graph = graph::Graph<f64>;
pub type Graph32 = graph::Graph<f32>;
pub type DenseMatrix = dense::DenseMatrix<f64>;
pub type DenseMatrix32 = dense::DenseMatrix<f32>;
pub type LowRankFrechet = krylov::LowRankFrechet<f64>;
pub type EdgePair = graph::EdgePair<f64>;
pub type SensitivityReport = sensitivity::SensitivityReport<f64>;
pub type BoundContext = bounds::BoundContext<f64>;
pub type BoundResult = bounds::BoundResult<f64>;
