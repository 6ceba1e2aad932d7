//! PageRank, CheiRank and reduced Google matrix analysis of large sparse directed networks.
//!
//! The reduced Google matrix `G_R` of a node subset is an `N_r x N_r` column-stochastic
//! matrix that keeps every indirect path through the rest of the network. It is computed
//! without materializing `G` and split into direct links (`G_rr`), a rank-one projector
//! part (`G_pr`) and hidden links (`G_qr`).
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! the common `f64` instantiation.
//!
//! ```
//! use grm_core::{reduce, DirectedGraph, Google, ReduceOptions, SubsetSpec};
//!
//! let g = DirectedGraph::from_edges(2, [(0, 1), (1, 0)]).unwrap();
//! let op = Google::new(&g, 0.85).unwrap();
//! let subset = SubsetSpec::new(vec![0], 2).unwrap();
//! let dec = reduce(&op, &subset, &ReduceOptions::default()).unwrap();
//! assert!((dec.g_r[(0, 0)] - 1.0).abs() < 1e-15);
//! ```

// `!(x > 0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dense;
pub mod error;
pub mod google;
pub mod graph;
pub mod reduced;
pub mod scalar;
pub mod spectral;
pub mod synth;

pub use analysis::{
    density_grid, kg_rank, local_ranks, renormalize_columns, stationary_ranking, top_links_network,
    DensityGrid, Direction, KgRanking, LayeredNetwork, LinkEdge, LocalRankTable,
};
pub use dense::{leading_eigenpair, rank_one_check, solve, DenseMatrix};
pub use error::{Error, Result};
pub use google::{Block, GoogleOperator, Side, DEFAULT_ALPHA};
pub use graph::{load_edge_list, DirectedGraph, EdgeFormat, Slot, SubsetSpec};
pub use reduced::{
    compute_gpr, compute_gqr, extract_grr, oracle_reduce, reduce, ReduceOptions,
    ReducedDecomposition, SeriesOptions, SeriesStats, Weights,
};
pub use scalar::Scalar;
pub use spectral::{
    cheirank, pagerank, scatter_eigenpair, PowerOptions, RankKind, RankVector, ScatterEigenpair,
};

pub type Matrix = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
pub type Google<'g> = GoogleOperator<'g, f64>;
pub type Google32<'g> = GoogleOperator<'g, f32>;
pub type Ranking = RankVector<f64>;
pub type Ranking32 = RankVector<f32>;
pub type Decomposition = ReducedDecomposition<f64>;
pub type Decomposition32 = ReducedDecomposition<f32>;
