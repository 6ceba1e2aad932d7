//! Matrix-free Google matrix `G = alpha * S + (1 - alpha) / N`.
//!
//! `S_ij = 1 / k_out(j)` when `j` links to `i`, and `S_ij = 1 / N` for every `i`
//! when `j` has no out-links. Dangling columns are never densified: their
//! contribution is a single scalar added to every row.

use crate::dense::{DenseMatrix, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, Slot, SubsetSpec};
use crate::scalar::Scalar;

pub const DEFAULT_ALPHA: f64 = 0.85;

/// One side of the reduced/scattering partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Reduced,
    Scattering,
}

impl Side {
    fn len(self, subset: &SubsetSpec) -> usize {
        match self {
            Side::Reduced => subset.reduced_len(),
            Side::Scattering => subset.scattering_len(),
        }
    }

    fn nodes(self, subset: &SubsetSpec) -> &[usize] {
        match self {
            Side::Reduced => subset.members(),
            Side::Scattering => subset.complement(),
        }
    }

    /// Position of `node` inside this side, if it belongs here.
    #[inline]
    fn position(self, subset: &SubsetSpec, node: usize) -> Option<usize> {
        match (self, subset.slot(node)) {
            (Side::Reduced, Slot::Reduced(p)) | (Side::Scattering, Slot::Scattering(p)) => {
                Some(p as usize)
            }
            _ => None,
        }
    }
}

/// A block of `G` relative to a subset: `Rs` maps scattering sources to reduced targets, etc.
/// The first letter is the target (row) side, the second the source (column) side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Rr,
    Rs,
    Sr,
    Ss,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::Rr, Block::Rs, Block::Sr, Block::Ss];

    pub fn target(self) -> Side {
        match self {
            Block::Rr | Block::Rs => Side::Reduced,
            Block::Sr | Block::Ss => Side::Scattering,
        }
    }

    pub fn source(self) -> Side {
        match self {
            Block::Rr | Block::Sr => Side::Reduced,
            Block::Rs | Block::Ss => Side::Scattering,
        }
    }
}

/// Google matrix of a graph with damping factor `alpha`.
#[derive(Debug, Clone)]
pub struct GoogleOperator<'g, T> {
    graph: &'g DirectedGraph,
    alpha: T,
    inv_n: T,
    /// `1 / k_out(j)`, zero for dangling nodes.
    inv_out: Vec<T>,
    dangling: Vec<u32>,
}

impl<'g, T: Scalar> GoogleOperator<'g, T> {
    pub fn new(graph: &'g DirectedGraph, alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        let n = graph.node_count();
        let mut inv_out = Vec::with_capacity(n);
        let mut dangling = Vec::new();
        for j in 0..n {
            match graph.out_degree(j) {
                0 => {
                    inv_out.push(T::zero());
                    dangling.push(j as u32);
                }
                k => inv_out.push(T::one() / T::from_count(k)),
            }
        }
        Ok(Self {
            graph,
            alpha,
            inv_n: T::one() / T::from_count(n),
            inv_out,
            dangling,
        })
    }

    /// Operator with the conventional damping factor 0.85.
    pub fn with_default_alpha(graph: &'g DirectedGraph) -> Result<Self> {
        Self::new(graph, T::lit(DEFAULT_ALPHA))
    }

    pub fn graph(&self) -> &'g DirectedGraph {
        self.graph
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.graph.node_count()
    }

    fn is_dangling(&self, j: usize) -> bool {
        self.inv_out[j] == T::zero()
    }

    /// Constant added to every row: dangling mass plus teleportation.
    #[inline]
    fn uniform_part(&self, dangling_sum: T, total: T) -> T {
        self.alpha * dangling_sum * self.inv_n + (T::one() - self.alpha) * total * self.inv_n
    }

    /// `y = G x`.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        let mut y = vec![T::zero(); self.n()];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }

    pub fn apply_into(&self, x: &[T], y: &mut [T]) -> Result<()> {
        let n = self.n();
        check_len(n, x.len())?;
        check_len(n, y.len())?;
        let total = x.iter().copied().sum();
        let dangling_sum = self.dangling.iter().map(|&j| x[j as usize]).sum();
        let base = self.uniform_part(dangling_sum, total);
        for (i, yi) in y.iter_mut().enumerate() {
            let acc = self.graph.in_links(i).iter().fold(T::zero(), |acc, &j| {
                acc + x[j as usize] * self.inv_out[j as usize]
            });
            *yi = self.alpha * acc + base;
        }
        Ok(())
    }

    /// `y^T = x^T G`, i.e. `y_j = sum_i x_i G_ij`.
    pub fn apply_transpose(&self, x: &[T]) -> Result<Vec<T>> {
        check_len(self.n(), x.len())?;
        let total: T = x.iter().copied().sum();
        Ok((0..self.n())
            .map(|j| self.transpose_entry(j, total, |i| Some(x[i])))
            .collect())
    }

    #[inline]
    fn transpose_entry(&self, j: usize, total: T, value: impl Fn(usize) -> Option<T>) -> T {
        if self.is_dangling(j) {
            return total * self.inv_n;
        }
        let linked = self
            .graph
            .out_links(j)
            .iter()
            .filter_map(|&i| value(i as usize))
            .fold(T::zero(), |acc, v| acc + v);
        self.alpha * linked * self.inv_out[j] + (T::one() - self.alpha) * total * self.inv_n
    }

    /// Exact entry `G_ij` (row = target `i`, column = source `j`).
    pub fn element(&self, i: usize, j: usize) -> Result<T> {
        let n = self.n();
        for id in [i, j] {
            if id >= n {
                return Err(Error::NodeOutOfRange { id, n });
            }
        }
        Ok(self.element_unchecked(i, j))
    }

    fn element_unchecked(&self, i: usize, j: usize) -> T {
        let teleport = (T::one() - self.alpha) * self.inv_n;
        if self.is_dangling(j) {
            self.alpha * self.inv_n + teleport
        } else if self.graph.has_edge(j, i) {
            self.alpha * self.inv_out[j] + teleport
        } else {
            teleport
        }
    }

    /// Applies one block of `G` to `x`, which is indexed in subset order over the
    /// block's source side; the result is indexed over its target side.
    pub fn apply_block(&self, subset: &SubsetSpec, block: Block, x: &[T]) -> Result<Vec<T>> {
        self.check_subset(subset)?;
        check_len(block.source().len(subset), x.len())?;
        let src = block.source();
        let total: T = x.iter().copied().sum();
        let dangling_sum = self
            .dangling
            .iter()
            .filter_map(|&j| src.position(subset, j as usize).map(|p| x[p]))
            .sum();
        let base = self.uniform_part(dangling_sum, total);
        Ok(block
            .target()
            .nodes(subset)
            .iter()
            .map(|&i| {
                let acc = self.graph.in_links(i).iter().fold(T::zero(), |acc, &j| {
                    match src.position(subset, j as usize) {
                        Some(p) => acc + x[p] * self.inv_out[j as usize],
                        None => acc,
                    }
                });
                self.alpha * acc + base
            })
            .collect())
    }

    /// Transposed block product: `y^T = x^T G_block`, with `x` over the block's target
    /// side and `y` over its source side.
    pub fn apply_block_transpose(
        &self,
        subset: &SubsetSpec,
        block: Block,
        x: &[T],
    ) -> Result<Vec<T>> {
        self.check_subset(subset)?;
        let dst = block.target();
        check_len(dst.len(subset), x.len())?;
        let total: T = x.iter().copied().sum();
        Ok(block
            .source()
            .nodes(subset)
            .iter()
            .map(|&j| self.transpose_entry(j, total, |i| dst.position(subset, i).map(|p| x[p])))
            .collect())
    }

    /// Fully materialized `G`; only for small graphs.
    pub fn dense(&self) -> Result<DenseMatrix<T>> {
        let n = self.n();
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge {
                n,
                limit: DENSE_LIMIT,
            });
        }
        Ok(DenseMatrix::from_fn(n, n, |i, j| {
            self.element_unchecked(i, j)
        }))
    }

    fn check_subset(&self, subset: &SubsetSpec) -> Result<()> {
        check_len(self.n(), subset.node_count())
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
