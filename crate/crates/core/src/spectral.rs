//! Power-iteration eigensolvers: global PageRank / CheiRank and the leading
//! eigenpair of the scattering block `G_ss`.

use crate::error::{Error, Result};
use crate::google::{Block, GoogleOperator};
use crate::graph::{DirectedGraph, SubsetSpec};
use crate::scalar::{diff_norm1, dot, scale, sum, Scalar};

/// Stopping rule shared by the power iterations: stop once the 1-norm of the change
/// between successive normalized iterates drops below `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for PowerOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-12),
            max_iter: 10_000,
        }
    }
}

impl<T: Scalar> PowerOptions<T> {
    pub fn new(tol: T, max_iter: usize) -> Self {
        Self { tol, max_iter }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero()) || self.max_iter == 0 {
            return Err(Error::InvalidParameter(format!(
                "tol must be > 0 and max_iter >= 1 (got {}, {})",
                self.tol, self.max_iter
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankKind {
    PageRank,
    CheiRank,
}

/// Stationary probability vector with its descending rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector<T> {
    pub p: Vec<T>,
    /// Node ids sorted by descending probability, ties by ascending id.
    pub order: Vec<usize>,
    pub kind: RankKind,
    pub residual: T,
    pub iterations: usize,
}

impl<T: Scalar> RankVector<T> {
    fn new(p: Vec<T>, kind: RankKind, residual: T, iterations: usize) -> Self {
        let order = descending_order(&p);
        Self {
            p,
            order,
            kind,
            residual,
            iterations,
        }
    }

    /// 1-based rank index (K or K*) of every node.
    pub fn ranks(&self) -> Vec<usize> {
        let mut k = vec![0; self.p.len()];
        for (pos, &node) in self.order.iter().enumerate() {
            k[node] = pos + 1;
        }
        k
    }
}

/// Indices sorted by descending value; equal values keep ascending index order.
pub fn descending_order<T: Scalar>(values: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Iterations without a new smallest residual before polishing gives up.
const POLISH_PATIENCE: usize = 50;

/// Iterates `x <- step(x) / sum(step(x))` from `start` until the 1-norm change is below `tol`.
/// With `polish`, iteration then continues until the change has not reached a new minimum
/// for [`POLISH_PATIENCE`] steps (or `max_iter` is hit) and the best iterate is returned.
/// The change need not shrink monotonically, so a single uptick does not end polishing.
/// Returns the iterate, its normalization factor, its residual and the step count.
fn power_iterate<T: Scalar>(
    what: &'static str,
    start: Vec<T>,
    opts: &PowerOptions<T>,
    polish: bool,
    mut step: impl FnMut(&[T]) -> Result<Vec<T>>,
) -> Result<(Vec<T>, T, T, usize)> {
    opts.validate()?;
    let mut x = start;
    let mut best: Option<(Vec<T>, T, T, usize)> = None;
    let mut residual = T::infinity();
    let mut converged = false;
    for it in 1..=opts.max_iter {
        let mut y = step(&x)?;
        let s = sum(&y);
        if !(s > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "{what}: iterate collapsed to zero"
            )));
        }
        scale(&mut y, T::one() / s);
        residual = diff_norm1(&y, &x);
        x = y;
        converged |= residual < opts.tol;
        if !converged {
            continue;
        }
        if !polish || residual == T::zero() {
            return Ok((x, s, residual, it));
        }
        match &best {
            Some((_, _, r, at)) if !(residual < *r) => {
                if it - at >= POLISH_PATIENCE {
                    break;
                }
            }
            _ => best = Some((x.clone(), s, residual, it)),
        }
    }
    match best {
        Some((x, s, r, at)) => Ok((x, s, r, at)),
        None => Err(Error::NotConverged {
            what,
            iterations: opts.max_iter,
            residual: residual.as_f64(),
        }),
    }
}

/// PageRank of `G`: power iteration from the uniform vector.
pub fn pagerank<T: Scalar>(
    op: &GoogleOperator<'_, T>,
    opts: &PowerOptions<T>,
) -> Result<RankVector<T>> {
    let n = op.n();
    let start = vec![T::one() / T::from_count(n); n];
    let (p, _, residual, iterations) =
        power_iterate("pagerank", start, opts, false, |x| op.apply(x))?;
    Ok(RankVector::new(p, RankKind::PageRank, residual, iterations))
}

/// CheiRank: PageRank of the network with all links inverted.
pub fn cheirank<T: Scalar>(
    graph: &DirectedGraph,
    alpha: T,
    opts: &PowerOptions<T>,
) -> Result<RankVector<T>> {
    let inverted = graph.inverted();
    let op = GoogleOperator::new(&inverted, alpha)?;
    let mut rv = pagerank(&op, opts)?;
    rv.kind = RankKind::CheiRank;
    Ok(rv)
}

/// Leading eigenvalue and eigenvectors of `G_ss`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterEigenpair<T> {
    /// `1 - one_minus_lambda_c`.
    pub lambda_c: T,
    /// `E_r^T G_rs psi_R`, accurate even when `lambda_c` is close to one.
    pub one_minus_lambda_c: T,
    /// Eigenvalue estimate from the right power iteration, `E_s^T G_ss psi_R`.
    pub lambda_power: T,
    /// Right eigenvector over scattering nodes, `E_s^T psi_R = 1`.
    pub psi_r: Vec<T>,
    /// Left eigenvector over scattering nodes, `psi_L^T psi_R = 1`.
    pub psi_l: Vec<T>,
    pub residual_r: T,
    pub residual_l: T,
    pub iterations_r: usize,
    pub iterations_l: usize,
}

impl<T: Scalar> ScatterEigenpair<T> {
    /// `Q_c x = x - psi_R (psi_L^T x)`, in place.
    pub fn project_out(&self, x: &mut [T]) {
        let c = dot(&self.psi_l, x);
        for (xi, r) in x.iter_mut().zip(&self.psi_r) {
            *xi -= *r * c;
        }
    }
}

/// Leading eigenpair of the scattering block by right and left power iteration,
/// both started from the uniform vector.
///
/// Once an iteration meets `opts.tol` it is polished until its residual stops
/// decreasing: the deflated series amplifies eigenvector error, so `G_R` needs these
/// vectors at rounding accuracy rather than at `tol`.
pub fn scatter_eigenpair<T: Scalar>(
    op: &GoogleOperator<'_, T>,
    subset: &SubsetSpec,
    opts: &PowerOptions<T>,
) -> Result<ScatterEigenpair<T>> {
    let ns = subset.scattering_len();
    if ns == 0 {
        return Err(Error::InvalidSubset("scattering block is empty".into()));
    }
    let uniform = vec![T::one() / T::from_count(ns); ns];

    let (psi_r, lambda_power, residual_r, iterations_r) = power_iterate(
        "right eigenvector of G_ss",
        uniform.clone(),
        opts,
        true,
        |x| op.apply_block(subset, Block::Ss, x),
    )?;
    let (mut psi_l, _, residual_l, iterations_l) =
        power_iterate("left eigenvector of G_ss", uniform, opts, true, |x| {
            op.apply_block_transpose(subset, Block::Ss, x)
        })?;
    let overlap = dot(&psi_l, &psi_r);
    scale(&mut psi_l, T::one() / overlap);

    let one_minus_lambda_c = sum(&op.apply_block(subset, Block::Rs, &psi_r)?);
    Ok(ScatterEigenpair {
        lambda_c: T::one() - one_minus_lambda_c,
        one_minus_lambda_c,
        lambda_power,
        psi_r,
        psi_l,
        residual_r,
        residual_l,
        iterations_r,
        iterations_l,
    })
}
