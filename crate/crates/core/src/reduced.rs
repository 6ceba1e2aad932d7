//! Reduced Google matrix of a node subset and its split into direct, projector and
//! hidden-link components:
//!
//! ```text
//! G_R  = G_rr + G_rs (1 - G_ss)^-1 G_sr = G_rr + G_pr + G_qr
//! G_pr = G_rs P_c G_sr / (1 - lambda_c),          P_c = psi_R psi_L^T
//! G_qr = G_rs [Q_c sum_l (Q_c G_ss Q_c)^l] G_sr,  Q_c = 1 - P_c
//! ```
//!
//! Only `G_rr` is read elementwise; every other product goes through the sparse
//! block operator, so memory stays O(N + edges + N_r^2).

use rayon::prelude::*;

use crate::dense::{solve, DenseMatrix, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::google::{Block, GoogleOperator};
use crate::graph::SubsetSpec;
use crate::scalar::{norm1, Scalar};
use crate::spectral::{scatter_eigenpair, PowerOptions, ScatterEigenpair};

/// Truncation rule for the deflated series: a column stops once the estimated 1-norm of
/// the unsummed remainder drops below `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions<T> {
    pub tol: T,
    pub max_terms: usize,
}

impl<T: Scalar> Default for SeriesOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-13),
            max_terms: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReduceOptions<T> {
    pub eigen: PowerOptions<T>,
    pub series: SeriesOptions<T>,
}

impl<T: Scalar> Default for ReduceOptions<T> {
    fn default() -> Self {
        Self {
            eigen: PowerOptions::default(),
            series: SeriesOptions::default(),
        }
    }
}

/// Convergence record of one `G_qr` column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStats<T> {
    /// Number of series terms summed, including `l = 0`.
    pub terms: usize,
    /// Estimated 1-norm of the neglected remainder of the series.
    pub tail: T,
    /// Observed geometric decay of `||v_l||_1` over the last few terms; a proxy for
    /// the second eigenvalue of `G_ss`. Zero when the series ended after one term.
    pub decay_rate: T,
}

/// Component weights: entry sums divided by `N_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights<T> {
    pub rr: T,
    pub pr: T,
    pub qr: T,
    /// Diagonal part of `qr`.
    pub qrd: T,
    /// Off-diagonal part of `qr`.
    pub qrnd: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDecomposition<T> {
    pub subset: SubsetSpec,
    /// Rows are targets, columns sources, both in subset order.
    pub g_r: DenseMatrix<T>,
    pub g_rr: DenseMatrix<T>,
    pub g_pr: DenseMatrix<T>,
    pub g_qr: DenseMatrix<T>,
    /// `G_rs psi_R`.
    pub psi_tilde_r: Vec<T>,
    /// `psi_L^T G_sr`.
    pub psi_tilde_l: Vec<T>,
    pub eigen: ScatterEigenpair<T>,
    pub weights: Weights<T>,
    /// Total magnitude of the negative entries of `G_qr`.
    pub negative_weight: T,
    pub series: Vec<SeriesStats<T>>,
}

impl<T: Scalar> ReducedDecomposition<T> {
    pub fn lambda_c(&self) -> T {
        self.eigen.lambda_c
    }

    pub fn one_minus_lambda_c(&self) -> T {
        self.eigen.one_minus_lambda_c
    }

    /// `G_qr` with its diagonal removed (hidden links between distinct nodes).
    pub fn g_qrnd(&self) -> DenseMatrix<T> {
        self.g_qr.without_diagonal()
    }
}

/// Direct block `G_rr`, read entry by entry.
pub fn extract_grr<T: Scalar>(
    op: &GoogleOperator<'_, T>,
    subset: &SubsetSpec,
) -> Result<DenseMatrix<T>> {
    let m = subset.members();
    let mut out = DenseMatrix::zeros(m.len(), m.len());
    for (a, &i) in m.iter().enumerate() {
        for (b, &j) in m.iter().enumerate() {
            out[(a, b)] = op.element(i, j)?;
        }
    }
    Ok(out)
}

/// Rank-one projector component `psi~_R psi~_L^T / (1 - lambda_c)`.
/// Returns the matrix together with `psi~_R` and `psi~_L`.
pub fn compute_gpr<T: Scalar>(
    op: &GoogleOperator<'_, T>,
    subset: &SubsetSpec,
    eig: &ScatterEigenpair<T>,
) -> Result<(DenseMatrix<T>, Vec<T>, Vec<T>)> {
    if !(eig.one_minus_lambda_c > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "1 - lambda_c must be positive, got {}",
            eig.one_minus_lambda_c
        )));
    }
    let psi_tilde_r = op.apply_block(subset, Block::Rs, &eig.psi_r)?;
    let psi_tilde_l = op.apply_block_transpose(subset, Block::Sr, &eig.psi_l)?;
    let nr = subset.reduced_len();
    let inv = T::one() / eig.one_minus_lambda_c;
    let g_pr = DenseMatrix::from_fn(nr, nr, |i, j| psi_tilde_r[i] * psi_tilde_l[j] * inv);
    Ok((g_pr, psi_tilde_r, psi_tilde_l))
}

struct ColumnOutcome<T> {
    column: Vec<T>,
    stats: SeriesStats<T>,
}

fn gqr_column<T: Scalar>(
    op: &GoogleOperator<'_, T>,
    subset: &SubsetSpec,
    eig: &ScatterEigenpair<T>,
    opts: &SeriesOptions<T>,
    j: usize,
) -> Result<std::result::Result<ColumnOutcome<T>, T>> {
    let nr = subset.reduced_len();
    let mut unit = vec![T::zero(); nr];
    unit[j] = T::one();
    let mut v = op.apply_block(subset, Block::Sr, &unit)?;
    eig.project_out(&mut v);
    let mut acc = v.clone();
    let mut norms = vec![norm1(&v)];
    let mut tail = remainder(&norms);
    while !(tail < opts.tol) {
        if norms.len() >= opts.max_terms {
            return Ok(Err(tail));
        }
        eig.project_out(&mut v);
        v = op.apply_block(subset, Block::Ss, &v)?;
        eig.project_out(&mut v);
        for (a, x) in acc.iter_mut().zip(&v) {
            *a += *x;
        }
        norms.push(norm1(&v));
        tail = remainder(&norms);
    }
    eig.project_out(&mut acc);
    let column = op.apply_block(subset, Block::Rs, &acc)?;

    let terms = norms.len();
    let window = (terms - 1).min(10);
    let decay_rate = if window == 0 || norms[terms - 1 - window] == T::zero() {
        T::zero()
    } else {
        (norms[terms - 1] / norms[terms - 1 - window]).powf(T::one() / T::from_count(window))
    };
    Ok(Ok(ColumnOutcome {
        column,
        stats: SeriesStats {
            terms,
            tail,
            decay_rate,
        },
    }))
}

/// Estimated 1-norm of the terms not yet summed, `||v_l|| rho / (1 - rho)`, with `rho`
/// the largest of the last three term ratios so oscillating decay is not underestimated.
fn remainder<T: Scalar>(norms: &[T]) -> T {
    let last = norms[norms.len() - 1];
    if last == T::zero() {
        return T::zero();
    }
    if norms.len() < 2 {
        return T::infinity();
    }
    let from = norms.len().saturating_sub(4);
    let rho = norms[from..]
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(T::zero(), T::max);
    if rho < T::one() {
        last * rho / (T::one() - rho)
    } else {
        T::infinity()
    }
}

/// Hidden-link component `G_qr`, one independent deflated series per column.
///
/// Columns are evaluated on the ambient rayon pool; each column's arithmetic is
/// sequential, so the result does not depend on the number of threads.
pub fn compute_gqr<T: Scalar>(
    op: &GoogleOperator<'_, T>,
    subset: &SubsetSpec,
    eig: &ScatterEigenpair<T>,
    opts: &SeriesOptions<T>,
) -> Result<(DenseMatrix<T>, Vec<SeriesStats<T>>)> {
    if !(opts.tol > T::zero()) || opts.max_terms == 0 {
        return Err(Error::InvalidParameter(
            "series tol must be > 0 and max_terms >= 1".into(),
        ));
    }
    let nr = subset.reduced_len();
    let outcomes: Vec<_> = (0..nr)
        .into_par_iter()
        .map(|j| gqr_column(op, subset, eig, opts, j))
        .collect::<Result<_>>()?;

    let worst = outcomes
        .iter()
        .enumerate()
        .filter_map(|(j, o)| o.as_ref().err().map(|t| (j, *t)))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    if let Some((column, tail)) = worst {
        return Err(Error::SeriesNotConverged {
            column,
            max_terms: opts.max_terms,
            tail: tail.as_f64(),
        });
    }
    let mut columns = Vec::with_capacity(nr);
    let mut stats = Vec::with_capacity(nr);
    for o in outcomes.into_iter().flatten() {
        columns.push(o.column);
        stats.push(o.stats);
    }
    Ok((DenseMatrix::from_columns(nr, &columns), stats))
}

/// Full decomposition `G_R = G_rr + G_pr + G_qr` with weights and diagnostics.
pub fn reduce<T: Scalar>(
    op: &GoogleOperator<'_, T>,
    subset: &SubsetSpec,
    opts: &ReduceOptions<T>,
) -> Result<ReducedDecomposition<T>> {
    let eigen = scatter_eigenpair(op, subset, &opts.eigen)?;
    let g_rr = extract_grr(op, subset)?;
    let (g_pr, psi_tilde_r, psi_tilde_l) = compute_gpr(op, subset, &eigen)?;
    let (g_qr, series) = compute_gqr(op, subset, &eigen, &opts.series)?;
    let g_r = g_rr.add(&g_pr).add(&g_qr);

    let nr = T::from_count(subset.reduced_len());
    let qrd = g_qr.trace() / nr;
    let qr = g_qr.sum() / nr;
    let weights = Weights {
        rr: g_rr.sum() / nr,
        pr: g_pr.sum() / nr,
        qr,
        qrd,
        qrnd: qr - qrd,
    };
    let negative_weight = g_qr
        .as_slice()
        .iter()
        .filter(|v| **v < T::zero())
        .fold(T::zero(), |a, v| a - *v);

    Ok(ReducedDecomposition {
        subset: subset.clone(),
        g_r,
        g_rr,
        g_pr,
        g_qr,
        psi_tilde_r,
        psi_tilde_l,
        eigen,
        weights,
        negative_weight,
        series,
    })
}

/// Reference `G_R = G_rr + G_rs (1 - G_ss)^-1 G_sr` by dense elimination.
/// Refuses graphs with more than [`DENSE_LIMIT`] nodes.
pub fn oracle_reduce<T: Scalar>(
    op: &GoogleOperator<'_, T>,
    subset: &SubsetSpec,
) -> Result<DenseMatrix<T>> {
    if op.n() > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n: op.n(),
            limit: DENSE_LIMIT,
        });
    }
    let g = op.dense()?;
    let (r, s) = (subset.members(), subset.complement());
    let g_rr = g.select(r, r);
    let g_rs = g.select(r, s);
    let g_sr = g.select(s, r);
    let a = DenseMatrix::identity(s.len()).sub(&g.select(s, s));
    let x = solve(&a, &g_sr)?;
    Ok(g_rr.add(&g_rs.matmul(&x)))
}
