//! Local rankings inside a subset, the PageRank/CheiRank density grid, and
//! friend/follower subnetworks built from the strongest links of a reduced matrix.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::SubsetSpec;
use crate::reduced::ReducedDecomposition;
use crate::scalar::{diff_norm1, sum, Scalar};
use crate::spectral::{descending_order, PowerOptions, RankVector};

/// Per-member ranking table in subset order.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRankTable<T> {
    pub members: Vec<usize>,
    pub pagerank: Vec<T>,
    pub cheirank: Vec<T>,
    /// Local PageRank index, 1..=N_r.
    pub k: Vec<usize>,
    /// Local CheiRank index, 1..=N_r.
    pub k_star: Vec<usize>,
    /// Rank from the renormalized direct + hidden link matrix, once computed.
    pub k_g: Option<Vec<usize>>,
}

/// 1-based positions of `values` under a descending sort with ties by index.
fn local_positions<T: Scalar>(values: &[T]) -> Vec<usize> {
    let mut k = vec![0; values.len()];
    for (pos, idx) in descending_order(values).into_iter().enumerate() {
        k[idx] = pos + 1;
    }
    k
}

pub fn local_ranks<T: Scalar>(
    pagerank: &RankVector<T>,
    cheirank: &RankVector<T>,
    subset: &SubsetSpec,
) -> Result<LocalRankTable<T>> {
    let n = pagerank.p.len().min(cheirank.p.len());
    let members = subset.members().to_vec();
    if let Some(&id) = members.iter().find(|&&m| m >= n) {
        return Err(Error::NodeOutOfRange { id, n });
    }
    // Ties go to the smaller node id, not the earlier subset position.
    let by_id = |values: &[T]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..members.len()).collect();
        idx.sort_by(|&a, &b| {
            values[members[b]]
                .partial_cmp(&values[members[a]])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(members[a].cmp(&members[b]))
        });
        let mut k = vec![0; members.len()];
        for (pos, i) in idx.into_iter().enumerate() {
            k[i] = pos + 1;
        }
        k
    };
    Ok(LocalRankTable {
        k: by_id(&pagerank.p),
        k_star: by_id(&cheirank.p),
        pagerank: members.iter().map(|&m| pagerank.p[m]).collect(),
        cheirank: members.iter().map(|&m| cheirank.p[m]).collect(),
        members,
        k_g: None,
    })
}

/// Outcome of the K_G ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct KgRanking<T> {
    /// Stationary vector of the renormalized matrix, in subset order.
    pub p: Vec<T>,
    /// 1-based K_G per subset position.
    pub k_g: Vec<usize>,
    pub iterations: usize,
}

/// Column-stochastic version of `m`: negatives clamped to zero, each column divided by
/// its sum, columns summing to zero replaced by the uniform column.
pub fn renormalize_columns<T: Scalar>(m: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = m.rows();
    let clamped = m.map(|v| v.max(T::zero()));
    let sums = clamped.column_sums();
    let uniform = T::one() / T::from_count(n);
    DenseMatrix::from_fn(n, m.cols(), |i, j| {
        if sums[j] > T::zero() {
            clamped[(i, j)] / sums[j]
        } else {
            uniform
        }
    })
}

/// Stationary vector of a small column-stochastic matrix by undamped power iteration
/// from the uniform vector, and the induced ranking (ties by ascending position).
pub fn stationary_ranking<T: Scalar>(
    m: &DenseMatrix<T>,
    opts: &PowerOptions<T>,
) -> Result<KgRanking<T>> {
    let n = m.rows();
    if !m.is_square() || n == 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m.cols(),
        });
    }
    let mut x = vec![T::one() / T::from_count(n); n];
    let mut residual = T::infinity();
    for it in 1..=opts.max_iter {
        let mut y = m.mul_vec(&x);
        let s = sum(&y);
        for v in y.iter_mut() {
            *v /= s;
        }
        residual = diff_norm1(&y, &x);
        x = y;
        if residual < opts.tol {
            let k_g = local_positions(&x);
            return Ok(KgRanking {
                p: x,
                k_g,
                iterations: it,
            });
        }
    }
    Err(Error::NotConverged {
        what: "K_G ranking",
        iterations: opts.max_iter,
        residual: residual.as_f64(),
    })
}

/// K_G: ranking from `G_rr + G_qr` without its diagonal, renormalized per column.
pub fn kg_rank<T: Scalar>(
    dec: &ReducedDecomposition<T>,
    opts: &PowerOptions<T>,
) -> Result<KgRanking<T>> {
    let m = dec.g_rr.add(&dec.g_qrnd());
    stationary_ranking(&renormalize_columns(&m), opts)
}

/// Node counts on a `bins x bins` grid over `(ln K, ln K*)`, both axes spanning `[0, ln N]`
/// in equal steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub bins: usize,
    /// Row-major: `counts[y * bins + x]` with `x` the `ln K` cell and `y` the `ln K*` cell.
    pub counts: Vec<u64>,
    /// `bins + 1` cell boundaries in `ln` units, shared by both axes.
    pub boundaries: Vec<f64>,
}

impl DensityGrid {
    pub fn count(&self, k_cell: usize, kstar_cell: usize) -> u64 {
        self.counts[kstar_cell * self.bins + k_cell]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn log_cell(rank: usize, ln_n: f64, bins: usize) -> usize {
    if ln_n <= 0.0 {
        return 0;
    }
    let pos = (rank as f64).ln() / ln_n * bins as f64;
    (pos.floor() as usize).min(bins - 1)
}

pub fn density_grid<T: Scalar>(
    pagerank: &RankVector<T>,
    cheirank: &RankVector<T>,
    bins: usize,
) -> Result<DensityGrid> {
    if bins == 0 {
        return Err(Error::InvalidParameter(
            "grid needs at least one bin".into(),
        ));
    }
    let n = pagerank.p.len();
    if cheirank.p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: cheirank.p.len(),
        });
    }
    // A single node spans a zero-width axis: one cell.
    let bins = if n == 1 { 1 } else { bins };
    let ln_n = (n as f64).ln();
    let k = pagerank.ranks();
    let ks = cheirank.ranks();
    let mut counts = vec![0u64; bins * bins];
    for node in 0..n {
        let x = log_cell(k[node], ln_n, bins);
        let y = log_cell(ks[node], ln_n, bins);
        counts[y * bins + x] += 1;
    }
    let boundaries = (0..=bins).map(|b| ln_n * b as f64 / bins as f64).collect();
    Ok(DensityGrid {
        bins,
        counts,
        boundaries,
    })
}

/// Reading direction for the strongest-link expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Column `j`: nodes that `j` points to most strongly.
    Friends,
    /// Row `j`: nodes pointing to `j` most strongly.
    Followers,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEdge<T> {
    /// Subset positions; `from -> to` is the link direction in the matrix.
    pub from: usize,
    pub to: usize,
    /// Level of the node whose links were expanded (1 for primaries).
    pub level: usize,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredNetwork<T> {
    /// `levels[0]` are the primaries; each later level holds newly reached nodes in
    /// discovery order.
    pub levels: Vec<Vec<usize>>,
    pub edges: Vec<LinkEdge<T>>,
    /// Last level that introduced nodes, if an expansion found nothing new.
    pub saturated_at: Option<usize>,
}

impl<T> LayeredNetwork<T> {
    pub fn node_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

/// The `k` strongest off-diagonal links of node `j`, strongest first, ties by position.
fn strongest<T: Scalar>(
    m: &DenseMatrix<T>,
    j: usize,
    k: usize,
    direction: Direction,
) -> Vec<(usize, T)> {
    let mut cand: Vec<(usize, T)> = (0..m.rows())
        .filter(|&i| i != j)
        .map(|i| {
            let w = match direction {
                Direction::Friends => m[(i, j)],
                Direction::Followers => m[(j, i)],
            };
            (i, w)
        })
        .collect();
    cand.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    cand.truncate(k);
    cand
}

/// Expands `primaries` level by level through each node's `k` strongest links.
///
/// `max_levels` bounds the number of expansions. `k` above `N_r - 1` is clamped.
pub fn top_links_network<T: Scalar>(
    m: &DenseMatrix<T>,
    primaries: &[usize],
    k: usize,
    direction: Direction,
    max_levels: usize,
) -> Result<LayeredNetwork<T>> {
    let n = m.rows();
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m.cols(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if primaries.is_empty() {
        return Err(Error::InvalidParameter("no primary nodes".into()));
    }
    let k = k.min(n.saturating_sub(1));
    let mut placed = vec![false; n];
    for &p in primaries {
        if p >= n {
            return Err(Error::NodeOutOfRange { id: p, n });
        }
        if std::mem::replace(&mut placed[p], true) {
            return Err(Error::InvalidParameter(format!("primary {p} listed twice")));
        }
    }

    let mut levels = vec![primaries.to_vec()];
    let mut edges = Vec::new();
    let mut saturated_at = None;
    for level in 1..=max_levels {
        let mut fresh = Vec::new();
        for &j in &levels[level - 1] {
            for (i, weight) in strongest(m, j, k, direction) {
                let (from, to) = match direction {
                    Direction::Friends => (j, i),
                    Direction::Followers => (i, j),
                };
                edges.push(LinkEdge {
                    from,
                    to,
                    level,
                    weight,
                });
                if !std::mem::replace(&mut placed[i], true) {
                    fresh.push(i);
                }
            }
        }
        if fresh.is_empty() {
            saturated_at = Some(level);
            break;
        }
        levels.push(fresh);
    }
    Ok(LayeredNetwork {
        levels,
        edges,
        saturated_at,
    })
}
