//! Independent ground truth from finite truncations of the lattice.
//!
//! The truncated operator keeps sites `0 <= m, n < N` with the exact
//! edge and corner stencils and a Dirichlet cutoff at `m = N` or `n = N`.
//! Vector indexing matches [`WaveGrid`] storage (`m` fastest).

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, WaveGrid};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.dim) {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Finite `N^2 x N^2` section of `H`.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    pub size: usize,
    pub params: ModelParams,
    pub matrix: CsrMatrix,
}

pub fn assemble(params: &ModelParams, size: usize) -> Result<TruncatedOperator> {
    if size < 2 {
        return Err(Error::InvalidGrid {
            rows: size,
            cols: size,
        });
    }
    let dim = size * size;
    let lambda = params.lambda();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut col_idx = Vec::with_capacity(5 * dim);
    let mut values = Vec::with_capacity(5 * dim);
    row_ptr.push(0);
    for n in 0..size {
        for m in 0..size {
            let here = n * size + m;
            // Columns in increasing order: (m, n-1), (m-1, n), (m, n), (m+1, n), (m, n+1).
            if n > 0 {
                col_idx.push(here - size);
                values.push(-lambda);
            }
            if m > 0 {
                col_idx.push(here - 1);
                values.push(-lambda);
            }
            if here == 0 {
                col_idx.push(0);
                values.push(params.mu());
            }
            if m + 1 < size {
                col_idx.push(here + 1);
                values.push(-lambda);
            }
            if n + 1 < size {
                col_idx.push(here + size);
                values.push(-lambda);
            }
            row_ptr.push(col_idx.len());
        }
    }
    Ok(TruncatedOperator {
        size,
        params: *params,
        matrix: CsrMatrix {
            dim,
            row_ptr,
            col_idx,
            values,
        },
    })
}

impl TruncatedOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.matvec(x, y);
    }

    pub fn norm_bound(&self) -> f64 {
        self.params.norm_bound()
    }

    pub fn vector_to_grid(&self, v: &[f64]) -> WaveGrid {
        WaveGrid::from_values(self.size, self.size, v.to_vec()).expect("dimension matches")
    }

    /// Writes `row col value` lines, one per stored entry.
    pub fn export_coordinates<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.dim() {
            for (j, v) in self.matrix.row(i) {
                writeln!(out, "{i} {j} {v}")?;
            }
        }
        Ok(())
    }
}

/// Eigenvalues `-2 lambda cos(k pi / (N + 1))` of `-lambda` times the
/// adjacency of a path on `N` sites, ascending.
pub fn path_spectrum(lambda: f64, size: usize) -> Vec<f64> {
    (1..=size)
        .map(|k| -2.0 * lambda * (k as f64 * PI / (size as f64 + 1.0)).cos())
        .collect()
}

/// Exact spectrum of the `mu = 0` truncation: all pairwise sums of two
/// path spectra, ascending.
pub fn truncated_free_spectrum(lambda: f64, size: usize) -> Vec<f64> {
    let path = path_spectrum(lambda, size);
    let mut out: Vec<f64> = path
        .iter()
        .flat_map(|a| path.iter().map(move |b| a + b))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// All eigenvalues by dense symmetric diagonalization, ascending.
pub fn dense_spectrum(op: &TruncatedOperator) -> Vec<f64> {
    let mut vals: Vec<f64> = SymmetricEigen::new(op.matrix.to_dense())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Convergence target for `||A v - theta v|| / ||A||`.
    pub tol: f64,
    /// Krylov dimension before an explicit restart.
    pub max_subspace: usize,
    pub max_restarts: usize,
    pub seed: u64,
    /// Repeat the solve from a second start vector and require agreement.
    pub verify: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_subspace: 600,
            max_restarts: 30,
            seed: 0x5eed,
            verify: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    /// Unit vector, signed so that its largest-magnitude entry is positive.
    pub vector: Vec<f64>,
    /// `||A v - value v||`.
    pub residual: f64,
    pub iterations: usize,
}

/// Systems up to this dimension are also diagonalized densely as a
/// cross-check of the Krylov result.
pub const DENSE_CROSSCHECK_DIM: usize = 576;

/// Extreme eigenpair on the requested side by Lanczos with full
/// reorthogonalization.
pub fn extremal_eigenpair(
    op: &TruncatedOperator,
    side: Side,
    opts: &LanczosOptions,
) -> Result<Eigenpair> {
    let sign = match side {
        Side::Min => 1.0,
        Side::Max => -1.0,
    };
    let first = lanczos(op, sign, opts, opts.seed)?;
    if opts.verify {
        let second = lanczos(op, sign, opts, opts.seed.wrapping_add(0x9e37_79b9))?;
        let allowed = 2.0 * opts.tol * op.norm_bound();
        if (first.value - second.value).abs() > allowed {
            return Err(Error::NoConvergence {
                residual: (first.value - second.value).abs(),
                iterations: first.iterations + second.iterations,
            });
        }
    }
    if op.dim() <= DENSE_CROSSCHECK_DIM {
        let dense = dense_spectrum(op);
        let reference = if sign > 0.0 { dense[0] } else { dense[dense.len() - 1] };
        if (reference - first.value).abs() > 1e-8 * op.norm_bound().max(1.0) {
            return Err(Error::NoConvergence {
                residual: (reference - first.value).abs(),
                iterations: first.iterations,
            });
        }
    }
    Ok(first)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn lanczos(op: &TruncatedOperator, sign: f64, opts: &LanczosOptions, seed: u64) -> Result<Eigenpair> {
    let dim = op.dim();
    let a_norm = op.norm_bound();
    let target = opts.tol * a_norm;
    let m_max = opts.max_subspace.clamp(2, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut scratch = vec![0.0; dim];
    let mut total_iterations = 0usize;
    let mut best: Option<Eigenpair> = None;

    for _restart in 0..=opts.max_restarts {
        let s_norm = norm(&start);
        let mut basis: Vec<Vec<f64>> = vec![start.iter().map(|v| v / s_norm).collect()];
        let mut alpha: Vec<f64> = Vec::with_capacity(m_max);
        let mut beta: Vec<f64> = Vec::with_capacity(m_max);
        let mut ritz: Option<(f64, Vec<f64>)> = None;

        for j in 0..m_max {
            total_iterations += 1;
            op.apply(&basis[j], &mut scratch);
            let mut w: Vec<f64> = scratch.iter().map(|v| sign * v).collect();
            let a_j = dot(&w, &basis[j]);
            alpha.push(a_j);
            // Full reorthogonalization, two passes of classical Gram-Schmidt.
            for _ in 0..2 {
                for q in &basis {
                    let h = dot(&w, q);
                    w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= h * qi);
                }
            }
            let b_j = norm(&w);
            let (theta, s) = smallest_tridiagonal_eigenpair(&alpha, &beta);
            let estimate = b_j * s[s.len() - 1].abs();
            let exhausted = b_j <= 1e-13 * a_norm || basis.len() == dim;
            ritz = Some((theta, s));
            if estimate <= target || exhausted || j + 1 == m_max {
                break;
            }
            beta.push(b_j);
            basis.push(w.iter().map(|v| v / b_j).collect());
        }

        let (theta, s) = ritz.expect("at least one Lanczos step");
        let mut y = vec![0.0; dim];
        for (q, &coef) in basis.iter().zip(&s) {
            y.iter_mut().zip(q).for_each(|(yi, qi)| *yi += coef * qi);
        }
        let y_norm = norm(&y);
        y.iter_mut().for_each(|v| *v /= y_norm);
        op.apply(&y, &mut scratch);
        let residual = scratch
            .iter()
            .zip(&y)
            .map(|(ay, yi)| (sign * ay - theta * yi).powi(2))
            .sum::<f64>()
            .sqrt();
        let pair = Eigenpair {
            value: sign * theta,
            vector: y.clone(),
            residual,
            iterations: total_iterations,
        };
        let improved = best.as_ref().is_none_or(|b| residual < b.residual);
        if improved {
            best = Some(pair);
        }
        if residual <= target {
            let mut pair = best.expect("set above");
            orient(&mut pair.vector);
            return Ok(pair);
        }
        start = y;
    }
    Err(Error::NoConvergence {
        residual: best.map_or(f64::INFINITY, |b| b.residual),
        iterations: total_iterations,
    })
}

fn orient(v: &mut [f64]) {
    let pivot = v
        .iter()
        .copied()
        .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(diag, off)` below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let coupling = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { coupling / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue (Sturm bisection) and unit eigenvector (inverse
/// iteration) of a symmetric tridiagonal matrix.
fn smallest_tridiagonal_eigenpair(diag: &[f64], off: &[f64]) -> (f64, Vec<f64>) {
    let k = diag.len();
    if k == 1 {
        return (diag[0], vec![1.0]);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < k { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    while hi - lo > 2.0 * f64::EPSILON * scale {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let shift = theta - 4.0 * f64::EPSILON * scale;
    let mut x = vec![1.0; k];
    let factor = TridiagonalLu::new(diag, off, shift, scale);
    for _ in 0..3 {
        factor.solve(&mut x);
        let n = norm(&x);
        x.iter_mut().for_each(|v| *v /= n);
    }
    (theta, x)
}

/// LU factorization with partial pivoting of `T - shift I`.
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn new(diag: &[f64], off: &[f64], shift: f64, scale: f64) -> Self {
        let n = diag.len();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = f64::EPSILON * scale;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = f64::EPSILON * scale;
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Spectrum check of the truncated half-line operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub lambda: f64,
    pub size: usize,
    /// Closed-form eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Largest deviation between dense diagonalization and the closed form.
    pub dense_deviation: f64,
    pub all_inside_band: bool,
    /// `2 lambda - max eigenvalue`, which shrinks like `N^-2`.
    pub edge_gap: f64,
}

/// Checks that the `N`-site truncation of the half-line operator has
/// spectrum `{-2 lambda cos(k pi / (N + 1))}` strictly inside `[-2 lambda, 2 lambda]`.
pub fn one_d_band_check(lambda: f64, size: usize) -> Result<BandReport> {
    if size < 2 {
        return Err(Error::InvalidGrid {
            rows: size,
            cols: 1,
        });
    }
    let closed = path_spectrum(lambda, size);
    let mut dense = DMatrix::zeros(size, size);
    for i in 0..size - 1 {
        dense[(i, i + 1)] = -lambda;
        dense[(i + 1, i)] = -lambda;
    }
    let mut numeric: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
    numeric.sort_by(f64::total_cmp);
    let dense_deviation = closed
        .iter()
        .zip(&numeric)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let max = closed[size - 1];
    Ok(BandReport {
        lambda,
        size,
        all_inside_band: numeric.iter().all(|v| v.abs() <= 2.0 * lambda),
        edge_gap: 2.0 * lambda - max,
        eigenvalues: closed,
        dense_deviation,
    })
}
