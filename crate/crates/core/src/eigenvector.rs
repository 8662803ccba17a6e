//! Bound-state reconstruction.
//!
//! With `f00 = 1` the edge coefficients are Fourier moments of the
//! boundary branch,
//!
//! ```text
//! M_n = (1/2 pi i) oint x1(t) (t - 1/t) t^-(n+2) dt
//!     = (2/pi) int_0^pi d(phi) sin(phi) sin((n+1) phi) dphi,
//! f_{0,n} = f_{n,0} = -alpha M_n   (n >= 1),
//! ```
//!
//! and `-alpha M_0 = 1` is the eigenvalue equation itself. Interior values
//! come from the bulk stencil solved as a linear system with the edges as
//! data.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::curve::{branch_points, d_eval, y1_of_x, CurvePolynomials};
use crate::error::{Error, Result};
use crate::model::{eigen_residual, ModelParams, RenormalizedEnergy, WaveGrid};
use crate::quadrature::{integrate_with_breaks, QuadratureSpec};
use crate::solver::solve;

/// Tail target for the automatic series order.
pub const DEFAULT_TAIL: f64 = 1e-12;
/// Upper bound on the automatic series order.
pub const MAX_AUTO_ORDER: usize = 400;
/// Largest FFT length used for moments.
pub const MAX_FFT_NODES: usize = 1 << 20;
/// FFT length used when the boundary branch is only finitely smooth.
pub const THRESHOLD_FFT_NODES: usize = 1 << 18;
/// Interior systems with a larger condition estimate are refused.
pub const MAX_CONDITION: f64 = 1e12;

/// `M_0 ..= M_K` for one value of `nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub nu: f64,
    pub values: Vec<f64>,
    /// Largest imaginary part discarded, which vanishes in exact arithmetic.
    pub max_imag: f64,
    /// Estimated absolute error of the table.
    pub error: f64,
    /// Sample count (FFT route) or total panel count (adaptive route).
    pub work: usize,
}

impl MomentTable {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }
}

fn check_moment_args(nu: f64, spec: &QuadratureSpec) -> Result<()> {
    spec.validate()?;
    if nu.abs() < 4.0 || !nu.is_finite() {
        return Err(Error::WrongRegime {
            nu,
            expected: "|nu| >= 4",
        });
    }
    Ok(())
}

/// Smallest `K` with `rho^K < tail`, where `rho` is the inner branch-point
/// modulus, capped at [`MAX_AUTO_ORDER`].
pub fn default_order(nu: f64, tail: f64) -> usize {
    let rho = branch_points(nu).inner_decay_modulus();
    if !(rho < 1.0 - 1e-12) {
        return MAX_AUTO_ORDER;
    }
    if rho == 0.0 {
        return 1;
    }
    let k = (tail.ln() / rho.ln()).ceil();
    (k as usize).clamp(1, MAX_AUTO_ORDER)
}

fn fft_nodes(nu: f64, order: usize, min_nodes: usize) -> usize {
    let rho = branch_points(nu).inner_decay_modulus();
    let mut nodes = min_nodes.max(2 * (order + 2));
    if rho < 1.0 - 1e-12 {
        let guard = if rho > 0.0 { 40.0 / -rho.ln() } else { 0.0 };
        nodes = nodes.max(order + guard.ceil() as usize);
    } else {
        nodes = nodes.max(THRESHOLD_FFT_NODES);
    }
    nodes.next_power_of_two().min(MAX_FFT_NODES)
}

/// Moments from `L` equispaced samples of `g(phi) sin(phi)`.
fn fft_moments(g: &dyn Fn(f64) -> f64, order: usize, nodes: usize) -> (Vec<f64>, f64) {
    let mut buf: Vec<Complex64> = (0..nodes)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / nodes as f64;
            Complex64::new(g(phi) * phi.sin(), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(nodes).process(&mut buf);
    // M_n = (2 i / L) G_{n+1}; G is imaginary for an odd real sequence.
    let scale = 2.0 / nodes as f64;
    let mut max_imag = 0.0_f64;
    let values = (0..=order)
        .map(|n| {
            let m = Complex64::new(0.0, scale) * buf[(n + 1) % nodes];
            max_imag = max_imag.max(m.im.abs());
            m.re
        })
        .collect();
    (values, max_imag)
}

fn fft_table(nu: f64, order: usize, spec: &QuadratureSpec, g: &dyn Fn(f64) -> f64) -> MomentTable {
    let mut nodes = fft_nodes(nu, order, spec.nodes);
    loop {
        let (fine, max_imag) = fft_moments(g, order, nodes);
        let (coarse, _) = fft_moments(g, order, nodes / 2);
        let error = fine
            .iter()
            .zip(&coarse)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if error <= spec.tolerance || nodes >= MAX_FFT_NODES {
            return MomentTable {
                nu,
                values: fine,
                max_imag,
                error,
                work: nodes,
            };
        }
        nodes *= 2;
    }
}

/// `M_0 ..= M_K` by FFT of the sampled boundary branch.
///
/// The sample count starts from `spec.nodes` (raised so that aliasing is
/// below `rho^40`) and is doubled until halving it changes no moment by
/// more than `spec.tolerance`.
pub fn compute_moments(nu: f64, order: usize, spec: &QuadratureSpec) -> Result<MomentTable> {
    check_moment_args(nu, spec)?;
    let d = |phi: f64| d_eval(phi, nu).expect("|nu| >= 4 checked");
    Ok(fft_table(nu, order, spec, &d))
}

/// Same moments with the boundary branch taken as `y1(e^{i phi})`.
///
/// These are the coefficients of the row generating function; they agree
/// with [`compute_moments`] by the `x <-> y` symmetry of the curve.
pub fn compute_row_moments(nu: f64, order: usize, spec: &QuadratureSpec) -> Result<MomentTable> {
    check_moment_args(nu, spec)?;
    if nu.abs() == 4.0 {
        return compute_moments(nu, order, spec);
    }
    let y1 = |phi: f64| {
        y1_of_x(Complex64::from_polar(1.0, phi), nu)
            .expect("circle avoids the cuts for |nu| > 4")
            .re
    };
    Ok(fft_table(nu, order, spec, &y1))
}

/// `M_0 ..= M_K` by adaptive Gauss-Kronrod, one integral per moment.
pub fn compute_moments_adaptive(nu: f64, order: usize, spec: &QuadratureSpec) -> Result<MomentTable> {
    check_moment_args(nu, spec)?;
    let mut values = Vec::with_capacity(order + 1);
    let mut error = 0.0_f64;
    let mut work = 0;
    for n in 0..=order {
        let k = (n + 1) as f64;
        let breaks: Vec<f64> = (1..=n).map(|j| j as f64 * PI / k).collect();
        let est = integrate_with_breaks(
            |phi: f64| d_eval(phi, nu).expect("checked") * phi.sin() * (k * phi).sin(),
            0.0,
            PI,
            &breaks,
            spec.tolerance * PI / 2.0,
            spec.max_panels.max(4 * (n + 1)),
        )?;
        values.push(2.0 / PI * est.value);
        error = error.max(2.0 / PI * est.error);
        work += est.panels;
    }
    Ok(MomentTable {
        nu,
        values,
        max_imag: 0.0,
        error,
        work,
    })
}

/// Edge coefficients `f_{0,n}` and `f_{n,0}` for `n = 1 ..= K`, with `f00 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCoefficients {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
    /// `c1 = -alpha M_0`, equal to `f00` at an eigenvalue.
    pub c1: f64,
    pub moment_error: f64,
}

impl BoundaryCoefficients {
    pub fn symmetry_deviation(&self) -> f64 {
        self.row
            .iter()
            .zip(&self.col)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Edge coefficients of the bound state at `nu`.
///
/// Fails with [`Error::NotAnEigenvalue`] when `|c1 - 1| > lock_tol`.
pub fn boundary_coeffs(
    params: &ModelParams,
    nu: f64,
    order: usize,
    spec: &QuadratureSpec,
    lock_tol: f64,
) -> Result<BoundaryCoefficients> {
    let alpha = params.alpha();
    let col = compute_moments(nu, order, spec)?;
    let c1 = -alpha * col.values[0];
    if !((c1 - 1.0).abs() <= lock_tol) {
        return Err(Error::NotAnEigenvalue {
            mismatch: (c1 - 1.0).abs(),
        });
    }
    let row = compute_row_moments(nu, order, spec)?;
    Ok(BoundaryCoefficients {
        col: col.values[1..].iter().map(|m| -alpha * m).collect(),
        row: row.values[1..].iter().map(|m| -alpha * m).collect(),
        c1,
        moment_error: col.error.max(row.error),
    })
}

/// Result of the interior linear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Full `N x N` grid including the edges.
    pub grid: WaveGrid,
    pub relative_residual: f64,
    pub iterations: usize,
    pub condition_estimate: f64,
}

/// Target relative residual of the interior conjugate-gradient solve.
const CG_TARGET: f64 = 1e-13;
/// Residual above which the interior solve counts as failed.
const CG_ACCEPT: f64 = 1e-10;

/// Fills the interior `1 <= m, n < N` from the edge data by solving the
/// bulk equations `(H f)_{m,n} = E f_{m,n}` with zero data beyond the far
/// edge. Edge entries past the supplied coefficients are zero.
pub fn reconstruct_interior(
    params: &ModelParams,
    energy: f64,
    boundary: &BoundaryCoefficients,
    size: usize,
) -> Result<Reconstruction> {
    if size < 2 {
        return Err(Error::InvalidGrid {
            rows: size,
            cols: size,
        });
    }
    let lambda = params.lambda();
    let edge = 4.0 * lambda * (PI / size as f64).cos();
    let condition = if energy.abs() > edge {
        (energy.abs() + edge) / (energy.abs() - edge)
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }

    let mut grid = WaveGrid::square(size);
    grid.set(0, 0, 1.0);
    for k in 1..size {
        grid.set(k, 0, boundary.row.get(k - 1).copied().unwrap_or(0.0));
        grid.set(0, k, boundary.col.get(k - 1).copied().unwrap_or(0.0));
    }
    let inner = size - 1;
    let dim = inner * inner;
    // Sign that makes the system positive definite.
    let s = if energy < 0.0 { 1.0 } else { -1.0 };
    let apply = |x: &[f64], y: &mut [f64]| {
        for j in 0..inner {
            for i in 0..inner {
                let k = j * inner + i;
                let mut nb = 0.0;
                if i > 0 {
                    nb += x[k - 1];
                }
                if i + 1 < inner {
                    nb += x[k + 1];
                }
                if j > 0 {
                    nb += x[k - inner];
                }
                if j + 1 < inner {
                    nb += x[k + inner];
                }
                y[k] = s * (-lambda * nb - energy * x[k]);
            }
        }
    };
    let mut b = vec![0.0; dim];
    for j in 0..inner {
        for i in 0..inner {
            let (m, n) = (i + 1, j + 1);
            let mut known = 0.0;
            if m == 1 {
                known += grid.get(0, n);
            }
            if n == 1 {
                known += grid.get(m, 0);
            }
            b[j * inner + i] = s * lambda * known;
        }
    }
    let (x, relative_residual, iterations) = conjugate_gradient(apply, &b, 20 * dim + 100);
    if !(relative_residual <= CG_ACCEPT) {
        return Err(Error::NoConvergence {
            residual: relative_residual,
            iterations,
        });
    }
    for j in 0..inner {
        for i in 0..inner {
            grid.set(i + 1, j + 1, x[j * inner + i]);
        }
    }
    Ok(Reconstruction {
        grid,
        relative_residual,
        iterations,
        condition_estimate: condition,
    })
}

fn conjugate_gradient(apply: impl Fn(&[f64], &mut [f64]), b: &[f64], max_iter: usize) -> (Vec<f64>, f64, usize) {
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(p, q)| p * q).sum::<f64>();
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return (x, 0.0, 0);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut it = 0;
    while it < max_iter && rr.sqrt() > CG_TARGET * b_norm {
        apply(&p, &mut ap);
        let step = rr / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += step * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= step * ai);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
        it += 1;
    }
    // Report the true residual, not the recursively updated one.
    apply(&x, &mut ap);
    let res = b.iter().zip(&ap).map(|(bi, ai)| (bi - ai).powi(2)).sum::<f64>().sqrt();
    (x, res / b_norm, it)
}

/// Controls for [`BoundState::build`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorOptions {
    /// Series order `K`; `None` picks [`default_order`].
    pub order: Option<usize>,
    pub truncation: usize,
    pub spec: QuadratureSpec,
    /// Allowed `|c1 - f00|`.
    pub lock_tol: f64,
}

impl Default for EigenvectorOptions {
    fn default() -> Self {
        Self {
            order: None,
            truncation: 80,
            spec: QuadratureSpec::default(),
            lock_tol: 1e-8,
        }
    }
}

/// Reconstructed eigenvector with `f00 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    pub params: ModelParams,
    pub nu: RenormalizedEnergy,
    pub energy: f64,
    pub f00: f64,
    /// `f_{m,0}` for `m = 1 ..= K`.
    pub boundary_row: Vec<f64>,
    /// `f_{0,n}` for `n = 1 ..= K`.
    pub boundary_col: Vec<f64>,
    /// Full `N x N` grid.
    pub interior: WaveGrid,
    /// `||(H - E) f|| / ||f||` on the truncation.
    pub residual_norm: f64,
    pub interior_residual: f64,
    pub condition_estimate: f64,
    pub lock_mismatch: f64,
    pub order: usize,
    pub truncation: usize,
}

impl BoundState {
    /// Builds the bound state at a known eigenvalue `nu`.
    pub fn build(params: &ModelParams, nu: RenormalizedEnergy, opts: &EigenvectorOptions) -> Result<Self> {
        let order = opts.order.unwrap_or_else(|| default_order(nu.value(), DEFAULT_TAIL));
        let boundary = boundary_coeffs(params, nu.value(), order, &opts.spec, opts.lock_tol)?;
        let energy = nu.energy(params.lambda());
        let rec = reconstruct_interior(params, energy, &boundary, opts.truncation)?;
        let residual_norm = eigen_residual(params, &rec.grid, energy)?;
        Ok(Self {
            params: *params,
            nu,
            energy,
            f00: 1.0,
            lock_mismatch: (boundary.c1 - 1.0).abs(),
            boundary_row: boundary.row,
            boundary_col: boundary.col,
            interior: rec.grid,
            residual_norm,
            interior_residual: rec.relative_residual,
            condition_estimate: rec.condition_estimate,
            order,
            truncation: opts.truncation,
        })
    }

    /// Solves for the eigenvalue, then builds the state.
    pub fn solve(params: &ModelParams, opts: &EigenvectorOptions) -> Result<Self> {
        let sol = solve(params, &opts.spec, 1e-13)?;
        Self::build(params, sol.nu, opts)
    }

    pub fn is_threshold(&self) -> bool {
        self.nu.value().abs() == 4.0
    }

    pub fn symmetry_deviation(&self) -> f64 {
        self.interior.transpose_deviation()
    }

    pub fn boundary_symmetry_deviation(&self) -> f64 {
        self.boundary_row
            .iter()
            .zip(&self.boundary_col)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// The grid scaled to unit `l2` norm.
    pub fn normalized_grid(&self) -> WaveGrid {
        let mut g = self.interior.clone();
        g.scale(1.0 / g.norm());
        g
    }

    /// `sum_{m+n > N/2} f^2 / sum f^2`.
    pub fn tail_fraction(&self) -> f64 {
        let half = self.truncation / 2;
        let mut tail = 0.0;
        let mut total = 0.0;
        for n in 0..self.truncation {
            for m in 0..self.truncation {
                let v = self.interior.get(m, n).powi(2);
                total += v;
                if m + n > half {
                    tail += v;
                }
            }
        }
        tail / total
    }

    /// `|<f, v>| / (||f|| ||v||)` against a vector in grid storage order.
    pub fn cosine_similarity(&self, other: &[f64]) -> Result<f64> {
        if other.len() != self.interior.len() {
            return Err(Error::InvalidGrid {
                rows: other.len(),
                cols: 1,
            });
        }
        let dot: f64 = self.interior.values().iter().zip(other).map(|(a, b)| a * b).sum();
        let other_norm = other.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(dot.abs() / (self.interior.norm() * other_norm))
    }

    pub fn header(&self) -> BoundStateHeader {
        BoundStateHeader {
            lambda: self.params.lambda(),
            mu: self.params.mu(),
            energy: self.energy,
            nu: self.nu.value(),
            f00: self.f00,
            residual_norm: self.residual_norm,
            interior_residual: self.interior_residual,
            lock_mismatch: self.lock_mismatch,
            symmetry_deviation: self.symmetry_deviation(),
            condition_estimate: self.condition_estimate,
            order: self.order,
            truncation: self.truncation,
            boundary_row: self.boundary_row.clone(),
            boundary_col: self.boundary_col.clone(),
        }
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.header())?;
        Ok(())
    }
}

/// Serializable summary of a [`BoundState`]; the grid is written separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStateHeader {
    pub lambda: f64,
    pub mu: f64,
    pub energy: f64,
    pub nu: f64,
    pub f00: f64,
    pub residual_norm: f64,
    pub interior_residual: f64,
    pub lock_mismatch: f64,
    pub symmetry_deviation: f64,
    pub condition_estimate: f64,
    pub order: usize,
    pub truncation: usize,
    pub boundary_row: Vec<f64>,
    pub boundary_col: Vec<f64>,
}

/// Truncated generating functions of a reconstructed state.
struct Series<'a> {
    grid: &'a WaveGrid,
    order: usize,
}

impl Series<'_> {
    fn powers(z: Complex64, count: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(count);
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..count {
            out.push(p);
            p *= z;
        }
        out
    }

    /// `F(x) = sum_{p >= 1} f_{p,0} x^{p-1}`.
    fn row(&self, x: Complex64) -> Complex64 {
        Self::powers(x, self.order)
            .iter()
            .enumerate()
            .map(|(k, xp)| xp * self.grid.get(k + 1, 0))
            .sum()
    }

    /// `G(y) = sum_{q >= 1} f_{0,q} y^{q-1}`.
    fn col(&self, y: Complex64) -> Complex64 {
        Self::powers(y, self.order)
            .iter()
            .enumerate()
            .map(|(k, yq)| yq * self.grid.get(0, k + 1))
            .sum()
    }

    /// `F(x, y) = sum_{p, q >= 1} f_{p,q} x^{p-1} y^{q-1}`.
    fn bulk(&self, x: Complex64, y: Complex64) -> Complex64 {
        let xs = Self::powers(x, self.order);
        let ys = Self::powers(y, self.order);
        let mut acc = Complex64::new(0.0, 0.0);
        for (q, yq) in ys.iter().enumerate() {
            let mut inner = Complex64::new(0.0, 0.0);
            for (p, xp) in xs.iter().enumerate() {
                inner += xp * self.grid.get(p + 1, q + 1);
            }
            acc += inner * yq;
        }
        acc
    }
}

fn series<'a>(state: &'a BoundState, order: usize) -> Series<'a> {
    Series {
        grid: &state.interior,
        order: order.min(state.truncation - 1),
    }
}

/// Max relative mismatch of `-Q F(x,y) = q1 F(x) + q2 G(y) + q0 f00` over
/// `samples` seeded random points with `|x|, |y| <= 0.5`, series cut at
/// `order` terms in each variable.
pub fn functional_equation_residual(state: &BoundState, samples: usize, order: usize, seed: u64) -> f64 {
    let s = series(state, order);
    let poly = CurvePolynomials::new(state.nu.value());
    let alpha = state.params.alpha();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut disk_point = || {
        let r = 0.5 * rng.gen::<f64>().sqrt();
        Complex64::from_polar(r, rng.gen_range(-PI..PI))
    };
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let x = disk_point();
        let y = disk_point();
        let lhs = -poly.q(x, y) * s.bulk(x, y);
        let t1 = poly.q1(x, y) * s.row(x);
        let t2 = poly.q2(x, y) * s.col(y);
        let t0 = poly.q0(x, y, alpha) * state.f00;
        let scale = lhs.norm().max(t1.norm() + t2.norm() + t0.norm());
        worst = worst.max((lhs - t1 - t2 - t0).norm() / scale);
    }
    worst
}

/// Residuals of the equation restricted to the curve `Q = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveResiduals {
    /// `q(x,y) F(x) + q(y,x) G(y) + q0 f00`, relative.
    pub projected: f64,
    /// `F1(x) + G1(y) + alpha x y f00`, relative.
    pub transformed: f64,
}

/// Evaluates both curve forms at `(x, y1(x))` for `samples` points on
/// `|x| = radius`.
pub fn curve_residuals(state: &BoundState, samples: usize, radius: f64, order: usize) -> Result<CurveResiduals> {
    let s = series(state, order);
    let nu = state.nu.value();
    let poly = CurvePolynomials::new(nu);
    let alpha = state.params.alpha();
    let f00 = state.f00;
    let mut out = CurveResiduals {
        projected: 0.0,
        transformed: 0.0,
    };
    for j in 0..samples {
        let x = Complex64::from_polar(radius, 2.0 * PI * (j as f64 + 0.5) / samples as f64);
        let y = y1_of_x(x, nu)?;
        let (fx, gy) = (s.row(x), s.col(y));
        let a = poly.q1(x, y) * fx;
        let b = poly.q1(y, x) * gy;
        let c = poly.q0(x, y, alpha) * f00;
        out.projected = out
            .projected
            .max((a + b + c).norm() / (a.norm() + b.norm() + c.norm()));
        let f1 = x * (f00 + x * fx);
        let g1 = y * (f00 + y * gy);
        let e = alpha * x * y * f00;
        out.transformed = out
            .transformed
            .max((f1 + g1 + e).norm() / (f1.norm() + g1.norm() + e.norm()));
    }
    Ok(out)
}

/// Fit of `ln|f_q| = a + q ln(rate) - 1.5 ln q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub rate: f64,
    /// Largest relative deviation of the data from the fitted curve.
    pub max_relative_error: f64,
}

/// Least-squares decay fit of `coeffs[q - 1] = f_q` over `q in first..=last`.
pub fn fit_decay(coeffs: &[f64], first: usize, last: usize) -> Result<DecayFit> {
    if first == 0 || last <= first || last > coeffs.len() {
        return Err(Error::InvalidParams(format!(
            "decay fit range {first}..={last} invalid for {} coefficients",
            coeffs.len()
        )));
    }
    let pts: Vec<(f64, f64)> = (first..=last)
        .map(|q| {
            let qf = q as f64;
            (qf, coeffs[q - 1].abs().ln() + 1.5 * qf.ln())
        })
        .collect();
    if pts.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidParams("decay fit hit a zero coefficient".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_relative_error = pts
        .iter()
        .map(|(x, y)| ((y - intercept - slope * x).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(DecayFit {
        amplitude: intercept.exp(),
        rate: slope.exp(),
        max_relative_error,
    })
}

/// Partial sums of `|f_{0,q}|` at the band edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTail {
    pub sum_to_first: f64,
    pub sum_to_last: f64,
}

/// `sum_{q <= first} |f_{0,q}|` and `sum_{q <= last} |f_{0,q}|` for the
/// threshold state with eigenvalue sign `sign`.
pub fn threshold_tail(sign: f64, first: usize, last: usize) -> Result<ThresholdTail> {
    let nu = 4.0 * sign.signum();
    let c = crate::solver::threshold_constant();
    let params = ModelParams::new(1.0, sign.signum() / c)?;
    let spec = QuadratureSpec {
        nodes: THRESHOLD_FFT_NODES,
        ..QuadratureSpec::default()
    };
    let b = boundary_coeffs(&params, nu, last, &spec, 1e-8)?;
    let partial = |k: usize| b.col[..k].iter().map(|v| v.abs()).sum::<f64>();
    Ok(ThresholdTail {
        sum_to_first: partial(first),
        sum_to_last: partial(last),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{integral_i, solve};

    fn params(lambda: f64, mu: f64) -> ModelParams {
        ModelParams::new(lambda, mu).unwrap()
    }

    fn solved(lambda: f64, mu: f64) -> (ModelParams, f64) {
        let p = params(lambda, mu);
        let nu = solve(&p, &QuadratureSpec::default(), 1e-13).unwrap().nu.value();
        (p, nu)
    }

    #[test]
    fn zeroth_moment_is_the_integral() {
        for nu in [-4.0, -5.0, -10.0, 7.0] {
            let m = compute_moments(nu, 3, &QuadratureSpec::default()).unwrap();
            let i = integral_i(nu, &QuadratureSpec::default()).unwrap();
            assert!((m.values[0] - i).abs() < 1e-11, "nu = {nu}");
        }
    }

    #[test]
    fn lock_at_solved_eigenvalue() {
        let (p, nu) = solved(1.0, -10.0);
        let m = compute_moments(nu, 0, &QuadratureSpec::default()).unwrap();
        assert!((-m.values[0] - 1.0 / p.alpha()).abs() <= 1e-8);
    }

    #[test]
    fn lock_breaks_off_eigenvalue() {
        let (p, nu) = solved(1.0, -10.0);
        let spec = QuadratureSpec::default();
        let at = |v: f64| (-compute_moments(v, 0, &spec).unwrap().values[0] - 1.0 / p.alpha()).abs();
        let shifted = at(nu + 1e-3);
        assert!(shifted > 1e-6);
        let ratio = at(nu + 2e-3) / shifted;
        assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
        assert!(matches!(
            boundary_coeffs(&p, nu + 1e-3, 10, &spec, 1e-8),
            Err(Error::NotAnEigenvalue { .. })
        ));
    }

    #[test]
    fn fft_matches_adaptive() {
        let spec = QuadratureSpec::default();
        for nu in [-10.2, -4.5, 6.3] {
            let fft = compute_moments(nu, 32, &spec).unwrap();
            let ada = compute_moments_adaptive(nu, 32, &spec).unwrap();
            for (a, b) in fft.values.iter().zip(&ada.values) {
                assert!((a - b).abs() < 1e-9, "nu = {nu}");
            }
            assert!(fft.max_imag < 1e-12);
        }
    }

    #[test]
    fn moments_bounded() {
        for nu in [-4.0, -6.0, 5.0] {
            let m = compute_moments(nu, 50, &QuadratureSpec::default()).unwrap();
            let dmax = (0..200)
                .map(|j| d_eval(PI * j as f64 / 199.0, nu).unwrap().abs())
                .fold(0.0, f64::max);
            assert!(m.values.iter().all(|v| v.abs() <= 2.0 * dmax));
        }
    }

    #[test]
    fn row_and_column_agree() {
        let (p, nu) = solved(1.0, -10.0);
        let b = boundary_coeffs(&p, nu, 40, &QuadratureSpec::default(), 1e-8).unwrap();
        assert!(b.symmetry_deviation() < 1e-10);
        assert!((b.c1 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn corner_equation() {
        let (p, nu) = solved(1.0, -10.0);
        let b = boundary_coeffs(&p, nu, 10, &QuadratureSpec::default(), 1e-8).unwrap();
        let e = nu * p.lambda();
        let lhs = -p.lambda() * (b.row[0] + b.col[0]) + p.mu();
        assert!((lhs - e).abs() < 1e-8);
    }

    #[test]
    fn default_order_rule() {
        let rho = branch_points(-10.2).inner_decay_modulus();
        let k = default_order(-10.2, 1e-12);
        assert!(rho.powi(k as i32) < 1e-12);
        assert!(rho.powi(k as i32 - 1) >= 1e-12);
        assert_eq!(default_order(-4.0, 1e-12), MAX_AUTO_ORDER);
    }

    #[test]
    fn reconstruction_certificate() {
        let p = params(1.0, -10.0);
        let state = BoundState::solve(&p, &EigenvectorOptions::default()).unwrap();
        assert!(state.residual_norm <= 1e-7, "{}", state.residual_norm);
        assert!(state.symmetry_deviation() <= 1e-9);
        assert!(state.interior_residual <= 1e-10);
        assert!(state.tail_fraction() < 1e-12);
        assert!(state.boundary_symmetry_deviation() < 1e-10);
    }

    #[test]
    fn positive_mu_state() {
        let p = params(1.0, 6.0);
        let state = BoundState::solve(&p, &EigenvectorOptions::default()).unwrap();
        assert!(state.energy > 4.0);
        assert!(state.residual_norm <= 1e-7, "{}", state.residual_norm);
    }

    #[test]
    fn interior_refuses_band_energy() {
        let p = params(1.0, -10.0);
        let b = BoundaryCoefficients {
            row: vec![0.1; 5],
            col: vec![0.1; 5],
            c1: 1.0,
            moment_error: 0.0,
        };
        assert!(matches!(
            reconstruct_interior(&p, -3.0, &b, 20),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn functional_equation_holds() {
        let p = params(1.0, -10.0);
        let state = BoundState::solve(&p, &EigenvectorOptions::default()).unwrap();
        assert!(functional_equation_residual(&state, 100, 60, 7) <= 1e-6);
        let c = curve_residuals(&state, 64, 0.3, 60).unwrap();
        assert!(c.projected < 1e-10, "{c:?}");
        assert!(c.transformed < 1e-10, "{c:?}");
    }

    #[test]
    fn decay_rate_matches_branch_point() {
        // Coefficients sink below double precision by q ~ 25 here, and a
        // second branch point at modulus 0.083 still shows for q < 8.
        let (p, nu) = solved(1.0, -10.0);
        let b = boundary_coeffs(&p, nu, 16, &QuadratureSpec::default(), 1e-8).unwrap();
        let fit = fit_decay(&b.col, 8, 14).unwrap();
        let rho = branch_points(nu).inner_decay_modulus();
        assert!((fit.rate / rho - 1.0).abs() < 0.05, "{} vs {rho}", fit.rate);
    }

    #[test]
    fn decay_rate_near_threshold() {
        let (p, nu) = solved(1.0, -4.0);
        let b = boundary_coeffs(&p, nu, 30, &QuadratureSpec::default(), 1e-8).unwrap();
        let fit = fit_decay(&b.col, 10, 30).unwrap();
        let rho = branch_points(nu).inner_decay_modulus();
        assert!((fit.rate / rho - 1.0).abs() < 0.05, "{} vs {rho}", fit.rate);
        assert!(fit.max_relative_error < 0.05);
    }

    #[test]
    fn threshold_partial_sums_settle() {
        let t = threshold_tail(-1.0, 200, 400).unwrap();
        assert!((t.sum_to_last - t.sum_to_first).abs() < 1e-4);
    }

    #[test]
    fn header_round_trip() {
        let p = params(1.0, -10.0);
        let state = BoundState::solve(&p, &EigenvectorOptions { truncation: 30, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        state.write_json(&mut buf).unwrap();
        let back: BoundStateHeader = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, state.header());
    }
}
