//! End-to-end acceptance checks, shared by the `acceptance` test target and
//! the `selftest` command.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{branch_points, d_eval, eval_q, track_x1, unit_product_roots, x1_on_circle, y1_of_x};
use crate::eigenvector::{compute_moments, functional_equation_residual, BoundState, EigenvectorOptions};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::oracle::{
    assemble, dense_spectrum, extremal_eigenpair, truncated_free_spectrum, LanczosOptions, Side,
};
use crate::quadrature::QuadratureSpec;
use crate::solver::{
    classify, integral_i, offband_integral, solve, solve_with_eps, threshold_constant, Regime,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}. {}: {}", self.id, self.name, self.detail)
    }
}

fn finish(id: u8, name: &str, outcome: Result<(bool, String)>) -> CriterionResult {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        name: name.to_string(),
        passed,
        detail,
    }
}

fn params(lambda: f64, mu: f64) -> Result<ModelParams> {
    ModelParams::new(lambda, mu)
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| a + (b - a) * k as f64 / (n - 1) as f64)
}

/// Extreme eigenvalue of the truncation on the side where a bound state of
/// sign `sign(mu)` would appear.
fn oracle_extreme(p: &ModelParams, size: usize) -> Result<f64> {
    let side = if p.mu() > 0.0 { Side::Max } else { Side::Min };
    let op = assemble(p, size)?;
    Ok(extremal_eigenpair(&op, side, &LanczosOptions::default())?.value)
}

pub const ORACLE_PAIRS: [(f64, f64); 5] = [(1.0, -10.0), (1.0, -6.0), (1.0, 6.0), (1.0, 10.0), (2.0, -20.0)];

pub fn threshold_constant_check() -> CriterionResult {
    finish(1, "threshold constant", (|| {
        let start = Instant::now();
        let value = integral_i(-4.0, &QuadratureSpec::default())?;
        let elapsed = start.elapsed().as_secs_f64();
        let err = (value - threshold_constant()).abs();
        Ok((
            err <= 1e-9 && elapsed < 1.0,
            format!("|I(-4) - c| = {err:.3e} (<= 1e-9), {elapsed:.3} s (< 1 s)"),
        ))
    })())
}

pub fn regime_trichotomy() -> CriterionResult {
    finish(2, "regime trichotomy", (|| {
        let eps = 1e-9;
        let spec = QuadratureSpec::default();
        let c = threshold_constant();
        // Range of I over each half-line, from quadrature at the band edge.
        let edge = integral_i(-4.0, &spec)?;
        let (mut checked, mut skipped, mut solvable) = (0usize, 0usize, 0usize);
        let mut failures = Vec::new();
        for lambda in linspace(0.5, 5.0, 10) {
            for mu in linspace(-40.0, 40.0, 100) {
                let p = params(lambda, mu)?;
                let ratio = p.ratio();
                if (ratio - c).abs() <= eps * c {
                    skipped += 1;
                    continue;
                }
                checked += 1;
                let class = classify(&p, eps);
                let has_root = mu != 0.0 && ratio < edge;
                let says_root = class.regime == Regime::UniqueDiscreteEigenvalue;
                match solve_with_eps(&p, &spec, 1e-12, eps) {
                    Ok(sol) => {
                        solvable += 1;
                        let target = -lambda / mu;
                        let back = integral_i(sol.nu.value(), &spec)?;
                        let sign_ok = sol.energy.signum() == mu.signum()
                            && class.eigenvalue_sign == Some(mu.signum() as i8);
                        if !(has_root && says_root && sign_ok && (back - target).abs() <= 1e-9) {
                            failures.push(format!("({lambda}, {mu}) solved inconsistently"));
                        }
                    }
                    Err(Error::NoDiscreteEigenvalue { .. }) => {
                        if has_root || says_root {
                            failures.push(format!("({lambda}, {mu}) refused but root expected"));
                        }
                    }
                    Err(e) => failures.push(format!("({lambda}, {mu}): {e}")),
                }
            }
        }
        Ok((
            failures.is_empty(),
            format!(
                "{checked} points agree except {} ({solvable} solvable, {skipped} in band){}",
                failures.len(),
                failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
            ),
        ))
    })())
}

pub fn oracle_eigenvalues() -> CriterionResult {
    finish(3, "analytic vs oracle eigenvalue", (|| {
        let start = Instant::now();
        let mut worst_gap = 0.0_f64;
        let mut worst_drift = 0.0_f64;
        for (lambda, mu) in ORACLE_PAIRS {
            let p = params(lambda, mu)?;
            let sol = solve(&p, &QuadratureSpec::default(), 1e-13)?;
            let e80 = oracle_extreme(&p, 80)?;
            let e60 = oracle_extreme(&p, 60)?;
            worst_gap = worst_gap.max((sol.energy - e80).abs());
            worst_drift = worst_drift.max((e80 - e60).abs());
        }
        let elapsed = start.elapsed().as_secs_f64();
        Ok((
            worst_gap <= 1e-6 && worst_drift < 1e-8 && elapsed < 60.0,
            format!(
                "max gap {worst_gap:.3e} (<= 1e-6), max N60/N80 drift {worst_drift:.3e} (< 1e-8), {elapsed:.2} s (< 60 s)"
            ),
        ))
    })())
}

pub fn eigenvector_certificate() -> CriterionResult {
    finish(4, "eigenvector certificate", (|| {
        let p = params(1.0, -10.0)?;
        let state = BoundState::solve(&p, &EigenvectorOptions::default())?;
        let op = assemble(&p, state.truncation)?;
        let pair = extremal_eigenpair(&op, Side::Min, &LanczosOptions::default())?;
        let cosine = state.cosine_similarity(&pair.vector)?;
        let sym = state.symmetry_deviation();
        Ok((
            state.residual_norm <= 1e-7 && sym <= 1e-9 && cosine >= 1.0 - 1e-8,
            format!(
                "residual {:.3e} (<= 1e-7), transpose {sym:.3e} (<= 1e-9), 1 - cosine {:.3e} (<= 1e-8)",
                state.residual_norm,
                1.0 - cosine.min(1.0)
            ),
        ))
    })())
}

pub fn functional_equation() -> CriterionResult {
    finish(5, "functional equation residual", (|| {
        let p = params(1.0, -10.0)?;
        let state = BoundState::solve(&p, &EigenvectorOptions::default())?;
        let r = functional_equation_residual(&state, 100, 60, 2024);
        Ok((r <= 1e-6, format!("max relative residual {r:.3e} (<= 1e-6), order 60, 100 points")))
    })())
}

pub fn free_spectrum() -> CriterionResult {
    finish(6, "free spectrum exactness", (|| {
        let lambda = 1.0;
        let free = params(lambda, 0.0)?;
        let closed = truncated_free_spectrum(lambda, 12);
        let dense = dense_spectrum(&assemble(&free, 12)?);
        let dense_err = closed
            .iter()
            .zip(&dense)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let inside = dense.iter().all(|v| v.abs() < 4.0 * lambda);

        let op40 = assemble(&free, 40)?;
        let exact40 = truncated_free_spectrum(lambda, 40);
        let opts = LanczosOptions::default();
        let lo = extremal_eigenpair(&op40, Side::Min, &opts)?.value;
        let hi = extremal_eigenpair(&op40, Side::Max, &opts)?.value;
        let iter_err = (lo - exact40[0]).abs().max((hi - exact40[exact40.len() - 1]).abs());

        // (4 lambda + theta_min) (N + 1)^2 -> 2 lambda pi^2.
        let mut scaling_err = 0.0_f64;
        let mut mins = Vec::new();
        for n in [20, 40, 80] {
            let theta = extremal_eigenpair(&assemble(&free, n)?, Side::Min, &opts)?.value;
            let scaled = (4.0 * lambda + theta) * ((n + 1) as f64).powi(2);
            scaling_err = scaling_err.max((scaled / (2.0 * lambda * PI * PI) - 1.0).abs());
            mins.push(theta);
        }
        let drift = (mins[2] - mins[1]).abs();
        let passed = dense_err <= 1e-10 && inside && iter_err <= 1e-10 && scaling_err < 0.01 && drift > 1e-4;
        Ok((
            passed,
            format!(
                "dense N=12 {dense_err:.3e} (<= 1e-10), Lanczos N=40 {iter_err:.3e} (<= 1e-10), \
                 N^-2 scaling off by {:.2}% (< 1%), edge drift N40->80 {drift:.3e} (> 1e-4)",
                100.0 * scaling_err
            ),
        ))
    })())
}

pub fn no_bound_state_above_threshold() -> CriterionResult {
    finish(7, "no bound state above threshold", (|| {
        let lambda = 1.0;
        let p = params(lambda, -2.0)?;
        let mut parts = Vec::new();
        let mut passed = true;
        for n in [40, 80] {
            let theta = oracle_extreme(&p, n)?;
            let bound = 3.0 * (PI / (n as f64 + 1.0)).powi(2) * 2.0 * lambda;
            let dist = (theta + 4.0 * lambda).abs();
            passed &= dist <= bound;
            parts.push(format!("N={n}: {dist:.4e} <= {bound:.4e}"));
        }
        let refused = matches!(
            solve(&p, &QuadratureSpec::default(), 1e-12),
            Err(Error::NoDiscreteEigenvalue { .. })
        );
        passed &= refused;
        Ok((passed, format!("{}; solver refuses: {refused}", parts.join(", "))))
    })())
}

pub const OFFBAND_NU: [f64; 5] = [-3.5, -2.0, 1.0, 2.0, 3.5];

pub fn band_interior() -> CriterionResult {
    finish(8, "band-interior non-solvability", (|| {
        let mut min_im = f64::INFINITY;
        for nu in OFFBAND_NU {
            min_im = min_im.min(offband_integral(nu, &QuadratureSpec::default())?.im.abs());
        }
        Ok((min_im > 1e-6, format!("min |Im| = {min_im:.4e} (> 1e-6)")))
    })())
}

/// Property checks on the integral and the curve; returns failure messages.
pub fn property_suite() -> Result<Vec<String>> {
    let spec = QuadratureSpec::default();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    for nu in linspace(4.0, 60.0, 57) {
        let (a, b) = (integral_i(nu, &spec)?, integral_i(-nu, &spec)?);
        if (a + b).abs() > 1e-12 {
            failures.push(format!("oddness at nu = {nu}"));
        }
    }
    for (lo, hi) in [(-60.0, -4.0), (4.0, 60.0)] {
        let vals: Vec<f64> = linspace(lo, hi, 200)
            .map(|nu| integral_i(nu, &spec))
            .collect::<Result<_>>()?;
        if vals.windows(2).any(|w| w[1] <= w[0]) {
            failures.push(format!("monotonicity on [{lo}, {hi}]"));
        }
    }
    for _ in 0..200 {
        let b = Complex64::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
        let (r1, r2) = unit_product_roots(b);
        if (r1 * r2 - 1.0).norm() > 1e-12 || (r1 + r2 + b).norm() > 1e-12 * (1.0 + b.norm()) {
            failures.push(format!("Vieta at b = {b}"));
        }
    }
    for nu in [-12.0, -5.0, -4.5, 4.5, 9.0] {
        let bp = branch_points(nu);
        for pair in [bp.roots_plus, bp.roots_minus] {
            if (pair[0] * pair[1] - 1.0).norm() > 1e-12 {
                failures.push(format!("branch-point product at nu = {nu}"));
            }
        }
        for _ in 0..50 {
            let x = Complex64::from_polar(rng.gen_range(0.05..0.95), rng.gen_range(-PI..PI));
            let y = y1_of_x(x, nu)?;
            if eval_q(x, y, nu).norm() > 1e-12 || y.norm() >= 1.0 {
                failures.push(format!("y1 off the curve at nu = {nu}, x = {x}"));
            }
        }
        for k in 0..64 {
            let phi = -PI + 2.0 * PI * k as f64 / 64.0;
            let y = y1_of_x(Complex64::from_polar(1.0, phi), nu)?;
            if (y - d_eval(phi, nu)?).norm() > 1e-12 {
                failures.push(format!("boundary branch mismatch at nu = {nu}, phi = {phi}"));
            }
        }
    }
    for nu in OFFBAND_NU {
        let steps = 4000;
        let (a, b) = if nu < 0.0 { (PI, -PI) } else { (0.0, 2.0 * PI) };
        let path: Vec<f64> = linspace(a, b, steps + 1).collect();
        let tracked = track_x1(&path, nu)?;
        for (phi, x) in path.iter().zip(&tracked) {
            if (x - x1_on_circle(*phi, nu)?).norm() > 1e-9 {
                failures.push(format!("branch tracking at nu = {nu}, phi = {phi}"));
                break;
            }
        }
    }
    Ok(failures)
}

pub fn moment_lock() -> CriterionResult {
    finish(9, "moment/eigenvalue lock and properties", (|| {
        let spec = QuadratureSpec::default();
        let mut worst = 0.0_f64;
        for (lambda, mu) in ORACLE_PAIRS {
            let p = params(lambda, mu)?;
            let nu = solve(&p, &spec, 1e-13)?.nu.value();
            let m0 = compute_moments(nu, 0, &spec)?.values[0];
            worst = worst.max((-m0 - 1.0 / p.alpha()).abs());
        }
        let failures = property_suite()?;
        Ok((
            worst <= 1e-8 && failures.is_empty(),
            format!(
                "max |-M0 - 1/alpha| = {worst:.3e} (<= 1e-8), property failures: {}{}",
                failures.len(),
                failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
            ),
        ))
    })())
}

/// All criteria in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        threshold_constant_check(),
        regime_trichotomy(),
        oracle_eigenvalues(),
        eigenvector_certificate(),
        functional_equation(),
        free_spectrum(),
        no_bound_state_above_threshold(),
        band_interior(),
        moment_lock(),
    ]
}
