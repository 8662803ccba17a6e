//! Eigenvalue equation, regime classification and root finding.
//!
//! A discrete eigenvalue `E = lambda nu` solves
//!
//! ```text
//! I(nu) = (1/pi) int_{-pi}^{pi} d(phi, nu) sin^2(phi) dphi = -lambda / mu
//! ```
//!
//! `I` is odd, strictly increasing on `nu <= -4` and on `nu >= 4`, tends to
//! zero as `|nu| -> inf` and reaches `+-c` at `nu = -+4`, where
//! `c = 2 - 16 / (3 pi)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{arc_endpoints, d_eval, x1_on_circle};
use crate::error::{Error, Result};
use crate::model::{ModelParams, RenormalizedEnergy};
use crate::quadrature::{
    integrate, integrate_with_breaks, periodic_trapezoid, Estimate, QuadratureMethod,
    QuadratureSpec,
};

/// Default half-width of the threshold band, relative to `c`.
pub const DEFAULT_THRESHOLD_EPS: f64 = 1e-12;

/// Critical ratio `|lambda / mu|` below which a bound state exists.
pub fn threshold_constant() -> f64 {
    2.0 - 16.0 / (3.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// One isolated eigenvalue outside `[-4 lambda, 4 lambda]`.
    UniqueDiscreteEigenvalue,
    /// No eigenvalues at all.
    EmptyPointSpectrum,
    /// A single embedded eigenvalue at the band edge `E = +-4 lambda`.
    ThresholdEigenvalue,
}

impl Regime {
    pub fn eigenvalue_count(self) -> usize {
        match self {
            Regime::EmptyPointSpectrum => 0,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeClassification {
    pub regime: Regime,
    /// Sign of the eigenvalue, equal to the sign of `mu`; `None` without one.
    pub eigenvalue_sign: Option<i8>,
    /// `|lambda / mu|` (infinite for `mu = 0`).
    pub threshold_ratio: f64,
}

/// Sorts `(lambda, mu)` into one of the three spectral regimes.
///
/// `eps` is the relative half-width of the band `| |lambda/mu| - c | <= eps c`
/// that counts as the threshold case.
pub fn classify(params: &ModelParams, eps: f64) -> RegimeClassification {
    let ratio = params.ratio();
    let c = threshold_constant();
    let sign = if params.mu() > 0.0 { 1 } else { -1 };
    let regime = if params.mu() == 0.0 {
        Regime::EmptyPointSpectrum
    } else if (ratio - c).abs() <= eps.max(0.0) * c {
        Regime::ThresholdEigenvalue
    } else if ratio < c {
        Regime::UniqueDiscreteEigenvalue
    } else {
        Regime::EmptyPointSpectrum
    };
    RegimeClassification {
        regime,
        eigenvalue_sign: (regime != Regime::EmptyPointSpectrum).then_some(sign),
        threshold_ratio: ratio,
    }
}

/// Width of the panel at the near-singular end of `[0, pi]` that is
/// integrated after the substitution `phi = s^2`.
const ENDPOINT_PANEL: f64 = PI / 4.0;

/// `I(nu)` with its error estimate, for `|nu| >= 4`.
pub fn integral_i_estimate(nu: f64, spec: &QuadratureSpec) -> Result<Estimate<f64>> {
    spec.validate()?;
    if nu.abs() < 4.0 || !nu.is_finite() {
        return Err(Error::WrongRegime {
            nu,
            expected: "|nu| >= 4",
        });
    }
    let integrand = |phi: f64| {
        let s = phi.sin();
        d_eval(phi, nu).expect("|nu| >= 4 checked above") * s * s
    };
    match spec.method {
        QuadratureMethod::Trapezoid => {
            let est = periodic_trapezoid(integrand, spec.nodes);
            let est = Estimate {
                value: est.value / PI,
                error: est.error / PI,
                panels: est.panels,
            };
            if est.error > spec.tolerance {
                return Err(Error::QuadratureFailure {
                    achieved: est.error,
                    requested: spec.tolerance,
                    panels: est.panels,
                });
            }
            Ok(est)
        }
        QuadratureMethod::GaussKronrod => {
            // The integrand on [0, pi] is even-symmetrized: I = (2/pi) int_0^pi.
            // Its square-root-type feature sits at phi = 0 for nu < 0 and at
            // phi = pi for nu > 0.
            let half_tol = 0.5 * spec.tolerance * PI / 2.0;
            let s_max = ENDPOINT_PANEL.sqrt();
            let near = if nu < 0.0 {
                integrate(
                    |s: f64| 2.0 * s * integrand(s * s),
                    0.0,
                    s_max,
                    half_tol,
                    spec.max_panels,
                )?
            } else {
                integrate(
                    |s: f64| 2.0 * s * integrand(PI - s * s),
                    0.0,
                    s_max,
                    half_tol,
                    spec.max_panels,
                )?
            };
            let (a, b) = if nu < 0.0 {
                (ENDPOINT_PANEL, PI)
            } else {
                (0.0, PI - ENDPOINT_PANEL)
            };
            let far = integrate(integrand, a, b, half_tol, spec.max_panels)?;
            Ok(Estimate {
                value: 2.0 / PI * (near.value + far.value),
                error: 2.0 / PI * (near.error + far.error),
                panels: near.panels + far.panels,
            })
        }
    }
}

/// `I(nu) = (1/pi) int d(phi, nu) sin^2(phi) dphi` for `|nu| >= 4`.
pub fn integral_i(nu: f64, spec: &QuadratureSpec) -> Result<f64> {
    integral_i_estimate(nu, spec).map(|e| e.value)
}

/// Outcome of a successful eigenvalue solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueSolution {
    pub nu: RenormalizedEnergy,
    pub energy: f64,
    /// `|I(nu) + lambda / mu|` at the returned root.
    pub residual: f64,
    pub regime: Regime,
    /// Number of `I` evaluations spent (zero in the threshold case).
    pub evaluations: usize,
}

/// Solves `I(nu) = -lambda / mu` for the discrete eigenvalue.
///
/// The root is bracketed in `[-B, -4]` (or `[4, B]` for `mu > 0`) with `B`
/// doubled from 8, then located by regula falsi with the Illinois
/// modification and a bisection fallback. Threshold inputs return `+-4`
/// exactly.
pub fn solve(params: &ModelParams, spec: &QuadratureSpec, tol: f64) -> Result<EigenvalueSolution> {
    solve_with_eps(params, spec, tol, DEFAULT_THRESHOLD_EPS)
}

pub fn solve_with_eps(
    params: &ModelParams,
    spec: &QuadratureSpec,
    tol: f64,
    eps: f64,
) -> Result<EigenvalueSolution> {
    spec.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("root tolerance must be positive, got {tol}")));
    }
    let class = classify(params, eps);
    let c = threshold_constant();
    let sign = if params.mu() > 0.0 { 1.0 } else { -1.0 };
    match class.regime {
        Regime::EmptyPointSpectrum => Err(Error::NoDiscreteEigenvalue {
            ratio: class.threshold_ratio,
            threshold: c,
        }),
        Regime::ThresholdEigenvalue => {
            let nu = 4.0 * sign;
            Ok(EigenvalueSolution {
                nu: RenormalizedEnergy(nu),
                energy: nu * params.lambda(),
                residual: (c - class.threshold_ratio).abs(),
                regime: class.regime,
                evaluations: 0,
            })
        }
        Regime::UniqueDiscreteEigenvalue => {
            let target = -params.lambda() / params.mu();
            let mut evaluations = 0usize;
            let mut g = |nu: f64| -> Result<f64> {
                evaluations += 1;
                Ok(integral_i(nu, spec)? - target)
            };
            let (nu, residual) = find_root(&mut g, sign, tol)?;
            Ok(EigenvalueSolution {
                nu: RenormalizedEnergy(nu),
                energy: nu * params.lambda(),
                residual,
                regime: class.regime,
                evaluations,
            })
        }
    }
}

/// Root of the increasing function `g` on the half-line beyond `4 * sign`.
fn find_root(
    g: &mut impl FnMut(f64) -> Result<f64>,
    sign: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    const MAX_EXTENT: f64 = 1e15;
    let edge = 4.0 * sign;
    let g_edge = g(edge)?;
    let mut far = 8.0 * sign;
    let mut g_far = g(far)?;
    // g increases with nu: negative at the left end, positive at the right.
    while g_far * sign <= 0.0 {
        if far.abs() >= MAX_EXTENT {
            return Err(Error::BracketFailure(format!(
                "no sign change up to |nu| = {MAX_EXTENT:e}"
            )));
        }
        far *= 2.0;
        g_far = g(far)?;
    }
    let (mut a, mut fa, mut b, mut fb) = if sign < 0.0 {
        (far, g_far, edge, g_edge)
    } else {
        (edge, g_edge, far, g_far)
    };
    if !(fa < 0.0 && fb > 0.0) {
        return Err(Error::BracketFailure(format!(
            "g({a}) = {fa:e} and g({b}) = {fb:e} do not bracket a root"
        )));
    }
    if fa.abs() <= tol {
        return Ok((a, fa.abs()));
    }
    if fb.abs() <= tol {
        return Ok((b, fb.abs()));
    }

    let mut side = 0i8;
    let mut checkpoint = b - a;
    let mut bisect = false;
    for iter in 1..=400 {
        let x = if bisect {
            0.5 * (a + b)
        } else {
            let x = b - fb * (b - a) / (fb - fa);
            if x > a && x < b { x } else { 0.5 * (a + b) }
        };
        let fx = g(x)?;
        if fx.abs() <= tol {
            return Ok((x, fx.abs()));
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            // Bracket collapsed to adjacent floats; the residual is at the
            // evaluation noise floor.
            let (x, fx) = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
            return Ok((x, fx.abs()));
        }
        bisect = false;
        if iter % 3 == 0 {
            if b - a > 0.5 * checkpoint {
                bisect = true;
            }
            checkpoint = b - a;
        }
    }
    Err(Error::BracketFailure("root iteration limit reached".into()))
}

/// Convenience wrapper returning only `nu`.
pub fn solve_eigenvalue(
    params: &ModelParams,
    spec: &QuadratureSpec,
    tol: f64,
) -> Result<RenormalizedEnergy> {
    solve(params, spec, tol).map(|s| s.nu)
}

/// The contour integral `(1/2 pi i) oint x1(t) (t - 1/t) t^{-2} dt` for
/// `0 < |nu| < 4`, using the in-band branch [`x1_on_circle`].
///
/// For `|nu| > 4` the same integral equals `I(nu)` and is real; inside the
/// band it has a nonzero imaginary part, so the eigenvalue equation has no
/// real solution there.
pub fn offband_integral(nu: f64, spec: &QuadratureSpec) -> Result<Complex64> {
    spec.validate()?;
    if nu == 0.0 {
        return Err(Error::AmbiguousBranch { nu });
    }
    if nu.abs() >= 4.0 || !nu.is_finite() {
        return Err(Error::WrongRegime {
            nu,
            expected: "0 < |nu| < 4",
        });
    }
    // With t = e^{i phi}: (1/2 pi) int x1 * 2i sin(phi) e^{-i phi} dphi.
    let integrand = |phi: f64| {
        let x = x1_on_circle(phi, nu).expect("0 < |nu| < 4 checked above");
        x * Complex64::new(0.0, 2.0 * phi.sin()) * Complex64::from_polar(1.0, -phi) / (2.0 * PI)
    };
    match spec.method {
        QuadratureMethod::Trapezoid => {
            let est = periodic_trapezoid(integrand, spec.nodes);
            if est.error > spec.tolerance {
                return Err(Error::QuadratureFailure {
                    achieved: est.error,
                    requested: spec.tolerance,
                    panels: est.panels,
                });
            }
            Ok(est.value)
        }
        QuadratureMethod::GaussKronrod => {
            let mut breaks = arc_endpoints(nu);
            breaks.push(0.0);
            let est = integrate_with_breaks(
                integrand,
                -PI,
                PI,
                &breaks,
                spec.tolerance,
                spec.max_panels,
            )?;
            Ok(est.value)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn threshold_constant_value() {
        // 2 - 16/(3 pi), expanded independently.
        assert!((threshold_constant() - 0.302_347_273_686_449_65).abs() < 1e-15);
        assert!((threshold_constant() - 2.0 * (1.0 - 8.0 / (3.0 * PI))).abs() < 1e-15);
    }

    #[test]
    fn integral_at_edge_is_the_threshold_constant() {
        let i = integral_i(-4.0, &spec()).unwrap();
        assert!((i - threshold_constant()).abs() < 1e-9);
        let i = integral_i(4.0, &spec()).unwrap();
        assert!((i + threshold_constant()).abs() < 1e-9);
    }

    #[test]
    fn inner_integral_of_the_closed_form_chain() {
        // int_0^pi sqrt((cos - 2)^2 - 1) sin^2 = int_0^2 t sqrt(4 - t^2) dt = 8/3
        let est = integrate(
            |phi: f64| {
                let c = phi.cos();
                ((c - 2.0).powi(2) - 1.0).max(0.0).sqrt() * phi.sin().powi(2)
            },
            0.0,
            PI,
            1e-13,
            1000,
        )
        .unwrap();
        assert!((est.value - 8.0 / 3.0).abs() < 1e-9);
        assert!((2.0 - 2.0 / PI * est.value - threshold_constant()).abs() < 1e-9);
    }

    #[test]
    fn trapezoid_route_agrees_away_from_edge() {
        for nu in [-4.5, -6.0, -20.0, 7.0] {
            let gk = integral_i(nu, &spec()).unwrap();
            let tr = integral_i(nu, &QuadratureSpec::trapezoid(4096)).unwrap();
            assert!((gk - tr).abs() < 1e-12, "nu = {nu}");
        }
    }

    #[test]
    fn large_negative_nu_is_small_and_positive() {
        let i = integral_i(-1000.0, &spec()).unwrap();
        assert!(i > 0.0 && i < 0.002);
        // d ~ 1/|nu| gives I ~ 1/|nu|.
        assert!((i * 1000.0 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn odd_in_nu() {
        for nu in [4.0, 4.01, 4.5, 5.0, 6.0, 10.0, 20.0, 40.0] {
            let a = integral_i(nu, &spec()).unwrap();
            let b = integral_i(-nu, &spec()).unwrap();
            assert!((a + b).abs() <= 1e-10, "nu = {nu}: {a} vs {b}");
        }
    }

    #[test]
    fn monotone_and_bounded() {
        let grid = [-40.0, -20.0, -10.0, -6.0, -4.5, -4.01, -4.0];
        let values: Vec<f64> = grid.iter().map(|&nu| integral_i(nu, &spec()).unwrap()).collect();
        let c = threshold_constant();
        for w in values.windows(2) {
            assert!(w[0] < w[1]);
        }
        for v in &values {
            assert!(*v > 0.0 && *v <= c + 1e-12);
        }
    }

    #[test]
    fn wrong_regime() {
        assert!(matches!(integral_i(3.9, &spec()), Err(Error::WrongRegime { .. })));
        assert!(matches!(offband_integral(4.0, &spec()), Err(Error::WrongRegime { .. })));
        assert!(matches!(offband_integral(0.0, &spec()), Err(Error::AmbiguousBranch { .. })));
    }

    #[test]
    fn unreachable_tolerance_is_reported() {
        let tight = QuadratureSpec {
            tolerance: 1e-30,
            max_panels: 4,
            ..QuadratureSpec::default()
        };
        assert!(matches!(integral_i(-4.0, &tight), Err(Error::QuadratureFailure { .. })));
    }

    #[test]
    fn classify_examples() {
        let p = ModelParams::new(1.0, 0.0).unwrap();
        assert_eq!(classify(&p, 1e-12).regime, Regime::EmptyPointSpectrum);
        assert_eq!(classify(&p, 1e-12).threshold_ratio, f64::INFINITY);

        let p = ModelParams::new(1.0, 10.0).unwrap();
        let cl = classify(&p, 1e-12);
        assert_eq!(cl.regime, Regime::UniqueDiscreteEigenvalue);
        assert_eq!(cl.eigenvalue_sign, Some(1));

        let p = ModelParams::new(1.0, 1.0).unwrap();
        assert_eq!(classify(&p, 1e-12).regime, Regime::EmptyPointSpectrum);

        let lambda = threshold_constant();
        let p = ModelParams::new(lambda, -1.0).unwrap();
        let cl = classify(&p, 1e-12);
        assert_eq!(cl.regime, Regime::ThresholdEigenvalue);
        let sol = solve(&p, &spec(), 1e-12).unwrap();
        assert_eq!(sol.nu.value(), -4.0);
        assert_eq!(sol.energy, -4.0 * lambda);
    }

    #[test]
    fn solve_refuses_empty_regime() {
        let p = ModelParams::new(1.0, -3.0).unwrap();
        assert!(matches!(
            solve(&p, &spec(), 1e-12),
            Err(Error::NoDiscreteEigenvalue { .. })
        ));
    }

    #[test]
    fn solve_residual_and_sign() {
        let p = ModelParams::new(1.0, -10.0).unwrap();
        let sol = solve(&p, &spec(), 1e-12).unwrap();
        assert!(sol.nu.value() < -4.0);
        assert!(sol.residual <= 1e-12);
        let i = integral_i(sol.nu.value(), &spec()).unwrap();
        assert!((i - 0.1).abs() <= 1e-12);
        // Root certificate on a 4x finer quadrature.
        let fine = integral_i(sol.nu.value(), &spec().refined(4)).unwrap();
        assert!(((fine - 0.1).abs() - sol.residual).abs() < 1e-12);
    }

    #[test]
    fn solve_is_odd_under_mu_flip() {
        let a = solve_eigenvalue(&ModelParams::new(1.0, 10.0).unwrap(), &spec(), 1e-13).unwrap();
        let b = solve_eigenvalue(&ModelParams::new(1.0, -10.0).unwrap(), &spec(), 1e-13).unwrap();
        assert!((a.value() + b.value()).abs() < 1e-10);
        assert!(a.value() > 4.0);
    }

    #[test]
    fn only_the_ratio_matters() {
        let a = solve(&ModelParams::new(1.0, -10.0).unwrap(), &spec(), 1e-13).unwrap();
        let b = solve(&ModelParams::new(2.0, -20.0).unwrap(), &spec(), 1e-13).unwrap();
        assert_eq!(a.nu, b.nu);
        assert_eq!(2.0 * a.energy, b.energy);
    }

    #[test]
    fn near_threshold_root_is_close_to_edge() {
        let c = threshold_constant();
        let p = ModelParams::new(c * (1.0 - 1e-6), -1.0).unwrap();
        let sol = solve(&p, &spec(), 1e-14).unwrap();
        assert!(sol.nu.value() < -4.0 && sol.nu.value() > -4.01);
    }

    #[test]
    fn offband_has_imaginary_part() {
        for nu in [-3.5, -2.0, 1.0, 2.0, 3.5] {
            let z = offband_integral(nu, &spec()).unwrap();
            assert!(z.im.abs() > 1e-6, "nu = {nu}: {z}");
        }
    }

    #[test]
    fn offband_approaches_threshold_constant() {
        let z = offband_integral(-3.999, &spec()).unwrap();
        assert!(z.im.abs() < 1e-3);
        assert!((z.re - threshold_constant()).abs() < 1e-3);
    }

    #[test]
    fn offband_routes_agree() {
        // Trapezoid converges only like h^{3/2} across the branch points.
        let gk = offband_integral(-2.0, &spec()).unwrap();
        let tr = offband_integral(-2.0, &QuadratureSpec {
            tolerance: 1e-6,
            ..QuadratureSpec::trapezoid(1 << 16)
        })
        .unwrap();
        assert!((gk - tr).norm() < 1e-5, "{}", (gk - tr).norm());
    }
}
