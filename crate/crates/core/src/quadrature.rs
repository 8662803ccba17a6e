//! Numerical integration: globally adaptive 7/15-point Gauss-Kronrod on
//! finite intervals and the periodic trapezoid rule.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which rule an integral is evaluated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureMethod {
    /// Adaptive Gauss-Kronrod, the default.
    GaussKronrod,
    /// Periodic trapezoid rule with `nodes` equispaced samples.
    Trapezoid,
}

/// Quadrature controls shared by every integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub method: QuadratureMethod,
    /// Absolute error target.
    pub tolerance: f64,
    /// Sample count for the trapezoid / FFT routes.
    pub nodes: usize,
    /// Refinement limit for the adaptive route.
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            method: QuadratureMethod::GaussKronrod,
            tolerance: 1e-12,
            nodes: 4096,
            max_panels: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn trapezoid(nodes: usize) -> Self {
        Self {
            method: QuadratureMethod::Trapezoid,
            nodes,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "quadrature tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.nodes < 16 {
            return Err(Error::InvalidParams(format!(
                "quadrature node count must be at least 16, got {}",
                self.nodes
            )));
        }
        if self.max_panels == 0 {
            return Err(Error::InvalidParams("max_panels must be positive".into()));
        }
        Ok(())
    }

    /// A spec `factor` times finer: tighter tolerance, more nodes and panels.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            method: self.method,
            tolerance: self.tolerance / factor as f64,
            nodes: self.nodes * factor,
            max_panels: self.max_panels * factor,
        }
    }
}

/// Values that can be integrated: real or complex scalars.
pub trait Integrand:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Result of an integration with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<T: Integrand>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * wk;
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).magnitude();
    (value, error)
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod over `[a, b]`, starting from panels
/// split at the interior `breaks`.
///
/// Refinement always bisects the panel with the largest error estimate and
/// stops once the summed estimate drops below `tolerance`.
pub fn integrate_with_breaks<T: Integrand>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    breaks: &[f64],
    tolerance: f64,
    max_panels: usize,
) -> Result<Estimate<T>> {
    let mut points: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1]);
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let width = (b - a).abs();
    // Panels narrower than this cannot be bisected meaningfully.
    let min_width = width * 1e-14;
    let mut frozen: Vec<Panel<T>> = Vec::new();

    loop {
        let total_error: f64 =
            heap.iter().map(|p| p.error).sum::<f64>() + frozen.iter().map(|p| p.error).sum::<f64>();
        let panels = heap.len() + frozen.len();
        if total_error <= tolerance || heap.is_empty() || panels >= max_panels {
            let value = heap
                .iter()
                .chain(frozen.iter())
                .fold(T::zero(), |acc, p| acc + p.value);
            if total_error <= tolerance {
                return Ok(Estimate {
                    value,
                    error: total_error,
                    panels,
                });
            }
            return Err(Error::QuadratureFailure {
                achieved: total_error,
                requested: tolerance,
                panels,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        if (worst.b - worst.a).abs() <= min_width {
            frozen.push(worst);
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&f, lo, hi);
            heap.push(Panel {
                a: lo,
                b: hi,
                value,
                error,
            });
        }
    }
}

pub fn integrate<T: Integrand>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    tolerance: f64,
    max_panels: usize,
) -> Result<Estimate<T>> {
    integrate_with_breaks(f, a, b, &[], tolerance, max_panels)
}

/// Periodic trapezoid rule for `int_0^{2 pi} f`, with the error estimated
/// by comparison against the rule on every other node.
pub fn periodic_trapezoid<T: Integrand>(f: impl Fn(f64) -> T, nodes: usize) -> Estimate<T> {
    let nodes = nodes.max(2) & !1;
    let h = std::f64::consts::TAU / nodes as f64;
    let mut even = T::zero();
    let mut odd = T::zero();
    for j in 0..nodes {
        let v = f(j as f64 * h);
        if j % 2 == 0 {
            even = even + v;
        } else {
            odd = odd + v;
        }
    }
    let fine = (even + odd) * h;
    let coarse = even * (2.0 * h);
    Estimate {
        value: fine,
        error: (fine - coarse).magnitude(),
        panels: nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        // Kronrod-15 integrates degree 22 exactly.
        let est = integrate(|x: f64| x.powi(10) - 3.0 * x.powi(3), -1.0, 2.0, 1e-13, 10).unwrap();
        let exact = (2f64.powi(11) + 1.0) / 11.0 - 0.75 * (16.0 - 1.0);
        assert!((est.value - exact).abs() < 1e-12);
        assert_eq!(est.panels, 1);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let est = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-11, 2000).unwrap();
        assert!((est.value - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn kink_at_breakpoint_converges_immediately() {
        let f = |x: f64| (x - 0.3).abs();
        let est = integrate_with_breaks(f, 0.0, 1.0, &[0.3], 1e-14, 10).unwrap();
        assert!((est.value - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn complex_integrand() {
        let est = integrate(
            |x: f64| Complex64::new(x.cos(), x.sin()),
            0.0,
            PI / 2.0,
            1e-13,
            50,
        )
        .unwrap();
        assert!((est.value - Complex64::new(1.0, 1.0)).norm() < 1e-13);
    }

    #[test]
    fn failure_reports_achieved_error() {
        let err = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-15, 8).unwrap_err();
        match err {
            Error::QuadratureFailure {
                achieved, panels, ..
            } => {
                assert!(achieved > 1e-15);
                assert_eq!(panels, 8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trapezoid_is_spectral_for_periodic_analytic() {
        // int_0^{2pi} 1/(2 + cos x) dx = 2 pi / sqrt(3)
        let est = periodic_trapezoid(|x: f64| 1.0 / (2.0 + x.cos()), 64);
        assert!((est.value - 2.0 * PI / 3f64.sqrt()).abs() < 1e-14);
        assert!(est.error < 1e-6);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        assert!(QuadratureSpec::with_tolerance(0.0).validate().is_err());
        assert!(QuadratureSpec::trapezoid(8).validate().is_err());
        let r = QuadratureSpec::default().refined(4);
        assert_eq!(r.tolerance, 0.25e-12);
        assert_eq!(r.max_panels, 16000);
    }
}
