//! The algebraic curve `Q(x, y) = y^2 x + x^2 y + nu x y + x + y = 0`.
//!
//! At fixed `y` the curve is the quadratic `y x^2 + (y^2 + nu y + 1) x + y`
//! in `x` (and symmetrically in `y`). Its two roots always multiply to 1,
//! so one of them lies in the closed unit disk: that root is the branch
//! `x1(y)`. The discriminant factors as
//! `(y^2 + (nu + 2) y + 1) (y^2 + (nu - 2) y + 1)`, whose four roots are the
//! branch points.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomials of the functional equation at a fixed `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePolynomials {
    pub nu: f64,
}

impl CurvePolynomials {
    pub fn new(nu: f64) -> Self {
        Self { nu }
    }

    /// `Q(x, y)`.
    pub fn q(&self, x: Complex64, y: Complex64) -> Complex64 {
        eval_q(x, y, self.nu)
    }

    /// Coefficient of the row generating function, `x^2 + x y + nu x + 1`.
    pub fn q1(&self, x: Complex64, y: Complex64) -> Complex64 {
        x * x + x * y + self.nu * x + 1.0
    }

    /// Coefficient of the column generating function, `q1(y, x)`.
    pub fn q2(&self, x: Complex64, y: Complex64) -> Complex64 {
        self.q1(y, x)
    }

    /// Corner coefficient `x + y + nu - alpha`.
    pub fn q0(&self, x: Complex64, y: Complex64, alpha: f64) -> Complex64 {
        x + y + (self.nu - alpha)
    }
}

pub fn eval_q(x: Complex64, y: Complex64, nu: f64) -> Complex64 {
    y * y * x + x * x * y + nu * x * y + x + y
}

/// Roots of `z^2 + b z + 1 = 0`, returned as `(inner, outer)` by modulus.
///
/// The larger root is formed without cancellation and the smaller one is
/// recovered from the product of roots, which is exactly 1.
pub fn unit_product_roots(b: Complex64) -> (Complex64, Complex64) {
    let disc = (b * b - 4.0).sqrt();
    // Choose the sign that adds magnitudes in -b - s.
    let s = if (b.conj() * disc).re >= 0.0 { disc } else { -disc };
    let outer = (-b - s) * 0.5;
    let inner = outer.inv();
    (inner, outer)
}

/// Geometric type of the branch-point configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchClass {
    /// `|nu| > 4`: four real points, two inside and two outside the unit circle.
    AllReal,
    /// `0 < |nu| < 4`: two real points and a conjugate pair on the unit circle.
    TwoRealTwoUnitCircle,
    /// `|nu| = 4`: the conjugate pair merges into a double point at `-sign(nu)`.
    DegenerateEdge,
    /// `nu = 0`: the curve factors as `(x + y)(x y + 1)`; double points at `+-1`.
    Factorized,
}

/// The four branch points of `x(y)` (equivalently of `y(x)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPointSet {
    pub nu: f64,
    /// Roots of `x^2 + (nu + 2) x + 1`, inner first.
    pub roots_plus: [Complex64; 2],
    /// Roots of `x^2 + (nu - 2) x + 1`, inner first.
    pub roots_minus: [Complex64; 2],
    pub class: BranchClass,
}

fn real_unit_product_roots(p: f64) -> [Complex64; 2] {
    let disc = p * p - 4.0;
    if disc >= 0.0 {
        let outer = -0.5 * (p + p.signum() * disc.sqrt());
        let outer = if outer == 0.0 { -1.0 } else { outer };
        [Complex64::new(1.0 / outer, 0.0), Complex64::new(outer, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(-0.5 * p, -im), Complex64::new(-0.5 * p, im)]
    }
}

pub fn branch_points(nu: f64) -> BranchPointSet {
    let class = if nu == 0.0 {
        BranchClass::Factorized
    } else if nu.abs() > 4.0 {
        BranchClass::AllReal
    } else if nu.abs() == 4.0 {
        BranchClass::DegenerateEdge
    } else {
        BranchClass::TwoRealTwoUnitCircle
    };
    BranchPointSet {
        nu,
        roots_plus: real_unit_product_roots(nu + 2.0),
        roots_minus: real_unit_product_roots(nu - 2.0),
        class,
    }
}

impl BranchPointSet {
    pub fn all(&self) -> [Complex64; 4] {
        [
            self.roots_plus[0],
            self.roots_plus[1],
            self.roots_minus[0],
            self.roots_minus[1],
        ]
    }

    /// The four points in increasing order, when they are all real.
    pub fn ordered_real(&self) -> Option<[f64; 4]> {
        if !matches!(self.class, BranchClass::AllReal | BranchClass::DegenerateEdge) {
            return None;
        }
        let mut pts = self.all().map(|z| z.re);
        pts.sort_by(f64::total_cmp);
        Some(pts)
    }

    /// Largest modulus among the branch points in the closed unit disk.
    ///
    /// Boundary generating functions built from `x1` are analytic up to
    /// radius `1 / rho`, so their coefficients decay like `rho^n`.
    pub fn inner_decay_modulus(&self) -> f64 {
        self.all()
            .iter()
            .map(|z| z.norm())
            .filter(|r| *r <= 1.0 + 1e-12)
            .fold(0.0, f64::max)
            .min(1.0)
    }
}

/// Real boundary value `x1(e^{i phi})` for `|nu| >= 4`.
///
/// With `u = cos(phi) + nu / 2` this is `-u - sqrt(u^2 - 1)` for `nu < 0` and
/// `-u + sqrt(u^2 - 1)` for `nu > 0`, evaluated in cancellation-free form.
pub fn d_eval(phi: f64, nu: f64) -> Result<f64> {
    if nu.abs() < 4.0 || !nu.is_finite() {
        return Err(Error::WrongRegime {
            nu,
            expected: "|nu| >= 4",
        });
    }
    let u = phi.cos() + 0.5 * nu;
    let root = ((u - 1.0) * (u + 1.0)).max(0.0).sqrt();
    Ok(if nu < 0.0 {
        1.0 / (root - u)
    } else {
        -1.0 / (u + root)
    })
}

/// The root of `x^2 + 2 c x + 1` used as `x1(e^{i phi})`, `c = cos(phi) + nu/2`.
fn x1_from_c(c: f64) -> Complex64 {
    if c.abs() > 1.0 {
        let outer = -(c + c.signum() * ((c - 1.0) * (c + 1.0)).sqrt());
        Complex64::new(1.0 / outer, 0.0)
    } else {
        Complex64::new(-c, -((1.0 - c) * (1.0 + c)).sqrt())
    }
}

/// Branch `x1(e^{i phi})` for `0 < |nu| <= 4`.
///
/// Off the unit-modulus arc `|cos(phi) + nu/2| > 1` this is the unique root
/// with `|x| < 1`. On the arc both roots have modulus 1; the value returned
/// is the limit from inside the disk on the upper half circle,
/// `-c - i sqrt(1 - c^2)`, continued along the arc through the symmetry
/// point (`phi = 0` for `nu < 0`, `phi = pi` for `nu > 0`). The result is
/// continuous along the arc and even in `phi`; [`track_x1`] reproduces it by
/// small-step continuation.
pub fn x1_on_circle(phi: f64, nu: f64) -> Result<Complex64> {
    if nu == 0.0 {
        return Err(Error::AmbiguousBranch { nu });
    }
    if nu.abs() > 4.0 || !nu.is_finite() {
        return Err(Error::WrongRegime {
            nu,
            expected: "0 < |nu| <= 4",
        });
    }
    Ok(x1_from_c(phi.cos() + 0.5 * nu))
}

/// Angles where `x1(e^{i phi})` meets a branch point (`|cos(phi) + nu/2| = 1`),
/// restricted to `(-pi, pi)`.
pub fn arc_endpoints(nu: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for target in [1.0 - 0.5 * nu, -1.0 - 0.5 * nu] {
        if target.abs() < 1.0 {
            let phi = target.acos();
            out.push(phi);
            out.push(-phi);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Follows a root of `x^2 + 2 (cos(phi) + nu/2) x + 1` along a path of
/// angles by always stepping to the nearest root.
///
/// The path must start off the unit-modulus arc, where the inner root is
/// selected, and wherever the roots are real the inner one is taken. When
/// the path enters the arc through a branch point the two new roots are
/// equidistant from the previous one; the tie is broken toward negative
/// imaginary part, matching [`x1_on_circle`].
pub fn track_x1(path: &[f64], nu: f64) -> Result<Vec<Complex64>> {
    if nu == 0.0 {
        return Err(Error::AmbiguousBranch { nu });
    }
    let mut out = Vec::with_capacity(path.len());
    let Some(&start) = path.first() else {
        return Ok(out);
    };
    let c0 = start.cos() + 0.5 * nu;
    if c0.abs() <= 1.0 {
        return Err(Error::AmbiguousBranch { nu });
    }
    let mut prev = x1_from_c(c0);
    out.push(prev);
    for &phi in &path[1..] {
        let c = phi.cos() + 0.5 * nu;
        let (r1, r2) = unit_product_roots(Complex64::new(2.0 * c, 0.0));
        let next = if r1.im.abs() <= 1e-12 {
            // Real pair (or leaving the arc): the inner root is the branch.
            r1
        } else if prev.im.abs() <= 1e-12 {
            if r1.im < 0.0 { r1 } else { r2 }
        } else if (r1 - prev).norm() <= (r2 - prev).norm() {
            r1
        } else {
            r2
        };
        out.push(next);
        prev = next;
    }
    Ok(out)
}

fn check_outside_band(nu: f64) -> Result<()> {
    if nu.abs() <= 4.0 || !nu.is_finite() {
        return Err(Error::WrongRegime {
            nu,
            expected: "|nu| > 4",
        });
    }
    Ok(())
}

/// Branch `y1(x)` with `|y1(x)| < 1`, for `|nu| > 4` and `x` off the cuts.
pub fn y1_of_x(x: Complex64, nu: f64) -> Result<Complex64> {
    check_outside_band(nu)?;
    if x == Complex64::new(0.0, 0.0) {
        return Ok(x);
    }
    let b = x + nu + x.inv();
    if b.im.abs() <= 1e-14 * b.norm().max(1.0) && b.re.abs() <= 2.0 {
        return Err(Error::OnBranchCut { re: x.re, im: x.im });
    }
    Ok(unit_product_roots(b).0)
}

/// Branch `x1(y)` with `|x1(y)| < 1`, for `|nu| > 4`.
///
/// Solves `y x^2 + (y^2 + nu y + 1) x + y = 0` directly in unnormalized
/// form; by the symmetry `Q(x, y) = Q(y, x)` it coincides with [`y1_of_x`].
pub fn x1_of_y(y: Complex64, nu: f64) -> Result<Complex64> {
    check_outside_band(nu)?;
    if y == Complex64::new(0.0, 0.0) {
        return Ok(y);
    }
    let b = y * y + nu * y + 1.0;
    let disc = (b * b - 4.0 * y * y).sqrt();
    if disc.norm() <= 1e-14 * b.norm().max(1.0) {
        return Err(Error::OnBranchCut { re: y.re, im: y.im });
    }
    let r1 = (-b + disc) / (2.0 * y);
    let r2 = (-b - disc) / (2.0 * y);
    let (inner, outer) = if r1.norm() <= r2.norm() { (r1, r2) } else { (r2, r1) };
    if (outer.norm() - inner.norm()).abs() <= 1e-12 {
        return Err(Error::OnBranchCut { re: y.re, im: y.im });
    }
    Ok(inner)
}

/// Branch value at `e^{i phi}` for any `nu != 0`: the real `d_eval` value
/// outside the band, [`x1_on_circle`] inside.
pub fn boundary_branch(phi: f64, nu: f64) -> Result<Complex64> {
    if nu.abs() >= 4.0 {
        d_eval(phi, nu).map(|d| Complex64::new(d, 0.0))
    } else {
        x1_on_circle(phi, nu)
    }
}

/// Samples the boundary branch on `count` equispaced angles in `(-pi, pi]`.
pub fn branch_samples(nu: f64, count: usize) -> Result<Vec<(f64, Complex64)>> {
    (0..count)
        .map(|j| {
            let phi = PI - 2.0 * PI * j as f64 / count as f64;
            boundary_branch(phi, nu).map(|x| (phi, x))
        })
        .collect()
}
