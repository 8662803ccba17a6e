//! Model parameters, lattice wave functions and the Hamiltonian action.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical inputs of the Hamiltonian.
///
/// `lambda` is the hopping amplitude, `mu` the strength of the contact
/// interaction at the corner site. `alpha = mu / lambda` is cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    lambda: f64,
    mu: f64,
    alpha: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidParams(format!("mu must be finite, got {mu}")));
        }
        Ok(Self {
            lambda,
            mu,
            alpha: mu / lambda,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Dimensionless coupling `mu / lambda`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `|lambda / mu|`, infinite when `mu == 0`.
    pub fn ratio(&self) -> f64 {
        if self.mu == 0.0 {
            f64::INFINITY
        } else {
            (self.lambda / self.mu).abs()
        }
    }

    /// Operator-norm bound `4 lambda + |mu|`.
    pub fn norm_bound(&self) -> f64 {
        4.0 * self.lambda + self.mu.abs()
    }
}

/// Dimensionless energy `nu = E / lambda`.
///
/// The essential spectrum is `nu in [-4, 4]`; a discrete eigenvalue has
/// `|nu| > 4` and a threshold eigenvalue sits at `|nu| = 4`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RenormalizedEnergy(pub f64);

impl RenormalizedEnergy {
    pub fn from_energy(energy: f64, lambda: f64) -> Self {
        Self(energy / lambda)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn energy(self, lambda: f64) -> f64 {
        self.0 * lambda
    }

    pub fn is_discrete(self) -> bool {
        self.0.abs() > 4.0
    }

    pub fn is_in_band(self) -> bool {
        self.0.abs() <= 4.0
    }
}

/// Real wave function on the truncated quarter lattice, `f[m, n]` with
/// `m < n_rows`, `n < n_cols`.
///
/// Storage is column-major in the lattice sense: `m` varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveGrid {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl WaveGrid {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn square(n: usize) -> Self {
        Self::zeros(n, n)
    }

    pub fn from_values(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::Format(format!(
                "expected {} values for a {n_rows}x{n_cols} grid, got {}",
                n_rows * n_cols,
                values.len()
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut grid = Self::zeros(n_rows, n_cols);
        for n in 0..n_cols {
            for m in 0..n_rows {
                grid.values[n * n_rows + m] = f(m, n);
            }
        }
        grid
    }

    /// Unit vector at site `(m, n)`.
    pub fn basis(n_rows: usize, n_cols: usize, m: usize, n: usize) -> Self {
        let mut grid = Self::zeros(n_rows, n_cols);
        grid.set(m, n, 1.0);
        grid
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn index(&self, m: usize, n: usize) -> usize {
        n * self.n_rows + m
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.values[self.index(m, n)]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, value: f64) {
        let i = self.index(m, n);
        self.values[i] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dot(&self, other: &WaveGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    /// `self + factor * other`, in place.
    pub fn axpy(&mut self, factor: f64, other: &WaveGrid) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
    }

    pub fn transpose(&self) -> WaveGrid {
        WaveGrid::from_fn(self.n_cols, self.n_rows, |m, n| self.get(n, m))
    }

    /// Largest `|f[m, n] - f[n, m]|`; requires a square grid.
    pub fn transpose_deviation(&self) -> f64 {
        assert_eq!(self.n_rows, self.n_cols, "transpose deviation needs a square grid");
        let mut worst = 0.0_f64;
        for n in 0..self.n_cols {
            for m in 0..n {
                worst = worst.max((self.get(m, n) - self.get(n, m)).abs());
            }
        }
        worst
    }

    /// Writes the flat binary form: two little-endian `u64` dimensions
    /// (`n_rows`, `n_cols`) followed by the values as little-endian `f64`
    /// in storage order.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.n_rows as u64).to_le_bytes())?;
        out.write_all(&(self.n_cols as u64).to_le_bytes())?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let n_rows = u64::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let n_cols = u64::from_le_bytes(word) as usize;
        let count = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| Error::Format("grid dimensions overflow".into()))?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            input.read_exact(&mut word)?;
            values.push(f64::from_le_bytes(word));
        }
        Self::from_values(n_rows, n_cols, values)
    }

    /// Writes `m,n,value` rows (with a header line) in storage order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "m,n,value")?;
        for n in 0..self.n_cols {
            for m in 0..self.n_rows {
                writeln!(out, "{m},{n},{}", self.get(m, n))?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut entries = Vec::new();
        let (mut rows, mut cols) = (0usize, 0usize);
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('m')) {
                continue;
            }
            let mut parts = line.split(',');
            let mut next = |what: &str| {
                parts
                    .next()
                    .ok_or_else(|| Error::Format(format!("line {}: missing {what}", lineno + 1)))
            };
            let parse_err = |e: &dyn std::fmt::Display| Error::Format(format!("line {}: {e}", lineno + 1));
            let m: usize = next("m")?.trim().parse().map_err(|e| parse_err(&e))?;
            let n: usize = next("n")?.trim().parse().map_err(|e| parse_err(&e))?;
            let v: f64 = next("value")?.trim().parse().map_err(|e| parse_err(&e))?;
            rows = rows.max(m + 1);
            cols = cols.max(n + 1);
            entries.push((m, n, v));
        }
        let mut grid = WaveGrid::zeros(rows, cols);
        for (m, n, v) in entries {
            grid.set(m, n, v);
        }
        Ok(grid)
    }
}

/// Applies `H = H0 + V` to a truncated wave function.
///
/// Sites outside the grid are treated as zero. The `m = 0` and `n = 0`
/// edges use the exact boundary stencil of the quarter lattice, so the
/// result is exact wherever the full stencil lies inside the grid.
pub fn apply_hamiltonian(params: &ModelParams, f: &WaveGrid) -> Result<WaveGrid> {
    let (rows, cols) = (f.n_rows(), f.n_cols());
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidGrid { rows, cols });
    }
    let lambda = params.lambda();
    let mut g = WaveGrid::zeros(rows, cols);
    for n in 0..cols {
        for m in 0..rows {
            let mut s = 0.0;
            if m + 1 < rows {
                s += f.get(m + 1, n);
            }
            if m > 0 {
                s += f.get(m - 1, n);
            }
            if n + 1 < cols {
                s += f.get(m, n + 1);
            }
            if n > 0 {
                s += f.get(m, n - 1);
            }
            g.set(m, n, -lambda * s);
        }
    }
    let corner = g.get(0, 0) + params.mu() * f.get(0, 0);
    g.set(0, 0, corner);
    Ok(g)
}

/// `<f, Hf> / <f, f>`.
pub fn rayleigh_quotient(params: &ModelParams, f: &WaveGrid) -> Result<f64> {
    let norm2 = f.dot(f);
    if norm2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let hf = apply_hamiltonian(params, f)?;
    Ok(f.dot(&hf) / norm2)
}

/// Relative residual `||(H - E) f|| / ||f||`.
pub fn eigen_residual(params: &ModelParams, f: &WaveGrid, energy: f64) -> Result<f64> {
    let norm = f.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut r = apply_hamiltonian(params, f)?;
    r.axpy(-energy, f);
    Ok(r.norm() / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, n: usize) -> WaveGrid {
        WaveGrid::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        assert!(matches!(ModelParams::new(0.0, 1.0), Err(Error::InvalidParams(_))));
        assert!(matches!(ModelParams::new(-1.0, 1.0), Err(Error::InvalidParams(_))));
        assert!(ModelParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn alpha_times_lambda_is_mu() {
        let p = ModelParams::new(0.7, -3.3).unwrap();
        assert!((p.alpha() * p.lambda() - p.mu()).abs() <= f64::EPSILON * 4.0);
    }

    #[test]
    fn corner_stencil() {
        let p = ModelParams::new(1.0, 3.0).unwrap();
        let g = apply_hamiltonian(&p, &WaveGrid::basis(6, 6, 0, 0)).unwrap();
        assert_eq!(g.get(0, 0), 3.0);
        assert_eq!(g.get(1, 0), -1.0);
        assert_eq!(g.get(0, 1), -1.0);
        let others: f64 = g.values().iter().map(|v| v.abs()).sum::<f64>() - 5.0;
        assert_eq!(others, 0.0);
    }

    #[test]
    fn bulk_stencil() {
        let p = ModelParams::new(1.0, 17.0).unwrap();
        let g = apply_hamiltonian(&p, &WaveGrid::basis(6, 6, 2, 2)).unwrap();
        for (m, n) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            assert_eq!(g.get(m, n), -1.0);
        }
        assert_eq!(g.values().iter().filter(|v| **v != 0.0).count(), 4);
    }

    #[test]
    fn tiny_grid_is_rejected() {
        let p = ModelParams::new(1.0, 0.0).unwrap();
        assert!(matches!(
            apply_hamiltonian(&p, &WaveGrid::zeros(1, 5)),
            Err(Error::InvalidGrid { rows: 1, cols: 5 })
        ));
    }

    #[test]
    fn selfadjoint_on_random_pairs() {
        let p = ModelParams::new(1.3, -2.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let f = random_grid(&mut rng, 16);
            let g = random_grid(&mut rng, 16);
            let lhs = f.dot(&apply_hamiltonian(&p, &g).unwrap());
            let rhs = apply_hamiltonian(&p, &f).unwrap().dot(&g);
            let scale = p.norm_bound() * f.norm() * g.norm();
            assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn rayleigh_quotient_examples() {
        let p = ModelParams::new(1.0, 5.0).unwrap();
        let rq = rayleigh_quotient(&p, &WaveGrid::basis(8, 8, 0, 0)).unwrap();
        assert_eq!(rq, 5.0);
        let rq = rayleigh_quotient(&p, &WaveGrid::basis(8, 8, 3, 3)).unwrap();
        assert_eq!(rq, 0.0);
        assert!(matches!(
            rayleigh_quotient(&p, &WaveGrid::zeros(8, 8)),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let grid = WaveGrid::from_fn(3, 5, |_, _| rng.gen_range(-1e3..1e3));
        let mut buf = Vec::new();
        grid.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 8 * 15);
        assert_eq!(&buf[..8], &3u64.to_le_bytes());
        assert_eq!(WaveGrid::read_binary(buf.as_slice()).unwrap(), grid);

        let mut csv = Vec::new();
        grid.write_csv(&mut csv).unwrap();
        assert_eq!(WaveGrid::read_csv(csv.as_slice()).unwrap(), grid);
    }

    #[test]
    fn truncated_binary_is_an_error() {
        let grid = WaveGrid::square(3);
        let mut buf = Vec::new();
        grid.write_binary(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(WaveGrid::read_binary(buf.as_slice()).is_err());
    }

    fn grid_strategy(n: usize) -> impl Strategy<Value = WaveGrid> {
        proptest::collection::vec(-10.0f64..10.0, n * n)
            .prop_map(move |v| WaveGrid::from_values(n, n, v).unwrap())
    }

    proptest! {
        #[test]
        fn commutes_with_transpose(f in grid_strategy(7), mu in -20.0f64..20.0, lambda in 0.1f64..5.0) {
            let p = ModelParams::new(lambda, mu).unwrap();
            let lhs = apply_hamiltonian(&p, &f.transpose()).unwrap();
            let rhs = apply_hamiltonian(&p, &f).unwrap().transpose();
            for (a, b) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn linear(f in grid_strategy(6), g in grid_strategy(6), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let p = ModelParams::new(1.0, -4.0).unwrap();
            let mut comb = f.clone();
            comb.scale(a);
            comb.axpy(b, &g);
            let lhs = apply_hamiltonian(&p, &comb).unwrap();
            let mut rhs = apply_hamiltonian(&p, &f).unwrap();
            rhs.scale(a);
            rhs.axpy(b, &apply_hamiltonian(&p, &g).unwrap());
            for (x, y) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn norm_bound(f in grid_strategy(9), mu in -20.0f64..20.0, lambda in 0.1f64..5.0) {
            let p = ModelParams::new(lambda, mu).unwrap();
            let hf = apply_hamiltonian(&p, &f).unwrap();
            prop_assert!(hf.norm() <= p.norm_bound() * f.norm() * (1.0 + 1e-12));
        }

        #[test]
        fn rayleigh_quotient_within_norm_bound(f in grid_strategy(5), mu in -20.0f64..20.0) {
            let p = ModelParams::new(1.0, mu).unwrap();
            prop_assume!(f.norm() > 1e-6);
            let rq = rayleigh_quotient(&p, &f).unwrap();
            prop_assert!(rq.abs() <= p.norm_bound() * (1.0 + 1e-12));
        }
    }
}
