use std::fs::File;
use std::io::{BufReader, BufWriter};

use approx::assert_relative_eq;
use quadrant_core::eigenvector::{BoundState, EigenvectorOptions};
use quadrant_core::oracle::{assemble, extremal_eigenpair, LanczosOptions, Side};
use quadrant_core::quadrature::QuadratureSpec;
use quadrant_core::solver::{classify, solve, Regime};
use quadrant_core::{ModelParams, WaveGrid};

fn params(lambda: f64, mu: f64) -> ModelParams {
    ModelParams::new(lambda, mu).unwrap()
}

#[test]
fn energy_scales_with_lambda() {
    let spec = QuadratureSpec::default();
    let a = solve(&params(1.0, -10.0), &spec, 1e-13).unwrap();
    let b = solve(&params(2.0, -20.0), &spec, 1e-13).unwrap();
    assert_relative_eq!(a.nu.value(), b.nu.value(), max_relative = 1e-13);
    assert_relative_eq!(2.0 * a.energy, b.energy, max_relative = 1e-13);
}

#[test]
fn energy_decreases_with_mu_on_the_negative_side() {
    let spec = QuadratureSpec::default();
    let energies: Vec<f64> = (0..30)
        .map(|k| -20.0 + 16.0 * k as f64 / 29.0)
        .map(|mu| solve(&params(1.0, mu), &spec, 1e-12).unwrap().energy)
        .collect();
    assert!(energies.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn regime_flips_once_across_threshold() {
    let regimes: Vec<Regime> = (0..200)
        .map(|k| -1.0 - 9.0 * k as f64 / 199.0)
        .map(|mu| classify(&params(1.0, mu), 1e-12).regime)
        .collect();
    let flips = regimes.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(flips, 1);
}

#[test]
fn positive_mu_state_matches_oracle() {
    let p = params(1.0, 6.0);
    let state = BoundState::solve(&p, &EigenvectorOptions { truncation: 60, ..Default::default() }).unwrap();
    let op = assemble(&p, 60).unwrap();
    let pair = extremal_eigenpair(&op, Side::Max, &LanczosOptions::default()).unwrap();
    assert!((pair.value - state.energy).abs() < 1e-9);
    assert!(state.cosine_similarity(&pair.vector).unwrap() > 1.0 - 1e-8);
}

#[test]
fn grid_files_round_trip() {
    let p = params(1.0, -10.0);
    let state = BoundState::solve(&p, &EigenvectorOptions { truncation: 24, ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let bin = dir.path().join("grid.bin");
    state.interior.write_binary(BufWriter::new(File::create(&bin).unwrap())).unwrap();
    let back = WaveGrid::read_binary(BufReader::new(File::open(&bin).unwrap())).unwrap();
    assert_eq!(back, state.interior);

    let csv = dir.path().join("grid.csv");
    state.interior.write_csv(BufWriter::new(File::create(&csv).unwrap())).unwrap();
    let back = WaveGrid::read_csv(BufReader::new(File::open(&csv).unwrap())).unwrap();
    assert_eq!(back, state.interior);
}

#[test]
fn oracle_is_seed_independent() {
    let op = assemble(&params(1.0, -6.0), 50).unwrap();
    let a = extremal_eigenpair(&op, Side::Min, &LanczosOptions { seed: 1, ..Default::default() }).unwrap();
    let b = extremal_eigenpair(&op, Side::Min, &LanczosOptions { seed: 99, ..Default::default() }).unwrap();
    assert!((a.value - b.value).abs() < 1e-12);
    let overlap: f64 = a.vector.iter().zip(&b.vector).map(|(x, y)| x * y).sum();
    assert!(overlap > 1.0 - 1e-10);
}
