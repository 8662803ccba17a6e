use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use quadrant_core::acceptance::{run_all, CriterionResult};
use quadrant_core::curve::branch_samples;
use quadrant_core::eigenvector::{BoundState, EigenvectorOptions};
use quadrant_core::oracle::{assemble, extremal_eigenpair, truncated_free_spectrum, LanczosOptions, Side};
use quadrant_core::quadrature::QuadratureSpec;
use quadrant_core::solver::{classify, solve, Regime, DEFAULT_THRESHOLD_EPS};
use quadrant_core::{Error, ModelParams, Result};
use rayon::prelude::*;

use crate::config::{Format, RunConfig};
use crate::report::{
    to_json, EigvecReport, Inputs, OracleBlock, OracleReport, Provenance, SpectrumReport, SweepReport,
    SweepRow,
};

/// Root-finding tolerance on `nu`.
const ROOT_TOL: f64 = 1e-13;

fn spec(cfg: &RunConfig) -> QuadratureSpec {
    QuadratureSpec::with_tolerance(cfg.tol)
}

fn inputs(cfg: &RunConfig, p: &ModelParams) -> Inputs {
    Inputs {
        lambda: p.lambda(),
        mu: p.mu(),
        tol: cfg.tol,
        seed: cfg.seed,
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn default_side(p: &ModelParams) -> Side {
    if p.mu() > 0.0 {
        Side::Max
    } else {
        Side::Min
    }
}

fn elapsed(cfg: &RunConfig, start: Instant) -> Option<f64> {
    cfg.timing.then(|| start.elapsed().as_secs_f64())
}

fn oracle_block(p: &ModelParams, size: usize, side: Side, seed: u64, energy: Option<f64>) -> Result<(OracleBlock, Vec<f64>)> {
    let op = assemble(p, size)?;
    let pair = extremal_eigenpair(&op, side, &LanczosOptions { seed, ..Default::default() })?;
    let block = OracleBlock {
        size,
        eigenvalue: pair.value,
        residual: pair.residual,
        iterations: pair.iterations,
        gap: energy.map(|e| (e - pair.value).abs()),
    };
    Ok((block, pair.vector))
}

fn render<T: serde::Serialize>(cfg: &RunConfig, report: &T, csv: impl FnOnce() -> String) -> Result<String> {
    match cfg.format {
        Format::Json => to_json(report),
        Format::Csv => Ok(csv()),
    }
}

pub fn classify_report(cfg: &RunConfig) -> Result<SpectrumReport> {
    let start = Instant::now();
    let p = cfg.params()?;
    let class = classify(&p, DEFAULT_THRESHOLD_EPS);
    Ok(SpectrumReport {
        provenance: Provenance::default(),
        command: "classify".into(),
        inputs: inputs(cfg, &p),
        regime: class.regime,
        ratio: finite(class.threshold_ratio),
        eigenvalue_sign: class.eigenvalue_sign,
        nu: None,
        energy: None,
        integral_residual: None,
        oracle: None,
        timing_seconds: elapsed(cfg, start),
    })
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<String> {
    let r = classify_report(cfg)?;
    render(cfg, &r, || r.to_csv())
}

pub fn solve_report(cfg: &RunConfig) -> Result<SpectrumReport> {
    let start = Instant::now();
    let p = cfg.params()?;
    let class = classify(&p, DEFAULT_THRESHOLD_EPS);
    let sol = solve(&p, &spec(cfg), ROOT_TOL)?;
    let oracle = match cfg.oracle {
        Some(n) => Some(oracle_block(&p, n, default_side(&p), cfg.seed, Some(sol.energy))?.0),
        None => None,
    };
    Ok(SpectrumReport {
        provenance: Provenance::default(),
        command: "solve".into(),
        inputs: inputs(cfg, &p),
        regime: sol.regime,
        ratio: finite(class.threshold_ratio),
        eigenvalue_sign: class.eigenvalue_sign,
        nu: Some(sol.nu.value()),
        energy: Some(sol.energy),
        integral_residual: Some(sol.residual),
        oracle,
        timing_seconds: elapsed(cfg, start),
    })
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<String> {
    let r = solve_report(cfg)?;
    render(cfg, &r, || r.to_csv())
}

fn grid_path(cfg: &RunConfig, explicit: Option<PathBuf>) -> Option<PathBuf> {
    explicit.or_else(|| {
        let ext = match cfg.format {
            Format::Json => "bin",
            Format::Csv => "csv",
        };
        cfg.out.as_ref().map(|o| o.with_extension(ext))
    })
}

fn write_grid(state: &BoundState, path: &Path, format: Format) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    match format {
        Format::Json => state.interior.write_binary(out),
        Format::Csv => state.interior.write_csv(out),
    }
}

/// Header is always JSON; `--format` picks the grid encoding (binary for
/// `json`, text for `csv`).
pub fn cmd_eigvec(cfg: &RunConfig, grid: Option<PathBuf>) -> Result<String> {
    let start = Instant::now();
    let p = cfg.params()?;
    let opts = EigenvectorOptions {
        order: cfg.order,
        truncation: cfg.trunc,
        spec: spec(cfg),
        ..Default::default()
    };
    let state = BoundState::solve(&p, &opts)?;
    let grid_file = grid_path(cfg, grid);
    if let Some(path) = &grid_file {
        write_grid(&state, path, cfg.format)?;
    }
    let (oracle, oracle_cosine) = match cfg.oracle {
        Some(n) => {
            let (block, vector) = oracle_block(&p, n, default_side(&p), cfg.seed, Some(state.energy))?;
            let cosine = if n == state.truncation {
                Some(state.cosine_similarity(&vector)?)
            } else {
                None
            };
            (Some(block), cosine)
        }
        None => (None, None),
    };
    let report = EigvecReport {
        provenance: Provenance::default(),
        state: state.header(),
        grid_file: grid_file.map(|g| g.display().to_string()),
        oracle,
        oracle_cosine,
        timing_seconds: elapsed(cfg, start),
    };
    to_json(&report)
}

pub fn cmd_oracle(cfg: &RunConfig, side: Option<Side>, export: Option<PathBuf>) -> Result<String> {
    let start = Instant::now();
    let p = cfg.params()?;
    let size = cfg.oracle.unwrap_or(cfg.trunc);
    let side = side.unwrap_or_else(|| default_side(&p));
    let class = classify(&p, DEFAULT_THRESHOLD_EPS);
    let analytic = if class.regime == Regime::EmptyPointSpectrum || side != default_side(&p) {
        None
    } else {
        Some(solve(&p, &spec(cfg), ROOT_TOL)?.energy)
    };
    if let Some(path) = export {
        assemble(&p, size)?.export_coordinates(BufWriter::new(File::create(path)?))?;
    }
    let (result, _) = oracle_block(&p, size, side, cfg.seed, analytic)?;
    let free = truncated_free_spectrum(p.lambda(), size);
    let report = OracleReport {
        provenance: Provenance::default(),
        inputs: inputs(cfg, &p),
        side,
        result,
        analytic_energy: analytic,
        free_extreme: match side {
            Side::Min => free[0],
            Side::Max => free[free.len() - 1],
        },
        timing_seconds: elapsed(cfg, start),
    };
    render(cfg, &report, || report.to_csv())
}

fn sweep_row(cfg: &RunConfig, lambda: f64, mu: f64) -> SweepRow {
    let class = ModelParams::new(lambda, mu).map(|p| (p, classify(&p, DEFAULT_THRESHOLD_EPS)));
    let (p, class) = match class {
        Ok(v) => v,
        Err(e) => {
            return SweepRow {
                mu,
                ratio: None,
                regime: Regime::EmptyPointSpectrum,
                energy: None,
                oracle_energy: None,
                error: Some(e.to_string()),
            }
        }
    };
    let mut row = SweepRow {
        mu,
        ratio: finite(class.threshold_ratio),
        regime: class.regime,
        energy: None,
        oracle_energy: None,
        error: None,
    };
    if class.regime == Regime::EmptyPointSpectrum {
        return row;
    }
    let outcome = solve(&p, &spec(cfg), ROOT_TOL).and_then(|sol| {
        row.energy = Some(sol.energy);
        match cfg.oracle {
            Some(n) => oracle_block(&p, n, default_side(&p), cfg.seed, Some(sol.energy))
                .map(|(b, _)| Some(b.eigenvalue)),
            None => Ok(None),
        }
    });
    match outcome {
        Ok(e) => row.oracle_energy = e,
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

pub fn sweep_report(cfg: &RunConfig, mu_min: f64, mu_max: f64, points: usize) -> Result<SweepReport> {
    if points < 2 || !(mu_min < mu_max) {
        return Err(Error::InvalidParams(format!(
            "sweep needs mu_min < mu_max and at least 2 points, got [{mu_min}, {mu_max}] with {points}"
        )));
    }
    let start = Instant::now();
    let lambda = cfg.lambda;
    let rows: Vec<SweepRow> = (0..points)
        .into_par_iter()
        .map(|k| {
            let mu = mu_min + (mu_max - mu_min) * k as f64 / (points - 1) as f64;
            sweep_row(cfg, lambda, mu)
        })
        .collect();
    let warnings = rows.iter().filter(|r| r.error.is_some()).count();
    Ok(SweepReport {
        provenance: Provenance::default(),
        lambda,
        rows,
        warnings,
        timing_seconds: elapsed(cfg, start),
    })
}

pub fn cmd_sweep(cfg: &RunConfig, mu_min: f64, mu_max: f64, points: usize) -> Result<(String, usize)> {
    let r = sweep_report(cfg, mu_min, mu_max, points)?;
    Ok((render(cfg, &r, || r.to_csv())?, r.warnings))
}

pub fn cmd_selftest(cfg: &RunConfig) -> Result<(String, bool)> {
    let results: Vec<CriterionResult> = run_all();
    for r in &results {
        eprintln!("{r}");
    }
    let passed = results.iter().all(|r| r.passed);
    let text = match cfg.format {
        Format::Json => to_json(&results)?,
        Format::Csv => {
            let mut s = String::from("id,passed,name\n");
            for r in &results {
                s.push_str(&format!("{},{},{}\n", r.id, r.passed, r.name));
            }
            s
        }
    };
    Ok((text, passed))
}

/// Boundary branch `x1(e^{i phi})` sampled on the circle, as CSV.
pub fn cmd_curve(nu: f64, samples: usize) -> Result<String> {
    let mut s = String::from("phi,re,im\n");
    for (phi, x) in branch_samples(nu, samples)? {
        s.push_str(&format!("{phi:?},{:?},{:?}\n", x.re, x.im));
    }
    Ok(s)
}
