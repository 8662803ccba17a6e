use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use quadrant_core::{Error, ModelParams, Result};
use serde::Deserialize;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_TRUNC: usize = 80;
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every command. The same keys may appear in a TOML file
/// passed with `--config`; flags win.
#[derive(Args, Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommonArgs {
    /// Hopping amplitude (> 0).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Corner potential.
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Quadrature tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Series order K for boundary coefficients (default: from the decay rate).
    #[arg(long)]
    pub order: Option<usize>,
    /// Truncation size N.
    #[arg(long)]
    pub trunc: Option<usize>,
    /// Compare against the truncated operator of this size.
    #[arg(long)]
    pub oracle: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for Lanczos start vectors and sample points.
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML file with defaults for the flags above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Record wall-clock time in the report (breaks byte-identical reruns).
    #[arg(long)]
    #[serde(skip)]
    pub timing: bool,
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub lambda: f64,
    pub mu: Option<f64>,
    pub tol: f64,
    pub order: Option<usize>,
    pub trunc: usize,
    pub oracle: Option<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub timing: bool,
}

fn load_file(path: &Path) -> Result<CommonArgs> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::InvalidParams(format!("config {}: {e}", path.display())))
}

impl CommonArgs {
    pub fn resolve(self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => load_file(path)?,
            None => CommonArgs::default(),
        };
        let cfg = RunConfig {
            lambda: self.lambda.or(file.lambda).unwrap_or(1.0),
            mu: self.mu.or(file.mu),
            tol: self.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
            order: self.order.or(file.order),
            trunc: self.trunc.or(file.trunc).unwrap_or(DEFAULT_TRUNC),
            oracle: self.oracle.or(file.oracle),
            format: self.format.or(file.format).unwrap_or(Format::Json),
            out: self.out.or(file.out),
            seed: self.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            timing: self.timing,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParams(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParams(format!("tol must be positive, got {}", self.tol)));
        }
        if self.trunc < 2 {
            return Err(Error::InvalidParams(format!("trunc must be at least 2, got {}", self.trunc)));
        }
        if let Some(n) = self.oracle {
            if n < 2 {
                return Err(Error::InvalidParams(format!("oracle size must be at least 2, got {n}")));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        let mu = self
            .mu
            .ok_or_else(|| Error::InvalidParams("--mu is required".into()))?;
        ModelParams::new(self.lambda, mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "lambda = 2.0\nmu = -20.0\ntrunc = 40\nformat = \"csv\"\n").unwrap();
        let args = CommonArgs {
            mu: Some(-6.0),
            config: Some(path),
            ..Default::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.lambda, 2.0);
        assert_eq!(cfg.mu, Some(-6.0));
        assert_eq!(cfg.trunc, 40);
        assert_eq!(cfg.format, Format::Csv);
        assert_eq!(cfg.tol, DEFAULT_TOL);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "lamda = 2.0\n").unwrap();
        let args = CommonArgs {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(args.resolve(), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn invalid_values() {
        let bad = [
            CommonArgs { lambda: Some(0.0), ..Default::default() },
            CommonArgs { tol: Some(-1.0), ..Default::default() },
            CommonArgs { trunc: Some(1), ..Default::default() },
        ];
        for args in bad {
            assert!(matches!(args.resolve(), Err(Error::InvalidParams(_))));
        }
    }
}
