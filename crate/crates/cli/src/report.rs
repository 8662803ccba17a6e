use quadrant_core::eigenvector::BoundStateHeader;
use quadrant_core::solver::{threshold_constant, Regime};
use quadrant_core::Result;
use serde::{Deserialize, Serialize};

pub const TOOL: &str = "quadrant";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fields every report carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub threshold_constant: f64,
}

impl Default for Provenance {
    fn default() -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            threshold_constant: threshold_constant(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub lambda: f64,
    pub mu: f64,
    pub tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBlock {
    pub size: usize,
    pub eigenvalue: f64,
    pub residual: f64,
    pub iterations: usize,
    /// `|E - eigenvalue|`, present when an analytic eigenvalue exists.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub command: String,
    pub inputs: Inputs,
    pub regime: Regime,
    /// `|lambda / mu|`; absent for `mu = 0`.
    pub ratio: Option<f64>,
    pub eigenvalue_sign: Option<i8>,
    pub nu: Option<f64>,
    pub energy: Option<f64>,
    /// `|I(nu) + lambda / mu|`.
    pub integral_residual: Option<f64>,
    pub oracle: Option<OracleBlock>,
    pub timing_seconds: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

impl SpectrumReport {
    pub fn to_csv(&self) -> String {
        let o = self.oracle.as_ref();
        format!(
            "lambda,mu,ratio,regime,sign,nu,energy,integral_residual,oracle_size,oracle_energy,oracle_gap\n\
             {:?},{:?},{},{:?},{},{},{},{},{},{},{}\n",
            self.inputs.lambda,
            self.inputs.mu,
            opt(self.ratio),
            self.regime,
            self.eigenvalue_sign.map(|s| s.to_string()).unwrap_or_default(),
            opt(self.nu),
            opt(self.energy),
            opt(self.integral_residual),
            o.map(|b| b.size.to_string()).unwrap_or_default(),
            opt(o.map(|b| b.eigenvalue)),
            opt(o.and_then(|b| b.gap)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigvecReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub state: BoundStateHeader,
    pub grid_file: Option<String>,
    pub oracle: Option<OracleBlock>,
    /// Cosine similarity with the oracle eigenvector (same truncation only).
    pub oracle_cosine: Option<f64>,
    pub timing_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub inputs: Inputs,
    pub side: quadrant_core::oracle::Side,
    pub result: OracleBlock,
    pub analytic_energy: Option<f64>,
    /// Closed-form extreme of the `mu = 0` truncation on the same side.
    pub free_extreme: f64,
    pub timing_seconds: Option<f64>,
}

impl OracleReport {
    pub fn to_csv(&self) -> String {
        format!(
            "lambda,mu,size,side,eigenvalue,residual,analytic_energy,gap,free_extreme\n{:?},{:?},{},{:?},{:?},{:?},{},{},{:?}\n",
            self.inputs.lambda,
            self.inputs.mu,
            self.result.size,
            self.side,
            self.result.eigenvalue,
            self.result.residual,
            opt(self.analytic_energy),
            opt(self.result.gap),
            self.free_extreme,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub ratio: Option<f64>,
    pub regime: Regime,
    pub energy: Option<f64>,
    pub oracle_energy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub lambda: f64,
    pub rows: Vec<SweepRow>,
    pub warnings: usize,
    pub timing_seconds: Option<f64>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu,ratio,regime,E,oracle_E\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:?},{},{:?},{},{}\n",
                r.mu,
                opt(r.ratio),
                r.regime,
                opt(r.energy),
                opt(r.oracle_energy)
            ));
        }
        out
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpectrumReport {
        SpectrumReport {
            provenance: Provenance::default(),
            command: "solve".into(),
            inputs: Inputs {
                lambda: 1.0,
                mu: -10.0,
                tol: 1e-10,
                seed: 7,
            },
            regime: Regime::UniqueDiscreteEigenvalue,
            ratio: Some(0.1),
            eigenvalue_sign: Some(-1),
            nu: Some(-10.202062971148596),
            energy: Some(-10.202062971148596),
            integral_residual: Some(1.3877787807814457e-17),
            oracle: Some(OracleBlock {
                size: 80,
                eigenvalue: -10.202062971148711,
                residual: 3.1e-11,
                iterations: 41,
                gap: Some(1.1546319456101628e-13),
            }),
            timing_seconds: None,
        }
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let r = sample();
        let text = to_json(&r).unwrap();
        let back: SpectrumReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(to_json(&back).unwrap(), text);
    }

    #[test]
    fn csv_has_header_and_row() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    }
}
