//! Scenario and covariance files.
//!
//! A scenario is a JSON object with either a `gram` (m x m complex Hermitian)
//! or a `channel_matrix` (n x m complex), the two powers, and a regime.
//! Complex numbers are `[re, im]` pairs throughout. A covariance file is a
//! bare m x m nested array in the same convention.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use mimocap_core::{
    gram_from_channel, ChannelGram, ConstraintRegime, HermitianMatrix, PowerBudget,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    label: Option<String>,
    gram: Option<Vec<Vec<[f64; 2]>>>,
    channel_matrix: Option<Vec<Vec<[f64; 2]>>>,
    p_total: f64,
    p_antenna: f64,
    regime: String,
}

/// A validated problem instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: Option<String>,
    pub gram: ChannelGram,
    pub budget: PowerBudget,
    pub regime: ConstraintRegime,
}

pub fn parse_regime(text: &str) -> CliResult<ConstraintRegime> {
    match text {
        "tpc" => Ok(ConstraintRegime::TpcOnly),
        "pac" => Ok(ConstraintRegime::PacOnly),
        "joint" => Ok(ConstraintRegime::Joint),
        other => Err(CliError::Validation(format!(
            "field `regime`: expected \"tpc\", \"pac\", or \"joint\", got \"{other}\""
        ))),
    }
}

fn complex_matrix(rows: &[Vec<[f64; 2]>], field: &str) -> CliResult<DMatrix<Complex64>> {
    if rows.is_empty() {
        return Err(CliError::Validation(format!(
            "field `{field}`: empty matrix"
        )));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(CliError::Validation(format!("field `{field}`: empty row")));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Validation(format!(
            "field `{field}`: ragged rows (expected {ncols} entries per row)"
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

impl Scenario {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let file: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("scenario parse error: {e}")))?;
        let gram = match (&file.gram, &file.channel_matrix) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation(
                    "exactly one of `gram` and `channel_matrix` must be present, got both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Validation(
                    "exactly one of `gram` and `channel_matrix` must be present, got neither"
                        .into(),
                ))
            }
            (Some(rows), None) => {
                let entries = complex_matrix(rows, "gram")?;
                if entries.nrows() != entries.ncols() {
                    return Err(CliError::Validation(format!(
                        "field `gram`: must be square, got {}x{}",
                        entries.nrows(),
                        entries.ncols()
                    )));
                }
                let hermitian = HermitianMatrix::new(entries)
                    .map_err(|e| CliError::Validation(format!("field `gram`: {e}")))?;
                ChannelGram::new(hermitian)
                    .map_err(|e| CliError::Validation(format!("field `gram`: {e}")))?
            }
            (None, Some(rows)) => {
                let h = complex_matrix(rows, "channel_matrix")?;
                gram_from_channel(&h)
                    .map_err(|e| CliError::Validation(format!("field `channel_matrix`: {e}")))?
            }
        };
        let budget = PowerBudget::new(file.p_total, file.p_antenna)
            .map_err(|e| CliError::Validation(format!("fields `p_total`/`p_antenna`: {e}")))?;
        let regime = parse_regime(&file.regime)?;
        Ok(Scenario {
            label: file.label,
            gram,
            budget,
            regime,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::io(format!("cannot read scenario file {}", path.display()), e)
        })?;
        Self::from_json(&text)
    }
}

/// Loads a covariance file: a bare m x m array of `[re, im]` pairs that must
/// be Hermitian.
pub fn load_covariance(path: &Path) -> CliResult<HermitianMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read covariance file {}", path.display()), e))?;
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("covariance parse error: {e}")))?;
    let entries = complex_matrix(&rows, "covariance")?;
    if entries.nrows() != entries.ncols() {
        return Err(CliError::Validation(format!(
            "covariance must be square, got {}x{}",
            entries.nrows(),
            entries.ncols()
        )));
    }
    HermitianMatrix::new(entries).map_err(|e| CliError::Validation(format!("covariance: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_gram_scenario() {
        let text = r#"{
            "label": "fig1",
            "gram": [[[1.0, 0.0], [0.1, 0.0]], [[0.1, 0.0], [0.2, 0.0]]],
            "p_total": 4.0,
            "p_antenna": 3.0,
            "regime": "joint"
        }"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.gram.dim(), 2);
        assert_eq!(s.regime, ConstraintRegime::Joint);
        assert_eq!(s.label.as_deref(), Some("fig1"));
    }

    #[test]
    fn parses_channel_matrix_scenario() {
        let text = r#"{
            "channel_matrix": [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]], [[0.5, 0.5], [0.0, 0.0]]],
            "p_total": 1.0,
            "p_antenna": 1.0,
            "regime": "tpc"
        }"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.gram.dim(), 2);
    }

    #[test]
    fn rejects_missing_power() {
        let text = r#"{
            "gram": [[[1.0, 0.0]]],
            "p_antenna": 3.0,
            "regime": "joint"
        }"#;
        let err = Scenario::from_json(text).unwrap_err();
        assert!(err.to_string().contains("p_total"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rejects_both_matrix_fields() {
        let text = r#"{
            "gram": [[[1.0, 0.0]]],
            "channel_matrix": [[[1.0, 0.0]]],
            "p_total": 1.0,
            "p_antenna": 1.0,
            "regime": "joint"
        }"#;
        assert!(Scenario::from_json(text).is_err());
    }

    #[test]
    fn rejects_non_hermitian_gram() {
        let text = r#"{
            "gram": [[[1.0, 0.0], [0.5, 0.0]], [[0.2, 0.0], [1.0, 0.0]]],
            "p_total": 1.0,
            "p_antenna": 1.0,
            "regime": "joint"
        }"#;
        let err = Scenario::from_json(text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rejects_unknown_regime() {
        let text = r#"{
            "gram": [[[1.0, 0.0]]],
            "p_total": 1.0,
            "p_antenna": 1.0,
            "regime": "both"
        }"#;
        let err = Scenario::from_json(text).unwrap_err();
        assert!(err.to_string().contains("regime"));
    }
}
