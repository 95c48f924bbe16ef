use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{VarModel, VariableMeta};
use crate::error::{Error, Result};

pub const MODEL_FILE_VERSION: u32 = 1;

/// On-disk JSON layout of a [`VarModel`]. Matrices are nested row-major arrays;
/// `coefficient_blocks[l]` holds the lag `l + 1` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub variables: Vec<VariableMeta>,
    pub lags: usize,
    pub coefficient_blocks: Vec<Vec<Vec<f64>>>,
    pub constant: Vec<f64>,
    #[serde(default)]
    pub exo_names: Vec<String>,
    #[serde(default)]
    pub exo_coefficients: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub residual_covariance: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Vec<Vec<f64>>>,
    pub interval_minutes: f64,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], what: &str, ncols: Option<usize>) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = match ncols {
        Some(c) => c,
        None => rows.first().map_or(0, Vec::len),
    };
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::ModelFormat(format!(
            "{what}: row {bad} has {} entries, expected {ncols}",
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl From<&VarModel> for ModelFile {
    fn from(model: &VarModel) -> Self {
        ModelFile {
            version: MODEL_FILE_VERSION,
            variables: model.variables().to_vec(),
            lags: model.lags(),
            coefficient_blocks: model.coefficient_blocks().iter().map(to_rows).collect(),
            constant: model.constant().iter().copied().collect(),
            exo_names: model.exo_names().to_vec(),
            exo_coefficients: model.exo_coefficients().map(to_rows),
            residual_covariance: Some(to_rows(model.residual_covariance())),
            residuals: model.residuals().map(to_rows),
            interval_minutes: model.interval_minutes(),
        }
    }
}

impl TryFrom<ModelFile> for VarModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported model file version {} (expected {MODEL_FILE_VERSION})",
                file.version
            )));
        }
        let m = file.variables.len();
        if file.lags == 0 || file.coefficient_blocks.len() != file.lags {
            return Err(Error::ModelFormat(format!(
                "lags = {} but {} coefficient blocks given",
                file.lags,
                file.coefficient_blocks.len()
            )));
        }
        for (l, block) in file.coefficient_blocks.iter().enumerate() {
            if block.len() != m {
                return Err(Error::ModelFormat(format!(
                    "coefficient block {} has {} rows, expected {m}",
                    l + 1,
                    block.len()
                )));
            }
        }
        if file.residual_covariance.is_none() && file.residuals.is_none() {
            return Err(Error::ModelFormat(
                "need residual_covariance or residuals".into(),
            ));
        }
        let blocks = file
            .coefficient_blocks
            .iter()
            .enumerate()
            .map(|(l, b)| from_rows(b, &format!("coefficient block {}", l + 1), Some(m)))
            .collect::<Result<Vec<_>>>()?;
        let fmt = |e: Error| match e {
            Error::ModelFormat(_) => e,
            other => Error::ModelFormat(other.to_string()),
        };
        let mut model = VarModel::new(
            file.variables,
            blocks,
            DVector::from_vec(file.constant),
            file.interval_minutes,
        )
        .map_err(fmt)?;
        match (&file.exo_coefficients, file.exo_names.is_empty()) {
            (Some(rows), _) => {
                let coef = from_rows(rows, "exo_coefficients", Some(file.exo_names.len()))?;
                model = model.with_exogenous(file.exo_names, coef).map_err(fmt)?;
            }
            (None, false) => {
                return Err(Error::ModelFormat(
                    "exo_names given without exo_coefficients".into(),
                ))
            }
            (None, true) => {}
        }
        if let Some(rows) = &file.residuals {
            model = model
                .with_residuals(from_rows(rows, "residuals", Some(m))?)
                .map_err(fmt)?;
        }
        if let Some(rows) = &file.residual_covariance {
            let sigma = from_rows(rows, "residual_covariance", Some(m))?;
            if sigma.nrows() != m {
                return Err(Error::ModelFormat(format!(
                    "residual_covariance has {} rows, expected {m}",
                    sigma.nrows()
                )));
            }
            // keep the stored matrix bit-for-bit; residuals were validated against it
            model = model.with_covariance(sigma).map_err(fmt)?;
        }
        Ok(model)
    }
}

impl VarModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        VarModel::try_from(file)
    }
}

pub fn save_model(model: &VarModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<VarModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    VarModel::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HAND_WRITTEN: &str = r#"{
        "version": 1,
        "variables": [
            {"name": "cheerful", "polarity": "positive", "mean": 5.0, "sd": 2.0},
            {"name": "agitated", "polarity": "negative", "mean": 4.0, "sd": 1.0}
        ],
        "lags": 1,
        "coefficient_blocks": [[[0.5, 0.0], [0.3, 0.2]]],
        "constant": [0.1, 0.2],
        "residual_covariance": [[1.0, 0.0], [0.0, 1.0]],
        "interval_minutes": 360
    }"#;

    #[test]
    fn hand_written_file_loads() {
        let model = VarModel::from_json(HAND_WRITTEN).unwrap();
        assert_eq!(model.dim(), 2);
        assert_eq!(model.lags(), 1);
        assert_eq!(model.coefficient_blocks()[0][(1, 0)], 0.3);
        assert!(model.residuals().is_none());
        assert_eq!(model.interval_minutes(), 360.0);
    }

    #[test]
    fn missing_covariance_and_residuals_rejected() {
        let text = HAND_WRITTEN.replace(
            r#""residual_covariance": [[1.0, 0.0], [0.0, 1.0]],"#,
            "",
        );
        assert!(matches!(
            VarModel::from_json(&text).unwrap_err(),
            Error::ModelFormat(_)
        ));
    }

    #[test]
    fn wrong_version_rejected() {
        let text = HAND_WRITTEN.replace(r#""version": 1"#, r#""version": 7"#);
        assert!(matches!(
            VarModel::from_json(&text).unwrap_err(),
            Error::ModelFormat(_)
        ));
    }

    #[test]
    fn lag_count_mismatch_rejected() {
        let text = HAND_WRITTEN.replace(r#""lags": 1"#, r#""lags": 2"#);
        assert!(matches!(
            VarModel::from_json(&text).unwrap_err(),
            Error::ModelFormat(_)
        ));
    }

    #[test]
    fn ragged_block_rejected() {
        let text = HAND_WRITTEN.replace("[0.3, 0.2]", "[0.3]");
        assert!(matches!(
            VarModel::from_json(&text).unwrap_err(),
            Error::ModelFormat(_)
        ));
    }

    #[test]
    fn file_round_trip() {
        let model = VarModel::from_json(HAND_WRITTEN).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&model, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
    }
}
