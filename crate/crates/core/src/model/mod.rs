//! VAR model types, dataset ingestion, least-squares fitting, stability
//! checks and model file I/O.

mod dataset;
pub(crate) mod fit;
mod io;
mod stability;

pub use dataset::{load_ema_csv, EmaDataset, Exogenous};
pub use fit::fit_var;
pub use io::{load_model, save_model, ModelFile, MODEL_FILE_VERSION};
pub use stability::{check_stability, CompanionMatrix, Stability, STABILITY_MARGIN};

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interpretation of a variable with respect to well-being.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    #[default]
    Positive,
    Negative,
}

impl Polarity {
    /// `+1.0` for positive variables, `-1.0` for negative ones.
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }
}

/// Name, polarity and answer-scale moments of one endogenous variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableMeta {
    pub name: String,
    pub polarity: Polarity,
    pub mean: f64,
    pub sd: f64,
}

impl VariableMeta {
    pub fn new(name: impl Into<String>, polarity: Polarity, mean: f64, sd: f64) -> Self {
        Self {
            name: name.into(),
            polarity,
            mean,
            sd,
        }
    }
}

pub(crate) fn validate_variables(variables: &[VariableMeta]) -> Result<()> {
    if variables.is_empty() {
        return Err(Error::InvalidModel("model needs at least one variable".into()));
    }
    let mut seen = HashSet::new();
    for v in variables {
        if v.name.is_empty() {
            return Err(Error::InvalidModel("variable names must be non-empty".into()));
        }
        if !seen.insert(v.name.as_str()) {
            return Err(Error::InvalidModel(format!(
                "duplicate variable name `{}`",
                v.name
            )));
        }
        if !(v.sd >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "variable `{}` has negative or undefined sd {}",
                v.name, v.sd
            )));
        }
    }
    Ok(())
}

/// Tolerance on the symmetry of the residual covariance matrix.
const SYMMETRY_TOL: f64 = 1e-10;
/// Tolerance between a stored covariance and the covariance of stored residuals.
const COVARIANCE_TOL: f64 = 1e-8;

/// A fitted VAR(p) model.
///
/// `coefficient_blocks[l]` is the lag `l + 1` matrix: row = target variable,
/// column = source variable. The model is immutable once built; the `with_*`
/// constructors validate their input.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    variables: Vec<VariableMeta>,
    coefficient_blocks: Vec<DMatrix<f64>>,
    constant: DVector<f64>,
    exo_names: Vec<String>,
    exo_coefficients: Option<DMatrix<f64>>,
    residuals: Option<DMatrix<f64>>,
    residual_covariance: DMatrix<f64>,
    interval_minutes: f64,
}

impl VarModel {
    /// Builds a model with identity residual covariance and no exogenous terms.
    pub fn new(
        variables: Vec<VariableMeta>,
        coefficient_blocks: Vec<DMatrix<f64>>,
        constant: DVector<f64>,
        interval_minutes: f64,
    ) -> Result<Self> {
        validate_variables(&variables)?;
        let m = variables.len();
        if coefficient_blocks.is_empty() {
            return Err(Error::InvalidModel("model needs at least one lag".into()));
        }
        for (l, block) in coefficient_blocks.iter().enumerate() {
            if block.nrows() != m || block.ncols() != m {
                return Err(Error::InvalidModel(format!(
                    "coefficient block for lag {} is {}x{}, expected {m}x{m}",
                    l + 1,
                    block.nrows(),
                    block.ncols()
                )));
            }
            if block.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "coefficient block for lag {} has non-finite entries",
                    l + 1
                )));
            }
        }
        if constant.len() != m {
            return Err(Error::InvalidModel(format!(
                "constant has length {}, expected {m}",
                constant.len()
            )));
        }
        if !(interval_minutes > 0.0) || !interval_minutes.is_finite() {
            return Err(Error::InvalidModel(format!(
                "interval_minutes must be positive, got {interval_minutes}"
            )));
        }
        Ok(Self {
            variables,
            coefficient_blocks,
            constant,
            exo_names: Vec::new(),
            exo_coefficients: None,
            residuals: None,
            residual_covariance: DMatrix::identity(m, m),
            interval_minutes,
        })
    }

    /// Attaches exogenous coefficients (`m x l`, one column per name).
    pub fn with_exogenous(mut self, names: Vec<String>, coefficients: DMatrix<f64>) -> Result<Self> {
        if coefficients.nrows() != self.dim() || coefficients.ncols() != names.len() {
            return Err(Error::InvalidModel(format!(
                "exogenous coefficients are {}x{}, expected {}x{}",
                coefficients.nrows(),
                coefficients.ncols(),
                self.dim(),
                names.len()
            )));
        }
        self.exo_names = names;
        self.exo_coefficients = Some(coefficients);
        Ok(self)
    }

    /// Sets the residual covariance. Must be symmetric and agree with stored residuals.
    pub fn with_covariance(mut self, sigma: DMatrix<f64>) -> Result<Self> {
        let m = self.dim();
        if sigma.nrows() != m || sigma.ncols() != m {
            return Err(Error::InvalidModel(format!(
                "residual covariance is {}x{}, expected {m}x{m}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if (&sigma - sigma.transpose()).amax() > SYMMETRY_TOL {
            return Err(Error::InvalidModel("residual covariance is not symmetric".into()));
        }
        if sigma.diagonal().iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidModel(
                "residual covariance has a negative variance".into(),
            ));
        }
        if let Some(res) = &self.residuals {
            if (&sample_covariance(res) - &sigma).amax() > COVARIANCE_TOL {
                return Err(Error::InvalidModel(
                    "residual covariance disagrees with the stored residuals".into(),
                ));
            }
        }
        self.residual_covariance = sigma;
        Ok(self)
    }

    /// Stores fit residuals and replaces the covariance with their sample covariance.
    pub fn with_residuals(mut self, residuals: DMatrix<f64>) -> Result<Self> {
        if residuals.ncols() != self.dim() {
            return Err(Error::InvalidModel(format!(
                "residuals have {} columns, expected {}",
                residuals.ncols(),
                self.dim()
            )));
        }
        if residuals.nrows() < 2 {
            return Err(Error::InvalidModel("need at least two residual rows".into()));
        }
        self.residual_covariance = sample_covariance(&residuals);
        self.residuals = Some(residuals);
        Ok(self)
    }

    /// Returns a copy with different variable metadata (same count and order).
    pub fn with_variables(mut self, variables: Vec<VariableMeta>) -> Result<Self> {
        validate_variables(&variables)?;
        if variables.len() != self.dim() {
            return Err(Error::InvalidModel(format!(
                "got {} variables, model has {}",
                variables.len(),
                self.dim()
            )));
        }
        self.variables = variables;
        Ok(self)
    }

    pub fn with_interval_minutes(mut self, interval_minutes: f64) -> Result<Self> {
        if !(interval_minutes > 0.0) || !interval_minutes.is_finite() {
            return Err(Error::InvalidModel(format!(
                "interval_minutes must be positive, got {interval_minutes}"
            )));
        }
        self.interval_minutes = interval_minutes;
        Ok(self)
    }

    /// Replaces the coefficient blocks, keeping everything else.
    pub(crate) fn map_parts(
        &self,
        blocks: Vec<DMatrix<f64>>,
        constant: DVector<f64>,
        exo: Option<DMatrix<f64>>,
        residuals: Option<DMatrix<f64>>,
        sigma: DMatrix<f64>,
    ) -> Self {
        Self {
            variables: self.variables.clone(),
            coefficient_blocks: blocks,
            constant,
            exo_names: self.exo_names.clone(),
            exo_coefficients: exo,
            residuals,
            residual_covariance: sigma,
            interval_minutes: self.interval_minutes,
        }
    }

    /// Number of endogenous variables `m`.
    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    /// Lag order `p`.
    pub fn lags(&self) -> usize {
        self.coefficient_blocks.len()
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    pub fn names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    /// Index of the variable called `name`.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn coefficient_blocks(&self) -> &[DMatrix<f64>] {
        &self.coefficient_blocks
    }

    /// Coefficient block for lag `lag` (1-based).
    pub fn block(&self, lag: usize) -> Option<&DMatrix<f64>> {
        lag.checked_sub(1).and_then(|l| self.coefficient_blocks.get(l))
    }

    pub fn constant(&self) -> &DVector<f64> {
        &self.constant
    }

    pub fn exo_names(&self) -> &[String] {
        &self.exo_names
    }

    pub fn exo_coefficients(&self) -> Option<&DMatrix<f64>> {
        self.exo_coefficients.as_ref()
    }

    pub fn residuals(&self) -> Option<&DMatrix<f64>> {
        self.residuals.as_ref()
    }

    pub fn residual_covariance(&self) -> &DMatrix<f64> {
        &self.residual_covariance
    }

    pub fn interval_minutes(&self) -> f64 {
        self.interval_minutes
    }

    /// Polarity signs (`vlabels`) in variable order.
    pub fn polarity_signs(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.variables.iter().map(|v| v.polarity.sign()))
    }

    /// Equilibrium offset `d` solving `(I - sum B) d = c`, when that system is regular.
    pub fn equilibrium_offset(&self) -> Option<DVector<f64>> {
        let m = self.dim();
        let mut lhs = DMatrix::<f64>::identity(m, m);
        for b in &self.coefficient_blocks {
            lhs -= b;
        }
        let lu = lhs.lu();
        let d = lu.solve(&self.constant)?;
        d.iter().all(|v| v.is_finite()).then_some(d)
    }
}

/// Column sample covariance (centered, `n - 1` denominator).
pub fn sample_covariance(rows: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rows.nrows();
    let means = rows.row_mean();
    let mut centered = rows.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    // exact symmetry; the product above can differ in the last ulp
    (&cov + cov.transpose()) * 0.5
}
