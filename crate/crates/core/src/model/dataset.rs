use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use super::{Polarity, VariableMeta};
use crate::error::{Error, Result};

/// Exogenous regressors aligned row-by-row with the endogenous series.
#[derive(Debug, Clone, PartialEq)]
pub struct Exogenous {
    pub names: Vec<String>,
    pub rows: DMatrix<f64>,
}

/// A complete, equidistant multivariate EMA series (oldest row first).
#[derive(Debug, Clone, PartialEq)]
pub struct EmaDataset {
    variables: Vec<VariableMeta>,
    rows: DMatrix<f64>,
    interval_minutes: f64,
    exogenous: Option<Exogenous>,
}

impl EmaDataset {
    /// Builds a dataset from a `T x m` matrix; means and sds are computed per column.
    pub fn new(
        names: Vec<String>,
        polarities: Vec<Polarity>,
        rows: DMatrix<f64>,
        interval_minutes: f64,
    ) -> Result<Self> {
        if names.len() != rows.ncols() || polarities.len() != rows.ncols() {
            return Err(Error::Config(format!(
                "{} names and {} polarities for {} columns",
                names.len(),
                polarities.len(),
                rows.ncols()
            )));
        }
        if !(interval_minutes > 0.0) || !interval_minutes.is_finite() {
            return Err(Error::Config(format!(
                "interval_minutes must be positive, got {interval_minutes}"
            )));
        }
        if let Some((r, c)) = first_non_finite(&rows) {
            return Err(Error::MissingData {
                row: r,
                column: names[c].clone(),
            });
        }
        let variables = names
            .into_iter()
            .zip(polarities)
            .enumerate()
            .map(|(j, (name, polarity))| {
                let (mean, sd) = column_moments(&rows, j);
                VariableMeta::new(name, polarity, mean, sd)
            })
            .collect::<Vec<_>>();
        super::validate_variables(&variables).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            variables,
            rows,
            interval_minutes,
            exogenous: None,
        })
    }

    /// Reads a CSV document (header row of names, one observation per row).
    pub fn from_csv_reader<R: Read>(
        reader: R,
        interval_minutes: f64,
        polarity_map: &HashMap<String, Polarity>,
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        for key in polarity_map.keys() {
            if !names.iter().any(|n| n == key) {
                return Err(Error::Config(format!(
                    "polarity given for unknown column `{key}`"
                )));
            }
        }
        let m = names.len();
        let mut values = Vec::new();
        let mut t = 0;
        for record in rdr.records() {
            let record = record?;
            for (j, name) in names.iter().enumerate() {
                let cell = record.get(j).unwrap_or("");
                if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                    return Err(Error::MissingData {
                        row: t,
                        column: name.clone(),
                    });
                }
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row: t,
                    column: name.clone(),
                    value: cell.to_owned(),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row: t,
                        column: name.clone(),
                        value: cell.to_owned(),
                    });
                }
                values.push(v);
            }
            t += 1;
        }
        let polarities = names
            .iter()
            .map(|n| polarity_map.get(n).copied().unwrap_or_default())
            .collect();
        let rows = DMatrix::from_row_slice(t, m, &values);
        Self::new(names, polarities, rows, interval_minutes)
    }

    /// Moves the named columns out of the endogenous set into exogenous regressors.
    pub fn split_exogenous(self, exo_names: &[String]) -> Result<Self> {
        if exo_names.is_empty() {
            return Ok(self);
        }
        let mut exo_idx = Vec::with_capacity(exo_names.len());
        for name in exo_names {
            let idx = self
                .variables
                .iter()
                .position(|v| &v.name == name)
                .ok_or_else(|| Error::Config(format!("unknown exogenous column `{name}`")))?;
            exo_idx.push(idx);
        }
        let endo_idx: Vec<usize> = (0..self.variables.len())
            .filter(|j| !exo_idx.contains(j))
            .collect();
        if endo_idx.is_empty() {
            return Err(Error::Config("no endogenous columns left".into()));
        }
        let exo_rows = self.rows.select_columns(&exo_idx);
        let rows = self.rows.select_columns(&endo_idx);
        let variables = endo_idx.iter().map(|&j| self.variables[j].clone()).collect();
        Ok(Self {
            variables,
            rows,
            interval_minutes: self.interval_minutes,
            exogenous: Some(Exogenous {
                names: exo_names.to_vec(),
                rows: exo_rows,
            }),
        })
    }

    /// Attaches an exogenous block; must have the same number of rows.
    pub fn with_exogenous(mut self, exogenous: Exogenous) -> Result<Self> {
        if exogenous.rows.nrows() != self.rows.nrows() || exogenous.rows.ncols() != exogenous.names.len() {
            return Err(Error::Config("exogenous block does not match the series".into()));
        }
        self.exogenous = Some(exogenous);
        Ok(self)
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    /// The `T x m` endogenous observations.
    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn interval_minutes(&self) -> f64 {
        self.interval_minutes
    }

    pub fn exogenous(&self) -> Option<&Exogenous> {
        self.exogenous.as_ref()
    }
}

/// Reads an EMA CSV file.
pub fn load_ema_csv(
    path: impl AsRef<Path>,
    interval_minutes: f64,
    polarity_map: &HashMap<String, Polarity>,
) -> Result<EmaDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    EmaDataset::from_csv_reader(file, interval_minutes, polarity_map)
}

fn first_non_finite(rows: &DMatrix<f64>) -> Option<(usize, usize)> {
    for r in 0..rows.nrows() {
        for c in 0..rows.ncols() {
            if !rows[(r, c)].is_finite() {
                return Some((r, c));
            }
        }
    }
    None
}

fn column_moments(rows: &DMatrix<f64>, j: usize) -> (f64, f64) {
    let n = rows.nrows();
    if n == 0 {
        return (0.0, 0.0);
    }
    let col = rows.column(j);
    let mean = col.sum() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n as f64 - 1.0)).sqrt())
}
