use nalgebra::{DMatrix, DVector};

use super::{EmaDataset, VarModel, VariableMeta};
use crate::error::{Error, Result};

/// Relative singular-value cutoff below which the regressor matrix is treated as singular.
const RANK_TOL: f64 = 1e-12;

/// Least-squares estimates of one VAR(p) equation system.
pub(crate) struct OlsEstimate {
    pub blocks: Vec<DMatrix<f64>>,
    pub constant: DVector<f64>,
    pub exo: Option<DMatrix<f64>>,
    pub residuals: DMatrix<f64>,
}

/// Fits a VAR(`lags`) model by per-equation ordinary least squares with intercept.
///
/// Exogenous columns of the dataset enter as contemporaneous regressors. Variable
/// means and sds are copied from the dataset.
pub fn fit_var(data: &EmaDataset, lags: usize) -> Result<VarModel> {
    for v in data.variables() {
        if !(v.sd > 0.0) {
            return Err(Error::Fit(format!(
                "variable `{}` has zero variance",
                v.name
            )));
        }
    }
    let exo = data.exogenous();
    let est = ols(data.rows(), exo.map(|e| &e.rows), lags)?;
    let variables: Vec<VariableMeta> = data.variables().to_vec();
    let mut model = VarModel::new(variables, est.blocks, est.constant, data.interval_minutes())?;
    if let (Some(e), Some(coef)) = (exo, est.exo) {
        model = model.with_exogenous(e.names.clone(), coef)?;
    }
    model.with_residuals(est.residuals)
}

pub(crate) fn ols(rows: &DMatrix<f64>, exo: Option<&DMatrix<f64>>, lags: usize) -> Result<OlsEstimate> {
    if lags == 0 {
        return Err(Error::Fit("lag order must be at least 1".into()));
    }
    let t_len = rows.nrows();
    let m = rows.ncols();
    let l = exo.map_or(0, |e| e.ncols());
    if let Some(e) = exo {
        if e.nrows() != t_len {
            return Err(Error::Fit("exogenous rows do not match the series".into()));
        }
    }
    let needed = m * lags + lags + 1 + l;
    if t_len < needed {
        return Err(Error::Fit(format!(
            "{t_len} observations are too few for {m} variables at lag {lags} (need {needed})"
        )));
    }

    let n = t_len - lags;
    let k = 1 + m * lags + l;
    let mut x = DMatrix::<f64>::zeros(n, k);
    let mut y = DMatrix::<f64>::zeros(n, m);
    for r in 0..n {
        let t = r + lags;
        x[(r, 0)] = 1.0;
        for lag in 1..=lags {
            for j in 0..m {
                x[(r, 1 + (lag - 1) * m + j)] = rows[(t - lag, j)];
            }
        }
        if let Some(e) = exo {
            for j in 0..l {
                x[(r, 1 + m * lags + j)] = e[(t, j)];
            }
        }
        for j in 0..m {
            y[(r, j)] = rows[(t, j)];
        }
    }

    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_TOL * smax {
        return Err(Error::Fit("regressor matrix is singular".into()));
    }
    let beta = svd
        .solve(&y, RANK_TOL * smax)
        .map_err(|e| Error::Fit(e.to_string()))?;

    let residuals = &y - &x * &beta;
    let constant = beta.row(0).transpose();
    let blocks = (0..lags)
        .map(|lag| {
            let start = 1 + lag * m;
            beta.rows(start, m).transpose()
        })
        .collect();
    let exo_coef = (l > 0).then(|| beta.rows(1 + m * lags, l).transpose());
    Ok(OlsEstimate {
        blocks,
        constant,
        exo: exo_coef,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Polarity;

    fn dataset(rows: DMatrix<f64>) -> EmaDataset {
        let m = rows.ncols();
        EmaDataset::new(
            (0..m).map(|j| format!("v{j}")).collect(),
            vec![Polarity::Positive; m],
            rows,
            60.0,
        )
        .unwrap()
    }

    #[test]
    fn constant_column_is_fit_error() {
        let rows = DMatrix::from_fn(40, 2, |t, j| if j == 0 { 5.0 } else { (t as f64).sin() });
        assert!(matches!(fit_var(&dataset(rows), 1), Err(Error::Fit(_))));
    }

    #[test]
    fn too_few_rows_is_fit_error() {
        let rows = DMatrix::from_fn(5, 3, |t, j| ((t * 3 + j) as f64).sin());
        assert!(matches!(fit_var(&dataset(rows), 2), Err(Error::Fit(_))));
    }

    #[test]
    fn collinear_columns_are_singular() {
        let rows = DMatrix::from_fn(50, 2, |t, j| {
            let base = ((t * 7) % 13) as f64;
            if j == 0 { base } else { 2.0 * base + 1.0 }
        });
        assert!(matches!(fit_var(&dataset(rows), 1), Err(Error::Fit(_))));
    }

    #[test]
    fn recovers_noiseless_ar1() {
        let mut rows = DMatrix::zeros(60, 1);
        rows[(0, 0)] = 8.0;
        for t in 1..60 {
            rows[(t, 0)] = 1.0 + 0.8 * rows[(t - 1, 0)];
        }
        let model = fit_var(&dataset(rows), 1).unwrap();
        assert!((model.coefficient_blocks()[0][(0, 0)] - 0.8).abs() < 1e-8);
        assert!((model.constant()[0] - 1.0).abs() < 1e-8);
        assert!(model.residuals().unwrap().amax() < 1e-8);
    }

    #[test]
    fn exogenous_coefficient_recovered() {
        let mut rows = DMatrix::zeros(80, 1);
        let exo = DMatrix::from_fn(80, 1, |t, _| ((t * 5) % 7) as f64);
        rows[(0, 0)] = 3.0;
        for t in 1..80 {
            rows[(t, 0)] = 0.5 + 0.4 * rows[(t - 1, 0)] + 0.25 * exo[(t, 0)];
        }
        let ds = dataset(rows)
            .with_exogenous(crate::model::Exogenous {
                names: vec!["w".into()],
                rows: exo,
            })
            .unwrap();
        let model = fit_var(&ds, 1).unwrap();
        assert_eq!(model.exo_names(), ["w".to_string()]);
        assert!((model.exo_coefficients().unwrap()[(0, 0)] - 0.25).abs() < 1e-8);
        assert!((model.coefficient_blocks()[0][(0, 0)] - 0.4).abs() < 1e-8);
    }
}
