use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::VarModel;

/// Cholesky impact matrix `P` with `P P^T = Sigma`.
///
/// `ordering` lists variable indices from most to least contemporaneously
/// exogenous; the factor is lower triangular in that order and returned in
/// the model's own variable order. With no ordering the model order is used.
pub fn orthogonalize(model: &VarModel, ordering: Option<&[usize]>) -> Result<DMatrix<f64>> {
    let m = model.dim();
    let order: Vec<usize> = match ordering {
        Some(o) => {
            let mut seen = vec![false; m];
            if o.len() != m || o.iter().any(|&i| i >= m || std::mem::replace(&mut seen[i], true)) {
                return Err(Error::Domain(format!(
                    "ordering {o:?} is not a permutation of 0..{m}"
                )));
            }
            o.to_vec()
        }
        None => (0..m).collect(),
    };
    let sigma = model.residual_covariance();
    let permuted = DMatrix::from_fn(m, m, |i, j| sigma[(order[i], order[j])]);
    let chol = permuted.cholesky().ok_or_else(|| {
        Error::Decomposition("residual covariance is not positive definite".into())
    })?;
    let lower = chol.l();
    let mut p = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            p[(order[i], order[j])] = lower[(i, j)];
        }
    }
    Ok(p)
}
