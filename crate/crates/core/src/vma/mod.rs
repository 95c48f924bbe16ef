//! Moving-average coefficients, impulse responses, polarity handling,
//! orthogonalization and bootstrap bands.

mod bootstrap;
pub(crate) mod irf;
mod orthogonal;
mod polarity;

pub use bootstrap::{bootstrap_grid, bootstrap_irf, percentile, BootstrapConfig};
pub use irf::{
    calculate_irf, cumulative, irf, irf_cum, irf_grid, irf_total, significance_mask,
    ImpulseResponse, IrfOptions, ResponseGrid, ShockVector,
};
pub use orthogonal::orthogonalize;
pub use polarity::{exo_sign_matrix, gamma_matrix, polarity_transform};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{check_stability, VarModel};

/// Block lower-triangular grid of VMA coefficients up to horizon `k`.
///
/// Row `i` (1-based) holds `C_{i,1} .. C_{i,i}`. The row sums are the
/// moving-average matrices `psi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VmaCoefficients {
    m: usize,
    rows: Vec<Vec<DMatrix<f64>>>,
    equilibrium_offset: Option<DVector<f64>>,
    unstable: bool,
}

impl VmaCoefficients {
    pub fn horizon(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// `C_{i,j}` for `1 <= j <= i <= k`; `None` above the diagonal or past the horizon.
    pub fn block(&self, i: usize, j: usize) -> Option<&DMatrix<f64>> {
        if i == 0 || j == 0 || j > i {
            return None;
        }
        self.rows.get(i - 1).and_then(|row| row.get(j - 1))
    }

    /// `psi_i`: identity for `i = 0`, otherwise the sum of row `i`.
    pub fn psi(&self, i: usize) -> Option<DMatrix<f64>> {
        if i == 0 {
            return Some(DMatrix::identity(self.m, self.m));
        }
        let row = self.rows.get(i - 1)?;
        Some(sum_blocks(self.m, row.iter()))
    }

    /// `d` with `(I - sum B) d = c`, when that system is regular.
    pub fn equilibrium_offset(&self) -> Option<&DVector<f64>> {
        self.equilibrium_offset.as_ref()
    }

    /// Set when the source model failed the stability check.
    pub fn unstable(&self) -> bool {
        self.unstable
    }
}

fn sum_blocks<'a>(m: usize, blocks: impl Iterator<Item = &'a DMatrix<f64>>) -> DMatrix<f64> {
    blocks.fold(DMatrix::zeros(m, m), |acc, b| acc + b)
}

/// Converts a VAR model into VMA coefficients for `k` steps.
///
/// `C_{i,i} = delta(B, i)` and `C_{i,j} = delta(B, j) * sum_x C_{i-j,x}` for
/// `j < i`, where `delta(B, j)` is `B^j` up to the lag order and zero beyond.
pub fn calculate_vma(model: &VarModel, k: usize) -> Result<VmaCoefficients> {
    if k < 1 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let m = model.dim();
    let p = model.lags();
    let zero = DMatrix::<f64>::zeros(m, m);
    let delta = |j: usize| -> &DMatrix<f64> {
        if j <= p {
            &model.coefficient_blocks()[j - 1]
        } else {
            &zero
        }
    };

    let mut rows: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(k);
    // row sums, memoized: psi[i] = sum_x C_{i,x}
    let mut psi: Vec<DMatrix<f64>> = Vec::with_capacity(k + 1);
    psi.push(DMatrix::identity(m, m));

    for i in 1..=k {
        let mut row = Vec::with_capacity(i);
        for j in 1..i {
            let block = if j <= p {
                delta(j) * &psi[i - j]
            } else {
                zero.clone()
            };
            row.push(block);
        }
        row.push(delta(i).clone());
        psi.push(sum_blocks(m, row.iter()));
        rows.push(row);
    }

    let stability = check_stability(model);
    if !stability.stable {
        log::warn!(
            "VAR model is not stable (spectral radius {:.6}); responses may not converge",
            stability.spectral_radius
        );
    }
    Ok(VmaCoefficients {
        m,
        rows,
        equilibrium_offset: model.equilibrium_offset(),
        unstable: !stability.stable,
    })
}
