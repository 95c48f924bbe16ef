use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::irf::{irf_grid, ImpulseResponse, IrfOptions, ResponseGrid};
use crate::error::{Error, Result};
use crate::model::fit::ols;
use crate::model::{sample_covariance, EmaDataset, VarModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub iterations: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            confidence: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::Config("bootstrap needs at least one iteration".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

/// Linear-interpolation quantile of an ascending slice.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Everything needed to regenerate synthetic series from a fitted model.
struct Resampler<'a> {
    model: &'a VarModel,
    residuals: DMatrix<f64>,
    presample: Vec<DVector<f64>>,
    exo: Option<&'a DMatrix<f64>>,
    len: usize,
}

impl<'a> Resampler<'a> {
    fn new(model: &'a VarModel, data: Option<&'a EmaDataset>) -> Result<Self> {
        let p = model.lags();
        let m = model.dim();
        if let Some(d) = data {
            if d.dim() != m {
                return Err(Error::Config(format!(
                    "dataset has {} columns, model has {m} variables",
                    d.dim()
                )));
            }
        }
        // exogenous regressors are only replayed when both sides carry them
        let exo = match (data.and_then(EmaDataset::exogenous), model.exo_coefficients()) {
            (Some(e), Some(xi)) if e.rows.ncols() == xi.ncols() => Some(&e.rows),
            (None, Some(_)) if data.is_some() => {
                return Err(Error::Config(
                    "model has exogenous terms but the dataset has none".into(),
                ))
            }
            _ => None,
        };
        let residuals = match (model.residuals(), data) {
            (Some(r), _) => r.clone(),
            (None, Some(d)) => residuals_on(model, d.rows(), exo)?,
            (None, None) => {
                return Err(Error::BootstrapUnavailable(
                    "model has no residuals and no dataset was supplied".into(),
                ))
            }
        };
        let (presample, len) = match data {
            Some(d) => (
                (0..p).map(|t| d.rows().row(t).transpose()).collect(),
                d.len(),
            ),
            None => {
                let start = model
                    .equilibrium_offset()
                    .unwrap_or_else(|| DVector::zeros(m));
                (vec![start; p], residuals.nrows() + p)
            }
        };
        let exo = if data.is_some() { exo } else { None };
        Ok(Self {
            model,
            residuals,
            presample,
            exo,
            len,
        })
    }

    fn synthetic_series(&self, rng: &mut impl Rng) -> DMatrix<f64> {
        let m = self.model.dim();
        let p = self.model.lags();
        let n_res = self.residuals.nrows();
        let blocks = self.model.coefficient_blocks();
        let xi = self.exo.and(self.model.exo_coefficients());
        let mut out = DMatrix::zeros(self.len, m);
        for (t, row) in self.presample.iter().enumerate() {
            out.set_row(t, &row.transpose());
        }
        for t in p..self.len {
            let mut y = self.model.constant().clone();
            for (l, b) in blocks.iter().enumerate() {
                y += b * out.row(t - l - 1).transpose();
            }
            if let (Some(xi), Some(x)) = (xi, self.exo) {
                y += xi * x.row(t).transpose();
            }
            let draw = rng.random_range(0..n_res);
            y += self.residuals.row(draw).transpose();
            out.set_row(t, &y.transpose());
        }
        out
    }

    fn replicate(&self, seed: u64, iteration: usize, k: usize, opts: &IrfOptions) -> Option<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(iteration as u64);
        let series = self.synthetic_series(&mut rng);
        let est = ols(&series, self.exo, self.model.lags()).ok()?;
        let sigma = sample_covariance(&est.residuals);
        let refit = self
            .model
            .map_parts(est.blocks, est.constant, est.exo, Some(est.residuals), sigma);
        irf_grid(&refit, k, opts).ok().map(|g| g.flat_values())
    }
}

fn residuals_on(model: &VarModel, rows: &DMatrix<f64>, exo: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    let p = model.lags();
    let m = model.dim();
    if rows.nrows() <= p + 1 {
        return Err(Error::BootstrapUnavailable("dataset is too short".into()));
    }
    let mut res = DMatrix::zeros(rows.nrows() - p, m);
    for t in p..rows.nrows() {
        let mut e = rows.row(t).transpose() - model.constant();
        for (l, b) in model.coefficient_blocks().iter().enumerate() {
            e -= b * rows.row(t - l - 1).transpose();
        }
        if let (Some(xi), Some(x)) = (model.exo_coefficients(), exo) {
            e -= xi * x.row(t).transpose();
        }
        res.set_row(t - p, &e.transpose());
    }
    Ok(res)
}

/// Residual-bootstrap percentile bands for every response of the model.
///
/// Each iteration resamples residuals with replacement, regenerates a series
/// from the fitted model, refits at the same lag order and recomputes the
/// responses with the same options. Iteration `i` draws from its own ChaCha
/// stream derived from `(seed, i)`, so results do not depend on how many
/// worker threads run the iterations. Refits that fail are dropped.
pub fn bootstrap_grid(
    model: &VarModel,
    data: Option<&EmaDataset>,
    k: usize,
    opts: &IrfOptions,
    cfg: &BootstrapConfig,
) -> Result<ResponseGrid> {
    cfg.validate()?;
    let mut grid = irf_grid(model, k, opts)?;
    let resampler = Resampler::new(model, data)?;

    let draws: Vec<Vec<f64>> = (0..cfg.iterations)
        .into_par_iter()
        .map(|i| resampler.replicate(cfg.seed, i, k, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    if draws.is_empty() {
        return Err(Error::Fit("every bootstrap refit failed".into()));
    }
    if draws.len() < cfg.iterations {
        log::warn!(
            "{} of {} bootstrap refits failed and were dropped",
            cfg.iterations - draws.len(),
            cfg.iterations
        );
    }

    let alpha = (1.0 - cfg.confidence) / 2.0;
    let steps = k + 1;
    let mut column = vec![0.0; draws.len()];
    for (r, resp) in grid.responses.iter_mut().enumerate() {
        let mut lower = Vec::with_capacity(steps);
        let mut upper = Vec::with_capacity(steps);
        for t in 0..steps {
            let cell = r * steps + t;
            for (slot, d) in column.iter_mut().zip(&draws) {
                *slot = d[cell];
            }
            column.sort_by(f64::total_cmp);
            lower.push(percentile(&column, alpha));
            upper.push(percentile(&column, 1.0 - alpha));
        }
        resp.lower = Some(lower);
        resp.upper = Some(upper);
        resp.confidence = Some(cfg.confidence);
    }
    Ok(grid)
}

/// Bootstrapped response of `y` to a shock on `x`.
pub fn bootstrap_irf(
    model: &VarModel,
    data: Option<&EmaDataset>,
    x: usize,
    y: usize,
    k: usize,
    cfg: &BootstrapConfig,
    opts: &IrfOptions,
) -> Result<ImpulseResponse> {
    let m = model.dim();
    if x >= m || y >= m {
        return Err(Error::Domain(format!(
            "variable index out of range for {m} variables"
        )));
    }
    let grid = bootstrap_grid(model, data, k, opts, cfg)?;
    Ok(grid.get(x, y).clone())
}
