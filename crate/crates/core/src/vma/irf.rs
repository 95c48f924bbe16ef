use std::borrow::Cow;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{calculate_vma, orthogonalize, polarity_transform, VmaCoefficients};
use crate::error::{Error, Result};
use crate::model::VarModel;

/// Unit shock `alpha(x)`: one at index `x`, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockVector(DVector<f64>);

impl ShockVector {
    pub fn unit(m: usize, x: usize) -> Result<Self> {
        if x >= m {
            return Err(Error::Domain(format!(
                "shock index {x} out of range for {m} variables"
            )));
        }
        let mut v = DVector::zeros(m);
        v[x] = 1.0;
        Ok(Self(v))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

/// Responses of all variables to the shock vector `s` for steps `0..=k`.
///
/// Column 0 is `s` itself; column `t >= 1` is `sum_{j=1}^{t} C_{t,j} s`.
pub fn calculate_irf(s: &DVector<f64>, vma: &VmaCoefficients, k: usize) -> Result<DMatrix<f64>> {
    if k > vma.horizon() {
        return Err(Error::Domain(format!(
            "horizon {k} exceeds the VMA horizon {}",
            vma.horizon()
        )));
    }
    let m = vma.dim();
    if s.len() != m {
        return Err(Error::Domain(format!(
            "shock has length {}, model has {m} variables",
            s.len()
        )));
    }
    let mut out = DMatrix::zeros(m, k + 1);
    out.set_column(0, s);
    for t in 1..=k {
        let mut acc = DVector::zeros(m);
        for j in 1..=t {
            if let Some(c) = vma.block(t, j) {
                acc += c * s;
            }
        }
        out.set_column(t, &acc);
    }
    Ok(out)
}

/// Response of variable `response` to a shock on `impulse`, steps `0..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseResponse {
    pub impulse: usize,
    pub response: usize,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    pub interval_minutes: f64,
}

impl ImpulseResponse {
    pub fn horizon(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn has_bands(&self) -> bool {
        self.lower.is_some() && self.upper.is_some()
    }

    /// Net area under the response over steps `0..=k`.
    pub fn cumulative(&self, k: usize) -> f64 {
        cumulative(&self.values, k)
    }
}

/// Signed sum of `values[0..=k]` (clamped to the available steps).
pub fn cumulative(values: &[f64], k: usize) -> f64 {
    values.iter().take(k.saturating_add(1)).sum()
}

/// Zeroes every step whose confidence band contains zero.
pub fn significance_mask(resp: &ImpulseResponse) -> Result<ImpulseResponse> {
    let (Some(lower), Some(upper)) = (&resp.lower, &resp.upper) else {
        return Err(Error::Domain(
            "significance masking needs confidence bands".into(),
        ));
    };
    let mut out = resp.clone();
    for (t, v) in out.values.iter_mut().enumerate() {
        if lower[t] <= 0.0 && upper[t] >= 0.0 {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// How responses are derived from a model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IrfOptions {
    /// Replace the step-0 identity with the Cholesky factor of the residual covariance.
    #[serde(default)]
    pub orthogonalized: bool,
    /// Causal ordering for the Cholesky factor; defaults to model order.
    #[serde(default)]
    pub ordering: Option<Vec<usize>>,
    /// Apply the polarity sign transform before computing responses.
    #[serde(default)]
    pub polarity_transform: bool,
}

impl IrfOptions {
    pub fn transformed(mut self) -> Self {
        self.polarity_transform = true;
        self
    }
}

/// All `m x m` impulse responses of a model for one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseGrid {
    pub names: Vec<String>,
    pub horizon: usize,
    pub interval_minutes: f64,
    pub options: IrfOptions,
    pub unstable: bool,
    /// Set once [`ResponseGrid::masked`] has been applied.
    #[serde(default)]
    pub masked: bool,
    /// Impulse-major: entry `x * m + y` is the response of `y` to `x`.
    pub responses: Vec<ImpulseResponse>,
}

impl ResponseGrid {
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, impulse: usize, response: usize) -> &ImpulseResponse {
        &self.responses[impulse * self.dim() + response]
    }

    pub fn has_bands(&self) -> bool {
        self.responses.iter().all(ImpulseResponse::has_bands)
    }

    /// Grid with every response significance-masked.
    pub fn masked(&self) -> Result<ResponseGrid> {
        let responses = self
            .responses
            .iter()
            .map(significance_mask)
            .collect::<Result<Vec<_>>>()?;
        Ok(ResponseGrid {
            responses,
            masked: true,
            ..self.clone()
        })
    }

    pub(crate) fn flat_values(&self) -> Vec<f64> {
        self.responses
            .iter()
            .flat_map(|r| r.values.iter().copied())
            .collect()
    }

    pub fn check_index(&self, idx: usize) -> Result<()> {
        if idx >= self.dim() {
            return Err(Error::Domain(format!(
                "variable index {idx} out of range for {} variables",
                self.dim()
            )));
        }
        Ok(())
    }
}

pub(crate) fn prepared_model<'a>(model: &'a VarModel, opts: &IrfOptions) -> Cow<'a, VarModel> {
    if opts.polarity_transform {
        Cow::Owned(polarity_transform(model))
    } else {
        Cow::Borrowed(model)
    }
}

fn impact_matrix(model: &VarModel, opts: &IrfOptions) -> Result<Option<DMatrix<f64>>> {
    if opts.orthogonalized {
        orthogonalize(model, opts.ordering.as_deref()).map(Some)
    } else {
        Ok(None)
    }
}

fn shock_for(impact: Option<&DMatrix<f64>>, m: usize, x: usize) -> Result<DVector<f64>> {
    match impact {
        Some(p) => Ok(p.column(x).into_owned()),
        None => Ok(ShockVector::unit(m, x)?.into_vector()),
    }
}

/// Computes every impulse response of `model` up to horizon `k`.
pub fn irf_grid(model: &VarModel, k: usize, opts: &IrfOptions) -> Result<ResponseGrid> {
    let model = prepared_model(model, opts);
    let m = model.dim();
    let vma = calculate_vma(&model, k)?;
    let impact = impact_matrix(&model, opts)?;
    let mut responses = Vec::with_capacity(m * m);
    for x in 0..m {
        let shock = shock_for(impact.as_ref(), m, x)?;
        let out = calculate_irf(&shock, &vma, k)?;
        for y in 0..m {
            responses.push(ImpulseResponse {
                impulse: x,
                response: y,
                values: out.row(y).iter().copied().collect(),
                lower: None,
                upper: None,
                confidence: None,
                interval_minutes: model.interval_minutes(),
            });
        }
    }
    Ok(ResponseGrid {
        names: model.names().into_iter().map(str::to_owned).collect(),
        horizon: k,
        interval_minutes: model.interval_minutes(),
        options: opts.clone(),
        unstable: vma.unstable(),
        masked: false,
        responses,
    })
}

fn check_pair(model: &VarModel, x: usize, y: usize) -> Result<()> {
    let m = model.dim();
    for idx in [x, y] {
        if idx >= m {
            return Err(Error::Domain(format!(
                "variable index {idx} out of range for {m} variables"
            )));
        }
    }
    Ok(())
}

/// Response of `y` to a unit shock on `x` for steps `0..=k`.
pub fn irf(x: usize, y: usize, k: usize, model: &VarModel, opts: &IrfOptions) -> Result<ImpulseResponse> {
    check_pair(model, x, y)?;
    let model = prepared_model(model, opts);
    let vma = calculate_vma(&model, k)?;
    let impact = impact_matrix(&model, opts)?;
    let shock = shock_for(impact.as_ref(), model.dim(), x)?;
    let out = calculate_irf(&shock, &vma, k)?;
    Ok(ImpulseResponse {
        impulse: x,
        response: y,
        values: out.row(y).iter().copied().collect(),
        lower: None,
        upper: None,
        confidence: None,
        interval_minutes: model.interval_minutes(),
    })
}

/// Net area under the response of `y` to `x` over steps `0..=k`.
pub fn irf_cum(x: usize, y: usize, k: usize, model: &VarModel, opts: &IrfOptions) -> Result<f64> {
    Ok(irf(x, y, k, model, opts)?.cumulative(k))
}

/// Net effect of `x` on all other variables, on the polarity-transformed model.
pub fn irf_total(x: usize, k: usize, model: &VarModel, opts: &IrfOptions) -> Result<f64> {
    check_pair(model, x, x)?;
    let opts = opts.clone().transformed();
    let grid = irf_grid(model, k, &opts)?;
    Ok(total_from_grid(&grid, x))
}

pub(crate) fn total_from_grid(grid: &ResponseGrid, x: usize) -> f64 {
    (0..grid.dim())
        .filter(|&y| y != x)
        .map(|y| grid.get(x, y).cumulative(grid.horizon))
        .sum()
}
