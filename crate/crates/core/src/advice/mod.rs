//! Advice generation: most influential variable, length of effect and the
//! percentage change needed to move a target variable.

mod influence;
mod length;
mod percentage;
mod report;
mod text;

pub use influence::{determine_most_influential, rank_influence, InfluenceEntry, InfluenceRanking};
pub use length::{determine_length_of_effect, length_of_effect, EffectLength, EFFECT_THRESHOLD};
pub use percentage::{
    determine_percentage_effect, percentage_change, PercentWindow, PercentageAdvice, SkipReason,
    Skipped, Suggestion,
};
pub use report::{build_advice_report, build_advice_report_with_locale, AdviceReport, EffectLengthEntry, ReportOptions, REPORT_VERSION};
pub use text::Locale;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{EmaDataset, VarModel, VariableMeta};
use crate::vma::{bootstrap_grid, irf_grid, BootstrapConfig, ImpulseResponse, IrfOptions, ResponseGrid};

/// Options shared by all advice generators.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdviceOptions {
    #[serde(default)]
    pub orthogonalized: bool,
    #[serde(default)]
    pub ordering: Option<Vec<usize>>,
    /// When set, responses are bootstrapped and significance-masked.
    #[serde(default)]
    pub bootstrap: Option<BootstrapConfig>,
}

impl AdviceOptions {
    fn irf_options(&self) -> IrfOptions {
        IrfOptions {
            orthogonalized: self.orthogonalized,
            ordering: self.ordering.clone(),
            polarity_transform: false,
        }
    }
}

/// Responses of one model at one horizon, in raw and polarity-transformed form.
///
/// Both grids are significance-masked when bootstrapping is enabled. The
/// transformed grid is the raw one with response `(x, y)` multiplied by
/// `vlabels[x] * vlabels[y]`, which is exactly what running the responses on
/// `Gamma o B` yields.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    variables: Vec<VariableMeta>,
    raw: ResponseGrid,
    transformed: ResponseGrid,
    bootstrap: bool,
}

impl Analysis {
    pub fn new(model: &VarModel, data: Option<&EmaDataset>, k: usize, opts: &AdviceOptions) -> Result<Self> {
        let irf_opts = opts.irf_options();
        let raw = match &opts.bootstrap {
            Some(cfg) => bootstrap_grid(model, data, k, &irf_opts, cfg)?.masked()?,
            None => irf_grid(model, k, &irf_opts)?,
        };
        let signs: Vec<f64> = model.variables().iter().map(|v| v.polarity.sign()).collect();
        let transformed = flip_grid(&raw, &signs);
        Ok(Self {
            variables: model.variables().to_vec(),
            raw,
            transformed,
            bootstrap: opts.bootstrap.is_some(),
        })
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    pub fn horizon(&self) -> usize {
        self.raw.horizon
    }

    pub fn interval_minutes(&self) -> f64 {
        self.raw.interval_minutes
    }

    pub fn bootstrapped(&self) -> bool {
        self.bootstrap
    }

    /// Responses on the original variable scale.
    pub fn raw(&self) -> &ResponseGrid {
        &self.raw
    }

    /// Responses with every variable read as "higher is better".
    pub fn transformed(&self) -> &ResponseGrid {
        &self.transformed
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }
}

fn flip_response(r: &ImpulseResponse, sign: f64) -> ImpulseResponse {
    let scale = |v: &Vec<f64>| v.iter().map(|x| x * sign).collect::<Vec<_>>();
    let (lower, upper) = if sign < 0.0 {
        (r.upper.as_ref().map(scale), r.lower.as_ref().map(scale))
    } else {
        (r.lower.clone(), r.upper.clone())
    };
    ImpulseResponse {
        values: scale(&r.values),
        lower,
        upper,
        ..r.clone()
    }
}

fn flip_grid(grid: &ResponseGrid, signs: &[f64]) -> ResponseGrid {
    let m = grid.dim();
    let responses = grid
        .responses
        .iter()
        .enumerate()
        .map(|(idx, r)| flip_response(r, signs[idx / m] * signs[idx % m]))
        .collect();
    let mut options = grid.options.clone();
    options.polarity_transform = true;
    ResponseGrid {
        responses,
        options,
        ..grid.clone()
    }
}
