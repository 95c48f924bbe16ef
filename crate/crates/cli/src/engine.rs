//! Computation core shared by the command line and the HTTP service.

use std::collections::HashMap;
use std::io::Read;

use impulse_core::advice::{
    build_advice_report_with_locale, rank_influence, AdviceOptions, AdviceReport, Analysis, EffectLength,
    InfluenceRanking, Locale, PercentageAdvice,
};
use impulse_core::vma::{bootstrap_grid, irf_grid, IrfOptions, ResponseGrid};
use impulse_core::{check_stability, fit_var, EmaDataset, Polarity, Stability, VarModel, VariableMeta};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{EngineError, EngineResult};

/// One step of a plotted response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotStep {
    pub t: usize,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub impulse: String,
    pub response: String,
    pub steps: Vec<PlotStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfResult {
    pub horizon: usize,
    pub bootstrap: bool,
    pub orthogonalized: bool,
    pub unstable: bool,
    pub confidence: Option<f64>,
    pub series: Vec<PlotSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectLengthResult {
    pub impulse: String,
    pub response: String,
    pub horizon: usize,
    pub bootstrap: bool,
    pub interval_minutes: f64,
    pub total_minutes: f64,
    pub total_steps: f64,
    pub effective_horizon: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub names: Vec<String>,
    pub variables: Vec<VariableMeta>,
    pub interval_minutes: f64,
    pub lags: usize,
    pub exogenous: Vec<String>,
    pub bootstrap_available: bool,
    pub stability: Stability,
}

/// A model plus the data it was fitted on, when known.
#[derive(Debug, Clone)]
pub struct Engine {
    model: VarModel,
    data: Option<EmaDataset>,
    locale: Locale,
}

impl Engine {
    pub fn new(model: VarModel, data: Option<EmaDataset>) -> EngineResult<Self> {
        if let Some(d) = &data {
            let names: Vec<&str> = d.variables().iter().map(|v| v.name.as_str()).collect();
            if names != model.names() {
                return Err(EngineError::field(
                    "data",
                    format!(
                        "columns [{}] do not match the model variables [{}]",
                        names.join(", "),
                        model.names().join(", ")
                    ),
                ));
            }
        }
        Ok(Self {
            model,
            data,
            locale: Locale::default(),
        })
    }

    /// Fits a VAR on CSV data and keeps the data for bootstrapping.
    pub fn fit_csv(
        reader: impl Read,
        lags: usize,
        interval_minutes: f64,
        negative: &[String],
        exogenous: &[String],
    ) -> EngineResult<Self> {
        let data = read_dataset(reader, interval_minutes, negative, exogenous)?;
        let model = fit_var(&data, lags)?;
        Self::new(model, Some(data))
    }

    pub fn with_locale(mut self, locale: Locale) -> Self {
        self.locale = locale;
        self
    }

    pub fn model(&self) -> &VarModel {
        &self.model
    }

    pub fn data(&self) -> Option<&EmaDataset> {
        self.data.as_ref()
    }

    pub fn bootstrap_available(&self) -> bool {
        self.model.residuals().is_some() || self.data.is_some()
    }

    pub fn meta(&self) -> ModelMeta {
        ModelMeta {
            names: self.names(),
            variables: self.model.variables().to_vec(),
            interval_minutes: self.model.interval_minutes(),
            lags: self.model.lags(),
            exogenous: self.model.exo_names().to_vec(),
            bootstrap_available: self.bootstrap_available(),
            stability: check_stability(&self.model),
        }
    }

    fn names(&self) -> Vec<String> {
        self.model.names().into_iter().map(str::to_owned).collect()
    }

    pub fn index_of(&self, name: &str) -> EngineResult<usize> {
        self.model
            .index_of(name)
            .ok_or_else(|| EngineError::UnknownVariable {
                name: name.to_owned(),
                valid: self.names(),
            })
    }

    fn prepared(&self, cfg: &RunConfig) -> EngineResult<(std::borrow::Cow<'_, VarModel>, AdviceOptions)> {
        cfg.validate().map_err(EngineError::Invalid)?;
        let model = match cfg.interval_minutes {
            Some(i) => std::borrow::Cow::Owned(self.model.clone().with_interval_minutes(i)?),
            None => std::borrow::Cow::Borrowed(&self.model),
        };
        let bootstrap = match cfg.bootstrap {
            Some(true) if !self.bootstrap_available() => return Err(EngineError::BootstrapUnavailable),
            Some(on) => on,
            None => self.bootstrap_available(),
        };
        let ordering = cfg
            .ordering
            .as_ref()
            .map(|names| names.iter().map(|n| self.index_of(n)).collect::<EngineResult<Vec<_>>>())
            .transpose()?;
        let opts = AdviceOptions {
            orthogonalized: cfg.orthogonalized,
            ordering,
            bootstrap: bootstrap.then(|| cfg.bootstrap_config()),
        };
        Ok((model, opts))
    }

    pub fn analysis(&self, cfg: &RunConfig) -> EngineResult<Analysis> {
        let (model, opts) = self.prepared(cfg)?;
        Ok(Analysis::new(&model, self.data.as_ref(), cfg.horizon, &opts)?)
    }

    pub fn report(&self, cfg: &RunConfig) -> EngineResult<AdviceReport> {
        let (model, opts) = self.prepared(cfg)?;
        let report_opts = impulse_core::advice::ReportOptions {
            advice: opts,
            theta: cfg.theta,
            window: cfg.window,
            ..Default::default()
        };
        Ok(build_advice_report_with_locale(
            &model,
            self.data.as_ref(),
            cfg.horizon,
            &report_opts,
            &self.locale,
        )?)
    }

    pub fn ranking(&self, cfg: &RunConfig) -> EngineResult<InfluenceRanking> {
        Ok(rank_influence(&self.analysis(cfg)?))
    }

    /// Responses with confidence bands when bootstrapping. Values are not masked.
    pub fn irf(&self, cfg: &RunConfig, impulse: Option<&str>, response: Option<&str>) -> EngineResult<IrfResult> {
        let x = impulse.map(|n| self.index_of(n)).transpose()?;
        let y = response.map(|n| self.index_of(n)).transpose()?;
        if x.is_none() && y.is_some() {
            return Err(EngineError::field("impulse", "required when a response is given"));
        }
        let (model, opts) = self.prepared(cfg)?;
        let irf_opts = IrfOptions {
            orthogonalized: opts.orthogonalized,
            ordering: opts.ordering.clone(),
            polarity_transform: false,
        };
        let grid = match &opts.bootstrap {
            Some(b) => bootstrap_grid(&model, self.data.as_ref(), cfg.horizon, &irf_opts, b)?,
            None => irf_grid(&model, cfg.horizon, &irf_opts)?,
        };
        let series = grid
            .responses
            .iter()
            .filter(|r| x.is_none_or(|x| r.impulse == x) && y.is_none_or(|y| r.response == y))
            .map(|r| plot_series(&grid, r))
            .collect();
        Ok(IrfResult {
            horizon: cfg.horizon,
            bootstrap: opts.bootstrap.is_some(),
            orthogonalized: opts.orthogonalized,
            unstable: grid.unstable,
            confidence: opts.bootstrap.map(|b| b.confidence),
            series,
        })
    }

    pub fn effect_length(&self, cfg: &RunConfig, impulse: &str, response: &str) -> EngineResult<EffectLengthResult> {
        let x = self.index_of(impulse)?;
        let y = self.index_of(response)?;
        let analysis = self.analysis(cfg)?;
        let interval = analysis.interval_minutes();
        let len: EffectLength = analysis.effect_length(x, y, interval, cfg.horizon)?;
        let net = analysis.raw().get(x, y).cumulative(cfg.horizon);
        Ok(EffectLengthResult {
            impulse: impulse.to_owned(),
            response: response.to_owned(),
            horizon: cfg.horizon,
            bootstrap: analysis.bootstrapped(),
            interval_minutes: interval,
            total_minutes: len.total_minutes,
            total_steps: len.total_steps,
            effective_horizon: len.effective_horizon,
            text: self.locale.effect_length(impulse, response, net, &len),
        })
    }

    pub fn whatif(&self, cfg: &RunConfig, target: &str, percent: f64) -> EngineResult<PercentageAdvice> {
        let x = self.index_of(target)?;
        if !percent.is_finite() {
            return Err(EngineError::field("percent", "must be a finite number"));
        }
        let analysis = self.analysis(cfg)?;
        Ok(analysis.percentage_effect(percent, x, cfg.theta, cfg.window)?)
    }

    pub fn whatif_text(&self, advice: &PercentageAdvice) -> Vec<String> {
        self.locale.whatif(advice)
    }
}

fn plot_series(grid: &ResponseGrid, r: &impulse_core::vma::ImpulseResponse) -> PlotSeries {
    let steps = r
        .values
        .iter()
        .enumerate()
        .map(|(t, &value)| PlotStep {
            t,
            value,
            lower: r.lower.as_ref().map(|l| l[t]),
            upper: r.upper.as_ref().map(|u| u[t]),
        })
        .collect();
    PlotSeries {
        impulse: grid.names[r.impulse].clone(),
        response: grid.names[r.response].clone(),
        steps,
    }
}

pub fn polarity_map(negative: &[String]) -> HashMap<String, Polarity> {
    negative.iter().map(|n| (n.clone(), Polarity::Negative)).collect()
}

/// Reads an EMA CSV, marking `negative` columns and splitting off `exogenous` ones.
pub fn read_dataset(
    reader: impl Read,
    interval_minutes: f64,
    negative: &[String],
    exogenous: &[String],
) -> EngineResult<EmaDataset> {
    let data = EmaDataset::from_csv_reader(reader, interval_minutes, &polarity_map(negative))?;
    Ok(data.split_exogenous(exogenous)?)
}

/// Loads bootstrap data for an existing model: polarities and exogenous
/// columns follow the model.
pub fn read_dataset_for(model: &VarModel, reader: impl Read) -> EngineResult<EmaDataset> {
    let negative: Vec<String> = model
        .variables()
        .iter()
        .filter(|v| v.polarity == Polarity::Negative)
        .map(|v| v.name.clone())
        .collect();
    read_dataset(reader, model.interval_minutes(), &negative, model.exo_names())
}
