use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::length::length_of_effect;
use super::{AdviceOptions, Analysis};
use crate::error::{Error, Result};
use crate::model::{EmaDataset, VarModel};
use crate::vma::cumulative;

/// Bounds on reported percentages; suggestions outside are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentWindow {
    pub min_percent: f64,
    pub max_percent: f64,
}

impl Default for PercentWindow {
    fn default() -> Self {
        Self {
            min_percent: -1000.0,
            max_percent: 1000.0,
        }
    }
}

impl PercentWindow {
    pub fn contains(&self, percent: f64) -> bool {
        percent >= self.min_percent && percent <= self.max_percent
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_percent.is_finite() && self.max_percent.is_finite()) || self.min_percent > self.max_percent {
            return Err(Error::Config(format!(
                "invalid percentage window [{}, {}]",
                self.min_percent, self.max_percent
            )));
        }
        Ok(())
    }
}

/// Change in one variable that yields the desired change in the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub variable: String,
    pub index: usize,
    pub required_percent: f64,
    /// Cumulative response of the target to this variable, in SD units.
    pub net_effect: f64,
    pub effective_horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// The target does not respond to this variable.
    NoEffect,
    /// The response is not larger than `theta`.
    BelowThreshold,
    /// The variable's mean is zero, so no relative change can be expressed.
    ZeroMean,
    /// The target's standard deviation is zero.
    ZeroSd,
    /// The required change falls outside the reporting window.
    OutsideWindow,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::NoEffect => "no_effect",
            SkipReason::BelowThreshold => "below_threshold",
            SkipReason::ZeroMean => "zero_mean",
            SkipReason::ZeroSd => "zero_sd",
            SkipReason::OutsideWindow => "outside_window",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub variable: String,
    pub index: usize,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentageAdvice {
    pub target: String,
    pub desired_percent: f64,
    pub theta: f64,
    pub window: PercentWindow,
    pub suggestions: Vec<Suggestion>,
    pub skipped: Vec<Skipped>,
}

/// Relative change `Delta_y` in `y` that moves `x` by the fraction `delta`.
///
/// `k_hat * x_mean * delta * sd_y / (y_mean * n_e * sd_x)`; callers check the
/// provisos beforehand.
pub fn percentage_change(k_hat: f64, x_mean: f64, delta: f64, sd_y: f64, y_mean: f64, n_e: f64, sd_x: f64) -> f64 {
    (k_hat * x_mean * delta * sd_y) / (y_mean * n_e * sd_x)
}

enum Outcome {
    Suggest(Suggestion),
    Skip(Skipped),
}

impl Analysis {
    /// Required percentage change in every other variable to move `x` by
    /// `desired_percent` percent.
    pub fn percentage_effect(
        &self,
        desired_percent: f64,
        x: usize,
        theta: f64,
        window: PercentWindow,
    ) -> Result<PercentageAdvice> {
        self.raw().check_index(x)?;
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::Config(format!("theta must be a finite value >= 0, got {theta}")));
        }
        if !desired_percent.is_finite() {
            return Err(Error::Config("desired percentage must be finite".into()));
        }
        window.validate()?;

        let vars = self.variables();
        let target = &vars[x];
        let delta = desired_percent / 100.0;
        let k = self.horizon();

        let outcomes: Vec<Outcome> = (0..vars.len())
            .into_par_iter()
            .filter(|&y| y != x)
            .map(|y| {
                let var = &vars[y];
                let skip = |reason| {
                    Outcome::Skip(Skipped {
                        variable: var.name.clone(),
                        index: y,
                        reason,
                    })
                };
                let values = &self.raw().get(y, x).values;
                let k_hat = length_of_effect(values, 0.0, k).effective_horizon;
                let n_e = cumulative(values, k_hat.floor() as usize);
                if n_e == 0.0 {
                    return skip(SkipReason::NoEffect);
                }
                if n_e.abs() <= theta {
                    return skip(SkipReason::BelowThreshold);
                }
                if var.mean == 0.0 {
                    return skip(SkipReason::ZeroMean);
                }
                if target.sd == 0.0 {
                    return skip(SkipReason::ZeroSd);
                }
                let percent = 100.0 * percentage_change(k_hat, target.mean, delta, var.sd, var.mean, n_e, target.sd);
                if !window.contains(percent) {
                    return skip(SkipReason::OutsideWindow);
                }
                Outcome::Suggest(Suggestion {
                    variable: var.name.clone(),
                    index: y,
                    required_percent: percent,
                    net_effect: n_e,
                    effective_horizon: k_hat,
                })
            })
            .collect();

        let mut suggestions = Vec::new();
        let mut skipped = Vec::new();
        for o in outcomes {
            match o {
                Outcome::Suggest(s) => suggestions.push(s),
                Outcome::Skip(s) => skipped.push(s),
            }
        }
        Ok(PercentageAdvice {
            target: target.name.clone(),
            desired_percent,
            theta,
            window,
            suggestions,
            skipped,
        })
    }
}

/// Required percentage change in every other variable to move `x` by
/// `desired_percent` percent over horizon `k`.
#[allow(clippy::too_many_arguments)]
pub fn determine_percentage_effect(
    desired_percent: f64,
    x: usize,
    theta: f64,
    k: usize,
    model: &VarModel,
    data: Option<&EmaDataset>,
    opts: &AdviceOptions,
    window: PercentWindow,
) -> Result<PercentageAdvice> {
    Analysis::new(model, data, k, opts)?.percentage_effect(desired_percent, x, theta, window)
}
