use serde::{Deserialize, Serialize};

use super::{AdviceOptions, Analysis};
use crate::error::{Error, Result};
use crate::model::{EmaDataset, VarModel};

/// Magnitude above which a response step counts as an effect.
pub const EFFECT_THRESHOLD: f64 = 1e-4;

/// Duration of the effect of one variable on another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectLength {
    pub total_minutes: f64,
    /// Interpolated number of steps during which the effect exceeds the threshold.
    pub total_steps: f64,
    /// Interpolated step at which the last effect interval ends, or `k` when still live.
    pub effective_horizon: f64,
}

impl EffectLength {
    pub const ZERO: EffectLength = EffectLength {
        total_minutes: 0.0,
        total_steps: 0.0,
        effective_horizon: 0.0,
    };
}

/// Walks `values[0..=k]` and measures how long `|values[i]|` stays above
/// [`EFFECT_THRESHOLD`].
///
/// Step 0 is the impulse instant. An interval that starts after step 0 has its
/// start interpolated between the neighbouring steps; every interval end is
/// interpolated the same way. An effect still live at step `k` is cut off there.
pub fn length_of_effect(values: &[f64], interval_minutes: f64, k: usize) -> EffectLength {
    let k = k.min(values.len().saturating_sub(1));
    let thr = EFFECT_THRESHOLD;
    let mut started = false;
    let mut start = 0.0;
    let mut total = 0.0;
    let mut horizon = 0.0;
    let mut d = 0.0;
    for i in 0..=k {
        let g = values[i];
        if g.abs() > thr {
            d = if g > thr { -1.0 } else { 1.0 };
            if !started {
                start = if i > 0 {
                    i as f64 - (g + d * thr) / (g - values[i - 1])
                } else {
                    0.0
                };
                started = true;
            }
        } else if started {
            let end = (i - 1) as f64 + (1.0 - (g + d * thr) / (g - values[i - 1]));
            started = false;
            total += end - start;
            horizon = end;
        }
    }
    if started {
        total += k as f64 - start;
        horizon = k as f64;
    }
    EffectLength {
        total_minutes: total * interval_minutes,
        total_steps: total,
        effective_horizon: horizon,
    }
}

impl Analysis {
    /// Effect length of a shock on `x` as seen in `y`, up to step `k`.
    pub fn effect_length(&self, x: usize, y: usize, interval_minutes: f64, k: usize) -> Result<EffectLength> {
        self.raw().check_index(x)?;
        self.raw().check_index(y)?;
        if k < 1 || k > self.horizon() {
            return Err(Error::Domain(format!(
                "horizon {k} must lie in 1..={}",
                self.horizon()
            )));
        }
        Ok(length_of_effect(&self.raw().get(x, y).values, interval_minutes, k))
    }
}

/// Effect length of a shock on `x` as seen in `y`, on the (optionally
/// significance-masked) responses of `model`.
pub fn determine_length_of_effect(
    x: usize,
    y: usize,
    interval_minutes: f64,
    k: usize,
    model: &VarModel,
    data: Option<&EmaDataset>,
    opts: &AdviceOptions,
) -> Result<EffectLength> {
    Analysis::new(model, data, k, opts)?.effect_length(x, y, interval_minutes, k)
}
