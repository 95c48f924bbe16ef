use serde::{Deserialize, Serialize};

use super::{rank_influence, AdviceOptions, Analysis, InfluenceRanking, Locale, PercentWindow, PercentageAdvice};
use crate::error::Result;
use crate::format::to_stable_json;
use crate::model::{check_stability, EmaDataset, Polarity, Stability, VarModel, VariableMeta};
use crate::vma::{cumulative, ResponseGrid};

pub const REPORT_VERSION: u32 = 1;

/// Settings for a full advice report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    #[serde(default)]
    pub advice: AdviceOptions,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub window: PercentWindow,
    /// Size of the what-if change computed for every target. Positive
    /// variables are raised, negative ones lowered.
    #[serde(default = "default_whatif_percent")]
    pub whatif_percent: f64,
}

fn default_whatif_percent() -> f64 {
    10.0
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            advice: AdviceOptions::default(),
            theta: 0.0,
            window: PercentWindow::default(),
            whatif_percent: default_whatif_percent(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectLengthEntry {
    pub impulse: String,
    pub response: String,
    /// Cumulative raw response over the horizon.
    pub net_effect: f64,
    pub total_minutes: f64,
    pub total_steps: f64,
    pub effective_horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdviceReport {
    pub report_version: u32,
    pub horizon: usize,
    pub interval_minutes: f64,
    pub options: ReportOptions,
    pub stability: Stability,
    pub variables: Vec<VariableMeta>,
    pub ranking: InfluenceRanking,
    /// Pairs with a non-zero effect length, impulse-major.
    pub effect_lengths: Vec<EffectLengthEntry>,
    pub percentage_effects: Vec<PercentageAdvice>,
    pub impulse_responses: ResponseGrid,
    pub advice: Vec<String>,
}

impl AdviceReport {
    /// Pretty JSON with floats rounded to 12 significant digits.
    pub fn to_json(&self) -> Result<String> {
        to_stable_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Plain-text rendering for terminals.
    pub fn render_text(&self, locale: &Locale) -> String {
        let mut out = String::new();
        out.push_str(&format!("Horizon: {} steps of {} minutes\n", self.horizon, self.interval_minutes));
        if !self.stability.stable {
            out.push_str(&format!(
                "Warning: model is not stable (spectral radius {:.3})\n",
                self.stability.spectral_radius
            ));
        }
        out.push_str("\nNet effect on the other variables (SD):\n");
        for e in &self.ranking.entries {
            out.push_str(&format!("  {:>9.3}  {}\n", e.net_effect, e.variable));
        }
        out.push('\n');
        for line in &self.advice {
            out.push_str(line);
            out.push('\n');
        }
        for p in &self.percentage_effects {
            out.push('\n');
            for line in locale.whatif(p) {
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }
}

/// Builds the full report with the bundled English templates.
pub fn build_advice_report(
    model: &VarModel,
    data: Option<&EmaDataset>,
    k: usize,
    opts: &ReportOptions,
) -> Result<AdviceReport> {
    build_advice_report_with_locale(model, data, k, opts, &Locale::default())
}

pub fn build_advice_report_with_locale(
    model: &VarModel,
    data: Option<&EmaDataset>,
    k: usize,
    opts: &ReportOptions,
    locale: &Locale,
) -> Result<AdviceReport> {
    let analysis = Analysis::new(model, data, k, &opts.advice)?;
    let ranking = rank_influence(&analysis);
    let interval = model.interval_minutes();
    let vars = analysis.variables();
    let m = vars.len();

    let mut effect_lengths = Vec::new();
    for x in 0..m {
        for y in (0..m).filter(|&y| y != x) {
            let len = analysis.effect_length(x, y, interval, k)?;
            if len.total_steps > 0.0 {
                effect_lengths.push(EffectLengthEntry {
                    impulse: vars[x].name.clone(),
                    response: vars[y].name.clone(),
                    net_effect: cumulative(&analysis.raw().get(x, y).values, k),
                    total_minutes: len.total_minutes,
                    total_steps: len.total_steps,
                    effective_horizon: len.effective_horizon,
                });
            }
        }
    }

    let percentage_effects = (0..m)
        .map(|x| {
            let percent = match vars[x].polarity {
                Polarity::Positive => opts.whatif_percent,
                Polarity::Negative => -opts.whatif_percent,
            };
            analysis.percentage_effect(percent, x, opts.theta, opts.window)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut advice = Vec::new();
    match ranking.top() {
        Some(top) if top.net_effect != 0.0 => {
            let negative = vars[top.index].polarity == Polarity::Negative;
            advice.push(locale.most_influential(top, negative));
            for e in effect_lengths.iter().filter(|e| e.impulse == top.variable) {
                let len = super::EffectLength {
                    total_minutes: e.total_minutes,
                    total_steps: e.total_steps,
                    effective_horizon: e.effective_horizon,
                };
                advice.push(locale.effect_length(&e.impulse, &e.response, e.net_effect, &len));
            }
        }
        _ => advice.push(locale.no_influential()),
    }

    Ok(AdviceReport {
        report_version: REPORT_VERSION,
        horizon: k,
        interval_minutes: interval,
        options: opts.clone(),
        stability: check_stability(model),
        variables: vars.to_vec(),
        ranking,
        effect_lengths,
        percentage_effects,
        impulse_responses: analysis.raw().clone(),
        advice,
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};

    use super::*;

    fn model(b: DMatrix<f64>) -> VarModel {
        VarModel::new(
            vec![
                VariableMeta::new("var0", Polarity::Positive, 5.0, 2.0),
                VariableMeta::new("var1", Polarity::Positive, 4.0, 1.0),
            ],
            vec![b],
            DVector::zeros(2),
            360.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_model_report() {
        let r = build_advice_report(&model(DMatrix::zeros(2, 2)), None, 3, &ReportOptions::default()).unwrap();
        assert!(r.ranking.entries.iter().all(|e| e.net_effect == 0.0));
        assert!(r.effect_lengths.is_empty());
        assert_eq!(r.advice, vec![Locale::default().no_influential()]);
    }

    #[test]
    fn two_var_report() {
        let b = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.3, 0.2]);
        let r = build_advice_report(&model(b), None, 3, &ReportOptions::default()).unwrap();
        assert_eq!(r.ranking.entries[0].variable, "var0");
        assert!((r.ranking.entries[0].net_effect - 0.627).abs() < 1e-12);
        assert_eq!(r.effect_lengths.len(), 1);
        assert_eq!(r.effect_lengths[0].impulse, "var0");
        assert_eq!(r.effect_lengths[0].effective_horizon, 3.0);
        assert_eq!(r.percentage_effects.len(), 2);
        assert!(r.advice[0].contains("var0"));
        let series = &r.impulse_responses.get(0, 1).values;
        assert_eq!(series.len(), 4);
        assert!((series[3] - 0.117).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let b = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.3, 0.2]);
        let r = build_advice_report(&model(b), None, 3, &ReportOptions::default()).unwrap();
        let text = r.to_json().unwrap();
        let back = AdviceReport::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        assert_eq!(AdviceReport::from_json(&back.to_json().unwrap()).unwrap(), back);
    }

    #[test]
    fn text_rendering_mentions_every_variable() {
        let b = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.3, 0.2]);
        let r = build_advice_report(&model(b), None, 3, &ReportOptions::default()).unwrap();
        let text = r.render_text(&Locale::default());
        assert!(text.contains("0.627  var0"));
        assert!(text.contains("var1"));
    }
}
