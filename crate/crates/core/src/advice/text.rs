use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EffectLength, InfluenceEntry, PercentageAdvice};
use crate::error::{Error, Result};

const DEFAULT_LOCALE: &str = include_str!("../../locales/en.json");

const REQUIRED_KEYS: &[&str] = &[
    "no_influential",
    "most_influential",
    "verb_increase",
    "verb_decrease",
    "direction_positive",
    "direction_negative",
    "effect_length",
    "sign_positive",
    "sign_negative",
    "whatif",
    "whatif_none",
];

/// Sentence templates with `{placeholder}` slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Locale {
    templates: BTreeMap<String, String>,
}

impl Default for Locale {
    fn default() -> Self {
        Self::from_json(DEFAULT_LOCALE).expect("bundled locale is valid")
    }
}

impl Locale {
    pub fn from_json(text: &str) -> Result<Self> {
        let locale: Locale = serde_json::from_str(text)?;
        if let Some(missing) = REQUIRED_KEYS.iter().find(|k| !locale.templates.contains_key(**k)) {
            return Err(Error::Config(format!("locale is missing template '{missing}'")));
        }
        Ok(locale)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn get(&self, key: &str) -> &str {
        self.templates.get(key).map(String::as_str).unwrap_or("")
    }

    fn fill(&self, key: &str, args: &[(&str, &str)]) -> String {
        let mut out = self.get(key).to_owned();
        for (name, value) in args {
            out = out.replace(&format!("{{{name}}}"), value);
        }
        out
    }

    pub fn no_influential(&self) -> String {
        self.get("no_influential").to_owned()
    }

    /// Sentence for the top-ranked variable. `negative` refers to its polarity.
    pub fn most_influential(&self, entry: &InfluenceEntry, negative: bool) -> String {
        // for a negative variable the transformed scale reads "less of it"
        let verb = if negative { "verb_decrease" } else { "verb_increase" };
        let direction = if entry.net_effect >= 0.0 {
            "direction_positive"
        } else {
            "direction_negative"
        };
        self.fill(
            "most_influential",
            &[
                ("verb", self.get(verb)),
                ("variable", &entry.variable),
                ("direction", self.get(direction)),
                ("effect", &format!("{:.3}", entry.net_effect)),
            ],
        )
    }

    pub fn effect_length(&self, impulse: &str, response: &str, net_effect: f64, length: &EffectLength) -> String {
        let sign = if net_effect >= 0.0 { "sign_positive" } else { "sign_negative" };
        self.fill(
            "effect_length",
            &[
                ("impulse", impulse),
                ("sign", self.get(sign)),
                ("response", response),
                ("minutes", &format!("{:.3}", length.total_minutes)),
                ("steps", &format!("{:.3}", length.total_steps)),
            ],
        )
    }

    /// One line per suggestion, or a single line when there is none.
    pub fn whatif(&self, advice: &PercentageAdvice) -> Vec<String> {
        let verb = self.get(if advice.desired_percent < 0.0 {
            "verb_decrease"
        } else {
            "verb_increase"
        });
        if advice.suggestions.is_empty() {
            return vec![self.fill(
                "whatif_none",
                &[
                    ("verb", verb),
                    ("target", &advice.target),
                    ("percent", &format!("{:.2}", advice.desired_percent.abs())),
                ],
            )];
        }
        advice
            .suggestions
            .iter()
            .map(|s| {
                self.fill(
                    "whatif",
                    &[
                        ("verb", verb),
                        ("target", &advice.target),
                        ("variable", &s.variable),
                        ("required", &format!("{:.2}", s.required_percent)),
                    ],
                )
            })
            .collect()
    }
}
