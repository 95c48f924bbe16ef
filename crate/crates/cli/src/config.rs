use impulse_core::advice::PercentWindow;
use impulse_core::vma::BootstrapConfig;
use serde::{Deserialize, Serialize};

use crate::error::FieldError;

pub const DEFAULT_HORIZON: usize = 20;
pub const DEFAULT_ITERATIONS: usize = 200;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;
/// Upper bounds that keep a single request from monopolizing the service.
pub const MAX_HORIZON: usize = 1000;
pub const MAX_ITERATIONS: usize = 10_000;

/// Settings shared by every analysis command and endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub horizon: usize,
    /// `None` bootstraps whenever residuals or data are available.
    pub bootstrap: Option<bool>,
    pub iterations: usize,
    pub confidence: f64,
    pub theta: f64,
    pub window: PercentWindow,
    pub seed: u64,
    pub interval_minutes: Option<f64>,
    pub orthogonalized: bool,
    /// Cholesky ordering by variable name; model order when absent.
    pub ordering: Option<Vec<String>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            bootstrap: None,
            iterations: DEFAULT_ITERATIONS,
            confidence: DEFAULT_CONFIDENCE,
            theta: 0.0,
            window: PercentWindow::default(),
            seed: 0,
            interval_minutes: None,
            orthogonalized: false,
            ordering: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut errors = Vec::new();
        let mut fail = |field: &str, message: String| errors.push(FieldError::new(field, message));
        if self.horizon < 1 || self.horizon > MAX_HORIZON {
            fail("horizon", format!("must lie in 1..={MAX_HORIZON}, got {}", self.horizon));
        }
        if self.iterations < 1 || self.iterations > MAX_ITERATIONS {
            fail("iterations", format!("must lie in 1..={MAX_ITERATIONS}, got {}", self.iterations));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            fail("confidence", format!("must lie strictly between 0 and 1, got {}", self.confidence));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            fail("theta", format!("must be a finite value >= 0, got {}", self.theta));
        }
        if self.window.validate().is_err() {
            fail(
                "window",
                format!(
                    "needs finite bounds with min <= max, got [{}, {}]",
                    self.window.min_percent, self.window.max_percent
                ),
            );
        }
        if let Some(i) = self.interval_minutes {
            if !(i > 0.0 && i.is_finite()) {
                fail("interval_minutes", format!("must be positive, got {i}"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        BootstrapConfig {
            iterations: self.iterations,
            confidence: self.confidence,
            seed: self.seed,
        }
    }
}

/// Optional per-request settings layered over a [`RunConfig`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOverrides {
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub bootstrap: Option<bool>,
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub confidence: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub orthogonalized: Option<bool>,
    #[serde(default)]
    pub ordering: Option<Vec<String>>,
}

impl RunOverrides {
    pub fn apply(&self, base: &RunConfig) -> RunConfig {
        let mut cfg = base.clone();
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if self.bootstrap.is_some() {
            cfg.bootstrap = self.bootstrap;
        }
        if let Some(i) = self.iterations {
            cfg.iterations = i;
        }
        if let Some(c) = self.confidence {
            cfg.confidence = c;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = self.orthogonalized {
            cfg.orthogonalized = o;
        }
        if self.ordering.is_some() {
            cfg.ordering = self.ordering.clone();
        }
        cfg
    }
}
