//! Command-line front end and HTTP service over `impulse-core`.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod server;

pub use config::{RunConfig, RunOverrides};
pub use engine::{Engine, IrfResult, ModelMeta, PlotSeries, PlotStep};
pub use error::{EngineError, FieldError};
