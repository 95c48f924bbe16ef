//! Impulse response analysis on fitted VAR models of individual EMA series.
//!
//! The crate converts a VAR(p) model into its moving-average coefficients,
//! simulates impulse responses (optionally orthogonalized and bootstrapped)
//! and turns them into three kinds of advice: which variable has the largest
//! net effect on the network, how long an effect lasts, and how much a
//! variable must change to move another one by a given percentage.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advice;
pub mod error;
pub mod format;
pub mod model;
pub mod vma;

pub use error::{Error, Result};
pub use model::{
    check_stability, fit_var, load_ema_csv, load_model, save_model, CompanionMatrix, EmaDataset,
    Polarity, Stability, VarModel, VariableMeta,
};
pub use vma::{
    bootstrap_irf, calculate_irf, calculate_vma, irf, irf_cum, irf_total, orthogonalize,
    polarity_transform, significance_mask, BootstrapConfig, ImpulseResponse, IrfOptions,
    ResponseGrid, ShockVector, VmaCoefficients,
};
