#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use impulse_core::{save_model, Polarity, VarModel, VariableMeta};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn impulse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impulse"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

pub fn two_var_model() -> VarModel {
    VarModel::new(
        vec![
            VariableMeta::new("var0", Polarity::Positive, 5.0, 2.0),
            VariableMeta::new("var1", Polarity::Positive, 4.0, 1.0),
        ],
        vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.3, 0.2])],
        DVector::zeros(2),
        360.0,
    )
    .unwrap()
}

pub fn zero_model() -> VarModel {
    VarModel::new(
        (0..3)
            .map(|j| VariableMeta::new(format!("z{j}"), Polarity::Positive, 1.0, 1.0))
            .collect(),
        vec![DMatrix::zeros(3, 3)],
        DVector::zeros(3),
        60.0,
    )
    .unwrap()
}

pub fn write_model(dir: &Path, name: &str, model: &VarModel) -> PathBuf {
    let path = dir.join(name);
    save_model(model, &path).unwrap();
    path
}

pub fn csv_of(names: &[&str], rows: &DMatrix<f64>) -> String {
    let mut s = names.join(",");
    s.push('\n');
    for r in rows.row_iter() {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Deterministic VAR(1) series `y_t = c + B y_{t-1} + noise * e_t`.
pub fn var1_series(b: &DMatrix<f64>, c: &DVector<f64>, n: usize, noise: f64, seed: u64) -> DMatrix<f64> {
    let m = b.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = DMatrix::zeros(n, m);
    rows.set_row(0, &DMatrix::from_fn(1, m, |_, j| 1.0 + j as f64).row(0));
    for t in 1..n {
        let e = DVector::from_fn(m, |_, _| noise * (rng.random::<f64>() - 0.5));
        let y = c + b * rows.row(t - 1).transpose() + e;
        rows.set_row(t, &y.transpose());
    }
    rows
}

pub fn noisy_csv(seed: u64) -> String {
    let b = DMatrix::from_row_slice(3, 3, &[0.4, 0.1, 0.0, 0.2, 0.3, -0.1, 0.0, 0.25, 0.35]);
    let c = DVector::from_vec(vec![1.0, 2.0, 0.5]);
    csv_of(&["calm", "gloomy", "active"], &var1_series(&b, &c, 120, 1.0, seed))
}
