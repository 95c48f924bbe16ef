#![allow(dead_code)]

use impulse_core::{CompanionMatrix, EmaDataset, Polarity, VarModel, VariableMeta};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vars(m: usize) -> Vec<VariableMeta> {
    (0..m)
        .map(|j| VariableMeta::new(format!("var{j}"), Polarity::Positive, 1.0, 1.0))
        .collect()
}

pub fn two_var() -> VarModel {
    VarModel::new(
        vec![
            VariableMeta::new("var0", Polarity::Positive, 5.0, 2.0),
            VariableMeta::new("var1", Polarity::Positive, 4.0, 1.0),
        ],
        vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.3, 0.2])],
        DVector::from_vec(vec![0.1, 0.2]),
        360.0,
    )
    .unwrap()
}

pub fn ar1(phi: f64) -> VarModel {
    VarModel::new(
        vec![VariableMeta::new("y", Polarity::Positive, 1.0, 1.0)],
        vec![DMatrix::from_element(1, 1, phi)],
        DVector::zeros(1),
        60.0,
    )
    .unwrap()
}

/// Random coefficient blocks rescaled so the companion matrix has spectral
/// radius `radius`.
pub fn stable_blocks(rng: &mut impl Rng, m: usize, p: usize, radius: f64) -> Vec<DMatrix<f64>> {
    loop {
        let blocks: Vec<DMatrix<f64>> = (0..p)
            .map(|_| DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let r = CompanionMatrix::from_blocks(&blocks).spectral_radius();
        if r < 1e-3 {
            continue;
        }
        // scaling B_l by s^l scales every companion eigenvalue by s
        let s = radius / r;
        return blocks
            .into_iter()
            .enumerate()
            .map(|(l, b)| b * s.powi(l as i32 + 1))
            .collect();
    }
}

pub fn random_model(rng: &mut impl Rng, m: usize, p: usize, radius: f64) -> VarModel {
    let blocks = stable_blocks(rng, m, p, radius);
    let constant = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    let variables = (0..m)
        .map(|j| {
            let polarity = if rng.random_bool(0.5) {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            VariableMeta::new(
                format!("var{j}"),
                polarity,
                rng.random_range(1.0..10.0),
                rng.random_range(0.5..3.0),
            )
        })
        .collect();
    VarModel::new(variables, blocks, constant, 60.0).unwrap()
}

/// Simulates `t` rows of a VAR with standard normal noise scaled by `noise`.
/// The first `p` rows are zero.
pub fn simulate(
    rng: &mut impl Rng,
    blocks: &[DMatrix<f64>],
    constant: &DVector<f64>,
    t: usize,
    noise: f64,
) -> DMatrix<f64> {
    let m = constant.len();
    let p = blocks.len();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let burn = 200;
    let mut rows = DMatrix::zeros(t + burn, m);
    for i in p..t + burn {
        let mut y = constant.clone();
        for (l, b) in blocks.iter().enumerate() {
            y += b * rows.row(i - l - 1).transpose();
        }
        for j in 0..m {
            y[j] += noise * normal.sample(rng);
        }
        rows.set_row(i, &y.transpose());
    }
    rows.rows(burn, t).into_owned()
}

pub fn white_noise(rng: &mut impl Rng, t: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(t, m, |_, _| StandardNormal.sample(rng))
}

pub fn dataset(rows: DMatrix<f64>, interval: f64) -> EmaDataset {
    let m = rows.ncols();
    EmaDataset::new(
        (0..m).map(|j| format!("var{j}")).collect(),
        vec![Polarity::Positive; m],
        rows,
        interval,
    )
    .unwrap()
}

/// Response of every variable to a unit shock on `x`, by iterating the VAR
/// recursion with zero constant and no noise.
pub fn trajectory(blocks: &[DMatrix<f64>], x: usize, k: usize) -> Vec<DVector<f64>> {
    let m = blocks[0].nrows();
    let mut path: Vec<DVector<f64>> = Vec::with_capacity(k + 1);
    let mut shock = DVector::zeros(m);
    shock[x] = 1.0;
    path.push(shock);
    for t in 1..=k {
        let mut y = DVector::zeros(m);
        for (l, b) in blocks.iter().enumerate() {
            if t > l {
                y += b * &path[t - l - 1];
            }
        }
        path.push(y);
    }
    path
}
