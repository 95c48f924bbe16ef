use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::VarModel;

/// A VAR is stable when its spectral radius is below `1 - STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// The `mp x mp` companion form of a VAR(p).
///
/// `B1 .. Bp` fill the top block row, identity blocks sit on the block
/// subdiagonal. Powers of this matrix carry the moving-average coefficients in
/// their top-left `m x m` block.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionMatrix {
    m: usize,
    matrix: DMatrix<f64>,
}

impl CompanionMatrix {
    pub fn from_model(model: &VarModel) -> Self {
        Self::from_blocks(model.coefficient_blocks())
    }

    pub fn from_blocks(blocks: &[DMatrix<f64>]) -> Self {
        let m = blocks.first().map_or(0, |b| b.nrows());
        let p = blocks.len();
        let n = m * p;
        let mut matrix = DMatrix::zeros(n, n);
        for (l, b) in blocks.iter().enumerate() {
            matrix.view_mut((0, l * m), (m, m)).copy_from(b);
        }
        for i in m..n {
            matrix[(i, i - m)] = 1.0;
        }
        Self { m, matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Top-left `m x m` block of `A^t`.
    pub fn power_top_left(&self, t: usize) -> DMatrix<f64> {
        let n = self.matrix.nrows();
        let mut acc = DMatrix::<f64>::identity(n, n);
        for _ in 0..t {
            acc = &self.matrix * acc;
        }
        acc.view((0, 0), (self.m, self.m)).into_owned()
    }

    /// Largest eigenvalue modulus.
    pub fn spectral_radius(&self) -> f64 {
        if self.matrix.is_empty() {
            return 0.0;
        }
        self.matrix
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub stable: bool,
    pub spectral_radius: f64,
}

pub fn check_stability(model: &VarModel) -> Stability {
    let spectral_radius = CompanionMatrix::from_model(model).spectral_radius();
    Stability {
        stable: spectral_radius < 1.0 - STABILITY_MARGIN,
        spectral_radius,
    }
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;

    use super::*;
    use crate::model::{Polarity, VariableMeta};

    fn scalar(blocks: &[f64]) -> VarModel {
        VarModel::new(
            vec![VariableMeta::new("y", Polarity::Positive, 0.0, 1.0)],
            blocks.iter().map(|b| DMatrix::from_element(1, 1, *b)).collect(),
            DVector::zeros(1),
            60.0,
        )
        .unwrap()
    }

    #[test]
    fn scalar_ar1_stable() {
        let s = check_stability(&scalar(&[0.5]));
        assert!(s.stable);
        assert!((s.spectral_radius - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scalar_ar1_unstable() {
        let s = check_stability(&scalar(&[1.1]));
        assert!(!s.stable);
        assert!((s.spectral_radius - 1.1).abs() < 1e-12);
    }

    #[test]
    fn unit_root_is_not_stable() {
        assert!(!check_stability(&scalar(&[1.0])).stable);
    }

    #[test]
    fn scalar_ar2_radius_matches_quadratic_root() {
        // roots of l^2 - 0.2 l - 0.3
        let disc: f64 = 0.2f64.powi(2) + 4.0 * 0.3;
        let expected = (0.2 + disc.sqrt()) / 2.0;
        let s = check_stability(&scalar(&[0.2, 0.3]));
        assert!(s.stable);
        assert!((s.spectral_radius - expected).abs() < 1e-12);
        assert!((s.spectral_radius - 0.6568).abs() < 1e-4);
    }

    #[test]
    fn companion_layout() {
        let b1 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b2 = DMatrix::from_row_slice(2, 2, &[5.0, 6.0, 7.0, 8.0]);
        let c = CompanionMatrix::from_blocks(&[b1.clone(), b2]);
        let a = c.matrix();
        assert_eq!(a.nrows(), 4);
        assert_eq!(a.view((0, 0), (2, 2)).into_owned(), b1);
        assert_eq!(a[(0, 3)], 6.0);
        assert_eq!(a[(2, 0)], 1.0);
        assert_eq!(a[(3, 1)], 1.0);
        assert_eq!(a[(2, 2)], 0.0);
        assert_eq!(c.power_top_left(1), a.view((0, 0), (2, 2)).into_owned());
    }
}
