use nalgebra::{DMatrix, DVector};

use crate::model::VarModel;

/// `vlabels * vlabels^T`: +1 where two variables share a polarity, -1 otherwise.
pub fn gamma_matrix(signs: &DVector<f64>) -> DMatrix<f64> {
    signs * signs.transpose()
}

/// `vlabels * 1_l^T`: rows of negative variables are -1.
pub fn exo_sign_matrix(signs: &DVector<f64>, l: usize) -> DMatrix<f64> {
    signs * DVector::from_element(l, 1.0).transpose()
}

/// Re-expresses the model so every variable reads as "higher is better".
///
/// Coefficient blocks become `Gamma o B` and exogenous coefficients `E o xi`.
/// The constant, residuals and residual covariance get the matching sign flips
/// so orthogonalized responses stay consistent. Variable metadata is kept, so
/// applying the transform twice restores the original model exactly.
pub fn polarity_transform(model: &VarModel) -> VarModel {
    let signs = model.polarity_signs();
    let gamma = gamma_matrix(&signs);
    let blocks = model
        .coefficient_blocks()
        .iter()
        .map(|b| b.component_mul(&gamma))
        .collect();
    let exo = model
        .exo_coefficients()
        .map(|xi| xi.component_mul(&exo_sign_matrix(&signs, xi.ncols())));
    let constant = model.constant().component_mul(&signs);
    let residuals = model.residuals().map(|e| {
        let mut e = e.clone();
        for (j, s) in signs.iter().enumerate() {
            e.column_mut(j).scale_mut(*s);
        }
        e
    });
    let sigma = model.residual_covariance().component_mul(&gamma);
    model.map_parts(blocks, constant, exo, residuals, sigma)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::model::{Polarity, VariableMeta};

    #[test]
    fn two_variable_gamma() {
        let g = gamma_matrix(&DVector::from_vec(vec![-1.0, 1.0]));
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn all_positive_is_identity() {
        let model = VarModel::new(
            vec![
                VariableMeta::new("a", Polarity::Positive, 0.0, 1.0),
                VariableMeta::new("b", Polarity::Positive, 0.0, 1.0),
            ],
            vec![DMatrix::from_row_slice(2, 2, &[0.1, -0.2, 0.3, 0.4])],
            DVector::from_vec(vec![1.0, 2.0]),
            60.0,
        )
        .unwrap()
        .with_exogenous(vec!["w".into()], DMatrix::from_row_slice(2, 1, &[0.5, -0.5]))
        .unwrap();
        assert_eq!(polarity_transform(&model), model);
    }

    #[test]
    fn negative_variable_flips_off_diagonal() {
        let model = VarModel::new(
            vec![
                VariableMeta::new("a", Polarity::Negative, 0.0, 1.0),
                VariableMeta::new("b", Polarity::Positive, 0.0, 1.0),
            ],
            vec![DMatrix::from_row_slice(2, 2, &[0.1, -0.2, 0.3, 0.4])],
            DVector::zeros(2),
            60.0,
        )
        .unwrap()
        .with_exogenous(vec!["w".into()], DMatrix::from_row_slice(2, 1, &[0.5, -0.5]))
        .unwrap();
        let t = polarity_transform(&model);
        let b = &t.coefficient_blocks()[0];
        assert_eq!(b[(0, 0)], 0.1);
        assert_eq!(b[(1, 1)], 0.4);
        assert_eq!(b[(0, 1)], 0.2);
        assert_eq!(b[(1, 0)], -0.3);
        let xi = t.exo_coefficients().unwrap();
        assert_eq!(xi[(0, 0)], -0.5);
        assert_eq!(xi[(1, 0)], -0.5);
    }

    #[test]
    fn flipping_one_polarity_flips_its_row_and_column() {
        let base = DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0]);
        let mut flipped = base.clone();
        flipped[2] = -1.0;
        let g = gamma_matrix(&flipped);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i == 2) ^ (j == 2) { -1.0 } else { 1.0 };
                assert_eq!(g[(i, j)], expected);
            }
        }
    }

    proptest! {
        #[test]
        fn transform_is_an_involution(
            m in 1usize..=5,
            p in 1usize..=3,
            negatives in proptest::collection::vec(any::<bool>(), 5),
            entries in proptest::collection::vec(-2.0f64..2.0, 75),
        ) {
            let variables = (0..m)
                .map(|j| {
                    let pol = if negatives[j] { Polarity::Negative } else { Polarity::Positive };
                    VariableMeta::new(format!("v{j}"), pol, 1.0, 1.0)
                })
                .collect();
            let blocks = (0..p)
                .map(|l| DMatrix::from_fn(m, m, |i, j| entries[l * 25 + i * 5 + j]))
                .collect();
            let model = VarModel::new(variables, blocks, DVector::zeros(m), 60.0).unwrap();
            let twice = polarity_transform(&polarity_transform(&model));
            prop_assert_eq!(twice.coefficient_blocks(), model.coefficient_blocks());
            prop_assert_eq!(twice, model);
        }
    }
}
