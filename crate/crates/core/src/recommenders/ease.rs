use nalgebra::DMatrix;

use super::{Recommender, SparseInteractionMatrix};
use crate::error::{Error, Result};

/// Item-item ridge regression with a zero-diagonal constraint, closed form.
#[derive(Debug, Clone)]
pub struct Ease {
    /// `b[(i, j)]`: weight of train item `i` when scoring item `j`.
    b: DMatrix<f64>,
}

impl Ease {
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.b
    }
}

pub fn fit_ease(matrix: &SparseInteractionMatrix, lambda: f64) -> Result<Ease> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("EASE needs lambda > 0, got {lambda}")));
    }
    let n = matrix.n_items();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for row in matrix.rows() {
        for &i in row {
            for &j in row {
                g[(i, j)] += 1.0;
            }
        }
    }
    for i in 0..n {
        g[(i, i)] += lambda;
    }
    let p = g
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("Gram matrix is not positive definite".into()))?
        .inverse();
    let mut b = p;
    for j in 0..n {
        let d = b[(j, j)];
        for i in 0..n {
            b[(i, j)] = -b[(i, j)] / d;
        }
        b[(j, j)] = 0.0;
    }
    Ok(Ease { b })
}

impl Recommender for Ease {
    fn name(&self) -> &str {
        "EASE"
    }

    fn score_user(&self, matrix: &SparseInteractionMatrix, user: usize) -> Vec<f64> {
        let row = matrix.row(user);
        self.b
            .column_iter()
            .map(|col| row.iter().map(|&i| col[i]).sum())
            .collect()
    }
}
