use rayon::prelude::*;

use super::{Recommender, SparseInteractionMatrix};
use crate::error::{Error, Result};

/// Three-step random walk item graph with a popularity penalty.
///
/// `W = P_iu^α · P_ui^α`, then column `j` is divided by `pop(j)^β`.
/// A user's score vector is the sum of the `W` rows of their train items.
#[derive(Debug, Clone)]
pub struct Rp3Beta {
    n_items: usize,
    /// Dense row-major item x item weights.
    weights: Vec<f64>,
}

impl Rp3Beta {
    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.weights[from * self.n_items + to]
    }

    pub fn row(&self, item: usize) -> &[f64] {
        &self.weights[item * self.n_items..(item + 1) * self.n_items]
    }
}

pub fn fit_rp3beta(matrix: &SparseInteractionMatrix, alpha: f64, beta: f64) -> Result<Rp3Beta> {
    if !(alpha.is_finite() && alpha >= 0.0 && beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "RP3beta needs alpha >= 0 and beta >= 0, got {alpha}, {beta}"
        )));
    }
    let n = matrix.n_items();
    // transition probabilities raised to alpha; only non-zero entries exist
    let user_step: Vec<f64> = matrix
        .rows()
        .iter()
        .map(|r| {
            if r.is_empty() {
                0.0
            } else {
                (1.0 / r.len() as f64).powf(alpha)
            }
        })
        .collect();
    let penalty: Vec<f64> = matrix
        .item_popularity()
        .into_iter()
        .map(|p| if p == 0 { 0.0 } else { (p as f64).powf(-beta) })
        .collect();

    let mut weights = vec![0.0; n * n];
    weights.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, out)| {
        let users = matrix.col(i);
        if users.is_empty() {
            return;
        }
        let item_step = (1.0 / users.len() as f64).powf(alpha);
        for &u in users {
            let w = item_step * user_step[u];
            for &j in matrix.row(u) {
                out[j] += w;
            }
        }
        for (o, p) in out.iter_mut().zip(&penalty) {
            *o *= p;
        }
    });
    Ok(Rp3Beta { n_items: n, weights })
}

impl Recommender for Rp3Beta {
    fn name(&self) -> &str {
        "RP3beta"
    }

    fn score_user(&self, matrix: &SparseInteractionMatrix, user: usize) -> Vec<f64> {
        let mut scores = vec![0.0; self.n_items];
        for &i in matrix.row(user) {
            for (s, w) in scores.iter_mut().zip(self.row(i)) {
                *s += w;
            }
        }
        scores
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::corpus::{Interaction, InteractionLog};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn from_dense(r: &[Vec<bool>]) -> SparseInteractionMatrix {
        let mut recs = Vec::new();
        for (u, row) in r.iter().enumerate() {
            for (i, &x) in row.iter().enumerate() {
                if x {
                    recs.push(Interaction::new(format!("u{u:02}"), format!("i{i:02}"), 1.0));
                }
            }
        }
        let items: Vec<String> = (0..r[0].len()).map(|i| format!("i{i:02}")).collect();
        let log = InteractionLog::from_records(recs);
        SparseInteractionMatrix::new(&log, items.iter().map(String::as_str))
    }

    #[test]
    fn two_by_two_walk() {
        let m = from_dense(&[vec![true, true], vec![false, true]]);
        let model = fit_rp3beta(&m, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(model.weight(1, 0), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(model.weight(1, 1), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(model.score_user(&m, 1)[0], 0.25, epsilon = 1e-15);
    }

    fn dense_oracle(r: &[Vec<bool>], alpha: f64) -> Vec<Vec<f64>> {
        let (nu, ni) = (r.len(), r[0].len());
        let x: Vec<Vec<f64>> = r
            .iter()
            .map(|row| row.iter().map(|&b| b as u8 as f64).collect())
            .collect();
        // P_ui: users x items, P_iu: items x users
        let mut pui = vec![vec![0.0; ni]; nu];
        for u in 0..nu {
            let d: f64 = x[u].iter().sum();
            for i in 0..ni {
                if x[u][i] > 0.0 {
                    pui[u][i] = (x[u][i] / d).powf(alpha);
                }
            }
        }
        let mut piu = vec![vec![0.0; nu]; ni];
        for i in 0..ni {
            let d: f64 = (0..nu).map(|u| x[u][i]).sum();
            for u in 0..nu {
                if x[u][i] > 0.0 {
                    piu[i][u] = (x[u][i] / d).powf(alpha);
                }
            }
        }
        let mut w = vec![vec![0.0; ni]; ni];
        for i in 0..ni {
            for j in 0..ni {
                w[i][j] = (0..nu).map(|u| piu[i][u] * pui[u][j]).sum();
            }
        }
        w
    }

    fn dense_log(n: usize) -> impl Strategy<Value = Vec<Vec<bool>>> {
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), n), n)
            .prop_filter("needs one interaction", |r| r.iter().flatten().any(|&b| b))
    }

    proptest! {
        #[test]
        fn beta_zero_is_the_plain_walk(r in dense_log(6), alpha in prop_oneof![Just(1.0), Just(0.5), 0.0f64..2.0]) {
            let m = from_dense(&r);
            let model = fit_rp3beta(&m, alpha, 0.0).unwrap();
            let oracle = dense_oracle(&r, alpha);
            for i in 0..6 {
                for j in 0..6 {
                    prop_assert!((model.weight(i, j) - oracle[i][j]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn alpha_one_rows_are_substochastic(r in dense_log(6)) {
            let m = from_dense(&r);
            let model = fit_rp3beta(&m, 1.0, 0.0).unwrap();
            for i in 0..6 {
                let s: f64 = model.row(i).iter().sum();
                prop_assert!(s <= 1.0 + 1e-12);
                if m.col(i).is_empty() {
                    prop_assert_eq!(s, 0.0);
                } else {
                    prop_assert!((s - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn large_beta_demotes_the_popular_item() {
        // i00 is held by everyone; the target user shares i01 with two others
        let r = vec![
            vec![true, true, false, false],
            vec![true, true, true, false],
            vec![true, false, true, true],
            vec![true, false, false, true],
            vec![false, true, false, false],
        ];
        let m = from_dense(&r);
        let user = 4;
        let plain = fit_rp3beta(&m, 1.0, 0.0).unwrap().score_user(&m, user);
        let penal = fit_rp3beta(&m, 1.0, 3.0).unwrap().score_user(&m, user);
        assert!(plain[0] > plain[2]);
        assert!(penal[0] < penal[2]);
        assert!(penal[0] / penal[2] < plain[0] / plain[2]);
    }

    #[test]
    fn negative_parameters_are_rejected() {
        let m = from_dense(&[vec![true]]);
        assert!(fit_rp3beta(&m, -1.0, 0.0).is_err());
        assert!(fit_rp3beta(&m, 1.0, -0.5).is_err());
    }
}
