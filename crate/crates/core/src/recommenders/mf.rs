use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{MfConfig, Recommender, SparseInteractionMatrix};
use crate::error::{Error, Result};
use crate::rng;

/// Biased matrix factorization trained on a logistic loss with sampled
/// negatives: `score(u, i) = mu + b_u + b_i + p_u . q_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFactorization {
    pub factors: usize,
    pub global_bias: f64,
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    /// Row-major `n_users x factors`.
    pub user_factors: Vec<f64>,
    /// Row-major `n_items x factors`.
    pub item_factors: Vec<f64>,
    /// Mean per-sample loss of every epoch, measured before each update.
    pub loss_history: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `-log sigmoid(s)` for positives, `-log(1 - sigmoid(s))` for negatives.
fn logistic_loss(score: f64, positive: bool) -> f64 {
    let z = if positive { score } else { -score };
    // log(1 + e^-z) without overflow
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

impl MatrixFactorization {
    pub fn p(&self, user: usize) -> &[f64] {
        &self.user_factors[user * self.factors..(user + 1) * self.factors]
    }

    pub fn q(&self, item: usize) -> &[f64] {
        &self.item_factors[item * self.factors..(item + 1) * self.factors]
    }

    pub fn score(&self, user: usize, item: usize) -> f64 {
        let dot: f64 = self.p(user).iter().zip(self.q(item)).map(|(a, b)| a * b).sum();
        self.global_bias + self.user_bias[user] + self.item_bias[item] + dot
    }

    pub fn loss(&self, user: usize, item: usize, positive: bool) -> f64 {
        logistic_loss(self.score(user, item), positive)
    }

    fn step(&mut self, user: usize, item: usize, positive: bool, lr: f64, reg: f64) -> f64 {
        let s = self.score(user, item);
        let g = sigmoid(s) - if positive { 1.0 } else { 0.0 };
        let k = self.factors;
        self.global_bias -= lr * g;
        self.user_bias[user] -= lr * (g + reg * self.user_bias[user]);
        self.item_bias[item] -= lr * (g + reg * self.item_bias[item]);
        let (pu, qi) = (user * k, item * k);
        for f in 0..k {
            let p = self.user_factors[pu + f];
            let q = self.item_factors[qi + f];
            self.user_factors[pu + f] -= lr * (g * q + reg * p);
            self.item_factors[qi + f] -= lr * (g * p + reg * q);
        }
        logistic_loss(s, positive)
    }
}

/// Trains with one pass over the shuffled positives per epoch; each
/// positive is followed by `negatives` items drawn uniformly from the
/// user's unseen items.
pub fn train_mf(matrix: &SparseInteractionMatrix, config: &MfConfig) -> Result<MatrixFactorization> {
    if config.factors == 0 || config.epochs == 0 {
        return Err(Error::InvalidArgument("MF needs factors >= 1 and epochs >= 1".into()));
    }
    let (nu, ni, k) = (matrix.n_users(), matrix.n_items(), config.factors);
    let normal = Normal::new(0.0, config.init_std).map_err(|e| Error::InvalidArgument(format!("init_std: {e}")))?;
    let mut init = rng::stream(config.seed, "mf/init");
    let mut model = MatrixFactorization {
        factors: k,
        global_bias: 0.0,
        user_bias: vec![0.0; nu],
        item_bias: vec![0.0; ni],
        user_factors: (0..nu * k).map(|_| normal.sample(&mut init)).collect(),
        item_factors: (0..ni * k).map(|_| normal.sample(&mut init)).collect(),
        loss_history: Vec::with_capacity(config.epochs),
    };

    let mut positives: Vec<(usize, usize)> = matrix
        .rows()
        .iter()
        .enumerate()
        .flat_map(|(u, row)| row.iter().map(move |&i| (u, i)))
        .collect();
    let mut rng = rng::stream(config.seed, "mf/sgd");
    let (lr, reg) = (config.learning_rate, config.regularization);

    for epoch in 0..config.epochs {
        positives.shuffle(&mut rng);
        let (mut total, mut count) = (0.0, 0usize);
        for &(u, i) in &positives {
            total += model.step(u, i, true, lr, reg);
            count += 1;
            if matrix.row(u).len() >= ni {
                continue;
            }
            for _ in 0..config.negatives {
                let j = loop {
                    let j = rng.random_range(0..ni);
                    if !matrix.contains(u, j) {
                        break j;
                    }
                };
                total += model.step(u, j, false, lr, reg);
                count += 1;
            }
        }
        let mean = if count == 0 { 0.0 } else { total / count as f64 };
        if !mean.is_finite() || !model.global_bias.is_finite() {
            return Err(Error::Divergence(mean));
        }
        log::debug!("MF epoch {}: mean loss {mean:.6}", epoch + 1);
        model.loss_history.push(mean);
    }
    Ok(model)
}

impl Recommender for MatrixFactorization {
    fn name(&self) -> &str {
        "MF2020"
    }

    fn score_user(&self, matrix: &SparseInteractionMatrix, user: usize) -> Vec<f64> {
        (0..matrix.n_items()).map(|i| self.score(user, i)).collect()
    }
}
