use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mlp::{AdamConfig, AdamState, Mlp};
use crate::dataset::InputMode;
use crate::error::{Error, Result};
use crate::forward::derive_seed;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.adam_beta1, self.adam_beta2, self.adam_eps];
        if self.epochs == 0 || self.batch_size == 0 || positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("bad training config {self:?}")));
        }
        if self.adam_beta1 >= 1.0 || self.adam_beta2 >= 1.0 {
            return Err(Error::InvalidArgument("Adam betas must be below 1".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

/// Hidden widths for a network `depth` layers deep (output layer included)
/// of the given width. Complex inputs double the first layer.
pub fn architecture(mode: InputMode, width: usize, depth: usize) -> Vec<usize> {
    let mut hidden = vec![width; depth.saturating_sub(1)];
    if mode == InputMode::Complex {
        if let Some(first) = hidden.first_mut() {
            *first *= 2;
        }
    }
    hidden
}

/// Full-pass losses recorded after every epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub train: Vec<f64>,
    /// Empty when training ran without a held-out set.
    pub test: Vec<f64>,
}

impl LossHistory {
    pub fn final_train(&self) -> Option<f64> {
        self.train.last().copied()
    }

    pub fn final_test(&self) -> Option<f64> {
        self.test.last().copied()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_mse,test_mse\n");
        for (i, tr) in self.train.iter().enumerate() {
            let te = self.test.get(i).map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{tr},{te}\n", i + 1));
        }
        out
    }
}

/// Inputs with standardized targets.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a, T> {
    pub inputs: &'a Matrix<T>,
    pub targets: &'a [T],
}

impl<'a, T> Samples<'a, T> {
    pub fn new(inputs: &'a Matrix<T>, targets: &'a [T]) -> Self {
        Self { inputs, targets }
    }
}

/// Mini-batch Adam on mean squared error. Each epoch shuffles the rows with
/// its own derived seed; the final short batch is kept. No early stopping
/// and no weight penalty.
pub fn train<T: Scalar>(
    train_set: Samples<'_, T>,
    test_set: Option<Samples<'_, T>>,
    hidden: &[usize],
    cfg: &TrainConfig,
) -> Result<(Mlp<T>, LossHistory)> {
    cfg.validate()?;
    let n = train_set.targets.len();
    if n == 0 || train_set.inputs.rows() != n {
        return Err(Error::DimensionMismatch { expected: train_set.inputs.rows(), got: n });
    }
    let mut model = Mlp::glorot(train_set.inputs.cols(), hidden, cfg.seed)?;
    let mut params = model.params();
    let mut adam = AdamState::new(params.len());
    let adam_cfg = cfg.adam();
    let mut history = LossHistory::default();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, epoch as u64 + 1)));
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = train_set.inputs.select_rows(idx);
            let y: Vec<T> = idx.iter().map(|&i| train_set.targets[i]).collect();
            let (loss, grad) = model.loss_and_grad(&x, &y)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch: epoch + 1, batch: b });
            }
            adam.step(&mut params, &grad, &adam_cfg);
            model.set_params(&params)?;
        }
        history.train.push(model.mse(train_set.inputs, train_set.targets)?.as_f64());
        if let Some(t) = test_set {
            history.test.push(model.mse(t.inputs, t.targets)?.as_f64());
        }
    }
    Ok((model, history))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub width: usize,
    pub depth: usize,
    pub params: usize,
    pub train_mse: f64,
    pub test_mse: f64,
}

/// Trains one network per (width, depth) pair, in parallel, each with the
/// same config and seed.
pub fn hyperparam_grid<T: Scalar>(
    widths: &[usize],
    depths: &[usize],
    mode: InputMode,
    train_set: Samples<'_, T>,
    test_set: Samples<'_, T>,
    cfg: &TrainConfig,
) -> Result<Vec<GridCell>> {
    if widths.is_empty() || depths.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    let pairs: Vec<(usize, usize)> = depths.iter().flat_map(|&d| widths.iter().map(move |&w| (w, d))).collect();
    pairs
        .par_iter()
        .map(|&(width, depth)| {
            let (model, h) = train(train_set, Some(test_set), &architecture(mode, width, depth), cfg)?;
            Ok(GridCell {
                width,
                depth,
                params: model.param_count(),
                train_mse: h.final_train().unwrap_or(f64::NAN),
                test_mse: h.final_test().unwrap_or(f64::NAN),
            })
        })
        .collect()
}

pub fn grid_to_csv(cells: &[GridCell]) -> String {
    let mut out = String::from("width,depth,params,train_mse,test_mse\n");
    for c in cells {
        out.push_str(&format!("{},{},{},{},{}\n", c.width, c.depth, c.params, c.train_mse, c.test_mse));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy(n: usize, seed: u64) -> (Matrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Matrix::from_vec(n, 3, (0..n * 3).map(|_| rng.random_range(-1.0..1.0)).collect());
        let y = x.iter_rows().map(|r| 0.8 * r[0] - 0.5 * r[1] * r[2] + 0.3).collect();
        (x, y)
    }

    fn short() -> TrainConfig {
        TrainConfig { epochs: 30, seed: 4, ..TrainConfig::default() }
    }

    #[test]
    fn architectures() {
        assert_eq!(architecture(InputMode::Magnitude, 10, 4), vec![10, 10, 10]);
        assert_eq!(architecture(InputMode::Complex, 10, 4), vec![20, 10, 10]);
        assert!(architecture(InputMode::Complex, 10, 1).is_empty());
    }

    #[test]
    fn loss_decreases_and_is_reproducible() {
        let (x, y) = toy(300, 1);
        let (xt, yt) = toy(100, 2);
        let run = || train(Samples::new(&x, &y), Some(Samples::new(&xt, &yt)), &[8, 8], &short()).unwrap();
        let (m1, h1) = run();
        let (m2, h2) = run();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
        assert_eq!(h1.train.len(), 30);
        assert!(h1.train[29] <= h1.train[0]);
        assert!(h1.final_test().unwrap() < 0.05);
    }

    #[test]
    fn bad_config_rejected() {
        let (x, y) = toy(10, 1);
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        assert!(train(Samples::new(&x, &y), None, &[4], &cfg).is_err());
    }

    #[test]
    fn divergence_reports_non_finite_loss() {
        let (x, mut y) = toy(40, 1);
        y[5] = f64::INFINITY;
        let cfg = TrainConfig { epochs: 2, ..TrainConfig::default() };
        let err = train(Samples::new(&x, &y), None, &[4], &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { epoch: 1, .. }));
    }

    #[test]
    fn singleton_grid_matches_direct_training() {
        let (x, y) = toy(200, 3);
        let (xt, yt) = toy(50, 4);
        let cfg = TrainConfig { epochs: 5, ..short() };
        let cells =
            hyperparam_grid(&[10], &[4], InputMode::Magnitude, Samples::new(&x, &y), Samples::new(&xt, &yt), &cfg)
                .unwrap();
        let (_, h) = train(Samples::new(&x, &y), Some(Samples::new(&xt, &yt)), &[10, 10, 10], &cfg).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].test_mse, h.final_test().unwrap());
        assert_eq!(cells[0].params, 3 * 10 + 10 + 2 * 110 + 11);
    }

    #[test]
    fn grid_shape_and_csv() {
        let (x, y) = toy(100, 5);
        let cfg = TrainConfig { epochs: 3, ..short() };
        let cells = hyperparam_grid(
            &[5, 10, 20],
            &[2, 4],
            InputMode::Magnitude,
            Samples::new(&x, &y),
            Samples::new(&x, &y),
            &cfg,
        )
        .unwrap();
        assert_eq!(cells.len(), 6);
        assert!(cells.iter().all(|c| c.test_mse.is_finite()));
        assert_eq!(grid_to_csv(&cells).lines().count(), 7);
    }

    #[test]
    fn history_csv() {
        let h = LossHistory { train: vec![1.0, 0.5], test: vec![] };
        assert_eq!(h.to_csv(), "epoch,train_mse,test_mse\n1,1,\n2,0.5,\n");
    }
}
