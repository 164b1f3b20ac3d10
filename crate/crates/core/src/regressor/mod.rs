//! Small fully connected regressor from PCA scores to normal length, with
//! its training loop, hyperparameter grid and checkpoint format.

mod mlp;
mod model;
mod train;

pub use mlp::{AdamConfig, AdamState, Layer, Mlp, LEAKY_SLOPE};
pub use model::{FeatureMap, FitOptions, Prediction, TrainedModel, CHECKPOINT_FORMAT};
pub use train::{architecture, grid_to_csv, hyperparam_grid, train, GridCell, LossHistory, Samples, TrainConfig};
