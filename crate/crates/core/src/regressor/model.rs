use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::train::{hyperparam_grid, train, GridCell, LossHistory, Samples, TrainConfig};
use crate::dataset::{flatten, InputMode, LabelScaler};
use crate::dimred::{pca_fit, pca_fit_mixed, PcaModel, DEFAULT_IN_DOMAIN_TARGET};
use crate::error::{Error, Result};
use crate::forward::{FrequencyGrid, Measurement, ReflectionSignal};
use crate::geometry::NormalLengths;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "embound-model/1";

/// Signal-to-score projection: one PCA on `|S|`, or one each on `Re S` and
/// `Im S` with the scores concatenated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum FeatureMap<T> {
    Magnitude { pca: PcaModel<T> },
    Complex { real: PcaModel<T>, imag: PcaModel<T> },
}

impl<T: Scalar> FeatureMap<T> {
    pub fn mode(&self) -> InputMode {
        match self {
            FeatureMap::Magnitude { .. } => InputMode::Magnitude,
            FeatureMap::Complex { .. } => InputMode::Complex,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            FeatureMap::Magnitude { pca } => pca.n_components(),
            FeatureMap::Complex { real, imag } => real.n_components() + imag.n_components(),
        }
    }

    /// Scores of one row laid out as [`InputMode::row`] produces it.
    pub fn scores(&self, row: &[T]) -> Result<Vec<T>> {
        match self {
            FeatureMap::Magnitude { pca } => pca.transform(row),
            FeatureMap::Complex { real, imag } => {
                let half = real.dim();
                if row.len() != 2 * half {
                    return Err(Error::DimensionMismatch { expected: 2 * half, got: row.len() });
                }
                let mut s = real.transform(&row[..half])?;
                s.extend(imag.transform(&row[half..])?);
                Ok(s)
            }
        }
    }

    pub fn score_rows(&self, rows: &Matrix<T>) -> Result<Matrix<T>> {
        let mut out = Matrix::zeros(rows.rows(), self.width());
        for (i, r) in rows.iter_rows().enumerate() {
            out.row_mut(i).copy_from_slice(&self.scores(r)?);
        }
        Ok(out)
    }

    /// Fits the projection on `rows`; `aux` rows (same layout), when given,
    /// are pooled in through the mixed fit.
    pub fn fit(mode: InputMode, rows: &Matrix<T>, aux: Option<&Matrix<T>>, k: usize, seed: u64) -> Result<Self> {
        let fit_one = |r: &Matrix<T>, a: Option<Matrix<T>>| match a {
            Some(a) => pca_fit_mixed(r, &a, k, Some(DEFAULT_IN_DOMAIN_TARGET), seed),
            None => pca_fit(r, k),
        };
        match mode {
            InputMode::Magnitude => Ok(FeatureMap::Magnitude { pca: fit_one(rows, aux.cloned())? }),
            InputMode::Complex => {
                let half = rows.cols() / 2;
                let (re, im) = split_columns(rows, half);
                let (are, aim) = match aux {
                    Some(a) => {
                        let (x, y) = split_columns(a, half);
                        (Some(x), Some(y))
                    }
                    None => (None, None),
                };
                Ok(FeatureMap::Complex { real: fit_one(&re, are)?, imag: fit_one(&im, aim)? })
            }
        }
    }
}

fn split_columns<T: Scalar>(m: &Matrix<T>, at: usize) -> (Matrix<T>, Matrix<T>) {
    let left = m.map_rows(|r| r[..at].to_vec());
    let right = m.map_rows(|r| r[at..].to_vec());
    (left, right)
}

fn cast_matrix<T: Scalar>(m: &Matrix<f64>) -> Matrix<T> {
    Matrix::from_vec(m.rows(), m.cols(), m.as_slice().iter().map(|&x| T::lit(x)).collect())
}

/// Options for [`TrainedModel::fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub mode: InputMode,
    pub components: usize,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { mode: InputMode::Magnitude, components: 10, hidden: vec![10, 10, 10], train: TrainConfig::default() }
    }
}

/// Everything needed to turn a measurement into normal lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<T> {
    pub format: String,
    pub tool_version: String,
    pub grid: FrequencyGrid,
    pub features: FeatureMap<T>,
    pub scaler: LabelScaler<T>,
    pub mlp: Mlp<T>,
    pub train_config: TrainConfig,
    pub config_hash: String,
    pub dataset_hash: String,
}

/// Normal lengths with the number of antennas whose raw prediction was
/// negative and got clamped to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub lengths: NormalLengths<T>,
    pub clamped: usize,
}

/// Projected and scaled training (and optional test) samples.
struct Prepared<T> {
    grid: FrequencyGrid,
    features: FeatureMap<T>,
    scaler: LabelScaler<T>,
    x: Matrix<T>,
    y: Vec<T>,
    test: Option<(Matrix<T>, Vec<T>)>,
}

impl<T: Scalar> Prepared<T> {
    fn new(
        train_set: &[Measurement],
        test_set: &[Measurement],
        aux: Option<&[ReflectionSignal]>,
        opts: &FitOptions,
    ) -> Result<Self> {
        let first = train_set.first().ok_or_else(|| Error::InvalidArgument("empty training set".into()))?;
        let grid = first.signals[0].grid;
        let table = flatten(train_set, opts.mode)?;
        let rows: Matrix<T> = cast_matrix(&table.inputs);
        let aux_rows = aux.map(|sigs| {
            let r: Vec<Vec<f64>> = sigs.iter().map(|s| opts.mode.row(s)).collect();
            cast_matrix::<T>(&Matrix::from_rows(&r))
        });
        let features = FeatureMap::fit(opts.mode, &rows, aux_rows.as_ref(), opts.components, opts.train.seed)?;
        let labels: Vec<T> = table.labels.iter().map(|&y| T::lit(y)).collect();
        let scaler = LabelScaler::fit(&labels)?;
        let x = features.score_rows(&rows)?;
        let y: Vec<T> = labels.iter().map(|&v| scaler.apply(v)).collect();
        let test = if test_set.is_empty() {
            None
        } else {
            let t = flatten(test_set, opts.mode)?;
            let xt = features.score_rows(&cast_matrix(&t.inputs))?;
            let yt: Vec<T> = t.labels.iter().map(|&v| scaler.apply(T::lit(v))).collect();
            Some((xt, yt))
        };
        Ok(Self { grid, features, scaler, x, y, test })
    }
}

impl<T: Scalar> TrainedModel<T> {
    /// Fits projection, scaler and network on `train_set`; `test_set` only
    /// feeds the loss history. `aux` signals widen the projection basis.
    pub fn fit(
        train_set: &[Measurement],
        test_set: &[Measurement],
        aux: Option<&[ReflectionSignal]>,
        opts: &FitOptions,
    ) -> Result<(Self, LossHistory)> {
        let p = Prepared::new(train_set, test_set, aux, opts)?;
        let (mlp, history) = train(
            Samples::new(&p.x, &p.y),
            p.test.as_ref().map(|(a, b)| Samples::new(a, b)),
            &opts.hidden,
            &opts.train,
        )?;
        let model = TrainedModel {
            format: CHECKPOINT_FORMAT.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            grid: p.grid,
            features: p.features,
            scaler: p.scaler,
            mlp,
            train_config: opts.train.clone(),
            config_hash: String::new(),
            dataset_hash: String::new(),
        };
        Ok((model, history))
    }

    /// Trains one network per (width, depth) pair on the same projection and
    /// reports the final losses; `opts.hidden` is ignored.
    pub fn grid_search(
        train_set: &[Measurement],
        test_set: &[Measurement],
        aux: Option<&[ReflectionSignal]>,
        widths: &[usize],
        depths: &[usize],
        opts: &FitOptions,
    ) -> Result<Vec<GridCell>> {
        let p = Prepared::<T>::new(train_set, test_set, aux, opts)?;
        let (xt, yt) = p.test.as_ref().ok_or_else(|| Error::InvalidArgument("grid search needs a test set".into()))?;
        hyperparam_grid(widths, depths, opts.mode, Samples::new(&p.x, &p.y), Samples::new(xt, yt), &opts.train)
    }

    pub fn mode(&self) -> InputMode {
        self.features.mode()
    }

    /// Predicted normal length of one antenna signal, unclamped, in mm.
    pub fn predict_signal(&self, signal: &ReflectionSignal) -> Result<T> {
        if signal.grid != self.grid {
            return Err(Error::DimensionMismatch { expected: self.grid.n_points, got: signal.grid.n_points });
        }
        let row: Vec<T> = self.mode().row(signal).into_iter().map(T::lit).collect();
        let z = self.mlp.forward(&self.features.scores(&row)?)?;
        Ok(self.scaler.invert(z))
    }

    pub fn predict_measurement(&self, m: &Measurement) -> Result<Prediction<T>> {
        let mut clamped = 0;
        let mut values = Vec::with_capacity(m.signals.len());
        for s in &m.signals {
            let v = self.predict_signal(s)?;
            if v < T::zero() {
                clamped += 1;
                values.push(T::zero());
            } else {
                values.push(v);
            }
        }
        if clamped > 0 {
            log::warn!("measurement {}: {clamped} negative predictions clamped to 0", m.id);
        }
        Ok(Prediction { lengths: NormalLengths::with_bound(values, T::max_value())?, clamped })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.format != CHECKPOINT_FORMAT {
            return Err(Error::Parse(format!("unsupported checkpoint format {:?}", m.format)));
        }
        if m.features.width() != m.mlp.input_width() {
            return Err(Error::DimensionMismatch { expected: m.mlp.input_width(), got: m.features.width() });
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
