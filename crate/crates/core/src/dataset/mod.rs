//! Per-antenna sample tables, measurement-level splitting, label
//! standardization and the sub-sample/interpolate resolution transform.

mod io;

pub use io::{dataset_header, read_dataset, read_dataset_str, write_dataset, DatasetHeader, DATASET_FORMAT};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{Measurement, ReflectionSignal};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Which view of the complex reflection coefficient feeds the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum InputMode {
    /// `|S(f)|`, one value per frequency.
    #[default]
    Magnitude,
    /// `[Re S(f) ..., Im S(f) ...]`, twice the width.
    Complex,
}

impl InputMode {
    pub fn row_width(&self, n_freq: usize) -> usize {
        match self {
            InputMode::Magnitude => n_freq,
            InputMode::Complex => 2 * n_freq,
        }
    }

    /// Row representation of one signal in this mode.
    pub fn row(&self, signal: &ReflectionSignal) -> Vec<f64> {
        match self {
            InputMode::Magnitude => signal.magnitude(),
            InputMode::Complex => {
                let mut v = signal.real();
                v.extend(signal.imag());
                v
            }
        }
    }
}

impl std::str::FromStr for InputMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "magnitude" | "mag" => Ok(InputMode::Magnitude),
            "complex" => Ok(InputMode::Complex),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowMeta {
    pub measurement_id: usize,
    pub antenna_index: usize,
}

/// One row per (measurement, antenna).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    pub inputs: Matrix<f64>,
    pub labels: Vec<f64>,
    pub meta: Vec<RowMeta>,
    pub mode: InputMode,
}

impl SampleTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Distinct measurement ids in order of first appearance.
    pub fn measurement_ids(&self) -> Vec<usize> {
        let mut seen = std::collections::BTreeSet::new();
        self.meta.iter().filter(|m| seen.insert(m.measurement_id)).map(|m| m.measurement_id).collect()
    }

    /// Rows whose measurement id satisfies `keep`, in original order.
    pub fn select(&self, keep: impl Fn(usize) -> bool) -> SampleTable {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(self.meta[i].measurement_id)).collect();
        SampleTable {
            inputs: self.inputs.select_rows(&idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            meta: idx.iter().map(|&i| self.meta[i]).collect(),
            mode: self.mode,
        }
    }
}

/// Flattens labelled measurements into per-antenna rows.
pub fn flatten(measurements: &[Measurement], mode: InputMode) -> Result<SampleTable> {
    let width = measurements.first().map(|m| mode.row_width(m.signals[0].len())).unwrap_or(0);
    let mut data = Vec::with_capacity(measurements.len() * 16 * width);
    let mut labels = Vec::new();
    let mut meta = Vec::new();
    for m in measurements {
        let l = m.labels.as_ref().ok_or_else(|| Error::UnlabeledMeasurement(format!("{}#{}", m.phantom_id, m.id)))?;
        for (s, &y) in m.signals.iter().zip(l.values()) {
            let row = mode.row(s);
            if row.len() != width {
                return Err(Error::DimensionMismatch { expected: width, got: row.len() });
            }
            data.extend(row);
            labels.push(y);
            meta.push(RowMeta { measurement_id: m.id, antenna_index: s.antenna_index });
        }
    }
    let rows = labels.len();
    Ok(SampleTable { inputs: Matrix::from_vec(rows, width, data), labels, meta, mode })
}

/// Number of measurements held out: `test_fraction * n` rounded half-up.
pub fn test_count(n: usize, test_fraction: f64) -> usize {
    ((test_fraction * n as f64) + 0.5).floor() as usize
}

/// Splits measurement ids into (train, test); all antennas of one
/// measurement land on the same side.
pub fn split_ids(ids: &[usize], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = test_count(ids.len(), test_fraction).min(ids.len());
    let mut test = shuffled[..n_test].to_vec();
    let mut train = shuffled[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

pub fn split(table: &SampleTable, test_fraction: f64, seed: u64) -> Result<(SampleTable, SampleTable)> {
    let (_, test) = split_ids(&table.measurement_ids(), test_fraction, seed)?;
    let test: std::collections::HashSet<usize> = test.into_iter().collect();
    Ok((table.select(|id| !test.contains(&id)), table.select(|id| test.contains(&id))))
}

/// Standardizes labels with the population mean and deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelScaler<T> {
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> LabelScaler<T> {
    pub fn fit(labels: &[T]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::DegenerateLabels);
        }
        let n = T::from_usize_lossy(labels.len());
        let mean = labels.iter().copied().sum::<T>() / n;
        let var = labels.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
        let std = var.sqrt();
        if !(std > T::zero()) {
            return Err(Error::DegenerateLabels);
        }
        Ok(Self { mean, std })
    }

    #[inline]
    pub fn apply(&self, x: T) -> T {
        (x - self.mean) / self.std
    }

    #[inline]
    pub fn invert(&self, z: T) -> T {
        z * self.std + self.mean
    }
}

/// Indices kept when resolution is cut by `factor`: every `factor`-th point
/// from the first, plus the last.
pub fn kept_indices(n: usize, factor: usize) -> Vec<usize> {
    let factor = factor.max(1);
    let mut idx: Vec<usize> = (0..n).step_by(factor).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    idx
}

/// Linear re-interpolation of `values` through the kept indices.
pub fn subsample_interp_values<T: Scalar>(values: &[T], factor: usize) -> Vec<T> {
    let n = values.len();
    if n < 2 || factor <= 1 {
        return values.to_vec();
    }
    let kept = kept_indices(n, factor);
    let mut out = values.to_vec();
    for w in kept.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = T::from_usize_lossy(b - a);
        for (j, o) in out[a + 1..b].iter_mut().enumerate() {
            let t = T::from_usize_lossy(j + 1) / span;
            *o = values[a] + (values[b] - values[a]) * t;
        }
    }
    out
}

/// Keeps one sample in `factor` and rebuilds the full grid by linear
/// interpolation of the real and imaginary parts.
pub fn subsample_interp(signal: &ReflectionSignal, factor: usize) -> ReflectionSignal {
    let re = subsample_interp_values(&signal.real(), factor);
    let im = subsample_interp_values(&signal.imag(), factor);
    ReflectionSignal {
        values: re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect(),
        grid: signal.grid,
        antenna_index: signal.antenna_index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{synth_distance_scans, synth_signal, ForwardParams};
    use proptest::prelude::*;

    fn scans(n: usize) -> Vec<Measurement> {
        synth_distance_scans((4.0, 17.0), n, &ForwardParams::phantom(), 9).unwrap()
    }

    #[test]
    fn flatten_shapes() {
        let m = scans(1);
        let t = flatten(&m, InputMode::Magnitude).unwrap();
        assert_eq!((t.inputs.rows(), t.inputs.cols()), (16, 451));
        let c = flatten(&m, InputMode::Complex).unwrap();
        assert_eq!(c.inputs.cols(), 902);
        assert_eq!(c.inputs.row(3)[451], m[0].signals[3].values[0].im);
    }

    #[test]
    fn flatten_rejects_unlabeled() {
        let mut m = scans(2);
        m[1].labels = None;
        assert!(matches!(flatten(&m, InputMode::Magnitude), Err(Error::UnlabeledMeasurement(_))));
    }

    #[test]
    fn flatten_groups_back_to_measurements() {
        let m = scans(5);
        let t = flatten(&m, InputMode::Magnitude).unwrap();
        assert_eq!(t.measurement_ids().len(), 5);
        for id in t.measurement_ids() {
            assert_eq!(t.meta.iter().filter(|r| r.measurement_id == id).count(), 16);
        }
    }

    #[test]
    fn split_counts_and_determinism() {
        let ids: Vec<usize> = (0..444).collect();
        let (train, test) = split_ids(&ids, 0.2, 7).unwrap();
        assert_eq!((train.len(), test.len()), (355, 89));
        assert_eq!(split_ids(&ids, 0.2, 7).unwrap(), (train, test));
        let (a, b) = split_ids(&[0, 1], 0.5, 1).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));
        assert!(split_ids(&ids, 0.0, 1).is_err());
        assert!(split_ids(&ids, 1.0, 1).is_err());
    }

    #[test]
    fn split_is_a_partition_by_measurement() {
        let t = flatten(&scans(10), InputMode::Magnitude).unwrap();
        let (tr, te) = split(&t, 0.2, 3).unwrap();
        assert_eq!(tr.len() + te.len(), t.len());
        let a: std::collections::HashSet<_> = tr.measurement_ids().into_iter().collect();
        let b: std::collections::HashSet<_> = te.measurement_ids().into_iter().collect();
        assert!(a.is_disjoint(&b));
        assert_eq!(te.len(), 32);
    }

    #[test]
    fn scaler_basics() {
        let s = LabelScaler::<f64>::fit(&[3.8, 17.5]).unwrap();
        assert!((s.mean - 10.65).abs() < 1e-12);
        assert!((s.std - 6.85).abs() < 1e-12);
        assert_eq!(s.apply(s.mean), 0.0);
        let z = s.apply(20.0);
        assert!(z.is_finite() && (s.invert(z) - 20.0).abs() < 1e-12);
        assert!(matches!(LabelScaler::fit(&[5.0, 5.0]), Err(Error::DegenerateLabels)));
    }

    #[test]
    fn subsample_preserves_kept_points_and_constants() {
        let p = ForwardParams::phantom();
        let s = synth_signal(9.0, 1, &p, 4).unwrap();
        let r = subsample_interp(&s, 8);
        for &k in &kept_indices(451, 8) {
            assert_eq!(r.values[k], s.values[k]);
        }
        assert_eq!(r.values[450], s.values[450]);
        let flat = vec![0.3_f64; 451];
        assert_eq!(subsample_interp_values(&flat, 8), flat);
    }

    #[test]
    fn subsample_error_small_against_dip() {
        let p = ForwardParams::phantom().noiseless();
        let s = synth_signal(10.0, 0, &p, 0).unwrap();
        let dense = s.magnitude();
        let rebuilt = subsample_interp(&s, 8).magnitude();
        let dev = dense.iter().zip(&rebuilt).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let depth = dense.iter().cloned().fold(0.0, f64::max) - dense.iter().cloned().fold(1.0, f64::min);
        assert!(dev < 0.1 * depth, "{dev} vs depth {depth}");
    }

    proptest! {
        #[test]
        fn scaler_round_trip(labels in proptest::collection::vec(0.0f64..40.0, 2..50), x in -10.0f64..60.0) {
            prop_assume!(labels.iter().any(|&v| (v - labels[0]).abs() > 1e-6));
            let s = LabelScaler::fit(&labels).unwrap();
            prop_assert!((s.invert(s.apply(x)) - x).abs() < 1e-12);
        }
    }
}
