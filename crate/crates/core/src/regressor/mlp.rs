use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const LEAKY_SLOPE: f64 = 0.2;

/// One affine layer: `weights` is `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self { weights: Matrix::zeros(n_out, n_in), bias: vec![T::zero(); n_out] }
    }

    pub fn n_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn n_out(&self) -> usize {
        self.weights.rows()
    }

    fn affine(&self, x: &[T], out: &mut Vec<T>) {
        out.clear();
        out.extend(
            self.weights
                .iter_rows()
                .zip(&self.bias)
                .map(|(w, &b)| w.iter().zip(x).fold(b, |acc, (&wi, &xi)| acc + wi * xi)),
        );
    }
}

/// Fully connected regressor with LeakyReLU after every layer but the last,
/// which has a single linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp<T> {
    pub layers: Vec<Layer<T>>,
    pub alpha: T,
}

#[inline]
fn leaky<T: Scalar>(z: T, alpha: T) -> T {
    if z > T::zero() {
        z
    } else {
        alpha * z
    }
}

// The subgradient at exactly zero takes the negative branch.
#[inline]
fn leaky_grad<T: Scalar>(z: T, alpha: T) -> T {
    if z > T::zero() {
        T::one()
    } else {
        alpha
    }
}

impl<T: Scalar> Mlp<T> {
    /// Zero-initialised network `input -> hidden[0] -> ... -> 1`.
    pub fn zeros(input: usize, hidden: &[usize]) -> Result<Self> {
        if input == 0 || hidden.contains(&0) {
            return Err(Error::InvalidArgument("layer widths must be positive".into()));
        }
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let layers = widths.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(Self { layers, alpha: T::lit(LEAKY_SLOPE) })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(input: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut m = Self::zeros(input, hidden)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut m.layers {
            let limit = (6.0 / (layer.n_in() + layer.n_out()) as f64).sqrt();
            for i in 0..layer.n_out() {
                for w in layer.weights.row_mut(i) {
                    *w = T::lit(rng.random_range(-limit..=limit));
                }
            }
        }
        Ok(m)
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].n_in()
    }

    /// Hidden widths, i.e. the architecture without input and output.
    pub fn hidden(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(Layer::n_out).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.n_in() * l.n_out() + l.n_out()).sum()
    }

    pub fn forward(&self, x: &[T]) -> Result<T> {
        if x.len() != self.input_width() {
            return Err(Error::DimensionMismatch { expected: self.input_width(), got: x.len() });
        }
        let mut a = x.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.affine(&a, &mut z);
            if l < last {
                z.iter_mut().for_each(|v| *v = leaky(*v, self.alpha));
            }
            std::mem::swap(&mut a, &mut z);
        }
        Ok(a[0])
    }

    /// Parameters flattened layer by layer: weights row-major, then bias.
    pub fn params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, p: &[T]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::DimensionMismatch { expected: self.param_count(), got: p.len() });
        }
        let mut off = 0;
        for l in &mut self.layers {
            let (r, c) = (l.n_out(), l.n_in());
            l.weights = Matrix::from_vec(r, c, p[off..off + r * c].to_vec());
            off += r * c;
            l.bias.copy_from_slice(&p[off..off + r]);
            off += r;
        }
        Ok(())
    }

    /// Mean squared error over the batch and its gradient with respect to
    /// [`Mlp::params`].
    pub fn loss_and_grad(&self, inputs: &Matrix<T>, targets: &[T]) -> Result<(T, Vec<T>)> {
        if inputs.rows() == 0 || inputs.rows() != targets.len() {
            return Err(Error::DimensionMismatch { expected: inputs.rows().max(1), got: targets.len() });
        }
        if inputs.cols() != self.input_width() {
            return Err(Error::DimensionMismatch { expected: self.input_width(), got: inputs.cols() });
        }
        let n_layers = self.layers.len();
        // Offsets of each layer's block in the flat gradient.
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.n_in() * l.n_out() + l.n_out();
        }
        let mut grad = vec![T::zero(); off];
        let scale = T::lit(2.0) / T::from_usize_lossy(targets.len());
        let mut loss = T::zero();
        // acts[0] is the input, acts[l + 1] the output of layer l; pre[l] its
        // pre-activation.
        let mut acts: Vec<Vec<T>> = vec![Vec::new(); n_layers + 1];
        let mut pre: Vec<Vec<T>> = vec![Vec::new(); n_layers];
        let mut delta = Vec::new();
        let mut next = Vec::new();
        for (x, &y) in inputs.iter_rows().zip(targets) {
            acts[0].clear();
            acts[0].extend_from_slice(x);
            for l in 0..n_layers {
                let (head, tail) = acts.split_at_mut(l + 1);
                self.layers[l].affine(&head[l], &mut pre[l]);
                tail[0].clear();
                if l + 1 < n_layers {
                    tail[0].extend(pre[l].iter().map(|&z| leaky(z, self.alpha)));
                } else {
                    tail[0].extend_from_slice(&pre[l]);
                }
            }
            let err = acts[n_layers][0] - y;
            loss = loss + err * err;
            delta.clear();
            delta.push(scale * err);
            for l in (0..n_layers).rev() {
                let layer = &self.layers[l];
                let (n_in, n_out) = (layer.n_in(), layer.n_out());
                let g = &mut grad[offsets[l]..offsets[l] + n_in * n_out + n_out];
                let a = &acts[l];
                for (i, &d) in delta.iter().enumerate() {
                    for (gw, &aj) in g[i * n_in..(i + 1) * n_in].iter_mut().zip(a) {
                        *gw = *gw + d * aj;
                    }
                    g[n_in * n_out + i] = g[n_in * n_out + i] + d;
                }
                if l > 0 {
                    next.clear();
                    next.resize(n_in, T::zero());
                    for (w, &d) in layer.weights.iter_rows().zip(&delta) {
                        for (n, &wj) in next.iter_mut().zip(w) {
                            *n = *n + wj * d;
                        }
                    }
                    for (n, &z) in next.iter_mut().zip(&pre[l - 1]) {
                        *n = *n * leaky_grad(z, self.alpha);
                    }
                    std::mem::swap(&mut delta, &mut next);
                }
            }
        }
        Ok((loss / T::from_usize_lossy(targets.len()), grad))
    }

    /// Mean squared error without gradients.
    pub fn mse(&self, inputs: &Matrix<T>, targets: &[T]) -> Result<T> {
        if inputs.rows() != targets.len() {
            return Err(Error::DimensionMismatch { expected: inputs.rows(), got: targets.len() });
        }
        if targets.is_empty() {
            return Ok(T::zero());
        }
        let mut s = T::zero();
        for (x, &y) in inputs.iter_rows().zip(targets) {
            let e = self.forward(x)? - y;
            s = s + e * e;
        }
        Ok(s / T::from_usize_lossy(targets.len()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates with the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(n: usize) -> Self {
        Self { m: vec![T::zero(); n], v: vec![T::zero(); n], step: 0 }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [T], grads: &[T], cfg: &AdamConfig) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.step += 1;
        let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
        let c1 = T::one() - T::lit(cfg.beta1.powi(self.step as i32));
        let c2 = T::one() - T::lit(cfg.beta2.powi(self.step as i32));
        let (lr, eps) = (T::lit(cfg.learning_rate), T::lit(cfg.eps));
        for ((p, &g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
