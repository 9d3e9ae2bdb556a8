use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;

use super::autodiff::{Tape, Var};
use crate::error::{Error, Result};

/// Fully connected network with ReLU hidden layers and a linear head.
///
/// Parameters are stored as `[w0, b0, w1, b1, ...]`, weights shaped
/// `[fan_in, fan_out]` and biases `[1, fan_out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<Array2<f64>>,
}

impl Mlp {
    /// Fan-in scaled uniform initialization; the output layer is further
    /// multiplied by `output_scale`.
    pub fn new<R: Rng>(sizes: &[usize], output_scale: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least input and output sizes");
        let layers = sizes.len() - 1;
        let mut params = Vec::with_capacity(2 * layers);
        for (l, pair) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let scale = if l + 1 == layers { output_scale } else { 1.0 };
            let mut draw = |shape: (usize, usize)| {
                Array2::from_shape_simple_fn(shape, || scale * rng.random_range(-bound..=bound))
            };
            params.push(draw((fan_in, fan_out)));
            params.push(draw((1, fan_out)));
        }
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        let params = sizes
            .windows(2)
            .flat_map(|p| [Array2::zeros((p[0], p[1])), Array2::zeros((1, p[1]))])
            .collect();
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn from_params(sizes: Vec<usize>, params: Vec<Array2<f64>>) -> Result<Self> {
        if sizes.len() < 2 || params.len() != 2 * (sizes.len() - 1) {
            return Err(Error::Config(format!(
                "{} parameter arrays do not match layer sizes {sizes:?}",
                params.len()
            )));
        }
        for (l, pair) in sizes.windows(2).enumerate() {
            if params[2 * l].dim() != (pair[0], pair[1]) || params[2 * l + 1].dim() != (1, pair[1]) {
                return Err(Error::Config(format!("layer {l} parameter shapes do not match {sizes:?}")));
            }
        }
        Ok(Self { sizes, params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty sizes")
    }

    pub fn params(&self) -> &[Array2<f64>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.params
    }

    pub fn num_layers(&self) -> usize {
        self.params.len() / 2
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.iter().all(|x| x.is_finite()))
    }

    /// Batched forward pass, one row per sample.
    pub fn forward(&self, input: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(input.ncols(), self.input_dim(), "input width mismatch");
        let last = self.num_layers() - 1;
        let mut h = input.dot(&self.params[0]);
        h += &self.params[1];
        for l in 1..=last {
            h.mapv_inplace(|x| x.max(0.0));
            h = h.dot(&self.params[2 * l]);
            h += &self.params[2 * l + 1];
        }
        h
    }

    /// Forward pass for one input vector.
    pub fn forward_vec(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Usage(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row view");
        Ok(self.forward(x).index_axis(Axis(0), 0).to_vec())
    }

    /// Records the forward pass on `tape`. Returns the output node and the
    /// parameter leaves (differentiable iff `trainable`).
    pub fn forward_tape(&self, tape: &mut Tape, input: Var, trainable: bool) -> (Var, Vec<Var>) {
        let leaves: Vec<Var> = self
            .params
            .iter()
            .map(|p| tape.leaf(p.clone(), trainable))
            .collect();
        let last = self.num_layers() - 1;
        let mut h = input;
        for l in 0..=last {
            h = tape.dense(h, leaves[2 * l], leaves[2 * l + 1], l < last);
        }
        (h, leaves)
    }

    /// Moves every parameter toward `online` by `tau`. Entries already equal
    /// stay bit-identical.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) {
        for (t, o) in self.params.iter_mut().zip(&online.params) {
            ndarray::Zip::from(t).and(o).for_each(|t, &o| {
                if *t != o {
                    *t = tau * o + (1.0 - tau) * *t;
                }
            });
        }
    }
}
