//! Dense tanh MLP with a linear output layer and hand-written backprop.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

/// `y = W x + b`, with `W` stored `(out, in)` row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { weight: Array2::zeros((outputs, inputs)), bias: Array1::zeros(outputs) }
    }

    /// Weights uniform in `±scale/sqrt(fan_in)`, biases zero.
    pub fn uniform_fan_in<R: Rng + ?Sized>(inputs: usize, outputs: usize, scale: f64, rng: &mut R) -> Self {
        let bound = scale / (inputs as f64).sqrt();
        let weight = Array2::from_shape_fn((outputs, inputs), |_| rng.random_range(-bound..=bound));
        Self { weight, bias: Array1::zeros(outputs) }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

/// Activations kept from a batched forward pass for the backward pass.
pub struct ForwardCache {
    /// `hidden[i]` is the tanh output of layer `i`, shape `(batch, width)`.
    hidden: Vec<Array2<f64>>,
}

impl Mlp {
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Linear::param_count).sum()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Linear::outputs)
    }

    pub fn forward_one(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let last = self.layers.len() - 1;
        let mut h = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weight.dot(&h);
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(f64::tanh);
            }
            h = z;
        }
        h
    }

    /// Batched forward; rows of `x` are samples.
    pub fn forward(&self, x: ArrayView2<f64>) -> (Array2<f64>, ForwardCache) {
        let last = self.layers.len() - 1;
        let mut hidden: Vec<Array2<f64>> = Vec::with_capacity(last);
        let mut out = Array2::zeros((0, 0));
        for (i, layer) in self.layers.iter().enumerate() {
            let input = if i == 0 { x } else { hidden[i - 1].view() };
            let mut z = Array2::zeros((input.nrows(), layer.outputs()));
            z += &layer.bias;
            general_mat_mul(1.0, &input, &layer.weight.t(), 1.0, &mut z);
            if i < last {
                z.mapv_inplace(f64::tanh);
                hidden.push(z);
            } else {
                out = z;
            }
        }
        (out, ForwardCache { hidden })
    }

    /// Accumulate parameter gradients into `grads` given `d_out = dL/d(output)`.
    pub fn backward(&self, x: ArrayView2<f64>, cache: &ForwardCache, d_out: Array2<f64>, grads: &mut Mlp) {
        let mut delta = d_out;
        for i in (0..self.layers.len()).rev() {
            let input = if i == 0 { x } else { cache.hidden[i - 1].view() };
            let g = &mut grads.layers[i];
            general_mat_mul(1.0, &delta.t(), &input, 1.0, &mut g.weight);
            g.bias += &delta.sum_axis(Axis(0));
            if i > 0 {
                let mut d_in = delta.dot(&self.layers[i].weight);
                d_in.zip_mut_with(&cache.hidden[i - 1], |d, &h| *d *= 1.0 - h * h);
                delta = d_in;
            }
        }
    }

    pub fn zeros_like(&self) -> Mlp {
        Mlp { layers: self.layers.iter().map(|l| Linear::zeros(l.inputs(), l.outputs())).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn toy_chain_by_hand() {
        // 1 → 1 → 1: y = w2·tanh(w1·x + b1) + b2
        let net = Mlp {
            layers: vec![
                Linear { weight: array![[2.0]], bias: array![0.5] },
                Linear { weight: array![[-1.5]], bias: array![0.25] },
            ],
        };
        let y = net.forward_one(array![0.3].view());
        let expect = -1.5 * (2.0f64 * 0.3 + 0.5).tanh() + 0.25;
        assert!((y[0] - expect).abs() < 1e-15);
        let (yb, _) = net.forward(array![[0.3]].view());
        assert!((yb[[0, 0]] - expect).abs() < 1e-15);
    }

    #[test]
    fn backward_matches_hand_derivative() {
        let net = Mlp {
            layers: vec![
                Linear { weight: array![[2.0]], bias: array![0.5] },
                Linear { weight: array![[-1.5]], bias: array![0.25] },
            ],
        };
        let x = array![[0.3]];
        let (_, cache) = net.forward(x.view());
        let mut g = net.zeros_like();
        net.backward(x.view(), &cache, array![[1.0]], &mut g);
        let h = (2.0f64 * 0.3 + 0.5).tanh();
        assert!((g.layers[1].weight[[0, 0]] - h).abs() < 1e-15);
        assert!((g.layers[1].bias[0] - 1.0).abs() < 1e-15);
        let dz = -1.5 * (1.0 - h * h);
        assert!((g.layers[0].weight[[0, 0]] - dz * 0.3).abs() < 1e-15);
        assert!((g.layers[0].bias[0] - dz).abs() < 1e-15);
    }
}
