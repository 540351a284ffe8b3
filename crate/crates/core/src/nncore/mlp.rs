//! Dense feed-forward layers with manual backpropagation.
//!
//! A layer computes `a = act(W x + b)` with `W` stored row-major as
//! `(out_dim, in_dim)`. Gradients accumulate into each [`ParamTensor`] until
//! the caller zeroes them.

use rand::Rng;

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Identity,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
            Activation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sigmoid" => Some(Activation::Sigmoid),
            "identity" => Some(Activation::Identity),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// Largest double below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function, kept strictly inside (0, 1) even for saturated inputs.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let a = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    a.clamp(f64::MIN_POSITIVE, BELOW_ONE)
}

/// A trainable value with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub value: DenseMatrix,
    pub grad: DenseMatrix,
}

impl ParamTensor {
    pub fn new(value: DenseMatrix) -> Self {
        let grad = DenseMatrix::zeros(value.rows(), value.cols());
        Self { value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }
}

/// Anything that owns parameter tensors in a fixed, deterministic order.
pub trait Parameterized {
    /// Tensors paired with stable names, in optimizer order.
    fn named_params(&self) -> Vec<(String, &ParamTensor)>;

    fn params_mut(&mut self) -> Vec<&mut ParamTensor>;

    fn params(&self) -> Vec<&ParamTensor> {
        self.named_params().into_iter().map(|(_, p)| p).collect()
    }

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Sum of squares over every parameter entry.
    fn sum_sq(&self) -> f64 {
        self.params().iter().map(|p| p.value.sum_sq()).sum()
    }

    /// Adds `2 · scale · θ` to every gradient (derivative of `scale · ‖θ‖²`).
    fn add_l2_grad(&mut self, scale: f64) {
        if scale == 0.0 {
            return;
        }
        for p in self.params_mut() {
            let ParamTensor { value, grad } = p;
            for (g, v) in grad.as_mut_slice().iter_mut().zip(value.as_slice()) {
                *g += 2.0 * scale * v;
            }
        }
    }

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: ParamTensor,
    pub bias: ParamTensor,
    pub activation: Activation,
}

impl Layer {
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        weight_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let w = DenseMatrix::random_normal(out_dim, in_dim, weight_std, rng)?;
        Ok(Self {
            weights: ParamTensor::new(w),
            bias: ParamTensor::new(DenseMatrix::zeros(1, out_dim)),
            activation,
        })
    }

    pub fn from_parts(weights: DenseMatrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::dim(format!(
                "bias length {} does not match {} weight rows",
                bias.len(),
                weights.rows()
            )));
        }
        Ok(Self {
            weights: ParamTensor::new(weights),
            bias: ParamTensor::new(DenseMatrix::row_vector(bias)),
            activation,
        })
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.value.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.value.rows()
    }
}

/// Per-layer values recorded by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// `inputs[l]` is the input to layer `l`.
    pub inputs: Vec<Vec<f64>>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// `dims = [in, h1, ..., out]`, one activation per layer.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        activations: &[Activation],
        weight_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::invalid("an MLP needs at least input and output sizes"));
        }
        if activations.len() != dims.len() - 1 {
            return Err(Error::invalid(format!(
                "{} activations given for {} layers",
                activations.len(),
                dims.len() - 1
            )));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| Layer::new(w[0], w[1], act, weight_std, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("an MLP needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::dim(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.in_dim()];
        d.extend(self.layers.iter().map(Layer::out_dim));
        d
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if x.len() != self.in_dim() {
            return Err(Error::dim(format!(
                "input length {} does not match network input {}",
                x.len(),
                self.in_dim()
            )));
        }
        let n = self.layers.len();
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(n),
            pre: Vec::with_capacity(n),
            post: Vec::with_capacity(n),
        };
        let mut current = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.weights.value.matvec(&current);
            for (zi, bi) in z.iter_mut().zip(layer.bias.value.as_slice()) {
                *zi += bi;
            }
            let a: Vec<f64> = z.iter().map(|&zi| layer.activation.apply(zi)).collect();
            cache.inputs.push(std::mem::replace(&mut current, a.clone()));
            cache.pre.push(z);
            cache.post.push(a);
        }
        Ok((current, cache))
    }

    /// Output only, without keeping the cache.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x).map(|(y, _)| y)
    }

    /// Accumulates parameter gradients and returns `dLoss/dx`.
    pub fn backward(&mut self, cache: &ForwardCache, d_out: &[f64]) -> Result<Vec<f64>> {
        if cache.pre.len() != self.layers.len() {
            return Err(Error::dim("cache does not belong to this network"));
        }
        if d_out.len() != self.out_dim() {
            return Err(Error::dim(format!(
                "upstream gradient length {} does not match network output {}",
                d_out.len(),
                self.out_dim()
            )));
        }
        let mut grad = d_out.to_vec();
        for (l, layer) in self.layers.iter_mut().enumerate().rev() {
            let act = layer.activation;
            let delta: Vec<f64> = grad
                .iter()
                .zip(cache.pre[l].iter().zip(&cache.post[l]))
                .map(|(g, (&z, &a))| g * act.derivative(z, a))
                .collect();
            layer.weights.grad.add_outer(&delta, &cache.inputs[l]);
            for (bg, d) in layer.bias.grad.as_mut_slice().iter_mut().zip(&delta) {
                *bg += d;
            }
            grad = layer.weights.value.matvec_transposed(&delta);
        }
        Ok(grad)
    }
}

impl Parameterized for Mlp {
    fn named_params(&self) -> Vec<(String, &ParamTensor)> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("{i}.weight"), &l.weights));
            out.push((format!("{i}.bias"), &l.bias));
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in self.layers.iter_mut() {
            out.push(&mut l.weights);
            out.push(&mut l.bias);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{grad_check, SeedStream};

    fn single(w: DenseMatrix, b: Vec<f64>, act: Activation) -> Mlp {
        Mlp::from_layers(vec![Layer::from_parts(w, b, act).unwrap()]).unwrap()
    }

    #[test]
    fn identity_network_passes_input_through() {
        let net = single(DenseMatrix::identity(2), vec![0.0, 0.0], Activation::Identity);
        assert_eq!(net.predict(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn zero_sigmoid_layer_outputs_half() {
        let net = single(DenseMatrix::zeros(3, 2), vec![0.0; 3], Activation::Sigmoid);
        assert_eq!(net.predict(&[7.0, -3.0]).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn sigmoid_of_ln3_is_three_quarters() {
        let w = DenseMatrix::from_vec(1, 1, vec![3f64.ln()]).unwrap();
        let net = single(w, vec![0.0], Activation::Sigmoid);
        let y = net.predict(&[1.0]).unwrap();
        assert!((y[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut net = single(DenseMatrix::identity(2), vec![0.0; 2], Activation::Identity);
        assert!(net.forward(&[1.0]).is_err());
        let (_, cache) = net.forward(&[1.0, 2.0]).unwrap();
        assert!(net.backward(&cache, &[1.0]).is_err());
        let l0 = Layer::from_parts(DenseMatrix::zeros(3, 2), vec![0.0; 3], Activation::Sigmoid).unwrap();
        let l1 = Layer::from_parts(DenseMatrix::zeros(1, 2), vec![0.0], Activation::Sigmoid).unwrap();
        assert!(Mlp::from_layers(vec![l0, l1]).is_err());
    }

    #[test]
    fn linear_backward_is_transpose() {
        let w = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut net = single(w.clone(), vec![0.0; 2], Activation::Identity);
        let (_, cache) = net.forward(&[0.5, -1.0, 2.0]).unwrap();
        let g = [0.3, -0.7];
        let dx = net.backward(&cache, &g).unwrap();
        assert_eq!(dx, w.matvec_transposed(&g));
    }

    #[test]
    fn zero_upstream_leaves_grads_unchanged() {
        let mut rng = SeedStream::new(5).rng("init");
        let mut net = Mlp::new(&[4, 3, 2], &[Activation::Sigmoid, Activation::Identity], 0.5, &mut rng).unwrap();
        let (_, cache) = net.forward(&[1.0, 0.0, 2.0, -1.0]).unwrap();
        net.backward(&cache, &[0.4, 0.1]).unwrap();
        let before = net.clone();
        net.backward(&cache, &[0.0, 0.0]).unwrap();
        assert_eq!(before, net);
    }

    #[test]
    fn forward_is_pure() {
        let mut rng = SeedStream::new(8).rng("init");
        let net = Mlp::new(&[5, 4, 3], &[Activation::Sigmoid, Activation::Relu], 0.7, &mut rng).unwrap();
        let x = [0.1, -0.2, 3.0, 0.0, 1.5];
        let a = net.predict(&x).unwrap();
        let b = net.predict(&x).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn two_layer_sigmoid_masked_loss_passes_grad_check() {
        let mut rng = SeedStream::new(11).rng("init");
        let mut net = Mlp::new(&[6, 5, 4], &[Activation::Sigmoid, Activation::Sigmoid], 0.8, &mut rng).unwrap();
        let x = [0.3, -1.0, 0.0, 2.0, 0.5, -0.4];
        let target = [0.9, 0.1, 0.4, 0.7];
        let mask = [true, false, true, true];
        let loss = |n: &Mlp| {
            let y = n.predict(&x).unwrap();
            y.iter()
                .zip(&target)
                .zip(&mask)
                .filter(|(_, &m)| m)
                .map(|((p, t), _)| (p - t) * (p - t))
                .sum::<f64>()
        };
        net.zero_grad();
        let (y, cache) = net.forward(&x).unwrap();
        let d: Vec<f64> = y
            .iter()
            .zip(&target)
            .zip(&mask)
            .map(|((p, t), &m)| if m { 2.0 * (p - t) } else { 0.0 })
            .collect();
        net.backward(&cache, &d).unwrap();
        let report = grad_check(&mut net, 1e-5, loss).unwrap();
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn sigmoid_stays_in_open_unit_interval() {
        for z in [-800.0, -30.0, -5.0, 0.0, 5.0, 30.0, 40.0, 800.0] {
            let a = sigmoid(z);
            assert!(a > 0.0 && a < 1.0, "sigmoid({z}) = {a}");
        }
    }
}
