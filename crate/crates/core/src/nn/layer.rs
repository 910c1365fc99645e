use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::sigmoid;
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => open_unit(sigmoid(z)),
            Activation::Identity => z,
        }
    }

    /// Local derivative expressed through the activation value.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// Keeps a sigmoid value strictly inside (0, 1) once `exp` saturates.
#[inline]
fn open_unit(a: f64) -> f64 {
    const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;
    if a >= 1.0 {
        BELOW_ONE
    } else if a <= 0.0 {
        f64::MIN_POSITIVE
    } else {
        a
    }
}

/// Affine map followed by an elementwise activation: `act(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    /// `[out × in]`
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl LinearLayer {
    pub fn new(weight: DenseMatrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::shape("LinearLayer::new", weight.rows(), bias.len()));
        }
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            weight: DenseMatrix::zeros(output, input),
            bias: vec![0.0; output],
            activation,
        }
    }

    /// Uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: Rng + ?Sized>(
        input: usize,
        output: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = libm::sqrt(6.0 / (input + output) as f64);
        let values = (0..input * output)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self {
            weight: DenseMatrix::new(output, input, values).expect("sized by construction"),
            bias: vec![0.0; output],
            activation,
        }
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    #[inline]
    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Same shape and activation, all parameters zero.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.output_dim(), self.activation)
    }

    /// Forward pass over a batch `[batch × in]`, returning activations `[batch × out]`.
    pub fn forward(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape("LinearLayer::forward", self.input_dim(), x.cols()));
        }
        let mut out = x.matmul_nt(&self.weight)?;
        let act = self.activation;
        for r in 0..out.rows() {
            for (v, b) in out.row_mut(r).iter_mut().zip(&self.bias) {
                *v = act.apply(*v + b);
            }
        }
        Ok(out)
    }

    /// Backward pass over a batch.
    ///
    /// `input` and `output` are the forward input and activations; gradients
    /// with respect to the parameters are added into `acc`. Returns the
    /// gradient with respect to the input when `want_input` is set.
    pub fn backward(
        &self,
        input: &DenseMatrix,
        output: &DenseMatrix,
        upstream: &DenseMatrix,
        acc: &mut LinearLayer,
        want_input: bool,
    ) -> Result<Option<DenseMatrix>> {
        if upstream.shape() != output.shape() || output.cols() != self.output_dim() {
            return Err(Error::shape(
                "LinearLayer::backward",
                format!("[{} x {}]", output.rows(), self.output_dim()),
                format!("[{} x {}]", upstream.rows(), upstream.cols()),
            ));
        }
        if input.rows() != output.rows() || input.cols() != self.input_dim() {
            return Err(Error::State(format!(
                "cached input [{} x {}] does not belong to a {} -> {} layer",
                input.rows(),
                input.cols(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        let act = self.activation;
        let mut delta = upstream.clone();
        if act != Activation::Identity {
            for (d, &a) in delta.as_mut_slice().iter_mut().zip(output.as_slice()) {
                *d *= act.derivative_from_output(a);
            }
        }
        self.backward_delta(input, &delta, acc, want_input)
    }

    /// Affine part only, without the activation.
    pub fn pre_activation(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape("LinearLayer::pre_activation", self.input_dim(), x.cols()));
        }
        let mut out = x.matmul_nt(&self.weight)?;
        for r in 0..out.rows() {
            for (v, b) in out.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(out)
    }

    /// Backward pass given the gradient with respect to the pre-activation.
    pub fn backward_delta(
        &self,
        input: &DenseMatrix,
        delta: &DenseMatrix,
        acc: &mut LinearLayer,
        want_input: bool,
    ) -> Result<Option<DenseMatrix>> {
        if delta.cols() != self.output_dim() || input.rows() != delta.rows() || input.cols() != self.input_dim() {
            return Err(Error::shape(
                "LinearLayer::backward_delta",
                format!("[{} x {}] -> [{} x {}]", delta.rows(), self.input_dim(), delta.rows(), self.output_dim()),
                format!("[{} x {}] -> [{} x {}]", input.rows(), input.cols(), delta.rows(), delta.cols()),
            ));
        }
        if acc.weight.shape() != self.weight.shape() {
            return Err(Error::shape(
                "LinearLayer::backward_delta accumulator",
                format!("{:?}", self.weight.shape()),
                format!("{:?}", acc.weight.shape()),
            ));
        }
        for r in 0..delta.rows() {
            let dr = delta.row(r);
            let xr = input.row(r);
            for (j, &g) in dr.iter().enumerate() {
                if g != 0.0 {
                    acc.bias[j] += g;
                    axpy(g, xr, acc.weight.row_mut(j));
                }
            }
        }
        if want_input {
            Ok(Some(delta.matmul(&self.weight)?))
        } else {
            Ok(None)
        }
    }
}

/// Values kept from a single-vector forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub pre_activation: Vec<f64>,
    pub output: Vec<f64>,
}

/// Parameter and input gradients of one layer for one example.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
    pub input: Vec<f64>,
}

/// Single-example forward pass.
pub fn linear_forward(x: &[f64], layer: &LinearLayer) -> Result<(Vec<f64>, ForwardCache)> {
    if x.len() != layer.input_dim() {
        return Err(Error::shape("linear_forward", layer.input_dim(), x.len()));
    }
    let pre: Vec<f64> = layer
        .weight
        .iter_rows()
        .zip(&layer.bias)
        .map(|(w, b)| dot(w, x) + b)
        .collect();
    let out: Vec<f64> = pre.iter().map(|&z| layer.activation.apply(z)).collect();
    let cache = ForwardCache {
        input: x.to_vec(),
        pre_activation: pre,
        output: out.clone(),
    };
    Ok((out, cache))
}

/// Single-example backward pass through a layer whose forward produced `cache`.
pub fn linear_backward(
    upstream: &[f64],
    layer: &LinearLayer,
    cache: &ForwardCache,
) -> Result<LayerGrad> {
    if cache.input.len() != layer.input_dim() || cache.output.len() != layer.output_dim() {
        return Err(Error::State(format!(
            "forward cache ({} -> {}) does not match layer ({} -> {})",
            cache.input.len(),
            cache.output.len(),
            layer.input_dim(),
            layer.output_dim()
        )));
    }
    if upstream.len() != layer.output_dim() {
        return Err(Error::shape("linear_backward", layer.output_dim(), upstream.len()));
    }
    let mut acc = layer.zeros_like();
    let input = DenseMatrix::row_vector(&cache.input);
    let output = DenseMatrix::row_vector(&cache.output);
    let up = DenseMatrix::row_vector(upstream);
    let grad_input = layer
        .backward(&input, &output, &up, &mut acc, true)?
        .expect("input gradient requested");
    Ok(LayerGrad {
        weight: acc.weight,
        bias: acc.bias,
        input: grad_input.into_vec(),
    })
}
