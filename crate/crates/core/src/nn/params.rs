use alloc::string::String;
use alloc::vec::Vec;

use super::layer::LinearLayer;

/// A named, read-only view of one parameter buffer.
pub struct Tensor<'a> {
    pub name: String,
    pub values: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: String,
    pub values: &'a mut [f64],
}

/// A collection of trainable buffers in a fixed canonical order.
///
/// Gradient tapes are values of the same type with identical shapes, so an
/// optimizer can walk parameters and gradients in lockstep.
pub trait ParamSet {
    fn tensors(&self) -> Vec<Tensor<'_>>;
    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>>;

    /// A tape of zeros shaped like `self`.
    fn zeros_like(&self) -> Self
    where
        Self: Sized;

    fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.values.len()).sum()
    }
}

impl LinearLayer {
    pub(crate) fn push_tensors<'a>(&'a self, prefix: &str, out: &mut Vec<Tensor<'a>>) {
        out.push(Tensor {
            name: alloc::format!("{prefix}.weight"),
            values: self.weight.as_slice(),
        });
        out.push(Tensor {
            name: alloc::format!("{prefix}.bias"),
            values: &self.bias,
        });
    }

    pub(crate) fn push_tensors_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<TensorMut<'a>>) {
        out.push(TensorMut {
            name: alloc::format!("{prefix}.weight"),
            values: self.weight.as_mut_slice(),
        });
        out.push(TensorMut {
            name: alloc::format!("{prefix}.bias"),
            values: &mut self.bias,
        });
    }
}

impl ParamSet for LinearLayer {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = Vec::with_capacity(2);
        self.push_tensors("layer", &mut out);
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::with_capacity(2);
        self.push_tensors_mut("layer", &mut out);
        out
    }

    fn zeros_like(&self) -> Self {
        LinearLayer::zeros_like(self)
    }
}

/// A bare list of scalars, handy for optimizer and checker tests.
impl ParamSet for Vec<f64> {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        alloc::vec![Tensor {
            name: String::from("values"),
            values: self.as_slice(),
        }]
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        alloc::vec![TensorMut {
            name: String::from("values"),
            values: self.as_mut_slice(),
        }]
    }

    fn zeros_like(&self) -> Self {
        alloc::vec![0.0; self.len()]
    }
}
