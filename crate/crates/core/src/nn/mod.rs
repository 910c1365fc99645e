//! Dense network core: sigmoid layers with exact backward passes, binary
//! cross-entropy, the adaptive-moment optimizer and a finite-difference
//! gradient checker.

pub mod gradcheck;
pub mod layer;
pub mod loss;
pub mod optim;
pub mod params;

pub use gradcheck::{grad_check, GradCheckReport};
pub use layer::{linear_backward, linear_forward, Activation, ForwardCache, LayerGrad, LinearLayer};
pub use loss::{bce, bce_grad, bce_with_logits, bce_with_logits_grad, BCE_EPS};
pub use optim::{Adam, AdamConfig};
pub use params::{ParamSet, Tensor, TensorMut};

/// Logistic function, evaluated without overflow for large |z|.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}
