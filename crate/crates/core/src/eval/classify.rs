//! Multi-label item classification on top of embeddings.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::ranking::f1;
use crate::data::train_count;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::nn::{sigmoid, Activation, Adam, LinearLayer, ParamSet, Tensor, TensorMut};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub train_fraction: f64,
    pub threshold: f64,
    /// Rescale every embedding column to zero mean and unit variance using
    /// training-row statistics before fitting.
    pub standardize: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: 100,
            epochs: 200,
            batch_size: 200,
            learning_rate: 1e-2,
            train_fraction: 0.8,
            threshold: 0.5,
            standardize: true,
        }
    }
}

/// Micro-averaged scores over pooled label decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationScores {
    pub recall: f64,
    pub precision: f64,
    pub micro_f1: f64,
}

/// Micro recall, precision and F1 of binary decisions against binary targets.
/// An empty denominator counts as 0.
pub fn micro_scores(predicted: &DenseMatrix, target: &DenseMatrix) -> Result<ClassificationScores> {
    if predicted.shape() != target.shape() {
        return Err(Error::shape(
            "micro_scores",
            format!("{:?}", target.shape()),
            format!("{:?}", predicted.shape()),
        ));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &y) in predicted.as_slice().iter().zip(target.as_slice()) {
        match (p > 0.5, y > 0.5) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Ok(ClassificationScores {
        recall,
        precision,
        micro_f1: f1(precision, recall),
    })
}

/// One sigmoid hidden layer and a sigmoid output per label.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub hidden: LinearLayer,
    pub output: LinearLayer,
}

impl Mlp {
    pub fn init(input: usize, hidden: usize, labels: usize, rng: &mut ChaCha20Rng) -> Self {
        Self {
            hidden: LinearLayer::glorot(input, hidden, Activation::Sigmoid, rng),
            output: LinearLayer::glorot(hidden, labels, Activation::Sigmoid, rng),
        }
    }

    /// Label probabilities `[rows × labels]`.
    pub fn predict_proba(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.output.forward(&self.hidden.forward(x)?)
    }

    /// Mean per-label BCE and its gradient.
    pub fn loss_and_gradients(&self, x: &DenseMatrix, y: &DenseMatrix) -> Result<(f64, Mlp)> {
        let h = self.hidden.forward(x)?;
        let logits = self.output.pre_activation(&h)?;
        if logits.shape() != y.shape() {
            return Err(Error::shape("Mlp targets", format!("{:?}", logits.shape()), format!("{:?}", y.shape())));
        }
        let n = y.as_slice().len() as f64;
        let loss = crate::nn::loss::bce_with_logits_sum(logits.as_slice(), y.as_slice()) / n;
        let mut d = logits.map(sigmoid);
        for (v, &t) in d.as_mut_slice().iter_mut().zip(y.as_slice()) {
            *v = (*v - t) / n;
        }
        let mut g = self.zeros_like();
        let dh = self.output.backward_delta(&h, &d, &mut g.output, true)?.expect("requested");
        self.hidden.backward(x, &h, &dh, &mut g.hidden, false)?;
        Ok((loss, g))
    }
}

impl ParamSet for Mlp {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = Vec::new();
        self.hidden.push_tensors("hidden", &mut out);
        self.output.push_tensors("output", &mut out);
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        self.hidden.push_tensors_mut("hidden", &mut out);
        self.output.push_tensors_mut("output", &mut out);
        out
    }

    fn zeros_like(&self) -> Self {
        Self {
            hidden: self.hidden.zeros_like(),
            output: self.output.zeros_like(),
        }
    }
}

/// Seeded split of `n` rows into train and test index lists.
pub fn split_rows(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let cut = train_count(n, train_fraction);
    let test = order.split_off(cut);
    (order, test)
}

/// Centres and scales each column by its mean and standard deviation over
/// `rows`; constant columns are only centred.
pub fn standardize_columns(x: &DenseMatrix, rows: &[usize]) -> DenseMatrix {
    let n = rows.len().max(1) as f64;
    let mut mean = alloc::vec![0.0; x.cols()];
    for &r in rows {
        crate::matrix::axpy(1.0 / n, x.row(r), &mut mean);
    }
    let mut var = alloc::vec![0.0; x.cols()];
    for &r in rows {
        for ((v, &a), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
            *v += (a - m) * (a - m) / n;
        }
    }
    let scale: Vec<f64> = var.iter().map(|&v| if v > 0.0 { 1.0 / libm::sqrt(v) } else { 1.0 }).collect();
    let mut out = x.clone();
    for r in 0..out.rows() {
        for ((a, m), s) in out.row_mut(r).iter_mut().zip(&mean).zip(&scale) {
            *a = (*a - m) * s;
        }
    }
    out
}

/// Trains a classifier on a seeded share of the rows and scores it on the rest.
pub fn classify_items(
    embeddings: &DenseMatrix,
    categories: &DenseMatrix,
    seed: u64,
    config: &ClassifierConfig,
) -> Result<ClassificationScores> {
    if embeddings.rows() != categories.rows() {
        return Err(Error::shape("classify_items rows", categories.rows(), embeddings.rows()));
    }
    if config.epochs == 0 || config.batch_size == 0 || config.hidden == 0 {
        return Err(Error::Config("classifier epochs, batch size and width must be positive".into()));
    }
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {} must lie in (0, 1)", config.train_fraction)));
    }
    let (train, test) = split_rows(embeddings.rows(), config.train_fraction, seed);
    if train.is_empty() || test.is_empty() {
        return Err(Error::Domain(format!(
            "{} items are too few for a train/test split",
            embeddings.rows()
        )));
    }
    let scaled;
    let embeddings = if config.standardize {
        scaled = standardize_columns(embeddings, &train);
        &scaled
    } else {
        embeddings
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut model = Mlp::init(embeddings.cols(), config.hidden, categories.cols(), &mut rng);
    let mut adam = Adam::with_learning_rate(config.learning_rate)?;
    let mut order = train.clone();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let (loss, g) = model.loss_and_gradients(&embeddings.select_rows(chunk), &categories.select_rows(chunk))?;
            if !loss.is_finite() {
                return Err(Error::Training(format!("classifier loss non-finite at epoch {}", epoch + 1)));
            }
            adam.step(&mut model, &g)?;
        }
    }
    let proba = model.predict_proba(&embeddings.select_rows(&test))?;
    let threshold = config.threshold;
    let decisions = proba.map(|p| if p > threshold { 1.0 } else { 0.0 });
    micro_scores(&decisions, &categories.select_rows(&test))
}
