//! Deterministic mini-batch training.
//!
//! Users and items are shuffled every epoch by a generator derived from the
//! seed and epoch number, so a run can be resumed from any epoch boundary
//! and continue bit-identically.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::model::{
    loss_and_gradients, Batch, BlockLayout, LossComponents, LossWeights, ModelInputs, ModelShape, SdrlParams,
    VariantConfig,
};
use crate::nn::{Adam, AdamConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    /// Total embedding dimension, split across blocks by the variant's proportion.
    pub k: usize,
    pub seed: u64,
    pub variant: VariantConfig,
    /// Progress reporting interval in epochs; 0 disables it.
    pub log_every: usize,
    pub weights: LossWeights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 128,
            learning_rate: 1e-3,
            hidden: 256,
            k: 128,
            seed: 0,
            variant: VariantConfig::default_for(crate::model::Variant::Full),
            log_every: 10,
            weights: LossWeights::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        let w = self.weights;
        if [w.recon, w.int, w.ext].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!("loss weights must be finite and non-negative, got {w:?}")));
        }
        self.layout().map(|_| ())
    }

    pub fn layout(&self) -> Result<BlockLayout> {
        self.variant.layout(self.k)
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}

/// Epoch-averaged loss groups, with epochs counted from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub recon: f64,
    pub int: f64,
    pub ext: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossTrace {
    pub epochs: Vec<EpochLoss>,
}

impl LossTrace {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn first(&self) -> Option<&EpochLoss> {
        self.epochs.first()
    }

    pub fn last(&self) -> Option<&EpochLoss> {
        self.epochs.last()
    }

    /// The record of a given 1-based epoch.
    pub fn epoch(&self, epoch: usize) -> Option<&EpochLoss> {
        epoch.checked_sub(1).and_then(|i| self.epochs.get(i))
    }
}

fn batches(order: &[usize], size: usize) -> Vec<Vec<usize>> {
    order.chunks(size).map(<[usize]>::to_vec).collect()
}

/// Training state that can be stepped epoch by epoch and resumed.
#[derive(Debug, Clone)]
pub struct Trainer<'a> {
    config: TrainConfig,
    inputs: ModelInputs<'a>,
    params: SdrlParams,
    optimizer: Adam,
    trace: LossTrace,
}

impl<'a> Trainer<'a> {
    /// Fresh parameters drawn from the seed.
    pub fn new(config: TrainConfig, inputs: ModelInputs<'a>) -> Result<Self> {
        config.validate()?;
        let layout = config.layout()?;
        let shape = ModelShape {
            user_dim: inputs.num_items(),
            item_dim: inputs.num_users(),
            hidden: config.hidden,
            num_categories: if layout.is_active(crate::model::Block::Internal) {
                inputs.categories.num_categories()
            } else {
                0
            },
        };
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let params = SdrlParams::init(layout, shape, &mut rng)?;
        let optimizer = Adam::new(config.adam())?;
        Ok(Self {
            config,
            inputs,
            params,
            optimizer,
            trace: LossTrace::default(),
        })
    }

    /// Continues from saved parameters, optimizer state and trace.
    pub fn resume(
        config: TrainConfig,
        inputs: ModelInputs<'a>,
        params: SdrlParams,
        optimizer: Adam,
        trace: LossTrace,
    ) -> Result<Self> {
        config.validate()?;
        let layout = config.layout()?;
        if params.layout != layout {
            return Err(Error::Config(format!(
                "checkpoint layout {} does not match configured layout {layout}",
                params.layout
            )));
        }
        if trace.epochs.iter().enumerate().any(|(i, e)| e.epoch != i + 1) {
            return Err(Error::State("loss trace epochs are not consecutive from 1".into()));
        }
        if trace.len() > config.epochs {
            return Err(Error::Config(format!(
                "checkpoint already has {} epochs, more than the configured {}",
                trace.len(),
                config.epochs
            )));
        }
        Ok(Self {
            config,
            inputs,
            params,
            optimizer,
            trace,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn params(&self) -> &SdrlParams {
        &self.params
    }

    pub fn optimizer(&self) -> &Adam {
        &self.optimizer
    }

    pub fn trace(&self) -> &LossTrace {
        &self.trace
    }

    pub fn epochs_done(&self) -> usize {
        self.trace.len()
    }

    pub fn is_finished(&self) -> bool {
        self.epochs_done() >= self.config.epochs
    }

    /// One pass over every user and item.
    ///
    /// The user and item orders are cut into batches; step `j` pairs user
    /// batch `j mod U` with item batch `j mod I` for `max(U, I)` steps.
    pub fn run_epoch(&mut self) -> Result<EpochLoss> {
        let epoch = self.epochs_done() + 1;
        let mut rng = ChaCha20Rng::seed_from_u64(self.config.seed);
        rng.set_stream(epoch as u64);
        let mut users: Vec<usize> = (0..self.inputs.num_users()).collect();
        let mut items: Vec<usize> = (0..self.inputs.num_items()).collect();
        users.shuffle(&mut rng);
        items.shuffle(&mut rng);
        let ub = batches(&users, self.config.batch_size);
        let ib = batches(&items, self.config.batch_size);
        let steps = ub.len().max(ib.len());

        let mut sum = LossComponents::default();
        for j in 0..steps {
            let batch = Batch {
                users: ub[j % ub.len()].clone(),
                items: ib[j % ib.len()].clone(),
            };
            let (c, grads) = loss_and_gradients(&self.params, &self.inputs, &batch, self.config.weights)?;
            if !c.total.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss at epoch {epoch}, batch {}",
                    j + 1
                )));
            }
            self.optimizer
                .step(&mut self.params, &grads)
                .map_err(|e| Error::Training(format!("epoch {epoch}, batch {}: {e}", j + 1)))?;
            sum.recon += c.recon;
            sum.int += c.int;
            sum.ext += c.ext;
            sum.total += c.total;
        }
        let n = steps as f64;
        let record = EpochLoss {
            epoch,
            recon: sum.recon / n,
            int: sum.int / n,
            ext: sum.ext / n,
            total: sum.total / n,
        };
        self.trace.epochs.push(record);
        Ok(record)
    }

    /// Trains until the configured epoch count, calling `on_epoch` after each one.
    pub fn run<F>(&mut self, mut on_epoch: F) -> Result<()>
    where
        F: FnMut(&Self, &EpochLoss) -> Result<()>,
    {
        while !self.is_finished() {
            let record = self.run_epoch()?;
            on_epoch(self, &record)?;
        }
        Ok(())
    }

    pub fn into_parts(self) -> (SdrlParams, Adam, LossTrace) {
        (self.params, self.optimizer, self.trace)
    }
}

/// Trains from scratch and returns the final parameters and loss trace.
pub fn train(inputs: ModelInputs<'_>, config: TrainConfig) -> Result<(SdrlParams, LossTrace)> {
    let mut trainer = Trainer::new(config, inputs)?;
    trainer.run(|_, _| Ok(()))?;
    let (params, _, trace) = trainer.into_parts();
    Ok((params, trace))
}
