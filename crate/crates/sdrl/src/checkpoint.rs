//! Versioned binary checkpoint of a model, its configuration and training state.
//!
//! Body layout after the common header (see [`crate::codec`]):
//!
//! ```text
//! config: epochs u64, batch_size u64, learning_rate f64, hidden u64, k u64,
//!         seed u64, variant str, proportion 3 x u32, log_every u64,
//!         loss weights 3 x f64 (recon, int, ext)
//! dataset checksum: str (hex SHA-256 of the snapshot file)
//! layout: 3 x u64 (internal, external, other dims)
//! shape: user_dim, item_dim, hidden, num_categories (u64 each)
//! trace: u64 count + (epoch u64, recon f64, int f64, ext f64, total f64) each
//! tensors: u64 count + (name str, u64 length + f64 values) each, canonical order
//! optimizer: u8 flag; if 1: lr, beta1, beta2, eps (f64), step u64,
//!            u64 count + (first moments f64s, second moments f64s) each
//! ```

use std::path::Path;

use sdrl_core::model::{BlockLayout, ModelShape, Proportion, SdrlParams, Variant, VariantConfig};
use sdrl_core::nn::{Adam, AdamConfig, ParamSet};
use sdrl_core::train::{EpochLoss, LossTrace, TrainConfig};
use sdrl_core::model::LossWeights;

use crate::codec::{write_atomic, Decoder, Encoder};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SDRLCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    /// Hex SHA-256 of the snapshot the model was trained on.
    pub dataset_checksum: String,
    pub params: SdrlParams,
    pub trace: LossTrace,
    /// Present while training can still be resumed.
    pub optimizer: Option<Adam>,
}

impl Checkpoint {
    pub fn epochs_done(&self) -> usize {
        self.trace.len()
    }
}

pub fn encode_checkpoint(c: &Checkpoint) -> Vec<u8> {
    let mut e = Encoder::new(CHECKPOINT_MAGIC, CHECKPOINT_VERSION);
    let cfg = &c.config;
    e.usize(cfg.epochs);
    e.usize(cfg.batch_size);
    e.f64(cfg.learning_rate);
    e.usize(cfg.hidden);
    e.usize(cfg.k);
    e.u64(cfg.seed);
    e.str(cfg.variant.variant.name());
    for p in cfg.variant.proportion().0 {
        e.u32(p);
    }
    e.usize(cfg.log_every);
    e.f64(cfg.weights.recon);
    e.f64(cfg.weights.int);
    e.f64(cfg.weights.ext);
    e.str(&c.dataset_checksum);

    for d in c.params.layout.dims() {
        e.usize(d);
    }
    let s = c.params.shape();
    for v in [s.user_dim, s.item_dim, s.hidden, s.num_categories] {
        e.usize(v);
    }
    e.usize(c.trace.len());
    for r in &c.trace.epochs {
        e.usize(r.epoch);
        for v in [r.recon, r.int, r.ext, r.total] {
            e.f64(v);
        }
    }
    let tensors = c.params.tensors();
    e.usize(tensors.len());
    for t in &tensors {
        e.str(&t.name);
        e.f64s(t.values);
    }
    match &c.optimizer {
        None => e.u8(0),
        Some(adam) => {
            e.u8(1);
            let AdamConfig {
                learning_rate,
                beta1,
                beta2,
                eps,
            } = adam.config;
            for v in [learning_rate, beta1, beta2, eps] {
                e.f64(v);
            }
            let (step, first, second) = adam.state();
            e.u64(step);
            e.usize(first.len());
            for (m, v) in first.iter().zip(second) {
                e.f64s(m);
                e.f64s(v);
            }
        }
    }
    e.finish()
}

pub fn decode_checkpoint(path: &Path, bytes: &[u8]) -> Result<Checkpoint> {
    let mut d = Decoder::open(path, bytes, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
    let epochs = d.usize()?;
    let batch_size = d.usize()?;
    let learning_rate = d.f64()?;
    let hidden = d.usize()?;
    let k = d.usize()?;
    let seed = d.u64()?;
    let variant: Variant = d.str()?.parse()?;
    let proportion = Proportion([d.u32()?, d.u32()?, d.u32()?]);
    let log_every = d.usize()?;
    let weights = LossWeights {
        recon: d.f64()?,
        int: d.f64()?,
        ext: d.f64()?,
    };
    let config = TrainConfig {
        epochs,
        batch_size,
        learning_rate,
        hidden,
        k,
        seed,
        variant: VariantConfig::new(variant, proportion)?,
        log_every,
        weights,
    };
    let dataset_checksum = d.str()?;

    let layout = BlockLayout::new(d.usize()?, d.usize()?, d.usize()?)?;
    if config.layout()? != layout {
        return Err(d.error(format!(
            "stored layout {layout} disagrees with its configuration ({})",
            config.layout()?
        )));
    }
    let shape = ModelShape {
        user_dim: d.usize()?,
        item_dim: d.usize()?,
        hidden: d.usize()?,
        num_categories: d.usize()?,
    };
    let n = d.count(40)?;
    let mut trace = LossTrace::default();
    for _ in 0..n {
        trace.epochs.push(EpochLoss {
            epoch: d.usize()?,
            recon: d.f64()?,
            int: d.f64()?,
            ext: d.f64()?,
            total: d.f64()?,
        });
    }

    let mut params = SdrlParams::zeros(layout, shape)?;
    let n = d.count(16)?;
    {
        let mut slots = params.tensors_mut();
        if n != slots.len() {
            return Err(d.error(format!("{n} tensors stored, the model has {}", slots.len())));
        }
        for slot in slots.iter_mut() {
            let name = d.str()?;
            let values = d.f64s()?;
            if name != slot.name || values.len() != slot.values.len() {
                return Err(d.error(format!(
                    "tensor `{name}` ({} values) does not match `{}` ({} values)",
                    values.len(),
                    slot.name,
                    slot.values.len()
                )));
            }
            slot.values.copy_from_slice(&values);
        }
    }
    let optimizer = match d.u8()? {
        0 => None,
        1 => {
            let config = AdamConfig {
                learning_rate: d.f64()?,
                beta1: d.f64()?,
                beta2: d.f64()?,
                eps: d.f64()?,
            };
            let step = d.u64()?;
            let n = d.count(16)?;
            let mut first = Vec::with_capacity(n);
            let mut second = Vec::with_capacity(n);
            for _ in 0..n {
                first.push(d.f64s()?);
                second.push(d.f64s()?);
            }
            Some(Adam::from_state(config, step, first, second)?)
        }
        f => return Err(d.error(format!("optimizer flag {f} is not 0 or 1"))),
    };
    d.finish()?;
    Ok(Checkpoint {
        config,
        dataset_checksum,
        params,
        trace,
        optimizer,
    })
}

pub fn save_checkpoint(c: &Checkpoint, path: &Path) -> Result<()> {
    write_atomic(path, &encode_checkpoint(c))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(path, &bytes)
}
