//! The combined training objective and its exact gradient.
//!
//! Every term is a binary cross-entropy evaluated in logit space, so the
//! gradient stays informative when a sigmoid saturates. Per-term means are
//! taken over that term's own batch matrix.

use alloc::format;
use alloc::vec::Vec;

use super::forward::{category_logits, decode_logits, encode_cached, EncoderCache};
use super::layout::{Block, BlockLayout};
use super::params::{SdrlParams, SideParams};
use crate::data::{CategoryMatrix, NodeFeatures};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::nn::loss::bce_with_logits_sum;
use crate::nn::{sigmoid, ParamSet};

/// Multipliers of the three loss groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub recon: f64,
    pub int: f64,
    pub ext: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            recon: 1.0,
            int: 1.0,
            ext: 1.0,
        }
    }
}

/// Loss values of one batch. Group values are unweighted; `total` is the
/// weighted sum, which with unit weights is exactly `recon + int + ext`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossComponents {
    pub recon_user: f64,
    pub recon_item: f64,
    pub recon_rating: f64,
    pub int_user: f64,
    pub int_item: f64,
    pub recon: f64,
    pub int: f64,
    pub ext: f64,
    pub total: f64,
}

/// User and item rows taking part in one optimisation step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub users: Vec<usize>,
    pub items: Vec<usize>,
}

/// Everything the loss reads besides the parameters.
#[derive(Debug, Clone, Copy)]
pub struct ModelInputs<'a> {
    pub features: &'a NodeFeatures,
    pub categories: &'a CategoryMatrix,
}

impl<'a> ModelInputs<'a> {
    pub fn new(features: &'a NodeFeatures, categories: &'a CategoryMatrix) -> Self {
        Self { features, categories }
    }

    pub fn num_users(&self) -> usize {
        self.features.users.rows()
    }

    pub fn num_items(&self) -> usize {
        self.features.items.rows()
    }
}

struct SideForward {
    x: DenseMatrix,
    z: DenseMatrix,
    enc: EncoderCache,
    dec_hidden: DenseMatrix,
    dec_logits: DenseMatrix,
    cat_target: Option<DenseMatrix>,
    cat_logits: Option<DenseMatrix>,
}

fn side_forward(
    sp: &SideParams,
    layout: &BlockLayout,
    x: DenseMatrix,
    cat_target: Option<DenseMatrix>,
) -> Result<SideForward> {
    let (z, enc) = encode_cached(sp, layout, &x)?;
    let (dec_hidden, dec_logits) = decode_logits(sp, &z)?;
    let cat_logits = match cat_target {
        Some(_) => Some(category_logits(sp, layout, &z)?),
        None => None,
    };
    Ok(SideForward {
        x,
        z,
        enc,
        dec_hidden,
        dec_logits,
        cat_target,
        cat_logits,
    })
}

fn mean_bce(logits: &DenseMatrix, target: &DenseMatrix) -> f64 {
    bce_with_logits_sum(logits.as_slice(), target.as_slice()) / logits.as_slice().len() as f64
}

/// `scale · (sigmoid(logits) - target)`, the logit-space BCE gradient.
fn bce_delta(logits: &DenseMatrix, target: &DenseMatrix, scale: f64) -> DenseMatrix {
    let mut d = logits.map(sigmoid);
    for (v, &y) in d.as_mut_slice().iter_mut().zip(target.as_slice()) {
        *v = (*v - y) * scale;
    }
    d
}

struct Forward {
    user: SideForward,
    item: SideForward,
    rating_target: DenseMatrix,
    rating_logits: DenseMatrix,
    ext_logits: Option<DenseMatrix>,
    components: LossComponents,
}

fn validate(params: &SdrlParams, inputs: &ModelInputs<'_>, batch: &Batch) -> Result<()> {
    let (nu, ni) = (inputs.num_users(), inputs.num_items());
    if inputs.features.users.cols() != ni || inputs.features.items.cols() != nu {
        return Err(Error::shape(
            "node features",
            format!("[{nu} x {ni}] and its transpose"),
            format!("{:?} / {:?}", inputs.features.users.shape(), inputs.features.items.shape()),
        ));
    }
    let shape = params.shape();
    if shape.user_dim != ni || shape.item_dim != nu {
        return Err(Error::shape(
            "model input widths",
            format!("user {ni}, item {nu}"),
            format!("user {}, item {}", shape.user_dim, shape.item_dim),
        ));
    }
    if batch.users.is_empty() || batch.items.is_empty() {
        return Err(Error::Domain("batch needs at least one user and one item".into()));
    }
    if let Some(&u) = batch.users.iter().find(|&&u| u >= nu) {
        return Err(Error::Domain(format!("batch user {u} out of range ({nu} users)")));
    }
    if let Some(&i) = batch.items.iter().find(|&&i| i >= ni) {
        return Err(Error::Domain(format!("batch item {i} out of range ({ni} items)")));
    }
    let layout = &params.layout;
    if layout.is_active(Block::Internal) {
        let q = inputs.categories.num_categories();
        if params.user.category_head.is_none() || params.item.category_head.is_none() {
            return Err(Error::Config("internal block active but a category head is missing".into()));
        }
        if shape.num_categories != q {
            return Err(Error::shape("category head width", q, shape.num_categories));
        }
        if inputs.categories.users.shape() != (nu, q) || inputs.categories.items.shape() != (ni, q) {
            return Err(Error::shape(
                "category matrices",
                format!("[{nu} x {q}] and [{ni} x {q}]"),
                format!("{:?} and {:?}", inputs.categories.users.shape(), inputs.categories.items.shape()),
            ));
        }
    } else if params.user.category_head.is_some() || params.item.category_head.is_some() {
        return Err(Error::Config("category head present but the internal block is disabled".into()));
    }
    for b in Block::ALL {
        for sp in [&params.user, &params.item] {
            if sp.encoder(b).is_some() != layout.is_active(b) {
                return Err(Error::Config(format!(
                    "encoder set does not match layout {layout} for block {}",
                    b.short_name()
                )));
            }
        }
    }
    Ok(())
}

fn forward(params: &SdrlParams, inputs: &ModelInputs<'_>, batch: &Batch, weights: LossWeights) -> Result<Forward> {
    validate(params, inputs, batch)?;
    let layout = &params.layout;
    let internal = layout.is_active(Block::Internal);
    let cats = inputs.categories;

    let user = side_forward(
        &params.user,
        layout,
        inputs.features.users.select_rows(&batch.users),
        internal.then(|| cats.users.select_rows(&batch.users)),
    )?;
    let item = side_forward(
        &params.item,
        layout,
        inputs.features.items.select_rows(&batch.items),
        internal.then(|| cats.items.select_rows(&batch.items)),
    )?;

    let mut rating_target = DenseMatrix::zeros(batch.users.len(), batch.items.len());
    for (r, row) in user.x.iter_rows().enumerate() {
        for (c, &i) in batch.items.iter().enumerate() {
            rating_target.set(r, c, row[i]);
        }
    }
    let rating_logits = user.z.matmul_nt(&item.z)?;
    let ext_logits = if layout.is_active(Block::External) {
        let range = layout.range(Block::External);
        Some(user.z.columns(range.clone()).matmul_nt(&item.z.columns(range))?)
    } else {
        None
    };

    let mut c = LossComponents {
        recon_user: mean_bce(&user.dec_logits, &user.x),
        recon_item: mean_bce(&item.dec_logits, &item.x),
        recon_rating: mean_bce(&rating_logits, &rating_target),
        ..LossComponents::default()
    };
    c.recon = c.recon_user + c.recon_item + c.recon_rating;
    if internal {
        c.int_user = mean_bce(user.cat_logits.as_ref().unwrap(), user.cat_target.as_ref().unwrap());
        c.int_item = mean_bce(item.cat_logits.as_ref().unwrap(), item.cat_target.as_ref().unwrap());
        c.int = c.int_user + c.int_item;
    }
    if let Some(ext) = &ext_logits {
        c.ext = mean_bce(ext, &rating_target);
    }
    c.total = weights.recon * c.recon + weights.int * c.int + weights.ext * c.ext;
    Ok(Forward {
        user,
        item,
        rating_target,
        rating_logits,
        ext_logits,
        components: c,
    })
}

/// Loss values for one batch.
pub fn loss_components(
    params: &SdrlParams,
    inputs: &ModelInputs<'_>,
    batch: &Batch,
    weights: LossWeights,
) -> Result<LossComponents> {
    forward(params, inputs, batch, weights).map(|f| f.components)
}

/// Propagates `dz` (plus the reconstruction and category terms) back through
/// one side, accumulating into `acc`.
fn side_backward(
    sp: &SideParams,
    layout: &BlockLayout,
    f: &SideForward,
    mut dz: DenseMatrix,
    weights: LossWeights,
    acc: &mut SideParams,
) -> Result<()> {
    let n = f.x.as_slice().len() as f64;
    let d_logits = bce_delta(&f.dec_logits, &f.x, weights.recon / n);
    let dh = sp
        .decoder
        .output
        .backward_delta(&f.dec_hidden, &d_logits, &mut acc.decoder.output, true)?
        .expect("input gradient requested");
    let dz_dec = sp
        .decoder
        .hidden
        .backward(&f.z, &f.dec_hidden, &dh, &mut acc.decoder.hidden, true)?
        .expect("input gradient requested");
    dz.add_assign(&dz_dec);

    if let (Some(logits), Some(target)) = (&f.cat_logits, &f.cat_target) {
        let head = sp.category_head.as_ref().expect("validated");
        let range = layout.range(Block::Internal);
        let n = target.as_slice().len() as f64;
        let d = bce_delta(logits, target, weights.int / n);
        let dz_int = head
            .backward_delta(&f.z.columns(range.clone()), &d, acc.category_head.as_mut().expect("validated"), true)?
            .expect("input gradient requested");
        dz.add_columns(range.start, &dz_int);
    }

    for block in layout.active_blocks() {
        let b = block.index();
        let enc = sp.encoders[b].as_ref().expect("validated");
        let enc_acc = acc.encoders[b].as_mut().expect("validated");
        let h = f.enc.hidden[b].as_ref().expect("cached");
        let o = f.enc.output[b].as_ref().expect("cached");
        let d_out = dz.columns(layout.range(block));
        let dh = enc
            .output
            .backward(h, o, &d_out, &mut enc_acc.output, true)?
            .expect("input gradient requested");
        enc.hidden.backward(&f.x, h, &dh, &mut enc_acc.hidden, false)?;
    }
    Ok(())
}

/// Loss values and the gradient of `total` with respect to every parameter.
pub fn loss_and_gradients(
    params: &SdrlParams,
    inputs: &ModelInputs<'_>,
    batch: &Batch,
    weights: LossWeights,
) -> Result<(LossComponents, SdrlParams)> {
    let f = forward(params, inputs, batch, weights)?;
    let layout = &params.layout;
    let k = layout.k();
    let (bu, bi) = (batch.users.len(), batch.items.len());
    let pairs = (bu * bi) as f64;

    let ds = bce_delta(&f.rating_logits, &f.rating_target, weights.recon / pairs);
    let mut dzu = ds.matmul(&f.item.z)?;
    let mut dzi = ds.matmul_tn(&f.user.z)?;
    debug_assert_eq!(dzu.shape(), (bu, k));
    debug_assert_eq!(dzi.shape(), (bi, k));

    if let Some(ext) = &f.ext_logits {
        let range = layout.range(Block::External);
        let d = bce_delta(ext, &f.rating_target, weights.ext / pairs);
        dzu.add_columns(range.start, &d.matmul(&f.item.z.columns(range.clone()))?);
        dzi.add_columns(range.start, &d.matmul_tn(&f.user.z.columns(range))?);
    }

    let mut tape = params.zeros_like();
    side_backward(&params.user, layout, &f.user, dzu, weights, &mut tape.user)?;
    side_backward(&params.item, layout, &f.item, dzi, weights, &mut tape.item)?;
    Ok((f.components, tape))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::ModelShape;
    use crate::nn::grad_check;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy() -> (NodeFeatures, CategoryMatrix) {
        let users = DenseMatrix::from_rows(&[
            [1.0, 0.0, 0.6, 0.0],
            [0.0, 0.8, 0.0, 0.4],
            [0.2, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let features = NodeFeatures {
            items: users.transpose(),
            users,
        };
        let items = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let cu = DenseMatrix::from_rows(&[[1.0, 0.375], [0.0, 1.0], [1.0, 5.0 / 6.0]]).unwrap();
        let categories = CategoryMatrix {
            vocabulary: vec!["a".into(), "b".into()],
            items,
            users: cu,
        };
        (features, categories)
    }

    fn shape() -> ModelShape {
        ModelShape {
            user_dim: 4,
            item_dim: 3,
            hidden: 3,
            num_categories: 2,
        }
    }

    fn full_batch() -> Batch {
        Batch {
            users: vec![0, 1, 2],
            items: vec![0, 1, 2, 3],
        }
    }

    #[test]
    fn frozen_half_predictions_give_ln2_on_binary_targets() {
        let users = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let features = NodeFeatures {
            items: users.transpose(),
            users,
        };
        let categories = CategoryMatrix {
            vocabulary: vec!["a".into()],
            items: DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap(),
            users: DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap(),
        };
        // Zero parameters make every embedding 0.5, so ratings see dot = k/4.
        // Only the reconstruction and category heads sit exactly at 0.5.
        let layout = BlockLayout::new(1, 1, 1).unwrap();
        let shape = ModelShape {
            user_dim: 2,
            item_dim: 2,
            hidden: 2,
            num_categories: 1,
        };
        let p = SdrlParams::zeros(layout, shape).unwrap();
        let batch = Batch {
            users: vec![0, 1],
            items: vec![0, 1],
        };
        let c = loss_components(&p, &ModelInputs::new(&features, &categories), &batch, LossWeights::default()).unwrap();
        let ln2 = core::f64::consts::LN_2;
        for v in [c.recon_user, c.recon_item, c.int_user, c.int_item] {
            assert!((v - ln2).abs() < 1e-15);
        }
    }

    #[test]
    fn variant_terms_are_omitted() {
        let (features, categories) = toy();
        let inputs = ModelInputs::new(&features, &categories);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let eo = BlockLayout::new(0, 2, 2).unwrap();
        let s = ModelShape { num_categories: 0, ..shape() };
        let p = SdrlParams::init(eo, s, &mut rng).unwrap();
        let c = loss_components(&p, &inputs, &full_batch(), LossWeights::default()).unwrap();
        assert_eq!(c.int, 0.0);
        assert_eq!(c.total, c.recon + c.ext);

        let whole = BlockLayout::new(0, 0, 4).unwrap();
        let p = SdrlParams::init(whole, s, &mut rng).unwrap();
        let c = loss_components(&p, &inputs, &full_batch(), LossWeights::default()).unwrap();
        assert_eq!((c.int, c.ext), (0.0, 0.0));
        assert_eq!(c.total, c.recon);

        let full = BlockLayout::new(2, 1, 1).unwrap();
        let p = SdrlParams::init(full, shape(), &mut rng).unwrap();
        let c = loss_components(&p, &inputs, &full_batch(), LossWeights::default()).unwrap();
        assert_eq!(c.total, c.recon + c.int + c.ext);
        assert!(c.int > 0.0 && c.ext > 0.0);
    }

    #[test]
    fn full_loss_gradient_matches_finite_differences() {
        let (features, categories) = toy();
        let inputs = ModelInputs::new(&features, &categories);
        let layout = BlockLayout::new(2, 1, 1).unwrap();
        let p = SdrlParams::init(layout, shape(), &mut ChaCha20Rng::seed_from_u64(11)).unwrap();
        let batch = Batch {
            users: vec![2, 0],
            items: vec![1, 3, 0],
        };
        let report = grad_check(
            |q: &SdrlParams| {
                let (c, g) = loss_and_gradients(q, &inputs, &batch, LossWeights::default())?;
                Ok((c.total, g))
            },
            &p,
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.components_checked, p.num_scalars());
    }

    #[test]
    fn weights_scale_gradients() {
        let (features, categories) = toy();
        let inputs = ModelInputs::new(&features, &categories);
        let layout = BlockLayout::new(2, 1, 1).unwrap();
        let p = SdrlParams::init(layout, shape(), &mut ChaCha20Rng::seed_from_u64(5)).unwrap();
        let zero = LossWeights {
            recon: 0.0,
            int: 0.0,
            ext: 0.0,
        };
        let (c, g) = loss_and_gradients(&p, &inputs, &full_batch(), zero).unwrap();
        assert_eq!(c.total, 0.0);
        assert!(g.tensors().iter().all(|t| t.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn bad_batches_are_rejected() {
        let (features, categories) = toy();
        let inputs = ModelInputs::new(&features, &categories);
        let p = SdrlParams::zeros(BlockLayout::new(2, 1, 1).unwrap(), shape()).unwrap();
        let w = LossWeights::default();
        let empty = Batch {
            users: vec![],
            items: vec![0],
        };
        assert!(matches!(loss_components(&p, &inputs, &empty, w), Err(Error::Domain(_))));
        let oob = Batch {
            users: vec![3],
            items: vec![0],
        };
        assert!(matches!(loss_components(&p, &inputs, &oob, w), Err(Error::Domain(_))));
        let wrong = SdrlParams::zeros(BlockLayout::new(2, 1, 1).unwrap(), ModelShape { user_dim: 5, ..shape() }).unwrap();
        assert!(matches!(loss_components(&wrong, &inputs, &full_batch(), w), Err(Error::Shape { .. })));
    }
}
