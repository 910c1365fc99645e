//! Inference-time passes: encoding, reconstruction and the three prediction heads.

use alloc::format;
use alloc::vec::Vec;

use super::layout::{Block, BlockLayout};
use super::params::{SdrlParams, Side, SideParams};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::nn::sigmoid;

/// Intermediate activations of one side's encoders.
#[derive(Debug, Clone)]
pub(crate) struct EncoderCache {
    pub hidden: [Option<DenseMatrix>; 3],
    pub output: [Option<DenseMatrix>; 3],
}

/// Runs every active encoder head and concatenates the results at their
/// layout offsets.
pub(crate) fn encode_cached(
    side: &SideParams,
    layout: &BlockLayout,
    x: &DenseMatrix,
) -> Result<(DenseMatrix, EncoderCache)> {
    let mut z = DenseMatrix::zeros(x.rows(), layout.k());
    let mut cache = EncoderCache {
        hidden: [None, None, None],
        output: [None, None, None],
    };
    for block in layout.active_blocks() {
        let enc = side.encoder(block).ok_or_else(|| {
            Error::Config(format!(
                "layout {layout} activates {} but the model has no encoder for it",
                block.short_name()
            ))
        })?;
        let h = enc.hidden.forward(x)?;
        let o = enc.output.forward(&h)?;
        z.set_columns(layout.offset(block), &o);
        cache.hidden[block.index()] = Some(h);
        cache.output[block.index()] = Some(o);
    }
    Ok((z, cache))
}

/// Embeds a batch of node feature rows `[batch × input]` into `[batch × k]`.
pub fn encode_batch(params: &SdrlParams, side: Side, features: &DenseMatrix) -> Result<DenseMatrix> {
    let sp = params.side(side);
    if features.cols() != sp.input_dim() {
        return Err(Error::shape("encode", sp.input_dim(), features.cols()));
    }
    encode_cached(sp, &params.layout, features).map(|(z, _)| z)
}

pub fn encode(params: &SdrlParams, side: Side, features: &[f64]) -> Result<Vec<f64>> {
    encode_batch(params, side, &DenseMatrix::row_vector(features)).map(DenseMatrix::into_vec)
}

/// Decoder logits for a batch of embeddings, plus the decoder hidden layer.
pub(crate) fn decode_logits(side: &SideParams, z: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let h = side.decoder.hidden.forward(z)?;
    let logits = side.decoder.output.pre_activation(&h)?;
    Ok((h, logits))
}

/// Reconstructs node features from embeddings; outputs lie in (0, 1).
pub fn reconstruct_batch(params: &SdrlParams, side: Side, z: &DenseMatrix) -> Result<DenseMatrix> {
    if z.cols() != params.layout.k() {
        return Err(Error::shape("reconstruct", params.layout.k(), z.cols()));
    }
    let sp = params.side(side);
    let (h, _) = decode_logits(sp, z)?;
    sp.decoder.output.forward(&h)
}

pub fn reconstruct(params: &SdrlParams, side: Side, embedding: &[f64]) -> Result<Vec<f64>> {
    reconstruct_batch(params, side, &DenseMatrix::row_vector(embedding)).map(DenseMatrix::into_vec)
}

/// Matching scores `Z^U · Z^Iᵀ` before the sigmoid.
pub fn rating_logits(users: &DenseMatrix, items: &DenseMatrix) -> Result<DenseMatrix> {
    if users.cols() != items.cols() {
        return Err(Error::shape("predict_ratings", users.cols(), items.cols()));
    }
    users.matmul_nt(items)
}

/// `sigmoid(Z^U_m · Z^I_n)` for every user-item pair.
pub fn predict_ratings(users: &DenseMatrix, items: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(rating_logits(users, items)?.map(sigmoid))
}

/// Like [`predict_ratings`] but on the external slices only.
pub fn predict_ratings_external(
    users: &DenseMatrix,
    items: &DenseMatrix,
    layout: &BlockLayout,
) -> Result<DenseMatrix> {
    if !layout.is_active(Block::External) {
        return Err(Error::Config("external block is disabled in this layout".into()));
    }
    if users.cols() != layout.k() || items.cols() != layout.k() {
        return Err(Error::shape("predict_ratings_external", layout.k(), users.cols().max(items.cols())));
    }
    let range = layout.range(Block::External);
    predict_ratings(&users.columns(range.clone()), &items.columns(range))
}

/// Category head logits on the internal slice of `z`.
pub(crate) fn category_logits(side: &SideParams, layout: &BlockLayout, z: &DenseMatrix) -> Result<DenseMatrix> {
    let head = side
        .category_head
        .as_ref()
        .ok_or_else(|| Error::Config("internal block is disabled; no category head".into()))?;
    head.pre_activation(&z.columns(layout.range(Block::Internal)))
}

/// Predicted category memberships `[nodes × categories]` in (0, 1).
pub fn predict_categories(params: &SdrlParams, side: Side, z: &DenseMatrix) -> Result<DenseMatrix> {
    let layout = &params.layout;
    if !layout.is_active(Block::Internal) {
        return Err(Error::Config("internal block is disabled in this layout".into()));
    }
    if z.cols() != layout.k() {
        return Err(Error::shape("predict_categories", layout.k(), z.cols()));
    }
    let sp = params.side(side);
    let head = sp.category_head.as_ref().expect("checked by category_logits");
    let logits = category_logits(sp, layout, z)?;
    Ok(logits.map(|v| head.activation.apply(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::ModelShape;
    use alloc::vec;

    fn shape() -> ModelShape {
        ModelShape {
            user_dim: 4,
            item_dim: 3,
            hidden: 5,
            num_categories: 2,
        }
    }

    #[test]
    fn zero_model_outputs_half() {
        let layout = BlockLayout::new(2, 1, 1).unwrap();
        let p = SdrlParams::zeros(layout, shape()).unwrap();
        let z = encode(&p, Side::User, &[0.3, 0.0, 1.0, 0.2]).unwrap();
        assert_eq!(z, vec![0.5; 4]);
        let r = reconstruct(&p, Side::Item, &z).unwrap();
        assert_eq!(r, vec![0.5; 3]);
        let c = predict_categories(&p, Side::User, &DenseMatrix::row_vector(&z)).unwrap();
        assert_eq!(c.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn rating_predictions() {
        let k = 16;
        let v = vec![1.0 / libm::sqrt(k as f64); k];
        let u = DenseMatrix::row_vector(&v);
        let s = predict_ratings(&u, &u).unwrap().get(0, 0);
        assert!((s - 0.731_058_578_630_004_9).abs() < 1e-12);

        let a = DenseMatrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[0.0, 3.0]]).unwrap();
        assert_eq!(predict_ratings(&a, &b).unwrap().get(0, 0), 0.5);
        let ab = predict_ratings(&a, &DenseMatrix::from_rows(&[[0.4, 0.9]]).unwrap()).unwrap();
        let ba = predict_ratings(&DenseMatrix::from_rows(&[[0.4, 0.9]]).unwrap(), &a).unwrap();
        assert_eq!(ab, ba);
        assert!(predict_ratings(&a, &DenseMatrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn external_prediction_uses_only_external_slice() {
        let layout = BlockLayout::new(2, 1, 1).unwrap();
        let u = DenseMatrix::from_rows(&[[0.9, 0.1, 0.6, 0.3]]).unwrap();
        let i = DenseMatrix::from_rows(&[[0.2, 0.8, 0.5, 0.7]]).unwrap();
        let expect = 1.0 / (1.0 + libm::exp(-0.30));
        let got = predict_ratings_external(&u, &i, &layout).unwrap().get(0, 0);
        assert!((got - expect).abs() < 1e-15);
        assert!((got - 0.574443).abs() < 1e-6);
        let mut u2 = u.clone();
        u2.set(0, 0, -5.0);
        u2.set(0, 3, 9.0);
        assert_eq!(predict_ratings_external(&u2, &i, &layout).unwrap().get(0, 0), got);
        let no_ext = BlockLayout::new(2, 0, 2).unwrap();
        assert!(matches!(predict_ratings_external(&u, &i, &no_ext), Err(Error::Config(_))));
    }

    #[test]
    fn category_head_requires_internal_block() {
        let layout = BlockLayout::new(0, 2, 2).unwrap();
        let p = SdrlParams::zeros(layout, shape()).unwrap();
        assert!(matches!(
            predict_categories(&p, Side::Item, &DenseMatrix::zeros(1, 4)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn encode_shape_error() {
        let layout = BlockLayout::new(2, 1, 1).unwrap();
        let p = SdrlParams::zeros(layout, shape()).unwrap();
        assert!(matches!(encode(&p, Side::User, &[0.0; 3]), Err(Error::Shape { .. })));
        assert!(matches!(reconstruct(&p, Side::User, &[0.0; 3]), Err(Error::Shape { .. })));
    }
}
