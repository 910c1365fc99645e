use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::Rng;

use super::layout::{Block, BlockLayout};
use crate::error::{Error, Result};
use crate::nn::{Activation, LinearLayer, ParamSet, Tensor, TensorMut};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    User,
    Item,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::User => "user",
            Side::Item => "item",
        }
    }
}

/// Input and width sizes needed to build a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelShape {
    /// User feature width (number of items).
    pub user_dim: usize,
    /// Item feature width (number of users).
    pub item_dim: usize,
    pub hidden: usize,
    pub num_categories: usize,
}

/// Sigmoid layer followed by a second sigmoid layer.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayer {
    pub hidden: LinearLayer,
    pub output: LinearLayer,
}

impl TwoLayer {
    fn init<R: Rng + ?Sized>(input: usize, hidden: usize, output: usize, rng: &mut R) -> Self {
        Self {
            hidden: LinearLayer::glorot(input, hidden, Activation::Sigmoid, rng),
            output: LinearLayer::glorot(hidden, output, Activation::Sigmoid, rng),
        }
    }

    fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            hidden: LinearLayer::zeros(input, hidden, Activation::Sigmoid),
            output: LinearLayer::zeros(hidden, output, Activation::Sigmoid),
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            hidden: self.hidden.zeros_like(),
            output: self.output.zeros_like(),
        }
    }
}

/// All weights of one node side.
#[derive(Debug, Clone, PartialEq)]
pub struct SideParams {
    /// Indexed by [`Block::index`]; `None` for inactive blocks.
    pub encoders: [Option<TwoLayer>; 3],
    /// `k → hidden → input`, read as logits by the loss.
    pub decoder: TwoLayer,
    /// `dim_internal → categories`, present iff the internal block is active.
    pub category_head: Option<LinearLayer>,
}

impl SideParams {
    pub fn encoder(&self, block: Block) -> Option<&TwoLayer> {
        self.encoders[block.index()].as_ref()
    }

    pub fn input_dim(&self) -> usize {
        self.decoder.output.output_dim()
    }

    fn zeros_like(&self) -> Self {
        Self {
            encoders: self.encoders.each_ref().map(|e| e.as_ref().map(TwoLayer::zeros_like)),
            decoder: self.decoder.zeros_like(),
            category_head: self.category_head.as_ref().map(LinearLayer::zeros_like),
        }
    }

    fn layers(&self) -> Vec<(&'static str, &LinearLayer)> {
        let mut out = Vec::new();
        for (b, name) in [(0, "enc_int"), (1, "enc_ext"), (2, "enc_oth")] {
            if let Some(e) = &self.encoders[b] {
                out.push((name, &e.hidden));
                out.push((name, &e.output));
            }
        }
        out.push(("dec", &self.decoder.hidden));
        out.push(("dec", &self.decoder.output));
        if let Some(h) = &self.category_head {
            out.push(("cat_head", h));
        }
        out
    }

    fn layers_mut(&mut self) -> Vec<(&'static str, &mut LinearLayer)> {
        let mut out = Vec::new();
        for (e, name) in self.encoders.iter_mut().zip(["enc_int", "enc_ext", "enc_oth"]) {
            if let Some(e) = e {
                out.push((name, &mut e.hidden));
                out.push((name, &mut e.output));
            }
        }
        out.push(("dec", &mut self.decoder.hidden));
        out.push(("dec", &mut self.decoder.output));
        if let Some(h) = &mut self.category_head {
            out.push(("cat_head", h));
        }
        out
    }
}

/// Trainable parameters of both node sides.
#[derive(Debug, Clone, PartialEq)]
pub struct SdrlParams {
    pub layout: BlockLayout,
    pub user: SideParams,
    pub item: SideParams,
}

impl SdrlParams {
    fn build(
        layout: BlockLayout,
        shape: ModelShape,
        mut make: impl FnMut(usize, usize, usize) -> TwoLayer,
        mut head: impl FnMut(usize, usize) -> LinearLayer,
    ) -> Result<Self> {
        if shape.hidden == 0 || shape.user_dim == 0 || shape.item_dim == 0 {
            return Err(Error::Config(format!("degenerate model shape {shape:?}")));
        }
        if layout.is_active(Block::Internal) && shape.num_categories == 0 {
            return Err(Error::Config(
                "internal block needs at least one category".to_string(),
            ));
        }
        let mut side = |input: usize| SideParams {
            encoders: Block::ALL.map(|b| {
                layout
                    .is_active(b)
                    .then(|| make(input, shape.hidden, layout.dim(b)))
            }),
            decoder: make(layout.k(), shape.hidden, input),
            category_head: layout
                .is_active(Block::Internal)
                .then(|| head(layout.dim(Block::Internal), shape.num_categories)),
        };
        let user = side(shape.user_dim);
        let item = side(shape.item_dim);
        Ok(Self { layout, user, item })
    }

    /// Glorot-uniform weights and zero biases, drawn in canonical order.
    pub fn init<R: Rng + ?Sized>(layout: BlockLayout, shape: ModelShape, rng: &mut R) -> Result<Self> {
        let rng = core::cell::RefCell::new(rng);
        Self::build(
            layout,
            shape,
            |i, h, o| TwoLayer::init(i, h, o, &mut **rng.borrow_mut()),
            |i, o| LinearLayer::glorot(i, o, Activation::Sigmoid, &mut **rng.borrow_mut()),
        )
    }

    /// Every weight and bias zero.
    pub fn zeros(layout: BlockLayout, shape: ModelShape) -> Result<Self> {
        Self::build(layout, shape, TwoLayer::zeros, |i, o| {
            LinearLayer::zeros(i, o, Activation::Sigmoid)
        })
    }

    pub fn side(&self, side: Side) -> &SideParams {
        match side {
            Side::User => &self.user,
            Side::Item => &self.item,
        }
    }

    pub fn side_mut(&mut self, side: Side) -> &mut SideParams {
        match side {
            Side::User => &mut self.user,
            Side::Item => &mut self.item,
        }
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            user_dim: self.user.input_dim(),
            item_dim: self.item.input_dim(),
            hidden: self.user.decoder.hidden.output_dim(),
            num_categories: self.user.category_head.as_ref().map_or(0, |h| h.output_dim()),
        }
    }

    /// Every layer with its canonical name, e.g. `user.enc_int.0`.
    pub fn named_layers(&self) -> Vec<(alloc::string::String, &LinearLayer)> {
        let mut out = Vec::new();
        for side in [Side::User, Side::Item] {
            let mut last = "";
            let mut depth = 0;
            for (name, layer) in self.side(side).layers() {
                depth = if name == last { depth + 1 } else { 0 };
                last = name;
                out.push((format!("{}.{}.{}", side.name(), name, depth), layer));
            }
        }
        out
    }

    pub fn named_layers_mut(&mut self) -> Vec<(alloc::string::String, &mut LinearLayer)> {
        let mut out = Vec::new();
        let (user, item) = (&mut self.user, &mut self.item);
        for (side, params) in [(Side::User, user), (Side::Item, item)] {
            let mut last = "";
            let mut depth = 0;
            for (name, layer) in params.layers_mut() {
                depth = if name == last { depth + 1 } else { 0 };
                last = name;
                out.push((format!("{}.{}.{}", side.name(), name, depth), layer));
            }
        }
        out
    }
}

impl ParamSet for SdrlParams {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = Vec::new();
        for (name, layer) in self.named_layers() {
            layer.push_tensors(&name, &mut out);
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        for (name, layer) in self.named_layers_mut() {
            layer.push_tensors_mut(&name, &mut out);
        }
        out
    }

    fn zeros_like(&self) -> Self {
        Self {
            layout: self.layout,
            user: self.user.zeros_like(),
            item: self.item.zeros_like(),
        }
    }
}
