use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use crate::error::{Error, Result};

/// The three embedding blocks, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Block {
    /// Supervised by category information.
    Internal,
    /// Supervised by user-item ratings.
    External,
    /// Unsupervised residual.
    Other,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::Internal, Block::External, Block::Other];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Block::Internal => "int",
            Block::External => "ext",
            Block::Other => "oth",
        }
    }
}

/// Dimensions of each block inside a `k`-dimensional embedding, laid out
/// internal ‖ external ‖ other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockLayout {
    dims: [usize; 3],
}

impl BlockLayout {
    pub fn new(internal: usize, external: usize, other: usize) -> Result<Self> {
        if internal + external + other == 0 {
            return Err(Error::Config("embedding dimension k must be positive".to_string()));
        }
        Ok(Self {
            dims: [internal, external, other],
        })
    }

    /// Splits `k` by the given ratio. Rounding uses largest remainders, with
    /// ties going to the earlier block.
    pub fn from_proportion(k: usize, proportion: Proportion) -> Result<Self> {
        let parts = proportion.0;
        let total: u64 = parts.iter().map(|&p| p as u64).sum();
        if total == 0 {
            return Err(Error::Config(format!("proportion {proportion} has no positive share")));
        }
        if k == 0 {
            return Err(Error::Config("embedding dimension k must be positive".to_string()));
        }
        let mut dims = [0usize; 3];
        let mut remainders = [(0u64, 0usize); 3];
        let mut assigned = 0usize;
        for (b, &p) in parts.iter().enumerate() {
            let num = k as u64 * p as u64;
            dims[b] = (num / total) as usize;
            remainders[b] = (num % total, b);
            assigned += dims[b];
        }
        remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(rem, b) in remainders.iter().take(k - assigned) {
            debug_assert!(rem > 0 || parts[b] > 0);
            dims[b] += 1;
        }
        if proportion.0.iter().zip(&dims).any(|(&p, &d)| p > 0 && d == 0) {
            return Err(Error::Config(format!(
                "k = {k} is too small to give every block of {proportion} a dimension"
            )));
        }
        Ok(Self { dims })
    }

    #[inline]
    pub fn dim(&self, block: Block) -> usize {
        self.dims[block.index()]
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.dims.iter().sum()
    }

    #[inline]
    pub fn is_active(&self, block: Block) -> bool {
        self.dim(block) > 0
    }

    pub fn offset(&self, block: Block) -> usize {
        self.dims[..block.index()].iter().sum()
    }

    pub fn range(&self, block: Block) -> Range<usize> {
        let start = self.offset(block);
        start..start + self.dim(block)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn active_blocks(&self) -> impl Iterator<Item = Block> + '_ {
        Block::ALL.into_iter().filter(|&b| self.is_active(b))
    }

    /// Inclusive block ranges, e.g. `int:0-63 ext:64-95 oth:96-127`.
    pub fn annotation(&self) -> String {
        let parts: Vec<String> = self
            .active_blocks()
            .map(|b| {
                let r = self.range(b);
                format!("{}:{}-{}", b.short_name(), r.start, r.end - 1)
            })
            .collect();
        parts.join(" ")
    }
}

impl fmt::Display for BlockLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.dims[0], self.dims[1], self.dims[2])
    }
}

/// Ratio of internal : external : other dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Proportion(pub [u32; 3]);

impl Proportion {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&p| p == 0)
    }
}

impl fmt::Display for Proportion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for Proportion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("proportion `{s}` must look like a:b:c")));
        }
        let mut out = [0u32; 3];
        for (o, p) in out.iter_mut().zip(parts) {
            *o = p
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("proportion `{s}`: `{p}` is not a count")))?;
        }
        Ok(Proportion(out))
    }
}

/// Which blocks a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// All three blocks.
    Full,
    IntExt,
    IntOth,
    ExtOth,
    /// One undivided embedding trained on reconstruction only.
    Whole,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::IntExt,
        Variant::IntOth,
        Variant::ExtOth,
        Variant::Whole,
    ];

    pub fn active(self) -> [bool; 3] {
        match self {
            Variant::Full => [true, true, true],
            Variant::IntExt => [true, true, false],
            Variant::IntOth => [true, false, true],
            Variant::ExtOth => [false, true, true],
            Variant::Whole => [false, false, true],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "sdrl",
            Variant::IntExt => "int+ext",
            Variant::IntOth => "int+oth",
            Variant::ExtOth => "ext+oth",
            Variant::Whole => "whole",
        }
    }

    /// Equal shares across the active blocks.
    pub fn equal_proportion(self) -> Proportion {
        Proportion(self.active().map(u32::from))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sdrl" | "full" | "int+ext+oth" => Ok(Variant::Full),
            "int+ext" => Ok(Variant::IntExt),
            "int+oth" => Ok(Variant::IntOth),
            "ext+oth" => Ok(Variant::ExtOth),
            "whole" => Ok(Variant::Whole),
            other => Err(Error::Config(format!(
                "unknown variant `{other}` (expected sdrl, int+ext, int+oth, ext+oth or whole)"
            ))),
        }
    }
}

/// A variant together with the dimension ratio of its active blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VariantConfig {
    pub variant: Variant,
    proportion: Proportion,
}

impl VariantConfig {
    /// Shares of blocks the variant does not use are zeroed.
    pub fn new(variant: Variant, proportion: Proportion) -> Result<Self> {
        let active = variant.active();
        let mut masked = proportion.0;
        for (p, a) in masked.iter_mut().zip(active) {
            if !a {
                *p = 0;
            }
        }
        let masked = Proportion(masked);
        if masked.is_zero() {
            return Err(Error::Config(format!(
                "proportion {proportion} leaves variant {variant} without any dimension"
            )));
        }
        Ok(Self {
            variant,
            proportion: masked,
        })
    }

    /// Partial variants split equally; the full model uses 2:1:1.
    pub fn default_for(variant: Variant) -> Self {
        let proportion = match variant {
            Variant::Full => Proportion([2, 1, 1]),
            v => v.equal_proportion(),
        };
        Self::new(variant, proportion).expect("default proportions are valid")
    }

    pub fn proportion(&self) -> Proportion {
        self.proportion
    }

    pub fn layout(&self, k: usize) -> Result<BlockLayout> {
        BlockLayout::from_proportion(k, self.proportion)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn default_layout_is_64_32_32() {
        let layout = VariantConfig::default_for(Variant::Full).layout(128).unwrap();
        assert_eq!(layout.dims(), [64, 32, 32]);
        assert_eq!(layout.range(Block::External), 64..96);
        assert_eq!(layout.annotation(), "int:0-63 ext:64-95 oth:96-127");
    }

    #[test]
    fn two_block_variants_split_equally() {
        for v in [Variant::IntExt, Variant::IntOth, Variant::ExtOth] {
            let layout = VariantConfig::default_for(v).layout(128).unwrap();
            let active: Vec<usize> = layout.active_blocks().map(|b| layout.dim(b)).collect();
            assert_eq!(active, vec![64, 64]);
        }
        let whole = VariantConfig::default_for(Variant::Whole).layout(128).unwrap();
        assert_eq!(whole.dims(), [0, 0, 128]);
        assert_eq!(whole.annotation(), "oth:0-127");
    }

    #[test]
    fn proportions_parse_and_mask() {
        let p: Proportion = "1:2:1".parse().unwrap();
        assert_eq!(BlockLayout::from_proportion(128, p).unwrap().dims(), [32, 64, 32]);
        let cfg = VariantConfig::new(Variant::IntExt, "2:1:1".parse().unwrap()).unwrap();
        assert_eq!(cfg.proportion(), Proportion([2, 1, 0]));
        assert!(VariantConfig::new(Variant::Full, "0:0:0".parse().unwrap()).is_err());
        assert!(VariantConfig::new(Variant::Whole, "1:1:0".parse().unwrap()).is_err());
        assert!("1:2".parse::<Proportion>().is_err());
        assert!("a:1:1".parse::<Proportion>().is_err());
    }

    #[test]
    fn largest_remainder_rounding() {
        let layout = BlockLayout::from_proportion(10, Proportion([1, 1, 1])).unwrap();
        assert_eq!(layout.dims(), [4, 3, 3]);
        assert_eq!(layout.k(), 10);
        assert!(BlockLayout::from_proportion(2, Proportion([1, 1, 1])).is_err());
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("int".parse::<Variant>().is_err());
    }
}
