//! TOML run configuration.
//!
//! Every section and key is optional; missing values take the defaults that
//! `sdrl --print-config` shows. Unknown keys are rejected so typos surface.

use std::path::Path;

use serde::{Deserialize, Serialize};

use sdrl_core::data::PrepareOptions;
use sdrl_core::eval::{check_k_list, ClassifierConfig, SweepSpec};
use sdrl_core::model::{LossWeights, Proportion, Variant, VariantConfig};
use sdrl_core::train::TrainConfig;

use crate::error::{Error, Result};
use crate::loaders::DatasetFormat;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareSection {
    /// `movielens` or `amazon`.
    pub format: String,
    pub min_count: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub rating_scale_max: f64,
    /// Category labels left out of the vocabulary; the format default when absent.
    pub excluded_categories: Option<Vec<String>>,
}

impl Default for PrepareSection {
    fn default() -> Self {
        let o = PrepareOptions::default();
        Self {
            format: DatasetFormat::MovieLens.name().to_string(),
            min_count: o.min_count,
            train_fraction: o.train_fraction,
            seed: o.seed,
            rating_scale_max: o.rating_scale_max,
            excluded_categories: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub k: usize,
    pub seed: u64,
    pub variant: String,
    /// `internal:external:other`; shares of blocks the variant drops are ignored.
    pub proportion: String,
    pub log_every: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            hidden: t.hidden,
            k: t.k,
            seed: t.seed,
            variant: t.variant.variant.name().to_string(),
            proportion: t.variant.proportion().to_string(),
            log_every: t.log_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    pub recon: f64,
    pub int: f64,
    pub ext: f64,
}

impl Default for LossSection {
    fn default() -> Self {
        let w = LossWeights::default();
        Self {
            recon: w.recon,
            int: w.int,
            ext: w.ext,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub train_fraction: f64,
    pub threshold: f64,
    pub standardize: bool,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let c = ClassifierConfig::default();
        Self {
            hidden: c.hidden,
            epochs: c.epochs,
            batch_size: c.batch_size,
            learning_rate: c.learning_rate,
            train_fraction: c.train_fraction,
            threshold: c.threshold,
            standardize: c.standardize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub k_list: Vec<usize>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { k_list: vec![5, 10, 15] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub variants: Vec<String>,
    pub proportions: Vec<String>,
    pub seeds: Vec<u64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.iter().map(|v| v.name().to_string()).collect(),
            proportions: vec!["2:1:1".into()],
            seeds: (0..5).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub prepare: PrepareSection,
    pub train: TrainSection,
    pub loss: LossSection,
    pub classifier: ClassifierSection,
    pub eval: EvalSection,
    pub sweep: SweepSection,
}

/// Parses a comma-separated K list such as `5,10,15`.
pub fn parse_k_list(s: &str) -> Result<Vec<usize>> {
    let ks = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| Error::Config(format!("K value `{p}` is not a positive integer"))))
        .collect::<Result<Vec<usize>>>()?;
    check_k_list(&ks)?;
    Ok(ks)
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn format(&self) -> Result<DatasetFormat> {
        self.prepare.format.parse()
    }

    pub fn prepare_options(&self) -> Result<PrepareOptions> {
        let p = &self.prepare;
        let excluded = match &p.excluded_categories {
            Some(v) => v.clone(),
            None => self.format()?.default_excluded_categories(),
        };
        if !(p.train_fraction > 0.0 && p.train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction must lie in (0, 1), got {}", p.train_fraction)));
        }
        if !(p.rating_scale_max > 0.0 && p.rating_scale_max.is_finite()) {
            return Err(Error::Config(format!("rating_scale_max must be positive, got {}", p.rating_scale_max)));
        }
        Ok(PrepareOptions {
            min_count: p.min_count,
            train_fraction: p.train_fraction,
            seed: p.seed,
            rating_scale_max: p.rating_scale_max,
            excluded_categories: excluded,
        })
    }

    pub fn variant_config(&self) -> Result<VariantConfig> {
        let variant: Variant = self.train.variant.parse()?;
        let proportion: Proportion = self.train.proportion.parse()?;
        if variant == Variant::Full && proportion.0.contains(&0) {
            return Err(Error::Config(format!("proportion {proportion} gives the full model an empty block")));
        }
        Ok(VariantConfig::new(variant, proportion)?)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        let config = TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            hidden: t.hidden,
            k: t.k,
            seed: t.seed,
            variant: self.variant_config()?,
            log_every: t.log_every,
            weights: LossWeights {
                recon: self.loss.recon,
                int: self.loss.int,
                ext: self.loss.ext,
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn classifier_config(&self) -> Result<ClassifierConfig> {
        let c = &self.classifier;
        if c.hidden == 0 || c.epochs == 0 || c.batch_size == 0 {
            return Err(Error::Config("classifier hidden, epochs and batch_size must be at least 1".into()));
        }
        if !(c.learning_rate > 0.0 && c.learning_rate.is_finite()) {
            return Err(Error::Config(format!("classifier learning rate must be positive, got {}", c.learning_rate)));
        }
        if !(c.train_fraction > 0.0 && c.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "classifier train_fraction must lie in (0, 1), got {}",
                c.train_fraction
            )));
        }
        Ok(ClassifierConfig {
            hidden: c.hidden,
            epochs: c.epochs,
            batch_size: c.batch_size,
            learning_rate: c.learning_rate,
            train_fraction: c.train_fraction,
            threshold: c.threshold,
            standardize: c.standardize,
        })
    }

    pub fn k_list(&self) -> Result<Vec<usize>> {
        check_k_list(&self.eval.k_list)?;
        Ok(self.eval.k_list.clone())
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let variants = self
            .sweep
            .variants
            .iter()
            .map(|v| v.parse::<Variant>())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let proportions = self
            .sweep
            .proportions
            .iter()
            .map(|p| p.parse::<Proportion>())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if self.sweep.seeds.is_empty() {
            return Err(Error::Config("sweep lists no seed".into()));
        }
        Ok(SweepSpec {
            variants,
            proportions,
            seeds: self.sweep.seeds.clone(),
            k_list: self.k_list()?,
            base: self.train_config()?,
            classifier: self.classifier_config()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sdrl_core::Error as CoreError;

    #[test]
    fn defaults_round_trip_through_text() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(RunConfig::from_toml("").unwrap(), c);
        let t = c.train_config().unwrap();
        assert_eq!(t, TrainConfig::default());
        assert_eq!(t.layout().unwrap().dims(), [64, 32, 32]);
        assert_eq!(c.k_list().unwrap(), [5, 10, 15]);
        assert_eq!(c.prepare_options().unwrap().excluded_categories, ["IMAX"]);
    }

    #[test]
    fn partial_file_overrides_only_its_keys() {
        let c = RunConfig::from_toml("[train]\nvariant = \"whole\"\nepochs = 3\n[eval]\nk_list = [10]\n").unwrap();
        let t = c.train_config().unwrap();
        assert_eq!(t.epochs, 3);
        assert_eq!(t.variant.variant, Variant::Whole);
        assert_eq!(t.layout().unwrap().dims(), [0, 0, 128]);
        assert_eq!(t.batch_size, 128);
        assert_eq!(c.k_list().unwrap(), [10]);
    }

    #[test]
    fn bad_values_are_config_errors() {
        assert!(matches!(RunConfig::from_toml("[train]\nepoch = 3\n"), Err(Error::Config(_))));
        let mut c = RunConfig::default();
        c.train.proportion = "0:0:0".into();
        assert!(c.train_config().is_err());
        c.train.proportion = "2:0:1".into();
        assert!(matches!(c.train_config(), Err(Error::Config(_))));
        let mut c = RunConfig::default();
        c.eval.k_list.clear();
        assert!(matches!(c.k_list(), Err(Error::Core(CoreError::Config(_)))));
        assert!(parse_k_list("").is_err());
        assert!(parse_k_list("5,x").is_err());
        assert_eq!(parse_k_list("5, 10,15").unwrap(), [5, 10, 15]);
    }

    #[test]
    fn sweep_expands() {
        let c = RunConfig::default();
        let s = c.sweep_spec().unwrap();
        assert_eq!(s.variants.len(), 5);
        assert_eq!(s.seeds.len(), 5);
        let mut c = RunConfig::default();
        c.sweep.proportions = vec!["0:0:0".into()];
        let s = c.sweep_spec().unwrap();
        assert!(sdrl_core::eval::sweep_cells(&s.variants, &s.proportions).is_err());
    }
}
