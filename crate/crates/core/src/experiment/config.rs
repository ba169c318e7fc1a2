//! JSON experiment configuration.
//!
//! Every field is optional; omitted fields take the defaults below, and
//! unknown keys are rejected. The resolved configuration is echoed next to
//! the results and is itself a valid input.
//!
//! ```json
//! {
//!   "n_devices": 10, "rounds": 20, "local_epochs": 1,
//!   "learning_rate": 0.1, "batch_size": 20, "hidden": 32,
//!   "quantizer_range": [-1.0, 1.0], "amplitude": 1.0,
//!   "dsb": { "n_samples": 32, "carrier_cycles": 4 },
//!   "snr_convention": "per_device", "normalization": "declared_k",
//!   "partition": "iid", "record_wall_time": false,
//!   "sweep": {
//!     "aggregation": ["ideal", "tbma", "dsb"], "n_levels": [32, 256],
//!     "snr_db": [-20, -10, 0, 10, 20], "seeds": [1, 2, 3]
//!   },
//!   "dataset": { "synthetic": { "seed": 2024, "n_train": 2000, "n_test": 500,
//!                               "n_dims": 784, "n_classes": 10, "separation": 3.0 } },
//!   "output_dir": "results",
//!   "papr": { "n_symbols": 100000, "seed": 7, "n_levels": 32 }
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, SnrConvention};
use crate::dataio::{load_idx, synthetic, Dataset, Partition};
use crate::feel::{Aggregation, FeelConfig, LocalSchedule};
use crate::modem::DsbCarrier;
use crate::quantizer::QuantizerSpec;
use crate::receiver::Normalization;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n_devices: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub hidden: usize,
    pub quantizer_range: [f64; 2],
    pub amplitude: f64,
    pub dsb: DsbCarrier,
    pub snr_convention: SnrConvention,
    pub normalization: Normalization,
    pub partition: Partition,
    pub record_wall_time: bool,
    pub sweep: Sweep,
    pub dataset: DatasetSource,
    pub output_dir: PathBuf,
    pub papr: PaprSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_devices: 10,
            rounds: 20,
            local_epochs: 1,
            learning_rate: 0.1,
            batch_size: 20,
            hidden: 32,
            quantizer_range: [-1.0, 1.0],
            amplitude: 1.0,
            dsb: DsbCarrier::default(),
            snr_convention: SnrConvention::default(),
            normalization: Normalization::default(),
            partition: Partition::default(),
            record_wall_time: false,
            sweep: Sweep::default(),
            dataset: DatasetSource::default(),
            output_dir: PathBuf::from("results"),
            papr: PaprSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    pub aggregation: Vec<Aggregation>,
    pub n_levels: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            aggregation: vec![Aggregation::Ideal, Aggregation::Tbma, Aggregation::Dsb],
            n_levels: vec![32, 256],
            snr_db: vec![-20.0, -10.0, 0.0, 10.0, 20.0],
            seeds: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic(SyntheticSource),
    Mnist(MnistSource),
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SyntheticSource::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSource {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_dims: usize,
    pub n_classes: usize,
    pub separation: f64,
}

impl Default for SyntheticSource {
    fn default() -> Self {
        Self {
            seed: 2024,
            n_train: 2000,
            n_test: 500,
            n_dims: 784,
            n_classes: 10,
            separation: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnistSource {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
}

fn default_n_train() -> usize {
    2000
}

fn default_n_test() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PaprSettings {
    pub n_symbols: usize,
    pub seed: u64,
    pub n_levels: usize,
}

impl Default for PaprSettings {
    fn default() -> Self {
        Self {
            n_symbols: 100_000,
            seed: 7,
            n_levels: 32,
        }
    }
}

impl DatasetSource {
    /// Loads `(train, test)`.
    pub fn load(&self) -> Result<(Dataset, Dataset)> {
        match self {
            DatasetSource::Synthetic(s) => {
                let all = synthetic(s.seed, s.n_train + s.n_test, s.n_dims, s.n_classes, s.separation)?;
                Ok(all.split_at(s.n_train))
            }
            DatasetSource::Mnist(m) => {
                let train = load_idx(&m.train_images, &m.train_labels)?.head(m.n_train);
                let test = load_idx(&m.test_images, &m.test_labels)?.head(m.n_test);
                Ok((train, test))
            }
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sweep;
        for (name, empty) in [
            ("aggregation", s.aggregation.is_empty()),
            ("n_levels", s.n_levels.is_empty()),
            ("snr_db", s.snr_db.is_empty()),
            ("seeds", s.seeds.is_empty()),
        ] {
            if empty {
                return Err(Error::Config(format!("empty sweep axis: {name}")));
            }
        }
        if let Some(x) = s.snr_db.iter().find(|x| !x.is_finite()) {
            return Err(Error::Config(format!("snr_db: {x} is not finite")));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds: must be at least 1".into()));
        }
        if self.n_devices == 0 {
            return Err(Error::Config("n_devices: must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate: must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size: must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden: must be at least 1".into()));
        }
        for &n in s.n_levels.iter().chain(std::iter::once(&self.papr.n_levels)) {
            self.quantizer(n)
                .map_err(|e| Error::Config(format!("n_levels: {e}")))?;
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Config("amplitude: must be positive".into()));
        }
        self.dsb.validate().map_err(|e| Error::Config(format!("dsb: {e}")))?;
        if self.papr.n_symbols == 0 {
            return Err(Error::Config("papr.n_symbols: must be at least 1".into()));
        }
        if let DatasetSource::Synthetic(d) = &self.dataset {
            if d.n_train == 0 || d.n_test == 0 || d.n_dims == 0 || d.n_classes < 2 {
                return Err(Error::Config("dataset.synthetic: sizes must be positive with at least 2 classes".into()));
            }
            if !(d.separation > 0.0 && d.separation.is_finite()) {
                return Err(Error::Config("dataset.synthetic.separation: must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn quantizer(&self, n_levels: usize) -> Result<QuantizerSpec> {
        QuantizerSpec::new(n_levels, self.quantizer_range[0], self.quantizer_range[1])
    }

    /// The training configuration of one grid point.
    pub fn feel_config(&self, aggregation: Aggregation, n_levels: usize, snr_db: f64, seed: u64) -> Result<FeelConfig> {
        Ok(FeelConfig {
            n_devices: self.n_devices,
            rounds: self.rounds,
            schedule: LocalSchedule {
                epochs: self.local_epochs,
                learning_rate: self.learning_rate,
                batch_size: self.batch_size,
            },
            hidden: self.hidden,
            aggregation,
            quantizer: self.quantizer(n_levels)?,
            amplitude: self.amplitude,
            dsb: self.dsb,
            channel: ChannelConfig { snr_db, seed },
            snr_convention: self.snr_convention,
            normalization: self.normalization,
            partition: self.partition,
            seed,
            record_wall_time: self.record_wall_time,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    ExperimentConfig::from_json(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_takes_defaults() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn partial_override() {
        let c = ExperimentConfig::from_json(r#"{"rounds": 3, "sweep": {"snr_db": [5]}}"#).unwrap();
        assert_eq!(c.rounds, 3);
        assert_eq!(c.sweep.snr_db, vec![5.0]);
        assert_eq!(c.sweep.seeds, Sweep::default().seeds);
    }

    #[test]
    fn empty_axis_is_rejected() {
        let e = ExperimentConfig::from_json(r#"{"sweep": {"snr_db": []}}"#).unwrap_err();
        assert!(e.to_string().contains("empty sweep axis"), "{e}");
        assert!(e.to_string().contains("snr_db"));
    }

    #[test]
    fn unknown_key_is_named() {
        let e = ExperimentConfig::from_json(r#"{"papr_mode": 1}"#).unwrap_err();
        assert!(e.to_string().contains("papr_mode"), "{e}");
        let e = ExperimentConfig::from_json(r#"{"sweep": {"snr": [1]}}"#).unwrap_err();
        assert!(e.to_string().contains("snr"), "{e}");
    }

    #[test]
    fn syntax_error_has_position() {
        let e = ExperimentConfig::from_json("{\n  \"rounds\": ,\n}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        assert!(e.to_string().contains("column"), "{e}");
    }

    #[test]
    fn mnist_source_parses() {
        let c = ExperimentConfig::from_json(
            r#"{"dataset": {"mnist": {"train_images": "a", "train_labels": "b",
                "test_images": "c", "test_labels": "d"}}}"#,
        )
        .unwrap();
        match c.dataset {
            DatasetSource::Mnist(m) => assert_eq!(m.n_train, 2000),
            _ => panic!("expected mnist"),
        }
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"sweep": {"n_levels": [1]}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"learning_rate": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"sweep": {"aggregation": ["fm"]}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"dsb": {"n_samples": 8, "carrier_cycles": 4}}"#).is_err());
    }
}
