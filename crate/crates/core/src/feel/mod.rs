//! Federated edge learning harness.
//!
//! Each round the server broadcasts the global model, every device runs
//! local SGD on its own shard, and the server replaces the global model
//! with the aggregate produced by the configured channel pipeline.
//! Every random draw comes from a stream keyed by device, round or
//! parameter block, so the result does not depend on thread scheduling.

pub mod aggregate;
pub mod model;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, SnrConvention};
use crate::dataio::{shard, Dataset, Partition};
use crate::modem::{DsbCarrier, ToneFamily};
use crate::quantizer::QuantizerSpec;
use crate::receiver::Normalization;
use crate::rng::{stream, Purpose};
use crate::{Error, Result};

pub use aggregate::{aggregate_dsb, aggregate_ideal, aggregate_tbma, Aggregated, TbmaOptions};
pub use model::{evaluate, init_model, local_train, Arch, LocalSchedule, ModelVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Ideal,
    Tbma,
    Dsb,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Ideal => "ideal",
            Aggregation::Tbma => "tbma",
            Aggregation::Dsb => "dsb",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeelConfig {
    pub n_devices: usize,
    pub rounds: usize,
    pub schedule: LocalSchedule,
    pub hidden: usize,
    pub aggregation: Aggregation,
    pub quantizer: QuantizerSpec,
    pub amplitude: f64,
    pub dsb: DsbCarrier,
    pub channel: ChannelConfig,
    pub snr_convention: SnrConvention,
    pub normalization: Normalization,
    pub partition: Partition,
    pub seed: u64,
    pub record_wall_time: bool,
}

impl FeelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_devices == 0 {
            return Err(Error::Config("n_devices must be at least 1".into()));
        }
        if !(self.schedule.learning_rate > 0.0 && self.schedule.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.schedule.learning_rate
            )));
        }
        if self.schedule.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        self.dsb.validate()
    }
}

/// Metrics of one round. Round 0 is the initial model before any training.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub accuracy: f64,
    /// Mean absolute difference between the aggregate and the ideal average.
    pub agg_error_vs_ideal: f64,
    pub fallback_count: usize,
    /// Fraction of transmitted device parameters outside the quantizer range.
    pub saturation_fraction: f64,
    pub wall_ms: u64,
}

/// A run that stopped early, with every round completed before the failure.
#[derive(Debug, thiserror::Error)]
#[error("{error} after {} completed rounds", records.len().saturating_sub(1))]
pub struct FeelFailure {
    pub records: Vec<RoundRecord>,
    #[source]
    pub error: Error,
}

fn saturation(models: &[ModelVector], spec: &QuantizerSpec) -> f64 {
    let total: usize = models.iter().map(ModelVector::len).sum();
    if total == 0 {
        return 0.0;
    }
    let clipped = models
        .iter()
        .flat_map(|m| m.values.iter())
        .filter(|&&v| spec.saturates(v))
        .count();
    clipped as f64 / total as f64
}

pub fn run_feel(config: &FeelConfig, train: &Dataset, test: &Dataset) -> std::result::Result<Vec<RoundRecord>, FeelFailure> {
    let mut records = Vec::with_capacity(config.rounds + 1);
    match run_rounds(config, train, test, &mut records) {
        Ok(()) => Ok(records),
        Err(error) => Err(FeelFailure { records, error }),
    }
}

fn run_rounds(config: &FeelConfig, train: &Dataset, test: &Dataset, records: &mut Vec<RoundRecord>) -> Result<()> {
    config.validate()?;
    if train.n_dims != test.n_dims || train.n_classes != test.n_classes {
        return Err(Error::Shape {
            expected: train.n_dims,
            actual: test.n_dims,
        });
    }
    let arch = Arch::new(train.n_dims, config.hidden, train.n_classes)?;
    let shards = shard(train, config.n_devices, config.partition, config.seed)?;
    let family = match config.aggregation {
        Aggregation::Tbma => Some(ToneFamily::new(config.quantizer.n_levels(), config.amplitude)?),
        _ => None,
    };
    let tbma = TbmaOptions {
        convention: config.snr_convention,
        normalization: config.normalization,
    };

    let mut global = init_model(arch, config.seed)?;
    records.push(RoundRecord {
        round: 0,
        accuracy: evaluate(&global, test)?,
        agg_error_vs_ideal: 0.0,
        fallback_count: 0,
        saturation_fraction: saturation(std::slice::from_ref(&global), &config.quantizer),
        wall_ms: 0,
    });

    for round in 1..=config.rounds {
        let start = Instant::now();
        let locals: Vec<ModelVector> = shards
            .par_iter()
            .enumerate()
            .map(|(device, indices)| {
                let mut rng = stream(config.seed, Purpose::LocalTrain, round as u64, device as u64);
                local_train(&global, train, indices, &config.schedule, &mut rng, device, round)
            })
            .collect::<Result<_>>()?;

        let ideal = aggregate_ideal(&locals)?;
        let (next, fallback_count) = match config.aggregation {
            Aggregation::Ideal => (ideal.clone(), 0),
            Aggregation::Tbma => {
                let family = family.as_ref().expect("tone family is built for TBMA runs");
                let out = aggregate_tbma(&locals, &config.quantizer, family, &config.channel, &tbma, round, &global)?;
                (out.model, out.fallback_count)
            }
            Aggregation::Dsb => (
                aggregate_dsb(&locals, &config.dsb, &config.channel, config.snr_convention, round)?,
                0,
            ),
        };
        let agg_error_vs_ideal = next
            .values
            .iter()
            .zip(&ideal.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / next.len() as f64;
        if !next.is_finite() {
            return Err(Error::Divergence { device: 0, round });
        }
        global = next;
        let accuracy = evaluate(&global, test)?;
        records.push(RoundRecord {
            round,
            accuracy,
            agg_error_vs_ideal,
            fallback_count,
            saturation_fraction: saturation(&locals, &config.quantizer),
            wall_ms: if config.record_wall_time {
                start.elapsed().as_millis() as u64
            } else {
                0
            },
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::synthetic;

    fn config(aggregation: Aggregation, k: usize, rounds: usize) -> FeelConfig {
        FeelConfig {
            n_devices: k,
            rounds,
            schedule: LocalSchedule {
                epochs: 1,
                learning_rate: 0.1,
                batch_size: 10,
            },
            hidden: 8,
            aggregation,
            quantizer: QuantizerSpec::symmetric(16).unwrap(),
            amplitude: 1.0,
            dsb: DsbCarrier::default(),
            channel: ChannelConfig { snr_db: 10.0, seed: 4 },
            snr_convention: SnrConvention::PerDevice,
            normalization: Normalization::DeclaredK,
            partition: Partition::Iid,
            seed: 11,
            record_wall_time: false,
        }
    }

    fn data() -> (Dataset, Dataset) {
        synthetic(1, 400, 12, 3, 3.0).unwrap().split_at(300)
    }

    #[test]
    fn zero_rounds_reports_initial_evaluation() {
        let (train, test) = data();
        let r = run_feel(&config(Aggregation::Ideal, 3, 0), &train, &test).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].round, 0);
    }

    #[test]
    fn single_device_matches_centralized_sgd() {
        let (train, test) = data();
        let cfg = config(Aggregation::Ideal, 1, 4);
        let fed = run_feel(&cfg, &train, &test).unwrap();

        let arch = Arch::new(12, 8, 3).unwrap();
        let mut m = init_model(arch, cfg.seed).unwrap();
        let all = &shard(&train, 1, Partition::Iid, cfg.seed).unwrap()[0];
        let mut acc = vec![evaluate(&m, &test).unwrap()];
        for round in 1..=4 {
            let mut rng = stream(cfg.seed, Purpose::LocalTrain, round, 0);
            m = local_train(&m, &train, all, &cfg.schedule, &mut rng, 0, round as usize).unwrap();
            acc.push(evaluate(&m, &test).unwrap());
        }
        assert_eq!(fed.iter().map(|r| r.accuracy).collect::<Vec<_>>(), acc);
    }

    #[test]
    fn runs_are_reproducible() {
        let (train, test) = data();
        for agg in [Aggregation::Ideal, Aggregation::Tbma, Aggregation::Dsb] {
            let cfg = config(agg, 4, 3);
            let a = run_feel(&cfg, &train, &test).unwrap();
            let b = run_feel(&cfg, &train, &test).unwrap();
            assert_eq!(a, b);
            assert!(a.iter().all(|r| r.wall_ms == 0));
        }
    }

    #[test]
    fn divergence_keeps_partial_records() {
        let (train, test) = data();
        let mut cfg = config(Aggregation::Ideal, 2, 5);
        cfg.schedule.learning_rate = 1e200;
        let err = run_feel(&cfg, &train, &test).unwrap_err();
        assert!(matches!(err.error, Error::Divergence { round: 1, .. }));
        assert_eq!(err.records.len(), 1);
    }

    #[test]
    fn rejects_bad_config() {
        let (train, test) = data();
        let mut cfg = config(Aggregation::Ideal, 0, 1);
        assert!(run_feel(&cfg, &train, &test).is_err());
        cfg.n_devices = 1000;
        assert!(run_feel(&cfg, &train, &test).is_err());
    }
}
