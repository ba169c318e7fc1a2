//! Server-side aggregation: ideal averaging, TBMA over MFSK tones and the
//! DSB analog baseline.

use rayon::prelude::*;

use crate::channel::{accumulate, add_awgn_in_place, noise_sigma, ChannelConfig, SnrConvention};
use crate::feel::model::ModelVector;
use crate::modem::{DsbCarrier, ToneFamily};
use crate::quantizer::{quantize_vector, QuantizerSpec};
use crate::receiver::{correlate_into, estimate_type, mean_from_type_with, Normalization};
use crate::rng::{stream, Purpose};
use crate::{Error, Result};

/// Parameters sharing one noise stream. Changing this changes the noise
/// realization, not its distribution.
pub const NOISE_BLOCK: usize = 256;

fn check_layouts(models: &[ModelVector]) -> Result<&ModelVector> {
    let first = models
        .first()
        .ok_or_else(|| Error::InputDomain("no models to aggregate".into()))?;
    for m in models {
        if m.arch != first.arch || m.len() != first.len() {
            return Err(Error::Shape {
                expected: first.len(),
                actual: m.len(),
            });
        }
    }
    Ok(first)
}

pub fn aggregate_ideal(models: &[ModelVector]) -> Result<ModelVector> {
    let first = check_layouts(models)?;
    let mut out = ModelVector::zeros(first.arch);
    for m in models {
        for (o, v) in out.values.iter_mut().zip(&m.values) {
            *o += v;
        }
    }
    let k = models.len() as f64;
    for o in &mut out.values {
        *o /= k;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TbmaOptions {
    pub convention: SnrConvention,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregated {
    pub model: ModelVector,
    /// Parameters whose estimated type was empty and kept the previous value.
    pub fallback_count: usize,
}

/// Noise standard deviation of a TBMA channel use.
pub fn tbma_sigma(family: &ToneFamily, n_devices: usize, channel: &ChannelConfig, convention: SnrConvention) -> Result<f64> {
    noise_sigma(channel.snr_db, convention.reference_power(family.sample_power(), n_devices))
}

/// Type-based aggregation, one channel use of `N` samples per parameter.
///
/// Each device quantizes its parameters, sends the tone of each level, the
/// channel sums the tones and adds noise drawn from the stream keyed by
/// `(channel.seed, round, parameter block)`, and the server takes the mean
/// of the estimated type. Parameters whose type comes out empty keep their
/// value in `previous`.
pub fn aggregate_tbma(
    models: &[ModelVector],
    spec: &QuantizerSpec,
    family: &ToneFamily,
    channel: &ChannelConfig,
    options: &TbmaOptions,
    round: usize,
    previous: &ModelVector,
) -> Result<Aggregated> {
    let first = check_layouts(models)?;
    if previous.arch != first.arch {
        return Err(Error::Shape {
            expected: first.len(),
            actual: previous.len(),
        });
    }
    let n = family.n_tones();
    if n != spec.n_levels() {
        return Err(Error::Shape {
            expected: spec.n_levels(),
            actual: n,
        });
    }
    let k = models.len();
    let sigma = tbma_sigma(family, k, channel, options.convention)?;
    let levels: Vec<Vec<usize>> = models
        .iter()
        .map(|m| quantize_vector(&m.values, spec))
        .collect::<Result<_>>()?;

    let mut out = previous.clone();
    let fallbacks: Vec<usize> = out
        .values
        .par_chunks_mut(NOISE_BLOCK)
        .enumerate()
        .map(|(block, chunk)| -> Result<usize> {
            let mut rng = stream(channel.seed, Purpose::ChannelNoise, round as u64, block as u64);
            let mut received = vec![0.0; n];
            let mut scores = vec![0.0; n];
            let mut fallback = 0;
            for (offset, slot) in chunk.iter_mut().enumerate() {
                let q = block * NOISE_BLOCK + offset;
                received.fill(0.0);
                for device in &levels {
                    accumulate(&mut received, family.tone(device[q]))?;
                }
                add_awgn_in_place(&mut received, sigma, &mut rng)?;
                correlate_into(&received, family, &mut scores)?;
                let hist = estimate_type(&scores, k)?;
                match mean_from_type_with(&hist, spec, options.normalization) {
                    Ok(mean) => *slot = mean,
                    Err(Error::Degenerate(_)) => fallback += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok(fallback)
        })
        .collect::<Result<_>>()?;

    Ok(Aggregated {
        model: out,
        fallback_count: fallbacks.iter().sum(),
    })
}

/// Average per-sample power of the DSB waveforms the devices send this
/// round: `value^2 / 2` averaged over devices and parameters.
pub fn dsb_power(models: &[ModelVector]) -> f64 {
    let count: usize = models.iter().map(ModelVector::len).sum();
    if count == 0 {
        return 0.0;
    }
    models
        .iter()
        .flat_map(|m| m.values.iter())
        .map(|v| v * v / 2.0)
        .sum::<f64>()
        / count as f64
}

/// Analog over-the-air averaging: every device scales a common carrier by
/// its raw parameter, the server demodulates coherently and divides by `K`.
/// No clipping is applied.
pub fn aggregate_dsb(
    models: &[ModelVector],
    carrier: &DsbCarrier,
    channel: &ChannelConfig,
    convention: SnrConvention,
    round: usize,
) -> Result<ModelVector> {
    let first = check_layouts(models)?;
    carrier.validate()?;
    let k = models.len();
    let power = dsb_power(models);
    // All-zero transmissions leave nothing to calibrate the noise against.
    let sigma = if power > 0.0 {
        noise_sigma(channel.snr_db, convention.reference_power(power, k))?
    } else {
        0.0
    };
    let wave = carrier.carrier();
    let mut out = ModelVector::zeros(first.arch);
    out.values
        .par_chunks_mut(NOISE_BLOCK)
        .enumerate()
        .try_for_each(|(block, chunk)| -> Result<()> {
            let mut rng = stream(channel.seed, Purpose::ChannelNoise, round as u64, block as u64);
            let mut received = vec![0.0; carrier.n_samples];
            for (offset, slot) in chunk.iter_mut().enumerate() {
                let q = block * NOISE_BLOCK + offset;
                received.fill(0.0);
                for m in models {
                    let v = m.values[q];
                    for (r, c) in received.iter_mut().zip(&wave) {
                        *r += v * c;
                    }
                }
                add_awgn_in_place(&mut received, sigma, &mut rng)?;
                *slot = carrier.demodulate(&received)? / k as f64;
            }
            Ok(())
        })?;
    Ok(out)
}
