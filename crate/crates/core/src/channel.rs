//! Synchronous multiple-access channel: sample-wise superposition of all
//! device waveforms plus additive white Gaussian noise.
//!
//! Fading is assumed compensated and devices are perfectly synchronized.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::modem::Waveform;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub seed: u64,
}

/// What the SNR axis refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrConvention {
    /// Power of one device's waveform over the noise variance.
    #[default]
    PerDevice,
    /// `K` times the per-device power over the noise variance.
    Aggregate,
}

impl SnrConvention {
    pub fn reference_power(self, per_device_power: f64, n_devices: usize) -> f64 {
        match self {
            SnrConvention::PerDevice => per_device_power,
            SnrConvention::Aggregate => per_device_power * n_devices as f64,
        }
    }
}

pub fn superimpose(waveforms: &[Waveform]) -> Result<Waveform> {
    let first = waveforms
        .first()
        .ok_or_else(|| Error::InputDomain("superposition of zero waveforms".into()))?;
    let mut acc = vec![0.0; first.len()];
    for w in waveforms {
        accumulate(&mut acc, &w.samples)?;
    }
    Ok(Waveform::new(acc))
}

/// Adds `samples` into `acc`, the building block of [`superimpose`].
pub fn accumulate(acc: &mut [f64], samples: &[f64]) -> Result<()> {
    if samples.len() != acc.len() {
        return Err(Error::Shape {
            expected: acc.len(),
            actual: samples.len(),
        });
    }
    for (a, s) in acc.iter_mut().zip(samples) {
        *a += s;
    }
    Ok(())
}

/// Noise standard deviation for a target SNR given the reference signal
/// power per sample.
pub fn noise_sigma(snr_db: f64, per_sample_signal_power: f64) -> Result<f64> {
    if !(per_sample_signal_power > 0.0 && per_sample_signal_power.is_finite()) {
        return Err(Error::InputDomain(format!(
            "signal power must be positive, got {per_sample_signal_power}"
        )));
    }
    if snr_db.is_nan() {
        return Err(Error::InputDomain("SNR is NaN".into()));
    }
    Ok((per_sample_signal_power / 10f64.powf(snr_db / 10.0)).sqrt())
}

pub fn add_awgn<R: Rng + ?Sized>(waveform: &Waveform, sigma: f64, rng: &mut R) -> Result<Waveform> {
    let mut out = waveform.clone();
    add_awgn_in_place(&mut out.samples, sigma, rng)?;
    out.amplitude = None;
    Ok(out)
}

pub fn add_awgn_in_place<R: Rng + ?Sized>(samples: &mut [f64], sigma: f64, rng: &mut R) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InputDomain(format!(
            "noise sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(());
    }
    for s in samples {
        let g: f64 = rng.sample(StandardNormal);
        *s += sigma * g;
    }
    Ok(())
}
