//! Waveform synthesis: the MFSK tone family, the DSB baseline and PAPR.
//!
//! Tone `m` of an `N`-tone family is
//! `A_c * sqrt(2/N) * cos(pi * (2m + 1) * n / (2N))` for `n = 0..N`.
//! These tones are orthonormal only once the `n = 0` sample is given
//! weight 1/2; under the plain inner product every pair of tones has
//! cross-correlation `1/N`. The receiver uses the half-weighted product,
//! see [`correlation_weight`].

use std::f64::consts::PI;

use crate::{Error, Result};

/// Weight of sample `n` in the receiver inner product.
#[inline]
pub fn correlation_weight(n: usize) -> f64 {
    if n == 0 {
        0.5
    } else {
        1.0
    }
}

/// A length-`N` block of real baseband samples.
///
/// `amplitude` is the carrier amplitude of a single transmitter. It is
/// `None` for mixtures produced by the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub amplitude: Option<f64>,
}

impl Waveform {
    pub fn new(samples: Vec<f64>) -> Self {
        Self {
            samples,
            amplitude: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Average power per sample.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }
}

/// Precomputed table of the `N` tones, row `m` being the tone for level `m`.
#[derive(Debug, Clone)]
pub struct ToneFamily {
    n_tones: usize,
    amplitude: f64,
    table: Vec<f64>,
}

impl ToneFamily {
    pub fn new(n_tones: usize, amplitude: f64) -> Result<Self> {
        if n_tones < 2 {
            return Err(Error::Config(format!(
                "tone family needs at least 2 tones, got {n_tones}"
            )));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::Config(format!(
                "carrier amplitude must be positive and finite, got {amplitude}"
            )));
        }
        let scale = amplitude * (2.0 / n_tones as f64).sqrt();
        let step = PI / (2 * n_tones) as f64;
        let mut table = Vec::with_capacity(n_tones * n_tones);
        for m in 0..n_tones {
            let freq = (2 * m + 1) as f64 * step;
            table.extend((0..n_tones).map(|n| scale * (freq * n as f64).cos()));
        }
        Ok(Self {
            n_tones,
            amplitude,
            table,
        })
    }

    pub fn n_tones(&self) -> usize {
        self.n_tones
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Samples of tone `level`. Panics if `level >= n_tones`.
    pub fn tone(&self, level: usize) -> &[f64] {
        &self.table[level * self.n_tones..(level + 1) * self.n_tones]
    }

    /// Average power per sample of any one tone: `A_c^2 (N + 1) / N^2`.
    pub fn sample_power(&self) -> f64 {
        let n = self.n_tones as f64;
        self.amplitude * self.amplitude * (n + 1.0) / (n * n)
    }

    /// Constant complex-envelope power of every tone, `A_c^2 * 2 / N`.
    pub fn envelope_power(&self) -> f64 {
        self.amplitude * self.amplitude * 2.0 / self.n_tones as f64
    }
}

pub fn mfsk_modulate(level: usize, family: &ToneFamily) -> Result<Waveform> {
    if level >= family.n_tones {
        return Err(Error::Index {
            index: level,
            len: family.n_tones,
        });
    }
    Ok(Waveform {
        samples: family.tone(level).to_vec(),
        amplitude: Some(family.amplitude),
    })
}

/// Carrier geometry of the DSB baseline: `n_samples` per symbol and an
/// integer number of carrier cycles per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DsbCarrier {
    pub n_samples: usize,
    pub carrier_cycles: usize,
}

impl Default for DsbCarrier {
    fn default() -> Self {
        Self {
            n_samples: 32,
            carrier_cycles: 4,
        }
    }
}

impl DsbCarrier {
    pub fn new(n_samples: usize, carrier_cycles: usize) -> Result<Self> {
        let c = Self {
            n_samples,
            carrier_cycles,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 || self.carrier_cycles == 0 || 2 * self.carrier_cycles >= self.n_samples
        {
            return Err(Error::Config(format!(
                "DSB carrier needs n_samples >= 2 and 1 <= carrier_cycles < n_samples/2, got {} and {}",
                self.n_samples, self.carrier_cycles
            )));
        }
        Ok(())
    }

    pub fn carrier(&self) -> Vec<f64> {
        let w = 2.0 * PI * self.carrier_cycles as f64 / self.n_samples as f64;
        (0..self.n_samples).map(|n| (w * n as f64).cos()).collect()
    }

    /// Coherent estimate of the symbol amplitude: project onto the carrier.
    /// `sum cos^2` over a whole number of cycles is exactly `n_samples / 2`.
    pub fn demodulate(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.n_samples {
            return Err(Error::Shape {
                expected: self.n_samples,
                actual: samples.len(),
            });
        }
        let w = 2.0 * PI * self.carrier_cycles as f64 / self.n_samples as f64;
        let dot: f64 = samples
            .iter()
            .enumerate()
            .map(|(n, s)| s * (w * n as f64).cos())
            .sum();
        Ok(dot * 2.0 / self.n_samples as f64)
    }
}

pub fn dsb_modulate(value: f64, n_samples: usize, carrier_cycles: usize) -> Result<Waveform> {
    if !value.is_finite() {
        return Err(Error::InputDomain(format!("cannot modulate {value}")));
    }
    let carrier = DsbCarrier::new(n_samples, carrier_cycles)?;
    Ok(Waveform {
        samples: carrier.carrier().into_iter().map(|c| value * c).collect(),
        amplitude: Some(value.abs()),
    })
}

/// How a concatenated sample stream is cut into symbols.
#[derive(Debug, Clone, Copy)]
pub enum Framing<'a> {
    Mfsk(&'a ToneFamily),
    Dsb(DsbCarrier),
}

impl Framing<'_> {
    fn symbol_len(&self) -> usize {
        match self {
            Framing::Mfsk(f) => f.n_tones(),
            Framing::Dsb(c) => c.n_samples,
        }
    }
}

/// Instantaneous complex-envelope power, one entry per sample.
///
/// MFSK symbols have the constant envelope `A_c^2 * 2/N`. DSB symbols carry
/// `value^2`, where `value` is recovered by coherent demodulation.
pub fn envelope_power(stream: &[f64], framing: Framing<'_>) -> Result<Vec<f64>> {
    let symbol = framing.symbol_len();
    if !stream.len().is_multiple_of(symbol) {
        return Err(Error::Framing {
            len: stream.len(),
            symbol,
        });
    }
    match framing {
        Framing::Mfsk(family) => Ok(vec![family.envelope_power(); stream.len()]),
        Framing::Dsb(carrier) => {
            let mut out = Vec::with_capacity(stream.len());
            for chunk in stream.chunks_exact(symbol) {
                let a = carrier.demodulate(chunk)?;
                out.extend(std::iter::repeat_n(a * a, symbol));
            }
            Ok(out)
        }
    }
}

/// Peak-to-average power ratio in dB of an envelope-power sequence.
pub fn papr(envelope_powers: &[f64]) -> Result<f64> {
    if envelope_powers.is_empty() {
        return Err(Error::Degenerate("PAPR of an empty sequence".into()));
    }
    if let Some(p) = envelope_powers.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(Error::InputDomain(format!("envelope power {p} is not a finite non-negative value")));
    }
    let (min, max) = envelope_powers
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    if max == 0.0 {
        return Err(Error::Degenerate("PAPR of an all-zero sequence".into()));
    }
    // Offsetting by the minimum keeps a constant sequence at exactly 0 dB.
    let excess = envelope_powers.iter().map(|p| p - min).sum::<f64>();
    let mean = min + excess / envelope_powers.len() as f64;
    Ok(10.0 * (max / mean).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    // Tone samples evaluated from the closed form, independent of the table.
    fn tone_oracle(m: usize, n: usize, big_n: usize) -> f64 {
        (2.0 / big_n as f64).sqrt()
            * (PI * (2 * m + 1) as f64 * n as f64 / (2 * big_n) as f64).cos()
    }

    #[test]
    fn first_sample_is_peak() {
        let fam = ToneFamily::new(16, 2.5).unwrap();
        for m in 0..16 {
            let w = mfsk_modulate(m, &fam).unwrap();
            assert!((w.samples[0] - 2.5 * (2.0f64 / 16.0).sqrt()).abs() < 1e-15);
            let bound = 2.5 * (2.0f64 / 16.0).sqrt();
            assert!(w.samples.iter().all(|s| s.abs() <= bound + 1e-15));
        }
    }

    #[test]
    fn two_tone_family() {
        let fam = ToneFamily::new(2, 1.0).unwrap();
        let w = mfsk_modulate(0, &fam).unwrap();
        assert!((w.samples[0] - 1.0).abs() < 1e-15);
        assert!((w.samples[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-8);
        assert!(matches!(mfsk_modulate(2, &fam), Err(Error::Index { .. })));
    }

    #[test]
    fn energy_closed_form() {
        for big_n in [2usize, 8, 32, 256] {
            let fam = ToneFamily::new(big_n, 1.7).unwrap();
            for m in 0..big_n {
                let direct: f64 = (0..big_n)
                    .map(|n| (1.7 * tone_oracle(m, n, big_n)).powi(2))
                    .sum();
                let table: f64 = fam.tone(m).iter().map(|s| s * s).sum();
                let closed = 1.7 * 1.7 * (1.0 + 1.0 / big_n as f64);
                assert!((direct - closed).abs() < 1e-9, "N={big_n} m={m}");
                assert!((table - direct).abs() < 1e-9);
                assert!((table / big_n as f64 - fam.sample_power()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn table_matches_oracle() {
        let fam = ToneFamily::new(32, 1.0).unwrap();
        for m in 0..32 {
            for n in 0..32 {
                assert!((fam.tone(m)[n] - tone_oracle(m, n, 32)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn levels_are_distinguishable() {
        for big_n in [2usize, 64, 1024] {
            let fam = ToneFamily::new(big_n, 1.0).unwrap();
            // Adjacent levels are the closest pair in frequency.
            for m in 0..big_n - 1 {
                let gap = fam
                    .tone(m)
                    .iter()
                    .zip(fam.tone(m + 1))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(gap > 1e-12);
            }
        }
    }

    #[test]
    fn dsb_examples() {
        let z = dsb_modulate(0.0, 16, 2).unwrap();
        assert!(z.samples.iter().all(|&s| s == 0.0));
        let one = dsb_modulate(1.0, 16, 2).unwrap();
        assert_eq!(one.samples[0], 1.0);
        let neg = dsb_modulate(-0.5, 16, 3).unwrap();
        let p = envelope_power(&neg.samples, Framing::Dsb(DsbCarrier::new(16, 3).unwrap())).unwrap();
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-12));
        assert!(dsb_modulate(f64::NAN, 16, 2).is_err());
        assert!(dsb_modulate(1.0, 16, 8).is_err());
        assert!(dsb_modulate(1.0, 16, 0).is_err());
    }

    #[test]
    fn envelope_examples() {
        let fam = ToneFamily::new(32, 1.0).unwrap();
        let w = mfsk_modulate(5, &fam).unwrap();
        let p = envelope_power(&w.samples, Framing::Mfsk(&fam)).unwrap();
        assert_eq!(p, vec![1.0 / 16.0; 32]);

        let car = DsbCarrier::new(8, 1).unwrap();
        let mut stream = dsb_modulate(1.0, 8, 1).unwrap().samples;
        stream.extend(dsb_modulate(2.0, 8, 1).unwrap().samples);
        let p = envelope_power(&stream, Framing::Dsb(car)).unwrap();
        for (i, x) in p.iter().enumerate() {
            let want = if i < 8 { 1.0 } else { 4.0 };
            assert!((x - want).abs() < 1e-12);
        }
        assert!(matches!(
            envelope_power(&stream[..7], Framing::Dsb(car)),
            Err(Error::Framing { len: 7, symbol: 8 })
        ));

        let flat: Vec<f64> = (0..3).flat_map(|_| dsb_modulate(1.0, 8, 1).unwrap().samples).collect();
        let p = envelope_power(&flat, Framing::Dsb(car)).unwrap();
        assert!(papr(&p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn papr_examples() {
        assert_eq!(papr(&[0.3, 0.3, 0.3]).unwrap(), 0.0);
        assert!((papr(&[1.0, 0.0]).unwrap() - 10.0 * 2f64.log10()).abs() < 1e-12);
        assert!(matches!(papr(&[0.0, 0.0]), Err(Error::Degenerate(_))));
        assert!(papr(&[]).is_err());
        assert!(papr(&[-1.0, 2.0]).is_err());
        let a = [0.2, 1.3, 0.7, 0.01];
        let b: Vec<f64> = a.iter().map(|x| x * 37.5).collect();
        assert!((papr(&a).unwrap() - papr(&b).unwrap()).abs() < 1e-12);
    }
}
