//! Server side: correlator bank, type estimation and statistics of a type.

use serde::{Deserialize, Serialize};

use crate::modem::{correlation_weight, ToneFamily, Waveform};
use crate::quantizer::{reconstruct, QuantizerSpec};
use crate::{Error, Result};

/// Estimated number of devices per level for one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeHistogram {
    pub counts: Vec<f64>,
    pub n_devices: usize,
}

impl TypeHistogram {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Divisor used when turning a type into a mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// The known cohort size `K`.
    #[default]
    DeclaredK,
    /// The sum of the estimated counts.
    HistogramSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    HarmonicMean,
    GeometricMean,
    Max,
    Min,
    Variance,
}

/// Half-weighted matched filter against every tone, scaled so that a single
/// noiseless transmitter at level `m` scores exactly `e_m`.
pub fn correlate_bank(received: &Waveform, family: &ToneFamily) -> Result<Vec<f64>> {
    let mut scores = vec![0.0; family.n_tones()];
    correlate_into(&received.samples, family, &mut scores)?;
    Ok(scores)
}

pub(crate) fn correlate_into(samples: &[f64], family: &ToneFamily, scores: &mut [f64]) -> Result<()> {
    let n = family.n_tones();
    if samples.len() != n {
        return Err(Error::Shape {
            expected: n,
            actual: samples.len(),
        });
    }
    let norm = 1.0 / (family.amplitude() * family.amplitude());
    // The half weight on n = 0 is folded into the first product.
    let head = samples[0] * correlation_weight(0);
    for (m, score) in scores.iter_mut().enumerate() {
        let tone = family.tone(m);
        let tail: f64 = samples[1..].iter().zip(&tone[1..]).map(|(y, t)| y * t).sum();
        *score = (head * tone[0] + tail) * norm;
    }
    Ok(())
}

/// Clips negative scores to zero. Counts are not renormalized.
pub fn estimate_type(raw_scores: &[f64], n_devices: usize) -> Result<TypeHistogram> {
    if raw_scores.len() < 2 {
        return Err(Error::Shape {
            expected: 2,
            actual: raw_scores.len(),
        });
    }
    if n_devices == 0 {
        return Err(Error::InputDomain("type over zero devices".into()));
    }
    Ok(TypeHistogram {
        counts: raw_scores.iter().map(|&s| s.max(0.0)).collect(),
        n_devices,
    })
}

/// Mean of the reconstructed values, divided by the declared `K`.
pub fn mean_from_type(hist: &TypeHistogram, spec: &QuantizerSpec) -> Result<f64> {
    mean_from_type_with(hist, spec, Normalization::DeclaredK)
}

pub fn mean_from_type_with(
    hist: &TypeHistogram,
    spec: &QuantizerSpec,
    normalization: Normalization,
) -> Result<f64> {
    check_levels(hist, spec)?;
    let total = hist.total();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Degenerate("type has no mass".into()));
    }
    let mut weighted = 0.0;
    for (m, &c) in hist.counts.iter().enumerate() {
        if c != 0.0 {
            weighted += c * reconstruct(m, spec)?;
        }
    }
    let denom = match normalization {
        Normalization::DeclaredK => hist.n_devices as f64,
        Normalization::HistogramSum => total,
    };
    Ok(weighted / denom)
}

/// Statistic of the multiset described by the rounded counts.
/// Counts below one half are treated as absent.
pub fn stat_from_type(hist: &TypeHistogram, spec: &QuantizerSpec, which: Statistic) -> Result<f64> {
    check_levels(hist, spec)?;
    let support: Vec<(f64, f64)> = hist
        .counts
        .iter()
        .enumerate()
        .filter_map(|(m, &c)| {
            let r = c.round();
            (r >= 1.0).then_some((r, m))
        })
        .map(|(r, m)| reconstruct(m, spec).map(|v| (r, v)))
        .collect::<Result<_>>()?;
    let k: f64 = support.iter().map(|(c, _)| c).sum();
    if k == 0.0 {
        return Err(Error::Degenerate("rounded type is empty".into()));
    }
    if matches!(which, Statistic::HarmonicMean | Statistic::GeometricMean) {
        if let Some((_, v)) = support.iter().find(|(_, v)| *v <= 0.0) {
            return Err(Error::InputDomain(format!(
                "harmonic and geometric means need positive values, level value {v} is not"
            )));
        }
    }
    let value = match which {
        Statistic::HarmonicMean => k / support.iter().map(|(c, v)| c / v).sum::<f64>(),
        Statistic::GeometricMean => {
            (support.iter().map(|(c, v)| c * v.ln()).sum::<f64>() / k).exp()
        }
        // Support is in level order and reconstruction is increasing.
        Statistic::Max => support.last().map(|(_, v)| *v).unwrap_or_default(),
        Statistic::Min => support.first().map(|(_, v)| *v).unwrap_or_default(),
        Statistic::Variance => {
            let mean = support.iter().map(|(c, v)| c * v).sum::<f64>() / k;
            let second = support.iter().map(|(c, v)| c * v * v).sum::<f64>() / k;
            (second - mean * mean).max(0.0)
        }
    };
    Ok(value)
}

/// Half the L1 distance between the estimated and true types, both
/// normalized by the declared `K`.
pub fn total_variation(estimated: &TypeHistogram, truth: &[usize]) -> Result<f64> {
    if estimated.counts.len() != truth.len() {
        return Err(Error::Shape {
            expected: truth.len(),
            actual: estimated.counts.len(),
        });
    }
    let k = estimated.n_devices as f64;
    Ok(0.5
        * estimated
            .counts
            .iter()
            .zip(truth)
            .map(|(e, &t)| (e / k - t as f64 / k).abs())
            .sum::<f64>())
}

fn check_levels(hist: &TypeHistogram, spec: &QuantizerSpec) -> Result<()> {
    if hist.counts.len() != spec.n_levels() {
        return Err(Error::Shape {
            expected: spec.n_levels(),
            actual: hist.counts.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::superimpose;
    use crate::modem::mfsk_modulate;

    fn received(levels: &[usize], fam: &ToneFamily) -> Waveform {
        let ws: Vec<_> = levels.iter().map(|&m| mfsk_modulate(m, fam).unwrap()).collect();
        superimpose(&ws).unwrap()
    }

    // Plain matched filter, kept to document the 1/N cross-talk of the
    // unweighted inner product.
    fn unweighted_bank(y: &[f64], fam: &ToneFamily) -> Vec<f64> {
        (0..fam.n_tones())
            .map(|m| {
                y.iter().zip(fam.tone(m)).map(|(a, b)| a * b).sum::<f64>()
                    / (fam.amplitude() * fam.amplitude())
            })
            .collect()
    }

    #[test]
    fn single_device_gives_unit_vector() {
        let fam = ToneFamily::new(8, 1.0).unwrap();
        let s = correlate_bank(&received(&[3], &fam), &fam).unwrap();
        for (m, v) in s.iter().enumerate() {
            let want = if m == 3 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-9);
        }
    }

    #[test]
    fn counts_from_mixture_any_amplitude() {
        let fam = ToneFamily::new(8, 3.2).unwrap();
        let s = correlate_bank(&received(&[0, 0, 1, 1, 1], &fam), &fam).unwrap();
        let want = [2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).abs() < 1e-9);
        }
        let z = correlate_bank(&Waveform::new(vec![0.0; 8]), &fam).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        assert!(correlate_bank(&Waveform::new(vec![0.0; 7]), &fam).is_err());
    }

    #[test]
    fn unweighted_filter_has_crosstalk() {
        let fam = ToneFamily::new(8, 1.0).unwrap();
        let s = unweighted_bank(&received(&[3], &fam).samples, &fam);
        for (m, v) in s.iter().enumerate() {
            let want = if m == 3 { 1.0 + 1.0 / 8.0 } else { 1.0 / 8.0 };
            assert!((v - want).abs() < 1e-9);
        }
    }

    #[test]
    fn estimate_type_clips() {
        let h = estimate_type(&[2.0, 3.0, 0.0], 5).unwrap();
        assert_eq!(h.counts, vec![2.0, 3.0, 0.0]);
        let h = estimate_type(&[-0.4, 5.2, 0.1], 5).unwrap();
        assert_eq!(h.counts, vec![0.0, 5.2, 0.1]);
        assert!(estimate_type(&[1.0], 5).is_err());
        assert!(estimate_type(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn mean_examples() {
        let spec = QuantizerSpec::new(4, 0.0, 1.0).unwrap();
        let h = TypeHistogram {
            counts: vec![2.0, 3.0, 0.0, 0.0],
            n_devices: 5,
        };
        assert!((mean_from_type(&h, &spec).unwrap() - 0.275).abs() < 1e-15);
        let point = TypeHistogram {
            counts: vec![0.0, 0.0, 7.0, 0.0],
            n_devices: 7,
        };
        assert_eq!(mean_from_type(&point, &spec).unwrap(), 0.625);
        let empty = TypeHistogram {
            counts: vec![0.0; 4],
            n_devices: 3,
        };
        assert!(matches!(mean_from_type(&empty, &spec), Err(Error::Degenerate(_))));

        let short = TypeHistogram {
            counts: vec![1.0, 1.0],
            n_devices: 4,
        };
        let spec2 = QuantizerSpec::new(2, 0.0, 1.0).unwrap();
        assert_eq!(mean_from_type(&short, &spec2).unwrap(), 0.25);
        assert_eq!(
            mean_from_type_with(&short, &spec2, Normalization::HistogramSum).unwrap(),
            0.5
        );
    }

    #[test]
    fn statistics() {
        let spec = QuantizerSpec::new(2, 0.0, 0.5).unwrap();
        let point = TypeHistogram {
            counts: vec![0.0, 5.0],
            n_devices: 5,
        };
        for s in [
            Statistic::HarmonicMean,
            Statistic::GeometricMean,
            Statistic::Max,
            Statistic::Min,
        ] {
            assert!((stat_from_type(&point, &spec, s).unwrap() - 0.375).abs() < 1e-15);
        }
        assert_eq!(stat_from_type(&point, &spec, Statistic::Variance).unwrap(), 0.0);

        let h = TypeHistogram {
            counts: vec![2.0, 3.0],
            n_devices: 5,
        };
        assert_eq!(stat_from_type(&h, &spec, Statistic::Max).unwrap(), 0.375);
        assert_eq!(stat_from_type(&h, &spec, Statistic::Min).unwrap(), 0.125);
        let hm = stat_from_type(&h, &spec, Statistic::HarmonicMean).unwrap();
        assert!((hm - 5.0 / (2.0 / 0.125 + 3.0 / 0.375)).abs() < 1e-12);
        assert!((hm - 0.208_333_333_333).abs() < 1e-9);
        let gm = stat_from_type(&h, &spec, Statistic::GeometricMean).unwrap();
        assert!((gm - (0.125f64.powi(2) * 0.375f64.powi(3)).powf(0.2)).abs() < 1e-12);
        let var = stat_from_type(&h, &spec, Statistic::Variance).unwrap();
        let vals = [0.125, 0.125, 0.375, 0.375, 0.375];
        let mu = vals.iter().sum::<f64>() / 5.0;
        let want = vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 5.0;
        assert!((var - want).abs() < 1e-12);
    }

    #[test]
    fn statistics_ignore_small_noise_counts() {
        let spec = QuantizerSpec::new(4, 0.0, 1.0).unwrap();
        let h = TypeHistogram {
            counts: vec![0.3, 2.8, 1.1, 0.49],
            n_devices: 4,
        };
        assert_eq!(stat_from_type(&h, &spec, Statistic::Max).unwrap(), 0.625);
        assert_eq!(stat_from_type(&h, &spec, Statistic::Min).unwrap(), 0.375);
    }

    #[test]
    fn statistic_errors() {
        let spec = QuantizerSpec::new(2, -1.0, 1.0).unwrap();
        let h = TypeHistogram {
            counts: vec![1.0, 1.0],
            n_devices: 2,
        };
        assert!(matches!(
            stat_from_type(&h, &spec, Statistic::HarmonicMean),
            Err(Error::InputDomain(_))
        ));
        let tiny = TypeHistogram {
            counts: vec![0.2, 0.3],
            n_devices: 2,
        };
        assert!(matches!(
            stat_from_type(&tiny, &spec, Statistic::Max),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn tv_distance() {
        let h = TypeHistogram {
            counts: vec![1.0, 3.0, 0.0],
            n_devices: 4,
        };
        assert_eq!(total_variation(&h, &[1, 3, 0]).unwrap(), 0.0);
        assert!((total_variation(&h, &[0, 2, 2]).unwrap() - 0.5).abs() < 1e-15);
    }
}
