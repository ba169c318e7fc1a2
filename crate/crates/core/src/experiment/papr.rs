use std::fs;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{fmt_sig, ExperimentConfig};
use crate::modem::{dsb_modulate, envelope_power, mfsk_modulate, papr, Framing, ToneFamily};
use crate::quantizer::quantize;
use crate::rng::{stream, Purpose};
use crate::Result;

pub const PAPR_HEADER: &str = "scheme,papr_db,n_symbols,seed";
pub const PAPR_FILE: &str = "papr.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct PaprRow {
    pub scheme: &'static str,
    pub papr_db: f64,
    pub n_symbols: usize,
    pub seed: u64,
}

/// Sends the same seeded standard-normal parameter stream through both
/// modulators and measures the envelope PAPR of each. Writes `papr.csv`
/// into the output directory.
pub fn papr_report(config: &ExperimentConfig) -> Result<Vec<PaprRow>> {
    config.validate()?;
    let settings = &config.papr;
    let mut rng = stream(settings.seed, Purpose::Papr, 0, 0);
    let values: Vec<f64> = (0..settings.n_symbols).map(|_| rng.sample(StandardNormal)).collect();

    let spec = config.quantizer(settings.n_levels)?;
    let family = ToneFamily::new(settings.n_levels, config.amplitude)?;
    let mut mfsk = Vec::with_capacity(values.len() * settings.n_levels);
    for &v in &values {
        mfsk.extend(mfsk_modulate(quantize(v, &spec)?, &family)?.samples);
    }
    let mfsk_papr = papr(&envelope_power(&mfsk, Framing::Mfsk(&family))?)?;
    drop(mfsk);

    let mut dsb = Vec::with_capacity(values.len() * config.dsb.n_samples);
    for &v in &values {
        dsb.extend(dsb_modulate(v, config.dsb.n_samples, config.dsb.carrier_cycles)?.samples);
    }
    let dsb_papr = papr(&envelope_power(&dsb, Framing::Dsb(config.dsb))?)?;

    let rows = vec![
        PaprRow {
            scheme: "mfsk",
            papr_db: mfsk_papr,
            n_symbols: settings.n_symbols,
            seed: settings.seed,
        },
        PaprRow {
            scheme: "dsb",
            papr_db: dsb_papr,
            n_symbols: settings.n_symbols,
            seed: settings.seed,
        },
    ];

    fs::create_dir_all(&config.output_dir)?;
    let mut out = fs::File::create(config.output_dir.join(PAPR_FILE))?;
    writeln!(out, "{PAPR_HEADER}")?;
    for r in &rows {
        writeln!(out, "{},{},{},{}", r.scheme, fmt_sig(r.papr_db), r.n_symbols, r.seed)?;
    }
    Ok(rows)
}
