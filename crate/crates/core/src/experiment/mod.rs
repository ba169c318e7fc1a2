//! Experiment runner behind the `tbma` command line tool.

mod config;
mod papr;
mod svg;

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::dataio::Dataset;
use crate::feel::{run_feel, Aggregation, RoundRecord};
use crate::{Error, Result};

pub use config::{
    parse_config, DatasetSource, ExperimentConfig, MnistSource, PaprSettings, Sweep, SyntheticSource,
};
pub use papr::{papr_report, PaprRow, PAPR_HEADER};

pub const METRICS_HEADER: &str = "aggregation,n_levels,snr_db,seed,round,accuracy,agg_error_vs_ideal,fallback_count,saturation_fraction,wall_ms";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CHART_FILE: &str = "accuracy_vs_snr.svg";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.json";

/// One `(aggregation, n_levels, snr_db, seed)` trial of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub aggregation: Aggregation,
    pub n_levels: usize,
    pub snr_db: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub point: GridPoint,
    pub records: Vec<RoundRecord>,
    pub error: Option<String>,
}

/// Sweep order: aggregation, then levels, then SNR, then seed.
pub fn grid(config: &ExperimentConfig) -> Vec<GridPoint> {
    let s = &config.sweep;
    let mut out = Vec::new();
    for &aggregation in &s.aggregation {
        for &n_levels in &s.n_levels {
            for &snr_db in &s.snr_db {
                for &seed in &s.seeds {
                    out.push(GridPoint {
                        aggregation,
                        n_levels,
                        snr_db,
                        seed,
                    });
                }
            }
        }
    }
    out
}

/// Formats with 6 significant digits, `%g` style.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let fixed = format!("{:.*}", (5 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn metrics_rows(result: &TrialResult) -> Vec<String> {
    let p = &result.point;
    result
        .records
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                p.aggregation.as_str(),
                p.n_levels,
                fmt_sig(p.snr_db),
                p.seed,
                r.round,
                fmt_sig(r.accuracy),
                fmt_sig(r.agg_error_vs_ideal),
                r.fallback_count,
                fmt_sig(r.saturation_fraction),
                r.wall_ms
            )
        })
        .collect()
}

pub fn run_trial(config: &ExperimentConfig, point: GridPoint, train: &Dataset, test: &Dataset) -> TrialResult {
    let feel = match config.feel_config(point.aggregation, point.n_levels, point.snr_db, point.seed) {
        Ok(f) => f,
        Err(e) => {
            return TrialResult {
                point,
                records: Vec::new(),
                error: Some(e.to_string()),
            }
        }
    };
    match run_feel(&feel, train, test) {
        Ok(records) => TrialResult {
            point,
            records,
            error: None,
        },
        Err(failure) => TrialResult {
            point,
            error: Some(failure.to_string()),
            records: failure.records,
        },
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub trials: Vec<TrialResult>,
}

impl ExperimentOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &TrialResult> {
        self.trials.iter().filter(|t| t.error.is_some())
    }
}

/// Runs every grid point and writes `metrics.csv`, the SVG chart and the
/// resolved configuration into `config.output_dir`.
///
/// Grid points run on a pool of `threads` workers (`0` picks the rayon
/// default). Output order and content do not depend on the thread count.
/// A failing trial keeps its completed rounds and does not stop the others.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<ExperimentOutcome> {
    config.validate()?;
    let out_dir = &config.output_dir;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(RESOLVED_CONFIG_FILE), config.to_json())?;

    let (train, test) = config.dataset.load()?;
    let points = grid(config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let trials: Vec<TrialResult> =
        pool.install(|| points.par_iter().map(|&p| run_trial(config, p, &train, &test)).collect());

    write_metrics(&out_dir.join(METRICS_FILE), &trials)?;
    fs::write(out_dir.join(CHART_FILE), svg::accuracy_chart(&trials))?;
    Ok(ExperimentOutcome { trials })
}

fn write_metrics(path: &Path, trials: &[TrialResult]) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{METRICS_HEADER}")?;
    for t in trials {
        for row in metrics_rows(t) {
            writeln!(out, "{row}")?;
        }
    }
    out.flush()?;
    Ok(())
}
