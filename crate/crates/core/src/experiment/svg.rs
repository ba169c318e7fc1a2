//! Minimal SVG line chart: final-round accuracy against SNR, one series per
//! `(aggregation, n_levels)`, mean over seeds with min/max error bars.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::TrialResult;
use crate::feel::Aggregation;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub snr_db: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Final-round accuracy per series, sorted by SNR. Trials that never
/// finished a round are skipped.
pub fn final_accuracy(trials: &[TrialResult]) -> BTreeMap<(Aggregation, usize), Vec<SeriesPoint>> {
    let mut buckets: BTreeMap<(Aggregation, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for t in trials {
        if t.error.is_some() {
            continue;
        }
        if let Some(last) = t.records.last() {
            buckets
                .entry((t.point.aggregation, t.point.n_levels))
                .or_default()
                .push((t.point.snr_db, last.accuracy));
        }
    }
    buckets
        .into_iter()
        .map(|(key, mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut series: Vec<SeriesPoint> = Vec::new();
            let mut i = 0;
            while i < pts.len() {
                let snr = pts[i].0;
                let group: Vec<f64> = pts[i..].iter().take_while(|p| p.0 == snr).map(|p| p.1).collect();
                i += group.len();
                series.push(SeriesPoint {
                    snr_db: snr,
                    mean: group.iter().sum::<f64>() / group.len() as f64,
                    min: group.iter().copied().fold(f64::INFINITY, f64::min),
                    max: group.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                });
            }
            (key, series)
        })
        .collect()
}

pub fn accuracy_chart(trials: &[TrialResult]) -> String {
    let series = final_accuracy(trials);
    let snrs: Vec<f64> = series.values().flatten().map(|p| p.snr_db).collect();
    let (mut x_lo, mut x_hi) = snrs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !x_lo.is_finite() {
        (x_lo, x_hi) = (0.0, 1.0);
    }
    if x_hi == x_lo {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (1.0 - y.clamp(0.0, 1.0)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let y = i as f64 / 5.0;
        let py = sy(y);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{y:.1}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            py + 4.0
        );
    }
    let mut ticks: Vec<f64> = snrs.clone();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for x in ticks {
        let px = sx(x);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">SNR (dB)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">final test accuracy</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, ((agg, n), pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.snr_db), sy(p.mean))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for p in pts {
            let (px, lo, hi) = (sx(p.snr_db), sy(p.min), sy(p.max));
            let _ = writeln!(
                s,
                r#"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{hi:.2}" stroke="{color}"/><circle cx="{px:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sy(p.mean)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let label = match agg {
            Aggregation::Ideal => "ideal".to_string(),
            other => format!("{} N={n}", other.as_str()),
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{label}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}
