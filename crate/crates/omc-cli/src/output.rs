//! Deterministic emitters: CSV/JSON with fixed 12-significant-digit float
//! formatting ('.' decimal separator, '\n' line endings) and a
//! self-contained static SVG plot. Identical config and version produce
//! byte-identical files; writes go through a temp file plus rename.

use anyhow::{Context, Result};
use serde_json::{json, Value};
use std::path::Path;

use omc_core::dressed::{ClosedFormVectors, DressedSystem, TransitionTable};
use omc_core::{AmplitudeSeries, FluxLedger, PeakSet, SpectrumResult};

/// Format with 12 significant digits, trimming trailing zeros; scientific
/// notation outside [1e-4, 1e12).
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let formatted = format!("{:.11e}", x);
    let (mantissa, exp_part) = formatted.split_once('e').expect("exponential form");
    let exp: i32 = exp_part.parse().expect("valid exponent");
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let trimmed = digits.trim_end_matches('0');
    let trimmed = if trimmed.is_empty() { "0" } else { trimmed };
    let sign = if neg { "-" } else { "" };

    if !(-4..12).contains(&exp) {
        let (first, rest) = trimmed.split_at(1);
        if rest.is_empty() {
            format!("{sign}{first}e{exp}")
        } else {
            format!("{sign}{first}.{rest}e{exp}")
        }
    } else if exp >= trimmed.len() as i32 - 1 {
        let padding = "0".repeat((exp - (trimmed.len() as i32 - 1)) as usize);
        format!("{sign}{trimmed}{padding}")
    } else if exp >= 0 {
        let (int_part, frac) = trimmed.split_at(exp as usize + 1);
        format!("{sign}{int_part}.{frac}")
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("{sign}0.{zeros}{trimmed}")
    }
}

/// Round through the 12-significant-digit formatter, for floats embedded
/// in JSON documents.
pub fn round_g12(x: f64) -> f64 {
    fmt_g12(x).parse().expect("round-trip")
}

fn num(x: f64) -> Value {
    json!(round_g12(x))
}

fn num_vec(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Write through a temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

pub fn to_pretty_json(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

/// `spectrum.csv`: one row per (t, delta) pair.
pub fn spectrum_csv(result: &SpectrumResult) -> String {
    let mut out = String::from("t,delta,N\n");
    for (ti, &t) in result.times.iter().enumerate() {
        for (di, &delta) in result.delta_grid.iter().enumerate() {
            out.push_str(&fmt_g12(t));
            out.push(',');
            out.push_str(&fmt_g12(delta));
            out.push(',');
            out.push_str(&fmt_g12(result.values[ti][di]));
            out.push('\n');
        }
    }
    out
}

/// `evolution.csv`: per-time norm and amplitude components.
pub fn evolution_csv(series: &AmplitudeSeries) -> String {
    let m_count = series.data().ncols() / 2;
    let mut header = String::from("t,norm2");
    for m in 0..m_count {
        header.push_str(&format!(",a{m}_re,a{m}_im"));
    }
    for m in 0..m_count {
        header.push_str(&format!(",b{m}_re,b{m}_im"));
    }
    header.push('\n');

    let mut out = header;
    for (i, &t) in series.times().iter().enumerate() {
        let row = series.data().row(i);
        let norm2: f64 = row.iter().map(|a| a.norm_sqr()).sum();
        out.push_str(&fmt_g12(t));
        out.push(',');
        out.push_str(&fmt_g12(norm2));
        for amp in row.iter() {
            out.push(',');
            out.push_str(&fmt_g12(amp.re));
            out.push(',');
            out.push_str(&fmt_g12(amp.im));
        }
        out.push('\n');
    }
    out
}

pub fn peaks_json(prominence_fraction: f64, per_time: &[(f64, PeakSet)]) -> Value {
    json!({
        "prominence_fraction": num(prominence_fraction),
        "per_time": per_time.iter().map(|(t, set)| {
            json!({
                "time": num(*t),
                "peaks": set.peaks.iter().map(|p| json!({
                    "delta": num(p.delta),
                    "height": num(p.height),
                    "prominence": num(p.prominence),
                })).collect::<Vec<_>>(),
            })
        }).collect::<Vec<_>>(),
    })
}

pub fn dressed_json(
    dressed: &DressedSystem,
    table: &TransitionTable,
    closed_form: Option<&ClosedFormVectors>,
) -> Value {
    let closed = closed_form.map(|cf| {
        json!({
            "used_numerical_fallback": cf.used_numerical_fallback,
            "states": cf.states.iter().map(|s| json!({
                "outer": format!("{:?}", s.outer).to_lowercase(),
                "inner": format!("{:?}", s.inner).to_lowercase(),
                "energy": num(s.energy),
                "coeff_atom0": num(s.coeff_atom0),
                "coeff_photon0": num(s.coeff_photon0),
                "coeff_photon1": num(s.coeff_photon1),
                "normalized": num_vec(&s.normalized),
            })).collect::<Vec<_>>(),
        })
    });
    json!({
        "m_max": dressed.m_max(),
        "omega_g": num(dressed.omega_g),
        "levels": num_vec(&dressed.levels),
        "ground_levels": num_vec(&dressed.ground_levels),
        "transitions": table.rows.iter().map(|r| json!({
            "upper": r.upper,
            "lower": r.lower,
            "frequency": num(r.frequency),
            "weight": num(r.weight),
        })).collect::<Vec<_>>(),
        "closed_form": closed.unwrap_or(Value::Null),
    })
}

pub fn ledger_json(ledger: &FluxLedger) -> Value {
    json!({
        "times": num_vec(&ledger.times),
        "norm2": num_vec(&ledger.norm2),
        "detected_photon": num_vec(&ledger.detected_photon),
        "spontaneous_emission": num_vec(&ledger.spontaneous_emission),
        "phonon_loss": num_vec(&ledger.phonon_loss),
        "truncation_leak": num(ledger.truncation_leak),
        "balance_residual": num(ledger.balance_residual),
    })
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#000000",
];

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn nice_ticks(min: f64, max: f64, target: usize) -> Vec<f64> {
    let span = max - min;
    if span <= 0.0 || span.is_nan() {
        return vec![min];
    }
    let raw_step = span / target as f64;
    let magnitude = 10f64.powf(raw_step.log10().floor());
    let normalized = raw_step / magnitude;
    let step = if normalized <= 1.0 {
        1.0
    } else if normalized <= 2.0 {
        2.0
    } else if normalized <= 5.0 {
        5.0
    } else {
        10.0
    } * magnitude;
    let first = (min / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut tick = first;
    while tick <= max + 1e-9 * span {
        // Snap values like -0.0000000000001 to zero for clean labels.
        ticks.push(if tick.abs() < step * 1e-9 { 0.0 } else { tick });
        tick += step;
    }
    ticks
}

/// Static polyline plot of N(Δ) for every requested time.
pub fn spectrum_svg(result: &SpectrumResult) -> String {
    let (width, height) = (960.0, 600.0);
    let (left, right, top, bottom) = (80.0, 30.0, 30.0, 60.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;

    let x_min = *result.delta_grid.first().expect("non-empty grid");
    let x_max = *result.delta_grid.last().expect("non-empty grid");
    let y_max = result
        .values
        .iter()
        .flat_map(|row| row.iter().cloned())
        .fold(0.0f64, f64::max)
        .max(1e-12)
        * 1.05;

    let x_of = |x: f64| left + (x - x_min) / (x_max - x_min) * plot_w;
    let y_of = |y: f64| top + plot_h - y / y_max * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        px(left),
        px(top + plot_h),
        px(left + plot_w),
        px(top + plot_h)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        px(left),
        px(top),
        px(left),
        px(top + plot_h)
    ));

    for tick in nice_ticks(x_min, x_max, 8) {
        let x = x_of(tick);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n",
            px(x),
            px(top + plot_h),
            px(top + plot_h + 6.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
            px(x),
            px(top + plot_h + 22.0),
            fmt_g12(tick)
        ));
    }
    for tick in nice_ticks(0.0, y_max, 5) {
        let y = y_of(tick);
        svg.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\"/>\n",
            px(y),
            px(left - 6.0),
            px(left)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"end\">{}</text>\n",
            px(left - 10.0),
            px(y + 5.0),
            fmt_g12(round_g12(tick))
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"16\" text-anchor=\"middle\">detuning from cavity (units of mechanical frequency)</text>\n",
        px(left + plot_w / 2.0),
        px(height - 12.0)
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-size=\"16\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">filtered counts N</text>\n",
        px(top + plot_h / 2.0),
        px(top + plot_h / 2.0)
    ));

    for (ti, row) in result.values.iter().enumerate() {
        let color = PALETTE[ti % PALETTE.len()];
        let points: Vec<String> = result
            .delta_grid
            .iter()
            .zip(row)
            .map(|(&d, &v)| format!("{},{}", px(x_of(d)), px(y_of(v))))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" fill=\"{color}\">t = {}</text>\n",
            px(left + plot_w - 90.0),
            px(top + 18.0 + 18.0 * ti as f64),
            fmt_g12(result.times[ti])
        ));
    }

    svg.push_str("</svg>\n");
    svg
}
