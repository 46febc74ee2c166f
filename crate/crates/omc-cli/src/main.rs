//! Command-line front end: figure-preset runs, spectra, amplitude time
//! series, dressed-state tables and the norm-flux ledger, serialized as
//! CSV/JSON (and optionally a standalone SVG plot).

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use omc_core::dressed::{closed_form_vectors, diagonalize_truncated, transition_table};
use omc_core::{
    build_h_dnh, decompose, find_peaks, flux_ledger, make_initial_state, spectrum_series,
    thermal_spectrum, thermal_weights, Branch, BranchMode, PureState, SpectrumOptions,
    SpectrumResult,
};

use config::{preset, BackendChoice, RunConfig, PRESET_NAMES};
use output::{
    dressed_json, evolution_csv, ledger_json, peaks_json, spectrum_csv, spectrum_svg,
    to_pretty_json, write_atomic,
};

#[derive(Parser)]
#[command(
    name = "omc",
    version,
    about = "Emission spectra of an atom coupled to an optomechanical cavity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full figure run: spectrum.csv, peaks.json, dressed.json,
    /// ledger.json, meta.json and optionally plot.svg.
    Run(SpectrumArgs),
    /// Spectrum N(t; delta) as CSV (stdout, or spectrum.csv under --out).
    Spectrum(SpectrumArgs),
    /// Conditional amplitude time series as CSV.
    Evolve(EvolveArgs),
    /// Dressed levels, closed forms (single-phonon) and transition table.
    Dressed(CommonArgs),
    /// Norm-flux conservation ledger.
    Ledger(LedgerArgs),
    /// List built-in presets with their parameter blocks.
    Presets,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON config file; unset keys fall back to the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset: fig2, fig4 or fig5.
    #[arg(long)]
    preset: Option<String>,
    /// Atom-cavity coupling.
    #[arg(long)]
    ga: Option<f64>,
    /// Optomechanical coupling.
    #[arg(long)]
    gm: Option<f64>,
    /// Cavity leak rate.
    #[arg(long)]
    kappa: Option<f64>,
    /// Spontaneous emission rate.
    #[arg(long)]
    gamma_a: Option<f64>,
    /// Mechanical damping rate.
    #[arg(long)]
    gamma_m: Option<f64>,
    /// Mean thermal phonon number.
    #[arg(long)]
    mbar: Option<f64>,
    /// Atom-cavity detuning.
    #[arg(long)]
    delta_a: Option<f64>,
    /// Phonon-number truncation.
    #[arg(long)]
    mmax: Option<usize>,
    /// Initial phonon number of the start state.
    #[arg(long)]
    m0: Option<usize>,
    /// Output directory; most subcommands print to stdout without it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SpectrumArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sampling time (repeatable); replaces the preset times.
    #[arg(long = "time")]
    times: Vec<f64>,
    /// Filter bandwidth.
    #[arg(long)]
    filter_gamma: Option<f64>,
    /// Lower edge of the detuning grid.
    #[arg(long)]
    delta_min: Option<f64>,
    /// Upper edge of the detuning grid.
    #[arg(long)]
    delta_max: Option<f64>,
    /// Number of detuning grid points.
    #[arg(long)]
    delta_points: Option<usize>,
    /// Branch-sum mode.
    #[arg(long, value_parser = ["incoherent", "coherent"])]
    mode: Option<String>,
    /// Inner-integral backend.
    #[arg(long, value_parser = ["closed", "quadrature"])]
    backend: Option<String>,
    /// Average over the thermal initial phonon distribution.
    #[arg(long)]
    thermal: bool,
    /// Also write a self-contained plot.svg (needs --out).
    #[arg(long)]
    svg: bool,
}

#[derive(Args, Clone)]
struct EvolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Final time of the series.
    #[arg(long, default_value_t = 20.0)]
    tmax: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 2001)]
    points: usize,
}

#[derive(Args, Clone)]
struct LedgerArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Integration horizon.
    #[arg(long, default_value_t = 120.0)]
    tmax: f64,
    /// Simpson panels.
    #[arg(long, default_value_t = 4000)]
    steps: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = if err.downcast_ref::<omc_core::Error>().is_some() {
                "model"
            } else {
                "config"
            };
            let payload = json!({"error": {"kind": kind, "message": format!("{err:#}")}});
            eprintln!("{payload}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Evolve(args) => cmd_evolve(args),
        Command::Dressed(args) => cmd_dressed(args),
        Command::Ledger(args) => cmd_ledger(args),
        Command::Presets => cmd_presets(),
    }
}

fn resolve_common(common: &CommonArgs) -> Result<RunConfig> {
    let mut config = RunConfig::load(common.preset.as_deref(), common.config.as_deref())?;
    let p = &mut config.params;
    if let Some(v) = common.ga {
        p.g_a = v;
    }
    if let Some(v) = common.gm {
        p.g_m = v;
    }
    if let Some(v) = common.kappa {
        p.kappa = v;
    }
    if let Some(v) = common.gamma_a {
        p.gamma_a = v;
    }
    if let Some(v) = common.gamma_m {
        p.gamma_m = v;
    }
    if let Some(v) = common.mbar {
        p.mbar = v;
    }
    if let Some(v) = common.delta_a {
        p.delta_a = v;
    }
    if let Some(v) = common.mmax {
        p.m_max = v;
    }
    if let Some(v) = common.m0 {
        config.initial_state.m0 = v;
    }
    Ok(config)
}

fn resolve_spectrum(args: &SpectrumArgs) -> Result<RunConfig> {
    let mut config = resolve_common(&args.common)?;
    if !args.times.is_empty() {
        config.times = args.times.clone();
    }
    if let Some(v) = args.filter_gamma {
        config.filter.gamma = v;
    }
    if let Some(v) = args.delta_min {
        config.filter.delta_min = v;
    }
    if let Some(v) = args.delta_max {
        config.filter.delta_max = v;
    }
    if let Some(v) = args.delta_points {
        config.filter.delta_points = v;
    }
    if let Some(mode) = &args.mode {
        config.mode = match mode.as_str() {
            "coherent" => BranchMode::CoherentAsPrinted,
            _ => BranchMode::Incoherent,
        };
    }
    if let Some(backend) = &args.backend {
        config.backend = match backend.as_str() {
            "quadrature" => BackendChoice::Quadrature,
            _ => BackendChoice::Closed,
        };
    }
    if args.thermal {
        config.thermal = true;
    }
    Ok(config)
}

fn report_warnings(config: &RunConfig) -> Result<()> {
    for warning in config.validated()? {
        eprintln!("warning: {warning}");
    }
    if config.thermal {
        let weights = thermal_weights(config.params.mbar, config.params.m_max)?;
        if weights.tail_mass >= 1e-3 {
            eprintln!(
                "warning: thermal occupation beyond the phonon cutoff is {:.3e}; increase m_max",
                weights.tail_mass
            );
        }
    }
    Ok(())
}

fn initial_state(config: &RunConfig) -> Result<PureState> {
    Ok(make_initial_state(
        config.initial_state.basis_index(),
        &config.params,
    )?)
}

fn compute_spectrum(config: &RunConfig) -> Result<SpectrumResult> {
    let filter = config.filter.build()?;
    let options = SpectrumOptions::default();
    let result = if config.thermal {
        thermal_spectrum(
            &config.params,
            &filter,
            &config.times,
            config.mode,
            config.backend.to_backend(),
            &options,
        )?
    } else {
        let psi0 = initial_state(config)?;
        spectrum_series(
            &config.params,
            &psi0,
            &filter,
            &config.times,
            config.mode,
            config.backend.to_backend(),
            &options,
        )?
    };
    Ok(result)
}

fn meta_json(config: &RunConfig) -> serde_json::Value {
    json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(config).expect("serializable config"),
    })
}

fn require_out(common: &CommonArgs) -> Result<&Path> {
    common
        .out
        .as_deref()
        .context("--out DIR is required for this subcommand")
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    write_atomic(path, &to_pretty_json(value))
}

fn cmd_run(args: SpectrumArgs) -> Result<()> {
    let config = resolve_spectrum(&args)?;
    report_warnings(&config)?;
    let out = require_out(&args.common)?;

    let result = compute_spectrum(&config)?;
    write_atomic(&out.join("spectrum.csv"), &spectrum_csv(&result))?;

    let per_time: Vec<_> = result
        .times
        .iter()
        .zip(&result.values)
        .map(|(&t, row)| {
            find_peaks(&result.delta_grid, row, config.prominence_fraction).map(|set| (t, set))
        })
        .collect::<Result<_, _>>()?;
    write_json(
        &out.join("peaks.json"),
        &peaks_json(config.prominence_fraction, &per_time),
    )?;

    write_json(&out.join("dressed.json"), &dressed_document(&config)?)?;

    let t_ledger = 6.0 * config.times.last().copied().unwrap_or(20.0);
    let ledger = compute_ledger(&config, t_ledger, 4000)?;
    write_json(&out.join("ledger.json"), &ledger_json(&ledger))?;

    write_json(&out.join("meta.json"), &meta_json(&config))?;

    if args.svg {
        write_atomic(&out.join("plot.svg"), &spectrum_svg(&result))?;
    }
    println!(
        "wrote spectrum.csv, peaks.json, dressed.json, ledger.json, meta.json{} to {}",
        if args.svg { ", plot.svg" } else { "" },
        out.display()
    );
    Ok(())
}

fn cmd_spectrum(args: SpectrumArgs) -> Result<()> {
    let config = resolve_spectrum(&args)?;
    report_warnings(&config)?;
    let result = compute_spectrum(&config)?;
    let csv = spectrum_csv(&result);
    match &args.common.out {
        Some(out) => {
            write_atomic(&out.join("spectrum.csv"), &csv)?;
            write_json(&out.join("meta.json"), &meta_json(&config))?;
            if args.svg {
                write_atomic(&out.join("plot.svg"), &spectrum_svg(&result))?;
            }
            println!("wrote spectrum.csv to {}", out.display());
        }
        None => {
            if args.svg {
                bail!("--svg needs --out DIR");
            }
            print!("{csv}");
        }
    }
    Ok(())
}

fn cmd_evolve(args: EvolveArgs) -> Result<()> {
    let config = resolve_common(&args.common)?;
    report_warnings(&config)?;
    if args.points < 2 || args.tmax <= 0.0 || args.tmax.is_nan() {
        bail!("evolve needs --tmax > 0 and --points >= 2");
    }
    let cache = decompose(&build_h_dnh(&config.params))?;
    let psi0 = initial_state(&config)?;
    let step = args.tmax / (args.points - 1) as f64;
    let grid: Vec<f64> = (0..args.points).map(|i| i as f64 * step).collect();
    let series = cache.amplitude_series(&psi0, &grid)?;
    let csv = evolution_csv(&series);
    match &args.common.out {
        Some(out) => {
            write_atomic(&out.join("evolution.csv"), &csv)?;
            write_json(&out.join("meta.json"), &meta_json(&config))?;
            println!("wrote evolution.csv to {}", out.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn dressed_document(config: &RunConfig) -> Result<serde_json::Value> {
    let dressed = diagonalize_truncated(&config.params, config.params.m_max)?;
    // The transition weights are taken from the dominant start state; for
    // thermal runs that is the phonon-ground start.
    let table_state = if config.thermal {
        make_initial_state(
            omc_core::BasisIndex::new(Branch::AtomExcited, 0),
            &config.params,
        )?
    } else {
        initial_state(config)?
    };
    let table = transition_table(&dressed, &table_state)?;
    let closed = if config.params.m_max == 1 && config.params.delta_a == 0.0 {
        Some(closed_form_vectors(&config.params)?)
    } else {
        None
    };
    Ok(dressed_json(&dressed, &table, closed.as_ref()))
}

fn cmd_dressed(common: CommonArgs) -> Result<()> {
    let config = resolve_common(&common)?;
    report_warnings(&config)?;
    let document = dressed_document(&config)?;
    match &common.out {
        Some(out) => {
            write_json(&out.join("dressed.json"), &document)?;
            write_json(&out.join("meta.json"), &meta_json(&config))?;
            println!("wrote dressed.json to {}", out.display());
        }
        None => println!("{}", to_pretty_json(&document).trim_end()),
    }
    Ok(())
}

fn compute_ledger(config: &RunConfig, tmax: f64, steps: usize) -> Result<omc_core::FluxLedger> {
    let cache = decompose(&build_h_dnh(&config.params))?;
    let psi0 = initial_state(config)?;
    Ok(flux_ledger(&cache, &psi0, &config.params, tmax, steps)?)
}

fn cmd_ledger(args: LedgerArgs) -> Result<()> {
    let config = resolve_common(&args.common)?;
    report_warnings(&config)?;
    let ledger = compute_ledger(&config, args.tmax, args.steps)?;
    let document = ledger_json(&ledger);
    match &args.common.out {
        Some(out) => {
            write_json(&out.join("ledger.json"), &document)?;
            write_json(&out.join("meta.json"), &meta_json(&config))?;
            println!("wrote ledger.json to {}", out.display());
        }
        None => println!("{}", to_pretty_json(&document).trim_end()),
    }
    Ok(())
}

fn cmd_presets() -> Result<()> {
    let mut entries = serde_json::Map::new();
    for name in PRESET_NAMES {
        entries.insert(
            name.to_string(),
            serde_json::to_value(preset(name)?).expect("serializable preset"),
        );
    }
    println!(
        "{}",
        to_pretty_json(&serde_json::Value::Object(entries)).trim_end()
    );
    Ok(())
}
