//! Acceptance suite: one test per numbered criterion, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Reference configuration ("strong-strong coupling point"): resonant
//! atom, g_a = 4, g_m = 1.2, kappa = 0.5, filter bandwidth 0.1 on 801
//! detunings over [-8, 8], initial state |e,0,0>, up to ten phonons.

use omc_core::dressed::{closed_form_levels, diagonalize_truncated, transition_table};
use omc_core::{
    build_h_nh, decompose, find_peaks, flux_ledger, make_initial_state, spectrum_series,
    thermal_spectrum, thermal_weights, BasisIndex, BranchMode, FilterSpec, SpectrumBackend,
    SpectrumOptions, SystemParams,
};
use rand::{Rng, SeedableRng};

fn pass(number: u32, label: &str) {
    println!("[acceptance] criterion {number:02} ({label}): PASS");
}

fn check(number: u32, label: &str, ok: bool, detail: &str) {
    if ok {
        pass(number, label);
    } else {
        println!("[acceptance] criterion {number:02} ({label}): FAIL");
        panic!("criterion {number} ({label}) failed:\n{detail}");
    }
}

fn reference_params() -> SystemParams {
    SystemParams::default()
}

fn reference_filter() -> FilterSpec {
    FilterSpec::default()
}

fn options() -> SpectrumOptions {
    SpectrumOptions::default()
}

fn sweep(
    params: &SystemParams,
    filter: &FilterSpec,
    times: &[f64],
    mode: BranchMode,
    backend: SpectrumBackend,
) -> Vec<Vec<f64>> {
    let psi0 = make_initial_state(BasisIndex::atom(0), params).expect("valid start");
    spectrum_series(params, &psi0, filter, times, mode, backend, &options())
        .expect("sweep succeeds")
        .values
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

// 1. Norm-flux unity: with the photon leak as the only open channel, the
// detected-photon probability integrates to 1 within 1e-4 over T = 120.
#[test]
fn criterion_01_norm_flux_unity() {
    let params = reference_params();
    let cache = decompose(&build_h_nh(&params)).expect("diagonalizable");
    let psi0 = make_initial_state(BasisIndex::atom(0), &params).expect("valid start");
    let ledger = flux_ledger(&cache, &psi0, &params, 120.0, 4000).expect("ledger");
    let detected = *ledger.detected_photon.last().unwrap();
    let deviation = (detected - 1.0).abs();
    println!(
        "[acceptance]   detected = {detected:.9}, truncation leak = {:.3e} (reported separately)",
        ledger.truncation_leak
    );
    check(
        1,
        "norm-flux unity",
        deviation < 1e-4,
        &format!("detected-photon probability {detected} deviates from 1 by {deviation:.3e}"),
    );
}

// 2. Closed-form eigenvalues against the numerical single-phonon
// diagonalization on 200 random coupling draws: max deviation < 1e-10.
#[test]
fn criterion_02_closed_form_eigenvalues() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let mut positive = |upper: f64| loop {
        let v: f64 = rng.gen_range(0.0..=upper);
        if v > 0.0 {
            break v;
        }
    };
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let params = SystemParams {
            g_a: positive(8.0),
            g_m: positive(4.0),
            m_max: 1,
            ..SystemParams::default()
        };
        let closed = closed_form_levels(&params).expect("resonant").energies();
        let numerical = diagonalize_truncated(&params, 1).expect("diagonalizable");
        for (c, n) in closed.iter().zip(numerical.levels.iter()) {
            worst = worst.max((c - n).abs());
        }
    }
    check(
        2,
        "closed-form eigenvalues",
        worst < 1e-10,
        &format!("max |closed - numerical| = {worst:.3e} over 200 draws"),
    );
}

// 3. Jaynes-Cummings recovery: with the mechanical coupling off, the
// stationary spectrum is a doublet at ±4 (within 0.05) with heights
// equal to 2%.
#[test]
fn criterion_03_jc_recovery() {
    let params = SystemParams {
        g_m: 0.0,
        ..reference_params()
    };
    let filter = reference_filter();
    let values = sweep(
        &params,
        &filter,
        &[20.0],
        BranchMode::Incoherent,
        SpectrumBackend::ClosedForm,
    );
    let peaks = find_peaks(&filter.delta_grid, &values[0], 0.05).expect("peaks");
    let detail = format!("peaks: {:?}", peaks.peaks);
    let two = peaks.peaks.len() == 2;
    let located = two
        && (peaks.peaks[0].delta + 4.0).abs() <= 0.05
        && (peaks.peaks[1].delta - 4.0).abs() <= 0.05;
    let heights_equal = two && {
        let (h_left, h_right) = (peaks.peaks[0].height, peaks.peaks[1].height);
        (h_left - h_right).abs() / h_left.max(h_right) <= 0.02
    };
    check(3, "JC recovery", two && located && heights_equal, &detail);
}

// 4. Eight-peak spectrum at the single-phonon truncation: 8 peaks at 1%
// prominence, each within 0.5 Γ = 0.05 of a transition-table frequency,
// with peak-height ordering matching weight ordering.
#[test]
fn criterion_04_eight_peak_spectrum() {
    let params = SystemParams {
        m_max: 1,
        ..reference_params()
    };
    let filter = reference_filter();
    let values = sweep(
        &params,
        &filter,
        &[20.0],
        BranchMode::Incoherent,
        SpectrumBackend::ClosedForm,
    );
    let peaks = find_peaks(&filter.delta_grid, &values[0], 0.01).expect("peaks");

    let psi0 = make_initial_state(BasisIndex::atom(0), &params).expect("valid start");
    let dressed = diagonalize_truncated(&params, 1).expect("diagonalizable");
    let table = transition_table(&dressed, &psi0).expect("table");

    let mut lines = Vec::new();
    lines.push(format!(
        "found {} peaks at 1% prominence:",
        peaks.peaks.len()
    ));
    let mut all_within = true;
    let mut matched_weights = Vec::new();
    for p in &peaks.peaks {
        let (dist, weight) = table
            .rows
            .iter()
            .map(|r| ((r.frequency - p.delta).abs(), r.weight))
            .fold(
                (f64::INFINITY, 0.0),
                |acc, x| if x.0 < acc.0 { x } else { acc },
            );
        all_within &= dist <= 0.05;
        matched_weights.push((p.height, weight));
        lines.push(format!(
            "  peak {:+.4} height {:.4e} -> nearest transition at distance {:.4} (weight {:.3})",
            p.delta, p.height, dist, weight
        ));
    }
    // Height ordering must match weight ordering for the matched pairs.
    let mut by_height = matched_weights.clone();
    by_height.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let ordering_ok = by_height.windows(2).all(|w| w[0].1 >= w[1].1);
    lines.push(format!(
        "height-vs-weight ordering consistent: {ordering_ok}"
    ));
    lines.push(
        "note: both branch-sum modes yield 6 local maxima here; the two lowest-weight \
         transitions ride as shoulders of lines 3-5x stronger 0.55 away"
            .to_string(),
    );

    check(
        4,
        "eight-peak spectrum",
        peaks.peaks.len() == 8 && all_within && ordering_ok,
        &lines.join("\n"),
    );
}

// 5. Sideband spacing: each Rabi peak of the full-truncation stationary
// spectrum has a secondary peak offset by 1.0 ± 0.05.
#[test]
fn criterion_05_sideband_spacing() {
    let params = reference_params();
    let filter = reference_filter();
    let values = sweep(
        &params,
        &filter,
        &[20.0],
        BranchMode::Incoherent,
        SpectrumBackend::ClosedForm,
    );
    let peaks = find_peaks(&filter.delta_grid, &values[0], 0.01).expect("peaks");
    let mut by_height = peaks.peaks.clone();
    by_height.sort_by(|a, b| b.height.partial_cmp(&a.height).unwrap());
    let mains: Vec<f64> = by_height.iter().take(2).map(|p| p.delta).collect();

    let mut lines = Vec::new();
    let mut all_mains_have_sideband = !mains.is_empty();
    for &main in &mains {
        let offsets: Vec<f64> = peaks
            .peaks
            .iter()
            .filter(|p| (p.delta - main).abs() > 1e-9)
            .map(|p| (p.delta - main).abs())
            .collect();
        let best = offsets
            .iter()
            .map(|o| (o - 1.0).abs())
            .fold(f64::INFINITY, f64::min);
        let found = best <= 0.05;
        all_mains_have_sideband &= found;
        lines.push(format!(
            "Rabi peak at {main:+.4}: neighbor offsets {:?}, best |offset - 1| = {best:.4}",
            offsets
                .iter()
                .map(|o| (o * 1e4).round() / 1e4)
                .collect::<Vec<_>>()
        ));
    }
    check(
        5,
        "sideband spacing",
        all_mains_have_sideband,
        &lines.join("\n"),
    );
}

// 6. Temporal emergence: 1 peak at t=1, full Rabi splitting by t=4,
// sidebands by t=10, feature count monotone over {1,2,4,7,10,20}.
// Evaluated in the coherent (as-printed) branch-sum mode, the form the
// time-series figures plot.
#[test]
fn criterion_06_temporal_emergence() {
    let params = reference_params();
    let filter = reference_filter();
    let times = [1.0, 2.0, 4.0, 7.0, 10.0, 20.0];
    let values = sweep(
        &params,
        &filter,
        &times,
        BranchMode::CoherentAsPrinted,
        SpectrumBackend::ClosedForm,
    );
    let counts: Vec<usize> = values
        .iter()
        .map(|row| {
            find_peaks(&filter.delta_grid, row, 0.05)
                .expect("peaks")
                .peaks
                .len()
        })
        .collect();
    let monotone = counts.windows(2).all(|w| w[1] >= w[0]);
    check(
        6,
        "temporal emergence",
        counts[0] == 1 && counts[2] >= 2 && counts[4] >= 4 && monotone,
        &format!("peak counts at 5% prominence over t = {times:?}: {counts:?}"),
    );
}

// 7. Loss suppression: with mechanical damping, spontaneous emission and
// a thermal mirror, the stationary spectrum maximum drops strictly below
// the lossless one and the main doublet moves by less than 2 Γ.
#[test]
fn criterion_07_loss_suppression() {
    let filter = reference_filter();
    let lossless_values = sweep(
        &reference_params(),
        &filter,
        &[20.0],
        BranchMode::Incoherent,
        SpectrumBackend::ClosedForm,
    );
    let lossy_params = SystemParams {
        gamma_m: 0.1,
        gamma_a: 0.4,
        mbar: 0.1,
        ..reference_params()
    };
    let lossy = thermal_spectrum(
        &lossy_params,
        &filter,
        &[20.0],
        BranchMode::Incoherent,
        SpectrumBackend::ClosedForm,
        &options(),
    )
    .expect("thermal sweep");

    let max_lossless = max_of(&lossless_values[0]);
    let max_lossy = max_of(&lossy.values[0]);

    // The Rabi doublet is defined by the lossless run (its two tallest
    // peaks); in the lossy spectrum the matching features are the nearest
    // detected peaks, which must not have moved by more than 2 Γ = 0.2.
    let clean_peaks = find_peaks(&filter.delta_grid, &lossless_values[0], 0.05).expect("peaks");
    let mut by_height = clean_peaks.peaks.clone();
    by_height.sort_by(|a, b| b.height.partial_cmp(&a.height).unwrap());
    let doublet: Vec<f64> = by_height.iter().take(2).map(|p| p.delta).collect();
    let lossy_peaks = find_peaks(&filter.delta_grid, &lossy.values[0], 0.05).expect("peaks");
    let shifts: Vec<f64> = doublet
        .iter()
        .map(|main| {
            lossy_peaks
                .peaks
                .iter()
                .map(|p| (p.delta - main).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let shift_ok = doublet.len() == 2 && shifts.iter().all(|&s| s < 0.2);

    check(
        7,
        "loss suppression",
        max_lossy < max_lossless && shift_ok,
        &format!(
            "lossless max {max_lossless:.4e} vs lossy max {max_lossy:.4e}; \
             doublet {doublet:?} shifted by {shifts:?}"
        ),
    );
}

// 8. Backend equivalence: closed-form and quadrature spectra agree to
// 1e-6 relative on the criteria-3/4/5 parameter sets.
#[test]
fn criterion_08_backend_equivalence() {
    let filter = FilterSpec::uniform(0.1, -8.0, 8.0, 201).expect("grid");
    let sets = [
        (
            "jc (g_m = 0)",
            SystemParams {
                g_m: 0.0,
                ..reference_params()
            },
        ),
        (
            "single phonon",
            SystemParams {
                m_max: 1,
                ..reference_params()
            },
        ),
        ("full truncation", reference_params()),
    ];
    let mut lines = Vec::new();
    let mut all_ok = true;
    for (name, params) in sets {
        let closed = sweep(
            &params,
            &filter,
            &[20.0],
            BranchMode::Incoherent,
            SpectrumBackend::ClosedForm,
        );
        let quad = sweep(
            &params,
            &filter,
            &[20.0],
            BranchMode::Incoherent,
            SpectrumBackend::Quadrature,
        );
        let mut worst = 0.0f64;
        for (a, b) in closed[0].iter().zip(&quad[0]) {
            let scale = a.max(*b);
            if scale > 1e-12 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
        all_ok &= worst < 1e-6;
        lines.push(format!("{name}: max relative difference {worst:.3e}"));
    }
    check(8, "backend equivalence", all_ok, &lines.join("\n"));
}

// 9. Cumulative monotonicity and non-negativity over the full reference
// grid, both branch-sum modes: zero violations.
#[test]
fn criterion_09_cumulative_monotonicity() {
    let params = reference_params();
    let filter = reference_filter();
    let times = [1.0, 2.0, 4.0, 7.0, 10.0, 20.0];
    let mut violations = 0usize;
    for mode in [BranchMode::Incoherent, BranchMode::CoherentAsPrinted] {
        let values = sweep(&params, &filter, &times, mode, SpectrumBackend::ClosedForm);
        for row in &values {
            violations += row.iter().filter(|&&v| v < 0.0).count();
        }
        for later in 1..times.len() {
            for (current, previous) in values[later].iter().zip(&values[later - 1]) {
                if current < previous {
                    violations += 1;
                }
            }
        }
    }
    check(
        9,
        "cumulative monotonicity",
        violations == 0,
        &format!("{violations} violations over the (t, Δ) grid in two modes"),
    );
}

// 10. Thermal weights match the closed Boltzmann formula to 1e-12 and
// cover at least 99.9% of the distribution at the reference truncation.
#[test]
fn criterion_10_thermal_weights() {
    let mut worst = 0.0f64;
    for mbar in [0.0, 0.1, 1.0] {
        let got = thermal_weights(mbar, 10).expect("weights");
        // Independent route: recursive ratio form of the same distribution.
        let mut expected = 1.0 / (1.0 + mbar);
        for m in 0..=10usize {
            worst = worst.max((got.weights[m] - expected).abs());
            expected *= mbar / (1.0 + mbar);
        }
    }
    let coverage: f64 = thermal_weights(0.1, 10)
        .expect("weights")
        .weights
        .iter()
        .sum();
    check(
        10,
        "thermal weights",
        worst < 1e-12 && coverage >= 0.999,
        &format!("max formula deviation {worst:.3e}; coverage at mbar=0.1 is {coverage:.6}"),
    );
}
