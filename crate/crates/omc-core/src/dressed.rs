//! Dressed states of the lossless Hamiltonian: closed-form single-phonon
//! eigensystem, numerical diagonalization at any phonon cutoff, and the
//! transition table predicting spectrum peak locations and relative
//! heights.
//!
//! All energies are referenced to the ground level `omega_g = 0` and, for
//! the excited manifold, to the rotating frame of the cavity, so a
//! transition frequency `E_k - m` is directly the spectral detuning `Δ`.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use serde::Serialize;

use crate::basis::{BasisIndex, PureState};
use crate::error::Error;
use crate::hamiltonian::build_h_sys;
use crate::model::SystemParams;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// The four excited single-phonon levels labeled by their `(±, ±)` sign
/// pair, plus the two ground levels `{0, ω_M}`.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormLevels {
    /// `(outer, inner, energy)` in ascending energy order:
    /// `(-,+) < (-,-) < (+,-) < (+,+)`.
    pub excited: [(Sign, Sign, f64); 4],
    pub ground: [f64; 2],
}

impl ClosedFormLevels {
    pub fn energies(&self) -> [f64; 4] {
        [
            self.excited[0].2,
            self.excited[1].2,
            self.excited[2].2,
            self.excited[3].2,
        ]
    }
}

/// Shared inner radical `R = sqrt(4 g_a² g_m² + g_m⁴ + 4 g_a²)` (with
/// `ω_M = 1`).
fn inner_radical(g_a: f64, g_m: f64) -> f64 {
    (4.0 * g_a * g_a * g_m * g_m + g_m.powi(4) + 4.0 * g_a * g_a).sqrt()
}

/// `X_± = 4 g_a² + 2 g_m² + 1 ± 2R`.
fn x_of(g_a: f64, g_m: f64, inner: Sign) -> f64 {
    4.0 * g_a * g_a + 2.0 * g_m * g_m + 1.0 + inner.factor() * 2.0 * inner_radical(g_a, g_m)
}

/// Single-phonon excited energy `E_{±±} = (1 ± sqrt(X_±)) / 2`.
fn level(g_a: f64, g_m: f64, outer: Sign, inner: Sign) -> f64 {
    0.5 * (1.0 + outer.factor() * x_of(g_a, g_m, inner).sqrt())
}

fn require_resonant(params: &SystemParams) -> Result<(), Error> {
    if params.delta_a != 0.0 {
        return Err(Error::UnsupportedRegime(format!(
            "closed forms are derived on resonance; delta_a = {}",
            params.delta_a
        )));
    }
    Ok(())
}

/// Closed-form single-phonon levels. Requires `delta_a = 0`.
pub fn closed_form_levels(params: &SystemParams) -> Result<ClosedFormLevels, Error> {
    require_resonant(params)?;
    let (g_a, g_m) = (params.g_a, params.g_m);
    Ok(ClosedFormLevels {
        excited: [
            (
                Sign::Minus,
                Sign::Plus,
                level(g_a, g_m, Sign::Minus, Sign::Plus),
            ),
            (
                Sign::Minus,
                Sign::Minus,
                level(g_a, g_m, Sign::Minus, Sign::Minus),
            ),
            (
                Sign::Plus,
                Sign::Minus,
                level(g_a, g_m, Sign::Plus, Sign::Minus),
            ),
            (
                Sign::Plus,
                Sign::Plus,
                level(g_a, g_m, Sign::Plus, Sign::Plus),
            ),
        ],
        ground: [0.0, 1.0],
    })
}

/// One closed-form dressed state in the `|e,0,1> = 1` gauge.
///
/// The component ratios follow from the eigenvalue relations of the
/// single-phonon block:
///
/// ```text
/// coeff_photon1 (|g,1,1>) = (E - 1) / g_a
/// coeff_photon0 (|g,1,0>) = (g_a² - (E - 1)²) / (g_a g_m)
/// coeff_atom0   (|e,0,0>) = g_a coeff_photon0 / E
/// ```
///
/// Expanded in radicals, `coeff_photon1 = (-1 ± sqrt(X_±))/(2 g_a)` with
/// the outer/inner signs of the state label, and `coeff_photon0 =
/// (-g_m² - 1 ∓ R ± sqrt(X_±))/(2 g_a g_m)` with the radical term signed
/// by the outer label and `R` by the opposite of the inner label; the
/// assignments were fixed against the numerical eigenbasis (see tests).
#[derive(Debug, Clone, Serialize)]
pub struct DressedVector {
    pub outer: Sign,
    pub inner: Sign,
    pub energy: f64,
    pub coeff_atom0: f64,
    pub coeff_photon0: f64,
    pub coeff_photon1: f64,
    /// Unit vector over `(|e,0,0>, |e,0,1>, |g,1,0>, |g,1,1>)`, the flat
    /// basis order at `m_max = 1`.
    pub normalized: [f64; 4],
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormVectors {
    /// States in ascending energy order, matching [`ClosedFormLevels`].
    pub states: Vec<DressedVector>,
    /// Set when a degenerate denominator (`g_a g_m = 0` or `E = 0`) forced
    /// the numerical eigenbasis to be reported instead of the radicals.
    pub used_numerical_fallback: bool,
}

/// Closed-form single-phonon eigenvectors. Requires `delta_a = 0`; falls
/// back to the numerical eigenbasis (flagged in the result) when the
/// radical expressions hit a vanishing denominator.
pub fn closed_form_vectors(params: &SystemParams) -> Result<ClosedFormVectors, Error> {
    require_resonant(params)?;
    let levels = closed_form_levels(params)?;
    let (g_a, g_m) = (params.g_a, params.g_m);

    let degenerate = g_a * g_m == 0.0 || levels.excited.iter().any(|&(_, _, e)| e.abs() < 1e-9);
    if degenerate {
        let numerical = diagonalize_truncated(params, 1)?;
        let states = levels
            .excited
            .iter()
            .enumerate()
            .map(|(k, &(outer, inner, energy))| {
                let col = numerical.vectors.column(k);
                let normalized = [col[0].re, col[1].re, col[2].re, col[3].re];
                DressedVector {
                    outer,
                    inner,
                    energy,
                    coeff_atom0: normalized[0],
                    coeff_photon0: normalized[2],
                    coeff_photon1: normalized[3],
                    normalized,
                }
            })
            .collect();
        return Ok(ClosedFormVectors {
            states,
            used_numerical_fallback: true,
        });
    }

    let states = levels
        .excited
        .iter()
        .map(|&(outer, inner, energy)| {
            let b = (energy - 1.0) / g_a;
            let a = (g_a * g_a - (energy - 1.0) * (energy - 1.0)) / (g_a * g_m);
            let atom0 = g_a * a / energy;
            let raw = [atom0, 1.0, a, b];
            let norm = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
            DressedVector {
                outer,
                inner,
                energy,
                coeff_atom0: atom0,
                coeff_photon0: a,
                coeff_photon1: b,
                normalized: [raw[0] / norm, raw[1] / norm, raw[2] / norm, raw[3] / norm],
            }
        })
        .collect();
    Ok(ClosedFormVectors {
        states,
        used_numerical_fallback: false,
    })
}

/// Dressed levels and eigenvectors of the lossless Hamiltonian at a given
/// phonon cutoff, plus the zero-excitation ground ladder.
#[derive(Debug, Clone)]
pub struct DressedSystem {
    /// Excited-manifold levels, ascending, rotating-frame units.
    pub levels: Vec<f64>,
    /// Orthonormal eigenvector columns over the flat single-excitation
    /// basis, matching `levels`; column phases fixed so the largest
    /// component is real positive.
    pub vectors: Array2<C64>,
    /// Ground levels `{0, 1, ..., m_max}`.
    pub ground_levels: Vec<f64>,
    /// Reference ground energy.
    pub omega_g: f64,
}

/// Hermitian diagonalization of the single-excitation block of the
/// lossless Hamiltonian (loss rates never enter it) at cutoff `m_max`.
pub fn diagonalize_truncated(params: &SystemParams, m_max: usize) -> Result<DressedSystem, Error> {
    let lossless = SystemParams {
        m_max,
        ..params.clone()
    };
    let (levels_raw, mut vectors) = build_h_sys(&lossless)
        .matrix
        .eigh(UPLO::Lower)
        .map_err(|e| Error::LinAlg(format!("Hermitian diagonalization failed: {e}")))?;

    // Deterministic gauge: rotate each column so its largest component is
    // real and positive.
    for mut col in vectors.columns_mut() {
        let (mut best, mut best_norm) = (C64::new(1.0, 0.0), 0.0);
        for v in col.iter() {
            if v.norm() > best_norm {
                best_norm = v.norm();
                best = *v;
            }
        }
        if best_norm > 0.0 {
            let phase = best / best_norm;
            let correction = phase.conj();
            col.mapv_inplace(|v| v * correction);
        }
    }

    Ok(DressedSystem {
        levels: levels_raw.to_vec(),
        vectors,
        ground_levels: (0..=m_max).map(|m| m as f64).collect(),
        omega_g: 0.0,
    })
}

impl DressedSystem {
    pub fn m_max(&self) -> usize {
        self.ground_levels.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }
}

/// One photonic transition `excited level -> ground phonon level`.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionRow {
    /// Index into the ascending excited levels.
    pub upper: usize,
    /// Ground phonon number.
    pub lower: usize,
    /// `E_upper - lower`, i.e. the spectral detuning of the emitted photon.
    pub frequency: f64,
    /// `|<k|ψ0>|² |<g,0,m| a |k>|²`, max-normalized.
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionTable {
    pub rows: Vec<TransitionRow>,
}

impl TransitionTable {
    /// Rows with weight at least `threshold`, sorted by frequency.
    pub fn significant(&self, threshold: f64) -> Vec<&TransitionRow> {
        let mut rows: Vec<&TransitionRow> =
            self.rows.iter().filter(|r| r.weight >= threshold).collect();
        rows.sort_by(|a, b| a.frequency.partial_cmp(&b.frequency).unwrap());
        rows
    }
}

/// Transition frequencies and relative weights from every excited dressed
/// state to every ground phonon level. The weight combines how much of
/// the initial state lives in the excited level with the photonic matrix
/// element down to that ground level.
pub fn transition_table(
    dressed: &DressedSystem,
    psi0: &PureState,
) -> Result<TransitionTable, Error> {
    if psi0.dim() != dressed.dim() {
        return Err(Error::DimensionMismatch {
            expected: dressed.dim(),
            got: psi0.dim(),
        });
    }
    let m_max = dressed.m_max();
    let mut rows = Vec::with_capacity(dressed.dim() * (m_max + 1));
    let mut max_weight = 0.0f64;
    for k in 0..dressed.dim() {
        let col = dressed.vectors.column(k);
        let overlap: C64 = col
            .iter()
            .zip(psi0.amps().iter())
            .map(|(v, a)| v.conj() * a)
            .sum();
        let occupancy = overlap.norm_sqr();
        for m in 0..=m_max {
            let photon_row = BasisIndex::photon(m).flat(m_max).expect("m <= m_max");
            let emission = col[photon_row].norm_sqr();
            let weight = occupancy * emission;
            max_weight = max_weight.max(weight);
            rows.push(TransitionRow {
                upper: k,
                lower: m,
                frequency: dressed.levels[k] - dressed.ground_levels[m],
                weight,
            });
        }
    }
    if max_weight > 0.0 {
        for row in &mut rows {
            row.weight /= max_weight;
        }
    }
    Ok(TransitionTable { rows })
}

/// Excited-level sets for a list of phonon cutoffs, for convergence
/// inspection of the truncated diagonalization.
pub fn convergence_report(
    params: &SystemParams,
    m_max_values: &[usize],
) -> Result<Vec<(usize, Vec<f64>)>, Error> {
    m_max_values
        .iter()
        .map(|&m| Ok((m, diagonalize_truncated(params, m)?.levels)))
        .collect()
}
