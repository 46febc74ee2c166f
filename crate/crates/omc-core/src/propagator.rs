//! Exact no-jump evolution via one-time eigendecomposition of the
//! time-independent generator, plus closed-form time integrals of
//! exponentially weighted amplitudes and a norm–flux bookkeeping ledger.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse};
use serde::Serialize;

use crate::basis::{BasisIndex, PureState};
use crate::error::Error;
use crate::hamiltonian::{MatrixKind, OperatorMatrix};
use crate::linalg::fro_norm;
use crate::model::SystemParams;
use crate::numeric::{cumulative_simpson, exp_integral, simpson};
use crate::C64;

/// Maximum allowed relative residual of `V diag(λ) V⁻¹` against the
/// generator before the decomposition is declared unusable.
pub const RECONSTRUCTION_TOL: f64 = 1e-9;

/// Tolerance on `Im(λ) <= 0`: no-jump evolution never amplifies.
pub const GAIN_TOL: f64 = 1e-12;

/// Eigendecomposition of a no-jump generator, with the convention that
/// the evolution factor of mode `k` is `exp(-i λ_k t)`, so decaying modes
/// have `Im(λ_k) < 0`.
#[derive(Debug, Clone)]
pub struct PropagatorCache {
    eigenvalues: Array1<C64>,
    right_vectors: Array2<C64>,
    inverse_vectors: Array2<C64>,
    source: OperatorMatrix,
    condition_estimate: f64,
}

/// Diagonalize a Hermitian or non-Hermitian generator.
///
/// Fails with [`Error::NonDiagonalizable`] when the eigenvector matrix is
/// numerically singular or the reconstruction residual exceeds
/// [`RECONSTRUCTION_TOL`]; callers should fall back to the quadrature
/// spectrum backend in that case.
pub fn decompose(h: &OperatorMatrix) -> Result<PropagatorCache, Error> {
    match h.kind {
        MatrixKind::Hermitian | MatrixKind::NonHermitian => {}
        MatrixKind::Jump => return Err(Error::UnsupportedOperator("Jump")),
    }

    let (eigenvalues, right_vectors) = h
        .matrix
        .eig()
        .map_err(|e| Error::LinAlg(format!("eigendecomposition failed: {e}")))?;
    let inverse_vectors = right_vectors.inv().map_err(|_| Error::NonDiagonalizable {
        residual: f64::INFINITY,
    })?;

    // Reconstruction check: scale columns of V by λ, multiply by V⁻¹.
    let mut scaled = right_vectors.clone();
    for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
        let lambda = eigenvalues[k];
        col.mapv_inplace(|v| v * lambda);
    }
    let reconstructed = scaled.dot(&inverse_vectors);
    let scale = fro_norm(&h.matrix).max(1e-300);
    let residual = fro_norm(&(&reconstructed - &h.matrix)) / scale;
    if residual > RECONSTRUCTION_TOL {
        return Err(Error::NonDiagonalizable { residual });
    }

    let max_gain = eigenvalues
        .iter()
        .map(|l| l.im)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_gain > GAIN_TOL {
        return Err(Error::InvalidParams(format!(
            "generator has an amplifying mode (Im λ = {max_gain:.3e} > 0)"
        )));
    }

    let condition_estimate = fro_norm(&right_vectors) * fro_norm(&inverse_vectors);
    Ok(PropagatorCache {
        eigenvalues,
        right_vectors,
        inverse_vectors,
        source: h.clone(),
        condition_estimate,
    })
}

impl PropagatorCache {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn m_max(&self) -> usize {
        self.dim() / 2 - 1
    }

    pub fn eigenvalues(&self) -> &Array1<C64> {
        &self.eigenvalues
    }

    pub fn right_vectors(&self) -> &Array2<C64> {
        &self.right_vectors
    }

    pub fn inverse_vectors(&self) -> &Array2<C64> {
        &self.inverse_vectors
    }

    pub fn source(&self) -> &OperatorMatrix {
        &self.source
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    fn check_dim(&self, psi0: &PureState) -> Result<(), Error> {
        if psi0.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi0.dim(),
            });
        }
        Ok(())
    }

    /// Modal coefficients `V⁻¹ ψ0`.
    pub(crate) fn mode_coefficients(&self, psi0: &PureState) -> Result<Array1<C64>, Error> {
        self.check_dim(psi0)?;
        Ok(self.inverse_vectors.dot(psi0.amps()))
    }

    /// Weights `w_k = V[row, k] (V⁻¹ ψ0)_k` of the exponential-sum
    /// representation of one amplitude component,
    /// `amps_row(t) = Σ_k w_k exp(-i λ_k t)`.
    pub(crate) fn component_weights(&self, coefficients: &Array1<C64>, row: usize) -> Vec<C64> {
        (0..self.dim())
            .map(|k| self.right_vectors[(row, k)] * coefficients[k])
            .collect()
    }

    /// Evolve `psi0` for a duration `t >= 0`; the output time is
    /// `psi0.time() + t`.
    pub fn propagate(&self, psi0: &PureState, t: f64) -> Result<PureState, Error> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        if t == 0.0 {
            self.check_dim(psi0)?;
            return Ok(psi0.clone());
        }
        let coefficients = self.mode_coefficients(psi0)?;
        let phased: Array1<C64> = coefficients
            .iter()
            .zip(self.eigenvalues.iter())
            .map(|(c, l)| c * (C64::new(0.0, -1.0) * l * t).exp())
            .collect();
        let amps = self.right_vectors.dot(&phased);
        PureState::new(amps, psi0.time() + t)
    }

    /// Amplitudes on an increasing time grid, each point evaluated exactly
    /// (no step accumulation error).
    pub fn amplitude_series(
        &self,
        psi0: &PureState,
        t_grid: &[f64],
    ) -> Result<AmplitudeSeries, Error> {
        if t_grid.is_empty()
            || t_grid[0] < 0.0
            || t_grid.windows(2).any(|w| w[1] <= w[0])
            || t_grid.iter().any(|t| !t.is_finite())
        {
            return Err(Error::BadTimeGrid);
        }
        let coefficients = self.mode_coefficients(psi0)?;
        let mut data = Array2::<C64>::zeros((t_grid.len(), self.dim()));
        for (i, &t) in t_grid.iter().enumerate() {
            if t == 0.0 {
                data.row_mut(i).assign(psi0.amps());
                continue;
            }
            let phased: Array1<C64> = coefficients
                .iter()
                .zip(self.eigenvalues.iter())
                .map(|(c, l)| c * (C64::new(0.0, -1.0) * l * t).exp())
                .collect();
            let amps = self.right_vectors.dot(&phased);
            data.row_mut(i).assign(&amps);
        }
        Ok(AmplitudeSeries {
            times: t_grid.to_vec(),
            data,
        })
    }

    /// Closed-form `∫_0^T e^{α s} amps_component(s) ds`.
    ///
    /// Each exponential-sum term integrates to
    /// `w_k (e^{(α - i λ_k) T} - 1)/(α - i λ_k)`, with the series limit of
    /// the removable singularity used when `|α - i λ_k|` is small.
    pub fn weighted_time_integral(
        &self,
        psi0: &PureState,
        component: BasisIndex,
        alpha: C64,
        t_final: f64,
    ) -> Result<C64, Error> {
        if t_final < 0.0 {
            return Err(Error::NegativeTime(t_final));
        }
        let row = component.flat(self.m_max())?;
        let coefficients = self.mode_coefficients(psi0)?;
        let weights = self.component_weights(&coefficients, row);
        let mut acc = C64::new(0.0, 0.0);
        for (k, w) in weights.iter().enumerate() {
            let z = alpha - C64::new(0.0, 1.0) * self.eigenvalues[k];
            acc += w * exp_integral(z, t_final);
        }
        Ok(acc)
    }
}

/// Time series of amplitudes; row `i` is the state at `times[i]`.
#[derive(Debug, Clone)]
pub struct AmplitudeSeries {
    times: Vec<f64>,
    data: Array2<C64>,
}

impl AmplitudeSeries {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The state at grid point `i`.
    pub fn state(&self, i: usize) -> Result<PureState, Error> {
        PureState::new(self.data.row(i).to_owned(), self.times[i])
    }
}

/// Norm–flux conservation ledger: the running squared norm and the
/// cumulative probability routed into each loss channel, integrated with
/// the composite Simpson rule on a uniform grid.
#[derive(Debug, Clone, Serialize)]
pub struct FluxLedger {
    pub times: Vec<f64>,
    pub norm2: Vec<f64>,
    /// Cumulative `∫ kappa Σ_m |b_m|² dt` (photon detected in the fiber).
    pub detected_photon: Vec<f64>,
    /// Cumulative `∫ gamma_a Σ_m |a_m|² dt` (spontaneous emission).
    pub spontaneous_emission: Vec<f64>,
    /// Cumulative `∫ gamma_m Σ_m m (|a_m|² + |b_m|²) dt` (phonon decay).
    pub phonon_loss: Vec<f64>,
    /// Population stuck at the truncation wall weighted by the coupling
    /// that would move it out: `g_m sqrt(m_max + 1) ∫ |b_{m_max}|² dt`.
    pub truncation_leak: f64,
    /// `|norm²(T) + Σ channels(T) - 1|` at the final grid point.
    pub balance_residual: f64,
}

/// Integrate the channel fluxes of the exact amplitude series over
/// `[0, t_final]` on `n_steps` uniform Simpson panels (rounded up to even).
pub fn flux_ledger(
    cache: &PropagatorCache,
    psi0: &PureState,
    params: &SystemParams,
    t_final: f64,
    n_steps: usize,
) -> Result<FluxLedger, Error> {
    if n_steps < 2 {
        return Err(Error::InvalidSteps(format!(
            "flux ledger needs at least 2 Simpson panels, got {n_steps}"
        )));
    }
    if t_final < 0.0 {
        return Err(Error::NegativeTime(t_final));
    }
    let m_max = cache.m_max();

    if t_final == 0.0 {
        let norm2 = psi0.norm2();
        return Ok(FluxLedger {
            times: vec![0.0],
            norm2: vec![norm2],
            detected_photon: vec![0.0],
            spontaneous_emission: vec![0.0],
            phonon_loss: vec![0.0],
            truncation_leak: 0.0,
            balance_residual: (norm2 - 1.0).abs(),
        });
    }

    let n = n_steps + n_steps % 2;
    let h = t_final / n as f64;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let series = cache.amplitude_series(psi0, &times)?;

    let mut norm2 = Vec::with_capacity(n + 1);
    let mut photon_rate = Vec::with_capacity(n + 1);
    let mut atom_rate = Vec::with_capacity(n + 1);
    let mut phonon_rate = Vec::with_capacity(n + 1);
    let mut wall_population = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let row = series.data().row(i);
        let mut atom_pop = 0.0;
        let mut photon_pop = 0.0;
        let mut weighted = 0.0;
        for m in 0..=m_max {
            let a2 = row[m].norm_sqr();
            let b2 = row[m_max + 1 + m].norm_sqr();
            atom_pop += a2;
            photon_pop += b2;
            weighted += m as f64 * (a2 + b2);
        }
        norm2.push(atom_pop + photon_pop);
        photon_rate.push(params.kappa * photon_pop);
        atom_rate.push(params.gamma_a * atom_pop);
        phonon_rate.push(params.gamma_m * weighted);
        wall_population.push(row[m_max + 1 + m_max].norm_sqr());
    }

    let detected_photon = cumulative_simpson(&photon_rate, h, 0.0);
    let spontaneous_emission = cumulative_simpson(&atom_rate, h, 0.0);
    let phonon_loss = cumulative_simpson(&phonon_rate, h, 0.0);
    let wall_integral = simpson(&wall_population, h);
    let truncation_leak = params.g_m * ((m_max + 1) as f64).sqrt() * wall_integral;

    let balance_residual =
        (norm2[n] + detected_photon[n] + spontaneous_emission[n] + phonon_loss[n] - 1.0).abs();

    Ok(FluxLedger {
        times,
        norm2,
        detected_photon,
        spontaneous_emission,
        phonon_loss,
        truncation_leak,
        balance_residual,
    })
}
