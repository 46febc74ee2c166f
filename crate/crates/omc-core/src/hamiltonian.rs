//! Dense operators over the single-excitation basis: the Hermitian system
//! Hamiltonian, the jump operators of the three loss channels, and the
//! non-Hermitian no-jump generators at zero and finite bath temperature.

use ndarray::Array2;

use crate::basis::{basis_dim, BasisIndex};
use crate::model::SystemParams;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Hermitian,
    NonHermitian,
    Jump,
}

/// A dense complex operator of dimension `2 (m_max + 1)` with its
/// structural classification.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: Array2<C64>,
    pub kind: MatrixKind,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `M† M`, the decay operator this matrix contributes to the
    /// anti-Hermitian part of the no-jump generator.
    pub fn dagger_dot_self(&self) -> Array2<C64> {
        let adjoint = self.matrix.t().mapv(|v| v.conj());
        adjoint.dot(&self.matrix)
    }
}

/// Loss channels, each carrying an excitation out of the tracked system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpChannel {
    /// Photon leak through the cavity mirror into the fiber, rate `kappa`.
    Optical,
    /// Atomic spontaneous emission into free space, rate `gamma_a`.
    Atomic,
    /// Phonon decay into the mechanical bath, rate `gamma_m`.
    Mechanical,
}

fn atom(m: usize, m_max: usize) -> usize {
    BasisIndex::atom(m).flat(m_max).expect("m <= m_max")
}

fn photon(m: usize, m_max: usize) -> usize {
    BasisIndex::photon(m).flat(m_max).expect("m <= m_max")
}

/// Hermitian system Hamiltonian in the frame rotating with the cavity.
///
/// Diagonal: `delta_a + m` on `|e,0,m>` and `m` on `|g,1,m>`. The atomic
/// detuning is carried on the excited branch; this differs from placing
/// `-delta_a` on the ground branch only by a global shift and leaves all
/// observables unchanged. Off-diagonal: `g_a` between `|e,0,m>` and
/// `|g,1,m>`, and the radiation-pressure ladder `-g_m sqrt(m+1)` between
/// `|g,1,m>` and `|g,1,m+1>` (photon branch only).
pub fn build_h_sys(params: &SystemParams) -> OperatorMatrix {
    let m_max = params.m_max;
    let dim = basis_dim(m_max);
    let mut h = Array2::<C64>::zeros((dim, dim));

    for m in 0..=m_max {
        h[(atom(m, m_max), atom(m, m_max))] = C64::new(params.delta_a + m as f64, 0.0);
        h[(photon(m, m_max), photon(m, m_max))] = C64::new(m as f64, 0.0);
        h[(atom(m, m_max), photon(m, m_max))] = C64::new(params.g_a, 0.0);
        h[(photon(m, m_max), atom(m, m_max))] = C64::new(params.g_a, 0.0);
    }
    for m in 0..m_max {
        let coupling = C64::new(-params.g_m * ((m + 1) as f64).sqrt(), 0.0);
        h[(photon(m + 1, m_max), photon(m, m_max))] = coupling;
        h[(photon(m, m_max), photon(m + 1, m_max))] = coupling;
    }

    OperatorMatrix {
        matrix: h,
        kind: MatrixKind::Hermitian,
    }
}

/// Jump operator of one loss channel as a dense matrix.
///
/// Row convention: rows index the post-jump states. The mechanical jump
/// stays inside the single-excitation sector (it lowers `m` within each
/// branch with amplitude `sqrt(gamma_m * m)`). The optical and atomic
/// jumps annihilate the excitation; their post-jump states `|g,0,m>` live
/// in the zero-excitation sector and reuse the `m`-indexed slots `0..=m_max`
/// as exit channels, so `M† M` still evaluates to the correct in-sector
/// decay operator by plain matrix algebra.
pub fn jump_operator(which: JumpChannel, params: &SystemParams) -> OperatorMatrix {
    let m_max = params.m_max;
    let dim = basis_dim(m_max);
    let mut j = Array2::<C64>::zeros((dim, dim));

    match which {
        JumpChannel::Optical => {
            let amp = params.kappa.sqrt();
            for m in 0..=m_max {
                j[(m, photon(m, m_max))] = C64::new(amp, 0.0);
            }
        }
        JumpChannel::Atomic => {
            let amp = params.gamma_a.sqrt();
            for m in 0..=m_max {
                j[(m, atom(m, m_max))] = C64::new(amp, 0.0);
            }
        }
        JumpChannel::Mechanical => {
            for m in 1..=m_max {
                let amp = C64::new((params.gamma_m * m as f64).sqrt(), 0.0);
                j[(atom(m - 1, m_max), atom(m, m_max))] = amp;
                j[(photon(m - 1, m_max), photon(m, m_max))] = amp;
            }
        }
    }

    OperatorMatrix {
        matrix: j,
        kind: MatrixKind::Jump,
    }
}

fn with_decay_diagonal(params: &SystemParams, mech_rate: impl Fn(usize) -> f64) -> OperatorMatrix {
    let m_max = params.m_max;
    let mut h = build_h_sys(params).matrix;
    for m in 0..=m_max {
        let mech = mech_rate(m);
        h[(atom(m, m_max), atom(m, m_max))] += C64::new(0.0, -0.5 * (params.gamma_a + mech));
        h[(photon(m, m_max), photon(m, m_max))] += C64::new(0.0, -0.5 * (params.kappa + mech));
    }
    OperatorMatrix {
        matrix: h,
        kind: MatrixKind::NonHermitian,
    }
}

/// Zero-temperature no-jump generator:
/// `H_sys - (i/2) (kappa P_photon + gamma_a P_atom + gamma_m N_phonon)`.
pub fn build_h_nh(params: &SystemParams) -> OperatorMatrix {
    with_decay_diagonal(params, |m| params.gamma_m * m as f64)
}

/// Finite-temperature no-jump generator.
///
/// With `include_mbar_terms` the mechanical decay diagonal becomes
/// `(mbar + 1) gamma_m N + mbar gamma_m (N + 1)`, i.e. both the enhanced
/// decay and the bath-feeding channel remove no-jump norm. Without it the
/// `mbar` terms are dropped (weak-damping limit) and the generator reduces
/// to [`build_h_nh`].
pub fn build_h_dnh(params: &SystemParams) -> OperatorMatrix {
    if params.include_mbar_terms {
        with_decay_diagonal(params, |m| {
            params.gamma_m * ((params.mbar + 1.0) * m as f64 + params.mbar * (m as f64 + 1.0))
        })
    } else {
        build_h_nh(params)
    }
}
