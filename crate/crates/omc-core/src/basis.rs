//! Single-excitation basis indexing and the conditional state vector.
//!
//! The flat layout places the atom-excited amplitudes `a_m` first and the
//! photon-in-cavity amplitudes `b_m` second:
//!
//! ```text
//! index m             -> |e,0,m>   (a_m),   m = 0..=m_max
//! index (m_max+1) + m -> |g,1,m>   (b_m),   m = 0..=m_max
//! ```

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::SystemParams;
use crate::C64;

/// Which half of the single-excitation sector an amplitude lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `|e,0,m>`: excitation stored in the atom.
    AtomExcited,
    /// `|g,1,m>`: excitation stored as a cavity photon.
    PhotonInCavity,
}

/// A basis label `(branch, phonon number)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisIndex {
    pub branch: Branch,
    pub phonons: usize,
}

impl BasisIndex {
    pub const fn new(branch: Branch, phonons: usize) -> Self {
        Self { branch, phonons }
    }

    pub const fn atom(m: usize) -> Self {
        Self::new(Branch::AtomExcited, m)
    }

    pub const fn photon(m: usize) -> Self {
        Self::new(Branch::PhotonInCavity, m)
    }

    /// Flat index in the amplitude vector for truncation `m_max`.
    pub fn flat(self, m_max: usize) -> Result<usize, Error> {
        if self.phonons > m_max {
            return Err(Error::PhononOutOfRange {
                m: self.phonons,
                m_max,
            });
        }
        Ok(match self.branch {
            Branch::AtomExcited => self.phonons,
            Branch::PhotonInCavity => (m_max + 1) + self.phonons,
        })
    }

    /// Inverse of [`BasisIndex::flat`].
    pub fn from_flat(index: usize, m_max: usize) -> Result<Self, Error> {
        let dim = basis_dim(m_max);
        if index >= dim {
            return Err(Error::FlatIndexOutOfRange { index, dim });
        }
        Ok(if index <= m_max {
            Self::atom(index)
        } else {
            Self::photon(index - (m_max + 1))
        })
    }
}

/// Dimension of the single-excitation sector, `2 (m_max + 1)`.
pub const fn basis_dim(m_max: usize) -> usize {
    2 * (m_max + 1)
}

/// Slack allowed on the unit-norm upper bound of conditional states.
pub const NORM_SLACK: f64 = 1e-9;

/// Conditional (no-jump) pure state: the amplitude vector over the
/// single-excitation basis at a given time.
///
/// Invariant: the squared norm never exceeds `1 + NORM_SLACK`; no-jump
/// evolution only removes norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Array1<C64>,
    time: f64,
}

impl PureState {
    /// Wrap an amplitude vector, enforcing the norm and shape invariants.
    pub fn new(amps: Array1<C64>, time: f64) -> Result<Self, Error> {
        if amps.len() < 2 || !amps.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: 2 * (amps.len() / 2).max(1),
                got: amps.len(),
            });
        }
        if time < 0.0 {
            return Err(Error::NegativeTime(time));
        }
        let norm2 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if norm2 > 1.0 + NORM_SLACK {
            return Err(Error::NormExceedsUnity { norm2 });
        }
        Ok(Self { amps, time })
    }

    pub fn amps(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn m_max(&self) -> usize {
        self.amps.len() / 2 - 1
    }

    pub fn norm2(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Amplitude at a basis label.
    pub fn amplitude(&self, index: BasisIndex) -> Result<C64, Error> {
        Ok(self.amps[index.flat(self.m_max())?])
    }

    /// `a_m`, the atom-excited amplitude.
    pub fn atom_amp(&self, m: usize) -> Result<C64, Error> {
        self.amplitude(BasisIndex::atom(m))
    }

    /// `b_m`, the photon-in-cavity amplitude.
    pub fn photon_amp(&self, m: usize) -> Result<C64, Error> {
        self.amplitude(BasisIndex::photon(m))
    }
}

/// Unit basis state at `t = 0` for the requested start label.
pub fn make_initial_state(kind: BasisIndex, params: &SystemParams) -> Result<PureState, Error> {
    let flat = kind.flat(params.m_max)?;
    let mut amps = Array1::zeros(params.dim());
    amps[flat] = C64::new(1.0, 0.0);
    PureState::new(amps, 0.0)
}
