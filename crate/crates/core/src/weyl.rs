//! Generalized Bell states and the Weyl (shift-and-phase) operators that
//! generate them from `|Φ00> = sum_j |jj> / sqrt(d)`.
//!
//! `V(k,l)` maps `|j>` to `e^{2πi jk/d} |j+l mod d>`. `U(k,l)` is its
//! transpose, the unique single-qudit operator with
//! `U_A |Φ00>_AB = V_B |Φ00>_AB`. Both are unitary (no `1/sqrt(d)` factor).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::{LocalOperator, Matrix, StateVector, C64};

/// Label `(k, l)` of a generalized Bell state: `k` is the phase index, `l`
/// the shift index, both in `[0, d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BellLabel {
    pub k: usize,
    pub l: usize,
}

impl BellLabel {
    pub const ZERO: BellLabel = BellLabel { k: 0, l: 0 };

    pub fn new(k: usize, l: usize) -> Self {
        Self { k, l }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if d < 2 {
            return Err(Error::Dimension(d));
        }
        for digit in [self.k, self.l] {
            if digit >= d {
                return Err(Error::Digit { digit, d });
            }
        }
        Ok(())
    }

    /// Row-major position `k * d + l` among the `d²` labels.
    pub fn index(&self, d: usize) -> usize {
        self.k * d + self.l
    }

    pub fn from_index(index: usize, d: usize) -> Self {
        Self {
            k: index / d,
            l: index % d,
        }
    }

    /// All `d²` labels in row-major `(k, l)` order.
    pub fn all(d: usize) -> impl Iterator<Item = BellLabel> {
        (0..d * d).map(move |i| BellLabel::from_index(i, d))
    }
}

pub fn mod_add(j: usize, l: usize, d: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::Dimension(d));
    }
    for digit in [j, l] {
        if digit >= d {
            return Err(Error::Digit { digit, d });
        }
    }
    Ok((j + l) % d)
}

fn root_of_unity(power: usize, d: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * (power % d) as f64 / d as f64)
}

pub fn weyl_v(d: usize, label: BellLabel) -> Result<LocalOperator> {
    label.validate(d)?;
    let mut m = Matrix::zeros(d);
    for j in 0..d {
        m[(mod_add(j, label.l, d)?, j)] = root_of_unity(j * label.k, d);
    }
    LocalOperator::new(d, 1, m)
}

/// `U(k,l)` with entries `U[j, j+l mod d] = e^{2πi jk/d}`, i.e. `V(k,l)ᵀ`.
pub fn weyl_u(d: usize, label: BellLabel) -> Result<LocalOperator> {
    label.validate(d)?;
    let mut m = Matrix::zeros(d);
    for j in 0..d {
        m[(j, mod_add(j, label.l, d)?)] = root_of_unity(j * label.k, d);
    }
    LocalOperator::new(d, 1, m)
}

/// `|Φ00>` on two qudits.
pub fn phi00(d: usize) -> Result<StateVector> {
    if d < 2 {
        return Err(Error::Dimension(d));
    }
    let mut amps = vec![C64::new(0.0, 0.0); d * d];
    for j in 0..d {
        amps[j * d + j] = C64::new(1.0, 0.0);
    }
    StateVector::new(d, 2, amps)
}

/// `|Φ_kl> = V(k,l)_B |Φ00>_AB`.
pub fn gbs_state(d: usize, label: BellLabel) -> Result<StateVector> {
    phi00(d)?.apply_local(&weyl_v(d, label)?, &[1])
}

/// The `d²` generalized Bell states in row-major `(k, l)` order.
pub fn phi_basis(d: usize) -> Result<Vec<StateVector>> {
    BellLabel::all(d).map(|label| gbs_state(d, label)).collect()
}

/// Change of basis onto generalized Bell states: row `k*d + l` is `<Φ_kl|`.
/// Applying it to a qudit pair leaves the amplitude `<Φ_kl|ψ>` at digit
/// pair `(k, l)`.
pub fn bell_analyzer(d: usize) -> Result<LocalOperator> {
    let basis = phi_basis(d)?;
    let m = Matrix::from_fn(d * d, |r, c| basis[r].amps()[c].conj());
    LocalOperator::new(d, 2, m)
}
