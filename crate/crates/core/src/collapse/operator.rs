use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use super::basis::CandidateBasis;
use crate::error::{Error, Result};
use crate::quantum::{inner, norm_sq, Pauli, PauliTermSum, StateVector, TermKind};

/// Operators with Bloch length below this are reported as degenerate.
pub const DEGENERATE_TOLERANCE: f64 = 1e-12;

/// Environment state in which the interaction is averaged.
#[derive(Clone, Copy, Debug)]
pub enum EnvironmentSpec<'a> {
    /// A given normalized environment vector `|E₀⟩` of length 2^N.
    Explicit(&'a [C64]),
    /// The reduced environment state `Tr_A |Ψ⟩⟨Ψ|` of a full register state.
    CurrentReduced(&'a StateVector),
}

/// `Ĉ = Σ_α ⟨Ê_α⟩ Â_α`, the interaction Hamiltonian averaged over an
/// environment state. Written as `Ĉ = w·σ` on the system qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollapseOperator {
    weights: [f64; 3],
}

impl CollapseOperator {
    /// Coefficients of `σ_x, σ_y, σ_z`.
    pub fn pauli_weights(&self) -> [f64; 3] {
        self.weights
    }

    pub fn matrix(&self) -> Matrix2<C64> {
        let [x, y, z] = self.weights;
        Matrix2::new(C64::new(z, 0.0), C64::new(x, -y), C64::new(x, y), C64::new(-z, 0.0))
    }

    /// Eigenvalues `∓|w|` in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let len = self.norm();
        [-len, len]
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        self.norm() < DEGENERATE_TOLERANCE
    }

    /// Eigenbasis with `|A₀⟩` the `+|w|` eigenvector; `None` when degenerate.
    pub fn eigenbasis(&self) -> Option<CandidateBasis> {
        if self.is_degenerate() {
            return None;
        }
        CandidateBasis::from_axis(self.weights).ok()
    }
}

/// Builds the collapse operator from the interaction terms of `h`.
pub fn collapse_operator(h: &PauliTermSum, env: EnvironmentSpec<'_>) -> Result<CollapseOperator> {
    let dim_env = h.dim() / 2;
    let mut weights = [0.0; 3];
    let mut scratch = vec![C64::new(0.0, 0.0); dim_env];
    let expectation = |term: &crate::quantum::PauliTerm, v: &[C64], scratch: &mut Vec<C64>| -> f64 {
        scratch.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        term.apply_env_add(v, scratch);
        inner(v, scratch).re
    };
    match env {
        EnvironmentSpec::Explicit(e0) => {
            if e0.len() != dim_env {
                return Err(Error::DimensionMismatch { expected: dim_env, found: e0.len() });
            }
            if (norm_sq(e0) - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidArgument("environment state is not normalized".into()));
            }
        }
        EnvironmentSpec::CurrentReduced(psi) => {
            if psi.dim() != h.dim() {
                return Err(Error::DimensionMismatch { expected: h.dim(), found: psi.dim() });
            }
        }
    }
    for term in h.terms_of(TermKind::Interaction) {
        // ⟨Ê_α⟩ = Tr(ρ_E Ê_α)
        let e = match env {
            EnvironmentSpec::Explicit(e0) => expectation(term, e0, &mut scratch),
            EnvironmentSpec::CurrentReduced(psi) => {
                expectation(term, psi.system_block(0), &mut scratch) + expectation(term, psi.system_block(1), &mut scratch)
            }
        };
        let slot = match term.system_op() {
            Pauli::X => 0,
            Pauli::Y => 1,
            Pauli::Z => 2,
            Pauli::I => unreachable!("interaction terms act on the system"),
        };
        weights[slot] += e;
    }
    Ok(CollapseOperator { weights })
}
