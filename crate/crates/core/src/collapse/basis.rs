use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::entanglement::EntanglementProbe;
use crate::error::{Error, Result};
use crate::quantum::{kron, norm_sq, PauliTermSum, StateVector};

/// Branch weights below this are treated as exactly zero.
pub const ZERO_WEIGHT: f64 = 1e-14;

/// Orthonormal qubit basis `{|A₀⟩, |A₁⟩}` with
/// `|A₀⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩` and `|A₁⟩` its complement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateBasis {
    theta: f64,
    phi: f64,
}

impl CandidateBasis {
    /// `theta ∈ [0, π]`; `phi` is wrapped into `[0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !phi.is_finite() {
            return Err(Error::InvalidArgument(format!("basis angles out of range: θ={theta}, φ={phi}")));
        }
        Ok(Self { theta, phi: wrap_phi(phi) })
    }

    /// Maps arbitrary real angles onto the sphere (θ reflected, φ wrapped).
    pub fn from_unbounded(theta: f64, phi: f64) -> Self {
        let mut t = theta.rem_euclid(TAU);
        let mut p = phi;
        if t > PI {
            t = TAU - t;
            p += PI;
        }
        Self { theta: t, phi: wrap_phi(p) }
    }

    /// `{|0⟩, |1⟩}`.
    pub fn computational() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    /// `{|+⟩, |−⟩}`.
    pub fn hadamard() -> Self {
        Self { theta: PI / 2.0, phi: 0.0 }
    }

    /// Basis whose `|A₀⟩` has Bloch vector along `axis` (any nonzero length).
    pub fn from_axis(axis: [f64; 3]) -> Result<Self> {
        let len = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(len > 0.0) {
            return Err(Error::InvalidArgument("zero Bloch axis".into()));
        }
        let theta = (axis[2] / len).clamp(-1.0, 1.0).acos();
        let phi = if axis[0] == 0.0 && axis[1] == 0.0 { 0.0 } else { axis[1].atan2(axis[0]) };
        Ok(Self { theta, phi: wrap_phi(phi) })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn states(&self) -> [[C64; 2]; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        let e = C64::from_polar(1.0, self.phi);
        [[C64::new(c, 0.0), e * s], [-e.conj() * s, C64::new(c, 0.0)]]
    }

    /// Unit Bloch vector of `|A₀⟩`; `|A₁⟩` sits at its antipode.
    pub fn axis(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Angle between the two bases' axes, treating a basis as an unordered
    /// pair (so the result lies in `[0, π/2]`).
    pub fn angular_distance(&self, other: &CandidateBasis) -> f64 {
        let a = self.axis();
        let b = other.axis();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        dot.abs().clamp(0.0, 1.0).acos()
    }
}

fn wrap_phi(phi: f64) -> f64 {
    let p = phi.rem_euclid(TAU);
    if p >= TAU { 0.0 } else { p }
}

/// `|Ψ⟩ = Σᵢ cᵢ |Aᵢ⟩|Eᵢ⟩` with normalized, generally non-orthogonal
/// relative states `|Eᵢ⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelativeDecomposition {
    basis: CandidateBasis,
    weights: [C64; 2],
    env_states: [Vec<C64>; 2],
    placeholder: [bool; 2],
}

impl RelativeDecomposition {
    pub fn basis(&self) -> &CandidateBasis {
        &self.basis
    }

    pub fn weights(&self) -> [C64; 2] {
        self.weights
    }

    /// `|cᵢ|²`.
    pub fn born_weights(&self) -> [f64; 2] {
        [self.weights[0].norm_sqr(), self.weights[1].norm_sqr()]
    }

    pub fn env_state(&self, i: usize) -> &[C64] {
        &self.env_states[i]
    }

    /// True when branch `i` has zero weight and carries a stand-in `|0…0⟩`.
    pub fn is_placeholder(&self, i: usize) -> bool {
        self.placeholder[i]
    }

    pub fn num_env(&self) -> usize {
        self.env_states[0].len().trailing_zeros() as usize
    }

    /// The product state `|Aᵢ⟩|Eᵢ⟩`.
    pub fn branch_state(&self, i: usize) -> StateVector {
        // both factors are unit vectors, including placeholders
        StateVector::normalized(self.branch_amplitudes(i)).expect("branch state is a unit product vector")
    }

    /// Raw amplitudes of the branch product state.
    pub(crate) fn branch_amplitudes(&self, i: usize) -> Vec<C64> {
        kron(&self.basis.states()[i], &self.env_states[i])
    }

    /// `Σᵢ cᵢ |Aᵢ⟩|Eᵢ⟩`.
    pub fn reconstruct(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); 2 * self.env_states[0].len()];
        for i in 0..2 {
            for (o, b) in out.iter_mut().zip(self.branch_amplitudes(i)) {
                *o += self.weights[i] * b;
            }
        }
        out
    }

    /// `Σᵢ |cᵢ|² ε̈ᵢ`, each ε̈ᵢ taken at the product state `|Aᵢ⟩|Eᵢ⟩`.
    pub fn mean_acceleration(&self, probe: &EntanglementProbe) -> Result<f64> {
        let mut total = 0.0;
        for (i, w) in self.born_weights().into_iter().enumerate() {
            if w < ZERO_WEIGHT * ZERO_WEIGHT || self.placeholder[i] {
                continue;
            }
            total += w * probe.acceleration(&self.branch_state(i))?;
        }
        Ok(total)
    }
}

/// Relative-state decomposition of `psi` in `basis`:
/// `cᵢ|Eᵢ⟩ = (⟨Aᵢ| ⊗ I)|Ψ⟩`, with `cᵢ ≥ 0` real.
pub fn decompose(psi: &StateVector, basis: &CandidateBasis) -> Result<RelativeDecomposition> {
    let states = basis.states();
    let d = psi.dim_env();
    let blocks = [psi.system_block(0), psi.system_block(1)];
    let mut weights = [C64::new(0.0, 0.0); 2];
    let mut placeholder = [false; 2];
    let env_states = [0, 1].map(|i| {
        let a = states[i];
        let mut v: Vec<C64> = blocks[0].iter().zip(blocks[1]).map(|(x, y)| a[0].conj() * x + a[1].conj() * y).collect();
        let c = norm_sq(&v).sqrt();
        if c < ZERO_WEIGHT {
            placeholder[i] = true;
            v = vec![C64::new(0.0, 0.0); d];
            v[0] = C64::new(1.0, 0.0);
        } else {
            weights[i] = C64::new(c, 0.0);
            v.iter_mut().for_each(|z| *z /= c);
        }
        v
    });
    Ok(RelativeDecomposition { basis: *basis, weights, env_states, placeholder })
}

/// Ensemble-averaged entangling acceleration `Σᵢ |cᵢ|² ε̈ᵢ`.
pub fn mean_entangling_acceleration(decomp: &RelativeDecomposition, h: &PauliTermSum) -> Result<f64> {
    if h.num_sites() != decomp.num_env() + 1 {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: 2 * decomp.env_states[0].len() });
    }
    decomp.mean_acceleration(&EntanglementProbe::new(h))
}
