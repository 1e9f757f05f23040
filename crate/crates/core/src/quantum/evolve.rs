//! Time evolution `|ψ(t)⟩ = e^{-iHt}|ψ⟩` in units with ħ = 1.
//!
//! [`Propagator`] picks one of four exact-to-tolerance routes:
//!
//! - diagonal Hamiltonians (only `I`/`Z` strings) are applied as phases;
//! - short steps with `‖H‖₁·|t| ≤ 1` use a truncated Taylor series that is
//!   run until the remainder drops below machine precision;
//! - registers of up to [`DENSE_MAX_SITES`] sites use a cached dense
//!   eigendecomposition;
//! - larger registers fall back to fixed-step classical Runge–Kutta with a
//!   step chosen from `‖H‖₁` so the local error stays below 1e-12.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::pauli::PauliTermSum;
use super::state::{norm_sq, StateVector};
use crate::error::{Error, Result};

/// Largest register evolved through a dense eigendecomposition.
pub const DENSE_MAX_SITES: usize = 10;

/// `‖H‖₁·|t|` below which the Taylor route is used.
const SHORT_TIME: f64 = 1.0;

/// `‖H‖₁·h` for one Runge–Kutta step: (‖H‖h)^5/120 < 1e-12.
const RK4_STEP: f64 = 0.0104;

const TAYLOR_MAX_ORDER: usize = 60;

/// Largest norm drift tolerated before renormalization is considered a failure.
const NORM_GUARD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EvolutionMethod {
    /// Choose per call (see module docs).
    #[default]
    Auto,
    /// Dense eigendecomposition regardless of register size.
    Spectral,
    /// Fixed-step fourth-order Runge–Kutta.
    RungeKutta,
    /// Taylor series with internal substeps of `‖H‖₁h ≤ 1`.
    Taylor,
}

enum Spectrum {
    Real { values: Vec<f64>, vectors: DMatrix<f64> },
    Complex { values: Vec<f64>, vectors: DMatrix<C64> },
}

/// Evolution operator for a fixed Hamiltonian. Caches whatever the chosen
/// route needs, so reuse one propagator for many evolutions.
pub struct Propagator {
    h: PauliTermSum,
    method: EvolutionMethod,
    norm: f64,
    diagonal: Option<Vec<f64>>,
    spectrum: OnceLock<Spectrum>,
}

impl Propagator {
    pub fn new(h: &PauliTermSum) -> Self {
        Self::with_method(h, EvolutionMethod::Auto)
    }

    pub fn with_method(h: &PauliTermSum, method: EvolutionMethod) -> Self {
        let diagonal = if method == EvolutionMethod::Auto { h.diagonal() } else { None };
        Self { h: h.clone(), method, norm: h.one_norm(), diagonal, spectrum: OnceLock::new() }
    }

    pub fn hamiltonian(&self) -> &PauliTermSum {
        &self.h
    }

    /// `e^{-iH dt}|ψ⟩` for `dt ≥ 0`.
    pub fn evolve(&self, psi: &StateVector, dt: f64) -> Result<StateVector> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be finite and ≥ 0, got {dt}")));
        }
        self.propagate(psi, dt)
    }

    /// Signed-time evolution; negative `t` runs the dynamics backwards.
    pub(crate) fn propagate(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        if psi.dim() != self.h.dim() {
            return Err(Error::DimensionMismatch { expected: self.h.dim(), found: psi.dim() });
        }
        if self.h.is_zero() || t == 0.0 {
            return Ok(psi.clone());
        }
        let amplitudes = match self.method {
            EvolutionMethod::Auto => {
                if let Some(diag) = &self.diagonal {
                    apply_phases(diag, psi.amplitudes(), t)
                } else if self.norm * t.abs() <= SHORT_TIME {
                    self.taylor(psi.amplitudes(), t)?
                } else if self.h.num_sites() <= DENSE_MAX_SITES {
                    self.spectral(psi.amplitudes(), t)
                } else {
                    self.runge_kutta(psi.amplitudes(), t)?
                }
            }
            EvolutionMethod::Spectral => self.spectral(psi.amplitudes(), t),
            EvolutionMethod::RungeKutta => self.runge_kutta(psi.amplitudes(), t)?,
            EvolutionMethod::Taylor => {
                let substeps = (self.norm * t.abs() / SHORT_TIME).ceil().max(1.0) as usize;
                let h = t / substeps as f64;
                let mut v = psi.amplitudes().to_vec();
                for _ in 0..substeps {
                    v = self.taylor(&v, h)?;
                }
                v
            }
        };
        finish(amplitudes, psi.num_sites())
    }

    fn taylor(&self, v: &[C64], t: f64) -> Result<Vec<C64>> {
        let mut sum = v.to_vec();
        let mut term = v.to_vec();
        let minus_it = C64::new(0.0, -t);
        for k in 1..=TAYLOR_MAX_ORDER {
            let mut next = self.h.apply(&term)?;
            let scale = minus_it / k as f64;
            next.iter_mut().for_each(|z| *z *= scale);
            let size = norm_sq(&next);
            sum.iter_mut().zip(&next).for_each(|(s, n)| *s += n);
            term = next;
            if size < 1e-34 {
                return Ok(sum);
            }
        }
        Err(Error::NonConvergence(format!(
            "Taylor series did not converge in {TAYLOR_MAX_ORDER} terms (‖H‖t = {})",
            self.norm * t.abs()
        )))
    }

    fn runge_kutta(&self, v: &[C64], t: f64) -> Result<Vec<C64>> {
        let steps = (self.norm * t.abs() / RK4_STEP).ceil().max(1.0) as usize;
        let h = t / steps as f64;
        let mut psi = v.to_vec();
        let rhs = |x: &[C64]| -> Result<Vec<C64>> {
            let mut y = self.h.apply(x)?;
            y.iter_mut().for_each(|z| *z *= C64::new(0.0, -1.0));
            Ok(y)
        };
        let axpy = |x: &[C64], k: &[C64], a: f64| -> Vec<C64> { x.iter().zip(k).map(|(x, k)| x + k * a).collect() };
        for _ in 0..steps {
            let k1 = rhs(&psi)?;
            let k2 = rhs(&axpy(&psi, &k1, 0.5 * h))?;
            let k3 = rhs(&axpy(&psi, &k2, 0.5 * h))?;
            let k4 = rhs(&axpy(&psi, &k3, h))?;
            for i in 0..psi.len() {
                psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        Ok(psi)
    }

    fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            if self.h.is_real() {
                let eig = SymmetricEigen::new(self.h.to_dense_real());
                Spectrum::Real { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
            } else {
                let eig = SymmetricEigen::new(self.h.to_dense());
                Spectrum::Complex { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors }
            }
        })
    }

    fn spectral(&self, v: &[C64], t: f64) -> Vec<C64> {
        match self.spectrum() {
            Spectrum::Real { values, vectors } => {
                let dim = v.len();
                // c = Vᵀ v, scaled by phases, then V c
                let mut c: Vec<C64> = (0..dim)
                    .map(|k| vectors.column(k).iter().zip(v).map(|(a, b)| b * *a).sum::<C64>())
                    .collect();
                for (ck, &e) in c.iter_mut().zip(values) {
                    *ck *= C64::from_polar(1.0, -e * t);
                }
                let mut out = vec![C64::new(0.0, 0.0); dim];
                for (k, ck) in c.iter().enumerate() {
                    for (o, a) in out.iter_mut().zip(vectors.column(k).iter()) {
                        *o += ck * *a;
                    }
                }
                out
            }
            Spectrum::Complex { values, vectors } => {
                let dim = v.len();
                let mut c: Vec<C64> = (0..dim)
                    .map(|k| vectors.column(k).iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C64>())
                    .collect();
                for (ck, &e) in c.iter_mut().zip(values) {
                    *ck *= C64::from_polar(1.0, -e * t);
                }
                let mut out = vec![C64::new(0.0, 0.0); dim];
                for (k, ck) in c.iter().enumerate() {
                    for (o, a) in out.iter_mut().zip(vectors.column(k).iter()) {
                        *o += ck * a;
                    }
                }
                out
            }
        }
    }
}

fn apply_phases(diag: &[f64], v: &[C64], t: f64) -> Vec<C64> {
    diag.iter().zip(v).map(|(&e, z)| z * C64::from_polar(1.0, -e * t)).collect()
}

fn finish(mut amplitudes: Vec<C64>, num_sites: usize) -> Result<StateVector> {
    let norm = norm_sq(&amplitudes).sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > NORM_GUARD {
        return Err(Error::NonConvergence(format!("norm drifted to {norm}")));
    }
    amplitudes.iter_mut().for_each(|z| *z /= norm);
    Ok(StateVector::from_parts_unchecked(amplitudes, num_sites))
}

/// `e^{-iH dt}|ψ⟩`. Builds a fresh [`Propagator`]; prefer reusing one for
/// repeated calls with the same Hamiltonian.
pub fn evolve(psi: &StateVector, h: &PauliTermSum, dt: f64) -> Result<StateVector> {
    Propagator::new(h).evolve(psi, dt)
}
