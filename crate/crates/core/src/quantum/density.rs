use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{Error, Result};

/// Cut between the single system degree of freedom and its environment.
///
/// The system is always site 0 in this crate; the type exists so callers
/// state the cut explicitly and mismatched registers are caught.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteSplit {
    system_site: usize,
    env_sites: Vec<usize>,
}

impl BipartiteSplit {
    /// Site 0 against sites `1..num_sites`.
    pub fn system_first(num_sites: usize) -> Result<Self> {
        if num_sites < 2 {
            return Err(Error::InvalidArgument(format!("cannot split a {num_sites}-site register")));
        }
        Ok(Self { system_site: 0, env_sites: (1..num_sites).collect() })
    }

    pub fn system_site(&self) -> usize {
        self.system_site
    }

    pub fn env_sites(&self) -> &[usize] {
        &self.env_sites
    }

    pub fn num_sites(&self) -> usize {
        self.env_sites.len() + 1
    }

    fn check(&self, psi: &StateVector) -> Result<()> {
        if self.num_sites() != psi.num_sites() {
            return Err(Error::DimensionMismatch { expected: 1 << self.num_sites(), found: psi.dim() });
        }
        Ok(())
    }
}

/// Reduced state of the system qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: Matrix2<C64>,
}

impl DensityMatrix {
    pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
    pub const TRACE_TOLERANCE: f64 = 1e-10;
    pub const EIGEN_TOLERANCE: f64 = 1e-10;

    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(entries: Matrix2<C64>) -> Result<Self> {
        let rho = Self { entries };
        rho.validate()?;
        Ok(rho)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.entries;
        let herm = (m[(0, 1)] - m[(1, 0)].conj()).norm().max(m[(0, 0)].im.abs()).max(m[(1, 1)].im.abs());
        if herm > Self::HERMITIAN_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > Self::TRACE_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} ≠ 1")));
        }
        let [lo, _] = self.eigenvalues();
        if lo < -Self::EIGEN_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {lo:e}")));
        }
        Ok(())
    }

    /// Projector `|v⟩⟨v|` for a normalized qubit state.
    pub fn pure(v: [C64; 2]) -> Result<Self> {
        let v = Vector2::new(v[0], v[1]);
        Self::new(v * v.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self { entries: Matrix2::identity() * C64::new(0.5, 0.0) }
    }

    pub fn entries(&self) -> &Matrix2<C64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries[(0, 0)].re + self.entries[(1, 1)].re
    }

    pub fn purity(&self) -> f64 {
        (self.entries * self.entries).trace().re
    }

    /// Bloch vector `r` with `ρ = (I + r·σ)/2`.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let off = self.entries[(0, 1)];
        [2.0 * off.re, -2.0 * off.im, self.entries[(0, 0)].re - self.entries[(1, 1)].re]
    }

    /// Eigenvalues in ascending order.
    ///
    /// The small eigenvalue is taken as `det/λ_max` so that it keeps full
    /// relative precision near pure states.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = &self.entries;
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = m[(0, 1)];
        let half_tr = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        let hi = half_tr + radius;
        let det = a * d - b.norm_sqr();
        let lo = if hi > 0.0 { det / hi } else { half_tr - radius };
        [lo, hi]
    }

    /// `⟨v|ρ|v⟩`.
    pub fn expectation_in(&self, v: [C64; 2]) -> f64 {
        let v = Vector2::new(v[0], v[1]);
        (v.adjoint() * self.entries * v)[(0, 0)].re
    }
}

/// `ρ_A = Tr_E |ψ⟩⟨ψ|` for the system qubit.
pub fn partial_trace_system(psi: &StateVector, split: &BipartiteSplit) -> Result<DensityMatrix> {
    split.check(psi)?;
    Ok(reduce_system(psi.amplitudes()))
}

/// `Tr_E |u⟩⟨v|` for vectors in the `[system][env]` layout.
pub(crate) fn reduce_outer(u: &[C64], v: &[C64]) -> Matrix2<C64> {
    let d = u.len() / 2;
    let (u0, u1) = u.split_at(d);
    let (v0, v1) = v.split_at(d);
    let dot = |x: &[C64], y: &[C64]| x.iter().zip(y).map(|(a, b)| a * b.conj()).sum::<C64>();
    Matrix2::new(dot(u0, v0), dot(u0, v1), dot(u1, v0), dot(u1, v1))
}

/// Spectrum of the system qubit of a pure state, smaller eigenvalue first.
///
/// The smaller eigenvalue is `det ρ / λ₊` with `det ρ = ‖u‖²‖w‖²`, where
/// `w` is the part of the lighter system block orthogonal to the heavier
/// one. This keeps full relative precision for nearly product states, where
/// `(1 − |r|)/2` cancels.
pub(crate) fn pure_state_spectrum(amplitudes: &[C64]) -> [f64; 2] {
    let d = amplitudes.len() / 2;
    let (a, b) = amplitudes.split_at(d);
    let norm_sq = |x: &[C64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let (na, nb) = (norm_sq(a), norm_sq(b));
    let (u, v, nu) = if na >= nb { (a, b, na) } else { (b, a, nb) };
    if nu == 0.0 {
        return [0.0, 0.0];
    }
    let dot = |x: &[C64], y: &[C64]| x.iter().zip(y).map(|(p, q)| p.conj() * q).sum::<C64>();
    let mut w = v.to_vec();
    // two passes of Gram–Schmidt
    for _ in 0..2 {
        let c = dot(u, &w) / nu;
        for (wi, ui) in w.iter_mut().zip(u) {
            *wi -= c * ui;
        }
    }
    let det = nu * norm_sq(&w);
    let trace = na + nb;
    let disc = (trace * trace - 4.0 * det).max(0.0).sqrt();
    let hi = 0.5 * (trace + disc);
    [det / hi, hi]
}

pub(crate) fn reduce_system(amplitudes: &[C64]) -> DensityMatrix {
    let mut m = reduce_outer(amplitudes, amplitudes);
    // enforce exact Hermiticity against rounding
    m[(0, 0)].im = 0.0;
    m[(1, 1)].im = 0.0;
    m[(1, 0)] = m[(0, 1)].conj();
    DensityMatrix { entries: m }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn pure_spectrum_matches_eigenvalues() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for sites in 2..6 {
            let psi = StateVector::random(sites, &mut rng).unwrap();
            let a = pure_state_spectrum(psi.amplitudes());
            let b = reduce_system(psi.amplitudes()).eigenvalues();
            assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14, "{a:?} {b:?}");
        }
    }

    #[test]
    fn pure_spectrum_keeps_small_eigenvalue_precise() {
        // cos ε|0⟩|e₀⟩ + sin ε|1⟩|e₁⟩ with ⟨e₀|e₁⟩ = 0 has λ₋ = sin²ε
        let eps = 1e-6_f64;
        let (c, s) = (C64::new(eps.cos(), 0.0), C64::new(eps.sin(), 0.0));
        let e0 = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let e1 = [C64::new(0.0, 0.8), C64::new(0.6, 0.0)];
        let amps = vec![c * e0[0], c * e0[1], s * e1[0], s * e1[1]];
        let lo = pure_state_spectrum(&amps)[0];
        assert!((lo / eps.sin().powi(2) - 1.0).abs() < 1e-10, "{lo:e}");
    }

    #[test]
    fn product_state_gives_pure_projector() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = [C64::new(h, 0.0), C64::new(h, 0.0)];
        let e = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let psi = StateVector::product(&[plus, e, e]).unwrap();
        let rho = partial_trace_system(&psi, &BipartiteSplit::system_first(3).unwrap()).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        assert!((rho.expectation_in(plus) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bell_state_gives_half_identity() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::from_amplitudes(vec![
            C64::new(h, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(h, 0.0),
        ])
        .unwrap();
        let rho = partial_trace_system(&psi, &BipartiteSplit::system_first(2).unwrap()).unwrap();
        assert!((rho.entries() - DensityMatrix::maximally_mixed().entries()).norm() < 1e-15);
        let [lo, hi] = rho.eigenvalues();
        assert!((lo - 0.5).abs() < 1e-15 && (hi - 0.5).abs() < 1e-15);
    }

    #[test]
    fn split_must_match_register() {
        let psi = StateVector::plus(3).unwrap();
        let split = BipartiteSplit::system_first(4).unwrap();
        assert!(matches!(partial_trace_system(&psi, &split), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let c = |re: f64, im: f64| C64::new(re, im);
        assert!(DensityMatrix::new(Matrix2::new(c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0))).is_err());
        assert!(DensityMatrix::new(Matrix2::new(c(0.6, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.6, 0.0))).is_err());
        assert!(DensityMatrix::new(Matrix2::new(c(1.2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.2, 0.0))).is_err());
    }

    #[test]
    fn trace_is_preserved_on_random_states() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for sites in 2..7 {
            let psi = StateVector::random(sites, &mut rng).unwrap();
            let rho = partial_trace_system(&psi, &BipartiteSplit::system_first(sites).unwrap()).unwrap();
            rho.validate().unwrap();
        }
    }
}
