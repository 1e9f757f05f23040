use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance on `Σ|ψ|² = 1` accepted by [`StateVector::from_amplitudes`].
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Normalized pure state of `num_sites` qubits.
///
/// Site 0 is the system qubit and occupies the most significant bit of the
/// amplitude index, so the vector is laid out as `[system][environment]`:
/// `amplitudes[a * dim_env + e]` is the coefficient of `|a⟩ ⊗ |e⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    num_sites: usize,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized within [`NORM_TOLERANCE`].
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let num_sites = sites_for_len(amplitudes.len())?;
        let norm_sq = norm_sq(&amplitudes);
        if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "state is not normalized: Σ|ψ|² = {norm_sq}"
            )));
        }
        Ok(Self { amplitudes, num_sites })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(mut amplitudes: Vec<C64>) -> Result<Self> {
        let num_sites = sites_for_len(amplitudes.len())?;
        let norm = norm_sq(&amplitudes).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero or non-finite vector".into()));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Ok(Self { amplitudes, num_sites })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_sites: usize, index: usize) -> Result<Self> {
        check_sites(num_sites)?;
        let dim = 1usize << num_sites;
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} out of range for {num_sites} sites")));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes, num_sites })
    }

    /// Tensor product of single-site states, site 0 first.
    pub fn product(sites: &[[C64; 2]]) -> Result<Self> {
        check_sites(sites.len())?;
        let mut amplitudes = vec![C64::new(1.0, 0.0)];
        for site in sites {
            amplitudes = kron(&amplitudes, site);
        }
        Self::normalized(amplitudes)
    }

    /// `|+⟩^⊗num_sites`.
    pub fn plus(num_sites: usize) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::product(&vec![[C64::new(h, 0.0), C64::new(h, 0.0)]; num_sites])
    }

    /// `|system⟩ ⊗ |env⟩` for a normalized qubit and environment vector.
    pub fn system_env(system: [C64; 2], env: &[C64]) -> Result<Self> {
        Self::normalized(kron(&system, env))
    }

    /// Gaussian-random state (Haar measure on the unit sphere).
    pub fn random<R: Rng + ?Sized>(num_sites: usize, rng: &mut R) -> Result<Self> {
        check_sites(num_sites)?;
        let amplitudes = random_vector(1 << num_sites, rng);
        Self::normalized(amplitudes)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    /// Number of environment spins N.
    pub fn num_env(&self) -> usize {
        self.num_sites - 1
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn dim_env(&self) -> usize {
        self.amplitudes.len() / 2
    }

    /// Environment amplitudes multiplying the system basis state `|a⟩`.
    pub fn system_block(&self, a: usize) -> &[C64] {
        let d = self.dim_env();
        &self.amplitudes[a * d..(a + 1) * d]
    }

    pub fn norm(&self) -> f64 {
        norm_sq(&self.amplitudes).sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Multiplies every amplitude by `e^{iα}`.
    pub fn with_global_phase(&self, alpha: f64) -> StateVector {
        let phase = C64::from_polar(1.0, alpha);
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z * phase).collect(),
            num_sites: self.num_sites,
        }
    }

    pub(crate) fn from_parts_unchecked(amplitudes: Vec<C64>, num_sites: usize) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << num_sites);
        Self { amplitudes, num_sites }
    }
}

pub(crate) fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `⟨u|v⟩`.
pub(crate) fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub(crate) fn kron(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        out.extend(b.iter().map(|y| x * y));
    }
    out
}

pub(crate) fn random_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<C64> {
    (0..len)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

fn sites_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "amplitude count {len} is not 2^k with k ≥ 1"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

fn check_sites(num_sites: usize) -> Result<()> {
    if num_sites == 0 || num_sites > 30 {
        return Err(Error::InvalidArgument(format!("unsupported site count {num_sites}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn layout_puts_system_in_leading_bit() {
        let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let one = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let psi = StateVector::product(&[one, zero, zero]).unwrap();
        assert_eq!(psi.amplitudes()[0b100], C64::new(1.0, 0.0));
        assert_eq!(psi.system_block(1)[0], C64::new(1.0, 0.0));
    }

    #[test]
    fn rejects_unnormalized_and_bad_lengths() {
        assert!(StateVector::from_amplitudes(vec![C64::new(1.0, 0.0); 4]).is_err());
        assert!(StateVector::normalized(vec![C64::new(1.0, 0.0); 3]).is_err());
        assert!(StateVector::normalized(vec![C64::new(0.0, 0.0); 4]).is_err());
    }

    #[test]
    fn random_state_is_normalized() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let psi = StateVector::random(5, &mut rng).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert_eq!(psi.num_env(), 4);
    }
}
