//! Von Neumann entropy of the system qubit and its first two time
//! derivatives, the entangling speed ε̇ and entangling acceleration ε̈.
//!
//! Entropies are in nats throughout; [`EntropyUnit::Bits`] only rescales
//! values when they are written out.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    partial_trace_system, pure_state_spectrum, reduce_outer, reduce_system, BipartiteSplit, DensityMatrix, PauliTermSum, Propagator,
    StateVector,
};

/// Eigenvalues below this contribute nothing to `−Σλ ln λ`.
pub const EIGEN_CUTOFF: f64 = 1e-12;
/// Default central-difference step for ε̇.
pub const DEFAULT_SPEED_STEP: f64 = 1e-4;
/// Richardson levels disagreeing by more than this are flagged.
pub const RICHARDSON_WARN: f64 = 1e-4;
/// Default finite-difference step for ε̈.
pub const DEFAULT_ACCEL_STEP: f64 = 1e-3;
/// Smallest finite-difference step accepted.
const MIN_STEP: f64 = 1e-8;

/// Entropy of a 2×2 spectrum, in nats.
///
/// Evaluated from the smaller trace-normalized eigenvalue `p` as
/// `−p ln p − (1−p) ln(1−p)`, so rounding in the trace does not leak into
/// nearly pure states.
pub fn entropy_of_eigenvalues(eigenvalues: [f64; 2]) -> f64 {
    let [a, b] = eigenvalues;
    let p = a.min(b) / (a + b);
    if !(p >= EIGEN_CUTOFF) {
        return 0.0;
    }
    (-p * p.ln() - (1.0 - p) * (-p).ln_1p()).max(0.0)
}

/// `−Σ λᵢ ln λᵢ` of a validated density matrix.
pub fn entropy(rho: &DensityMatrix) -> Result<f64> {
    rho.validate()?;
    Ok(entropy_of_eigenvalues(rho.eigenvalues()))
}

pub(crate) fn state_entropy(psi: &StateVector) -> f64 {
    entropy_of_eigenvalues(pure_state_spectrum(psi.amplitudes()))
}

/// Entropy of the system qubit of `psi`.
pub fn system_entropy(psi: &StateVector) -> Result<f64> {
    let rho = partial_trace_system(psi, &BipartiteSplit::system_first(psi.num_sites())?)?;
    entropy(&rho)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedMethod {
    /// `ε̇ = −Tr(ρ̇_A ln ρ_A)` with `ρ̇_A = Tr_E(−i[H, ρ])`.
    Analytic,
    /// Central difference with one Richardson halving.
    FiniteDiff,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedEstimate {
    pub value: f64,
    /// Method that produced `value`.
    pub method: SpeedMethod,
    /// Analytic evaluation was requested but ρ_A was pure to within the cutoff.
    pub fell_back: bool,
    /// `|D(h) − D(h/2)|` for finite differences.
    pub richardson_gap: Option<f64>,
}

impl SpeedEstimate {
    pub fn step_sensitive(&self) -> bool {
        self.richardson_gap.is_some_and(|g| g > RICHARDSON_WARN)
    }
}

/// Evaluates ε, ε̇ and ε̈ for one Hamiltonian, reusing a cached propagator.
pub struct EntanglementProbe {
    propagator: Propagator,
    speed_step: f64,
    accel_step: f64,
}

impl EntanglementProbe {
    pub fn new(h: &PauliTermSum) -> Self {
        Self::from_propagator(Propagator::new(h))
    }

    pub fn from_propagator(propagator: Propagator) -> Self {
        Self { propagator, speed_step: DEFAULT_SPEED_STEP, accel_step: DEFAULT_ACCEL_STEP }
    }

    pub fn with_steps(mut self, speed_step: f64, accel_step: f64) -> Self {
        self.speed_step = speed_step;
        self.accel_step = accel_step;
        self
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn hamiltonian(&self) -> &PauliTermSum {
        self.propagator.hamiltonian()
    }

    fn check(&self, psi: &StateVector) -> Result<()> {
        let dim = self.hamiltonian().dim();
        if psi.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: psi.dim() });
        }
        Ok(())
    }

    pub fn entropy(&self, psi: &StateVector) -> Result<f64> {
        self.check(psi)?;
        Ok(state_entropy(psi))
    }

    fn entropy_at(&self, psi: &StateVector, t: f64) -> Result<f64> {
        Ok(state_entropy(&self.propagator.propagate(psi, t)?))
    }

    pub fn speed(&self, psi: &StateVector, method: SpeedMethod) -> Result<SpeedEstimate> {
        self.check(psi)?;
        if method == SpeedMethod::Analytic {
            if let Some(value) = self.analytic_speed(psi)? {
                return Ok(SpeedEstimate { value, method, fell_back: false, richardson_gap: None });
            }
        }
        let (value, gap) = self.finite_difference_speed(psi)?;
        Ok(SpeedEstimate {
            value,
            method: SpeedMethod::FiniteDiff,
            fell_back: method == SpeedMethod::Analytic,
            richardson_gap: Some(gap),
        })
    }

    /// `None` when ρ_A is pure to within [`EIGEN_CUTOFF`] and `ln ρ_A` diverges.
    fn analytic_speed(&self, psi: &StateVector) -> Result<Option<f64>> {
        let rho = reduce_system(psi.amplitudes());
        let [lo, _] = rho.eigenvalues();
        if lo < EIGEN_CUTOFF {
            return Ok(None);
        }
        if self.hamiltonian().is_zero() {
            return Ok(Some(0.0));
        }
        let amps = psi.amplitudes();
        let h_psi = self.hamiltonian().apply(amps)?;
        // ρ̇ = −i(Tr_E|Hψ⟩⟨ψ| − Tr_E|ψ⟩⟨Hψ|)
        let commutator = reduce_outer(&h_psi, amps) - reduce_outer(amps, &h_psi);
        let rho_dot = commutator * num_complex::Complex64::new(0.0, -1.0);
        let off = rho_dot[(0, 1)];
        let r_dot = [2.0 * off.re, -2.0 * off.im, rho_dot[(0, 0)].re - rho_dot[(1, 1)].re];
        let r = rho.bloch_vector();
        let len = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        let along: f64 = r.iter().zip(&r_dot).map(|(a, b)| a * b).sum();
        // ln ρ = ½ln(λ₊λ₋) I + artanh|r| r̂·σ, and Tr ρ̇ = 0
        let factor = if len < 1e-8 { 1.0 } else { len.atanh() / len };
        Ok(Some(-factor * along))
    }

    fn finite_difference_speed(&self, psi: &StateVector) -> Result<(f64, f64)> {
        let h = self.speed_step;
        if !(h >= MIN_STEP) || !h.is_finite() {
            return Err(Error::StepUnderflow(h));
        }
        let central = |h: f64| -> Result<f64> {
            Ok((self.entropy_at(psi, h)? - self.entropy_at(psi, -h)?) / (2.0 * h))
        };
        let coarse = central(h)?;
        let fine = central(0.5 * h)?;
        Ok(((4.0 * fine - coarse) / 3.0, (coarse - fine).abs()))
    }

    /// ε̈ by second differences of ε along exact short evolutions.
    ///
    /// At a product state (ε(0) = ε̇(0) = 0) the one-sided form
    /// `(ε(2δ) − 2ε(δ))/δ²` is used; otherwise the central form.
    pub fn acceleration(&self, psi: &StateVector) -> Result<f64> {
        self.check(psi)?;
        let d = self.accel_step;
        if !(d >= MIN_STEP) || !d.is_finite() {
            return Err(Error::StepUnderflow(d));
        }
        if self.hamiltonian().is_zero() {
            return Ok(0.0);
        }
        let [lo, _] = pure_state_spectrum(psi.amplitudes());
        if lo < EIGEN_CUTOFF {
            let one = self.propagator.propagate(psi, d)?;
            let two = self.propagator.propagate(&one, d)?;
            Ok((state_entropy(&two) - 2.0 * state_entropy(&one)) / (d * d))
        } else {
            let here = state_entropy(psi);
            Ok((self.entropy_at(psi, d)? - 2.0 * here + self.entropy_at(psi, -d)?) / (d * d))
        }
    }
}

/// dε/dt of the system qubit at the instant described by `psi`.
pub fn entangling_speed(psi: &StateVector, h: &PauliTermSum, method: SpeedMethod) -> Result<SpeedEstimate> {
    EntanglementProbe::new(h).speed(psi, method)
}

/// d²ε/dt² of the system qubit at the instant described by `psi`.
pub fn entangling_acceleration(psi: &StateVector, h: &PauliTermSum) -> Result<f64> {
    EntanglementProbe::new(h).acceleration(psi)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyUnit {
    #[default]
    Nats,
    Bits,
}

impl EntropyUnit {
    /// Multiplier converting a value in nats into this unit.
    pub fn scale(self) -> f64 {
        match self {
            EntropyUnit::Nats => 1.0,
            EntropyUnit::Bits => std::f64::consts::LOG2_E,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EntropyUnit::Nats => "nats",
            EntropyUnit::Bits => "bits",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub epsilon: f64,
    pub epsilon_dot: f64,
    pub epsilon_ddot: f64,
}

/// Time series of (t, ε, ε̇, ε̈) for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementTrace {
    pub model_tag: String,
    pub n: usize,
    samples: Vec<TraceSample>,
}

/// Column order of the trace CSV.
pub const TRACE_CSV_HEADER: [&str; 4] = ["t", "epsilon", "epsilon_dot", "epsilon_ddot"];

impl EntanglementTrace {
    pub fn new(model_tag: impl Into<String>, n: usize) -> Self {
        Self { model_tag: model_tag.into(), n, samples: Vec::new() }
    }

    /// Appends a sample; times must be strictly increasing.
    pub fn push(&mut self, sample: TraceSample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(sample.t > last.t) {
                return Err(Error::InvalidArgument(format!(
                    "trace times must increase strictly ({} after {})",
                    sample.t, last.t
                )));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample with the largest ε̇.
    pub fn peak_speed(&self) -> Option<TraceSample> {
        self.samples.iter().copied().max_by(|a, b| a.epsilon_dot.total_cmp(&b.epsilon_dot))
    }

    /// Index of the first positive local maximum of ε̇.
    pub fn first_speed_peak(&self) -> Option<usize> {
        let s = &self.samples;
        (1..s.len().saturating_sub(1)).find(|&k| {
            s[k].epsilon_dot > 0.0 && s[k].epsilon_dot > s[k - 1].epsilon_dot && s[k].epsilon_dot >= s[k + 1].epsilon_dot
        })
    }

    /// Writes `# comment` lines, the header and one row per sample.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String], unit: EntropyUnit) -> Result<()> {
        for line in comments {
            writeln!(out, "# {line}")?;
        }
        let scale = unit.scale();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_CSV_HEADER)?;
        for s in &self.samples {
            w.write_record([
                s.t.to_string(),
                (s.epsilon * scale).to_string(),
                (s.epsilon_dot * scale).to_string(),
                (s.epsilon_ddot * scale).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples ε, ε̇ (analytic, finite-difference fallback) and ε̈ at
/// `t = k·dt` for `k = 0..=⌊t_max/dt⌋` under purely unitary evolution.
pub fn unitary_trace(
    probe: &EntanglementProbe,
    initial: &StateVector,
    model_tag: &str,
    t_max: f64,
    dt: f64,
) -> Result<EntanglementTrace> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_max ≥ 0, got dt={dt}, t_max={t_max}")));
    }
    let steps = (t_max / dt + 1e-9).floor() as usize;
    let mut trace = EntanglementTrace::new(model_tag, initial.num_env());
    let mut psi = initial.clone();
    for k in 0..=steps {
        if k > 0 {
            psi = probe.propagator().evolve(&psi, dt)?;
        }
        trace.push(sample_at(probe, &psi, k as f64 * dt)?)?;
    }
    Ok(trace)
}

pub(crate) fn sample_at(probe: &EntanglementProbe, psi: &StateVector, t: f64) -> Result<TraceSample> {
    Ok(TraceSample {
        t,
        epsilon: probe.entropy(psi)?,
        epsilon_dot: probe.speed(psi, SpeedMethod::Analytic)?.value,
        epsilon_ddot: probe.acceleration(psi)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{build_hamiltonian, ModelSpec};
    use nalgebra::Matrix2;
    use num_complex::Complex64 as C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn diag(a: f64, b: f64) -> DensityMatrix {
        DensityMatrix::new(Matrix2::new(C64::new(a, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(b, 0.0)))
            .unwrap()
    }

    #[test]
    fn entropy_reference_values() {
        assert_eq!(entropy(&diag(1.0, 0.0)).unwrap(), 0.0);
        assert!((entropy(&DensityMatrix::maximally_mixed()).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        // −0.9 ln 0.9 − 0.1 ln 0.1
        let expected = -(0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln());
        assert!((expected - 0.325083).abs() < 1e-6);
        assert!((entropy(&diag(0.9, 0.1)).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn entropy_rejects_invalid_input() {
        let bad = Matrix2::new(C64::new(0.7, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.7, 0.0));
        assert!(DensityMatrix::new(bad).is_err());
    }

    #[test]
    fn product_state_has_zero_speed() {
        let h = build_hamiltonian(&ModelSpec::TransverseCoupled { n: 3 }).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let env = StateVector::random(3, &mut rng).unwrap();
        let psi = StateVector::system_env([C64::new(0.6, 0.0), C64::new(0.0, 0.8)], env.amplitudes()).unwrap();
        for method in [SpeedMethod::Analytic, SpeedMethod::FiniteDiff] {
            let est = entangling_speed(&psi, &h, method).unwrap();
            assert!(est.value.abs() < 1e-7, "{method:?}: {}", est.value);
            assert_eq!(est.method, SpeedMethod::FiniteDiff);
        }
        assert!(entangling_speed(&psi, &h, SpeedMethod::Analytic).unwrap().fell_back);
    }

    #[test]
    fn zero_hamiltonian_gives_zero_derivatives() {
        let h = build_hamiltonian(&ModelSpec::Custom { num_sites: 3, terms: vec![] }).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let psi = StateVector::random(3, &mut rng).unwrap();
        assert_eq!(entangling_speed(&psi, &h, SpeedMethod::Analytic).unwrap().value, 0.0);
        assert_eq!(entangling_acceleration(&psi, &h).unwrap(), 0.0);
    }

    #[test]
    fn analytic_and_finite_difference_agree() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for n in [2, 3, 5] {
            let h = build_hamiltonian(&ModelSpec::TransverseCoupled { n }).unwrap();
            let psi = StateVector::random(n + 1, &mut rng).unwrap();
            let a = entangling_speed(&psi, &h, SpeedMethod::Analytic).unwrap();
            let f = entangling_speed(&psi, &h, SpeedMethod::FiniteDiff).unwrap();
            assert_eq!(a.method, SpeedMethod::Analytic);
            assert!((a.value - f.value).abs() < 1e-5, "N={n}: {} vs {}", a.value, f.value);
            assert!(!f.step_sensitive());
        }
    }

    #[test]
    fn acceleration_is_nonnegative_at_product_state() {
        let h = build_hamiltonian(&ModelSpec::TransverseCoupled { n: 4 }).unwrap();
        let psi = StateVector::plus(5).unwrap();
        assert!(entangling_acceleration(&psi, &h).unwrap() >= -1e-7);
    }

    #[test]
    fn tiny_steps_are_rejected() {
        let h = build_hamiltonian(&ModelSpec::TransverseCoupled { n: 2 }).unwrap();
        let probe = EntanglementProbe::new(&h).with_steps(1e-12, 1e-12);
        let psi = StateVector::plus(3).unwrap();
        assert!(matches!(probe.acceleration(&psi), Err(Error::StepUnderflow(_))));
        assert!(matches!(probe.speed(&psi, SpeedMethod::FiniteDiff), Err(Error::StepUnderflow(_))));
    }

    #[test]
    fn trace_times_must_increase() {
        let mut trace = EntanglementTrace::new("x", 1);
        let s = TraceSample { t: 1.0, epsilon: 0.0, epsilon_dot: 0.0, epsilon_ddot: 0.0 };
        trace.push(s).unwrap();
        assert!(trace.push(s).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut trace = EntanglementTrace::new("x", 1);
        trace.push(TraceSample { t: 0.5, epsilon: 0.25, epsilon_dot: 1.0, epsilon_ddot: -2.0 }).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf, &["config_hash=abc".into()], EntropyUnit::Nats).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# config_hash=abc\nt,epsilon,epsilon_dot,epsilon_ddot\n0.5,0.25,1,-2\n");
    }
}
