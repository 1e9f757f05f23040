use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::basis::{decompose, CandidateBasis, RelativeDecomposition};
use super::operator::{collapse_operator, EnvironmentSpec};
use super::scan::{scan_with_probe, ScanGrid};
use crate::energy;
use crate::entanglement::{sample_at, EntanglementProbe, EntanglementTrace, TraceSample};
use crate::error::{Error, Result};
use crate::quantum::{PauliTermSum, StateVector};

/// When the entangling speed triggers a collapse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    epsilon_dot_threshold: f64,
    check_interval: f64,
}

impl ThresholdPolicy {
    /// `threshold` must be positive (`+∞` disables collapse) and
    /// `check_interval` positive and finite.
    pub fn new(threshold: f64, check_interval: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
        }
        if !(check_interval > 0.0) || !check_interval.is_finite() {
            return Err(Error::InvalidArgument(format!("check interval must be positive, got {check_interval}")));
        }
        Ok(Self { epsilon_dot_threshold: threshold, check_interval })
    }

    /// A policy that never fires.
    pub fn never(check_interval: f64) -> Result<Self> {
        Self::new(f64::INFINITY, check_interval)
    }

    pub fn threshold(&self) -> f64 {
        self.epsilon_dot_threshold
    }

    pub fn check_interval(&self) -> f64 {
        self.check_interval
    }

    /// `ε̇ ≥ threshold`. The boundary counts as a crossing.
    pub fn triggers(&self, epsilon_dot: f64) -> bool {
        epsilon_dot >= self.epsilon_dot_threshold
    }
}

pub fn check_threshold(sample: &TraceSample, policy: &ThresholdPolicy) -> bool {
    policy.triggers(sample.epsilon_dot)
}

/// Result of one Born draw.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub index: usize,
    /// `|Aᵢ⟩|Eᵢ⟩` for the chosen branch.
    pub state: StateVector,
    /// The uniform variate in `[0, 1)` that selected the branch.
    pub draw: f64,
}

/// Picks a branch by inverse-CDF sampling over `|cᵢ|²`.
pub fn sample_outcome<R: Rng + ?Sized>(decomp: &RelativeDecomposition, rng: &mut R) -> Outcome {
    let w = decomp.born_weights();
    let draw: f64 = rng.random();
    let index = if draw * (w[0] + w[1]) < w[0] { 0 } else { 1 };
    Outcome { index, state: decomp.branch_state(index), draw }
}

/// How the collapse basis is chosen at an event.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMethod {
    /// Minimize the mean entangling acceleration over the Bloch sphere.
    Scan,
    /// Eigenbasis of the collapse operator in the current reduced
    /// environment; falls back to a scan when the operator vanishes.
    CollapseOperator,
    /// Collapse operator from [`AUTO_OPERATOR_MIN_ENV`] environment spins
    /// on, scan below.
    #[default]
    Auto,
}

/// Environment size at which [`BasisMethod::Auto`] switches to the operator.
pub const AUTO_OPERATOR_MIN_ENV: usize = 8;

impl std::str::FromStr for BasisMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "scan" => Ok(Self::Scan),
            "collapse_operator" | "operator" => Ok(Self::CollapseOperator),
            "auto" => Ok(Self::Auto),
            _ => Err(Error::InvalidArgument(format!("unknown basis method '{s}'"))),
        }
    }
}

/// Where a basis came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSource {
    Scan,
    CollapseOperator,
}

impl BasisSource {
    pub fn name(self) -> &'static str {
        match self {
            Self::Scan => "scan",
            Self::CollapseOperator => "collapse_operator",
        }
    }
}

/// Outcome of basis selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisChoice {
    /// `None` when no basis could be singled out.
    pub basis: Option<CandidateBasis>,
    pub source: BasisSource,
    /// The operator was degenerate and the scan was used instead.
    pub fell_back: bool,
    /// The scan landscape was flat.
    pub flat: bool,
}

/// Chooses the collapse basis of `psi` according to `method`.
///
/// A flat scan reached through the operator fallback yields no basis; a
/// flat scan requested directly keeps its tie-broken basis.
pub fn choose_basis(probe: &EntanglementProbe, psi: &StateVector, method: BasisMethod, grid: &ScanGrid) -> Result<BasisChoice> {
    let use_operator = match method {
        BasisMethod::Scan => false,
        BasisMethod::CollapseOperator => true,
        BasisMethod::Auto => psi.num_env() >= AUTO_OPERATOR_MIN_ENV,
    };
    if use_operator {
        let op = collapse_operator(probe.hamiltonian(), EnvironmentSpec::CurrentReduced(psi))?;
        if let Some(basis) = op.eigenbasis() {
            return Ok(BasisChoice { basis: Some(basis), source: BasisSource::CollapseOperator, fell_back: false, flat: false });
        }
    }
    let (basis, report) = scan_with_probe(probe, psi, grid)?;
    let basis = if report.flat && use_operator { None } else { Some(basis) };
    Ok(BasisChoice { basis, source: BasisSource::Scan, fell_back: use_operator, flat: report.flat })
}

/// One collapse, in the JSON-lines schema of the event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseEvent {
    pub t_c: f64,
    pub theta: f64,
    pub phi: f64,
    /// Born weights `|c₀|², |c₁|²`.
    pub weights: [f64; 2],
    pub outcome: usize,
    pub e_before: f64,
    pub e_after_ensemble: f64,
    /// Energy of the branch actually selected.
    pub e_after_actual: f64,
    pub rng_draw: f64,
    pub seed: u64,
}

impl CollapseEvent {
    pub fn basis(&self) -> CandidateBasis {
        CandidateBasis::from_unbounded(self.theta, self.phi)
    }

    pub fn max_weight(&self) -> f64 {
        self.weights[0].max(self.weights[1])
    }
}

/// Writes one JSON object per line.
pub fn write_events_jsonl<W: Write>(mut out: W, events: &[CollapseEvent]) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// A threshold crossing that produced no event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedEvent {
    pub t: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryConfig {
    pub policy: ThresholdPolicy,
    pub t_max: f64,
    pub seed: u64,
    /// Independent RNG stream for this trajectory under the same seed.
    pub stream: u64,
    pub method: BasisMethod,
    pub grid: ScanGrid,
}

impl TrajectoryConfig {
    pub fn new(policy: ThresholdPolicy, t_max: f64, seed: u64) -> Self {
        Self { policy, t_max, seed, stream: 0, method: BasisMethod::default(), grid: ScanGrid::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub trace: EntanglementTrace,
    pub events: Vec<CollapseEvent>,
    pub skipped: Vec<SkippedEvent>,
    pub final_state: StateVector,
}

/// Unitary evolution interrupted by collapses.
///
/// ε̇ is checked every `check_interval`; the first grid point at or above
/// the threshold is the event time. The post-collapse state is sampled at
/// that point and the trace records the sample taken after the collapse.
pub fn run_trajectory(initial: &StateVector, h: &PauliTermSum, model_tag: &str, config: &TrajectoryConfig) -> Result<Trajectory> {
    run_trajectory_with_probe(&EntanglementProbe::new(h), initial, model_tag, config)
}

pub fn run_trajectory_with_probe(
    probe: &EntanglementProbe,
    initial: &StateVector,
    model_tag: &str,
    config: &TrajectoryConfig,
) -> Result<Trajectory> {
    if !(config.t_max > 0.0) || !config.t_max.is_finite() {
        return Err(Error::InvalidArgument(format!("t_max must be positive, got {}", config.t_max)));
    }
    if initial.dim() != probe.hamiltonian().dim() {
        return Err(Error::DimensionMismatch { expected: probe.hamiltonian().dim(), found: initial.dim() });
    }
    let h = probe.hamiltonian();
    let dt = config.policy.check_interval();
    let steps = (config.t_max / dt + 1e-9).floor() as usize;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(config.stream);

    let mut trace = EntanglementTrace::new(model_tag, initial.num_env());
    let mut events = Vec::new();
    let mut skipped = Vec::new();
    let mut psi = initial.clone();
    for k in 0..=steps {
        let t = k as f64 * dt;
        if k > 0 {
            psi = probe.propagator().evolve(&psi, dt)?;
        }
        let mut sample = sample_at(probe, &psi, t)?;
        if check_threshold(&sample, &config.policy) {
            let choice = choose_basis(probe, &psi, config.method, &config.grid)?;
            match choice.basis {
                None => skipped.push(SkippedEvent { t, reason: "collapse operator degenerate and scan landscape flat".into() }),
                Some(basis) => {
                    let decomp = decompose(&psi, &basis)?;
                    let e_before = energy::energy_before(&psi, h)?;
                    let e_after_ensemble = energy::energy_after_ensemble(&decomp, h)?;
                    let outcome = sample_outcome(&decomp, &mut rng);
                    let e_after_actual = h.expectation(&outcome.state)?;
                    events.push(CollapseEvent {
                        t_c: t,
                        theta: basis.theta(),
                        phi: basis.phi(),
                        weights: decomp.born_weights(),
                        outcome: outcome.index,
                        e_before,
                        e_after_ensemble,
                        e_after_actual,
                        rng_draw: outcome.draw,
                        seed: config.seed,
                    });
                    psi = outcome.state;
                    sample = sample_at(probe, &psi, t)?;
                }
            }
        }
        trace.push(sample)?;
    }
    Ok(Trajectory { trace, events, skipped, final_state: psi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::{state_entropy, unitary_trace};
    use crate::quantum::{build_hamiltonian, ModelSpec};
    use num_complex::Complex64 as C64;

    fn bell() -> StateVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::from_amplitudes(vec![C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)]).unwrap()
    }

    fn sample(eps_dot: f64) -> TraceSample {
        TraceSample { t: 0.0, epsilon: 0.0, epsilon_dot: eps_dot, epsilon_ddot: 0.0 }
    }

    #[test]
    fn threshold_semantics() {
        let p = ThresholdPolicy::new(0.5, 0.01).unwrap();
        assert!(!check_threshold(&sample(0.0), &p));
        assert!(!check_threshold(&sample(-0.7), &p));
        assert!(check_threshold(&sample(0.5), &p));
        assert!(ThresholdPolicy::new(0.0, 0.01).is_err());
        assert!(ThresholdPolicy::new(-1.0, 0.01).is_err());
        assert!(ThresholdPolicy::new(1.0, 0.0).is_err());
        assert!(!ThresholdPolicy::never(0.1).unwrap().triggers(1e300));
    }

    #[test]
    fn certain_outcome() {
        let psi = StateVector::basis(2, 1).unwrap();
        let d = decompose(&psi, &CandidateBasis::computational()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_outcome(&d, &mut rng).index, 0);
        }
    }

    #[test]
    fn post_collapse_is_product() {
        let d = decompose(&bell(), &CandidateBasis::hadamard()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..50 {
            assert!(state_entropy(&sample_outcome(&d, &mut rng).state) < 1e-9);
        }
    }

    #[test]
    fn parses_methods() {
        assert_eq!("scan".parse::<BasisMethod>().unwrap(), BasisMethod::Scan);
        assert_eq!("collapse-operator".parse::<BasisMethod>().unwrap(), BasisMethod::CollapseOperator);
        assert_eq!("AUTO".parse::<BasisMethod>().unwrap(), BasisMethod::Auto);
        assert!("best".parse::<BasisMethod>().is_err());
    }

    #[test]
    fn infinite_threshold_is_unitary() {
        let h = build_hamiltonian(&ModelSpec::TransverseCoupled { n: 2 }).unwrap();
        let psi = StateVector::plus(3).unwrap();
        let cfg = TrajectoryConfig::new(ThresholdPolicy::never(0.05).unwrap(), 1.0, 3);
        let run = run_trajectory(&psi, &h, "transverse_coupled", &cfg).unwrap();
        assert!(run.events.is_empty());
        let reference = unitary_trace(&EntanglementProbe::new(&h), &psi, "transverse_coupled", 1.0, 0.05).unwrap();
        assert_eq!(run.trace, reference);
    }

    #[test]
    fn collapse_operator_falls_back_to_scan() {
        let h = build_hamiltonian(&ModelSpec::TransverseCoupled { n: 2 }).unwrap();
        let psi = crate::quantum::evolve(&StateVector::plus(3).unwrap(), &h, 0.4).unwrap();
        let grid = ScanGrid { n_theta: 9, n_phi: 8, ..ScanGrid::default() };
        let choice = choose_basis(&EntanglementProbe::new(&h), &psi, BasisMethod::CollapseOperator, &grid).unwrap();
        assert!(choice.fell_back);
        assert_eq!(choice.source, BasisSource::Scan);
        assert!(choice.basis.is_some());
    }

    #[test]
    fn zero_hamiltonian_fallback_is_skipped() {
        let h = PauliTermSum::zero(3).unwrap();
        let grid = ScanGrid { n_theta: 5, n_phi: 4, ..ScanGrid::default() };
        let choice = choose_basis(&EntanglementProbe::new(&h), &StateVector::plus(3).unwrap(), BasisMethod::CollapseOperator, &grid).unwrap();
        assert!(choice.basis.is_none() && choice.flat);
    }

    #[test]
    fn event_jsonl_schema() {
        let e = CollapseEvent {
            t_c: 0.5,
            theta: 0.0,
            phi: 0.0,
            weights: [0.75, 0.25],
            outcome: 1,
            e_before: 3.0,
            e_after_ensemble: 2.5,
            e_after_actual: 2.0,
            rng_draw: 0.9,
            seed: 7,
        };
        let mut buf = Vec::new();
        write_events_jsonl(&mut buf, &[e]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"t_c\":0.5,\"theta\":0.0,\"phi\":0.0,\"weights\":[0.75,0.25],\"outcome\":1,\"e_before\":3.0,\
             \"e_after_ensemble\":2.5,\"e_after_actual\":2.0,\"rng_draw\":0.9,\"seed\":7}\n"
        );
    }
}
