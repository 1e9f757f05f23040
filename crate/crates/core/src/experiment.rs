//! Revival test of collapse: the degenerate Ising star returns exactly to
//! `|+⟩^(N+1)` at `t = 2π/g` unless a collapse intervened.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::{run_trajectory_with_probe, BasisMethod, ScanGrid, ThresholdPolicy, TrajectoryConfig};
use crate::entanglement::{EntanglementProbe, SpeedMethod};
use crate::error::{Error, Result};
use crate::quantum::{build_hamiltonian, reduce_system, ModelSpec, StateVector};

/// Starting register for the simulations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `|+⟩^(N+1)`.
    #[default]
    AllPlus,
    /// `|+⟩` on the system, a seeded random environment state.
    PlusRandomEnv,
    /// `|+⟩` on the system, `|0⟩^N` on the environment.
    PlusZeroEnv,
}

impl InitialState {
    pub fn name(self) -> &'static str {
        match self {
            Self::AllPlus => "all_plus",
            Self::PlusRandomEnv => "plus_random_env",
            Self::PlusZeroEnv => "plus_zero_env",
        }
    }

    /// `seed` only matters for [`InitialState::PlusRandomEnv`].
    pub fn prepare(self, num_env: usize, seed: u64) -> Result<StateVector> {
        let plus = [C64::new(FRAC_1_SQRT_2, 0.0); 2];
        match self {
            Self::AllPlus => StateVector::plus(num_env + 1),
            Self::PlusZeroEnv => StateVector::system_env(plus, StateVector::basis(num_env, 0)?.amplitudes()),
            Self::PlusRandomEnv => {
                let env = StateVector::random(num_env, &mut ChaCha20Rng::seed_from_u64(seed))?;
                StateVector::system_env(plus, env.amplitudes())
            }
        }
    }
}

impl FromStr for InitialState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all_plus" => Ok(Self::AllPlus),
            "plus_random_env" => Ok(Self::PlusRandomEnv),
            "plus_zero_env" => Ok(Self::PlusZeroEnv),
            _ => Err(Error::InvalidArgument(format!("unknown initial state '{s}'"))),
        }
    }
}

fn check_ng(n: usize, g: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidArgument("need at least one environment spin".into()));
    }
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::InvalidArgument(format!("coupling must be positive, got {g}")));
    }
    Ok(())
}

/// Exact state of the degenerate Ising star at time `t` from `|+⟩^(N+1)`:
/// each branch `|a⟩` of the system dresses every spin with
/// `(e^{∓igt}|0⟩ + e^{±igt}|1⟩)/√2`.
pub fn analytic_state(n: usize, g: f64, t: f64) -> Result<StateVector> {
    check_ng(n, g)?;
    let dim_env = 1usize << n;
    let amp = FRAC_1_SQRT_2.powi(n as i32 + 1);
    let mut amplitudes = Vec::with_capacity(2 * dim_env);
    for a in 0..2 {
        let sa = if a == 0 { 1.0 } else { -1.0 };
        for e in 0..dim_env {
            let ones = e.count_ones() as f64;
            // Σ_k z_a z_k with z = ±1
            let zz = sa * (n as f64 - 2.0 * ones);
            amplitudes.push(C64::from_polar(amp, -g * t * zz));
        }
    }
    StateVector::from_amplitudes(amplitudes)
}

/// Spectrum `(1 ∓ |cos 2gt|^N)/2` of the system qubit along the analytic
/// state.
pub fn analytic_reduced_eigenvalues(n: usize, g: f64, t: f64) -> [f64; 2] {
    let r = (2.0 * g * t).cos().abs().powi(n as i32);
    [(1.0 - r) / 2.0, (1.0 + r) / 2.0]
}

pub fn revival_time(g: f64) -> f64 {
    TAU / g
}

/// `⟨−|ρ_A|−⟩`.
pub fn minus_probability(psi: &StateVector) -> f64 {
    let rho = reduce_system(psi.amplitudes());
    let m = [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)];
    rho.expectation_in(m).abs()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RevivalConfig {
    pub n: usize,
    pub g: f64,
    pub policy: ThresholdPolicy,
    pub trials: usize,
    pub seed: u64,
    pub method: BasisMethod,
    pub grid: ScanGrid,
    /// Also draw one ± click per trial from its exact probabilities.
    pub sample_clicks: bool,
}

/// Aggregate over trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevivalReport {
    pub n: usize,
    pub g: f64,
    pub t_rev: f64,
    pub trials: usize,
    /// Mean `|⟨Ψ(0)|Ψ(t_rev)⟩|²`.
    pub fidelity_at_revival: f64,
    /// Mean exact `⟨+|ρ_A|+⟩`.
    pub p_plus: f64,
    /// Mean exact `⟨−|ρ_A|−⟩`.
    pub p_minus: f64,
    /// Total over all trials.
    pub collapse_events_before_revival: usize,
    pub trials_with_collapse: usize,
    /// Number of sampled `|−⟩` clicks when sampling is on.
    pub sampled_minus_clicks: Option<usize>,
}

/// Runs `trials` collapse trajectories to the revival time and measures the
/// system in the `|±⟩` basis. Trial `k` uses RNG stream `k` of `seed`, so the
/// result does not depend on scheduling.
pub fn revival_protocol(config: &RevivalConfig) -> Result<RevivalReport> {
    check_ng(config.n, config.g)?;
    if config.trials < 1 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let h = build_hamiltonian(&ModelSpec::DegenerateIsing { n: config.n, g: config.g })?;
    let probe = EntanglementProbe::new(&h);
    let t_rev = revival_time(config.g);
    // land exactly on t_rev
    let steps = (t_rev / config.policy.check_interval()).ceil().max(1.0);
    let policy = ThresholdPolicy::new(config.policy.threshold(), t_rev / steps)?;
    let initial = StateVector::plus(config.n + 1)?;

    let outcomes: Vec<(f64, f64, usize, Option<bool>)> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut tc = TrajectoryConfig::new(policy, t_rev, config.seed);
            tc.stream = trial as u64;
            tc.method = config.method;
            tc.grid = config.grid;
            let run = run_trajectory_with_probe(&probe, &initial, "degenerate_ising", &tc)?;
            let fidelity = initial.fidelity(&run.final_state)?;
            let p_minus = minus_probability(&run.final_state);
            let click = config.sample_clicks.then(|| {
                let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
                rng.set_stream(u64::MAX - trial as u64);
                rng.random::<f64>() < p_minus
            });
            Ok((fidelity, p_minus, run.events.len(), click))
        })
        .collect::<Result<_>>()?;

    let trials = config.trials as f64;
    let p_minus = outcomes.iter().map(|o| o.1).sum::<f64>() / trials;
    Ok(RevivalReport {
        n: config.n,
        g: config.g,
        t_rev,
        trials: config.trials,
        fidelity_at_revival: outcomes.iter().map(|o| o.0).sum::<f64>() / trials,
        p_plus: 1.0 - p_minus,
        p_minus,
        collapse_events_before_revival: outcomes.iter().map(|o| o.2).sum(),
        trials_with_collapse: outcomes.iter().filter(|o| o.2 > 0).count(),
        sampled_minus_clicks: config.sample_clicks.then(|| outcomes.iter().filter(|o| o.3 == Some(true)).count()),
    })
}

/// Largest ε̇ on the grid `t = k·dt ≤ t_max` of unitary evolution.
/// Returns `(t, ε̇)`.
pub fn max_speed(probe: &EntanglementProbe, initial: &StateVector, dt: f64, t_max: f64) -> Result<(f64, f64)> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_max ≥ 0, got dt={dt}, t_max={t_max}")));
    }
    let steps = (t_max / dt + 1e-9).floor() as usize;
    let mut psi = initial.clone();
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 0..=steps {
        if k > 0 {
            psi = probe.propagator().evolve(&psi, dt)?;
        }
        let v = probe.speed(&psi, SpeedMethod::Analytic)?.value;
        if v > best.1 {
            best = (k as f64 * dt, v);
        }
    }
    Ok(best)
}

/// One N of the critical-size sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalRow {
    pub n: usize,
    pub max_epsilon_dot: f64,
    pub t_of_max: f64,
    /// Events in a single trajectory (stream 0) up to the revival time.
    pub events: usize,
}

/// For each N: the largest unitary ε̇ before revival and the number of
/// collapses one trajectory suffers. Points run concurrently.
pub fn critical_sweep(ns: &[usize], config: &RevivalConfig) -> Result<Vec<CriticalRow>> {
    ns.par_iter()
        .map(|&n| {
            check_ng(n, config.g)?;
            let h = build_hamiltonian(&ModelSpec::DegenerateIsing { n, g: config.g })?;
            let probe = EntanglementProbe::new(&h);
            let t_rev = revival_time(config.g);
            let steps = (t_rev / config.policy.check_interval()).ceil().max(1.0);
            let policy = ThresholdPolicy::new(config.policy.threshold(), t_rev / steps)?;
            let initial = StateVector::plus(n + 1)?;
            let (t_of_max, max_epsilon_dot) = max_speed(&probe, &initial, policy.check_interval(), t_rev)?;
            let mut tc = TrajectoryConfig::new(policy, t_rev, config.seed);
            tc.method = config.method;
            tc.grid = config.grid;
            let events = run_trajectory_with_probe(&probe, &initial, "degenerate_ising", &tc)?.events.len();
            Ok(CriticalRow { n, max_epsilon_dot, t_of_max, events })
        })
        .collect()
}

/// First N with at least one collapse.
pub fn critical_n(rows: &[CriticalRow]) -> Option<usize> {
    rows.iter().find(|r| r.events > 0).map(|r| r.n)
}

pub const CRITICAL_CSV_HEADER: [&str; 4] = ["N", "max_epsilon_dot", "t_of_max", "events"];

pub fn write_critical_csv<W: Write>(mut out: W, comments: &[String], rows: &[CriticalRow]) -> Result<()> {
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CRITICAL_CSV_HEADER)?;
    for r in rows {
        w.write_record([r.n.to_string(), r.max_epsilon_dot.to_string(), r.t_of_max.to_string(), r.events.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::evolve;

    #[test]
    fn starts_all_plus() {
        let psi = analytic_state(3, 0.8, 0.0).unwrap();
        assert!((psi.fidelity(&StateVector::plus(4).unwrap()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_numeric_evolution() {
        let h = build_hamiltonian(&ModelSpec::DegenerateIsing { n: 3, g: 1.0 }).unwrap();
        let numeric = evolve(&StateVector::plus(4).unwrap(), &h, 0.3).unwrap();
        let exact = analytic_state(3, 1.0, 0.3).unwrap();
        for (a, b) in numeric.amplitudes().iter().zip(exact.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn revives() {
        let g = 0.7;
        let psi = analytic_state(5, g, revival_time(g)).unwrap();
        assert!((psi.fidelity(&StateVector::plus(6).unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!(minus_probability(&psi) < 1e-12);
    }

    #[test]
    fn reduced_spectrum() {
        let (n, g, t) = (4, 1.0, 0.2);
        let rho = reduce_system(analytic_state(n, g, t).unwrap().amplitudes());
        let [lo, hi] = rho.eigenvalues();
        let [elo, ehi] = analytic_reduced_eigenvalues(n, g, t);
        assert!((lo - elo).abs() < 1e-12 && (hi - ehi).abs() < 1e-12);
    }

    #[test]
    fn initial_states() {
        assert!(InitialState::PlusZeroEnv.prepare(3, 0).unwrap().amplitudes()[0].re > 0.7);
        let a = InitialState::PlusRandomEnv.prepare(3, 5).unwrap();
        let b = InitialState::PlusRandomEnv.prepare(3, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!("plus_random_env".parse::<InitialState>().unwrap(), InitialState::PlusRandomEnv);
        assert!("minus".parse::<InitialState>().is_err());
    }

    #[test]
    fn bad_arguments() {
        assert!(analytic_state(0, 1.0, 0.0).is_err());
        assert!(analytic_state(2, 0.0, 0.0).is_err());
    }
}
