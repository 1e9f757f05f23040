//! Energy bookkeeping across a collapse.

use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::{choose_basis, decompose, BasisMethod, BasisSource, RelativeDecomposition, ScanGrid, ZERO_WEIGHT};
use crate::entanglement::{EntanglementProbe, SpeedMethod};
use crate::error::{Error, Result};
use crate::quantum::{build_hamiltonian, inner, ModelSpec, PauliTermSum, StateVector};

/// Denominator floor for relative deviations.
pub const RELATIVE_FLOOR: f64 = 1e-9;

fn check(h: &PauliTermSum, dim: usize) -> Result<()> {
    if h.dim() != dim {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: dim });
    }
    Ok(())
}

/// `⟨Ψ|H|Ψ⟩`.
pub fn energy_before(psi: &StateVector, h: &PauliTermSum) -> Result<f64> {
    h.expectation(psi)
}

fn branch_matrix(decomp: &RelativeDecomposition, h: &PauliTermSum) -> Result<[[C64; 2]; 2]> {
    check(h, 2 * decomp.env_state(0).len())?;
    let branches = [decomp.branch_amplitudes(0), decomp.branch_amplitudes(1)];
    let h_branches = [h.apply(&branches[0])?, h.apply(&branches[1])?];
    Ok([0, 1].map(|j| [0, 1].map(|i| inner(&branches[j], &h_branches[i]))))
}

/// `Σᵢ |cᵢ|² ⟨AᵢEᵢ|H|AᵢEᵢ⟩`.
pub fn energy_after_ensemble(decomp: &RelativeDecomposition, h: &PauliTermSum) -> Result<f64> {
    let m = branch_matrix(decomp, h)?;
    let w = decomp.born_weights();
    Ok((0..2).filter(|&i| w[i] > ZERO_WEIGHT * ZERO_WEIGHT).map(|i| w[i] * m[i][i].re).sum())
}

/// Energy of a single branch `|AᵢEᵢ⟩`.
pub fn branch_energy(decomp: &RelativeDecomposition, h: &PauliTermSum, i: usize) -> Result<f64> {
    Ok(branch_matrix(decomp, h)?[i][i].re)
}

/// The interference sum `Σ_{i≠j} c_j* cᵢ ⟨AⱼEⱼ|H|AᵢEᵢ⟩`, evaluated directly.
pub fn energy_delta(decomp: &RelativeDecomposition, h: &PauliTermSum) -> Result<f64> {
    let m = branch_matrix(decomp, h)?;
    let c = decomp.weights();
    Ok((c[1].conj() * c[0] * m[1][0] + c[0].conj() * c[1] * m[0][1]).re)
}

/// Energies around one collapse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    pub n: usize,
    pub e_before: f64,
    pub e_after_ensemble: f64,
    pub delta_e: f64,
    /// `|ΔE| / max(|E_before|, RELATIVE_FLOOR)`.
    pub relative_deviation: f64,
    /// `|E_before|` was below the floor; read `delta_e` instead.
    pub floored: bool,
}

impl EnergyAudit {
    pub fn new(psi: &StateVector, decomp: &RelativeDecomposition, h: &PauliTermSum) -> Result<Self> {
        let e_before = energy_before(psi, h)?;
        let e_after_ensemble = energy_after_ensemble(decomp, h)?;
        let delta_e = energy_delta(decomp, h)?;
        let floored = e_before.abs() < RELATIVE_FLOOR;
        Ok(Self {
            n: psi.num_env(),
            e_before,
            e_after_ensemble,
            delta_e,
            relative_deviation: delta_e.abs() / e_before.abs().max(RELATIVE_FLOOR),
            floored,
        })
    }
}

/// First positive local maximum of ε̇ along unitary evolution, sampled every
/// `dt` up to `t_max`. Returns `(t, ε̇, state)`.
pub fn first_speed_peak(
    probe: &EntanglementProbe,
    initial: &StateVector,
    dt: f64,
    t_max: f64,
) -> Result<Option<(f64, f64, StateVector)>> {
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_max > 0, got dt={dt}, t_max={t_max}")));
    }
    let steps = (t_max / dt + 1e-9).floor() as usize;
    let speed = |psi: &StateVector| probe.speed(psi, SpeedMethod::Analytic).map(|s| s.value);
    let mut prev = speed(initial)?;
    let mut cur_state = probe.propagator().evolve(initial, dt)?;
    let mut cur = speed(&cur_state)?;
    for k in 1..steps {
        let next_state = probe.propagator().evolve(&cur_state, dt)?;
        let next = speed(&next_state)?;
        if cur > 0.0 && cur > prev && cur >= next {
            return Ok(Some((k as f64 * dt, cur, cur_state)));
        }
        (prev, cur, cur_state) = (cur, next, next_state);
    }
    Ok(None)
}

/// One row of the N-sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub audit: EnergyAudit,
    pub t_c: f64,
    pub theta: f64,
    pub phi: f64,
    pub basis_source: BasisSource,
    pub fallback: bool,
}

/// Sweep settings shared by every N.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub method: BasisMethod,
    pub grid: ScanGrid,
    pub dt: f64,
    pub t_max: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { method: BasisMethod::Scan, grid: ScanGrid::default(), dt: 0.01, t_max: 3.0 }
    }
}

/// Collapses `initial` at its first ε̇ peak and audits the energy.
pub fn audit_at_first_peak(h: &PauliTermSum, initial: &StateVector, config: &SweepConfig) -> Result<SweepRow> {
    check(h, initial.dim())?;
    let probe = EntanglementProbe::new(h);
    let (t_c, _, psi) = first_speed_peak(&probe, initial, config.dt, config.t_max)?
        .ok_or_else(|| Error::NonConvergence(format!("no entangling-speed peak before t = {}", config.t_max)))?;
    let choice = choose_basis(&probe, &psi, config.method, &config.grid)?;
    let basis = choice
        .basis
        .ok_or_else(|| Error::NonConvergence(format!("no collapse basis singled out at t = {t_c}")))?;
    let decomp = decompose(&psi, &basis)?;
    Ok(SweepRow {
        audit: EnergyAudit::new(&psi, &decomp, h)?,
        t_c,
        theta: basis.theta(),
        phi: basis.phi(),
        basis_source: choice.source,
        fallback: choice.fell_back,
    })
}

/// Energy audit of the transverse-coupled model started from `|+⟩^(N+1)`,
/// one row per entry of `ns`, evaluated concurrently.
pub fn energy_sweep(ns: &[usize], config: &SweepConfig) -> Result<Vec<SweepRow>> {
    ns.par_iter()
        .map(|&n| {
            let h = build_hamiltonian(&ModelSpec::TransverseCoupled { n })?;
            audit_at_first_peak(&h, &StateVector::plus(n + 1)?, config)
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: [&str; 10] = [
    "N",
    "e_before",
    "e_after_ensemble",
    "delta_e",
    "relative_deviation",
    "t_c",
    "theta",
    "phi",
    "basis_source",
    "fallback",
];

/// Writes `# comment` lines, the header and one row per sweep point.
pub fn write_sweep_csv<W: Write>(mut out: W, comments: &[String], rows: &[SweepRow]) -> Result<()> {
    for line in comments {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER)?;
    for r in rows {
        let a = &r.audit;
        w.write_record([
            a.n.to_string(),
            a.e_before.to_string(),
            a.e_after_ensemble.to_string(),
            a.delta_e.to_string(),
            a.relative_deviation.to_string(),
            r.t_c.to_string(),
            r.theta.to_string(),
            r.phi.to_string(),
            r.basis_source.name().to_string(),
            r.fallback.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
