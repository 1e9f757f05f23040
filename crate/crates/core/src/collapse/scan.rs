use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{decompose, CandidateBasis};
use super::nelder_mead;
use crate::entanglement::EntanglementProbe;
use crate::error::{Error, Result};
use crate::quantum::{PauliTermSum, StateVector};

/// Values within this of the minimum count as ties; a landscape whose whole
/// range is below it is flat.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Resolution of the Bloch-sphere scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    /// Polar samples over `[0, π]`, both poles included.
    pub n_theta: usize,
    /// Azimuthal samples over `[0, 2π)`.
    pub n_phi: usize,
    /// Run Nelder–Mead from the best grid cell.
    pub refine: bool,
    /// Simplex diameter at which refinement stops (radians).
    pub refine_tolerance: f64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self { n_theta: 64, n_phi: 64, refine: true, refine_tolerance: 1e-6 }
    }
}

impl ScanGrid {
    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n_theta).map(|i| PI * i as f64 / (self.n_theta - 1) as f64).collect()
    }

    pub fn phis(&self) -> Vec<f64> {
        (0..self.n_phi).map(|j| TAU * j as f64 / self.n_phi as f64).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n_theta < 2 || self.n_phi < 1 || !(self.refine_tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid scan grid {self:?}")));
        }
        Ok(())
    }
}

/// Diagnostics of one scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// `values[i][j]` is the objective at `(thetas[i], phis[j])`.
    pub values: Vec<Vec<f64>>,
    /// Tie-broken grid argmin `(θ, φ, value)`.
    pub grid_best: (f64, f64, f64),
    /// Final `(θ, φ, value)` after refinement (equal to `grid_best` when
    /// refinement is off or failed to improve beyond the tie tolerance).
    pub best: (f64, f64, f64),
    pub refine_iterations: usize,
    /// `max − min < TIE_TOLERANCE` across the grid.
    pub flat: bool,
}

/// Objective minimized by the scan: the ensemble-averaged entangling
/// acceleration after collapsing `psi` in `basis`.
pub fn basis_objective(probe: &EntanglementProbe, psi: &StateVector, basis: &CandidateBasis) -> Result<f64> {
    decompose(psi, basis)?.mean_acceleration(probe)
}

/// Collapse basis minimizing the mean entangling acceleration over the Bloch
/// sphere: coarse grid, then Nelder–Mead from the best cell.
///
/// Ties within [`TIE_TOLERANCE`] go to the smallest θ, then the smallest φ.
pub fn scan_collapse_basis(psi: &StateVector, h: &PauliTermSum, grid: &ScanGrid) -> Result<(CandidateBasis, ScanReport)> {
    scan_with_probe(&EntanglementProbe::new(h), psi, grid)
}

pub fn scan_with_probe(probe: &EntanglementProbe, psi: &StateVector, grid: &ScanGrid) -> Result<(CandidateBasis, ScanReport)> {
    grid.validate()?;
    if psi.dim() != probe.hamiltonian().dim() {
        return Err(Error::DimensionMismatch { expected: probe.hamiltonian().dim(), found: psi.dim() });
    }
    let thetas = grid.thetas();
    let phis = grid.phis();
    let last = thetas.len() - 1;

    // The poles are one basis each; evaluate them once.
    let values: Vec<Vec<f64>> = thetas
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| -> Result<Vec<f64>> {
            if i == 0 || i == last {
                let v = basis_objective(probe, psi, &CandidateBasis::new(theta, 0.0)?)?;
                return Ok(vec![v; phis.len()]);
            }
            phis.iter().map(|&phi| basis_objective(probe, psi, &CandidateBasis::new(theta, phi)?)).collect()
        })
        .collect::<Result<_>>()?;

    let (min, max) = values
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let flat = max - min < TIE_TOLERANCE;
    let (bi, bj) = values
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &v)| (i, j, v)))
        .find(|&(_, _, v)| v <= min + TIE_TOLERANCE)
        .map(|(i, j, _)| (i, j))
        .expect("grid is nonempty");
    let grid_best = (thetas[bi], phis[bj], values[bi][bj]);

    let mut best = grid_best;
    let mut refine_iterations = 0;
    if grid.refine && !flat {
        let step = [0.5 * PI / last as f64, 0.5 * TAU / phis.len() as f64];
        let m = nelder_mead::minimize(
            |[t, p]| basis_objective(probe, psi, &CandidateBasis::from_unbounded(t, p)),
            [grid_best.0, grid_best.1],
            step,
            grid.refine_tolerance,
            1e-13,
            400,
        )?;
        refine_iterations = m.iterations;
        if m.value < grid_best.2 - TIE_TOLERANCE {
            let b = CandidateBasis::from_unbounded(m.point[0], m.point[1]);
            best = (b.theta(), b.phi(), m.value);
        }
    }

    let basis = CandidateBasis::new(best.0, best.1)?;
    Ok((basis, ScanReport { thetas, phis, values, grid_best, best, refine_iterations, flat }))
}
