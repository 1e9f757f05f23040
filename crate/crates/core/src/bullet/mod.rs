//! Collapse basis of a macroscopic projectile moving through a gas.
//!
//! The collapse operator is a free particle in a vee potential. With
//! `ξ = (x − x₀)·b^(1/3)` the eigenproblem becomes `−ψ″ + |ξ|ψ = Ẽψ`, whose
//! ground state is `Ai(|ξ| − Ẽ)` with `−Ẽ` the first zero of `Ai′`.

mod airy;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use airy::{airy_ai, airy_ai_pair, airy_ai_prime, airy_ai_prime_first_zero, AI_0, AI_PRIME_0};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light, m/s.
pub const C_LIGHT: f64 = 2.997_924_58e8;
/// Density of steel, kg/m³.
pub const STEEL_DENSITY: f64 = 7850.0;
/// Amplitudes above this at the grid edge mean the box is too small.
pub const EDGE_LIMIT: f64 = 1e-12;

/// Ground energy of `−ψ″ + |ξ|ψ`.
pub fn reduced_ground_energy() -> f64 {
    -airy_ai_prime_first_zero()
}

/// The same ground energy in the normalization `−½ψ″ + |ξ|ψ`, i.e. the
/// constant inside the Airy argument of the closed-form wave packet.
pub fn packet_constant(reduced_energy: f64) -> f64 {
    reduced_energy * 2f64.powf(-1.0 / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulletParams {
    /// kg
    pub mass: f64,
    /// kg/m³
    pub density: f64,
    /// Potential barrier per molecule, J.
    pub barrier: f64,
    /// Molecules per metre along the flight line.
    pub line_density: f64,
    /// Ambient velocity, m/s.
    pub v0: f64,
    /// Packet centre, m.
    pub x0: f64,
}

impl Default for BulletParams {
    /// A 10 g steel bullet in air at 0 °C and 1 atm.
    fn default() -> Self {
        Self { mass: 0.01, density: STEEL_DENSITY, barrier: 1.0, line_density: 3.2e21, v0: 300.0, x0: 0.0 }
    }
}

impl BulletParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("density", self.density),
            ("barrier", self.barrier),
            ("line_density", self.line_density),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [("v0", self.v0), ("x0", self.x0)] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Sets the line density from molecules per centimetre.
    pub fn with_line_density_per_cm(mut self, n: f64) -> Self {
        self.line_density = n * 100.0;
        self
    }

    /// Half the side of a cube of the given mass and density.
    pub fn half_side(&self) -> f64 {
        0.5 * (self.mass / self.density).cbrt()
    }

    /// `b = m²c²/(aħ²)`, m⁻³.
    pub fn b(&self) -> f64 {
        self.mass * self.mass * C_LIGHT * C_LIGHT / (self.half_side() * HBAR * HBAR)
    }

    pub fn p0(&self) -> f64 {
        self.mass * self.v0
    }
}

/// `Ĉ = prefactor · [(−i∂ₓ − p₀/ħ)² + b|x − x₀|]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VeeOperator {
    /// `ηnaħ²/(m²c²)`, J·m².
    pub prefactor: f64,
    /// m⁻³
    pub b: f64,
    pub x0: f64,
    pub p0: f64,
    /// `b^(−1/3)`: one unit of ξ in metres.
    pub length_scale: f64,
    /// `prefactor·b^(2/3)`: one unit of Ẽ in joules.
    pub energy_scale: f64,
}

pub fn collapse_operator_vee(params: &BulletParams) -> Result<VeeOperator> {
    params.validate()?;
    let a = params.half_side();
    let prefactor = params.barrier * params.line_density * a * HBAR * HBAR / (params.mass.powi(2) * C_LIGHT.powi(2));
    let b = params.b();
    Ok(VeeOperator {
        prefactor,
        b,
        x0: params.x0,
        p0: params.p0(),
        length_scale: b.cbrt().recip(),
        energy_scale: prefactor * b.powf(2.0 / 3.0),
    })
}

/// Uniform grid on `ξ ∈ [−half_width, half_width]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_width: 14.0, points: 4001 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || self.points < 5 || self.points % 2 == 0 {
            return Err(Error::InvalidArgument(format!("grid needs an odd point count ≥ 5 and positive width, got {self:?}")));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn xi(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|i| -self.half_width + i as f64 * h).collect()
    }
}

/// A real envelope on a ξ grid, placed at `x₀` and boosted by `p₀`.
///
/// Amplitudes are normalized in x: `Σ|ψ|² dx = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    xi: Vec<f64>,
    envelope: Vec<f64>,
    length_scale: f64,
    x0: f64,
    p0: f64,
}

impl WavePacket {
    fn new(xi: Vec<f64>, mut envelope: Vec<f64>, length_scale: f64, x0: f64, p0: f64) -> Self {
        let dx = (xi[1] - xi[0]) * length_scale;
        let norm = (envelope.iter().map(|v| v * v).sum::<f64>() * dx).sqrt();
        // fix the overall sign so packets compare directly
        let sign = if envelope[envelope.len() / 2] < 0.0 { -1.0 } else { 1.0 };
        envelope.iter_mut().for_each(|v| *v *= sign / norm);
        Self { xi, envelope, length_scale, x0, p0 }
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn dx(&self) -> f64 {
        (self.xi[1] - self.xi[0]) * self.length_scale
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.xi[i] * self.length_scale
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// Real, boost-free part of ψ.
    pub fn envelope(&self) -> &[f64] {
        &self.envelope
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// `ψ(xᵢ) = envelope · e^{i p₀ (xᵢ − x₀)/ħ}` (phase taken relative to x₀).
    pub fn amplitude(&self, i: usize) -> C64 {
        let phase = self.p0 * self.xi[i] * self.length_scale / HBAR;
        C64::from_polar(self.envelope[i], phase)
    }

    pub fn density(&self, i: usize) -> f64 {
        self.envelope[i] * self.envelope[i]
    }

    pub fn norm_sq(&self) -> f64 {
        self.envelope.iter().map(|v| v * v).sum::<f64>() * self.dx()
    }

    pub fn edge_amplitude(&self) -> f64 {
        // in units where the packet is normalized over ξ
        let s = self.length_scale.sqrt();
        self.envelope[0].abs().max(self.envelope[self.len() - 1].abs()) * s
    }

    pub fn mean_position(&self) -> f64 {
        let dx = self.dx();
        (0..self.len()).map(|i| self.x(i) * self.density(i) * dx).sum()
    }

    pub fn position_spread(&self) -> f64 {
        let dx = self.dx();
        // about x₀ in ξ units, then scaled, to avoid cancellation against x₀
        let m: f64 = (0..self.len()).map(|i| self.xi[i] * self.density(i) * dx).sum();
        let m2: f64 = (0..self.len()).map(|i| self.xi[i] * self.xi[i] * self.density(i) * dx).sum();
        (m2 - m * m).max(0.0).sqrt() * self.length_scale
    }

    /// `⟨p⟩`. The envelope is real, so only the boost contributes.
    pub fn mean_momentum(&self) -> f64 {
        self.p0
    }

    /// `Δp = ħ·√(Σ|Δψ/Δx|² dx)` with forward differences of the envelope.
    pub fn momentum_spread(&self) -> f64 {
        let dx = self.dx();
        let k2: f64 = self.envelope.windows(2).map(|w| ((w[1] - w[0]) / dx).powi(2) * dx).sum();
        HBAR * k2.sqrt()
    }

    /// `‖ψ − φ‖₂` on a shared grid.
    pub fn l2_distance(&self, other: &WavePacket) -> Result<f64> {
        if self.len() != other.len() || (self.dx() - other.dx()).abs() > 1e-12 * self.dx().abs() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        let d: f64 = self.envelope.iter().zip(&other.envelope).map(|(a, b)| (a - b).powi(2)).sum();
        Ok((d * self.dx()).sqrt())
    }
}

/// Closed form `Ai(|ξ| − Ẽ)` sampled on the grid.
pub fn closed_form_ground_state(params: &BulletParams, grid: &GridSpec) -> Result<(WavePacket, f64)> {
    grid.validate()?;
    let op = collapse_operator_vee(params)?;
    let e = reduced_ground_energy();
    let xi = grid.xi();
    let env = xi.iter().map(|&s| airy_ai(s.abs() - e)).collect();
    let packet = WavePacket::new(xi, env, op.length_scale, op.x0, op.p0);
    check_edges(&packet)?;
    Ok((packet, e))
}

/// Second-order finite differences with Dirichlet walls, smallest eigenpair
/// by inverse iteration. Returns the packet and Ẽ.
pub fn finite_difference_ground_state(params: &BulletParams, grid: &GridSpec) -> Result<(WavePacket, f64)> {
    grid.validate()?;
    let op = collapse_operator_vee(params)?;
    let xi = grid.xi();
    let (env, e) = fd_lowest(&xi, grid.spacing())?;
    let packet = WavePacket::new(xi, env, op.length_scale, op.x0, op.p0);
    check_edges(&packet)?;
    Ok((packet, e))
}

fn check_edges(packet: &WavePacket) -> Result<()> {
    let edge = packet.edge_amplitude();
    if edge > EDGE_LIMIT {
        return Err(Error::GridTooNarrow { edge, limit: EDGE_LIMIT });
    }
    Ok(())
}

fn fd_lowest(xi: &[f64], h: f64) -> Result<(Vec<f64>, f64)> {
    let n = xi.len();
    let off = -1.0 / (h * h);
    let diag: Vec<f64> = xi.iter().map(|s| 2.0 / (h * h) + s.abs()).collect();
    // Thomas factorization of the (positive definite) tridiagonal matrix
    let mut c_prime = vec![0.0; n];
    let mut denom = vec![0.0; n];
    denom[0] = diag[0];
    c_prime[0] = off / denom[0];
    for i in 1..n {
        denom[i] = diag[i] - off * c_prime[i - 1];
        c_prime[i] = off / denom[i];
    }
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; n];
        y[0] = rhs[0] / denom[0];
        for i in 1..n {
            y[i] = (rhs[i] - off * y[i - 1]) / denom[i];
        }
        for i in (0..n - 1).rev() {
            y[i] -= c_prime[i] * y[i + 1];
        }
        y
    };
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let left = if i > 0 { v[i - 1] } else { 0.0 };
                let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                diag[i] * v[i] + off * (left + right)
            })
            .collect()
    };
    let rayleigh = |v: &[f64]| v.iter().zip(apply(v)).map(|(a, b)| a * b).sum::<f64>() / v.iter().map(|a| a * a).sum::<f64>();

    let mut v: Vec<f64> = xi.iter().map(|s| (-s.abs()).exp()).collect();
    let mut e = rayleigh(&v);
    for _ in 0..500 {
        let mut w = solve(&v);
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        w.iter_mut().for_each(|a| *a /= norm);
        let e_new = rayleigh(&w);
        v = w;
        if (e_new - e).abs() < 1e-15 * e_new.abs() {
            return Ok((v, e_new));
        }
        e = e_new;
    }
    Err(Error::NonConvergence("inverse iteration did not settle".into()))
}

/// Both ground states and their agreement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub closed_form: WavePacket,
    pub numeric: WavePacket,
    pub energy_closed_form: f64,
    pub energy_numeric: f64,
    /// `‖ψ_closed − ψ_numeric‖₂`; scale-free since both are normalized.
    pub l2_distance: f64,
}

pub fn ground_state(params: &BulletParams, grid: &GridSpec) -> Result<GroundState> {
    let (closed_form, energy_closed_form) = closed_form_ground_state(params, grid)?;
    let (numeric, energy_numeric) = finite_difference_ground_state(params, grid)?;
    let l2_distance = closed_form.l2_distance(&numeric)?;
    Ok(GroundState { closed_form, numeric, energy_closed_form, energy_numeric, l2_distance })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Uncertainties {
    /// `(ħ²/(2c²ρ^(1/3)))^(1/3) · m^(−5/9)`
    pub delta_x_formula: f64,
    /// `½(2ħc²ρ^(1/3))^(1/3) · m^(−4/9)`
    pub delta_v_formula: f64,
    /// Standard deviation of x in the numeric ground state.
    pub delta_x_numeric: f64,
    pub delta_v_numeric: f64,
    /// `m·Δx·Δv/ħ` from the formulas.
    pub product_formula_over_hbar: f64,
    /// `m·Δx·Δv/ħ` from the numeric moments.
    pub product_numeric_over_hbar: f64,
}

pub fn uncertainties(params: &BulletParams) -> Result<Uncertainties> {
    uncertainties_on(params, &GridSpec::default())
}

pub fn uncertainties_on(params: &BulletParams, grid: &GridSpec) -> Result<Uncertainties> {
    params.validate()?;
    let (m, rho) = (params.mass, params.density);
    let delta_x_formula = (HBAR * HBAR / (2.0 * C_LIGHT * C_LIGHT * rho.cbrt())).cbrt() * m.powf(-5.0 / 9.0);
    let delta_v_formula = 0.5 * (2.0 * HBAR * C_LIGHT * C_LIGHT * rho.cbrt()).cbrt() * m.powf(-4.0 / 9.0);
    let (packet, _) = finite_difference_ground_state(params, grid)?;
    let delta_x_numeric = packet.position_spread();
    let delta_v_numeric = packet.momentum_spread() / m;
    Ok(Uncertainties {
        delta_x_formula,
        delta_v_formula,
        delta_x_numeric,
        delta_v_numeric,
        product_formula_over_hbar: m * delta_x_formula * delta_v_formula / HBAR,
        product_numeric_over_hbar: m * delta_x_numeric * delta_v_numeric / HBAR,
    })
}

/// `(ηna/c²) / (m/2)`: kinetic coefficient of the collapse operator over
/// that of the bullet's own Hamiltonian.
pub fn dominance_ratio(params: &BulletParams) -> Result<f64> {
    params.validate()?;
    let coeff = params.barrier * params.line_density * params.half_side() / (C_LIGHT * C_LIGHT);
    Ok(coeff / (0.5 * params.mass))
}

/// Summary written by the command line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulletReport {
    pub a: f64,
    pub b: f64,
    pub delta_x_formula: f64,
    pub delta_x_numeric: f64,
    pub delta_v_formula: f64,
    pub delta_v_numeric: f64,
    /// From the numeric moments.
    pub product_over_hbar: f64,
    pub dominance_ratio: f64,
}

pub fn bullet_report(params: &BulletParams) -> Result<BulletReport> {
    bullet_report_on(params, &GridSpec::default())
}

pub fn bullet_report_on(params: &BulletParams, grid: &GridSpec) -> Result<BulletReport> {
    let u = uncertainties_on(params, grid)?;
    Ok(BulletReport {
        a: params.half_side(),
        b: params.b(),
        delta_x_formula: u.delta_x_formula,
        delta_x_numeric: u.delta_x_numeric,
        delta_v_formula: u.delta_v_formula,
        delta_v_numeric: u.delta_v_numeric,
        product_over_hbar: u.product_numeric_over_hbar,
        dominance_ratio: dominance_ratio(params)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steel_bullet_geometry() {
        let p = BulletParams::default();
        assert!((p.half_side() - 0.0054).abs() < 0.0001);
        let q = BulletParams { mass: 0.02, density: p.density * 2.0, ..p };
        assert!((q.half_side() - p.half_side()).abs() < 1e-15);
        assert!((q.b() / p.b() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_params() {
        let p = BulletParams { mass: -0.01, ..BulletParams::default() };
        assert!(collapse_operator_vee(&p).is_err());
        assert!(dominance_ratio(&BulletParams { barrier: 0.0, ..BulletParams::default() }).is_err());
        assert!(uncertainties(&BulletParams { v0: f64::NAN, ..BulletParams::default() }).is_err());
    }

    #[test]
    fn per_cm_conversion() {
        let p = BulletParams::default().with_line_density_per_cm(3.2e19);
        assert!((p.line_density - 3.2e21).abs() < 1e6);
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let grid = GridSpec { half_width: 6.0, points: 1001 };
        assert!(matches!(closed_form_ground_state(&BulletParams::default(), &grid), Err(Error::GridTooNarrow { .. })));
    }

    #[test]
    fn packets_are_normalized_and_even() {
        let gs = ground_state(&BulletParams::default(), &GridSpec::default()).unwrap();
        for p in [&gs.closed_form, &gs.numeric] {
            assert!((p.norm_sq() - 1.0).abs() < 1e-8);
            let n = p.len();
            let s = p.length_scale.sqrt();
            for i in 0..n / 2 {
                assert!((p.envelope()[i] - p.envelope()[n - 1 - i]).abs() * s < 1e-8);
            }
        }
    }

    #[test]
    fn boost_moves_momentum_only() {
        let still = closed_form_ground_state(&BulletParams { v0: 0.0, ..BulletParams::default() }, &GridSpec::default()).unwrap().0;
        let moving = closed_form_ground_state(&BulletParams::default(), &GridSpec::default()).unwrap().0;
        assert_eq!(moving.mean_momentum() - still.mean_momentum(), 0.01 * 300.0);
        for i in (0..still.len()).step_by(97) {
            assert!((moving.amplitude(i).norm_sqr() - still.density(i)).abs() <= 1e-12 * still.density(i).max(1.0));
        }
    }
}
