use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::quantum::{inner, norm_sq};

/// Largest system or apparatus dimension accepted.
pub const MAX_FACTOR_DIM: usize = 16;
/// Allowed Frobenius residual of `Σ M†M − I`.
pub const COMPLETENESS_TOLERANCE: f64 = 1e-9;

/// Measurement operators `{M_m}` on the system, one per collapse-basis state
/// of the apparatus.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOperators {
    operators: Vec<DMatrix<C64>>,
    residual: f64,
}

impl MeasurementOperators {
    pub fn operators(&self) -> &[DMatrix<C64>] {
        &self.operators
    }

    /// `‖Σ M_m†M_m − I‖_F`.
    pub fn completeness_residual(&self) -> f64 {
        self.residual
    }

    /// `p_m = ⟨S₀|M_m†M_m|S₀⟩`.
    pub fn probabilities(&self, s0: &[C64]) -> Result<Vec<f64>> {
        let d = self.operators[0].ncols();
        if s0.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: s0.len() });
        }
        let v = DMatrix::from_column_slice(d, 1, s0);
        Ok(self.operators.iter().map(|m| (m * &v).norm_squared()).collect())
    }
}

/// `M_m = (I_S ⊗ ⟨A_m|) U (I_S ⊗ |A_r⟩)`.
///
/// `joint_unitary` acts on `S ⊗ A` with index `s·d_A + a`; `basis` holds
/// `d_A` orthonormal apparatus vectors. Completeness is checked on the
/// result, so a non-unitary `U` surfaces as [`Error::Incomplete`].
pub fn derive_measurement_operators(
    joint_unitary: &DMatrix<C64>,
    ready_state: &[C64],
    basis: &[Vec<C64>],
) -> Result<MeasurementOperators> {
    let d_a = ready_state.len();
    if d_a == 0 || d_a > MAX_FACTOR_DIM {
        return Err(Error::InvalidArgument(format!("apparatus dimension {d_a} outside 1..={MAX_FACTOR_DIM}")));
    }
    let n = joint_unitary.nrows();
    if joint_unitary.ncols() != n || n % d_a != 0 {
        return Err(Error::DimensionMismatch { expected: d_a, found: n });
    }
    let d_s = n / d_a;
    if d_s > MAX_FACTOR_DIM {
        return Err(Error::InvalidArgument(format!("system dimension {d_s} exceeds {MAX_FACTOR_DIM}")));
    }
    if (norm_sq(ready_state) - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument("ready state is not normalized".into()));
    }
    if basis.len() != d_a || basis.iter().any(|b| b.len() != d_a) {
        return Err(Error::DimensionMismatch { expected: d_a, found: basis.len() });
    }
    for (i, u) in basis.iter().enumerate() {
        for (j, v) in basis.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            if (inner(u, v) - expected).norm() > 1e-10 {
                return Err(Error::InvalidArgument("collapse basis is not orthonormal".into()));
            }
        }
    }

    let operators: Vec<DMatrix<C64>> = basis
        .iter()
        .map(|am| {
            DMatrix::from_fn(d_s, d_s, |sp, s| {
                let mut acc = C64::new(0.0, 0.0);
                for ap in 0..d_a {
                    for a in 0..d_a {
                        acc += am[ap].conj() * joint_unitary[(sp * d_a + ap, s * d_a + a)] * ready_state[a];
                    }
                }
                acc
            })
        })
        .collect();

    let sum = operators.iter().fold(DMatrix::zeros(d_s, d_s), |acc, m| acc + m.adjoint() * m);
    let residual = (sum - DMatrix::<C64>::identity(d_s, d_s)).norm();
    if !(residual <= COMPLETENESS_TOLERANCE) {
        return Err(Error::Incomplete { residual });
    }
    Ok(MeasurementOperators { operators, residual })
}

/// Two-level detector coupled to a qubit: with detector states
/// `u` (ready) and `c` (clicked),
/// `|0u⟩ → |0u⟩`, `|1u⟩ → √(1−|c|²)|1u⟩ + c|0c⟩`,
/// `|0c⟩ → −c*|1u⟩ + √(1−|c|²)|0c⟩`, `|1c⟩ → |1c⟩`.
pub fn detector_unitary(c_click: C64) -> Result<DMatrix<C64>> {
    let p = c_click.norm_sqr();
    if !(p <= 1.0) {
        return Err(Error::InvalidArgument(format!("|c_click|² = {p} exceeds 1")));
    }
    let r = C64::new((1.0 - p).sqrt(), 0.0);
    let one = C64::new(1.0, 0.0);
    // index s·2 + a with a = 0 for u, 1 for c
    let (u0, c0, u1, c1) = (0, 1, 2, 3);
    let mut m = DMatrix::zeros(4, 4);
    m[(u0, u0)] = one;
    m[(u1, u1)] = r;
    m[(c0, u1)] = c_click;
    m[(u1, c0)] = -c_click.conj();
    m[(c0, c0)] = r;
    m[(c1, c1)] = one;
    Ok(m)
}

/// CNOT with the system as control: `|s, a⟩ → |s, a ⊕ s⟩`.
pub fn cnot_system_control() -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |row, col| {
        let (s, a) = (col / 2, col % 2);
        if row == s * 2 + (a ^ s) { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
    })
}
