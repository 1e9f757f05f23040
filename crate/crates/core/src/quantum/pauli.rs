use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{Error, Result};

/// Largest imaginary part tolerated on a custom coefficient.
const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// 2×2 matrix in the `{|0⟩, |1⟩}` basis, row-major.
    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// Which side of the system/environment cut a term acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermKind {
    SystemOnly,
    EnvOnly,
    Interaction,
}

/// One weighted Pauli string `coeff · P₀ ⊗ P₁ ⊗ … ⊗ P_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    coeff: f64,
    ops: Vec<Pauli>,
    kind: TermKind,
    x_mask: usize,
    z_mask: usize,
    // i^(number of Y factors)
    phase: C64,
}

impl PauliTerm {
    fn new(coeff: f64, ops: Vec<Pauli>) -> Self {
        let n = ops.len();
        let mut x_mask = 0;
        let mut z_mask = 0;
        let mut ny = 0;
        for (site, op) in ops.iter().enumerate() {
            let bit = 1usize << (n - 1 - site);
            match op {
                Pauli::I => {}
                Pauli::X => x_mask |= bit,
                Pauli::Z => z_mask |= bit,
                Pauli::Y => {
                    x_mask |= bit;
                    z_mask |= bit;
                    ny += 1;
                }
            }
        }
        let on_system = ops[0] != Pauli::I;
        let on_env = ops[1..].iter().any(|&p| p != Pauli::I);
        let kind = match (on_system, on_env) {
            (true, true) => TermKind::Interaction,
            (true, false) => TermKind::SystemOnly,
            // identity strings are a constant offset and land in the environment part
            (false, _) => TermKind::EnvOnly,
        };
        let phase = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][ny % 4];
        Self { coeff, ops, kind, x_mask, z_mask, phase }
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn kind(&self) -> TermKind {
        self.kind
    }

    /// Pauli acting on the system site.
    pub fn system_op(&self) -> Pauli {
        self.ops[0]
    }

    pub fn label(&self) -> String {
        self.ops.iter().map(|p| p.as_char()).collect()
    }

    fn is_diagonal(&self) -> bool {
        self.x_mask == 0
    }

    fn is_real(&self) -> bool {
        self.phase.im == 0.0
    }

    /// Amplitude and target index of `P|index⟩`.
    #[inline]
    fn act(&self, index: usize) -> (C64, usize) {
        let sign = if (index & self.z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        (self.phase * sign, index ^ self.x_mask)
    }

    /// Accumulates `scale · coeff · P v` into `out`.
    pub(crate) fn apply_add(&self, v: &[C64], out: &mut [C64], scale: C64) {
        let w = scale * self.coeff;
        for (index, amp) in v.iter().enumerate() {
            let (phase, target) = self.act(index);
            out[target] += w * phase * amp;
        }
    }

    /// Accumulates `coeff · P v` restricted to the environment sites into `out`
    /// (the system factor is dropped). `v` has length 2^N.
    pub(crate) fn apply_env_add(&self, v: &[C64], out: &mut [C64]) {
        let env_mask = v.len() - 1;
        let x = self.x_mask & env_mask;
        let z = self.z_mask & env_mask;
        let ny = self.ops[1..].iter().filter(|&&p| p == Pauli::Y).count();
        let phase = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][ny % 4];
        let w = phase * self.coeff;
        for (index, amp) in v.iter().enumerate() {
            let sign = if (index & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[index ^ x] += w * sign * amp;
        }
    }
}

/// Hamiltonian or observable as a real-weighted sum of Pauli strings,
/// each term tagged by the part of the bipartition it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTermSum {
    num_sites: usize,
    terms: Vec<PauliTerm>,
}

impl PauliTermSum {
    /// Empty (zero) operator on `num_sites` sites.
    pub fn zero(num_sites: usize) -> Result<Self> {
        if num_sites < 2 {
            return Err(Error::InvalidModel(format!(
                "need the system qubit plus at least one environment spin, got {num_sites} sites"
            )));
        }
        Ok(Self { num_sites, terms: Vec::new() })
    }

    /// Adds `coeff · label`, e.g. `push(1.0, "ZZI")`.
    pub fn push(&mut self, coeff: f64, label: &str) -> Result<&mut Self> {
        let ops = parse_label(label)?;
        self.push_ops(coeff, ops)
    }

    pub fn push_ops(&mut self, coeff: f64, ops: Vec<Pauli>) -> Result<&mut Self> {
        if ops.len() != self.num_sites {
            return Err(Error::InvalidModel(format!(
                "Pauli string of length {} on a {}-site register",
                ops.len(),
                self.num_sites
            )));
        }
        if !coeff.is_finite() {
            return Err(Error::InvalidModel(format!("non-finite coefficient {coeff}")));
        }
        if coeff != 0.0 {
            self.terms.push(PauliTerm::new(coeff, ops));
        }
        Ok(self)
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn dim(&self) -> usize {
        1 << self.num_sites
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn terms_of(&self, kind: TermKind) -> impl Iterator<Item = &PauliTerm> {
        self.terms.iter().filter(move |t| t.kind == kind)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every term is built from `I` and `Z` only.
    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(PauliTerm::is_diagonal)
    }

    /// True when the matrix is real symmetric (even number of `Y` in every term).
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(PauliTerm::is_real)
    }

    /// `Σ |coeff|`, an upper bound on the spectral radius.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    /// `H v` for a raw amplitude vector.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for term in &self.terms {
            term.apply_add(v, &mut out, C64::new(1.0, 0.0));
        }
        Ok(out)
    }

    /// `⟨ψ|H|ψ⟩`; the imaginary residue is discarded after a 1e-10 check.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        let hv = self.apply(psi.amplitudes())?;
        let value = super::state::inner(psi.amplitudes(), &hv);
        debug_assert!(value.im.abs() < 1e-10 * (1.0 + value.re.abs()));
        Ok(value.re)
    }

    /// `⟨u|H|v⟩` for raw vectors.
    pub fn matrix_element(&self, u: &[C64], v: &[C64]) -> Result<C64> {
        let hv = self.apply(v)?;
        Ok(super::state::inner(u, &hv))
    }

    /// Diagonal entries, when the operator is diagonal in the computational basis.
    pub fn diagonal(&self) -> Option<Vec<f64>> {
        if !self.is_diagonal() {
            return None;
        }
        let mut diag = vec![0.0; self.dim()];
        for term in &self.terms {
            for (index, d) in diag.iter_mut().enumerate() {
                let (phase, _) = term.act(index);
                *d += term.coeff * phase.re;
            }
        }
        Some(diag)
    }

    /// Materializes the full 2^n × 2^n matrix. Only for small registers.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = self.dim();
        let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        for term in &self.terms {
            for col in 0..dim {
                let (phase, row) = term.act(col);
                m[(row, col)] += phase * term.coeff;
            }
        }
        m
    }

    /// Real part of [`to_dense`](Self::to_dense); exact when [`is_real`](Self::is_real).
    pub(crate) fn to_dense_real(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for term in &self.terms {
            for col in 0..dim {
                let (phase, row) = term.act(col);
                m[(row, col)] += phase.re * term.coeff;
            }
        }
        m
    }
}

impl fmt::Display for PauliTermSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}·{}", t.coeff, t.label())?;
        }
        Ok(())
    }
}

/// `H v` without materializing the matrix.
pub fn apply_operator(op: &PauliTermSum, psi: &StateVector) -> Result<Vec<C64>> {
    op.apply(psi.amplitudes())
}

fn parse_label(label: &str) -> Result<Vec<Pauli>> {
    label
        .chars()
        .map(|c| Pauli::from_char(c).ok_or_else(|| Error::InvalidModel(format!("bad Pauli label `{label}`"))))
        .collect()
}

/// Named model families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `g σ_z,A ⊗ Σ_k σ_z,k`
    DegenerateIsing,
    /// `σ_x,A + σ_z,A ⊗ Σ_k σ_z,k + Σ_k σ_x,k`
    TransverseCoupled,
    Custom,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DegenerateIsing => "degenerate_ising",
            ModelKind::TransverseCoupled => "transverse_coupled",
            ModelKind::Custom => "custom",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degenerate_ising" => Ok(ModelKind::DegenerateIsing),
            "transverse_coupled" => Ok(ModelKind::TransverseCoupled),
            "custom" => Ok(ModelKind::Custom),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A model family with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    DegenerateIsing { n: usize, g: f64 },
    TransverseCoupled { n: usize },
    /// Terms given as `(coefficient, label)`; complex coefficients are accepted
    /// only so that non-Hermitian input can be detected and rejected.
    Custom { num_sites: usize, terms: Vec<(C64, String)> },
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::DegenerateIsing { .. } => ModelKind::DegenerateIsing,
            ModelSpec::TransverseCoupled { .. } => ModelKind::TransverseCoupled,
            ModelSpec::Custom { .. } => ModelKind::Custom,
        }
    }

    /// Number of environment spins.
    pub fn num_env(&self) -> usize {
        match self {
            ModelSpec::DegenerateIsing { n, .. } | ModelSpec::TransverseCoupled { n } => *n,
            ModelSpec::Custom { num_sites, .. } => num_sites.saturating_sub(1),
        }
    }
}

pub fn build_hamiltonian(model: &ModelSpec) -> Result<PauliTermSum> {
    match model {
        ModelSpec::DegenerateIsing { n, g } => {
            check_env_size(*n)?;
            if !g.is_finite() {
                return Err(Error::InvalidModel(format!("coupling g = {g} is not finite")));
            }
            let mut h = PauliTermSum::zero(n + 1)?;
            for k in 1..=*n {
                h.push_ops(*g, zz_string(n + 1, k))?;
            }
            Ok(h)
        }
        ModelSpec::TransverseCoupled { n } => {
            check_env_size(*n)?;
            let sites = n + 1;
            let mut h = PauliTermSum::zero(sites)?;
            h.push_ops(1.0, single_site(sites, 0, Pauli::X))?;
            for k in 1..=*n {
                h.push_ops(1.0, zz_string(sites, k))?;
            }
            for k in 1..=*n {
                h.push_ops(1.0, single_site(sites, k, Pauli::X))?;
            }
            Ok(h)
        }
        ModelSpec::Custom { num_sites, terms } => {
            let mut h = PauliTermSum::zero(*num_sites)?;
            for (coeff, label) in terms {
                if coeff.im.abs() > HERMITIAN_TOLERANCE {
                    return Err(Error::NonHermitian(format!(
                        "term {label} has complex coefficient {coeff}"
                    )));
                }
                h.push(coeff.re, label)?;
            }
            Ok(h)
        }
    }
}

fn check_env_size(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidModel("environment size N must be at least 1".into()));
    }
    Ok(())
}

fn zz_string(sites: usize, k: usize) -> Vec<Pauli> {
    let mut ops = vec![Pauli::I; sites];
    ops[0] = Pauli::Z;
    ops[k] = Pauli::Z;
    ops
}

fn single_site(sites: usize, k: usize, p: Pauli) -> Vec<Pauli> {
    let mut ops = vec![Pauli::I; sites];
    ops[k] = p;
    ops
}
