//! States, Pauli-sum operators, partial trace and unitary evolution for a
//! register made of one system qubit (site 0) and N environment spins.

mod density;
mod evolve;
mod pauli;
mod state;

pub use density::{partial_trace_system, BipartiteSplit, DensityMatrix};
pub(crate) use density::{pure_state_spectrum, reduce_outer, reduce_system};
pub use evolve::{evolve, EvolutionMethod, Propagator, DENSE_MAX_SITES};
pub use pauli::{apply_operator, build_hamiltonian, ModelKind, ModelSpec, Pauli, PauliTerm, PauliTermSum, TermKind};
pub use state::{StateVector, NORM_TOLERANCE};
pub(crate) use state::{inner, kron, norm_sq};
