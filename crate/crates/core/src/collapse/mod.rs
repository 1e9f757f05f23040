//! Relative-state decomposition, collapse-basis selection, Born sampling,
//! collapse trajectories and measurement operators.

mod basis;
mod measurement;
mod nelder_mead;
mod operator;
mod scan;
mod trajectory;

pub use basis::{decompose, mean_entangling_acceleration, CandidateBasis, RelativeDecomposition, ZERO_WEIGHT};
pub use measurement::{
    cnot_system_control, derive_measurement_operators, detector_unitary, MeasurementOperators, COMPLETENESS_TOLERANCE,
    MAX_FACTOR_DIM,
};
pub use operator::{collapse_operator, CollapseOperator, EnvironmentSpec, DEGENERATE_TOLERANCE};
pub use scan::{basis_objective, scan_collapse_basis, scan_with_probe, ScanGrid, ScanReport, TIE_TOLERANCE};
pub use trajectory::{
    check_threshold, choose_basis, run_trajectory, run_trajectory_with_probe, sample_outcome, write_events_jsonl,
    BasisChoice, BasisMethod, BasisSource, CollapseEvent, Outcome, SkippedEvent, ThresholdPolicy, Trajectory,
    TrajectoryConfig, AUTO_OPERATOR_MIN_ENV,
};
