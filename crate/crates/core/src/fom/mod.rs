//! Full-order micro-macro solver.

mod diffusion;
mod problem;
mod sink;
mod solver;

pub use diffusion::diffusion_limit_solve;
pub use problem::{
    default_penalties, energy_stable_dt, stable_dt, stable_dt_raw, MicroInit, ProblemDefinition,
    TimeGrid,
};
pub use sink::{
    read_snapshot_file, FileSink, FnSink, MemorySink, NullSink, RhoCsvSink, RhoSink, SnapshotFile,
    SnapshotSink, SNAPSHOT_MAGIC,
};
pub use solver::{
    assemble_schur, discrete_energy, fom_solve, fom_step, micro_rhs, schur_matrix, theta_diagonal,
    Fom, FomState, FomSummary, SchurSystem,
};
