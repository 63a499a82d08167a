//! Reduced-order micro-macro model: projection, time stepping, prediction
//! at unseen directions and persistence.

mod basis;
mod io;
mod model;
mod predict;

pub use basis::{ReducedBasis, SVD_CUTOFF};
pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC};
pub use model::{
    project_operators, rom_solve, ProjectedOperators, ReducedModel, RomState, RomTrajectory,
    SECOND_PAIRS,
};
pub use predict::{predict_unseen, reconstruct_moments};
