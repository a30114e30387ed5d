//! Synthetic data generators for tests and desk-scale experiments.

mod session;
mod sparse;

pub use session::{
    amplitude_for_contrast, expected_alpha_energy, synth_sessions, BurstSpec, NoiseModel, SessionSpec,
    SynthSessions,
};
pub use sparse::{sparse_dataset, SparseSpec};
