//! Convergence instrumentation and the synthetic benchmark scenes.

mod fit;
mod scene;
mod sweep;
mod trace;

pub use fit::{power_law_fit, PowerLawFit};
pub use scene::{disk_scene, DiskScene, SyntheticScene, DEFAULT_SCENE_SEED};
pub use sweep::{resolution_sweep, SweepParams, SweepRow};
pub use trace::{initial_convergence_rate, ConvergenceTrace, DEFAULT_RATE_WINDOW};
