//! The DP particle filter: tempered rejection with kernel propagation and
//! mixture importance weights.

mod engine;
mod hook;
mod kernel;
mod schedule;

pub use engine::{
    build_kernel, initialize, normalize, normalize_log, propagate_accept, reweight, run_dp_pf, step, Accepted,
    IterationDiagnostics, ParticleSet, PfOptions, PfRun, Propagator, RestartPoint, WeightDenominator,
};
pub use hook::{AcceptanceHook, ConstantHook, FnHook, KNormHook, LaplaceHook, TemperLevel};
pub use kernel::GaussianKernel;
pub use schedule::{KernelSpec, Schedule};
