//! Periodic orbits: truncated Fourier representation, collocation Newton,
//! branch continuation and a symplectic time integrator.

mod collocation;
mod continuation;
mod fourier;
mod integrate;

pub use collocation::{
    modes_norm, newton_orbit, orthogonality_check, residual, wave_pattern_residual, ArclengthConstraint, FrequencyMode,
    Gauges, NewtonSolution, Reduction, NEWTON_MAX_ITER, NEWTON_TOL, SINGULAR_RATIO,
};
pub use continuation::{continue_branch, BranchPoint, ContinuationBranch, ContinuationSettings, Termination};
pub use fourier::{mode_inner, FourierOrbit};
pub use integrate::{deviation_from_rotating_wave, integrate, Trajectory};
