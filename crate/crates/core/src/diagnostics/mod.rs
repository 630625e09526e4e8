//! Measurements: residual of the relaxed system, energy gap, Hölder
//! quotients and stationary-phase decay.

pub mod decay;
pub mod energy;
pub mod holder;
pub mod residual;

pub use decay::{loglog_slope, stress_decay_experiment, DecayConfig, DecayRow, DecayRun, DecayTable};
pub use energy::{energy_gap, in_band, EnergyReport, EnergySample};
pub use holder::{derivative_seminorm, holder_estimate, HOLDER_PAIRS};
pub use residual::{system_residual, ResidualReport, ResidualSample};
