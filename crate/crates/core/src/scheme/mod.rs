//! The convex-integration constructor: step parameters, stage driver and
//! starting tuples.

pub mod params;
pub mod presets;
pub mod profiles;
pub mod stage;
pub mod state;
pub mod step;
pub mod timederiv;

pub use params::{nu, LambdaRule, Mode, MuRule, RhoNormalization, StageParams, StepParams, Variant, STEPS_PER_STAGE};
pub use profiles::{torus_volume, EnergyExpr, EnergyProfile, HeatSource, Polynomial, X3Series};
pub use state::ReynoldsState;
pub use step::{
    amplitude_b, amplitude_beta, assemble_step, energy_spectral, rho_bar, rho_bar_normalized, temperature_wave,
    velocity_wave, velocity_wave_curl, SampleNorms, StageBase, StepBlocks, StepContext, StepOptions, StepReport,
};
pub use stage::{
    eta_for, run_outer, run_stage, ContractCheck, OuterIteration, RepresentationCheck, StageConfig, StageReport, Workspace,
};
