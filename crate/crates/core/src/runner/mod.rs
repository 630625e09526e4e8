//! Experiment orchestration: builds the starting tuple, runs the requested
//! experiment and writes snapshots, CSV diagnostics and a plain-text report.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;

use crate::antidiv::MultiplierTable;
use crate::diagnostics::{stress_decay_experiment, system_residual, DecayConfig, DecayRun, ResidualReport};
use crate::error::Result;
use crate::geometry::DirectionFamily;
use crate::io::{read_state, write_diagnostics, write_state, DiagnosticsTable, RowKey};
use crate::partition::PartitionSpec;
use crate::scheme::presets::{self, RelaxedSpec};
use crate::scheme::{
    eta_for, run_outer, run_stage, EnergyProfile, ReynoldsState, StageConfig, StageReport, StepReport, Variant, Workspace,
};
use crate::torus::{TimeGrid, Torus};

pub use config::{Experiment, Preset, RunConfig};

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub report: String,
    pub residual: Option<ResidualReport>,
}

pub fn relaxed_spec(cfg: &RunConfig) -> RelaxedSpec {
    RelaxedSpec {
        velocity: cfg.velocity.clone(),
        theta0: cfg.theta0.clone(),
        p_amp: cfg.p_amp,
        f_sol_amp: cfg.f_sol_amp,
        delta: cfg.delta,
    }
}

/// The starting tuple named by `cfg.preset`.
pub fn build_preset(cfg: &RunConfig, torus: &Torus, table: &MultiplierTable, time: TimeGrid) -> Result<ReynoldsState> {
    match cfg.preset {
        Preset::Thm11 => presets::thm11(torus, time, &cfg.theta0, cfg.delta),
        Preset::Thm12 => presets::thm12(torus, time, &cfg.heat(), cfg.delta),
        Preset::Thm13 => presets::thm13(torus, time, cfg.thm13_n),
        Preset::Relaxed => presets::relaxed(torus, table, time, &relaxed_spec(cfg)),
    }
}

/// One row per step and time sample; the energy gap after the last step
/// goes on that step's rows.
fn push_steps(table: &mut DiagnosticsTable, experiment: &str, grid: &str, rep: &StageReport) {
    let gaps: Vec<Option<f64>> = rep
        .energy_after
        .as_ref()
        .map(|e| e.samples.iter().map(|s| Some(s.gap)).collect())
        .unwrap_or_default();
    for (i, s) in rep.steps.iter().enumerate() {
        let key = RowKey {
            experiment,
            grid: grid.to_string(),
            step: s.params.n,
            lambda: s.params.lambda,
            mu: s.params.mu,
        };
        let last = i + 1 == rep.steps.len();
        table.push_samples(&key, &s.samples, if last { &gaps } else { &[] }, s.overflow);
    }
}

fn describe_stage(out: &mut String, rep: &StageReport) {
    let _ = writeln!(out, "δ = {:e}", rep.delta);
    let _ = writeln!(out, "η = {:.6e}    M (measured) = {:.6e}", rep.eta, rep.m_const);
    let _ = writeln!(out, "amplitude scale s(t) ∈ [{:.6e}, {:.6e}]", rep.scale_min, rep.scale_max);
    for s in &rep.steps {
        let m = &s.max;
        let _ = writeln!(
            out,
            "step {} (λ = {}, μ = {}, {} cells, max ν = {}): ‖δR̊‖ = {:.4e} [osc {:.3e}, transport {:.3e}, error I {:.3e}, error II {:.3e}]; ‖δf‖ = {:.4e} [osc {:.3e}, transport {:.3e}, error I {:.3e}, error II {:.3e}]; ‖w‖ = {:.3e}, |⨍w| = {:.2e}, ‖div w‖ = {:.2e}, ‖b‖ = {:.3e}, ‖β‖ = {:.3e}, truncated products = {}",
            s.params.n,
            s.params.lambda,
            s.params.mu,
            s.active_cells.len(),
            s.max_nu,
            m.delta_r,
            m.osc_r,
            m.transport_r,
            m.error1_r,
            m.error2_r,
            m.delta_f,
            m.osc_f,
            m.transport_f,
            m.error1_f,
            m.error2_f,
            m.w_sup,
            m.w_mean,
            m.div_w,
            m.b_max,
            m.beta_max,
            s.overflow
        );
    }
    let _ = writeln!(out, "‖R̊‖: {:.4e} -> {:.4e}    target ηδ/2 = {:.4e}", rep.r_start, rep.r_end, rep.eta * rep.delta / 2.0);
    let _ = writeln!(out, "‖f‖:  {:.4e} -> {:.4e}    target ηδ/2 = {:.4e}", rep.f_start, rep.f_end, rep.eta * rep.delta / 2.0);
    let bound = rep.m_const * rep.delta.sqrt();
    let _ = writeln!(
        out,
        "‖Δv‖ = {:.4e}, ‖Δθ‖ = {:.4e}, ‖Δp‖ = {:.4e}    bound M sqrt(δ) = {:.4e}",
        rep.v_increment, rep.theta_increment, rep.p_increment, bound
    );
    for r in &rep.representation {
        let _ = writeln!(
            out,
            "representation after step {}: stress {:.3e}, trace {:.3e}, flux {:.3e} (relative {:.3e})",
            r.step,
            r.stress,
            r.trace,
            r.flux,
            r.worst_relative()
        );
    }
    if let Some(e) = &rep.energy_after {
        let _ = writeln!(
            out,
            "energy gap e(1-δ/2) - ∫|v|^2 ∈ [{:.4e}, {:.4e}]; output band [3δ/8 e, 5δ/8 e]: {}",
            e.gap_min,
            e.gap_max,
            if e.all_in_output_band() { "inside" } else { "outside" }
        );
    }
    for c in &rep.contracts {
        let _ = writeln!(
            out,
            "contract {}: {:.4e} vs {:.4e} -> {}",
            c.name,
            c.measured,
            c.target,
            if c.pass { "pass" } else { "fail" }
        );
    }
}

fn describe_residual(out: &mut String, res: &ResidualReport) {
    let _ = writeln!(
        out,
        "residual: momentum {:.3e} (relative {:.3e}), temperature {:.3e} (relative {:.3e}), div v {:.3e}, scale {:.4e}, truncated products {}",
        res.momentum_sup,
        res.momentum_relative(),
        res.temperature_sup,
        res.temperature_relative(),
        res.div_v,
        res.scale,
        res.dealias_overflow
    );
}

fn header(cfg: &RunConfig, family: &DirectionFamily) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "experiment: {:?}, preset: {:?}", cfg.experiment, cfg.preset);
    let _ = writeln!(
        out,
        "grid {:?} (padding {}), {} time samples, mode {:?}, variant {:?}, ρ̄ normalization {:?}",
        cfg.grid,
        cfg.padding.label(),
        cfg.tsamples,
        cfg.mode,
        cfg.variant,
        cfg.rho
    );
    let _ = writeln!(out, "r0 = {:.6e}, λ0 = {:.6}", family.r0, family.lambda_bar);
    let _ = writeln!(out, "{}", StepReport::FREQUENCY_NOTE);
    out
}

fn finish(cfg: &RunConfig, report: String, table: &DiagnosticsTable, residual: Option<ResidualReport>) -> Result<RunSummary> {
    write_diagnostics(&cfg.out.join("diagnostics.csv"), table)?;
    fs::write(cfg.out.join("report.txt"), &report)?;
    Ok(RunSummary {
        out_dir: cfg.out.clone(),
        report,
        residual,
    })
}

/// Runs the experiment described by `cfg`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let family = DirectionFamily::build();
    let mut report = header(cfg, &family);
    let mut table = DiagnosticsTable::default();

    if cfg.experiment == Experiment::Check {
        let dir = cfg.check_residual.as_ref().expect("validated");
        let state = read_state(dir, cfg.padding)?;
        let torus = Torus::new(state.grid());
        let res = system_residual(&torus, &state)?;
        let _ = writeln!(report, "snapshot: {}", dir.display());
        describe_residual(&mut report, &res);
        return finish(cfg, report, &table, Some(res));
    }

    if cfg.experiment == Experiment::Decay {
        let dc = DecayConfig {
            runs: cfg
                .decay_runs
                .iter()
                .map(|&(grid, lambda, mu)| DecayRun { grid, lambda, mu })
                .collect(),
            n_t: cfg.tsamples,
            base: relaxed_spec(cfg),
            variant: cfg.variant,
            energy: cfg.energy.clone(),
            rho: cfg.rho,
        };
        let t = stress_decay_experiment(&dc)?;
        for row in &t.rows {
            let key = RowKey {
                experiment: "decay",
                grid: row.run.grid.describe(),
                step: 1,
                lambda: row.run.lambda,
                mu: row.run.mu,
            };
            let gaps: Vec<Option<f64>> = row.gaps.iter().copied().map(Some).collect();
            table.push_samples(&key, &row.samples, &gaps, row.overflow);
            let _ = writeln!(
                report,
                "{} λ = {} μ = {}: ‖δR̊‖ = {:.4e}, ‖δf‖ = {:.4e}, osc+transport = {:.4e}, error I = {:.4e}, |energy gap| = {:.4e}",
                row.run.grid.describe(),
                row.run.lambda,
                row.run.mu,
                row.max.delta_r,
                row.max.delta_f,
                row.max.osc_transport_r,
                row.max.error1_r,
                row.energy_gap
            );
        }
        if t.rows.len() >= 2 {
            if let Ok(s) = t.slope_in_lambda(|m| m.osc_transport_r) {
                let _ = writeln!(report, "log-log slope of osc+transport in λ: {s:.3} (theory -(1-α))");
            }
        }
        return finish(cfg, report, &table, None);
    }

    let grid = cfg.grid_spec()?;
    let time = cfg.time_grid()?;
    let torus = Torus::new(grid);
    let mtable = MultiplierTable::new(&torus);
    let partition = PartitionSpec::new(cfg.partition.0, cfg.partition.1)?;
    let ws = Workspace {
        torus: &torus,
        table: &mtable,
        family: &family,
        partition: &partition,
    };
    let state = build_preset(cfg, &torus, &mtable, time)?;
    let initial = system_residual(&torus, &state)?;
    let _ = write!(report, "initial ");
    describe_residual(&mut report, &initial);
    let energy = match cfg.variant {
        Variant::Energy => Some(EnergyProfile::new(cfg.energy.clone(), time)?),
        Variant::SmallStress => None,
    };
    let eta = eta_for(cfg.variant, &family, energy.as_ref(), cfg.rho)?;
    let scfg = StageConfig {
        mode: cfg.mode,
        variant: cfg.variant,
        rho: cfg.rho,
        check_residual: cfg.residual_tol,
        track_representation: cfg.track_representation,
    };
    let final_state = match cfg.experiment {
        Experiment::Step | Experiment::Stage => {
            let n_steps = if cfg.experiment == Experiment::Step { cfg.steps } else { 6 };
            let sp = cfg.stage_params(&family, n_steps, 1, eta)?;
            let (out, rep) = run_stage(&ws, state, &sp, &scfg, energy.as_ref())?;
            describe_stage(&mut report, &rep);
            let label = if cfg.experiment == Experiment::Step { "step" } else { "stage" };
            push_steps(&mut table, label, &grid.describe(), &rep);
            out
        }
        Experiment::Outer => {
            let (mut states, iters) = run_outer(&ws, state, energy.as_ref(), cfg.iterations, &scfg, |k| {
                cfg.stage_params(&family, 6, 1 << k, eta)
            })?;
            for it in &iters {
                let _ = writeln!(report, "-- outer iteration {} --", it.k);
                describe_stage(&mut report, &it.stage);
                let _ = writeln!(
                    report,
                    "Cauchy increment ‖v_(k+1) - v_k‖ = {:.4e} vs M sqrt(δ_k) = {:.4e}; ‖θ - θ_0‖ = {:.4e} vs 4M = {:.4e}",
                    it.stage.v_increment,
                    it.increment_bound,
                    it.theta_drift,
                    4.0 * it.stage.m_const
                );
                push_steps(&mut table, &format!("outer{}", it.k), &grid.describe(), &it.stage);
            }
            states.pop().expect("at least the initial state")
        }
        Experiment::Decay | Experiment::Check => unreachable!("handled above"),
    };
    let res = system_residual(&torus, &final_state)?;
    let _ = write!(report, "final ");
    describe_residual(&mut report, &res);
    write_state(&cfg.out.join("state"), &final_state)?;
    info!("wrote {}", cfg.out.display());
    finish(cfg, report, &table, Some(res))
}

/// Parses the file at `path` and runs it.
pub fn run_from_config(path: &Path) -> Result<RunSummary> {
    let cfg = RunConfig::from_path(path)?;
    run(&cfg)
}
