//! A stage of six steps, and the outer loop that halves `δ` between stages.

use log::{info, warn};

use crate::antidiv::MultiplierTable;
use crate::diagnostics::{energy_gap, system_residual, EnergyReport, ResidualReport};
use crate::error::{Error, Result};
use crate::geometry::DirectionFamily;
use crate::partition::PartitionSpec;
use crate::torus::{ScalarField, SymField, Torus, VectorField};

use super::params::{Mode, RhoNormalization, StageParams, Variant, STEPS_PER_STAGE};
use super::profiles::{torus_volume, EnergyProfile};
use super::state::ReynoldsState;
use super::step::{assemble_step, StageBase, StepContext, StepOptions, StepReport};

/// The shared workspace of a run.
pub struct Workspace<'a> {
    pub torus: &'a Torus,
    pub table: &'a MultiplierTable,
    pub family: &'a DirectionFamily,
    pub partition: &'a PartitionSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageConfig {
    pub mode: Mode,
    pub variant: Variant,
    pub rho: RhoNormalization,
    /// Abort when the relative residual after a step exceeds this.
    pub check_residual: Option<f64>,
    pub track_representation: bool,
}

impl Default for StageConfig {
    fn default() -> Self {
        StageConfig {
            mode: Mode::Trend,
            variant: Variant::Energy,
            rho: RhoNormalization::Literal,
            check_residual: None,
            track_representation: false,
        }
    }
}

/// `η`: `r0 e_min / (8 (2π)^3)` (divided by 3 under trace normalization) for
/// the energy variant, `r0 / 2` for the small-stress variant.
pub fn eta_for(variant: Variant, family: &DirectionFamily, energy: Option<&EnergyProfile>, rho: RhoNormalization) -> Result<f64> {
    match variant {
        Variant::SmallStress => Ok(family.r0 / 2.0),
        Variant::Energy => {
            let e = energy.ok_or_else(|| Error::validation("energy", "energy variant needs e(t)"))?;
            Ok(family.r0 * e.e_min / (8.0 * torus_volume()) / rho.divisor())
        }
    }
}

/// Deviation of the stored tuple from the closed-form representation after
/// step `n`; all entries are sup norms over space and time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RepresentationCheck {
    pub step: usize,
    /// `R̊ - Σ δR̊` against the trace-free part of `-s Σ_{i>n} c_i M_i`.
    pub stress: f64,
    /// `-3s + 2 Σ_{i≤n} Σ_l b_il^2` against `-2s Σ_{i>n} c_i`.
    pub trace: f64,
    /// `f - Σ δf` against `Σ_{n<i≤3} g_i(f_0) A_i`.
    pub flux: f64,
    /// Largest `s(t)`, for scaling the above.
    pub scale: f64,
}

impl RepresentationCheck {
    pub fn worst_relative(&self) -> f64 {
        self.stress.max(self.trace).max(self.flux) / self.scale
    }
}

/// One strict-mode contract: measured value against its target.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractCheck {
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub pass: bool,
}

impl ContractCheck {
    fn at_most(name: &str, measured: f64, target: f64) -> Self {
        ContractCheck {
            name: name.into(),
            measured,
            target,
            pass: measured <= target,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageReport {
    pub delta: f64,
    pub eta: f64,
    /// `10 L max(‖b‖, ‖β‖) / sqrt(δ)`, measured.
    pub m_const: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub steps: Vec<StepReport>,
    pub representation: Vec<RepresentationCheck>,
    pub r_start: f64,
    pub f_start: f64,
    pub r_end: f64,
    pub f_end: f64,
    pub v_increment: f64,
    pub theta_increment: f64,
    pub p_increment: f64,
    pub energy_before: Option<EnergyReport>,
    pub energy_after: Option<EnergyReport>,
    pub residual: Option<ResidualReport>,
    pub contracts: Vec<ContractCheck>,
}

fn sup_r(st: &ReynoldsState) -> f64 {
    st.r.iter().map(SymField::sup_norm).fold(0.0, f64::max)
}

fn sup_f(st: &ReynoldsState) -> f64 {
    st.f.iter().map(VectorField::sup_norm).fold(0.0, f64::max)
}

fn sup_diff_v(a: &[VectorField], b: &[VectorField]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut d = x.clone();
            d.sub_assign(y);
            d.sup_norm()
        })
        .fold(0.0, f64::max)
}

fn sup_diff_s(a: &[ScalarField], b: &[ScalarField]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut d = x.clone();
            d.sub_assign(y);
            d.sup_norm()
        })
        .fold(0.0, f64::max)
}

/// Running sums of the `δ` blocks, for the representation check.
struct Tracker {
    delta_r: Vec<SymField>,
    delta_f: Vec<VectorField>,
    sum_b2: Vec<ScalarField>,
}

impl Tracker {
    fn check(&self, ws: &Workspace, base: &StageBase, state: &ReynoldsState, n: usize) -> RepresentationCheck {
        let grid = state.grid();
        let mut out = RepresentationCheck {
            step: n,
            scale: base.scale.iter().copied().fold(0.0, f64::max),
            ..Default::default()
        };
        for j in 0..state.time.len() {
            let mut lhs = state.r[j].clone();
            lhs.sub_assign(&self.delta_r[j]);
            lhs.remove_trace();
            let mut rhs = base.stress_remainder(ws.family, n, j, grid);
            let tr = rhs.remove_trace();
            lhs.sub_assign(&rhs);
            out.stress = out.stress.max(lhs.sup_norm());

            let s = base.scale[j];
            let mut tr_lhs = self.sum_b2[j].scaled(2.0);
            tr_lhs.add_constant(-3.0 * s);
            tr_lhs.sub_assign(&tr);
            out.trace = out.trace.max(tr_lhs.sup_norm());

            let mut fl = state.f[j].clone();
            fl.sub_assign(&self.delta_f[j]);
            fl.sub_assign(&base.flux_remainder(ws.family, n, j, grid));
            out.flux = out.flux.max(fl.sup_norm());
        }
        out
    }
}

/// Runs the steps of `stage` on `state`.
pub fn run_stage(
    ws: &Workspace,
    state: ReynoldsState,
    stage: &StageParams,
    cfg: &StageConfig,
    energy: Option<&EnergyProfile>,
) -> Result<(ReynoldsState, StageReport)> {
    if stage.steps.is_empty() || stage.steps.len() > STEPS_PER_STAGE {
        return Err(Error::validation("steps", "a stage has 1..=6 steps"));
    }
    let delta = state.delta;
    let energy_before = energy.map(|e| energy_gap(ws.torus, &state, e));
    let r_start = sup_r(&state);
    let f_start = sup_f(&state);
    let mut contracts = Vec::new();
    let eta = stage.eta;
    if cfg.mode == Mode::Strict {
        let pre = [
            ContractCheck::at_most("input ‖R̊‖ ≤ ηδ", r_start, eta * delta),
            ContractCheck::at_most("input ‖f‖ ≤ ηδ", f_start, eta * delta),
        ];
        if let (Variant::Energy, Some(eb)) = (cfg.variant, &energy_before) {
            if !eb.all_in_input_band() {
                return Err(Error::EnergyBand("input energy outside [3δ/4 e, 5δ/4 e]".into()));
            }
        }
        for c in pre {
            if !c.pass {
                return Err(Error::Contract(format!("{}: {:.4e} > {:.4e}", c.name, c.measured, c.target)));
            }
            contracts.push(c);
        }
    }

    let base = StageBase::new(ws.torus, ws.family, &state, cfg.variant, energy, cfg.rho)?;
    let ctx = StepContext {
        torus: ws.torus,
        table: ws.table,
        family: ws.family,
        partition: ws.partition,
        base: &base,
    };
    let grid = state.grid();
    let n_t = state.time.len();
    let mut tracker = cfg.track_representation.then(|| Tracker {
        delta_r: vec![SymField::zeros(grid); n_t],
        delta_f: vec![VectorField::zeros(grid); n_t],
        sum_b2: vec![ScalarField::zeros(grid); n_t],
    });
    let v0 = state.v.clone();
    let theta0 = state.theta.clone();
    let p0 = state.p.clone();

    let mut state = state;
    let mut steps = Vec::with_capacity(stage.steps.len());
    let mut representation = Vec::new();
    let mut residual = None;
    for sp in &stage.steps {
        let opts = StepOptions {
            keep_blocks: tracker.is_some(),
        };
        let (next, mut rep) = assemble_step(&ctx, state, sp, opts).map_err(|e| e.in_step(sp.n))?;
        state = next;
        info!(
            "step {}: λ = {}, μ = {}, cells = {}, ‖δR̊‖ = {:.3e}, ‖δf‖ = {:.3e}",
            sp.n,
            sp.lambda,
            sp.mu,
            rep.active_cells.len(),
            rep.max.delta_r,
            rep.max.delta_f
        );
        if rep.overflow > 0 {
            warn!("step {}: {} products lost energy to band truncation", sp.n, rep.overflow);
        }
        if let (Some(tr), Some(blocks)) = (&mut tracker, rep.blocks.take()) {
            for j in 0..n_t {
                tr.delta_r[j].add_assign(&blocks.delta_r[j]);
                tr.delta_f[j].add_assign(&blocks.delta_f[j]);
                tr.sum_b2[j].add_assign(&blocks.sum_b2[j]);
            }
            representation.push(tr.check(ws, &base, &state, sp.n));
        }
        if let Some(tol) = cfg.check_residual {
            let res = system_residual(ws.torus, &state)?;
            let rel = res.worst_relative();
            if rel > tol {
                return Err(Error::Residual(format!(
                    "relative residual {rel:.3e} after step {} exceeds {tol:.1e}: momentum {:.3e}, temperature {:.3e}, div {:.3e}",
                    sp.n, res.momentum_sup, res.temperature_sup, res.div_v
                ))
                .in_step(sp.n));
            }
            residual = Some(res);
        }
        steps.push(rep);
    }

    let amp = steps
        .iter()
        .map(|s| s.max.b_max.max(s.max.beta_max))
        .fold(0.0, f64::max);
    let m_const = 10.0 * STEPS_PER_STAGE as f64 * amp / delta.sqrt();
    let r_end = sup_r(&state);
    let f_end = sup_f(&state);
    let v_increment = sup_diff_v(&state.v, &v0);
    let theta_increment = sup_diff_s(&state.theta, &theta0);
    let p_increment = sup_diff_s(&state.p, &p0);
    let energy_after = energy.map(|e| energy_gap(ws.torus, &state, e));

    if cfg.mode == Mode::Strict {
        let post = vec![
            ContractCheck::at_most("‖R̊_new‖ ≤ ηδ/2", r_end, eta * delta / 2.0),
            ContractCheck::at_most("‖f_new‖ ≤ ηδ/2", f_end, eta * delta / 2.0),
            ContractCheck::at_most("‖ṽ - v‖ ≤ M sqrt(δ)", v_increment, m_const * delta.sqrt()),
        ];
        let band_ok = energy_after.as_ref().is_none_or(EnergyReport::all_in_output_band);
        for c in &post {
            if !c.pass {
                return Err(Error::Contract(format!("{}: {:.4e} > {:.4e}", c.name, c.measured, c.target)));
            }
        }
        if cfg.variant == Variant::Energy && !band_ok {
            return Err(Error::EnergyBand("post-stage energy outside [3δ/8 e, 5δ/8 e]".into()));
        }
        contracts.extend(post);
    }

    let report = StageReport {
        delta,
        eta,
        m_const,
        scale_min: base.scale.iter().copied().fold(f64::INFINITY, f64::min),
        scale_max: base.scale.iter().copied().fold(0.0, f64::max),
        steps,
        representation,
        r_start,
        f_start,
        r_end,
        f_end,
        v_increment,
        theta_increment,
        p_increment,
        energy_before,
        energy_after,
        residual,
        contracts,
    };
    Ok((state, report))
}

/// One outer iteration: the stage report plus the Cauchy increments.
#[derive(Debug, Clone)]
pub struct OuterIteration {
    pub k: usize,
    pub delta: f64,
    pub stage: StageReport,
    /// `M sqrt(δ_k)`.
    pub increment_bound: f64,
    pub theta_drift: f64,
    pub v_drift: f64,
}

/// Stages with `δ_{k+1} = δ_k / 2`; `schedule(k)` gives the steps of stage `k`.
pub fn run_outer(
    ws: &Workspace,
    initial: ReynoldsState,
    energy: Option<&EnergyProfile>,
    n_iterations: usize,
    cfg: &StageConfig,
    mut schedule: impl FnMut(usize) -> Result<StageParams>,
) -> Result<(Vec<ReynoldsState>, Vec<OuterIteration>)> {
    if n_iterations == 0 {
        return Err(Error::validation("iterations", "need at least one outer iteration"));
    }
    let v_init = initial.v.clone();
    let theta_init = initial.theta.clone();
    let mut states = vec![initial];
    let mut iters = Vec::with_capacity(n_iterations);
    for k in 0..n_iterations {
        let stage = schedule(k)?;
        let current = states.last().expect("non-empty").clone();
        let delta = current.delta;
        let (mut next, rep) = run_stage(ws, current, &stage, cfg, energy)?;
        let increment_bound = rep.m_const * delta.sqrt();
        let theta_drift = sup_diff_s(&next.theta, &theta_init);
        let v_drift = sup_diff_v(&next.v, &v_init);
        info!(
            "outer {k}: δ = {delta:.4e}, ‖R̊‖ = {:.3e}, ‖f‖ = {:.3e}, ‖Δv‖ = {:.3e} (bound {increment_bound:.3e})",
            rep.r_end, rep.f_end, rep.v_increment
        );
        next.delta = delta / 2.0;
        iters.push(OuterIteration {
            k,
            delta,
            stage: rep,
            increment_bound,
            theta_drift,
            v_drift,
        });
        states.push(next);
    }
    Ok((states, iters))
}
