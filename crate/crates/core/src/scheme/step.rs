//! One perturbation step: Beltrami waves on direction `k_n`, temperature
//! waves for `n ≤ 3`, and the stress/flux updates that keep the tuple an
//! exact solution of the discrete relaxed system.
//!
//! With `P` the dealiased product, `D` the spectral divergence and `D_t` the
//! shared time difference, the step adds
//!
//! ```text
//! R += Σ_l b_l^2 (Id - k̂⊗k̂) + δR
//! δR = R(D M) + (N - tr N/3) + R(D_t w + Σ_a ∂_a W_a) + (Q - tr Q/3) - R((χ - ⨍χ) e3)
//! f += Σ_l 2β_l b_l A_k + δf
//! δf = G(D K) + G(P(w, ∇θ)) + G(D_t χ + Σ_a ∂_a X_a) + (P(v, χ) - X) + P(w_oc, χ)
//! ```
//!
//! where `M = P(w_o, w_o) - Σ b_l^2 (Id - k̂⊗k̂)`, `N = P(w, v) + P(v, w) - (U + Uᵀ)`
//! with `U_ia = W_a,i`, `Q = P(w, w) - P(w_o, w_o)` and `K = P(w_o, χ) - Σ 2β_l b_l A_k`.
//! Every identity used to cancel terms is algebraic in these discrete
//! operators, so the residual of the new tuple is round-off.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::antidiv::{antidiv_matrix_spec, antidiv_vector_spec, MultiplierTable};
use crate::error::{Error, Result};
use crate::geometry::{BeltramiMode, DirectionFamily, SYM_INDEX};
use crate::partition::PartitionSpec;
use crate::torus::{PhaseTable, ScalarField, Spectrum, SymField, Torus, VectorField};

use super::params::{nu, RhoNormalization, StepParams, Variant};
use super::profiles::{torus_volume, EnergyProfile};
use super::state::ReynoldsState;
use super::timederiv;

/// `∫ |v|^2` from the spectrum (Parseval).
pub fn energy_spectral(torus: &Torus, v: &VectorField) -> f64 {
    let [h, _, _] = torus.grid().spectrum_dims();
    let mut total = 0.0;
    for c in &v.c {
        let s = torus.forward(c);
        let mut parts = Vec::with_capacity(s.data().len());
        for (i, z) in s.data().iter().enumerate() {
            let ix = i % h;
            let w = if ix == 0 || ix == h - 1 { 1.0 } else { 2.0 };
            parts.push(w * z.norm_sqr());
        }
        total += crate::torus::pairwise_sum(&parts);
    }
    total * torus_volume()
}

/// `ρ̄(t) = (e(t)(1 - δ/2) - ∫|v|^2) / (2π)^3`.
pub fn rho_bar(torus: &Torus, e: &EnergyProfile, v: &VectorField, j: usize, delta: f64) -> Result<f64> {
    rho_bar_normalized(torus, e, v, j, delta, RhoNormalization::Literal)
}

pub fn rho_bar_normalized(
    torus: &Torus,
    e: &EnergyProfile,
    v: &VectorField,
    j: usize,
    delta: f64,
    norm: RhoNormalization,
) -> Result<f64> {
    let gap = e.at(j) * (1.0 - 0.5 * delta) - energy_spectral(torus, v);
    let rho = gap / torus_volume() / norm.divisor();
    if rho <= 0.0 || !rho.is_finite() {
        return Err(Error::EnergyBand(format!(
            "ρ̄ = {rho:.6e} at sample {j}: e(1-δ/2) - ∫|v|^2 = {gap:.6e} is not positive"
        )));
    }
    Ok(rho)
}

/// Data frozen at the start of a stage: the amplitude scale `s(t)` (`ρ̄` or
/// `δ`), the initial stress `R̊_0` and flux `f_0`.
#[derive(Debug, Clone)]
pub struct StageBase {
    pub variant: Variant,
    pub scale: Vec<f64>,
    pub r0: Option<Vec<SymField>>,
    pub f0: Option<Vec<VectorField>>,
    c_id: [f64; 6],
}

impl StageBase {
    pub fn new(
        torus: &Torus,
        family: &DirectionFamily,
        state: &ReynoldsState,
        variant: Variant,
        energy: Option<&EnergyProfile>,
        norm: RhoNormalization,
    ) -> Result<Self> {
        let n_t = state.time.len();
        let scale = match variant {
            Variant::Energy => {
                let e = energy.ok_or_else(|| Error::validation("energy", "energy variant needs e(t)"))?;
                if e.samples.len() != n_t {
                    return Err(Error::validation("energy", "profile sampled on a different time grid"));
                }
                (0..n_t)
                    .map(|j| rho_bar_normalized(torus, e, &state.v[j], j, state.delta, norm))
                    .collect::<Result<Vec<_>>>()?
            }
            Variant::SmallStress => vec![state.delta; n_t],
        };
        let r0 = if state.r.iter().all(SymField::is_zero) {
            None
        } else {
            Some(state.r.clone())
        };
        let f0 = if state.f.iter().all(VectorField::is_zero) {
            None
        } else {
            Some(state.f.clone())
        };
        if let Some(r) = &r0 {
            for (j, rj) in r.iter().enumerate() {
                let ratio = rj.sup_norm() / scale[j];
                if ratio > family.r0 {
                    return Err(Error::Domain(format!(
                        "‖R̊/s‖ = {ratio:.4e} exceeds r0 = {:.4e} at sample {j} (stress too large for this amplitude scale)",
                        family.r0
                    )));
                }
            }
        }
        Ok(StageBase {
            variant,
            scale,
            r0,
            f0,
            c_id: family.coefficients(&crate::geometry::IDENTITY),
        })
    }

    /// `c_i(R_0/s)` at grid point `idx` of sample `j`, with `R_0 = s Id - R̊_0`.
    #[inline]
    pub fn coefficient(&self, family: &DirectionFamily, i: usize, j: usize, idx: usize) -> f64 {
        match &self.r0 {
            None => self.c_id[i],
            Some(r) => {
                let inv = 1.0 / self.scale[j];
                let mut acc = 0.0;
                for m in 0..6 {
                    acc += family.matrix_solver[(i, m)] * r[j].c[m].data()[idx];
                }
                self.c_id[i] - acc * inv
            }
        }
    }

    /// `g_i(-f_0)` at grid point `idx` of sample `j`.
    #[inline]
    pub fn g_minus_f0(&self, family: &DirectionFamily, i: usize, j: usize, idx: usize) -> f64 {
        match &self.f0 {
            None => 0.0,
            Some(f) if i < 3 => {
                let mut acc = 0.0;
                for a in 0..3 {
                    acc += family.g_solver[(i, a)] * f[j].c[a].data()[idx];
                }
                -acc
            }
            _ => 0.0,
        }
    }

    /// `-s Σ_{i > n} γ_i^2 (Id - k̂_i⊗k̂_i)` at sample `j`: what remains of
    /// `-R_0` after `n` steps.
    pub fn stress_remainder(&self, family: &DirectionFamily, n: usize, j: usize, grid: crate::torus::GridSpec) -> SymField {
        let mut out = SymField::zeros(grid);
        out.traceless = false;
        for idx in 0..grid.len() {
            for i in n..6 {
                let c = self.coefficient(family, i, j, idx);
                for s in 0..6 {
                    out.c[s].data_mut()[idx] -= self.scale[j] * c * family.matrices[i][s];
                }
            }
        }
        out
    }

    /// `Σ_{n < i ≤ 3} g_i(f_0) A_i` at sample `j`.
    pub fn flux_remainder(&self, family: &DirectionFamily, n: usize, j: usize, grid: crate::torus::GridSpec) -> VectorField {
        let mut out = VectorField::zeros(grid);
        if self.f0.is_none() {
            return out;
        }
        for idx in 0..grid.len() {
            for i in n..3 {
                let g = -self.g_minus_f0(family, i, j, idx);
                for a in 0..3 {
                    out.c[a].data_mut()[idx] += g * family.a_vectors[i][a];
                }
            }
        }
        out
    }
}

/// Everything a step needs besides the state.
pub struct StepContext<'a> {
    pub torus: &'a Torus,
    pub table: &'a MultiplierTable,
    pub family: &'a DirectionFamily,
    pub partition: &'a PartitionSpec,
    pub base: &'a StageBase,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepOptions {
    /// Keep `δR̊`, `δf` and `Σ_l b_l^2` per sample in the report.
    pub keep_blocks: bool,
}

/// Sup norms of the stress and flux pieces at one time sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleNorms {
    pub t: f64,
    pub delta_r: f64,
    pub osc_r: f64,
    pub transport_r: f64,
    /// `sup |osc + transport|` of the stress.
    pub osc_transport_r: f64,
    pub error1_r: f64,
    pub error2_r: f64,
    pub delta_f: f64,
    pub osc_f: f64,
    pub transport_f: f64,
    pub osc_transport_f: f64,
    pub error1_f: f64,
    pub error2_f: f64,
    pub w_sup: f64,
    pub w_mean: f64,
    pub div_w: f64,
    pub b_max: f64,
    pub beta_max: f64,
}

impl SampleNorms {
    pub fn max_merge(&mut self, o: &SampleNorms) {
        macro_rules! mx {
            ($($f:ident),*) => { $( self.$f = self.$f.max(o.$f); )* };
        }
        mx!(delta_r, osc_r, transport_r, osc_transport_r, error1_r, error2_r, delta_f, osc_f, transport_f, osc_transport_f, error1_f, error2_f, w_sup, w_mean, div_w, b_max, beta_max);
    }
}

/// Per-sample blocks kept for representation checks.
#[derive(Debug, Clone, Default)]
pub struct StepBlocks {
    pub delta_r: Vec<SymField>,
    pub delta_f: Vec<VectorField>,
    pub sum_b2: Vec<ScalarField>,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub params: StepParams,
    pub active_cells: Vec<[i64; 3]>,
    pub max_nu: u64,
    pub samples: Vec<SampleNorms>,
    /// Maximum over samples of each entry.
    pub max: SampleNorms,
    pub overflow: u64,
    pub blocks: Option<StepBlocks>,
}

impl StepReport {
    pub const FREQUENCY_NOTE: &'static str =
        "frequency assigner ν(l) = 2^((l1 mod 2) + 2(l2 mod 2) + 4(l3 mod 2)) replaces the factor 2^|l|";
}

/// `b_l = sqrt(s) α_l(μ v) γ_n(R_0/s)` on the grid.
pub fn amplitude_b(
    ctx: &StepContext,
    step: &StepParams,
    v_prev: &VectorField,
    j: usize,
    l: [i64; 3],
) -> Result<ScalarField> {
    let grid = v_prev.grid();
    let mut out = ScalarField::zeros(grid);
    let sq = ctx.base.scale[j].sqrt();
    let mu = step.mu as f64;
    for idx in 0..grid.len() {
        let y = v_prev.at(idx).map(|c| mu * c);
        let a = ctx.partition.alpha(l, y);
        if a == 0.0 {
            continue;
        }
        let c = ctx.base.coefficient(ctx.family, step.direction - 1, j, idx);
        if c <= 0.0 {
            return Err(Error::Domain(format!("c_{} = {c:.3e} at grid point {idx}", step.direction)));
        }
        out.data_mut()[idx] = sq * a * c.sqrt();
    }
    Ok(out)
}

/// `β_l = α_l(μ v) g_n(-f_0) / (2 sqrt(s) γ_n(R_0/s))`; zero for `n ≥ 4`.
pub fn amplitude_beta(
    ctx: &StepContext,
    step: &StepParams,
    v_prev: &VectorField,
    j: usize,
    l: [i64; 3],
) -> Result<ScalarField> {
    let grid = v_prev.grid();
    let mut out = ScalarField::zeros(grid);
    if step.n >= 4 || ctx.base.f0.is_none() {
        return Ok(out);
    }
    let sq = ctx.base.scale[j].sqrt();
    let mu = step.mu as f64;
    for idx in 0..grid.len() {
        let y = v_prev.at(idx).map(|c| mu * c);
        let a = ctx.partition.alpha(l, y);
        if a == 0.0 {
            continue;
        }
        let c = ctx.base.coefficient(ctx.family, step.direction - 1, j, idx);
        if c <= 0.0 {
            return Err(Error::Domain(format!("c_{} = {c:.3e} at grid point {idx}", step.direction)));
        }
        let g = ctx.base.g_minus_f0(ctx.family, step.direction - 1, j, idx);
        out.data_mut()[idx] = a * g / (2.0 * sq * c.sqrt());
    }
    Ok(out)
}

fn phase_shift(step: &StepParams, family: &DirectionFamily, l: [i64; 3], t: f64) -> Complex64 {
    let k = family.directions[step.direction - 1];
    let kl = k[0] * l[0] + k[1] * l[1] + k[2] * l[2];
    let m = (step.lambda / step.mu) as i64 * nu(l) as i64 * kl;
    Complex64::from_polar(1.0, -(m as f64) * t)
}

fn check_carrier(torus: &Torus, step: &StepParams, family: &DirectionFamily, l: [i64; 3]) -> Result<[i64; 3]> {
    let carrier = step.carrier(family, l);
    if !torus.grid().resolves(carrier) {
        return Err(Error::Nyquist {
            carrier,
            nyquist: torus.grid().n.map(|n| n / 2),
            context: format!(" for cell l = {l:?} with ν(l) = {}", nu(l)),
        });
    }
    Ok(carrier)
}

/// `(w_ol, w_ocl)`: `w_ol = b (B e^{iφ} + c.c.)` and
/// `w_ocl = (∇b × B e^{iφ} + c.c.) / (λ λ0 ν)`.
pub fn velocity_wave(
    torus: &Torus,
    family: &DirectionFamily,
    step: &StepParams,
    b: &ScalarField,
    l: [i64; 3],
    t: f64,
) -> Result<(VectorField, VectorField)> {
    let carrier = check_carrier(torus, step, family, l)?;
    let mode = family.beltrami_mode(step.direction)?;
    let shift = phase_shift(step, family, l, t);
    let table = PhaseTable::new(&torus.grid(), carrier);
    let grad = torus.gradient(b)?;
    let grid = torus.grid();
    let scale = 1.0 / (step.lambda as f64 * step.lambda0 * nu(l) as f64);
    let mut wo = VectorField::zeros(grid);
    let mut woc = VectorField::zeros(grid);
    for idx in 0..grid.len() {
        let e = table.at(grid.unravel(idx)) * shift;
        let be: [Complex64; 3] = std::array::from_fn(|a| mode.b[a] * e);
        let g = grad.at(idx);
        let bx = b.data()[idx];
        let cr = [
            g[1] * be[2] - g[2] * be[1],
            g[2] * be[0] - g[0] * be[2],
            g[0] * be[1] - g[1] * be[0],
        ];
        for a in 0..3 {
            wo.c[a].data_mut()[idx] = 2.0 * bx * be[a].re;
            woc.c[a].data_mut()[idx] = 2.0 * scale * cr[a].re;
        }
    }
    Ok((wo, woc))
}

/// `w_l = curl(b (B e^{iφ} + c.c.)) / (λ λ0 ν)`, computed spectrally.
pub fn velocity_wave_curl(
    torus: &Torus,
    family: &DirectionFamily,
    step: &StepParams,
    b: &ScalarField,
    l: [i64; 3],
    t: f64,
) -> Result<VectorField> {
    let carrier = check_carrier(torus, step, family, l)?;
    let mode = family.beltrami_mode(step.direction)?;
    let shift = phase_shift(step, family, l, t);
    let phase = shift.arg();
    let wo = torus.modulated_wave(b, mode.b, carrier, phase)?;
    let mut c = torus.curl(&wo)?;
    c.scale(1.0 / (step.lambda as f64 * step.lambda0 * nu(l) as f64));
    Ok(c)
}

/// `χ_l = 2 β cos φ`.
pub fn temperature_wave(
    torus: &Torus,
    family: &DirectionFamily,
    step: &StepParams,
    beta: &ScalarField,
    l: [i64; 3],
    t: f64,
) -> Result<ScalarField> {
    let carrier = check_carrier(torus, step, family, l)?;
    let shift = phase_shift(step, family, l, t);
    let table = PhaseTable::new(&torus.grid(), carrier);
    let grid = torus.grid();
    let mut out = ScalarField::zeros(grid);
    for idx in 0..grid.len() {
        let e = table.at(grid.unravel(idx)) * shift;
        out.data_mut()[idx] = 2.0 * beta.data()[idx] * e.re;
    }
    Ok(out)
}

struct Cell {
    l: [i64; 3],
    nu: f64,
    table: usize,
    shift: Complex64,
    l_mu: [f64; 3],
}

/// Pointwise sums over cells at one sample. Optional members are only
/// filled in a full pass.
struct Sums {
    wo_nu: [Vec<f64>; 3],
    chi: Option<Vec<f64>>,
    wo: Option<[Vec<f64>; 3]>,
    z: [Option<[Vec<f64>; 3]>; 3],
    b2: Option<Vec<f64>>,
    xa: [Option<Vec<f64>>; 3],
    beta_b: Option<Vec<f64>>,
    b_max: f64,
    beta_max: f64,
}

struct Engine<'a, 'c> {
    ctx: &'a StepContext<'c>,
    step: StepParams,
    mode: BeltramiMode,
    cells: Vec<Cell>,
    index: BTreeMap<[i64; 3], usize>,
    tables: Vec<PhaseTable>,
    axes: [bool; 3],
    has_beta: bool,
}

impl<'a, 'c> Engine<'a, 'c> {
    fn new(ctx: &'a StepContext<'c>, step: StepParams, active: &BTreeSet<[i64; 3]>, t_of: impl Fn(usize) -> f64, n_t: usize) -> Result<(Self, Vec<Vec<Complex64>>)> {
        let torus = ctx.torus;
        let family = ctx.family;
        let mode = family.beltrami_mode(step.direction)?;
        let mut nus: BTreeMap<u64, usize> = BTreeMap::new();
        let mut tables = Vec::new();
        let mut cells = Vec::new();
        let mut index = BTreeMap::new();
        let mut axes = [false; 3];
        for &l in active {
            let carrier = check_carrier(torus, &step, family, l)?;
            let nv = nu(l);
            let table = *nus.entry(nv).or_insert_with(|| {
                tables.push(PhaseTable::new(&torus.grid(), carrier));
                tables.len() - 1
            });
            for a in 0..3 {
                axes[a] |= l[a] != 0;
            }
            index.insert(l, cells.len());
            cells.push(Cell {
                l,
                nu: nv as f64,
                table,
                shift: Complex64::new(1.0, 0.0),
                l_mu: l.map(|x| x as f64 / step.mu as f64),
            });
        }
        let shifts: Vec<Vec<Complex64>> = (0..n_t)
            .map(|j| cells.iter().map(|c| phase_shift(&step, family, c.l, t_of(j))).collect())
            .collect();
        let has_beta = step.n <= 3 && ctx.base.f0.is_some();
        Ok((
            Engine {
                ctx,
                step,
                mode,
                cells,
                index,
                tables,
                axes,
                has_beta,
            },
            shifts,
        ))
    }

    fn accumulate(&mut self, v_prev: &VectorField, j: usize, shifts: &[Complex64], full: bool) -> Result<Sums> {
        for (c, s) in self.cells.iter_mut().zip(shifts) {
            c.shift = *s;
        }
        let grid = v_prev.grid();
        let len = grid.len();
        let zeros = || vec![0.0; len];
        let z3 = || [zeros(), zeros(), zeros()];
        let mut s = Sums {
            wo_nu: z3(),
            chi: self.has_beta.then(zeros),
            wo: full.then(z3),
            z: std::array::from_fn(|a| (full && self.axes[a]).then(z3)),
            b2: full.then(zeros),
            xa: std::array::from_fn(|a| (full && self.has_beta && self.axes[a]).then(zeros)),
            beta_b: (full && self.has_beta).then(zeros),
            b_max: 0.0,
            beta_max: 0.0,
        };
        let base = self.ctx.base;
        let family = self.ctx.family;
        let dir = self.step.direction - 1;
        let sq = base.scale[j].sqrt();
        let mu = self.step.mu as f64;
        let bvec = self.mode.b;
        let n = grid.n;
        let mut idx = 0;
        for i2 in 0..n[2] {
            for i1 in 0..n[1] {
                for i0 in 0..n[0] {
                    let y = v_prev.at(idx).map(|c| mu * c);
                    let weights = self.ctx.partition.weights(y);
                    let c = base.coefficient(family, dir, j, idx);
                    if c <= 0.0 {
                        return Err(Error::Domain(format!(
                            "c_{} = {c:.3e} at grid point {idx}, sample {j}",
                            self.step.direction
                        )));
                    }
                    let gamma = c.sqrt();
                    let g = if self.has_beta { base.g_minus_f0(family, dir, j, idx) } else { 0.0 };
                    for (l, alpha) in weights.iter() {
                        let cell = &self.cells[*self.index.get(&l).ok_or_else(|| {
                            Error::Domain(format!("cell {l:?} missing from the active set"))
                        })?];
                        let tab = &self.tables[cell.table];
                        let e = tab.x[i0] * tab.y[i1] * tab.z[i2] * cell.shift;
                        let b = sq * alpha * gamma;
                        s.b_max = s.b_max.max(b.abs());
                        let wol = [
                            2.0 * b * (bvec[0].re * e.re - bvec[0].im * e.im),
                            2.0 * b * (bvec[1].re * e.re - bvec[1].im * e.im),
                            2.0 * b * (bvec[2].re * e.re - bvec[2].im * e.im),
                        ];
                        let inv_nu = 1.0 / cell.nu;
                        for a in 0..3 {
                            s.wo_nu[a][idx] += wol[a] * inv_nu;
                        }
                        if let Some(wo) = &mut s.wo {
                            for a in 0..3 {
                                wo[a][idx] += wol[a];
                            }
                        }
                        for a in 0..3 {
                            if let Some(z) = &mut s.z[a] {
                                let f = cell.l_mu[a] * inv_nu;
                                for k in 0..3 {
                                    z[k][idx] += f * wol[k];
                                }
                            }
                        }
                        if let Some(b2) = &mut s.b2 {
                            b2[idx] += b * b;
                        }
                        if self.has_beta {
                            let beta = alpha * g / (2.0 * sq * gamma);
                            s.beta_max = s.beta_max.max(beta.abs());
                            let chil = 2.0 * beta * e.re;
                            if let Some(chi) = &mut s.chi {
                                chi[idx] += chil;
                            }
                            for a in 0..3 {
                                if let Some(x) = &mut s.xa[a] {
                                    x[idx] += cell.l_mu[a] * chil;
                                }
                            }
                            if let Some(bb) = &mut s.beta_b {
                                bb[idx] += 2.0 * beta * b;
                            }
                        }
                    }
                    idx += 1;
                }
            }
        }
        Ok(s)
    }
}

fn field(grid: crate::torus::GridSpec, v: Vec<f64>) -> ScalarField {
    ScalarField::from_vec(grid, v).expect("length matches grid")
}

/// `w` (exactly solenoidal) and `χ` at one sample.
struct Waves {
    w: VectorField,
    chi: Option<ScalarField>,
}

fn waves_from_sums(torus: &Torus, step: &StepParams, sums: &mut Sums) -> Waves {
    let grid = torus.grid();
    let wo_nu = std::mem::replace(&mut sums.wo_nu, [Vec::new(), Vec::new(), Vec::new()]);
    let spec: [Spectrum; 3] = wo_nu.map(|c| torus.forward(&field(grid, c)));
    let mut curl = torus.curl_spec(&spec);
    let inv = 1.0 / (step.lambda as f64 * step.lambda0);
    for c in &mut curl {
        c.scale(inv);
    }
    let w = torus.inverse_vector(curl);
    let chi = sums.chi.take().map(|c| torus.project(&field(grid, c)));
    Waves { w, chi }
}

fn lift_product(a: &[f64], b: &[f64], acc: &mut [f64]) {
    for ((x, y), z) in a.iter().zip(b).zip(acc.iter_mut()) {
        *z = x * y;
    }
}

fn scale_spec(mut s: Spectrum, f: f64) -> Spectrum {
    s.scale(f);
    s
}

fn sub_spec(mut a: Spectrum, b: &Spectrum) -> Spectrum {
    for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
        *x -= y;
    }
    a
}

fn derivative_sum(torus: &Torus, comps: &[Option<Spectrum>; 3]) -> Spectrum {
    let mut out = Spectrum::zeros(torus.grid());
    for (a, c) in comps.iter().enumerate() {
        if let Some(c) = c {
            out.add_assign(&torus.derivative_spec(c, a));
        }
    }
    out
}

/// Runs step `n` on `state` in place and returns the new tuple.
pub fn assemble_step(
    ctx: &StepContext,
    mut state: ReynoldsState,
    step: &StepParams,
    opts: StepOptions,
) -> Result<(ReynoldsState, StepReport)> {
    let torus = ctx.torus;
    let grid = torus.grid();
    let time = state.time;
    let n_t = time.len();
    if state.grid().n != grid.n {
        return Err(Error::GridMismatch("state and workspace grids differ".into()));
    }
    let overflow_start = torus.overflow_count();

    let mut active = BTreeSet::new();
    for v in &state.v {
        active.extend(ctx.partition.active_cells(step.mu, v));
    }
    let (mut engine, shifts) = Engine::new(ctx, *step, &active, |j| time.t(j), n_t)?;
    let max_nu = active.iter().map(|&l| nu(l)).max().unwrap_or(1);
    let mode = engine.mode;
    let mproj = mode.projector();
    let a_k = ctx.family.a_vectors[step.direction - 1];
    let inv_ll0 = 1.0 / (step.lambda as f64 * step.lambda0);

    let mut cache: BTreeMap<usize, Waves> = BTreeMap::new();
    let mut samples = Vec::with_capacity(n_t);
    let mut blocks = opts.keep_blocks.then(StepBlocks::default);

    for j in 0..n_t {
        let stencil = timederiv::stencil(time, j);
        let mut need: Vec<usize> = stencil.iter().map(|s| s.0).collect();
        need.push(j);
        for &jj in &need {
            if let std::collections::btree_map::Entry::Vacant(slot) = cache.entry(jj) {
                debug_assert!(jj >= j, "sample {jj} already updated");
                let mut sums = engine.accumulate(&state.v[jj], jj, &shifts[jj], false)?;
                slot.insert(waves_from_sums(torus, step, &mut sums));
            }
        }

        let sums = engine.accumulate(&state.v[j], j, &shifts[j], true)?;
        let w = cache[&j].w.clone();
        let chi = cache[&j].chi.clone().filter(|c| !c.is_zero());

        let dtw = {
            let mut out = VectorField::zeros(grid);
            for (i, wgt) in stencil {
                if wgt != 0.0 {
                    for a in 0..3 {
                        out.c[a].axpy(wgt, &cache[&i].w.c[a]);
                    }
                }
            }
            out
        };
        let dtchi = chi.as_ref().map(|_| {
            let mut out = ScalarField::zeros(grid);
            for (i, wgt) in stencil {
                if wgt != 0.0 {
                    if let Some(c) = &cache[&i].chi {
                        out.axpy(wgt, c);
                    }
                }
            }
            out
        });

        let Sums { wo, z, b2, xa, beta_b, b_max, beta_max, .. } = sums;
        let wo = wo.expect("full pass");
        let b2 = field(grid, b2.expect("full pass"));

        let mut wo_spec: [Spectrum; 3] = wo.map(|c| torus.forward(&field(grid, c)));
        for s in &mut wo_spec {
            torus.project_spec(s);
        }
        let w_spec = torus.forward_vector(&w);

        // W_a = curl(Σ_l (l_a/μ) w_ol / ν_l) / (λ λ0).
        let w_transport: [Option<[Spectrum; 3]>; 3] = z.map(|za| {
            za.map(|za| {
                let s: [Spectrum; 3] = za.map(|c| torus.forward(&field(grid, c)));
                torus.curl_spec(&s).map(|c| scale_spec(c, inv_ll0))
            })
        });

        let fine_len = {
            let d = grid.fine_dims();
            d[0] * d[1] * d[2]
        };
        let mut acc = vec![0.0; fine_len];

        // M = P(w_o, w_o) - Σ b^2 (Id - k̂⊗k̂); Q = P(w, w) - P(w_o, w_o).
        let b2_spec = torus.forward(&b2);
        let lwo: Vec<Vec<f64>> = wo_spec.iter().map(|s| torus.lift(s)).collect();
        let mut pwo: Vec<Spectrum> = Vec::with_capacity(6);
        for &(i, k) in SYM_INDEX.iter() {
            lift_product(&lwo[i], &lwo[k], &mut acc);
            pwo.push(torus.lower(&acc));
        }
        let m_spec: [Spectrum; 6] = std::array::from_fn(|s| {
            let mut b = b2_spec.clone();
            b.scale(mproj[s]);
            sub_spec(pwo[s].clone(), &b)
        });

        let chi_spec = chi.as_ref().map(|c| torus.forward(c));
        let lchi = chi_spec.as_ref().map(|s| torus.lift(s));
        let beta_b = beta_b.map(|v| field(grid, v));
        let k_spec: Option<[Spectrum; 3]> = lchi.as_ref().map(|lc| {
            let bb = torus.forward(beta_b.as_ref().expect("beta pass"));
            std::array::from_fn(|a| {
                lift_product(&lwo[a], lc, &mut acc);
                let mut s = bb.clone();
                s.scale(a_k[a]);
                sub_spec(torus.lower(&acc), &s)
            })
        });

        let lw: Vec<Vec<f64>> = w_spec.iter().map(|s| torus.lift(s)).collect();
        let mut q_spec: Vec<Spectrum> = Vec::with_capacity(6);
        for &(i, k) in SYM_INDEX.iter() {
            for x in 0..fine_len {
                acc[x] = lw[i][x] * lw[k][x] - lwo[i][x] * lwo[k][x];
            }
            q_spec.push(torus.lower(&acc));
        }
        let woc_chi: Option<[Spectrum; 3]> = lchi.as_ref().map(|lc| {
            std::array::from_fn(|a| {
                for x in 0..fine_len {
                    acc[x] = (lw[a][x] - lwo[a][x]) * lc[x];
                }
                torus.lower(&acc)
            })
        });
        drop(lwo);
        drop(pwo);

        // P(w, ∇θ), equal to div P(w, θ) since w is solenoidal.
        let theta_spec = torus.forward(&state.theta[j]);
        acc.iter_mut().for_each(|x| *x = 0.0);
        let mut any = false;
        for a in 0..3 {
            let d = torus.derivative_spec(&theta_spec, a);
            if d.is_zero() {
                continue;
            }
            any = true;
            let ld = torus.lift(&d);
            for x in 0..fine_len {
                acc[x] += lw[a][x] * ld[x];
            }
        }
        let wgrad_spec = if any { torus.lower(&acc) } else { Spectrum::zeros(grid) };

        let v_prev = &state.v[j];
        let v_zero = v_prev.is_zero();
        let (n_pp, v_chi): (Option<Vec<Spectrum>>, Option<[Spectrum; 3]>) = if v_zero {
            (None, None)
        } else {
            let lv: Vec<Vec<f64>> = v_prev.c.iter().map(|c| torus.lift_field(c)).collect();
            let mut out = Vec::with_capacity(6);
            for &(i, k) in SYM_INDEX.iter() {
                for x in 0..fine_len {
                    acc[x] = lw[i][x] * lv[k][x] + lv[i][x] * lw[k][x];
                }
                out.push(torus.lower(&acc));
            }
            let vc = lchi.as_ref().map(|lc| {
                std::array::from_fn(|a| {
                    lift_product(&lv[a], lc, &mut acc);
                    torus.lower(&acc)
                })
            });
            (Some(out), vc)
        };
        drop(lw);
        drop(lchi);
        drop(acc);

        // Stress pieces.
        let mut osc_in = torus.div_sym_spec(&m_spec);
        let chi_mean = chi.as_ref().map_or(0.0, |c| c.mean());
        if let Some(cs) = &chi_spec {
            osc_in[2] = sub_spec(osc_in[2].clone(), cs);
        }
        let osc_r = crate::antidiv::sym_from_spec(torus, antidiv_matrix_spec(torus, ctx.table, &osc_in));

        let w_tr_div: [Spectrum; 3] = std::array::from_fn(|i| {
            let comps: [Option<Spectrum>; 3] = std::array::from_fn(|a| w_transport[a].as_ref().map(|wa| wa[i].clone()));
            derivative_sum(torus, &comps)
        });
        let dtw_spec = torus.forward_vector(&dtw);
        let transport_in: [Spectrum; 3] = std::array::from_fn(|i| {
            let mut s = dtw_spec[i].clone();
            s.add_assign(&w_tr_div[i]);
            s
        });
        let transport_r = crate::antidiv::sym_from_spec(torus, antidiv_matrix_spec(torus, ctx.table, &transport_in));

        let mut n_field = SymField::zeros(grid);
        n_field.traceless = false;
        for (slot, &(i, k)) in SYM_INDEX.iter().enumerate() {
            let mut s = match &n_pp {
                Some(v) => v[slot].clone(),
                None => Spectrum::zeros(grid),
            };
            if let Some(wk) = &w_transport[k] {
                s = sub_spec(s, &wk[i]);
            }
            if let Some(wi) = &w_transport[i] {
                s = sub_spec(s, &wi[k]);
            }
            n_field.c[slot] = torus.inverse_owned(s);
        }
        let tr_n = n_field.remove_trace();
        let error1_r = n_field;

        let mut q_field = SymField::from_components(std::array::from_fn(|s| torus.inverse(&q_spec[s])));
        let tr_q = q_field.remove_trace();
        let error2_r = q_field;

        let mut delta_r = osc_r.clone();
        delta_r.add_assign(&transport_r);
        delta_r.add_assign(&error1_r);
        delta_r.add_assign(&error2_r);
        delta_r.traceless = true;

        // Flux pieces.
        let osc_f_in = match &k_spec {
            Some(k) => {
                let mut d = torus.divergence_spec(k);
                d.add_assign(&wgrad_spec);
                d
            }
            None => wgrad_spec,
        };
        let osc_f = torus.inverse_vector(antidiv_vector_spec(torus, ctx.table, &osc_f_in));
        let mut delta_f = osc_f.clone();
        let (mut transport_f, mut error1_f, mut error2_f) =
            (VectorField::zeros(grid), VectorField::zeros(grid), VectorField::zeros(grid));
        if let (Some(dtc), Some(_)) = (&dtchi, &chi) {
            let x_spec: [Option<Spectrum>; 3] = xa.map(|x| {
                x.map(|x| {
                    let mut s = torus.forward(&field(grid, x));
                    torus.project_spec(&mut s);
                    s
                })
            });
            let mut tin = torus.forward(dtc);
            tin.add_assign(&derivative_sum(torus, &x_spec));
            transport_f = torus.inverse_vector(antidiv_vector_spec(torus, ctx.table, &tin));
            let e1: [Spectrum; 3] = std::array::from_fn(|a| {
                let mut s = match &v_chi {
                    Some(vc) => vc[a].clone(),
                    None => Spectrum::zeros(grid),
                };
                if let Some(x) = &x_spec[a] {
                    s = sub_spec(s, x);
                }
                s
            });
            error1_f = torus.inverse_vector(e1);
            error2_f = torus.inverse_vector(woc_chi.clone().expect("chi products"));
            delta_f.add_assign(&transport_f);
            delta_f.add_assign(&error1_f);
            delta_f.add_assign(&error2_f);
        }

        let osc_transport_r = {
            let mut x = osc_r.clone();
            x.add_assign(&transport_r);
            x.sup_norm()
        };
        let osc_transport_f = {
            let mut x = osc_f.clone();
            x.add_assign(&transport_f);
            x.sup_norm()
        };
        let w_mean = w.mean();
        let div_w = torus.inverse_owned(torus.divergence_spec(&w_spec)).sup_norm();
        samples.push(SampleNorms {
            t: time.t(j),
            delta_r: delta_r.sup_norm(),
            osc_r: osc_r.sup_norm(),
            transport_r: transport_r.sup_norm(),
            osc_transport_r,
            error1_r: error1_r.sup_norm(),
            error2_r: error2_r.sup_norm(),
            delta_f: delta_f.sup_norm(),
            osc_f: osc_f.sup_norm(),
            transport_f: transport_f.sup_norm(),
            osc_transport_f,
            error1_f: error1_f.sup_norm(),
            error2_f: error2_f.sup_norm(),
            w_sup: w.sup_norm(),
            w_mean: w_mean.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
            div_w,
            b_max,
            beta_max,
        });

        // In-place update of sample j.
        state.v[j].add_assign(&w);
        if let Some(c) = &chi {
            state.theta[j].add_assign(c);
            state.theta[j].add_constant(-chi_mean);
        }
        let r = &mut state.r[j];
        for s in 0..6 {
            r.c[s].axpy(mproj[s], &b2);
        }
        r.add_scalar_identity(&b2, -2.0 / 3.0);
        r.add_assign(&delta_r);
        r.traceless = true;
        let p = &mut state.p[j];
        p.axpy(-1.0 / 3.0, &tr_q);
        p.axpy(-1.0 / 3.0, &tr_n);
        p.axpy(-2.0 / 3.0, &b2);
        if let Some(bb) = &beta_b {
            for a in 0..3 {
                state.f[j].c[a].axpy(a_k[a], bb);
            }
        }
        state.f[j].add_assign(&delta_f);

        if let Some(bl) = &mut blocks {
            bl.delta_r.push(delta_r);
            bl.delta_f.push(delta_f);
            bl.sum_b2.push(b2);
        }

        let keep_from = j.saturating_sub(2);
        cache.retain(|&k, _| k >= keep_from);
    }

    let mut max = SampleNorms::default();
    for s in &samples {
        max.max_merge(s);
    }
    Ok((
        state,
        StepReport {
            params: *step,
            active_cells: active.into_iter().collect(),
            max_nu,
            samples,
            max,
            overflow: torus.overflow_count() - overflow_start,
            blocks,
        },
    ))
}
