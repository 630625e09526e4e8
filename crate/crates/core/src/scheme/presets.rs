//! Starting tuples: the explicit initial data of the three existence
//! results and a generic relaxed base built by absorbing the residual of
//! arbitrary smooth `(v, p, θ)` into `R̊` and `f`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::antidiv::{antidiv_matrix, antidiv_vector, MultiplierTable};
use crate::diagnostics::system_residual;
use crate::error::{Error, Result};
use crate::torus::{ScalarField, Spectrum, SymField, TimeGrid, Torus, VectorField};

use super::profiles::{HeatSource, X3Series};
use super::state::ReynoldsState;
use super::timederiv;

fn require_zero_mean(series: &X3Series, what: &str) -> Result<()> {
    if series.constant != 0.0 {
        return Err(Error::validation(
            what,
            format!("constant term {} must vanish so that ∫_0^x3 stays periodic", series.constant),
        ));
    }
    if series.modes.is_empty() {
        return Err(Error::validation(what, "needs at least one x3 mode"));
    }
    Ok(())
}

fn check_band(torus: &Torus, m: u32, what: &str) -> Result<()> {
    if !torus.grid().resolves([0, 0, m as i64]) {
        return Err(Error::Nyquist {
            carrier: [0, 0, m as i64],
            nyquist: torus.grid().n.map(|n| n / 2),
            context: format!(" ({what})"),
        });
    }
    Ok(())
}

/// `v = 0`, `θ = θ0(x3)`, `p = ∫_0^{x3} θ0`, `R̊ = 0`, `f = 0`.
pub fn thm11(torus: &Torus, time: TimeGrid, theta0: &X3Series, delta: f64) -> Result<ReynoldsState> {
    require_zero_mean(theta0, "theta0")?;
    check_band(torus, theta0.max_mode(), "theta0")?;
    let grid = torus.grid();
    let mut st = ReynoldsState::zeros(grid, time, delta);
    let theta = theta0.sample(grid);
    let p = ScalarField::from_fn(grid, |x| theta0.antiderivative(x[2]));
    for j in 0..time.len() {
        st.theta[j] = theta.clone();
        st.p[j] = p.clone();
    }
    Ok(st)
}

/// `v = 0`, `θ = A(t) b(x3)` with `A = ∫_0^t a`, `p = A(t) ∫_0^{x3} b`,
/// heat source `h = a(t) b(x3)`.
pub fn thm12(torus: &Torus, time: TimeGrid, heat: &HeatSource, delta: f64) -> Result<ReynoldsState> {
    require_zero_mean(&heat.b, "heat_b")?;
    check_band(torus, heat.b.max_mode(), "heat_b")?;
    let grid = torus.grid();
    let mut st = ReynoldsState::zeros(grid, time, delta);
    let b = heat.b.sample(grid);
    let bint = ScalarField::from_fn(grid, |x| heat.b.antiderivative(x[2]));
    for j in 0..time.len() {
        let a = heat.a.integral(time.t(j));
        st.theta[j] = b.scaled(a);
        st.p[j] = bint.scaled(a);
    }
    st.heat = Some(heat.clone());
    Ok(st)
}

/// The explicit tuple with `v = t N sin(N^2 x2) e1`, `R̊_12 = -cos(N^2 x2)/N`,
/// `f = cos(N^2 x3)/N e3`, `p = -(1-t) cos(N^2 x3)/N`,
/// `θ = (1-t) N sin(N^2 x3)`, `δ = 1`; verified by the residual checker.
pub fn thm13(torus: &Torus, time: TimeGrid, n: u32) -> Result<ReynoldsState> {
    if n == 0 {
        return Err(Error::validation("N", "must be positive"));
    }
    let n2 = n * n;
    check_band(torus, n2, "N^2")?;
    let grid = torus.grid();
    let nf = n as f64;
    let n2f = n2 as f64;
    let mut st = ReynoldsState::zeros(grid, time, 1.0);
    for j in 0..time.len() {
        let t = time.t(j);
        st.v[j] = VectorField::from_fn(grid, |x| [t * nf * (n2f * x[1]).sin(), 0.0, 0.0]);
        st.r[j] = SymField::from_fn(grid, |x| [0.0, -(n2f * x[1]).cos() / nf, 0.0, 0.0, 0.0, 0.0]);
        st.r[j].traceless = true;
        st.f[j] = VectorField::from_fn(grid, |x| [0.0, 0.0, (n2f * x[2]).cos() / nf]);
        st.p[j] = ScalarField::from_fn(grid, |x| -(1.0 - t) * (n2f * x[2]).cos() / nf);
        st.theta[j] = ScalarField::from_fn(grid, |x| (1.0 - t) * nf * (n2f * x[2]).sin());
    }
    let res = system_residual(torus, &st)?;
    let rel = res.worst_relative();
    if rel > 1e-10 {
        return Err(Error::Residual(format!("explicit tuple has relative residual {rel:.3e}")));
    }
    Ok(st)
}

/// `max{2/η, 4λ, 16M}`, the `N` the construction needs in principle; far
/// beyond what a desk grid can resolve.
pub fn thm13_required_n(eta: f64, lambda: f64, m: f64) -> f64 {
    (2.0 / eta).max(4.0 * lambda).max(16.0 * m)
}

/// Velocity of a relaxed base.
#[derive(Debug, Clone, PartialEq)]
pub enum VelocityProfile {
    Zero,
    /// `amp sin(x2) e1`, constant in time.
    Shear { amp: f64 },
    /// `(1 + t/4) curl A` with `A` a seeded random trigonometric polynomial
    /// of degree `kmax`, scaled so that `sup |v(0)| = amp`.
    Random { amp: f64, seed: u64, kmax: i64 },
}

/// Recipe for a relaxed tuple; `R̊` and `f` are solved for.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSpec {
    pub velocity: VelocityProfile,
    pub theta0: X3Series,
    /// Amplitude of `(1 + t/2)(cos x1 cos x2 + sin(x2 + x3))` added to `p`.
    pub p_amp: f64,
    /// Amplitude of the solenoidal flux `(1 - 0.3t)(sin x2, sin x3, sin x1)`.
    pub f_sol_amp: f64,
    pub delta: f64,
}

impl Default for RelaxedSpec {
    fn default() -> Self {
        RelaxedSpec {
            velocity: VelocityProfile::Zero,
            theta0: X3Series::cos(1, 1.0),
            p_amp: 0.0,
            f_sol_amp: 0.0,
            delta: 1.0,
        }
    }
}

fn random_velocity(torus: &Torus, amp: f64, seed: u64, kmax: i64) -> Result<VectorField> {
    let grid = torus.grid();
    if !grid.resolves([kmax, kmax, kmax]) {
        return Err(Error::validation("kmax", format!("{kmax} not resolved by {}", grid.describe())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pot: [Spectrum; 3] = std::array::from_fn(|_| Spectrum::zeros(grid));
    let mut coeffs = Vec::new();
    for kz in -kmax..=kmax {
        for ky in -kmax..=kmax {
            for kx in 0..=kmax {
                if kx == 0 && (ky < 0 || (ky == 0 && kz <= 0)) {
                    continue;
                }
                let c: [num_complex::Complex64; 3] = std::array::from_fn(|_| {
                    num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                });
                coeffs.push(([kx, ky, kz], c));
            }
        }
    }
    let [h, ny, nz] = grid.spectrum_dims();
    for (k, c) in coeffs {
        let iy = k[1].rem_euclid(ny as i64) as usize;
        let iz = k[2].rem_euclid(nz as i64) as usize;
        let idx = k[0] as usize + h * (iy + ny * iz);
        for a in 0..3 {
            pot[a].data_mut()[idx] = c[a];
        }
    }
    let mut v = torus.inverse_vector(torus.curl_spec(&pot));
    let s = v.sup_norm();
    if s == 0.0 {
        return Err(Error::validation("seed", "random potential produced a zero field"));
    }
    v.scale(amp / s);
    Ok(v)
}

/// Replaces `R̊` and `f` by the anti-divergences of the current momentum and
/// temperature residuals, so that the tuple solves the relaxed system.
pub fn absorb_residual(torus: &Torus, table: &MultiplierTable, st: &mut ReynoldsState) -> Result<()> {
    let time = st.time;
    let mut new_r = Vec::with_capacity(time.len());
    let mut new_f = Vec::with_capacity(time.len());
    for j in 0..time.len() {
        let v = &st.v[j];
        let vv = torus.product_sym(v, v)?;
        let mut mom = torus.div_sym(&vv)?;
        mom.add_assign(&timederiv::dt_vector(time, j, &st.v));
        mom.add_assign(&torus.gradient(&st.p[j])?);
        mom.c[2].sub_assign(&torus.project(&st.theta[j]));
        let mut r = antidiv_matrix(torus, table, &mom)?;
        r.traceless = true;
        new_r.push(r);

        let mut temp = timederiv::dt_of(time, j, &st.theta);
        let vt: [ScalarField; 3] = std::array::from_fn(|a| torus.product(&v.c[a], &st.theta[j]).expect("same grid"));
        temp.add_assign(&torus.divergence(&VectorField::from_components(vt))?);
        if let Some(h) = st.heat_at(j) {
            temp.sub_assign(&h);
        }
        new_f.push(antidiv_vector(torus, table, &temp)?);
    }
    for j in 0..time.len() {
        let mut r = new_r[j].clone();
        r.add_assign(&st.r[j]);
        st.r[j] = r;
        st.r[j].traceless = true;
        st.f[j].add_assign(&new_f[j]);
    }
    Ok(())
}

/// A relaxed tuple built from `spec`; the residual is absorbed into `R̊, f`.
pub fn relaxed(torus: &Torus, table: &MultiplierTable, time: TimeGrid, spec: &RelaxedSpec) -> Result<ReynoldsState> {
    let mut st = thm11(torus, time, &spec.theta0, spec.delta)?;
    let grid = torus.grid();
    let base_v = match spec.velocity {
        VelocityProfile::Zero => None,
        VelocityProfile::Shear { amp } => Some(VectorField::from_fn(grid, |x| [amp * x[1].sin(), 0.0, 0.0])),
        VelocityProfile::Random { amp, seed, kmax } => Some(random_velocity(torus, amp, seed, kmax)?),
    };
    let random = matches!(spec.velocity, VelocityProfile::Random { .. });
    let extra_p = ScalarField::from_fn(grid, |x| x[0].cos() * x[1].cos() + (x[1] + x[2]).sin());
    let f_sol = VectorField::from_fn(grid, |x| [x[1].sin(), x[2].sin(), x[0].sin()]);
    for j in 0..time.len() {
        let t = time.t(j);
        if let Some(v) = &base_v {
            let mut v = v.clone();
            if random {
                v.scale(1.0 + 0.25 * t);
            }
            st.v[j] = v;
        }
        st.p[j].axpy(spec.p_amp * (1.0 + 0.5 * t), &extra_p);
    }
    absorb_residual(torus, table, &mut st)?;
    for j in 0..time.len() {
        let t = time.t(j);
        for a in 0..3 {
            st.f[j].c[a].axpy(spec.f_sol_amp * (1.0 - 0.3 * t), &f_sol.c[a]);
        }
    }
    Ok(st)
}
