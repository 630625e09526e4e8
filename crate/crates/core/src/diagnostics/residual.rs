//! Pointwise residual of the relaxed Boussinesq system
//!
//! ```text
//! ∂_t v + div(v⊗v) + ∇p - θ e3 - div R̊,    div v,    ∂_t θ + div(vθ) - h - div f
//! ```
//!
//! evaluated with the shared time stencil and the dealiased product.

use crate::error::Result;
use crate::geometry::SYM_INDEX;
use crate::scheme::{timederiv, ReynoldsState};
use crate::torus::{ScalarField, Spectrum, Torus};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResidualSample {
    pub t: f64,
    pub momentum_sup: f64,
    pub momentum_l2: f64,
    pub div_v: f64,
    pub temperature_sup: f64,
    pub temperature_l2: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualReport {
    pub samples: Vec<ResidualSample>,
    pub momentum_sup: f64,
    pub momentum_l2: f64,
    pub div_v: f64,
    pub temperature_sup: f64,
    pub temperature_l2: f64,
    /// `max(‖v‖^2, ‖θ‖, ‖∇p‖)` over all samples, or 1 for a zero tuple.
    pub scale: f64,
    /// Products that lost energy to band truncation during the check.
    pub dealias_overflow: u64,
}

impl ResidualReport {
    pub fn momentum_relative(&self) -> f64 {
        self.momentum_sup / self.scale
    }

    pub fn temperature_relative(&self) -> f64 {
        self.temperature_sup / self.scale
    }

    /// Largest of the relative momentum, temperature and divergence residuals.
    pub fn worst_relative(&self) -> f64 {
        self.momentum_relative()
            .max(self.temperature_relative())
            .max(self.div_v / self.scale)
    }
}

fn l2(parts: &[ScalarField]) -> f64 {
    parts.iter().map(ScalarField::integral_sq).sum::<f64>().sqrt()
}

/// Residual of every time sample of `state`.
pub fn system_residual(torus: &Torus, state: &ReynoldsState) -> Result<ResidualReport> {
    let time = state.time;
    let overflow0 = torus.overflow_count();
    let mut samples = Vec::with_capacity(time.len());
    let mut scale: f64 = 0.0;
    for j in 0..time.len() {
        let v = &state.v[j];
        let vsup = v.sup_norm();
        let grad_p = torus.gradient(&state.p[j])?;
        scale = scale.max(vsup * vsup).max(state.theta[j].sup_norm()).max(grad_p.sup_norm());

        let lv: Vec<Vec<f64>> = v.c.iter().map(|c| torus.lift_field(c)).collect();
        let fine = lv[0].len();
        let mut acc = vec![0.0; fine];
        let vv: [Spectrum; 6] = std::array::from_fn(|s| {
            let (a, b) = SYM_INDEX[s];
            for x in 0..fine {
                acc[x] = lv[a][x] * lv[b][x];
            }
            torus.lower(&acc)
        });
        let theta_spec = torus.forward(&state.theta[j]);
        let lt = torus.lift(&theta_spec);
        let vt: [Spectrum; 3] = std::array::from_fn(|a| {
            for x in 0..fine {
                acc[x] = lv[a][x] * lt[x];
            }
            torus.lower(&acc)
        });
        drop(lv);
        drop(lt);
        drop(acc);

        let dtv = timederiv::dt_vector(time, j, &state.v);
        let mut mom_spec = torus.forward_vector(&dtv);
        let div_vv = torus.div_sym_spec(&vv);
        let r_spec: [Spectrum; 6] = std::array::from_fn(|s| torus.forward(&state.r[j].c[s]));
        let div_r = torus.div_sym_spec(&r_spec);
        let p_spec = torus.forward(&state.p[j]);
        for a in 0..3 {
            mom_spec[a].add_assign(&div_vv[a]);
            mom_spec[a].add_assign(&torus.derivative_spec(&p_spec, a));
            let mut d = div_r[a].clone();
            d.scale(-1.0);
            mom_spec[a].add_assign(&d);
        }
        let mut theta_neg = theta_spec.clone();
        theta_neg.scale(-1.0);
        mom_spec[2].add_assign(&theta_neg);
        let mom = torus.inverse_vector(mom_spec);

        let dtheta = timederiv::dt_of(time, j, &state.theta);
        let mut tspec = torus.forward(&dtheta);
        tspec.add_assign(&torus.divergence_spec(&vt));
        if let Some(h) = state.heat_at(j) {
            let mut hs = torus.forward(&h);
            hs.scale(-1.0);
            tspec.add_assign(&hs);
        }
        let f_spec = torus.forward_vector(&state.f[j]);
        let mut div_f = torus.divergence_spec(&f_spec);
        div_f.scale(-1.0);
        tspec.add_assign(&div_f);
        let temp = torus.inverse_owned(tspec);

        let div_v = torus.divergence(v)?.sup_norm();
        samples.push(ResidualSample {
            t: time.t(j),
            momentum_sup: mom.sup_norm(),
            momentum_l2: l2(&mom.c),
            div_v,
            temperature_sup: temp.sup_norm(),
            temperature_l2: l2(std::slice::from_ref(&temp)),
        });
    }
    let fold = |f: fn(&ResidualSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(ResidualReport {
        momentum_sup: fold(|s| s.momentum_sup),
        momentum_l2: fold(|s| s.momentum_l2),
        div_v: fold(|s| s.div_v),
        temperature_sup: fold(|s| s.temperature_sup),
        temperature_l2: fold(|s| s.temperature_l2),
        scale: if scale > 0.0 { scale } else { 1.0 },
        dealias_overflow: torus.overflow_count() - overflow0,
        samples,
    })
}
