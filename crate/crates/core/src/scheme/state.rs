use crate::error::{Error, Result};
use crate::torus::{GridSpec, ScalarField, SymField, TimeGrid, Torus, VectorField};

use super::profiles::HeatSource;

/// A relaxed Boussinesq tuple `(v, p, θ, R̊, f)` at every time sample.
///
/// `r` is stored trace-free; the pressure carries the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ReynoldsState {
    pub time: TimeGrid,
    pub v: Vec<VectorField>,
    pub p: Vec<ScalarField>,
    pub theta: Vec<ScalarField>,
    pub r: Vec<SymField>,
    pub f: Vec<VectorField>,
    pub delta: f64,
    pub heat: Option<HeatSource>,
}

impl ReynoldsState {
    pub fn zeros(grid: GridSpec, time: TimeGrid, delta: f64) -> Self {
        let n = time.len();
        ReynoldsState {
            time,
            v: vec![VectorField::zeros(grid); n],
            p: vec![ScalarField::zeros(grid); n],
            theta: vec![ScalarField::zeros(grid); n],
            r: vec![SymField::zeros(grid); n],
            f: vec![VectorField::zeros(grid); n],
            delta,
            heat: None,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.p[0].grid()
    }

    pub fn heat_at(&self, j: usize) -> Option<ScalarField> {
        self.heat
            .as_ref()
            .map(|h| h.sample(self.grid(), self.time.t(j)))
    }

    /// Structural checks: matching sizes, trace-free stress, solenoidal
    /// velocity at `tol` relative to `max ‖v‖`.
    pub fn validate(&self, torus: &Torus, tol: f64) -> Result<()> {
        let n = self.time.len();
        if [self.v.len(), self.p.len(), self.theta.len(), self.r.len(), self.f.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(Error::GridMismatch("time sample counts differ between fields".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::validation("delta", format!("δ = {} not in (0, 1]", self.delta)));
        }
        let grid = self.grid();
        let same = |g: GridSpec| g.n == grid.n;
        for j in 0..n {
            if !(same(self.v[j].grid()) && same(self.theta[j].grid()) && same(self.r[j].grid()) && same(self.f[j].grid())) {
                return Err(Error::GridMismatch(format!("fields at sample {j} use different grids")));
            }
        }
        let vscale = self.v.iter().map(VectorField::sup_norm).fold(0.0, f64::max).max(1.0);
        for j in 0..n {
            let div = torus.divergence(&self.v[j])?.sup_norm();
            if div > tol * vscale {
                return Err(Error::validation("v", format!("div v = {div:.3e} at sample {j}")));
            }
            self.r[j].check_traceless(1e-12)?;
        }
        Ok(())
    }
}
