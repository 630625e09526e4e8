//! Single-step decay experiments: run step 1 from a fixed relaxed base for
//! several `(λ, μ)` and fit log-log slopes of the measured stress parts.

use crate::antidiv::MultiplierTable;
use crate::error::{Error, Result};
use crate::geometry::DirectionFamily;
use crate::partition::PartitionSpec;
use crate::scheme::presets::{relaxed, RelaxedSpec};
use crate::scheme::{
    assemble_step, energy_spectral, EnergyExpr, EnergyProfile, RhoNormalization, SampleNorms, StageBase, StepContext,
    StepOptions, StepParams, Variant,
};
use crate::torus::{GridSpec, TimeGrid, Torus};

/// One run of the experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRun {
    pub grid: GridSpec,
    pub lambda: u64,
    pub mu: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayConfig {
    pub runs: Vec<DecayRun>,
    pub n_t: usize,
    pub base: RelaxedSpec,
    pub variant: Variant,
    pub energy: EnergyExpr,
    pub rho: RhoNormalization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub run: DecayRun,
    pub max: SampleNorms,
    pub samples: Vec<SampleNorms>,
    /// `max_t |e(1 - δ/2) - ∫|v_new|^2|`.
    pub energy_gap: f64,
    /// `e(1 - δ/2) - ∫|v_new|^2` per time sample.
    pub gaps: Vec<f64>,
    pub overflow: u64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::validation("slope", "need at least two matching points"));
    }
    if x.iter().chain(y).any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::validation("slope", "log-log fit needs positive finite values"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::validation("slope", "abscissae coincide"));
    }
    Ok(sxy / sxx)
}

impl DecayTable {
    /// Slope of `pick(row)` against `λ` over all rows.
    pub fn slope_in_lambda(&self, pick: impl Fn(&SampleNorms) -> f64) -> Result<f64> {
        let x: Vec<f64> = self.rows.iter().map(|r| r.run.lambda as f64).collect();
        let y: Vec<f64> = self.rows.iter().map(|r| pick(&r.max)).collect();
        loglog_slope(&x, &y)
    }

    /// Whether `pick(row)` strictly decreases along the rows.
    pub fn strictly_decreasing(&self, pick: impl Fn(&SampleNorms) -> f64) -> bool {
        self.rows.windows(2).all(|w| pick(&w[1].max) < pick(&w[0].max))
    }
}

/// Runs step 1 once per configured `(grid, λ, μ)`.
pub fn stress_decay_experiment(cfg: &DecayConfig) -> Result<DecayTable> {
    let family = DirectionFamily::build();
    let partition = PartitionSpec::default();
    let time = TimeGrid::new(cfg.n_t)?;
    let mut rows = Vec::with_capacity(cfg.runs.len());
    for run in &cfg.runs {
        let torus = Torus::new(run.grid);
        let table = MultiplierTable::new(&torus);
        let state = relaxed(&torus, &table, time, &cfg.base)?;
        let energy = EnergyProfile::new(cfg.energy.clone(), time)?;
        let base = StageBase::new(&torus, &family, &state, cfg.variant, Some(&energy), cfg.rho)?;
        let ctx = StepContext {
            torus: &torus,
            table: &table,
            family: &family,
            partition: &partition,
            base: &base,
        };
        let step = StepParams::new(1, run.mu, run.lambda, family.lambda_bar)?;
        let delta = state.delta;
        let (out, rep) = assemble_step(&ctx, state, &step, StepOptions::default()).map_err(|e| e.in_step(1))?;
        let gaps: Vec<f64> = (0..time.len())
            .map(|j| energy.at(j) * (1.0 - 0.5 * delta) - energy_spectral(&torus, &out.v[j]))
            .collect();
        let energy_gap = gaps.iter().fold(0.0, |m: f64, g| m.max(g.abs()));
        log::info!(
            "decay run {} λ = {} μ = {}: ‖δR̊‖ = {:.4e}, ‖δf‖ = {:.4e}",
            run.grid.describe(),
            run.lambda,
            run.mu,
            rep.max.delta_r,
            rep.max.delta_f
        );
        rows.push(DecayRow {
            run: *run,
            max: rep.max,
            samples: rep.samples,
            energy_gap,
            gaps,
            overflow: rep.overflow,
            cells: rep.active_cells.len(),
        });
    }
    Ok(DecayTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 1.5).abs() < 1e-12);
        assert!(loglog_slope(&x, &[1.0, 0.0, 1.0]).is_err());
    }
}
