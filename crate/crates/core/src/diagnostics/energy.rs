//! Energy gap `e(t)(1 - δ/2) - ∫|v|^2` and the two energy bands.

use crate::scheme::{energy_spectral, EnergyProfile, ReynoldsState};
use crate::torus::Torus;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub e: f64,
    pub kinetic: f64,
    /// `e(1 - δ/2) - ∫|v|^2`.
    pub gap: f64,
    /// `e - ∫|v|^2`.
    pub remaining: f64,
    /// `3δ/4 e ≤ e - ∫|v|^2 ≤ 5δ/4 e`.
    pub in_input_band: bool,
    /// `3δ/8 e ≤ e - ∫|v|^2 ≤ 5δ/8 e`.
    pub in_output_band: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub delta: f64,
    pub samples: Vec<EnergySample>,
    pub gap_min: f64,
    pub gap_max: f64,
    pub max_abs_gap: f64,
}

impl EnergyReport {
    pub fn all_in_input_band(&self) -> bool {
        self.samples.iter().all(|s| s.in_input_band)
    }

    pub fn all_in_output_band(&self) -> bool {
        self.samples.iter().all(|s| s.in_output_band)
    }
}

/// Classifies `remaining = e - ∫|v|^2` against `[lo δ e, hi δ e]`.
pub fn in_band(remaining: f64, e: f64, delta: f64, lo: f64, hi: f64) -> bool {
    remaining >= lo * delta * e && remaining <= hi * delta * e
}

pub fn energy_gap(torus: &Torus, state: &ReynoldsState, e: &EnergyProfile) -> EnergyReport {
    let delta = state.delta;
    let samples: Vec<EnergySample> = (0..state.time.len())
        .map(|j| {
            let kinetic = energy_spectral(torus, &state.v[j]);
            let ej = e.at(j);
            let remaining = ej - kinetic;
            EnergySample {
                t: state.time.t(j),
                e: ej,
                kinetic,
                gap: ej * (1.0 - 0.5 * delta) - kinetic,
                remaining,
                in_input_band: in_band(remaining, ej, delta, 0.75, 1.25),
                in_output_band: in_band(remaining, ej, delta, 0.375, 0.625),
            }
        })
        .collect();
    let gap_min = samples.iter().map(|s| s.gap).fold(f64::INFINITY, f64::min);
    let gap_max = samples.iter().map(|s| s.gap).fold(f64::NEG_INFINITY, f64::max);
    let max_abs_gap = samples.iter().map(|s| s.gap.abs()).fold(0.0, f64::max);
    EnergyReport {
        delta,
        samples,
        gap_min,
        gap_max,
        max_abs_gap,
    }
}
