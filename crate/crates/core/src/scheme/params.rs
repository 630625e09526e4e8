use crate::error::{Error, Result};
use crate::geometry::DirectionFamily;

/// Number of steps per stage (one per family direction).
pub const STEPS_PER_STAGE: usize = 6;

/// Frequency multiplier of lattice cell `l`: `2^j`, `j = (l1 mod 2) +
/// 2(l2 mod 2) + 4(l3 mod 2)`. Distinct on every `3×3×3` neighbourhood's
/// overlapping cells, and distinct powers of two keep sums and differences
/// of carriers apart.
pub fn nu(l: [i64; 3]) -> u64 {
    let j = l[0].rem_euclid(2) + 2 * l[1].rem_euclid(2) + 4 * l[2].rem_euclid(2);
    1 << j
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    Strict,
    #[default]
    Trend,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "strict" => Some(Mode::Strict),
            "trend" => Some(Mode::Trend),
            _ => None,
        }
    }
}

/// Which stage proposition drives the amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// Prescribed energy: amplitudes scale with `ρ̄(t)`.
    #[default]
    Energy,
    /// Small stress: amplitudes scale with `δ`.
    SmallStress,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "energy" => Some(Variant::Energy),
            "small-stress" | "small_stress" | "stress" => Some(Variant::SmallStress),
            _ => None,
        }
    }
}

/// Normalization of `ρ̄`.
///
/// `Literal` is `(e(1-δ/2) - ∫|v|^2)/(2π)^3`. A full stage then adds about
/// `3ρ̄(2π)^3` of kinetic energy, since `Σ_i γ_i^2 tr(M_i) = 3`. `Trace`
/// divides by three so that a stage closes the gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhoNormalization {
    #[default]
    Literal,
    Trace,
}

impl RhoNormalization {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "literal" => Some(RhoNormalization::Literal),
            "trace" => Some(RhoNormalization::Trace),
            _ => None,
        }
    }

    pub fn divisor(self) -> f64 {
        match self {
            RhoNormalization::Literal => 1.0,
            RhoNormalization::Trace => 3.0,
        }
    }
}

/// Parameters of step `n` of a stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub n: usize,
    /// 1-based index into the direction family; equals `n`.
    pub direction: usize,
    pub mu: u64,
    pub lambda: u64,
    pub lambda0: f64,
}

impl StepParams {
    pub fn new(n: usize, mu: u64, lambda: u64, lambda0: f64) -> Result<Self> {
        if !(1..=STEPS_PER_STAGE).contains(&n) {
            return Err(Error::validation("steps", format!("step index {n} not in 1..=6")));
        }
        if mu == 0 || lambda == 0 {
            return Err(Error::validation("lambda", "λ_n and μ_n must be positive integers"));
        }
        if lambda % mu != 0 {
            return Err(Error::validation(
                "lambda",
                format!("λ_{n} = {lambda}, μ_{n} = {mu} violates λ_n/μ_n ∈ N"),
            ));
        }
        Ok(StepParams {
            n,
            direction: n,
            mu,
            lambda,
            lambda0,
        })
    }

    /// Carrier wavevector `λ ν(l) k_n` of cell `l`.
    pub fn carrier(&self, family: &DirectionFamily, l: [i64; 3]) -> [i64; 3] {
        let k = family.directions[self.direction - 1];
        let s = (self.lambda * nu(l)) as i64;
        [s * k[0], s * k[1], s * k[2]]
    }
}

/// How `λ_n` is chosen across a stage.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaRule {
    /// `λ_n = λ_1 · ratio^{n-1}`, rounded.
    Ramp { lambda1: u64, ratio: f64 },
    List(Vec<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuRule {
    /// `max(2, round(λ^{1/5}))`, with `λ` raised to the next multiple.
    Auto,
    Fixed(u64),
}

/// The step schedule of one stage plus its constants.
#[derive(Debug, Clone, PartialEq)]
pub struct StageParams {
    pub steps: Vec<StepParams>,
    pub eta: f64,
}

impl StageParams {
    pub fn schedule(
        family: &DirectionFamily,
        lambda: &LambdaRule,
        mu: MuRule,
        n_steps: usize,
        eta: f64,
    ) -> Result<Self> {
        if n_steps == 0 || n_steps > STEPS_PER_STAGE {
            return Err(Error::validation("steps", format!("{n_steps} steps; need 1..=6")));
        }
        let raw: Vec<u64> = match lambda {
            LambdaRule::Ramp { lambda1, ratio } => {
                if *ratio <= 1.0 {
                    return Err(Error::validation("lambda_ratio", "ramp ratio must exceed 1"));
                }
                (0..n_steps)
                    .map(|i| (*lambda1 as f64 * ratio.powi(i as i32)).round() as u64)
                    .collect()
            }
            LambdaRule::List(v) => {
                if v.len() < n_steps {
                    return Err(Error::validation(
                        "lambda",
                        format!("{} values for {n_steps} steps", v.len()),
                    ));
                }
                v[..n_steps].to_vec()
            }
        };
        let mut steps = Vec::with_capacity(n_steps);
        for (i, &lam) in raw.iter().enumerate() {
            let (m, l) = match mu {
                MuRule::Fixed(m) => (m, lam),
                MuRule::Auto => {
                    let m = ((lam as f64).powf(0.2).round() as u64).max(2);
                    (m, lam.div_ceil(m) * m)
                }
            };
            steps.push(StepParams::new(i + 1, m, l, family.lambda_bar)?);
        }
        for w in steps.windows(2) {
            if w[1].lambda <= w[0].lambda {
                return Err(Error::validation(
                    "lambda",
                    format!("λ must increase strictly across steps, got {} then {}", w[0].lambda, w[1].lambda),
                ));
            }
        }
        Ok(StageParams { steps, eta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu_values() {
        assert_eq!(nu([0, 0, 0]), 1);
        assert_eq!(nu([1, 0, 0]), 2);
        assert_eq!(nu([0, -1, 0]), 4);
        assert_eq!(nu([1, 1, 1]), 128);
        assert_eq!(nu([2, -2, 4]), 1);
    }

    #[test]
    fn divisibility_message() {
        let err = StepParams::new(1, 3, 16, 2f64.sqrt()).unwrap_err();
        assert!(err.to_string().contains("λ_n/μ_n ∈ N"));
    }

    #[test]
    fn auto_mu_rounds_lambda_up() {
        let fam = DirectionFamily::build();
        let s = StageParams::schedule(&fam, &LambdaRule::Ramp { lambda1: 250, ratio: 2.0 }, MuRule::Auto, 3, 0.1).unwrap();
        for st in &s.steps {
            assert_eq!(st.lambda % st.mu, 0);
            assert!(st.mu >= 2);
        }
        assert_eq!(s.steps[0].mu, 3);
        assert_eq!(s.steps[0].lambda, 252);
    }
}
