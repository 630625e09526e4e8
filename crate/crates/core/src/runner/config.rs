//! Flat `key = value` run configuration. Command-line flags go through the
//! same [`RunConfig::set`] so both paths validate identically.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::DirectionFamily;
use crate::scheme::params::{LambdaRule, Mode, MuRule, RhoNormalization, StageParams, StepParams, Variant};
use crate::scheme::presets::VelocityProfile;
use crate::scheme::profiles::{EnergyExpr, HeatSource, Polynomial, X3Series};
use crate::torus::{GridSpec, Padding, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// The first `steps` steps of one stage.
    Step,
    /// A full stage.
    Stage,
    /// `iterations` stages with `δ` halved between them.
    Outer,
    /// Step 1 for each configured `(grid, λ, μ)`.
    Decay,
    /// Residual of a stored snapshot.
    Check,
}

impl Experiment {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "step" => Some(Experiment::Step),
            "stage" => Some(Experiment::Stage),
            "outer" => Some(Experiment::Outer),
            "decay" => Some(Experiment::Decay),
            "check" => Some(Experiment::Check),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Thm11,
    Thm12,
    Thm13,
    Relaxed,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "thm11" => Some(Preset::Thm11),
            "thm12" => Some(Preset::Thm12),
            "thm13" => Some(Preset::Thm13),
            "relaxed" => Some(Preset::Relaxed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub preset: Preset,
    pub grid: [usize; 3],
    pub padding: Padding,
    pub tsamples: usize,
    pub delta: f64,
    pub lambda: Vec<u64>,
    pub lambda_ratio: f64,
    pub mu: MuRule,
    pub steps: usize,
    pub iterations: usize,
    pub mode: Mode,
    pub variant: Variant,
    pub rho: RhoNormalization,
    pub energy: EnergyExpr,
    pub heat_a: Polynomial,
    pub heat_b: X3Series,
    pub theta0: X3Series,
    pub thm13_n: u32,
    pub velocity: VelocityProfile,
    pub p_amp: f64,
    pub f_sol_amp: f64,
    pub decay_runs: Vec<(GridSpec, u64, u64)>,
    pub partition: (f64, f64),
    pub out: PathBuf,
    pub seed: u64,
    /// Snapshot directory for the `check` experiment.
    pub check_residual: Option<PathBuf>,
    /// Per-step abort threshold on the relative residual.
    pub residual_tol: Option<f64>,
    pub track_representation: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: Experiment::Step,
            preset: Preset::Thm11,
            grid: [64, 64, 64],
            padding: Padding::Two,
            tsamples: 9,
            delta: 1.0,
            lambda: vec![8],
            lambda_ratio: 2.0,
            mu: MuRule::Fixed(2),
            steps: 1,
            iterations: 1,
            mode: Mode::Trend,
            variant: Variant::Energy,
            rho: RhoNormalization::Literal,
            energy: EnergyExpr::Constant(1.0),
            heat_a: Polynomial { coeffs: vec![1.0] },
            heat_b: X3Series::cos(1, 1.0),
            theta0: X3Series::cos(1, 1.0),
            thm13_n: 4,
            velocity: VelocityProfile::Zero,
            p_amp: 0.0,
            f_sol_amp: 0.0,
            decay_runs: Vec::new(),
            partition: (0.88, 0.95),
            out: PathBuf::from("out"),
            seed: 0,
            check_residual: None,
            residual_tol: Some(1e-8),
            track_representation: false,
        }
    }
}

fn bad(field: &str, msg: impl Into<String>) -> Error {
    Error::validation(field, msg)
}

fn num<T: std::str::FromStr>(field: &str, v: &str) -> Result<T> {
    v.parse::<T>().map_err(|_| bad(field, format!("cannot parse `{v}`")))
}

fn boolean(field: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(bad(field, format!("expected a boolean, got `{v}`"))),
    }
}

fn parse_velocity(v: &str, seed: u64) -> Result<VelocityProfile> {
    let (tag, rest) = v.split_once(':').unwrap_or((v, ""));
    let nums: Vec<f64> = if rest.is_empty() {
        Vec::new()
    } else {
        rest.split(',').map(|x| num::<f64>("velocity", x.trim())).collect::<Result<_>>()?
    };
    match (tag, nums.as_slice()) {
        ("zero", []) => Ok(VelocityProfile::Zero),
        ("shear", [amp]) => Ok(VelocityProfile::Shear { amp: *amp }),
        ("random", [amp, kmax]) => Ok(VelocityProfile::Random {
            amp: *amp,
            seed,
            kmax: *kmax as i64,
        }),
        _ => Err(bad("velocity", format!("expected zero | shear:amp | random:amp,kmax, got `{v}`"))),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "experiment" => {
                self.experiment =
                    Experiment::parse(v).ok_or_else(|| bad("experiment", "expected step | stage | outer | decay | check"))?
            }
            "preset" => {
                self.preset = Preset::parse(v).ok_or_else(|| bad("preset", "expected thm11 | thm12 | thm13 | relaxed"))?
            }
            "grid" => {
                self.grid = GridSpec::parse_dims(v).ok_or_else(|| bad("grid", format!("expected N or AxBxC, got `{v}`")))?
            }
            "padding" => {
                self.padding = Padding::parse(v).ok_or_else(|| bad("padding", "expected 2 or 3/2"))?;
            }
            "tsamples" => self.tsamples = num("tsamples", v)?,
            "delta" => self.delta = num("delta", v)?,
            "lambda" => {
                self.lambda = v
                    .split(',')
                    .map(|x| num::<u64>("lambda", x.trim()))
                    .collect::<Result<_>>()?
            }
            "lambda_ratio" => self.lambda_ratio = num("lambda_ratio", v)?,
            "mu" => {
                self.mu = if v == "auto" {
                    MuRule::Auto
                } else {
                    MuRule::Fixed(num("mu", v)?)
                }
            }
            "steps" => self.steps = num("steps", v)?,
            "iterations" => self.iterations = num("iterations", v)?,
            "mode" => self.mode = Mode::parse(v).ok_or_else(|| bad("mode", "expected strict | trend"))?,
            "variant" => {
                self.variant = Variant::parse(v).ok_or_else(|| bad("variant", "expected energy | small-stress"))?
            }
            "rho_normalization" => {
                self.rho = RhoNormalization::parse(v).ok_or_else(|| bad("rho_normalization", "expected literal | trace"))?
            }
            "energy" => self.energy = EnergyExpr::parse(v)?,
            "heat_a" => self.heat_a = Polynomial::parse(v)?,
            "heat_b" => self.heat_b = X3Series::parse(v)?,
            "theta0" => self.theta0 = X3Series::parse(v)?,
            "thm13_n" => self.thm13_n = num("thm13_n", v)?,
            "velocity" => self.velocity = parse_velocity(v, self.seed)?,
            "p_amp" => self.p_amp = num("p_amp", v)?,
            "f_sol_amp" => self.f_sol_amp = num("f_sol_amp", v)?,
            "decay_runs" => {
                let mut runs = Vec::new();
                for item in v.split(',') {
                    let parts: Vec<&str> = item.trim().split(':').collect();
                    let [g, l, m] = parts.as_slice() else {
                        return Err(bad("decay_runs", format!("expected grid:lambda:mu, got `{item}`")));
                    };
                    let dims = GridSpec::parse_dims(g).ok_or_else(|| bad("decay_runs", format!("bad grid `{g}`")))?;
                    runs.push((GridSpec::new(dims, self.padding)?, num("decay_runs", l)?, num("decay_runs", m)?));
                }
                self.decay_runs = runs;
            }
            "partition" => {
                let (a, b) = v
                    .split_once(',')
                    .ok_or_else(|| bad("partition", "expected c1,c2"))?;
                self.partition = (num("partition", a.trim())?, num("partition", b.trim())?);
            }
            "out" => self.out = PathBuf::from(v),
            "seed" => {
                self.seed = num("seed", v)?;
                if let VelocityProfile::Random { seed, .. } = &mut self.velocity {
                    *seed = self.seed;
                }
            }
            "check_residual" => {
                self.check_residual = Some(PathBuf::from(v));
                self.experiment = Experiment::Check;
            }
            "residual_tol" => {
                self.residual_tol = if v == "none" { None } else { Some(num("residual_tol", v)?) }
            }
            "track_representation" => self.track_representation = boolean("track_representation", v)?,
            other => return Err(bad(other, "unknown configuration key")),
        }
        Ok(())
    }

    /// Parses a configuration text; errors carry the line number.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                message: format!("expected key = value, got `{line}`"),
            })?;
            cfg.set(k, v).map_err(|e| Error::Config {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid, self.padding)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.tsamples)
    }

    pub fn heat(&self) -> HeatSource {
        HeatSource {
            a: self.heat_a.clone(),
            b: self.heat_b.clone(),
        }
    }

    fn lambda_rule(&self, n_steps: usize) -> LambdaRule {
        if self.lambda.len() == 1 && n_steps > 1 {
            LambdaRule::Ramp {
                lambda1: self.lambda[0],
                ratio: self.lambda_ratio,
            }
        } else {
            LambdaRule::List(self.lambda.clone())
        }
    }

    /// Step schedule for a stage of `n_steps` steps, scaled by `factor` (the
    /// outer loop multiplies λ by `2^k`).
    pub fn stage_params(&self, family: &DirectionFamily, n_steps: usize, factor: u64, eta: f64) -> Result<StageParams> {
        let rule = match self.lambda_rule(n_steps) {
            LambdaRule::Ramp { lambda1, ratio } => LambdaRule::Ramp {
                lambda1: lambda1 * factor,
                ratio,
            },
            LambdaRule::List(v) => LambdaRule::List(v.iter().map(|l| l * factor).collect()),
        };
        StageParams::schedule(family, &rule, self.mu, n_steps, eta)
    }

    /// Checks every constraint that does not need the fields themselves.
    pub fn validate(&self) -> Result<()> {
        if self.experiment == Experiment::Check {
            if self.check_residual.is_none() {
                return Err(bad("check_residual", "the check experiment needs a snapshot directory"));
            }
            return Ok(());
        }
        self.grid_spec()?;
        self.time_grid()?;
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(bad("delta", format!("δ = {} not in (0, 1]", self.delta)));
        }
        if !(1..=6).contains(&self.steps) {
            return Err(bad("steps", format!("{} not in 1..=6", self.steps)));
        }
        if self.iterations == 0 {
            return Err(bad("iterations", "must be at least 1"));
        }
        crate::partition::PartitionSpec::new(self.partition.0, self.partition.1)?;
        if self.lambda.is_empty() {
            return Err(bad("lambda", "no values"));
        }
        let family = DirectionFamily::build();
        let n_steps = match self.experiment {
            Experiment::Step | Experiment::Decay => self.steps,
            _ => 6,
        };
        if self.experiment != Experiment::Decay {
            self.stage_params(&family, n_steps, 1, 0.0)?;
        } else {
            if self.decay_runs.is_empty() {
                return Err(bad("decay_runs", "the decay experiment needs grid:lambda:mu entries"));
            }
            for (_, l, m) in &self.decay_runs {
                StepParams::new(1, *m, *l, family.lambda_bar)?;
            }
        }
        Ok(())
    }
}
