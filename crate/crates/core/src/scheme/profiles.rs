//! Closed-form time and `x3` profiles: the prescribed energy `e(t)` and the
//! separated heat source `h = a(t) b(x3)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::torus::{GridSpec, ScalarField, TimeGrid};

/// `|T^3|`.
pub fn torus_volume() -> f64 {
    (2.0 * PI).powi(3)
}

/// Expression for `e(t) / |T^3|`.
#[derive(Debug, Clone, PartialEq)]
pub enum EnergyExpr {
    Constant(f64),
    Affine { a: f64, b: f64 },
    /// `a + b cos(ω t)`.
    Cosine { a: f64, b: f64, omega: f64 },
}

impl EnergyExpr {
    /// Parses `const:a`, `affine:a,b` or `cos:a,b,omega`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::validation("energy", format!("cannot parse `{s}`"));
        let (tag, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = rest
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match (tag.trim(), nums.as_slice()) {
            ("const", [a]) => Ok(EnergyExpr::Constant(*a)),
            ("affine", [a, b]) => Ok(EnergyExpr::Affine { a: *a, b: *b }),
            ("cos", [a, b, w]) => Ok(EnergyExpr::Cosine { a: *a, b: *b, omega: *w }),
            _ => Err(bad()),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        match *self {
            EnergyExpr::Constant(a) => a,
            EnergyExpr::Affine { a, b } => a + b * t,
            EnergyExpr::Cosine { a, b, omega } => a + b * (omega * t).cos(),
        }
    }
}

/// The prescribed kinetic energy, sampled on the time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    pub expr: EnergyExpr,
    pub samples: Vec<f64>,
    pub e_min: f64,
    pub e_max: f64,
}

impl EnergyProfile {
    /// `e(t) = |T^3| · expr(t)`.
    pub fn new(expr: EnergyExpr, time: TimeGrid) -> Result<Self> {
        let samples: Vec<f64> = time.times().iter().map(|&t| torus_volume() * expr.eval(t)).collect();
        if samples.iter().any(|&e| e <= 0.0 || !e.is_finite()) {
            return Err(Error::validation("energy", "e(t) must be positive on [0, 1]"));
        }
        let e_min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let e_max = samples.iter().copied().fold(0.0, f64::max);
        Ok(EnergyProfile {
            expr,
            samples,
            e_min,
            e_max,
        })
    }

    pub fn at(&self, j: usize) -> f64 {
        self.samples[j]
    }
}

/// `c0 + Σ_m (c_m cos(m x3) + s_m sin(m x3))`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct X3Series {
    pub constant: f64,
    /// `(m, c_m, s_m)` with `m ≥ 1`.
    pub modes: Vec<(u32, f64, f64)>,
}

impl X3Series {
    pub fn cos(m: u32, c: f64) -> Self {
        X3Series {
            constant: 0.0,
            modes: vec![(m, c, 0.0)],
        }
    }

    /// Parses whitespace-separated terms `c0`, `cos<m>:<c>`, `sin<m>:<s>`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut out = X3Series::default();
        for term in s.split_whitespace() {
            let bad = || Error::validation("x3 series", format!("cannot parse term `{term}`"));
            if let Some((head, val)) = term.split_once(':') {
                let v: f64 = val.parse().map_err(|_| bad())?;
                let (kind, m) = head.split_at(3);
                let m: u32 = m.parse().map_err(|_| bad())?;
                if m == 0 {
                    return Err(bad());
                }
                match kind {
                    "cos" => out.modes.push((m, v, 0.0)),
                    "sin" => out.modes.push((m, 0.0, v)),
                    _ => return Err(bad()),
                }
            } else {
                out.constant += term.parse::<f64>().map_err(|_| bad())?;
            }
        }
        Ok(out)
    }

    pub fn eval(&self, x3: f64) -> f64 {
        self.constant
            + self
                .modes
                .iter()
                .map(|&(m, c, s)| c * (m as f64 * x3).cos() + s * (m as f64 * x3).sin())
                .sum::<f64>()
    }

    /// `∫_0^{x3}` of the oscillating part; requires a zero constant term for
    /// the result to be periodic.
    pub fn antiderivative(&self, x3: f64) -> f64 {
        self.modes
            .iter()
            .map(|&(m, c, s)| {
                let m = m as f64;
                c * (m * x3).sin() / m - s * ((m * x3).cos() - 1.0) / m
            })
            .sum()
    }

    pub fn max_mode(&self) -> u32 {
        self.modes.iter().map(|m| m.0).max().unwrap_or(0)
    }

    pub fn sample(&self, grid: GridSpec) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.eval(x[2]))
    }
}

/// `a0 + a1 t + a2 t^2 + …`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn parse(s: &str) -> Result<Self> {
        let coeffs = s
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::validation("heat_a", format!("cannot parse `{s}`")))?;
        Ok(Polynomial { coeffs })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// `∫_0^t`.
    pub fn integral(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * t.powi(i as i32 + 1) / (i as f64 + 1.0))
            .sum()
    }
}

/// `h(x, t) = a(t) b(x3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatSource {
    pub a: Polynomial,
    pub b: X3Series,
}

impl HeatSource {
    pub fn sample(&self, grid: GridSpec, t: f64) -> ScalarField {
        let at = self.a.eval(t);
        ScalarField::from_fn(grid, |x| at * self.b.eval(x[2]))
    }
}
