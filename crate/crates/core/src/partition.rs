//! Quadratic partition of unity over the integer lattice:
//! `α_l(y) = φ(|y - l|) / sqrt(Σ_{l'} φ(|y - l'|)^2)`, so `Σ_l α_l^2 = 1`
//! identically and `supp α_l ⊆ B_{c2}(l)`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::torus::VectorField;

/// Covering radius of `Z^3`.
pub const COVERING_RADIUS: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSpec {
    pub c1: f64,
    pub c2: f64,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec { c1: 0.88, c2: 0.95 }
    }
}

/// Cells whose bump is nonzero at one point, with their weights.
#[derive(Debug, Clone, Copy)]
pub struct CellWeights {
    pub cells: [[i64; 3]; 8],
    pub alpha: [f64; 8],
    pub len: usize,
}

impl CellWeights {
    pub fn iter(&self) -> impl Iterator<Item = ([i64; 3], f64)> + '_ {
        (0..self.len).map(|i| (self.cells[i], self.alpha[i]))
    }
}

/// `e^{-1/u}` for `u > 0`, else 0.
fn flat(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

impl PartitionSpec {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(COVERING_RADIUS < c1 && c1 < c2 && c2 < 1.0) {
            return Err(Error::validation(
                "partition",
                format!("need √3/2 < c1 < c2 < 1, got c1 = {c1}, c2 = {c2}"),
            ));
        }
        Ok(PartitionSpec { c1, c2 })
    }

    /// Radial bump: 1 on `[0, c1]`, 0 on `[c2, ∞)`, smooth in between.
    pub fn bump(&self, r: f64) -> f64 {
        if r <= self.c1 {
            return 1.0;
        }
        if r >= self.c2 {
            return 0.0;
        }
        let s = (r - self.c1) / (self.c2 - self.c1);
        let (a, b) = (flat(1.0 - s), flat(s));
        a / (a + b)
    }

    /// All cells with `α_l(y) > 0`, in lexicographic order.
    pub fn weights(&self, y: [f64; 3]) -> CellWeights {
        let base = y.map(|c| c.floor() as i64);
        let mut out = CellWeights {
            cells: [[0; 3]; 8],
            alpha: [0.0; 8],
            len: 0,
        };
        let mut norm = 0.0;
        for dx in 0..2 {
            for dy in 0..2 {
                for dz in 0..2 {
                    let l = [base[0] + dx, base[1] + dy, base[2] + dz];
                    let r = dist(y, l);
                    let phi = self.bump(r);
                    if phi > 0.0 {
                        out.cells[out.len] = l;
                        out.alpha[out.len] = phi;
                        out.len += 1;
                        norm += phi * phi;
                    }
                }
            }
        }
        let inv = 1.0 / norm.sqrt();
        for a in &mut out.alpha[..out.len] {
            *a *= inv;
        }
        out
    }

    pub fn alpha(&self, l: [i64; 3], y: [f64; 3]) -> f64 {
        if dist(y, l) >= self.c2 {
            return 0.0;
        }
        self.weights(y)
            .iter()
            .find(|(cell, _)| *cell == l)
            .map_or(0.0, |(_, a)| a)
    }

    /// Every `l` with `min_x |μ v(x) - l| < c2` over the grid samples.
    pub fn active_cells(&self, mu: u64, v: &VectorField) -> BTreeSet<[i64; 3]> {
        let mut set = BTreeSet::new();
        let m = mu as f64;
        for i in 0..v.grid().len() {
            let y = v.at(i).map(|c| m * c);
            for (l, _) in self.weights(y).iter() {
                set.insert(l);
            }
        }
        set
    }
}

fn dist(y: [f64; 3], l: [i64; 3]) -> f64 {
    let d = [y[0] - l[0] as f64, y[1] - l[1] as f64, y[2] - l[2] as f64];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}
