use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Oversampling ratio of the product grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Padding {
    ThreeHalves,
    #[default]
    Two,
}

impl Padding {
    pub fn fine_len(self, n: usize) -> usize {
        match self {
            Padding::ThreeHalves => 3 * n / 2,
            Padding::Two => 2 * n,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "2" | "two" => Some(Padding::Two),
            "3/2" | "1.5" | "three_halves" => Some(Padding::ThreeHalves),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Padding::ThreeHalves => "3/2",
            Padding::Two => "2",
        }
    }
}

/// Uniform periodic grid on `[0, 2π)^3`. Axes may differ in size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub n: [usize; 3],
    pub padding: Padding,
}

impl GridSpec {
    pub fn new(n: [usize; 3], padding: Padding) -> Result<Self> {
        for (axis, &len) in n.iter().enumerate() {
            if len < 8 || !len.is_power_of_two() {
                return Err(Error::Grid(format!(
                    "axis {} has {len} samples; need a power of two ≥ 8",
                    axis + 1
                )));
            }
        }
        Ok(GridSpec { n, padding })
    }

    pub fn cubic(n: usize) -> Result<Self> {
        Self::new([n; 3], Padding::Two)
    }

    pub fn with_padding(self, padding: Padding) -> Self {
        GridSpec { padding, ..self }
    }

    pub fn dim(&self) -> usize {
        3
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: [usize; 3]) -> usize {
        i[0] + self.n[0] * (i[1] + self.n[1] * i[2])
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let i0 = idx % self.n[0];
        let r = idx / self.n[0];
        [i0, r % self.n[1], r / self.n[1]]
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.n[axis] as f64
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let i = self.unravel(idx);
        [self.coord(0, i[0]), self.coord(1, i[1]), self.coord(2, i[2])]
    }

    pub fn fine_dims(&self) -> [usize; 3] {
        self.n.map(|n| self.padding.fine_len(n))
    }

    /// Half-spectrum dimensions `(n1/2 + 1, n2, n3)`.
    pub fn spectrum_dims(&self) -> [usize; 3] {
        [self.n[0] / 2 + 1, self.n[1], self.n[2]]
    }

    pub fn spectrum_len(&self) -> usize {
        let d = self.spectrum_dims();
        d[0] * d[1] * d[2]
    }

    /// Signed wavenumber of storage index `i` on an axis of length `n`;
    /// `None` for the Nyquist mode.
    #[inline]
    pub fn wavenumber(i: usize, n: usize) -> Option<i64> {
        let half = n / 2;
        if i < half {
            Some(i as i64)
        } else if i == half {
            None
        } else {
            Some(i as i64 - n as i64)
        }
    }

    /// Whether a lattice vector lies strictly inside the Nyquist band.
    pub fn resolves(&self, k: [i64; 3]) -> bool {
        (0..3).all(|a| k[a].unsigned_abs() < (self.n[a] / 2) as u64)
    }

    /// Cell volume times sample count: `|T^3| = (2π)^3`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(3)
    }

    pub fn describe(&self) -> String {
        format!("{}x{}x{}", self.n[0], self.n[1], self.n[2])
    }

    pub fn parse_dims(s: &str) -> Option<[usize; 3]> {
        let parts: Vec<&str> = s.trim().split('x').collect();
        match parts.as_slice() {
            [n] => n.trim().parse().ok().map(|n| [n; 3]),
            [a, b, c] => Some([a.trim().parse().ok()?, b.trim().parse().ok()?, c.trim().parse().ok()?]),
            _ => None,
        }
    }
}

/// Uniform samples `t_j = j/(n_t - 1)` of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    pub n_t: usize,
}

impl TimeGrid {
    pub fn new(n_t: usize) -> Result<Self> {
        if n_t < 3 || n_t % 2 == 0 {
            return Err(Error::validation(
                "tsamples",
                format!("{n_t} time samples; need an odd count ≥ 3"),
            ));
        }
        Ok(TimeGrid { n_t })
    }

    pub fn len(&self) -> usize {
        self.n_t
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 / (self.n_t - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        1.0 / (self.n_t - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|j| self.t(j)).collect()
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid { n_t: 17 }
    }
}
