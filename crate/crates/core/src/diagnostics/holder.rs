//! Norms of the estimate lemmas: `‖f‖_0`, `[f]_m` and a sampled lower bound
//! for `[f]_{m+α}`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::torus::{GridSpec, ScalarField, Spectrum, Torus};

/// Random point pairs used by [`holder_estimate`].
pub const HOLDER_PAIRS: usize = 100_000;

fn multi_indices(m: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..=m {
        for b in 0..=(m - a) {
            out.push([a, b, m - a - b]);
        }
    }
    out
}

fn derivatives(torus: &Torus, f: &ScalarField, m: usize) -> Vec<ScalarField> {
    let spec = torus.forward(f);
    multi_indices(m)
        .into_iter()
        .map(|beta| {
            let mut s: Spectrum = spec.clone();
            for (axis, &count) in beta.iter().enumerate() {
                for _ in 0..count {
                    s = torus.derivative_spec(&s, axis);
                }
            }
            torus.inverse_owned(s)
        })
        .collect()
}

/// `[f]_m = max_{|β| = m} sup |∂^β f|`, derivatives taken spectrally.
pub fn derivative_seminorm(torus: &Torus, f: &ScalarField, m: usize) -> f64 {
    if m == 0 {
        return f.sup_norm();
    }
    derivatives(torus, f, m).iter().map(ScalarField::sup_norm).fold(0.0, f64::max)
}

fn periodic_distance(grid: &GridSpec, a: [usize; 3], b: [usize; 3]) -> f64 {
    let mut d2 = 0.0;
    for axis in 0..3 {
        let n = grid.n[axis];
        let di = a[axis].abs_diff(b[axis]);
        let di = di.min(n - di) as f64 * 2.0 * std::f64::consts::PI / n as f64;
        d2 += di * di;
    }
    d2.sqrt()
}

/// Lower-bound estimate of `[f]_{m+α}` from [`HOLDER_PAIRS`] seeded random
/// pairs of distinct grid points.
pub fn holder_estimate(torus: &Torus, f: &ScalarField, m: usize, alpha: f64, seed: u64) -> Result<f64> {
    if m > 2 {
        return Err(Error::validation("m", format!("order {m} not in 0..=2")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::validation("alpha", format!("α = {alpha} not in (0, 1)")));
    }
    let grid = torus.grid();
    let fields = if m == 0 { vec![f.clone()] } else { derivatives(torus, f, m) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = grid.len();
    let mut best: f64 = 0.0;
    for _ in 0..HOLDER_PAIRS {
        let i = rng.random_range(0..len);
        let j = rng.random_range(0..len);
        if i == j {
            continue;
        }
        let d = periodic_distance(&grid, grid.unravel(i), grid.unravel(j));
        let dpow = d.powf(alpha);
        for g in &fields {
            let q = (g.data()[i] - g.data()[j]).abs() / dpow;
            best = best.max(q);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_have_no_seminorm() {
        let grid = GridSpec::cubic(16).unwrap();
        let t = Torus::new(grid);
        let c = ScalarField::constant(grid, 2.5);
        assert_eq!(holder_estimate(&t, &c, 0, 0.5, 1).unwrap(), 0.0);
        assert!(derivative_seminorm(&t, &c, 1) < 1e-14);
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(0).len(), 1);
        assert_eq!(multi_indices(1).len(), 3);
        assert_eq!(multi_indices(2).len(), 6);
    }
}
