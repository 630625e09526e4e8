//! Right inverses of the divergence as Fourier multipliers.
//!
//! For a vector field `v`, `R v` is the symmetric trace-free matrix with
//! symbol
//!
//! ```text
//! S(k) = (-i/|k|)(v̂⊗k̂ + k̂⊗v̂) + (i/(2|k|))(v̂·k̂)(k̂⊗k̂ + Id)
//! ```
//!
//! which satisfies `i S(k) k = v̂(k)`. For a scalar `b`, `G b = ∇a` with
//! `Δa = b - mean(b)`, i.e. `ĝ(k) = -i k b̂(k)/|k|^2`. Both vanish at `k = 0`
//! and on Nyquist modes.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::SYM_INDEX;
use crate::torus::{ScalarField, Spectrum, SymField, Torus, VectorField};

/// Per-mode `1/|k|` for one grid, zero at `k = 0` and on Nyquist modes.
#[derive(Debug, Clone)]
pub struct MultiplierTable {
    inv_k: Vec<f64>,
}

impl MultiplierTable {
    pub fn new(torus: &Torus) -> Self {
        let mut inv_k = vec![0.0; torus.grid().spectrum_len()];
        torus.for_each_mode(|i, k| {
            if let Some(k) = k {
                let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                if k2 > 0.0 {
                    inv_k[i] = 1.0 / k2.sqrt();
                }
            }
        });
        MultiplierTable { inv_k }
    }

    pub fn inv_k(&self) -> &[f64] {
        &self.inv_k
    }
}

/// Spectral form of `R`; returns the six stored entries.
pub fn antidiv_matrix_spec(torus: &Torus, table: &MultiplierTable, v: &[Spectrum; 3]) -> [Spectrum; 6] {
    let grid = torus.grid();
    let mut out: [Spectrum; 6] = std::array::from_fn(|_| Spectrum::zeros(grid));
    let i_unit = Complex64::new(0.0, 1.0);
    torus.for_each_mode(|idx, k| {
        let Some(k) = k else { return };
        let ik = table.inv_k[idx];
        if ik == 0.0 {
            return;
        }
        let kh = [k[0] as f64 * ik, k[1] as f64 * ik, k[2] as f64 * ik];
        let vh = [v[0].data()[idx], v[1].data()[idx], v[2].data()[idx]];
        let vk = vh[0] * kh[0] + vh[1] * kh[1] + vh[2] * kh[2];
        let c1 = -i_unit * ik;
        let c2 = i_unit * (0.5 * ik) * vk;
        for (slot, &(a, b)) in SYM_INDEX.iter().enumerate() {
            let id = if a == b { 1.0 } else { 0.0 };
            out[slot].data_mut()[idx] = c1 * (vh[a] * kh[b] + kh[a] * vh[b]) + c2 * (kh[a] * kh[b] + id);
        }
    });
    out
}

/// `R v`: symmetric, trace-free, zero-mean, with `div R v = v - mean(v)`.
pub fn antidiv_matrix(torus: &Torus, table: &MultiplierTable, v: &VectorField) -> Result<SymField> {
    if v.grid().n != torus.grid().n {
        return Err(Error::GridMismatch("antidiv_matrix input".into()));
    }
    let s = torus.forward_vector(v);
    Ok(sym_from_spec(torus, antidiv_matrix_spec(torus, table, &s)))
}

pub(crate) fn sym_from_spec(torus: &Torus, s: [Spectrum; 6]) -> SymField {
    let mut out = SymField::from_components(s.map(|c| torus.inverse_owned(c)));
    out.traceless = true;
    out
}

/// Spectral form of `G`.
pub fn antidiv_vector_spec(torus: &Torus, table: &MultiplierTable, b: &Spectrum) -> [Spectrum; 3] {
    let grid = torus.grid();
    let mut out: [Spectrum; 3] = std::array::from_fn(|_| Spectrum::zeros(grid));
    torus.for_each_mode(|idx, k| {
        let Some(k) = k else { return };
        let ik = table.inv_k[idx];
        if ik == 0.0 {
            return;
        }
        let c = b.data()[idx] * Complex64::new(0.0, -ik * ik);
        for a in 0..3 {
            out[a].data_mut()[idx] = c * k[a] as f64;
        }
    });
    out
}

/// `G b = ∇a`, `Δa = b - mean(b)`.
pub fn antidiv_vector(torus: &Torus, table: &MultiplierTable, b: &ScalarField) -> Result<VectorField> {
    if b.grid().n != torus.grid().n {
        return Err(Error::GridMismatch("antidiv_vector input".into()));
    }
    let s = torus.forward(b);
    Ok(torus.inverse_vector(antidiv_vector_spec(torus, table, &s)))
}

/// `∫_{T^3} c(x) e^{iλk·x} dx = (2π)^3 ĉ(-λk)`.
pub fn stationary_phase_integral(torus: &Torus, c: &ScalarField, k: [i64; 3], lam: u64) -> Result<Complex64> {
    if lam == 0 {
        return Err(Error::validation("lam", "must be positive"));
    }
    let carrier = [-k[0] * lam as i64, -k[1] * lam as i64, -k[2] * lam as i64];
    let s = torus.forward(c);
    let coeff = s.coeff(carrier).ok_or(Error::Nyquist {
        carrier,
        nyquist: torus.grid().n.map(|n| n / 2),
        context: " (stationary-phase integral)".into(),
    })?;
    Ok(coeff * torus.grid().volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::GridSpec;

    #[test]
    fn symbol_inverts_divergence() {
        let k = [3.0_f64, -1.0, 2.0];
        let norm = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        let kh = k.map(|x| x / norm);
        let v = [Complex64::new(0.3, -0.2), Complex64::new(-1.1, 0.4), Complex64::new(0.5, 0.9)];
        let i = Complex64::new(0.0, 1.0);
        let vk = v[0] * kh[0] + v[1] * kh[1] + v[2] * kh[2];
        let s = |a: usize, b: usize| {
            let id = if a == b { 1.0 } else { 0.0 };
            -i / norm * (v[a] * kh[b] + kh[a] * v[b]) + i / (2.0 * norm) * vk * (kh[a] * kh[b] + id)
        };
        for a in 0..3 {
            let mut div = Complex64::new(0.0, 0.0);
            for b in 0..3 {
                div += i * s(a, b) * k[b];
                assert!((s(a, b) - s(b, a)).norm() < 1e-15);
            }
            assert!((div - v[a]).norm() < 1e-14);
        }
        assert!((s(0, 0) + s(1, 1) + s(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn shear_example() {
        let grid = GridSpec::cubic(16).unwrap();
        let t = Torus::new(grid);
        let table = MultiplierTable::new(&t);
        let v = VectorField::from_fn(grid, |x| [x[2].sin(), 0.0, 0.0]);
        let s = antidiv_matrix(&t, &table, &v).unwrap();
        for i in 0..grid.len() {
            let x = grid.point(i);
            let m = s.at(i);
            assert!((m[2] + x[2].cos()).abs() < 1e-13);
            for slot in [0, 1, 3, 4, 5] {
                assert!(m[slot].abs() < 1e-13);
            }
        }
    }
}
