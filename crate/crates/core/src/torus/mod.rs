//! Periodic fields on a uniform grid over `[0, 2π)^3` and their spectral
//! calculus: transforms, derivatives, band projection, dealiased products
//! and modulated plane waves.
//!
//! Spectra hold normalized coefficients, `f(x) = Σ_k f̂(k) e^{ik·x}`, over the
//! half-spectrum `kx ≥ 0`. A field is band-limited when every mode with a
//! Nyquist component vanishes; derivatives and products always return
//! band-limited results.

mod fft;
mod field;
mod grid;

pub use fft::{ActiveBand, Fft3};
pub use field::{pairwise_sum, ScalarField, SymField, VectorField};
pub use grid::{GridSpec, Padding, TimeGrid};

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::SYM_INDEX;

/// Relative energy lost to truncation above which a product is flagged.
pub const OVERFLOW_TOL: f64 = 1e-10;

/// Normalized half-spectrum of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: GridSpec) -> Self {
        Spectrum {
            grid,
            data: vec![Complex64::new(0.0, 0.0); grid.spectrum_len()],
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn add_assign(&mut self, other: &Spectrum) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    /// Storage index of the lattice vector `k`, if it has one with `kx ≥ 0`.
    fn slot(&self, k: [i64; 3]) -> Option<usize> {
        let [h, n2, n3] = self.grid.spectrum_dims();
        if k[0] < 0 || k[0] as usize >= h {
            return None;
        }
        let wrap = |k: i64, n: usize| -> Option<usize> {
            if k.unsigned_abs() as usize > n / 2 {
                None
            } else {
                Some(k.rem_euclid(n as i64) as usize)
            }
        };
        let iy = wrap(k[1], n2)?;
        let iz = wrap(k[2], n3)?;
        Some(k[0] as usize + h * (iy + n2 * iz))
    }

    /// Coefficient of `e^{ik·x}` for any `k` strictly inside the band.
    pub fn coeff(&self, k: [i64; 3]) -> Option<Complex64> {
        if !self.grid.resolves(k) {
            return None;
        }
        if k[0] >= 0 {
            self.slot(k).map(|i| self.data[i])
        } else {
            self.slot([-k[0], -k[1], -k[2]]).map(|i| self.data[i].conj())
        }
    }
}

/// Per-axis wavenumbers of the half-spectrum; `None` marks Nyquist.
#[derive(Debug, Clone)]
pub struct Wavenumbers {
    pub kx: Vec<Option<i64>>,
    pub ky: Vec<Option<i64>>,
    pub kz: Vec<Option<i64>>,
}

impl Wavenumbers {
    fn new(grid: &GridSpec) -> Self {
        let [h, n2, n3] = grid.spectrum_dims();
        Wavenumbers {
            kx: (0..h).map(|i| GridSpec::wavenumber(i, grid.n[0])).collect(),
            ky: (0..n2).map(|i| GridSpec::wavenumber(i, n2)).collect(),
            kz: (0..n3).map(|i| GridSpec::wavenumber(i, n3)).collect(),
        }
    }
}

/// Spectral workspace bound to one grid: FFT plans for the grid and its
/// padded companion, wavenumbers, and product bookkeeping.
#[derive(Debug)]
pub struct Torus {
    grid: GridSpec,
    coarse: Fft3,
    fine: Fft3,
    waves: Wavenumbers,
    fine_band: ActiveBand,
    overflow: AtomicU64,
    products: AtomicU64,
}

impl Torus {
    pub fn new(grid: GridSpec) -> Self {
        let fine_dims = grid.fine_dims();
        let fine_band = ActiveBand {
            kx: 0..grid.n[0] / 2,
            ky: vec![0..grid.n[1] / 2, fine_dims[1] - (grid.n[1] / 2 - 1)..fine_dims[1]],
        };
        Torus {
            grid,
            coarse: Fft3::new(grid.n),
            fine: Fft3::new(fine_dims),
            waves: Wavenumbers::new(&grid),
            fine_band,
            overflow: AtomicU64::new(0),
            products: AtomicU64::new(0),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn wavenumbers(&self) -> &Wavenumbers {
        &self.waves
    }

    /// Number of products flagged for truncation loss so far.
    pub fn overflow_count(&self) -> u64 {
        self.overflow.load(Ordering::Relaxed)
    }

    pub fn product_count(&self) -> u64 {
        self.products.load(Ordering::Relaxed)
    }

    pub fn reset_counters(&self) {
        self.overflow.store(0, Ordering::Relaxed);
        self.products.store(0, Ordering::Relaxed);
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if f.grid().n != self.grid.n {
            return Err(Error::GridMismatch(format!(
                "field on {} used with a {} workspace",
                f.grid().describe(),
                self.grid.describe()
            )));
        }
        Ok(())
    }

    /// Calls `op(index, k)` for every stored mode; `k` is `None` when a
    /// component sits at Nyquist.
    #[inline]
    pub fn for_each_mode(&self, mut op: impl FnMut(usize, Option<[i64; 3]>)) {
        let w = &self.waves;
        let mut idx = 0;
        for kz in &w.kz {
            for ky in &w.ky {
                for kx in &w.kx {
                    let k = match (kx, ky, kz) {
                        (Some(a), Some(b), Some(c)) => Some([*a, *b, *c]),
                        _ => None,
                    };
                    op(idx, k);
                    idx += 1;
                }
            }
        }
    }

    pub fn forward(&self, f: &ScalarField) -> Spectrum {
        let mut s = Spectrum::zeros(self.grid);
        self.coarse.forward(
            f.data(),
            &mut s.data,
            &ActiveBand::full(self.grid.spectrum_dims()),
        );
        let norm = 1.0 / self.grid.len() as f64;
        for c in &mut s.data {
            *c *= norm;
        }
        s
    }

    pub fn inverse(&self, s: &Spectrum) -> ScalarField {
        self.inverse_owned(s.clone())
    }

    pub fn inverse_owned(&self, mut s: Spectrum) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        if s.is_zero() {
            return out;
        }
        self.coarse.inverse(
            &mut s.data,
            out.data_mut(),
            &ActiveBand::full(self.grid.spectrum_dims()),
        );
        out
    }

    /// Zeroes every mode with a Nyquist component.
    pub fn project_spec(&self, s: &mut Spectrum) {
        let data = &mut s.data;
        self.for_each_mode(|i, k| {
            if k.is_none() {
                data[i] = Complex64::new(0.0, 0.0);
            }
        });
    }

    /// Band projection of a field.
    pub fn project(&self, f: &ScalarField) -> ScalarField {
        let mut s = self.forward(f);
        self.project_spec(&mut s);
        self.inverse_owned(s)
    }

    pub fn project_vector(&self, v: &VectorField) -> VectorField {
        VectorField::from_components(std::array::from_fn(|a| self.project(&v.c[a])))
    }

    /// `∂_axis` in spectral space (axis 0, 1 or 2).
    pub fn derivative_spec(&self, s: &Spectrum, axis: usize) -> Spectrum {
        let mut out = Spectrum::zeros(self.grid);
        let (src, dst) = (&s.data, &mut out.data);
        self.for_each_mode(|i, k| {
            if let Some(k) = k {
                dst[i] = src[i] * Complex64::new(0.0, k[axis] as f64);
            }
        });
        out
    }

    pub fn derivative(&self, f: &ScalarField, axis: usize) -> Result<ScalarField> {
        self.check(f)?;
        Ok(self.inverse_owned(self.derivative_spec(&self.forward(f), axis)))
    }

    pub fn gradient(&self, f: &ScalarField) -> Result<VectorField> {
        self.check(f)?;
        let s = self.forward(f);
        Ok(VectorField::from_components(std::array::from_fn(|a| {
            self.inverse_owned(self.derivative_spec(&s, a))
        })))
    }

    /// `Σ_a i k_a ŝ_a`.
    pub fn divergence_spec(&self, s: &[Spectrum; 3]) -> Spectrum {
        let mut out = Spectrum::zeros(self.grid);
        let dst = &mut out.data;
        self.for_each_mode(|i, k| {
            if let Some(k) = k {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..3 {
                    acc += s[a].data[i] * k[a] as f64;
                }
                dst[i] = Complex64::new(-acc.im, acc.re);
            }
        });
        out
    }

    pub fn divergence(&self, v: &VectorField) -> Result<ScalarField> {
        self.check(&v.c[0])?;
        let s = self.forward_vector(v);
        Ok(self.inverse_owned(self.divergence_spec(&s)))
    }

    /// `i k × ŝ`.
    pub fn curl_spec(&self, s: &[Spectrum; 3]) -> [Spectrum; 3] {
        let mut out: [Spectrum; 3] = std::array::from_fn(|_| Spectrum::zeros(self.grid));
        let [o0, o1, o2] = &mut out;
        self.for_each_mode(|i, k| {
            if let Some(k) = k {
                let ik = |a: usize| Complex64::new(0.0, k[a] as f64);
                let (a0, a1, a2) = (s[0].data[i], s[1].data[i], s[2].data[i]);
                o0.data[i] = ik(1) * a2 - ik(2) * a1;
                o1.data[i] = ik(2) * a0 - ik(0) * a2;
                o2.data[i] = ik(0) * a1 - ik(1) * a0;
            }
        });
        out
    }

    pub fn curl(&self, v: &VectorField) -> Result<VectorField> {
        self.check(&v.c[0])?;
        let s = self.forward_vector(v);
        Ok(self.inverse_vector(self.curl_spec(&s)))
    }

    /// Row divergence `(div S)_i = Σ_j ∂_j S_ij` of a symmetric field.
    pub fn div_sym_spec(&self, s: &[Spectrum; 6]) -> [Spectrum; 3] {
        std::array::from_fn(|i| {
            let row: [Spectrum; 3] = std::array::from_fn(|j| s[crate::geometry::sym_slot(i, j)].clone());
            self.divergence_spec(&row)
        })
    }

    pub fn div_sym(&self, m: &SymField) -> Result<VectorField> {
        self.check(&m.c[0])?;
        let s: [Spectrum; 6] = std::array::from_fn(|k| self.forward(&m.c[k]));
        Ok(self.inverse_vector(self.div_sym_spec(&s)))
    }

    pub fn forward_vector(&self, v: &VectorField) -> [Spectrum; 3] {
        std::array::from_fn(|a| self.forward(&v.c[a]))
    }

    pub fn inverse_vector(&self, s: [Spectrum; 3]) -> VectorField {
        let [a, b, c] = s;
        VectorField::from_components([
            self.inverse_owned(a),
            self.inverse_owned(b),
            self.inverse_owned(c),
        ])
    }

    /// Samples of a band-limited spectrum on the padded grid.
    pub fn lift(&self, s: &Spectrum) -> Vec<f64> {
        let fd = self.grid.fine_dims();
        let fine_len = fd[0] * fd[1] * fd[2];
        let mut out = vec![0.0; fine_len];
        if s.is_zero() {
            return out;
        }
        let [hf, nf2, _] = self.fine.spectrum_dims();
        let mut fine = vec![Complex64::new(0.0, 0.0); self.fine.spectrum_len()];
        let w = &self.waves;
        let [h, n2, _] = self.grid.spectrum_dims();
        for (iz, kz) in w.kz.iter().enumerate() {
            let Some(kz) = kz else { continue };
            let fz = kz.rem_euclid(fd[2] as i64) as usize;
            for (iy, ky) in w.ky.iter().enumerate() {
                let Some(ky) = ky else { continue };
                let fy = ky.rem_euclid(nf2 as i64) as usize;
                let src = &s.data[h * (iy + n2 * iz)..];
                let dst = &mut fine[hf * (fy + nf2 * fz)..];
                let nx = self.grid.n[0] / 2;
                dst[..nx].copy_from_slice(&src[..nx]);
            }
        }
        self.fine.inverse(&mut fine, &mut out, &self.fine_band);
        out
    }

    pub fn lift_field(&self, f: &ScalarField) -> Vec<f64> {
        let mut s = self.forward(f);
        self.project_spec(&mut s);
        self.lift(&s)
    }

    /// Truncates padded-grid samples to the band of the base grid.
    /// Energy outside the band is measured and flagged.
    pub fn lower(&self, fine_samples: &[f64]) -> Spectrum {
        self.products.fetch_add(1, Ordering::Relaxed);
        let mut out = Spectrum::zeros(self.grid);
        if fine_samples.iter().all(|&x| x == 0.0) {
            return out;
        }
        let fd = self.grid.fine_dims();
        let fine_len = fd[0] * fd[1] * fd[2];
        let mut spec = vec![Complex64::new(0.0, 0.0); self.fine.spectrum_len()];
        self.fine.forward(fine_samples, &mut spec, &self.fine_band);

        let norm = 1.0 / fine_len as f64;
        let [hf, nf2, _] = self.fine.spectrum_dims();
        let [h, n2, _] = self.grid.spectrum_dims();
        let w = &self.waves;
        let mut inband = 0.0;
        for (iz, kz) in w.kz.iter().enumerate() {
            let Some(kz) = kz else { continue };
            let fz = kz.rem_euclid(fd[2] as i64) as usize;
            for (iy, ky) in w.ky.iter().enumerate() {
                let Some(ky) = ky else { continue };
                let fy = ky.rem_euclid(nf2 as i64) as usize;
                let src = &spec[hf * (fy + nf2 * fz)..];
                let dst = &mut out.data[h * (iy + n2 * iz)..];
                for ix in 0..self.grid.n[0] / 2 {
                    let c = src[ix] * norm;
                    dst[ix] = c;
                    let weight = if ix == 0 { 1.0 } else { 2.0 };
                    inband += weight * c.norm_sqr();
                }
            }
        }
        let sq: Vec<f64> = fine_samples.iter().map(|x| x * x).collect();
        let total = pairwise_sum(&sq) * norm;
        if total - inband > OVERFLOW_TOL * total {
            self.overflow.fetch_add(1, Ordering::Relaxed);
        }
        out
    }

    /// Dealiased product of two spectra.
    pub fn product_spec(&self, a: &Spectrum, b: &Spectrum) -> Spectrum {
        if a.is_zero() || b.is_zero() {
            self.products.fetch_add(1, Ordering::Relaxed);
            return Spectrum::zeros(self.grid);
        }
        let mut fa = self.lift(a);
        let fb = self.lift(b);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= y;
        }
        self.lower(&fa)
    }

    /// Dealiased pointwise product; exact on the band for band-limited inputs.
    pub fn product(&self, a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
        self.check(a)?;
        self.check(b)?;
        let mut sa = self.forward(a);
        let mut sb = self.forward(b);
        self.project_spec(&mut sa);
        self.project_spec(&mut sb);
        Ok(self.inverse_owned(self.product_spec(&sa, &sb)))
    }

    /// Dealiased `P(a⊗b)` for vectors; entry `(i, j)` is `P(a_i b_j)`
    /// symmetrized.
    pub fn product_sym(&self, a: &VectorField, b: &VectorField) -> Result<SymField> {
        self.check(&a.c[0])?;
        let la: Vec<Vec<f64>> = a.c.iter().map(|f| self.lift_field(f)).collect();
        let lb: Vec<Vec<f64>> = b.c.iter().map(|f| self.lift_field(f)).collect();
        let mut out = SymField::zeros(self.grid);
        out.traceless = false;
        let mut acc = vec![0.0; la[0].len()];
        for (slot, &(i, j)) in SYM_INDEX.iter().enumerate() {
            for x in 0..acc.len() {
                acc[x] = 0.5 * (la[i][x] * lb[j][x] + la[j][x] * lb[i][x]);
            }
            out.c[slot] = self.inverse_owned(self.lower(&acc));
        }
        Ok(out)
    }

    /// `env · (amp e^{i(k·x + offset)} + conj(amp) e^{-i(k·x + offset)})`.
    pub fn modulated_wave(
        &self,
        envelope: &ScalarField,
        amplitude: [Complex64; 3],
        carrier: [i64; 3],
        phase_offset: f64,
    ) -> Result<VectorField> {
        self.check(envelope)?;
        if !self.grid.resolves(carrier) {
            return Err(Error::Nyquist {
                carrier,
                nyquist: self.grid.n.map(|n| n / 2),
                context: String::new(),
            });
        }
        let table = PhaseTable::new(&self.grid, carrier);
        let shift = Complex64::from_polar(1.0, phase_offset);
        let mut out = VectorField::zeros(self.grid);
        let env = envelope.data();
        let n = self.grid.n;
        let mut idx = 0;
        for i2 in 0..n[2] {
            for i1 in 0..n[1] {
                let yz = table.y[i1] * table.z[i2] * shift;
                for i0 in 0..n[0] {
                    let e = table.x[i0] * yz;
                    for a in 0..3 {
                        out.c[a].data_mut()[idx] = 2.0 * env[idx] * (amplitude[a] * e).re;
                    }
                    idx += 1;
                }
            }
        }
        Ok(out)
    }
}

/// Per-axis tables of `e^{i k_a x_a}` on the grid; their product is
/// `e^{ik·x}` with the phase reduced exactly in integer arithmetic.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub z: Vec<Complex64>,
}

impl PhaseTable {
    pub fn new(grid: &GridSpec, k: [i64; 3]) -> Self {
        let axis = |a: usize| -> Vec<Complex64> {
            let n = grid.n[a] as i64;
            (0..n)
                .map(|i| {
                    let m = (k[a] * i).rem_euclid(n);
                    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / n as f64)
                })
                .collect()
        };
        PhaseTable {
            x: axis(0),
            y: axis(1),
            z: axis(2),
        }
    }

    #[inline]
    pub fn at(&self, i: [usize; 3]) -> Complex64 {
        self.x[i[0]] * self.y[i[1]] * self.z[i[2]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus(n: usize) -> Torus {
        Torus::new(GridSpec::cubic(n).unwrap())
    }

    #[test]
    fn round_trip() {
        let t = torus(16);
        let f = ScalarField::from_fn(t.grid(), |x| (x[0] + 2.0 * x[1]).sin() + (3.0 * x[2]).cos() * x[0].cos());
        let g = t.inverse(&t.forward(&f));
        for (a, b) in f.data().iter().zip(g.data()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn coefficient_lookup() {
        let t = torus(16);
        let f = ScalarField::from_fn(t.grid(), |x| (2.0 * x[0] - x[2]).cos());
        let s = t.forward(&f);
        let c = s.coeff([2, 0, -1]).unwrap();
        assert!((c.re - 0.5).abs() < 1e-14 && c.im.abs() < 1e-14);
        let c = s.coeff([-2, 0, 1]).unwrap();
        assert!((c.re - 0.5).abs() < 1e-14);
        assert!(s.coeff([8, 0, 0]).is_none());
    }

    #[test]
    fn anisotropic_round_trip() {
        let grid = GridSpec::new([32, 16, 8], Padding::ThreeHalves).unwrap();
        let t = Torus::new(grid);
        let f = ScalarField::from_fn(grid, |x| (5.0 * x[0]).sin() * (3.0 * x[1]).cos() + x[2].sin());
        let g = t.inverse(&t.forward(&f));
        for (a, b) in f.data().iter().zip(g.data()) {
            assert!((a - b).abs() < 1e-13);
        }
        let p = t.product(&f, &f).unwrap();
        let expect = ScalarField::from_fn(grid, |x| {
            let v = (5.0 * x[0]).sin() * (3.0 * x[1]).cos() + x[2].sin();
            v * v
        });
        for (a, b) in p.data().iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
