//! 3D real transforms: a real-to-complex pass along x followed by complex
//! passes along y and z. Lines known to be zero are skipped, which is where
//! the padded product transforms save most of their work.

use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

const BLOCK: usize = 16;

/// Which part of a half-spectrum is (or should be) nonzero.
#[derive(Debug, Clone)]
pub struct ActiveBand {
    /// Half-spectrum x indices carrying data.
    pub kx: Range<usize>,
    /// y indices carrying data, as up to two storage ranges.
    pub ky: Vec<Range<usize>>,
}

impl ActiveBand {
    pub fn full(dims: [usize; 3]) -> Self {
        ActiveBand {
            kx: 0..dims[0],
            ky: vec![0..dims[1]],
        }
    }
}

pub struct Fft3 {
    n: [usize; 3],
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

impl Fft3 {
    pub fn new(n: [usize; 3]) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut cplx = FftPlanner::<f64>::new();
        Fft3 {
            n,
            r2c: real.plan_fft_forward(n[0]),
            c2r: real.plan_fft_inverse(n[0]),
            fwd: [cplx.plan_fft_forward(n[1]), cplx.plan_fft_forward(n[2])],
            inv: [cplx.plan_fft_inverse(n[1]), cplx.plan_fft_inverse(n[2])],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.n
    }

    pub fn spectrum_dims(&self) -> [usize; 3] {
        [self.n[0] / 2 + 1, self.n[1], self.n[2]]
    }

    pub fn spectrum_len(&self) -> usize {
        let d = self.spectrum_dims();
        d[0] * d[1] * d[2]
    }

    /// Unnormalized forward transform. Only the columns in `band` receive
    /// their y and z passes; everything else is left partially transformed
    /// and must not be read.
    pub fn forward(&self, input: &[f64], out: &mut [Complex64], band: &ActiveBand) {
        let [n1, n2, n3] = self.n;
        let h = n1 / 2 + 1;
        debug_assert_eq!(input.len(), n1 * n2 * n3);
        debug_assert_eq!(out.len(), h * n2 * n3);

        let mut line = vec![0.0; n1];
        let mut scratch = self.r2c.make_scratch_vec();
        for (src, dst) in input.chunks_exact(n1).zip(out.chunks_exact_mut(h)) {
            line.copy_from_slice(src);
            self.r2c
                .process_with_scratch(&mut line, dst, &mut scratch)
                .expect("buffer sizes match the plan");
        }
        self.pass_y(out, &band.kx, &self.fwd[0]);
        self.pass_z(out, band, &self.fwd[1]);
    }

    /// Unnormalized inverse transform of a spectrum whose support lies in
    /// `band`; `spec` is used as workspace.
    pub fn inverse(&self, spec: &mut [Complex64], out: &mut [f64], band: &ActiveBand) {
        let [n1, n2, n3] = self.n;
        let h = n1 / 2 + 1;
        debug_assert_eq!(spec.len(), h * n2 * n3);
        debug_assert_eq!(out.len(), n1 * n2 * n3);

        self.pass_z(spec, band, &self.inv[1]);
        self.pass_y(spec, &band.kx, &self.inv[0]);

        let mut line = vec![Complex64::new(0.0, 0.0); h];
        let mut scratch = self.c2r.make_scratch_vec();
        for (src, dst) in spec.chunks_exact(h).zip(out.chunks_exact_mut(n1)) {
            line.copy_from_slice(src);
            line[0].im = 0.0;
            line[h - 1].im = 0.0;
            self.c2r
                .process_with_scratch(&mut line, dst, &mut scratch)
                .expect("buffer sizes match the plan");
        }
    }

    fn pass_y(&self, data: &mut [Complex64], kx: &Range<usize>, fft: &Arc<dyn Fft<f64>>) {
        let [n1, n2, n3] = self.n;
        let h = n1 / 2 + 1;
        let mut buf = vec![Complex64::new(0.0, 0.0); BLOCK * n2];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for z in 0..n3 {
            let plane = &mut data[h * n2 * z..h * n2 * (z + 1)];
            let mut x0 = kx.start;
            while x0 < kx.end {
                let b = BLOCK.min(kx.end - x0);
                for y in 0..n2 {
                    let row = &plane[x0 + h * y..x0 + h * y + b];
                    for (j, v) in row.iter().enumerate() {
                        buf[j * n2 + y] = *v;
                    }
                }
                fft.process_with_scratch(&mut buf[..b * n2], &mut scratch);
                for y in 0..n2 {
                    let row = &mut plane[x0 + h * y..x0 + h * y + b];
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = buf[j * n2 + y];
                    }
                }
                x0 += b;
            }
        }
    }

    fn pass_z(&self, data: &mut [Complex64], band: &ActiveBand, fft: &Arc<dyn Fft<f64>>) {
        let [n1, n2, n3] = self.n;
        let h = n1 / 2 + 1;
        let stride = h * n2;
        let mut buf = vec![Complex64::new(0.0, 0.0); BLOCK * n3];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for range in &band.ky {
            for y in range.clone() {
                let mut x0 = band.kx.start;
                while x0 < band.kx.end {
                    let b = BLOCK.min(band.kx.end - x0);
                    for z in 0..n3 {
                        let base = x0 + h * y + stride * z;
                        for j in 0..b {
                            buf[j * n3 + z] = data[base + j];
                        }
                    }
                    fft.process_with_scratch(&mut buf[..b * n3], &mut scratch);
                    for z in 0..n3 {
                        let base = x0 + h * y + stride * z;
                        for j in 0..b {
                            data[base + j] = buf[j * n3 + z];
                        }
                    }
                    x0 += b;
                }
            }
        }
    }
}
