//! The geometric lemma: six lattice directions whose rank-two projectors
//! `Id - k̂⊗k̂` span the symmetric matrices, a vector frame `A_k`, and the
//! Beltrami amplitudes `B_k = A_k + i k̂×A_k`.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Symmetric 3×3 matrix stored as `[xx, xy, xz, yy, yz, zz]`.
pub type Sym3 = [f64; 6];

/// Index pairs for the six stored components.
pub const SYM_INDEX: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

pub const IDENTITY: Sym3 = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0];

/// Position of entry `(i, j)` in a [`Sym3`].
pub fn sym_slot(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        (2, 2) => 5,
        _ => unreachable!("index out of range"),
    }
}

pub fn sym_trace(m: &Sym3) -> f64 {
    m[0] + m[3] + m[5]
}

/// `max_ij |m_ij|`, the matrix norm used throughout.
pub fn sym_max_norm(m: &Sym3) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn sym_outer(a: &[f64; 3], b: &[f64; 3]) -> Sym3 {
    let mut out = [0.0; 6];
    for (slot, &(i, j)) in SYM_INDEX.iter().enumerate() {
        out[slot] = 0.5 * (a[i] * b[j] + a[j] * b[i]);
    }
    out
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// A plane-wave amplitude on direction `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeltramiMode {
    pub k: [i64; 3],
    pub a: [f64; 3],
    pub b: [Complex64; 3],
}

impl BeltramiMode {
    fn new(k: [i64; 3], a: [f64; 3]) -> Self {
        let norm = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
        let khat = [k[0] as f64 / norm, k[1] as f64 / norm, k[2] as f64 / norm];
        let ka = cross(&khat, &a);
        let b = [
            Complex64::new(a[0], ka[0]),
            Complex64::new(a[1], ka[1]),
            Complex64::new(a[2], ka[2]),
        ];
        BeltramiMode { k, a, b }
    }

    /// The mode on `-k`: same `A`, conjugate `B`.
    pub fn conjugate(&self) -> Self {
        BeltramiMode {
            k: [-self.k[0], -self.k[1], -self.k[2]],
            a: self.a,
            b: [self.b[0].conj(), self.b[1].conj(), self.b[2].conj()],
        }
    }

    pub fn k_norm(&self) -> f64 {
        let k = self.k;
        ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt()
    }

    pub fn k_hat(&self) -> [f64; 3] {
        let n = self.k_norm();
        [self.k[0] as f64 / n, self.k[1] as f64 / n, self.k[2] as f64 / n]
    }

    /// `Id - k̂⊗k̂`.
    pub fn projector(&self) -> Sym3 {
        let kh = self.k_hat();
        let mut m = IDENTITY;
        let outer = sym_outer(&kh, &kh);
        for (x, o) in m.iter_mut().zip(outer) {
            *x -= o;
        }
        m
    }
}

/// The fixed direction family with its coefficient maps.
#[derive(Debug, Clone)]
pub struct DirectionFamily {
    pub directions: [[i64; 3]; 6],
    pub lambda_bar: f64,
    pub matrices: [Sym3; 6],
    /// Maps the six stored entries of `R` to the coefficients `c_i(R)`.
    pub matrix_solver: Matrix6<f64>,
    pub r0: f64,
    pub a_vectors: [[f64; 3]; 6],
    /// Inverse of the matrix with columns `A_1, A_2, A_3`.
    pub g_solver: Matrix3<f64>,
    modes: [BeltramiMode; 6],
}

impl DirectionFamily {
    pub fn build() -> Self {
        let directions: [[i64; 3]; 6] = [
            [1, 1, 0],
            [0, 1, 1],
            [1, 0, 1],
            [1, -1, 0],
            [0, 1, -1],
            [1, 0, -1],
        ];
        let h = 0.5;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a_vectors: [[f64; 3]; 6] = [
            [h, -h, 0.0],
            [0.0, h, -h],
            [0.0, s, 0.0],
            [h, h, 0.0],
            [0.0, h, h],
            [h, 0.0, h],
        ];
        let modes: [BeltramiMode; 6] =
            std::array::from_fn(|i| BeltramiMode::new(directions[i], a_vectors[i]));
        let matrices: [Sym3; 6] = std::array::from_fn(|i| modes[i].projector());

        let mut basis = Matrix6::<f64>::zeros();
        for (col, m) in matrices.iter().enumerate() {
            for row in 0..6 {
                basis[(row, col)] = m[row];
            }
        }
        let matrix_solver = basis
            .try_inverse()
            .expect("projectors of the fixed direction set are independent");

        let frame = Matrix3::from_columns(&[
            Vector3::from(a_vectors[0]),
            Vector3::from(a_vectors[1]),
            Vector3::from(a_vectors[2]),
        ]);
        let g_solver = frame
            .try_inverse()
            .expect("A_1, A_2, A_3 are independent");

        let r0 = 0.5 * positivity_radius(&matrix_solver, 0.125);

        DirectionFamily {
            directions,
            lambda_bar: std::f64::consts::SQRT_2,
            matrices,
            matrix_solver,
            r0,
            a_vectors,
            g_solver,
            modes,
        }
    }

    /// Index of the family member equal to `k` or `-k`.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        self.directions
            .iter()
            .position(|d| *d == k || *d == [-k[0], -k[1], -k[2]])
    }

    /// The affine coefficients `c_i(R)` with `Σ c_i M_i = R`, unchecked.
    pub fn coefficients(&self, r: &Sym3) -> [f64; 6] {
        let c = self.matrix_solver * Vector6::from(*r);
        std::array::from_fn(|i| c[i])
    }

    /// A single coefficient `c_i(R)`, unchecked.
    #[inline]
    pub fn coefficient(&self, i: usize, r: &Sym3) -> f64 {
        let mut acc = 0.0;
        for (j, x) in r.iter().enumerate() {
            acc += self.matrix_solver[(i, j)] * x;
        }
        acc
    }

    /// Whether `R` lies in the certified ball `‖R - Id‖ ≤ r0`.
    #[inline]
    pub fn in_ball(&self, r: &Sym3) -> bool {
        let tol = self.r0 * (1.0 + 1e-12);
        r.iter()
            .zip(IDENTITY)
            .all(|(x, id)| (x - id).abs() <= tol)
    }

    /// `γ_i(R) = sqrt(c_i(R))` for all six directions.
    pub fn decompose_matrix(&self, r: &Sym3) -> Result<[f64; 6]> {
        if !self.in_ball(r) {
            let mut d = *r;
            for (x, id) in d.iter_mut().zip(IDENTITY) {
                *x -= id;
            }
            return Err(Error::Domain(format!(
                "‖R - Id‖ = {:.6e} exceeds r0 = {:.6e}",
                sym_max_norm(&d),
                self.r0
            )));
        }
        let c = self.coefficients(r);
        let mut gamma = [0.0; 6];
        for (i, ci) in c.iter().enumerate() {
            if *ci <= 0.0 {
                return Err(Error::Domain(format!("c_{} = {ci:.6e} is not positive", i + 1)));
            }
            gamma[i] = ci.sqrt();
        }
        Ok(gamma)
    }

    /// `γ_k(R)` looked up by direction, with `γ_{-k} = γ_k`.
    pub fn gamma_for(&self, k: [i64; 3], r: &Sym3) -> Result<f64> {
        let i = self
            .index_of(k)
            .ok_or_else(|| Error::validation("k", format!("{k:?} is not a family direction")))?;
        Ok(self.decompose_matrix(r)?[i])
    }

    /// `g_i(f)`: the first three solve `f = Σ g_i A_i`, the rest vanish.
    pub fn decompose_vector(&self, f: &[f64; 3]) -> [f64; 6] {
        let g = self.g_solver * Vector3::from(*f);
        [g[0], g[1], g[2], 0.0, 0.0, 0.0]
    }

    /// Mode for a 1-based direction index.
    pub fn beltrami_mode(&self, i: usize) -> Result<BeltramiMode> {
        if !(1..=6).contains(&i) {
            return Err(Error::validation("i", format!("direction index {i} not in 1..=6")));
        }
        Ok(self.modes[i - 1])
    }

    pub fn modes(&self) -> &[BeltramiMode; 6] {
        &self.modes
    }
}

impl Default for DirectionFamily {
    fn default() -> Self {
        Self::build()
    }
}

/// Largest `r` such that every `c_i(Id + E)` stays at or above `floor` for
/// all symmetric `E` with `max |E_ij| ≤ r`.
///
/// `c(Id + E) = c(Id) + solver·E` is affine, so its minimum over the sup-norm
/// sphere is attained at one of the 64 vertices of the cube of entries.
fn positivity_radius(solver: &Matrix6<f64>, floor: f64) -> f64 {
    let base = solver * Vector6::from(IDENTITY);
    let mut radius = f64::INFINITY;
    for signs in 0u32..64 {
        let e = Vector6::from_fn(|j, _| if signs >> j & 1 == 1 { 1.0 } else { -1.0 });
        let slope = solver * e;
        for i in 0..6 {
            if slope[i] < 0.0 {
                radius = radius.min((base[i] - floor) / -slope[i]);
            }
        }
    }
    radius
}
