use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::geometry::{Sym3, SYM_INDEX};

/// Blockwise pairwise summation; deterministic and `O(log n)` error growth.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    const BLOCK: usize = 128;
    if x.len() <= BLOCK {
        let mut s = 0.0;
        for v in x {
            s += v;
        }
        return s;
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Real samples of a scalar function on the grid, x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        ScalarField {
            grid,
            data: vec![c; grid.len()],
        }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a {} grid",
                data.len(),
                grid.describe()
            )));
        }
        Ok(ScalarField { grid, data })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        ScalarField { grid, data }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid.n != other.grid.n {
            return Err(Error::GridMismatch(format!(
                "{} vs {}",
                self.grid.describe(),
                other.grid.describe()
            )));
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &ScalarField) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &ScalarField) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &ScalarField) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        for a in &mut self.data {
            *a += c;
        }
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// Grid maximum of `|f|`; a lower bound for the continuum supremum.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Average over `T^3`. Exact for band-limited data.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.data) / self.data.len() as f64
    }

    /// `∫_{T^3} f^2 dx` by grid quadrature.
    pub fn integral_sq(&self) -> f64 {
        let sq: Vec<f64> = self.data.iter().map(|x| x * x).collect();
        pairwise_sum(&sq) / sq.len() as f64 * self.grid.volume()
    }
}

/// Three scalar components.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub c: [ScalarField; 3],
}

impl VectorField {
    pub fn zeros(grid: GridSpec) -> Self {
        VectorField {
            c: std::array::from_fn(|_| ScalarField::zeros(grid)),
        }
    }

    pub fn from_components(c: [ScalarField; 3]) -> Self {
        VectorField { c }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..grid.len() {
            let v = f(grid.point(i));
            for a in 0..3 {
                out.c[a].data[i] = v[a];
            }
        }
        out
    }

    pub fn constant(grid: GridSpec, v: [f64; 3]) -> Self {
        VectorField {
            c: std::array::from_fn(|a| ScalarField::constant(grid, v[a])),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.c[0].grid
    }

    pub fn add_assign(&mut self, other: &VectorField) {
        for a in 0..3 {
            self.c[a].add_assign(&other.c[a]);
        }
    }

    pub fn sub_assign(&mut self, other: &VectorField) {
        for a in 0..3 {
            self.c[a].sub_assign(&other.c[a]);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in 0..3 {
            self.c[a].scale(s);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(ScalarField::is_zero)
    }

    /// Grid maximum of the Euclidean length.
    pub fn sup_norm(&self) -> f64 {
        let n = self.grid().len();
        let mut m = 0.0_f64;
        for i in 0..n {
            let s = self.c[0].data[i].powi(2) + self.c[1].data[i].powi(2) + self.c[2].data[i].powi(2);
            m = m.max(s);
        }
        m.sqrt()
    }

    pub fn mean(&self) -> [f64; 3] {
        [self.c[0].mean(), self.c[1].mean(), self.c[2].mean()]
    }

    pub fn at(&self, i: usize) -> [f64; 3] {
        [self.c[0].data[i], self.c[1].data[i], self.c[2].data[i]]
    }

    /// `∫ |v|^2 dx` by grid quadrature.
    pub fn integral_sq(&self) -> f64 {
        self.c.iter().map(ScalarField::integral_sq).sum()
    }
}

/// The six independent entries `[xx, xy, xz, yy, yz, zz]` of a symmetric
/// matrix field.
#[derive(Debug, Clone, PartialEq)]
pub struct SymField {
    pub c: [ScalarField; 6],
    /// Set by producers that guarantee a vanishing trace.
    pub traceless: bool,
}

impl SymField {
    pub fn zeros(grid: GridSpec) -> Self {
        SymField {
            c: std::array::from_fn(|_| ScalarField::zeros(grid)),
            traceless: true,
        }
    }

    pub fn from_components(c: [ScalarField; 6]) -> Self {
        SymField { c, traceless: false }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> Sym3) -> Self {
        let mut out = Self::zeros(grid);
        out.traceless = false;
        for i in 0..grid.len() {
            let m = f(grid.point(i));
            for s in 0..6 {
                out.c[s].data[i] = m[s];
            }
        }
        out
    }

    pub fn grid(&self) -> GridSpec {
        self.c[0].grid
    }

    /// Component `(i, j)` of the full matrix.
    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.c[crate::geometry::sym_slot(i, j)]
    }

    pub fn at(&self, idx: usize) -> Sym3 {
        std::array::from_fn(|s| self.c[s].data[idx])
    }

    pub fn add_assign(&mut self, other: &SymField) {
        for s in 0..6 {
            self.c[s].add_assign(&other.c[s]);
        }
        self.traceless &= other.traceless;
    }

    pub fn sub_assign(&mut self, other: &SymField) {
        for s in 0..6 {
            self.c[s].sub_assign(&other.c[s]);
        }
        self.traceless &= other.traceless;
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.c {
            c.scale(s);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(ScalarField::is_zero)
    }

    pub fn trace(&self) -> ScalarField {
        let mut t = self.c[0].clone();
        t.add_assign(&self.c[3]);
        t.add_assign(&self.c[5]);
        t
    }

    /// Removes `tr/3 · Id` in place and returns the removed trace.
    pub fn remove_trace(&mut self) -> ScalarField {
        let tr = self.trace();
        for slot in [0, 3, 5] {
            self.c[slot].axpy(-1.0 / 3.0, &tr);
        }
        self.traceless = true;
        tr
    }

    /// Adds `s(x) · Id`.
    pub fn add_scalar_identity(&mut self, s: &ScalarField, factor: f64) {
        for slot in [0, 3, 5] {
            self.c[slot].axpy(factor, s);
        }
    }

    /// Grid maximum of `max_ij |R_ij|`.
    pub fn sup_norm(&self) -> f64 {
        self.c.iter().map(ScalarField::sup_norm).fold(0.0, f64::max)
    }

    /// Grid maximum of the pointwise trace, for the traceless contract.
    pub fn max_trace(&self) -> f64 {
        self.trace().sup_norm()
    }

    /// Checks the traceless flag against the data at tolerance `tol · scale`.
    pub fn check_traceless(&self, tol: f64) -> Result<()> {
        if !self.traceless {
            return Ok(());
        }
        let scale = self.sup_norm().max(f64::MIN_POSITIVE);
        let tr = self.max_trace();
        if tr > tol * scale {
            return Err(Error::validation(
                "R",
                format!("pointwise trace {tr:.3e} exceeds {tol:.1e} × scale {scale:.3e}"),
            ));
        }
        Ok(())
    }

    /// Rank-one symmetric product `(a⊗b + b⊗a)/2` built pointwise.
    pub fn symmetric_outer(a: &VectorField, b: &VectorField) -> SymField {
        let grid = a.grid();
        let mut out = SymField::zeros(grid);
        out.traceless = false;
        for (slot, &(i, j)) in SYM_INDEX.iter().enumerate() {
            let d = out.c[slot].data_mut();
            let (ai, aj, bi, bj) = (a.c[i].data(), a.c[j].data(), b.c[i].data(), b.c[j].data());
            for x in 0..d.len() {
                d[x] = 0.5 * (ai[x] * bj[x] + aj[x] * bi[x]);
            }
        }
        out
    }
}
