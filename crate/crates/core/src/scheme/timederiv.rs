//! The one discrete time derivative shared by the constructor and the
//! residual checker: centered differences inside, second-order one-sided
//! stencils at the endpoints.

use crate::torus::{ScalarField, TimeGrid, VectorField};

/// Stencil `(sample, weight)` of `∂_t` at sample `j`.
pub fn stencil(time: TimeGrid, j: usize) -> [(usize, f64); 3] {
    let n = time.len();
    let c = 0.5 / time.dt();
    if j == 0 {
        [(0, -3.0 * c), (1, 4.0 * c), (2, -c)]
    } else if j == n - 1 {
        [(n - 1, 3.0 * c), (n - 2, -4.0 * c), (n - 3, c)]
    } else {
        [(j - 1, -c), (j, 0.0), (j + 1, c)]
    }
}

/// `∂_t` of a scalar series at sample `j`.
pub fn dt_scalar(time: TimeGrid, j: usize, get: impl Fn(usize) -> ScalarField) -> ScalarField {
    let st = stencil(time, j);
    let mut out = ScalarField::zeros(get(st[0].0).grid());
    for (i, w) in st {
        if w != 0.0 {
            out.axpy(w, &get(i));
        }
    }
    out
}

/// `∂_t` of a series held in a slice.
pub fn dt_of(time: TimeGrid, j: usize, series: &[ScalarField]) -> ScalarField {
    let st = stencil(time, j);
    let mut out = ScalarField::zeros(series[0].grid());
    for (i, w) in st {
        if w != 0.0 {
            out.axpy(w, &series[i]);
        }
    }
    out
}

pub fn dt_vector(time: TimeGrid, j: usize, series: &[VectorField]) -> VectorField {
    let st = stencil(time, j);
    let mut out = VectorField::zeros(series[0].grid());
    for (i, w) in st {
        if w != 0.0 {
            for a in 0..3 {
                out.c[a].axpy(w, &series[i].c[a]);
            }
        }
    }
    out
}
