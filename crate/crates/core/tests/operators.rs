use std::f64::consts::PI;

use bci_core::antidiv::{antidiv_matrix, antidiv_vector, stationary_phase_integral, MultiplierTable};
use bci_core::torus::{GridSpec, Padding, ScalarField, TimeGrid, Torus, VectorField};
use num_complex::Complex64;
use proptest::prelude::*;

/// A real trigonometric polynomial `Σ a cos(k·x) + b sin(k·x)`.
#[derive(Debug, Clone)]
struct Trig {
    terms: Vec<([i64; 3], f64, f64)>,
}

impl Trig {
    fn eval(&self, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(k, a, b)| {
                let ph = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
                a * ph.cos() + b * ph.sin()
            })
            .sum()
    }

    /// Exact `∂_axis`.
    fn derivative(&self, axis: usize) -> Trig {
        Trig {
            terms: self
                .terms
                .iter()
                .map(|(k, a, b)| {
                    let m = k[axis] as f64;
                    (*k, b * m, -a * m)
                })
                .collect(),
        }
    }

    fn mean(&self) -> f64 {
        self.terms.iter().filter(|(k, _, _)| *k == [0, 0, 0]).map(|t| t.1).sum()
    }

    fn field(&self, grid: GridSpec) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.eval(x))
    }
}

fn trig(kmax: i64, n_terms: usize) -> impl Strategy<Value = Trig> {
    prop::collection::vec(
        (prop::array::uniform3(-kmax..=kmax), -1.0f64..1.0, -1.0f64..1.0),
        1..=n_terms,
    )
    .prop_map(|terms| Trig { terms })
}

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn torus16() -> Torus {
    Torus::new(GridSpec::cubic(16).unwrap())
}

#[test]
fn derivative_examples() {
    let t = torus16();
    let g = t.grid();
    let d = t.derivative(&ScalarField::from_fn(g, |x| x[0].sin()), 0).unwrap();
    assert!(max_diff(&d, &ScalarField::from_fn(g, |x| x[0].cos())) < 1e-12);
    for axis in 0..3 {
        assert!(t.derivative(&ScalarField::constant(g, 3.5), axis).unwrap().sup_norm() < 1e-14);
    }
}

#[test]
fn product_examples() {
    let t = torus16();
    let g = t.grid();
    let s = ScalarField::from_fn(g, |x| x[0].sin());
    let p = t.product(&s, &s).unwrap();
    assert!(max_diff(&p, &ScalarField::from_fn(g, |x| (1.0 - (2.0 * x[0]).cos()) / 2.0)) < 1e-12);
    assert_eq!(t.overflow_count(), 0);

    // Two modes whose sum leaves the padded band.
    let a = ScalarField::from_fn(g, |x| (7.0 * x[0]).cos());
    t.reset_counters();
    let _ = t.product(&a, &a).unwrap();
    assert!(t.overflow_count() > 0);
}

#[test]
fn modulated_wave_example() {
    let t = torus16();
    let g = t.grid();
    let one = ScalarField::constant(g, 1.0);
    let half = Complex64::new(0.5, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let w = t.modulated_wave(&one, [half, z, z], [0, 0, 1], 0.0).unwrap();
    assert!(max_diff(&w.c[0], &ScalarField::from_fn(g, |x| x[2].cos())) < 1e-14);
    assert!(w.c[1].sup_norm() == 0.0 && w.c[2].sup_norm() == 0.0);
    let zero = t.modulated_wave(&ScalarField::zeros(g), [half, half, half], [1, 2, 0], 0.3).unwrap();
    assert!(zero.is_zero());
    assert!(t.modulated_wave(&one, [half, z, z], [0, 0, 8], 0.0).is_err());
}

#[test]
fn norm_examples() {
    let g = GridSpec::cubic(16).unwrap();
    assert!(ScalarField::from_fn(g, |x| x[0].cos()).mean().abs() < 1e-15);
    assert!((ScalarField::constant(g, 2.5).mean() - 2.5).abs() < 1e-15);
    let sup = ScalarField::from_fn(g, |x| x[0].sin()).sup_norm();
    // Grid points 2πi/16 include π/2 exactly.
    assert!((sup - (2.0 * PI * 4.0 / 16.0).sin()).abs() < 1e-15 && sup >= 0.995);
}

#[test]
fn antidiv_examples() {
    let t = torus16();
    let g = t.grid();
    let table = MultiplierTable::new(&t);
    assert!(antidiv_matrix(&t, &table, &VectorField::zeros(g)).unwrap().is_zero());
    let s = antidiv_matrix(&t, &table, &VectorField::constant(g, [1.0, -2.0, 0.5])).unwrap();
    assert!(s.sup_norm() < 1e-15);
    let a = antidiv_vector(&t, &table, &ScalarField::from_fn(g, |x| x[0].cos())).unwrap();
    assert!(max_diff(&a.c[0], &ScalarField::from_fn(g, |x| x[0].sin())) < 1e-13);
    assert!(a.c[1].sup_norm() < 1e-14 && a.c[2].sup_norm() < 1e-14);
    assert!(antidiv_vector(&t, &table, &ScalarField::constant(g, 4.0)).unwrap().sup_norm() < 1e-14);
}

#[test]
fn stationary_phase_examples() {
    let t = torus16();
    let g = t.grid();
    let one = ScalarField::constant(g, 1.0);
    assert_eq!(stationary_phase_integral(&t, &one, [1, 1, 0], 3).unwrap().norm(), 0.0);
    // c = e^{-iλk·x} taken through its real and imaginary parts.
    let (k, lam) = ([1, 1, 0], 4u64);
    let re = ScalarField::from_fn(g, |x| (4.0 * (x[0] + x[1])).cos());
    let im = ScalarField::from_fn(g, |x| -(4.0 * (x[0] + x[1])).sin());
    let total = stationary_phase_integral(&t, &re, k, lam).unwrap()
        + Complex64::i() * stationary_phase_integral(&t, &im, k, lam).unwrap();
    assert!((total - Complex64::new(g.volume(), 0.0)).norm() < 1e-10);
    assert!(stationary_phase_integral(&t, &one, k, 0).is_err());
    assert!(stationary_phase_integral(&t, &one, k, 8).is_err());
}

#[test]
fn time_grid_endpoints() {
    let tg = TimeGrid::new(9).unwrap();
    let ts = tg.times();
    assert_eq!(ts[0], 0.0);
    assert_eq!(*ts.last().unwrap(), 1.0);
    for w in ts.windows(2) {
        assert!((w[1] - w[0] - tg.dt()).abs() < 1e-15);
    }
    assert!(TimeGrid::new(1).is_err());
    assert!(TimeGrid::new(4).is_err());
}

#[test]
fn grid_limits() {
    assert!(GridSpec::cubic(4).is_err());
    assert!(GridSpec::new([16, 16, 8], Padding::ThreeHalves).is_ok());
    assert_eq!(GridSpec::parse_dims("32"), Some([32, 32, 32]));
    assert_eq!(GridSpec::parse_dims("64x32x8"), Some([64, 32, 8]));
    assert_eq!(GridSpec::parse_dims("x"), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectral_derivative_is_exact(f in trig(6, 5), axis in 0usize..3) {
        let t = torus16();
        let g = t.grid();
        let d = t.derivative(&f.field(g), axis).unwrap();
        prop_assert!(max_diff(&d, &f.derivative(axis).field(g)) < 1e-11);
    }

    #[test]
    fn div_curl_vanishes(a in trig(5, 4), b in trig(5, 4), c in trig(5, 4)) {
        let t = torus16();
        let g = t.grid();
        let v = VectorField::from_components([a.field(g), b.field(g), c.field(g)]);
        let d = t.divergence(&t.curl(&v).unwrap()).unwrap();
        prop_assert!(d.sup_norm() < 1e-11);
    }

    #[test]
    fn product_is_pointwise_for_resolved_modes(a in trig(3, 4), b in trig(3, 4)) {
        let t = torus16();
        let g = t.grid();
        t.reset_counters();
        let p = t.product(&a.field(g), &b.field(g)).unwrap();
        let direct = ScalarField::from_fn(g, |x| a.eval(x) * b.eval(x));
        prop_assert!(max_diff(&p, &direct) < 1e-12);
        prop_assert_eq!(t.overflow_count(), 0);
    }

    #[test]
    fn product_integral_matches_parseval(a in trig(6, 5), b in trig(6, 5)) {
        let t = torus16();
        let g = t.grid();
        let (fa, fb) = (a.field(g), b.field(g));
        let p = t.product(&fa, &fb).unwrap();
        let (sa, sb) = (t.forward(&fa), t.forward(&fb));
        let mut parseval = 0.0;
        t.for_each_mode(|i, k| {
            if let Some(k) = k {
                // Half-spectrum storage: non-self-conjugate x-modes count twice.
                let w = if k[0] == 0 || 2 * k[0].unsigned_abs() as usize == g.n[0] { 1.0 } else { 2.0 };
                parseval += w * (sa.data()[i] * sb.data()[i].conj()).re;
            }
        });
        let integral = p.mean() * g.volume();
        prop_assert!((integral - parseval * g.volume()).abs() < 1e-10 * (1.0 + integral.abs()));
    }

    #[test]
    fn matrix_antidivergence_contract(a in trig(6, 5), b in trig(6, 5), c in trig(6, 5)) {
        let t = torus16();
        let g = t.grid();
        let table = MultiplierTable::new(&t);
        let v = VectorField::from_components([a.field(g), b.field(g), c.field(g)]);
        let s = antidiv_matrix(&t, &table, &v).unwrap();
        prop_assert!(s.max_trace() < 1e-12 * (1.0 + v.sup_norm()));
        let d = t.div_sym(&s).unwrap();
        let means = [a.mean(), b.mean(), c.mean()];
        for i in 0..3 {
            let mut expect = v.c[i].clone();
            expect.add_constant(-means[i]);
            prop_assert!(max_diff(&d.c[i], &expect) < 1e-10 * (1.0 + v.sup_norm()));
        }
    }

    #[test]
    fn vector_antidivergence_contract(a in trig(6, 6)) {
        let t = torus16();
        let g = t.grid();
        let table = MultiplierTable::new(&t);
        let b = a.field(g);
        let v = antidiv_vector(&t, &table, &b).unwrap();
        let d = t.divergence(&v).unwrap();
        let mut expect = b.clone();
        expect.add_constant(-a.mean());
        prop_assert!(max_diff(&d, &expect) < 1e-11 * (1.0 + b.sup_norm()));
        // The output is a gradient, so its curl vanishes.
        prop_assert!(t.curl(&v).unwrap().sup_norm() < 1e-11 * (1.0 + b.sup_norm()));
    }

    #[test]
    fn modulated_wave_has_zero_mean(env in trig(2, 3), kx in 4i64..7, ky in -6i64..7, ph in 0.0f64..6.3) {
        let t = torus16();
        let g = t.grid();
        let amp = [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.5), Complex64::new(0.0, -0.4)];
        let w = t.modulated_wave(&env.field(g), amp, [kx, ky, 0], ph).unwrap();
        for m in w.mean() {
            prop_assert!(m.abs() < 1e-12);
        }
    }
}
