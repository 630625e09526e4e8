use bci_core::antidiv::MultiplierTable;
use bci_core::diagnostics::{energy_gap, holder_estimate, derivative_seminorm, in_band, loglog_slope, system_residual};
use bci_core::geometry::DirectionFamily;
use bci_core::partition::PartitionSpec;
use bci_core::scheme::presets::{self, VelocityProfile};
use bci_core::scheme::*;
use bci_core::torus::{GridSpec, ScalarField, TimeGrid, Torus, VectorField};
use proptest::prelude::*;

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rest_state(grid: GridSpec, time: TimeGrid) -> ReynoldsState {
    ReynoldsState::zeros(grid, time, 1.0)
}

#[test]
fn rho_examples() {
    let grid = GridSpec::cubic(8).unwrap();
    let t = Torus::new(grid);
    let time = TimeGrid::new(3).unwrap();
    let v = VectorField::zeros(grid);
    let one = EnergyProfile::new(EnergyExpr::Constant(1.0), time).unwrap();
    let two = EnergyProfile::new(EnergyExpr::Constant(2.0), time).unwrap();
    assert!((rho_bar(&t, &one, &v, 0, 1.0).unwrap() - 0.5).abs() < 1e-15);
    assert!((rho_bar(&t, &two, &v, 1, 1.0).unwrap() - 1.0).abs() < 1e-15);
    // ∫|v|^2 = |T^3| with v = √2 sin x1 e1.
    let full = VectorField::from_fn(grid, |x| [2f64.sqrt() * x[0].sin(), 0.0, 0.0]);
    assert!((energy_spectral(&t, &full) - torus_volume()).abs() < 1e-10);
    assert!(rho_bar(&t, &one, &full, 0, 1.0).is_err());
    assert!(EnergyProfile::new(EnergyExpr::Affine { a: 1.0, b: -2.0 }, time).is_err());
}

#[test]
fn energy_gap_examples() {
    let grid = GridSpec::cubic(8).unwrap();
    let t = Torus::new(grid);
    let time = TimeGrid::new(3).unwrap();
    let e = EnergyProfile::new(EnergyExpr::Constant(1.0), time).unwrap();
    let rep = energy_gap(&t, &rest_state(grid, time), &e);
    for s in &rep.samples {
        assert!((s.gap - torus_volume() / 2.0).abs() < 1e-12);
    }
    assert!(in_band(1.0, 1.0, 1.0, 0.75, 1.25));
    assert!(!in_band(0.7, 1.0, 1.0, 0.75, 1.25));
    assert!(!in_band(1.3, 1.0, 1.0, 0.75, 1.25));
    assert!(in_band(0.5, 1.0, 1.0, 0.375, 0.625));
    assert!(!in_band(0.5, 1.0, 0.5, 0.375, 0.625));
}

#[test]
fn nu_assigns_distinct_frequencies_locally() {
    for base in [[0i64, 0, 0], [1, -2, 3], [-5, 4, 7]] {
        let mut seen = std::collections::BTreeSet::new();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    seen.insert(nu([base[0] + a, base[1] + b, base[2] + c]));
                }
            }
        }
        assert_eq!(seen.len(), 8);
    }
    assert_eq!(nu([0, 0, 0]), 1);
    assert_eq!(nu([1, 1, 1]), 128);
    assert_eq!(nu([-1, 0, 0]), 2);
}

#[test]
fn step_params_constraints() {
    let fam = DirectionFamily::build();
    assert!(StepParams::new(1, 2, 16, fam.lambda_bar).is_ok());
    assert!(StepParams::new(1, 3, 16, fam.lambda_bar).is_err());
    assert!(StepParams::new(0, 2, 16, fam.lambda_bar).is_err());
    assert!(StepParams::new(7, 2, 16, fam.lambda_bar).is_err());
    let sp = StepParams::new(2, 2, 8, fam.lambda_bar).unwrap();
    assert_eq!(sp.carrier(&fam, [1, 0, 0]), [0, 16, 16]);
}

/// Zero tuple at rest with `e ≡ |T^3|`, `δ = 1`.
struct Rest {
    torus: Torus,
    table: MultiplierTable,
    family: DirectionFamily,
    partition: PartitionSpec,
    state: ReynoldsState,
}

impl Rest {
    fn new(n: usize, f0: Option<[f64; 3]>) -> Self {
        let grid = GridSpec::cubic(n).unwrap();
        let torus = Torus::new(grid);
        let table = MultiplierTable::new(&torus);
        let time = TimeGrid::new(3).unwrap();
        let mut state = rest_state(grid, time);
        if let Some(f) = f0 {
            state.f = vec![VectorField::constant(grid, f); time.len()];
        }
        Rest {
            torus,
            table,
            family: DirectionFamily::build(),
            partition: PartitionSpec::default(),
            state,
        }
    }

    fn base(&self) -> StageBase {
        let e = EnergyProfile::new(EnergyExpr::Constant(1.0), self.state.time).unwrap();
        StageBase::new(&self.torus, &self.family, &self.state, Variant::Energy, Some(&e), RhoNormalization::Literal)
            .unwrap()
    }
}

#[test]
fn amplitude_from_rest() {
    let r = Rest::new(16, None);
    let base = r.base();
    let ctx = StepContext { torus: &r.torus, table: &r.table, family: &r.family, partition: &r.partition, base: &base };
    let step = StepParams::new(1, 2, 4, r.family.lambda_bar).unwrap();
    let b = amplitude_b(&ctx, &step, &r.state.v[0], 0, [0, 0, 0]).unwrap();
    let expect = 2f64.sqrt() / 4.0;
    assert!(b.data().iter().all(|x| (x - expect).abs() < 1e-15));
    assert!(amplitude_b(&ctx, &step, &r.state.v[0], 0, [1, 0, 0]).unwrap().is_zero());
    let beta = amplitude_beta(&ctx, &step, &r.state.v[0], 0, [0, 0, 0]).unwrap();
    assert!(beta.is_zero());
}

#[test]
fn temperature_amplitude_from_constant_flux() {
    let fam = DirectionFamily::build();
    let r = Rest::new(16, Some(fam.a_vectors[0]));
    let base = r.base();
    let ctx = StepContext { torus: &r.torus, table: &r.table, family: &r.family, partition: &r.partition, base: &base };
    let step = StepParams::new(1, 2, 4, r.family.lambda_bar).unwrap();
    let beta = amplitude_beta(&ctx, &step, &r.state.v[0], 0, [0, 0, 0]).unwrap();
    let expect = -(2f64.sqrt());
    assert!(beta.data().iter().all(|x| (x - expect).abs() < 1e-14), "{}", beta.data()[0]);
    // Steps 4..6 carry no temperature wave.
    let step4 = StepParams::new(4, 2, 4, r.family.lambda_bar).unwrap();
    assert!(amplitude_beta(&ctx, &step4, &r.state.v[0], 0, [0, 0, 0]).unwrap().is_zero());
}

#[test]
fn temperature_wave_example() {
    let grid = GridSpec::cubic(16).unwrap();
    let t = Torus::new(grid);
    let fam = DirectionFamily::build();
    let step = StepParams::new(1, 2, 4, fam.lambda_bar).unwrap();
    let one = ScalarField::constant(grid, 1.0);
    let chi = temperature_wave(&t, &fam, &step, &one, [0, 0, 0], 0.4).unwrap();
    let expect = ScalarField::from_fn(grid, |x| 2.0 * (4.0 * (x[0] + x[1])).cos());
    assert!(max_diff(&chi, &expect) < 1e-13);
    assert!(chi.mean().abs() < 1e-14);
    assert!(temperature_wave(&t, &fam, &step, &ScalarField::zeros(grid), [0, 0, 0], 0.0).unwrap().is_zero());
}

#[test]
fn constant_amplitude_gives_beltrami_wave() {
    let grid = GridSpec::cubic(32).unwrap();
    let t = Torus::new(grid);
    let fam = DirectionFamily::build();
    let step = StepParams::new(3, 2, 4, fam.lambda_bar).unwrap();
    let b = ScalarField::constant(grid, 0.7);
    let l = [1, 0, 0];
    let (wo, woc) = velocity_wave(&t, &fam, &step, &b, l, 0.25).unwrap();
    assert!(woc.sup_norm() < 1e-14);
    let curl = t.curl(&wo).unwrap();
    let eig = step.lambda as f64 * nu(l) as f64 * fam.lambda_bar;
    for a in 0..3 {
        let mut scaled = wo.c[a].clone();
        scaled.scale(eig);
        assert!(max_diff(&curl.c[a], &scaled) < 1e-10 * eig);
    }
    assert!(t.divergence(&wo).unwrap().sup_norm() < 1e-11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn curl_form_matches_sum_form(
        n in 1usize..=6,
        l in prop::array::uniform2(-1i64..=1).prop_map(|l| [l[0], l[1], 0]),
        t in 0.0f64..1.0,
        c in prop::array::uniform3(-0.3f64..0.3),
    ) {
        let grid = GridSpec::cubic(64).unwrap();
        let torus = Torus::new(grid);
        let fam = DirectionFamily::build();
        let step = StepParams::new(n, 2, 2, fam.lambda_bar).unwrap();
        let b = ScalarField::from_fn(grid, |x| 1.0 + c[0] * x[0].sin() + c[1] * (x[1] - x[2]).cos() + c[2] * x[2].sin());
        let (wo, woc) = velocity_wave(&torus, &fam, &step, &b, l, t).unwrap();
        let curl = velocity_wave_curl(&torus, &fam, &step, &b, l, t).unwrap();
        for a in 0..3 {
            let mut sum = wo.c[a].clone();
            sum.add_assign(&woc.c[a]);
            prop_assert!(max_diff(&sum, &curl.c[a]) < 1e-11);
        }
        for m in curl.mean() {
            prop_assert!(m.abs() < 1e-13);
        }
    }
}

#[test]
fn thm11_preset_balances_buoyancy() {
    let grid = GridSpec::cubic(16).unwrap();
    let t = Torus::new(grid);
    let time = TimeGrid::new(3).unwrap();
    let st = presets::thm11(&t, time, &X3Series::cos(1, 1.0), 1.0).unwrap();
    assert!(max_diff(&st.p[1], &ScalarField::from_fn(grid, |x| x[2].sin())) < 1e-14);
    assert!(st.r.iter().all(|r| r.is_zero()) && st.f.iter().all(|f| f.is_zero()));
    let res = system_residual(&t, &st).unwrap();
    assert!(res.worst_relative() < 1e-12, "{res:?}");
    let mut shifted = X3Series::cos(1, 1.0);
    shifted.constant = 0.5;
    assert!(presets::thm11(&t, time, &shifted, 1.0).is_err());
}

#[test]
fn thm12_preset_matches_heat_source() {
    let grid = GridSpec::cubic(16).unwrap();
    let t = Torus::new(grid);
    let time = TimeGrid::new(5).unwrap();
    let heat = HeatSource { a: Polynomial { coeffs: vec![1.0] }, b: X3Series::cos(1, 1.0) };
    let st = presets::thm12(&t, time, &heat, 1.0).unwrap();
    for j in 0..time.len() {
        let tj = time.t(j);
        let expect = ScalarField::from_fn(grid, |x| tj * x[2].cos());
        assert!(max_diff(&st.theta[j], &expect) < 1e-14);
    }
    let res = system_residual(&t, &st).unwrap();
    assert!(res.worst_relative() < 1e-10, "{res:?}");
}

#[test]
fn thm13_preset_is_exact() {
    let grid = GridSpec::cubic(64).unwrap();
    let t = Torus::new(grid);
    let time = TimeGrid::new(5).unwrap();
    let st = presets::thm13(&t, time, 4).unwrap();
    let res = system_residual(&t, &st).unwrap();
    assert!(res.worst_relative() < 1e-10, "{res:?}");
    // At t = 1 only the velocity survives.
    let last = time.len() - 1;
    assert!(st.theta[last].sup_norm() < 1e-14 && st.p[last].sup_norm() < 1e-14);
    assert!((st.v[last].sup_norm() - 4.0).abs() < 1e-2);
    // N^2 = 16 needs more than 32 points per axis.
    let small = Torus::new(GridSpec::cubic(32).unwrap());
    assert!(presets::thm13(&small, time, 4).is_err());
}

#[test]
fn zero_state_has_zero_residual() {
    let grid = GridSpec::cubic(8).unwrap();
    let t = Torus::new(grid);
    let res = system_residual(&t, &rest_state(grid, TimeGrid::new(3).unwrap())).unwrap();
    assert_eq!(res.momentum_sup, 0.0);
    assert_eq!(res.temperature_sup, 0.0);
}

#[test]
fn relaxed_preset_is_a_solution() {
    let grid = GridSpec::cubic(16).unwrap();
    let t = Torus::new(grid);
    let table = MultiplierTable::new(&t);
    let spec = presets::RelaxedSpec {
        velocity: VelocityProfile::Random { amp: 0.2, seed: 11, kmax: 2 },
        theta0: X3Series::cos(1, 1.0),
        p_amp: 0.1,
        f_sol_amp: 0.05,
        delta: 0.5,
    };
    let st = presets::relaxed(&t, &table, TimeGrid::new(5).unwrap(), &spec).unwrap();
    let res = system_residual(&t, &st).unwrap();
    assert!(res.worst_relative() < 1e-12, "{res:?}");
    assert!(res.div_v < 1e-12);
    for r in &st.r {
        assert!(r.max_trace() < 1e-13);
    }
    let again = presets::relaxed(&t, &table, TimeGrid::new(5).unwrap(), &spec).unwrap();
    assert_eq!(st, again);
}

#[test]
fn holder_norm_examples() {
    let grid = GridSpec::cubic(32).unwrap();
    let t = Torus::new(grid);
    let s = ScalarField::from_fn(grid, |x| x[0].sin());
    let n0 = derivative_seminorm(&t, &s, 0);
    assert!((0.99..=1.0).contains(&n0));
    // [c e^{iλk·x}]_1 with c = 1 + 0.3 cos x3, real part.
    let lams = [4.0, 8.0, 12.0];
    let semis: Vec<f64> = lams
        .iter()
        .map(|&l| {
            let f = ScalarField::from_fn(grid, |x| (1.0 + 0.3 * x[2].cos()) * (l * (x[0] + x[1])).cos());
            derivative_seminorm(&t, &f, 1)
        })
        .collect();
    let slope = loglog_slope(&lams, &semis).unwrap();
    assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
    let h = holder_estimate(&t, &s, 0, 0.5, 7).unwrap();
    // A lower bound: the Lipschitz constant is 1, so the 1/2-Hölder
    // quotient is at most the diameter^(1/2).
    assert!(h > 0.5 && h <= (3f64.sqrt() * std::f64::consts::PI).sqrt());
    assert!(holder_estimate(&t, &s, 3, 0.5, 7).is_err());
}
