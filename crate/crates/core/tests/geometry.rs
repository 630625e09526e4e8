use bci_core::geometry::{sym_outer, DirectionFamily, Sym3, IDENTITY, SYM_INDEX};
use num_complex::Complex64;
use proptest::prelude::*;

/// Dense Gauss-Jordan with partial pivoting; independent of nalgebra.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        assert!(d.abs() > 1e-12, "singular system");
        for row in 0..n {
            if row != col {
                let f = a[row][col] / d;
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

/// `Id - k̂⊗k̂` from the integer direction alone.
fn projector(k: [i64; 3]) -> Sym3 {
    let n2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
    std::array::from_fn(|s| {
        let (i, j) = SYM_INDEX[s];
        let id = if i == j { 1.0 } else { 0.0 };
        id - (k[i] * k[j]) as f64 / n2
    })
}

fn oracle_coefficients(fam: &DirectionFamily, r: &Sym3) -> Vec<f64> {
    let mats: Vec<Sym3> = fam.directions.iter().map(|&k| projector(k)).collect();
    let a = (0..6).map(|row| (0..6).map(|col| mats[col][row]).collect()).collect();
    solve(a, r.to_vec())
}

fn reassemble(fam: &DirectionFamily, gamma: &[f64; 6]) -> Sym3 {
    let mut out = [0.0; 6];
    for (g, k) in gamma.iter().zip(fam.directions) {
        let m = projector(k);
        for s in 0..6 {
            out[s] += g * g * m[s];
        }
    }
    out
}

#[test]
fn family_shape() {
    let fam = DirectionFamily::build();
    for (k, a) in fam.directions.iter().zip(fam.a_vectors) {
        assert_eq!(k[0] * k[0] + k[1] * k[1] + k[2] * k[2], 2);
        let dot = k[0] as f64 * a[0] + k[1] as f64 * a[1] + k[2] as f64 * a[2];
        assert_eq!(dot, 0.0);
        assert!((a.iter().map(|x| x * x).sum::<f64>() - 0.5).abs() < 1e-15);
    }
    assert_eq!(fam.lambda_bar, 2f64.sqrt());
    // A_1, A_2, A_3 independent: the determinant by cofactor expansion.
    let [a, b, c] = [fam.a_vectors[0], fam.a_vectors[1], fam.a_vectors[2]];
    let det = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0]);
    assert!(det.abs() > 0.1, "det = {det}");
    // ±k pairs never repeat.
    for i in 0..6 {
        for j in 0..i {
            let (p, q) = (fam.directions[i], fam.directions[j]);
            assert_ne!(p, q);
            assert_ne!(p, [-q[0], -q[1], -q[2]]);
        }
    }
}

#[test]
fn solver_on_identity() {
    let fam = DirectionFamily::build();
    let oracle = oracle_coefficients(&fam, &IDENTITY);
    for (c, o) in fam.coefficients(&IDENTITY).iter().zip(&oracle) {
        assert!((c - 0.25).abs() < 1e-14 && (o - 0.25).abs() < 1e-14);
    }
    let g = fam.decompose_matrix(&IDENTITY).unwrap();
    assert!(g.iter().all(|x| (x - 0.5).abs() < 1e-12));
}

#[test]
fn projector_sum_is_four_identity() {
    let fam = DirectionFamily::build();
    let mut s = [0.0; 6];
    for m in fam.matrices {
        for i in 0..6 {
            s[i] += m[i];
        }
    }
    for i in 0..6 {
        assert!((s[i] - 4.0 * IDENTITY[i]).abs() < 1e-14);
    }
}

#[test]
fn outside_ball_is_rejected() {
    let fam = DirectionFamily::build();
    let r0 = fam.r0;
    let r = [1.0 + 2.0 * r0, 0.0, 0.0, 1.0 - r0, 0.0, 1.0 - r0];
    assert!(fam.decompose_matrix(&r).is_err());
    assert!(fam.gamma_for([2, 0, 0], &IDENTITY).is_err());
}

#[test]
fn vector_examples() {
    let fam = DirectionFamily::build();
    assert_eq!(fam.decompose_vector(&[0.0; 3]), [0.0; 6]);
    let g = fam.decompose_vector(&fam.a_vectors[0]);
    let expect = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    for (x, e) in g.iter().zip(expect) {
        assert!((x - e).abs() < 1e-15);
    }
}

fn cross(a: [Complex64; 3], b: [Complex64; 3]) -> [Complex64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[test]
fn beltrami_identities() {
    let fam = DirectionFamily::build();
    for mode in fam.modes() {
        let kn = mode.k_norm();
        let kh: [Complex64; 3] = mode.k.map(|x| Complex64::new(x as f64 / kn, 0.0));
        let kb: Complex64 = (0..3).map(|a| mode.b[a] * mode.k[a] as f64).sum();
        assert!(kb.norm() < 1e-15);
        let c = cross(kh, mode.b);
        for a in 0..3 {
            assert!((c[a] + Complex64::i() * mode.b[a]).norm() < 1e-14);
        }
        let proj = projector(mode.k);
        for (s, &(i, j)) in SYM_INDEX.iter().enumerate() {
            let v = 2.0 * (mode.b[i] * mode.b[j].conj()).re;
            assert!((v - proj[s]).abs() < 1e-14);
        }
        // B built from A by the cross product, as an independent route.
        let a: [Complex64; 3] = mode.a.map(|x| Complex64::new(x, 0.0));
        let ka = cross(kh, a);
        for i in 0..3 {
            assert!((mode.b[i] - (a[i] + Complex64::i() * ka[i])).norm() < 1e-15);
        }
    }
}

fn sym_strategy(scale: f64) -> impl Strategy<Value = Sym3> {
    prop::array::uniform6(-1.0f64..1.0).prop_map(move |d| {
        let mut r = IDENTITY;
        for i in 0..6 {
            r[i] += scale * d[i];
        }
        r
    })
}

proptest! {
    #[test]
    fn ball_matrices_reconstruct(r in sym_strategy(DirectionFamily::build().r0)) {
        let fam = DirectionFamily::build();
        let gamma = fam.decompose_matrix(&r).unwrap();
        prop_assert!(gamma.iter().all(|g| *g > 0.0));
        let back = reassemble(&fam, &gamma);
        for s in 0..6 {
            prop_assert!((back[s] - r[s]).abs() < 1e-12);
        }
        let oracle = oracle_coefficients(&fam, &r);
        for (g, o) in gamma.iter().zip(&oracle) {
            prop_assert!((g * g - o).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficients_are_linear(a in sym_strategy(5.0), b in sym_strategy(5.0), s in -3.0f64..3.0) {
        let fam = DirectionFamily::build();
        let mix: Sym3 = std::array::from_fn(|i| a[i] + s * b[i]);
        let (ca, cb, cm) = (fam.coefficients(&a), fam.coefficients(&b), fam.coefficients(&mix));
        for i in 0..6 {
            prop_assert!((cm[i] - ca[i] - s * cb[i]).abs() < 1e-11);
            prop_assert_eq!(fam.coefficient(i, &mix), cm[i]);
        }
    }

    #[test]
    fn vectors_reconstruct(f in prop::array::uniform3(-5.0f64..5.0)) {
        let fam = DirectionFamily::build();
        let g = fam.decompose_vector(&f);
        prop_assert!(g[3..].iter().all(|x| *x == 0.0));
        // Cramer's rule oracle.
        let [a, b, c] = [fam.a_vectors[0], fam.a_vectors[1], fam.a_vectors[2]];
        let det3 = |x: [f64; 3], y: [f64; 3], z: [f64; 3]| {
            x[0] * (y[1] * z[2] - y[2] * z[1]) - y[0] * (x[1] * z[2] - x[2] * z[1]) + z[0] * (x[1] * y[2] - x[2] * y[1])
        };
        let d = det3(a, b, c);
        let oracle = [det3(f, b, c) / d, det3(a, f, c) / d, det3(a, b, f) / d];
        for i in 0..3 {
            prop_assert!((g[i] - oracle[i]).abs() < 1e-12);
        }
        for k in 0..3 {
            let s: f64 = (0..3).map(|i| g[i] * fam.a_vectors[i][k]).sum();
            prop_assert!((s - f[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn outer_products_are_symmetric(a in prop::array::uniform3(-2.0f64..2.0), b in prop::array::uniform3(-2.0f64..2.0)) {
        let ab = sym_outer(&a, &b);
        let ba = sym_outer(&b, &a);
        prop_assert_eq!(ab, ba);
    }
}

#[test]
fn certified_radius_matches_vertex_search() {
    let fam = DirectionFamily::build();
    // The coefficients are affine in R, so their minimum over the max-norm
    // cube is reached at one of its 64 vertices.
    let radius = 2.0 * fam.r0;
    let mut worst = f64::INFINITY;
    for signs in 0u32..64 {
        let r: Sym3 = std::array::from_fn(|j| IDENTITY[j] + if signs >> j & 1 == 1 { radius } else { -radius });
        let c = oracle_coefficients(&fam, &r);
        worst = c.iter().copied().fold(worst, f64::min);
    }
    assert!((worst - 0.125).abs() < 1e-12, "min coefficient {worst}");
    // Frozen value of the search above.
    assert!((fam.r0 - 1.0 / 36.0).abs() < 1e-15, "r0 = {}", fam.r0);
}
