mod common;

use common::monomial_tableau;
use feptrkn::basis::{BasisSet, BasisSpec, CustomFn};
use feptrkn::coeffs::{
    solve_dense, solve_embedded, solve_tableau, solve_variable_a, tableau_residuals, CoefficientSource,
};
use feptrkn::methods::{method, named_nodes, METHOD_NAMES};
use feptrkn::Error;
use proptest::prelude::*;

/// `(u, u', u'')` of `cos(k w t)` / `sin(k w t)` evaluated directly.
fn trig(k: f64, w: f64, cosine: bool, t: f64) -> (f64, f64, f64) {
    let a = k * w;
    if cosine {
        ((a * t).cos(), -a * (a * t).sin(), -a * a * (a * t).cos())
    } else {
        ((a * t).sin(), a * (a * t).cos(), -a * a * (a * t).sin())
    }
}

#[test]
fn monomial_tableaus_match_exact_arithmetic() {
    for name in METHOD_NAMES.iter().filter(|n| !n.starts_with('f')) {
        let m = method(name, 1.0).unwrap();
        let ex = monomial_tableau(m.c());
        let mut src = CoefficientSource::new(&m.basis, m.c(), &[]).unwrap();
        for (t, h) in [(0.0, 1.0), (3.7, 0.25), (-2.0, 0.01)] {
            let tab = src.tableau(t, h).unwrap();
            for i in 0..m.stages() {
                assert!((tab.b[i] - ex.b[i]).abs() < 1e-11, "{name} b");
                assert!((tab.d[i] - ex.d[i]).abs() < 1e-11, "{name} d");
                for j in 0..m.stages() {
                    assert!((tab.a[(i, j)] - ex.a[i][j]).abs() < 1e-10, "{name} A");
                }
            }
        }
    }
}

#[test]
fn trig_tableau_integrates_its_basis() {
    // feptrkn84: {t^2, cos wt, sin wt, cos 2wt, sin 2wt}, checked on the trig members
    let w = 1.3;
    let m = method("feptrkn84", w).unwrap();
    let c = m.c();
    for (t, h) in [(0.4, 0.7), (5.0, 0.35), (11.0, 1.1)] {
        let tab = solve_tableau(&m.basis, c, t, h).unwrap();
        for (k, cosine) in [(1.0, true), (1.0, false), (2.0, true), (2.0, false)] {
            let u = |x| trig(k, w, cosine, x);
            let (u0, du0, _) = u(t);
            let (u1, du1, _) = u(t + h);
            let lhs_b: f64 = (0..c.len()).map(|j| tab.b[j] * u(t + c[j] * h).2).sum::<f64>() * h * h;
            let lhs_d: f64 = (0..c.len()).map(|j| tab.d[j] * u(t + c[j] * h).2).sum::<f64>() * h;
            assert!((lhs_b - (u1 - u0 - h * du0)).abs() < 1e-12, "b, k = {k}");
            assert!((lhs_d - (du1 - du0)).abs() < 1e-12, "d, k = {k}");
            for i in 0..c.len() {
                let lhs: f64 = (0..c.len()).map(|j| tab.a[(i, j)] * u(t + c[j] * h).2).sum::<f64>() * h * h;
                let want = u(t + h + c[i] * h).0 - u1 - c[i] * h * du1;
                assert!((lhs - want).abs() < 1e-12, "A row {i}, k = {k}");
            }
        }
    }
}

#[test]
fn monomial_weights_sum() {
    for name in ["eptrkn52", "eptrkn73", "eptrkn84", "eptrkn95"] {
        let m = method(name, 1.0).unwrap();
        let tab = solve_tableau(&m.basis, m.c(), 0.0, 0.5).unwrap();
        assert!((tab.b.iter().sum::<f64>() - 0.5).abs() < 1e-12);
        assert!((tab.d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn dense_weights_at_step_end_are_the_step_weights() {
    let m = method("feptrkn73", 1.0).unwrap();
    let tab = solve_tableau(&m.basis, m.c(), 0.0, 0.4).unwrap();
    let dense = solve_dense(&m.basis, m.c(), 0.0, 0.4, 1.0).unwrap();
    for j in 0..m.stages() {
        assert!((dense.b_xi[j] - tab.b[j]).abs() < 1e-12);
        assert!((dense.d_xi[j] - tab.d[j]).abs() < 1e-12);
    }
    assert!(matches!(solve_dense(&m.basis, m.c(), 0.0, 0.4, 1.5), Err(Error::Config(_))));
}

#[test]
fn variable_a_reduces_to_constant_step() {
    let m = method("feptrkn52", 2.0).unwrap();
    let tab = solve_tableau(&m.basis, m.c(), 0.0, 0.3).unwrap();
    let a = solve_variable_a(&m.basis, m.c(), 0.0, 0.3, 0.3).unwrap();
    assert!(a.sub(&tab.a).max_abs() < 1e-13);
}

#[test]
fn embedded_weights_integrate_the_basis_prefix() {
    let m = method("eptrkn84", 1.0).unwrap();
    let emb = solve_embedded(&m.basis, m.c(), &m.embedded, 0.0, 1.0).unwrap();
    // monomial prefix {t^2, t^3, t^4, t^5}: sum b~ c~^k = 1/((k+1)(k+2))
    for k in 0..emb.c_tilde.len() as i32 {
        let sb: f64 = emb.b_tilde.iter().zip(&emb.c_tilde).map(|(b, c)| b * c.powi(k)).sum();
        let sd: f64 = emb.d_tilde.iter().zip(&emb.c_tilde).map(|(d, c)| d * c.powi(k)).sum();
        assert!((sb - 1.0 / ((k + 1) * (k + 2)) as f64).abs() < 1e-12);
        assert!((sd - 1.0 / (k + 1) as f64).abs() < 1e-12);
    }
    assert!(solve_embedded(&m.basis, m.c(), &[0, 0], 0.0, 1.0).is_err());
}

#[test]
fn coincident_nodes_are_a_collocation_failure() {
    let basis = BasisSet::monomial(3).unwrap();
    assert!(matches!(
        solve_tableau(&basis, &[0.2, 0.2, 1.0], 0.0, 0.5),
        Err(Error::Collocation { .. })
    ));
}

#[test]
fn custom_basis_matches_builtin() {
    let w = 0.8;
    let funcs = vec![
        CustomFn::new("t^2", |t| t * t, |t| 2.0 * t, |_| 2.0),
        CustomFn::new("cos", move |t| (w * t).cos(), move |t| -w * (w * t).sin(), move |t| -w * w * (w * t).cos()),
        CustomFn::new("sin", move |t| (w * t).sin(), move |t| w * (w * t).cos(), move |t| -w * w * (w * t).sin()),
    ];
    let custom = BasisSet::custom(funcs, false).unwrap();
    let builtin: BasisSet = "trigmix:s=3,omega=0.8".parse::<BasisSpec>().unwrap().build().unwrap();
    let c = named_nodes("eptrkn52").unwrap().c;
    let a = solve_tableau(&custom, &c, 1.5, 0.6).unwrap();
    let b = solve_tableau(&builtin, &c, 1.5, 0.6).unwrap();
    assert!(a.a.sub(&b.a).max_abs() < 1e-10);
    for j in 0..3 {
        assert!((a.b[j] - b.b[j]).abs() < 1e-10 && (a.d[j] - b.d[j]).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn separable_tableaus_do_not_depend_on_t(t1 in -50.0f64..50.0, t2 in -50.0f64..50.0, h in 0.3f64..1.5) {
        let m = method("feptrkn95", 1.0).unwrap();
        let a = solve_tableau(&m.basis, m.c(), t1, h).unwrap();
        let b = solve_tableau(&m.basis, m.c(), t2, h).unwrap();
        let scale = a.a.max_abs().max(1.0);
        prop_assert!(a.a.sub(&b.a).max_abs() <= 1e-8 * scale);
    }

    #[test]
    fn source_tableaus_have_small_residuals(idx in 0usize..8, t in 0.0f64..40.0, lh in -12.0f64..0.5) {
        let m = method(METHOD_NAMES[idx], 1.0).unwrap();
        let mut src = CoefficientSource::new(&m.basis, m.c(), &m.embedded).unwrap();
        let h = 2f64.powf(lh);
        let tab = src.tableau(t, h).unwrap();
        prop_assert!(tableau_residuals(&m.basis, m.c(), &tab).max() <= 1e-10);
        prop_assert!(src.embedded(t, h).is_ok());
    }
}
