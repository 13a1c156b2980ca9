mod common;

use common::kepler_bisect;
use feptrkn::problems::{bett, dahlquist, newt, solve_kepler, Problem, ProblemSpec};
use feptrkn::Error;
use proptest::prelude::*;

/// Checks `y' ~ (y(t+d) - y(t-d)) / 2d` and `f(t, y) ~ second difference` on a few points.
fn check_exact(p: &Problem, times: &[f64], tol1: f64, tol2: f64) {
    let n = p.dim();
    for &t in times {
        let (y, yp) = p.exact(t).unwrap();
        let d1 = 1e-6;
        let (ya, _) = p.exact(t + d1).unwrap();
        let (yb, _) = p.exact(t - d1).unwrap();
        let d2 = 1e-4;
        let (yc, _) = p.exact(t + d2).unwrap();
        let (yd, _) = p.exact(t - d2).unwrap();
        let mut f = vec![0.0; n];
        p.rhs(t, &y, &mut f).unwrap();
        for i in 0..n {
            let fd1 = (ya[i] - yb[i]) / (2.0 * d1);
            let fd2 = (yc[i] - 2.0 * y[i] + yd[i]) / (d2 * d2);
            let scale = y[i].abs().max(1.0);
            assert!((fd1 - yp[i]).abs() < tol1 * scale, "{} t={t}: y' {} vs {fd1}", p.name, yp[i]);
            assert!((fd2 - f[i]).abs() < tol2 * scale, "{} t={t}: y'' {} vs {fd2}", p.name, f[i]);
        }
    }
}

#[test]
fn exact_solutions_satisfy_their_equations() {
    let times = [0.3, 2.0, 7.7, 19.0];
    check_exact(&bett(), &times, 1e-7, 1e-5);
    check_exact(&newt(0.01).unwrap(), &times, 1e-7, 1e-5);
    check_exact(&newt(0.5).unwrap(), &times, 1e-7, 1e-5);
    check_exact(&dahlquist(-4.0, 1.0, -0.3, 10.0).unwrap(), &times, 1e-7, 1e-5);
    check_exact(&dahlquist(0.25, 1.0, 0.3, 10.0).unwrap(), &times, 1e-7, 1e-5);
}

#[test]
fn exact_solution_matches_initial_data() {
    for p in [bett(), newt(0.2).unwrap()] {
        let (y, yp) = p.exact(p.t0).unwrap();
        for i in 0..p.dim() {
            assert!((y[i] - p.y0[i]).abs() < 1e-15 && (yp[i] - p.yp0[i]).abs() < 1e-15);
        }
    }
}

#[test]
fn kepler_against_bisection() {
    for &(t, e) in &[(20.0, 0.01), (0.0, 0.9), (3.14159, 0.5), (1e-3, 0.3)] {
        let u = solve_kepler(t, e).unwrap();
        assert!((u - kepler_bisect(t, e)).abs() <= 1e-14 * t.max(1.0));
    }
    assert!(matches!(solve_kepler(1.0, 1.0), Err(Error::Config(_))));
    assert!(matches!(solve_kepler(f64::NAN, 0.1), Err(Error::Config(_))));
}

#[test]
fn spec_strings() {
    assert_eq!("bett".parse::<ProblemSpec>().unwrap(), ProblemSpec::Bett);
    assert_eq!("newt:e=0.01".parse::<ProblemSpec>().unwrap(), ProblemSpec::Newt { e: 0.01 });
    assert_eq!("newt".parse::<ProblemSpec>().unwrap(), ProblemSpec::Newt { e: 0.01 });
    assert!("newt:e=x".parse::<ProblemSpec>().is_err());
    assert!("bett:e=1".parse::<ProblemSpec>().is_err());
    assert!("kepler".parse::<ProblemSpec>().is_err());
    let p = "dahlquist:lambda=-1".parse::<ProblemSpec>().unwrap().build().unwrap();
    assert_eq!(p.dim(), 1);
}

proptest! {
    #[test]
    fn kepler_residual(t in 0.0f64..20.0, e in 0.0f64..0.95) {
        let u = solve_kepler(t, e).unwrap();
        prop_assert!((u - e * u.sin() - t).abs() <= 1e-14 * t.max(1.0));
        prop_assert!((u - kepler_bisect(t, e)).abs() <= 1e-14 * t.max(1.0));
    }
}
