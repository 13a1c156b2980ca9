//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qf(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite")
}

pub fn f(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

/// Gauss-Jordan elimination over the rationals; `None` if singular.
pub fn rational_solve(mut m: Vec<Vec<BigRational>>, mut r: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = r.len();
    for col in 0..n {
        let piv = (col..n).find(|&i| !m[i][col].is_zero())?;
        m.swap(col, piv);
        r.swap(col, piv);
        let inv = BigRational::one() / m[col][col].clone();
        for j in col..n {
            m[col][j] = &m[col][j] * &inv;
        }
        r[col] = &r[col] * &inv;
        for i in 0..n {
            if i != col && !m[i][col].is_zero() {
                let fac = m[i][col].clone();
                for j in col..n {
                    let v = &fac * &m[col][j];
                    m[i][j] = &m[i][j] - v;
                }
                let v = &fac * &r[col];
                r[i] = &r[i] - v;
            }
        }
    }
    Some(r)
}

/// Linear functionals on the node polynomial, stated directly in integral form.
#[derive(Clone, Copy, Debug)]
pub enum Functional {
    /// int_0^1 x^k p
    Moment(i64),
    /// int_0^1 int_0^{1+x} int_0^t p(xi) dxi dt dx
    Triple,
    /// int_0^2 p
    ZeroToTwo,
    /// p(0)
    AtZero,
    /// p(1)
    AtOne,
}

impl Functional {
    fn on_power(self, j: i64) -> BigRational {
        match self {
            Functional::Moment(k) => q(1, k + j + 1),
            // int_0^t xi^j = t^{j+1}/(j+1); int_0^{1+x} gives (1+x)^{j+2}/((j+1)(j+2));
            // int_0^1 of that is (2^{j+3} - 1)/((j+1)(j+2)(j+3))
            Functional::Triple => q((1i64 << (j + 3)) - 1, (j + 1) * (j + 2) * (j + 3)),
            Functional::ZeroToTwo => q(1i64 << (j + 1), j + 1),
            Functional::AtZero => {
                if j == 0 {
                    q(1, 1)
                } else {
                    q(0, 1)
                }
            }
            Functional::AtOne => q(1, 1),
        }
    }
}

/// Coefficients `a_0..a_{s-1}` (and the leading 1) of the monic degree-`s`
/// polynomial annihilated by the given functionals.
pub fn node_polynomial(s: usize, conds: &[Functional]) -> Vec<BigRational> {
    assert_eq!(conds.len(), s);
    let m: Vec<Vec<BigRational>> = conds
        .iter()
        .map(|c| (0..s as i64).map(|j| c.on_power(j)).collect())
        .collect();
    let r: Vec<BigRational> = conds.iter().map(|c| -c.on_power(s as i64)).collect();
    let mut a = rational_solve(m, r).expect("nonsingular node system");
    a.push(BigRational::one());
    a
}

fn eval_q(coeffs: &[BigRational], x: &BigRational) -> BigRational {
    coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
}

/// Real roots in `[lo, hi]` by sign scanning and exact-arithmetic bisection.
pub fn real_roots(coeffs: &[BigRational], lo: f64, hi: f64, grid: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let xs: Vec<BigRational> = (0..=grid)
        .map(|k| qf(lo) + (qf(hi) - qf(lo)) * q(k as i64, grid as i64))
        .collect();
    let vals: Vec<BigRational> = xs.iter().map(|x| eval_q(coeffs, x)).collect();
    for k in 0..grid {
        if vals[k].is_zero() {
            roots.push(f(&xs[k]));
            continue;
        }
        if vals[k + 1].is_zero() || vals[k].is_positive() == vals[k + 1].is_positive() {
            continue;
        }
        let (mut a, mut b) = (xs[k].clone(), xs[k + 1].clone());
        let sa = vals[k].is_positive();
        for _ in 0..70 {
            let mid = (&a + &b) / q(2, 1);
            let v = eval_q(coeffs, &mid);
            if v.is_zero() {
                a = mid.clone();
                b = mid;
                break;
            }
            if v.is_positive() == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
        roots.push(f(&((a + b) / q(2, 1))));
    }
    if vals[grid].is_zero() {
        roots.push(f(&xs[grid]));
    }
    roots
}

/// The monomial-basis tableau on nodes `c`, solved in exact arithmetic from the
/// exactness conditions for `y = t^{k+2}` at `t_n = 0, h = 1`.
pub struct ExactTableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub d: Vec<f64>,
}

pub fn monomial_tableau(c: &[f64]) -> ExactTableau {
    let s = c.len();
    let cq: Vec<BigRational> = c.iter().map(|&x| qf(x)).collect();
    let pow = |x: &BigRational, k: usize| -> BigRational {
        (0..k).fold(BigRational::one(), |acc, _| acc * x)
    };
    // rows indexed by k, columns by stage j: sum_j w_j c_j^k = rhs_k
    let vander: Vec<Vec<BigRational>> = (0..s).map(|k| cq.iter().map(|cj| pow(cj, k)).collect()).collect();
    let kk = |k: usize| (k as i64 + 1) * (k as i64 + 2);
    let b = rational_solve(vander.clone(), (0..s).map(|k| q(1, kk(k))).collect()).unwrap();
    let d = rational_solve(vander.clone(), (0..s).map(|k| q(1, k as i64 + 1)).collect()).unwrap();
    let a = cq
        .iter()
        .map(|ci| {
            let one_ci = BigRational::one() + ci;
            let rhs = (0..s)
                .map(|k| {
                    let k2 = BigRational::from_integer(BigInt::from(k as i64 + 2));
                    (pow(&one_ci, k + 2) - BigRational::one() - k2 * ci) / q(kk(k), 1)
                })
                .collect();
            rational_solve(vander.clone(), rhs).unwrap().iter().map(f).collect()
        })
        .collect();
    ExactTableau {
        a,
        b: b.iter().map(f).collect(),
        d: d.iter().map(f).collect(),
    }
}

/// Characteristic polynomial `det(x I - M)` (ascending coefficients, monic) by Faddeev-LeVerrier.
pub fn charpoly(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mul = |a: &Vec<Vec<f64>>, b: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
            .collect()
    };
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut mk = vec![vec![0.0; n]; n];
    for k in 1..=n {
        let mut am = mul(&mk, m);
        // M_k = M M_{k-1} + c_{n-k+1} I
        for i in 0..n {
            am[i][i] += coeffs[n - k + 1];
        }
        mk = am;
        let tr: f64 = (0..n).map(|i| (0..n).map(|j| m[i][j] * mk[j][i]).sum::<f64>()).sum();
        coeffs[n - k] = -tr / k as f64;
    }
    coeffs
}

/// All roots of a monic polynomial (ascending coefficients) by Weierstrass iteration.
pub fn weierstrass_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let eval = |z: Complex64| coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let bound = 1.0 + coeffs[..n].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * bound.min(2.0)).collect();
    for _ in 0..2000 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    z
}

/// Solution of `E - e sin E = t` by bisection on `[t - e, t + e]`.
pub fn kepler_bisect(t: f64, e: f64) -> f64 {
    let (mut lo, mut hi) = (t - e - 1e-12, t + e + 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - e * mid.sin() - t > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Reference NCD values for BETT, exact start, h = 2^-1 .. 2^-9.
pub const BETT_NCD: [(&str, [f64; 9]); 4] = [
    ("eptrkn52", [-2.6, -4.1, -5.7, -7.2, -8.7, -10.2, -11.7, -13.2, -14.5]),
    ("eptrkn73", [-4.0, -6.3, -8.7, -11.1, -13.5, -15.5, -14.7, -14.3, -14.6]),
    ("eptrkn84", [-6.0, -8.2, -10.8, -13.5, -15.1, -15.7, -14.4, -14.3, -14.5]),
    ("eptrkn95", [-5.9, -8.7, -11.7, -14.6, -14.3, -14.5, -14.7, -14.4, -14.9]),
];

/// Reference NCD values for NEWT (e = 0.01), exact start, h = 2^-1 .. 2^-9.
pub const NEWT_NCD: [(&str, [f64; 9]); 4] = [
    ("eptrkn52", [-0.9, -2.4, -3.9, -5.4, -6.9, -8.4, -9.9, -11.4, -13.1]),
    ("eptrkn73", [-2.2, -4.5, -6.9, -9.2, -11.5, -12.6, -12.8, -12.9, -12.4]),
    ("eptrkn84", [-2.6, -6.2, -8.9, -11.5, -13.6, -13.7, -13.1, -13.3, -12.5]),
    ("eptrkn95", [-2.9, -6.0, -9.2, -12.1, -13.7, -13.3, -12.8, -12.6, -12.5]),
];

/// Entries above this NCD are treated as free of rounding effects.
pub const ROUNDOFF_FLOOR: f64 = -13.0;

/// Whether entry `k` of a reference column is free of rounding effects: above
/// the floor, and the error still drops by at least a factor 10 at the next
/// halving (for the last entry, at the halving that produced it).
pub fn pre_roundoff(want: &[f64; 9], k: usize) -> bool {
    let falling = match want.get(k + 1) {
        Some(next) => want[k] - next >= 1.0,
        None => want[k - 1] - want[k] >= 1.0,
    };
    want[k] > ROUNDOFF_FLOOR && falling
}
