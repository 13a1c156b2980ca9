//! Real polynomials in ascending coefficient order: `p(x) = c[0] + c[1] x + ... + c[n] x^n`.

use num_complex::Complex64;

use crate::eigen;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Value and first derivative by Horner's scheme.
pub fn eval_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

pub fn eval_complex(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// Coefficients of the monic polynomial `prod (x - r_i)`.
pub fn from_roots(roots: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for r in roots {
        let mut next = vec![0.0; c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k + 1] += ck;
            next[k] -= r * ck;
        }
        c = next;
    }
    c
}

/// Frobenius companion matrix of the monic polynomial `x^n + a[n-1] x^{n-1} + ... + a[0]`.
///
/// `lower` holds `a[0..n]` (the leading 1 is implicit).
pub fn companion(lower: &[f64]) -> Matrix {
    let n = lower.len();
    let mut m = Matrix::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for (i, a) in lower.iter().enumerate() {
        m[(i, n - 1)] = -a;
    }
    m
}

/// Roots of a monic polynomial as eigenvalues of its companion matrix.
pub fn companion_roots(lower: &[f64]) -> Result<Vec<Complex64>> {
    if lower.is_empty() {
        return Ok(Vec::new());
    }
    eigen::eigenvalues(&companion(lower))
}

/// Newton refinement of a real root; returns the polished root.
pub fn polish_real_root(coeffs: &[f64], mut x: f64) -> f64 {
    for _ in 0..50 {
        let (p, dp) = eval_with_derivative(coeffs, x);
        if p == 0.0 || dp == 0.0 {
            break;
        }
        let dx = p / dp;
        let next = x - dx;
        if !next.is_finite() {
            break;
        }
        // stop once the step no longer reduces the residual
        if eval(coeffs, next).abs() >= p.abs() {
            break;
        }
        x = next;
    }
    x
}

/// Simultaneous (Weierstrass / Durand-Kerner) iteration for all roots of a
/// polynomial with real coefficients, leading coefficient nonzero.
pub fn durand_kerner(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    if lead == 0.0 {
        return Err(Error::Config("durand_kerner: leading coefficient is zero".into()));
    }
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    // Cauchy bound on root moduli
    let radius = 1.0 + monic[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| seed.powu(k as u32 + 1) * radius / seed.norm().powi(k as i32 + 1))
        .collect();
    let max_iter = 2000;
    for _ in 0..max_iter {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let num = eval_complex(&monic, z[i]);
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    den *= z[i] - z[j];
                }
            }
            if den.norm() == 0.0 {
                den = Complex64::new(f64::EPSILON, 0.0);
            }
            let step = num / den;
            z[i] -= step;
            max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
        }
        if max_step <= 4.0 * f64::EPSILON {
            return Ok(z);
        }
    }
    Err(Error::Numeric(format!(
        "Durand-Kerner did not converge in {max_iter} iterations for coefficients {coeffs:?}"
    )))
}
