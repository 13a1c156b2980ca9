//! Linear stability on the test equation `y'' = lambda y`, `z = lambda h^2`.
//!
//! With `(Y_n, y_n, h y'_n)` as state, one step is multiplication by
//!
//! ```text
//!        | z (A + e b^T + c d^T)   e   e + c |
//! M(z) = | z b^T                   1   1     |
//!        | z d^T                   0   1     |
//! ```
//!
//! The older formulation on `(Y_{n-1}, y_n, h y'_n)` gives a matrix `M~(z)` that is
//! similar to `M(z)` whenever `zA` is invertible.

use rayon::prelude::*;

use crate::basis::BasisSet;
use crate::coeffs::{solve_tableau, CoefficientTableau};
use crate::eigen;
use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::methods::Method;

/// Which amplification matrix to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// State `(Y_n, y_n, h y'_n)`.
    Direct,
    /// State `(Y_{n-1}, y_n, h y'_n)`.
    Legacy,
}

/// Spectral radii within this distance above 1 count as stable; the double
/// eigenvalue 1 at `z = 0` splits under rounding.
pub const RHO_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AmplificationMatrix {
    pub m: Matrix,
    pub z: f64,
    pub form: Form,
}

impl AmplificationMatrix {
    pub fn spectral_radius(&self) -> Result<f64> {
        eigen::spectral_radius(&self.m)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Assembles `M(z)` or `M~(z)` from a solved tableau.
pub fn amplification(tab: &CoefficientTableau, c: &[f64], z: f64, form: Form) -> AmplificationMatrix {
    let s = c.len();
    let n = s + 2;
    let (a, b, d) = (&tab.a, &tab.b, &tab.d);
    let mut m = Matrix::zeros(n, n);
    match form {
        Form::Direct => {
            for i in 0..s {
                for j in 0..s {
                    m[(i, j)] = z * (a[(i, j)] + b[j] + c[i] * d[j]);
                }
                m[(i, s)] = 1.0;
                m[(i, s + 1)] = 1.0 + c[i];
            }
            for j in 0..s {
                m[(s, j)] = z * b[j];
                m[(s + 1, j)] = z * d[j];
            }
            m[(s, s)] = 1.0;
            m[(s, s + 1)] = 1.0;
            m[(s + 1, s + 1)] = 1.0;
        }
        Form::Legacy => {
            let bta = a.vecmat(b);
            let dta = a.vecmat(d);
            let e = vec![1.0; s];
            for i in 0..s {
                for j in 0..s {
                    m[(i, j)] = z * a[(i, j)];
                }
                m[(i, s)] = 1.0;
                m[(i, s + 1)] = c[i];
            }
            for j in 0..s {
                m[(s, j)] = z * z * bta[j];
                m[(s + 1, j)] = z * z * dta[j];
            }
            m[(s, s)] = 1.0 + z * dot(b, &e);
            m[(s, s + 1)] = 1.0 + z * dot(b, c);
            m[(s + 1, s)] = z * dot(d, &e);
            m[(s + 1, s + 1)] = 1.0 + z * dot(d, c);
        }
    }
    AmplificationMatrix { m, z, form }
}

/// Largest eigenvalue modulus of a small dense matrix.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    eigen::spectral_radius(m)
}

/// The block matrix `[[zA, e, c], [0, 1, 0], [0, 0, 1]]` linking the two forms.
pub fn similarity_transform(tab: &CoefficientTableau, c: &[f64], z: f64) -> Matrix {
    let s = c.len();
    let mut t = Matrix::zeros(s + 2, s + 2);
    for i in 0..s {
        for j in 0..s {
            t[(i, j)] = z * tab.a[(i, j)];
        }
        t[(i, s)] = 1.0;
        t[(i, s + 1)] = c[i];
    }
    t[(s, s)] = 1.0;
    t[(s + 1, s + 1)] = 1.0;
    t
}

/// `|rho(M(z)) - rho(M~(z))|`, or `None` when the transform between the two
/// forms is singular at `z` (always at `z = 0`).
pub fn similarity_check(tab: &CoefficientTableau, c: &[f64], z: f64) -> Result<Option<f64>> {
    let t = similarity_transform(tab, c, z);
    if !matches!(Lu::factor(&t), Ok(lu) if lu.rcond() > 1e-12) {
        return Ok(None);
    }
    let direct = amplification(tab, c, z, Form::Direct).spectral_radius()?;
    let legacy = amplification(tab, c, z, Form::Legacy).spectral_radius()?;
    Ok(Some((direct - legacy).abs()))
}

/// The tableau governing constant-step stability at `omega h = nu`.
///
/// Separable bases give coefficients that depend on `h` only through `omega h`;
/// they are solved at `t = 0, h = nu / omega`. At `nu = 0` the fitted basis
/// degenerates and the monomial tableau on the same nodes, its limit, is used.
/// Monomial methods ignore `nu`.
pub fn stability_tableau(method: &Method, nu: f64) -> Result<CoefficientTableau> {
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(Error::Config(format!("omega h must be finite and nonnegative, got {nu}")));
    }
    let c = method.c();
    let basis = &method.basis;
    if !method.is_fitted() || nu == 0.0 {
        let mono = BasisSet::monomial(c.len())?;
        return solve_tableau(&mono, c, 0.0, 1.0);
    }
    let omega = basis.omega();
    if !(omega > 0.0) {
        return Err(Error::Config(format!(
            "stability scans in omega h need a basis with a fitting frequency; {} has none",
            basis.spec_string()
        )));
    }
    match basis.local_equivalent() {
        Some(local) if basis.max_frequency() * nu / omega <= crate::coeffs::LOCAL_FORM_LIMIT => {
            solve_tableau(&local, c, 0.0, nu / omega)
        }
        _ => solve_tableau(basis, c, 0.0, nu / omega),
    }
}

/// Spectral radius along a grid of `z` values at one `omega h`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityScan {
    pub omega_h: f64,
    /// From 0 down to `z_min`.
    pub z: Vec<f64>,
    pub rho: Vec<f64>,
    /// End of the stable interval that starts at `z = 0`.
    pub boundary: f64,
}

/// `rho(M(z))` at `z` for a fixed tableau.
pub fn rho_at(tab: &CoefficientTableau, c: &[f64], z: f64) -> Result<f64> {
    amplification(tab, c, z, Form::Direct).spectral_radius()
}

fn stable_with(rho: f64, slack: f64) -> bool {
    rho <= 1.0 + slack
}

/// Evaluates `rho` on `n_grid` uniform points from 0 to `z_min` and locates the
/// first crossing of `rho = 1`, refined by bisection to `1e-6`.
pub fn scan_region(method: &Method, omega_h: f64, z_min: f64, n_grid: usize) -> Result<StabilityScan> {
    scan_region_with(method, omega_h, z_min, n_grid, RHO_SLACK)
}

/// [`scan_region`] with `rho <= 1 + slack` as the stability test.
pub fn scan_region_with(
    method: &Method,
    omega_h: f64,
    z_min: f64,
    n_grid: usize,
    slack: f64,
) -> Result<StabilityScan> {
    if !(slack >= 0.0 && slack.is_finite()) {
        return Err(Error::Config(format!("stability slack must be finite and nonnegative, got {slack}")));
    }
    if !(z_min < 0.0 && z_min.is_finite()) || n_grid < 2 {
        return Err(Error::Config(format!(
            "stability scan needs z_min < 0 and at least 2 grid points (got {z_min}, {n_grid})"
        )));
    }
    let tab = stability_tableau(method, omega_h)?;
    let c = method.c();
    let z: Vec<f64> = (0..n_grid)
        .map(|k| z_min * k as f64 / (n_grid - 1) as f64)
        .collect();
    let rho = z
        .par_iter()
        .map(|&zk| rho_at(&tab, c, zk))
        .collect::<Result<Vec<f64>>>()?;
    let boundary = match rho.iter().position(|&r| !stable_with(r, slack)) {
        None => z_min,
        Some(0) => 0.0,
        Some(k) => {
            let (mut good, mut bad) = (z[k - 1], z[k]);
            while (good - bad).abs() > 1e-6 {
                let mid = 0.5 * (good + bad);
                if stable_with(rho_at(&tab, c, mid)?, slack) {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            good
        }
    };
    Ok(StabilityScan {
        omega_h,
        z,
        rho,
        boundary,
    })
}
