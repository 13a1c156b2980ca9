//! Method coefficients from the collocation conditions.
//!
//! With `F(t, h)[i][j] = u_j''(t + c_i h)` the coefficients are the row vectors
//! solving
//!
//! ```text
//! h^2 b^T F = u(t+h) - u(t) - h u'(t)
//! h   d^T F = u'(t+h) - u'(t)
//! h^2 a_i^T F = u(t+h+c_i h) - u(t+h) - c_i h u'(t+h)      (row i of A)
//! ```
//!
//! componentwise over the basis functions. Every right-hand side is a divided
//! Taylor remainder (see [`BasisSet::remainders`]), so after dividing through
//! by the powers of `h` all systems share the matrix `F`. They are solved as
//! `F^T x = r` with a single LU factorization of the row-equilibrated `F^T`.

use std::collections::HashMap;
use std::sync::Arc;

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};

/// `F(t, h)` together with the point it was built at.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationMatrix {
    pub f: Matrix,
    pub t: f64,
    pub h: f64,
}

/// `F[i][j] = u_j''(t + c_i h)`.
pub fn build_f(basis: &BasisSet, c: &[f64], t: f64, h: f64) -> CollocationMatrix {
    let s = basis.len();
    let mut f = Matrix::zeros(c.len(), s);
    for (i, &ci) in c.iter().enumerate() {
        for j in 0..s {
            f[(i, j)] = basis.eval_one(j, t + ci * h).2;
        }
    }
    CollocationMatrix { f, t, h }
}

/// A factorized collocation matrix, ready to solve `x^T F = r^T` for many `r`.
#[derive(Debug, Clone)]
pub struct CollocationSystem {
    pub matrix: CollocationMatrix,
    lu: Lu,
    row_scale: Vec<f64>,
    /// Reciprocal condition number (1-norm) of the equilibrated `F^T`.
    pub rcond: f64,
}

impl CollocationSystem {
    pub fn new(basis: &BasisSet, c: &[f64], t: f64, h: f64) -> Result<Self> {
        if c.len() != basis.len() {
            return Err(Error::Config(format!(
                "{} nodes supplied for a basis of {} functions",
                c.len(),
                basis.len()
            )));
        }
        if !(h.is_finite() && h != 0.0 && t.is_finite()) {
            return Err(Error::Config(format!("invalid step (t = {t}, h = {h})")));
        }
        let matrix = build_f(basis, c, t, h);
        let collocation = |rcond| Error::Collocation { t, h, rcond };
        if !matrix.f.is_finite() {
            return Err(collocation(0.0));
        }
        let mut ft = matrix.f.transpose();
        let s = ft.rows();
        let mut row_scale = vec![1.0; s];
        for (j, scale) in row_scale.iter_mut().enumerate() {
            let m = ft.row(j).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m == 0.0 {
                return Err(collocation(0.0));
            }
            *scale = 1.0 / m;
            for v in ft.row_mut(j) {
                *v /= m;
            }
        }
        let lu = Lu::factor_in(&ft, "collocation matrix").map_err(|_| collocation(0.0))?;
        let rcond = lu.rcond();
        Ok(CollocationSystem {
            matrix,
            lu,
            row_scale,
            rcond,
        })
    }

    /// The row vector `x` with `x^T F = r^T`.
    pub fn solve_row(&self, r: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = r.iter().zip(&self.row_scale).map(|(a, s)| a * s).collect();
        self.lu.solve_vec(&scaled)
    }
}

/// Coefficients `(A, b, d)` of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTableau {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub d: Vec<f64>,
    pub t: f64,
    pub h: f64,
    /// Set when `A` was solved for a following step of a different size.
    pub h_next: Option<f64>,
    pub rcond: f64,
}

/// Rows of `A` for a next step of size `h_next` starting at `t_next`.
fn a_rows(
    basis: &BasisSet,
    sys: &CollocationSystem,
    c: &[f64],
    t_next: f64,
    h_next: f64,
) -> Matrix {
    let s = c.len();
    let mut a = Matrix::zeros(s, s);
    for (i, &ci) in c.iter().enumerate() {
        if ci == 0.0 {
            continue;
        }
        let (r2, _) = basis.remainders(t_next, ci * h_next);
        // (c_i h')^2 R / h'^2 with R the divided remainder
        let rhs: Vec<f64> = r2.iter().map(|r| ci * ci * r).collect();
        a.row_mut(i).copy_from_slice(&sys.solve_row(&rhs));
    }
    a
}

/// `(A(t,h), b(t,h), d(t,h))` from the defining systems at the literal point `(t, h)`.
pub fn solve_tableau(basis: &BasisSet, c: &[f64], t: f64, h: f64) -> Result<CoefficientTableau> {
    let sys = CollocationSystem::new(basis, c, t, h)?;
    let (r2, r1) = basis.remainders(t, h);
    let b = sys.solve_row(&r2);
    let d = sys.solve_row(&r1);
    let a = a_rows(basis, &sys, c, t + h, h);
    Ok(CoefficientTableau {
        a,
        b,
        d,
        t,
        h,
        h_next: None,
        rcond: sys.rcond,
    })
}

/// `A(t_n, h_n, h_next)`: stage coefficients for a step of size `h_next` following
/// one of size `h_n`, with `F` taken at `(t_n, h_n)`.
pub fn solve_variable_a(
    basis: &BasisSet,
    c: &[f64],
    t_n: f64,
    h_n: f64,
    h_next: f64,
) -> Result<Matrix> {
    if !(h_next.is_finite() && h_next > 0.0) {
        return Err(Error::Config(format!("next stepsize must be positive, got {h_next}")));
    }
    let sys = CollocationSystem::new(basis, c, t_n, h_n)?;
    Ok(a_rows(basis, &sys, c, t_n + h_n, h_next))
}

/// Weights of the continuous extension at `t_n + xi h_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCoefficients {
    pub xi: f64,
    pub b_xi: Vec<f64>,
    pub d_xi: Vec<f64>,
}

/// Solves `(xi h)^2 b_xi^T F(t_n,h_n) = u(t_n+xi h) - u(t_n) - xi h u'(t_n)` and the
/// analogous derivative system. At `xi = 0` the weights are returned as zeros;
/// they are multiplied by `xi h` in the output formula anyway.
pub fn solve_dense(
    basis: &BasisSet,
    c: &[f64],
    t_n: f64,
    h_n: f64,
    xi: f64,
) -> Result<DenseCoefficients> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::Config(format!("dense output fraction {xi} outside [0, 1]")));
    }
    if xi == 0.0 {
        return Ok(DenseCoefficients {
            xi,
            b_xi: vec![0.0; c.len()],
            d_xi: vec![0.0; c.len()],
        });
    }
    let sys = CollocationSystem::new(basis, c, t_n, h_n)?;
    let (r2, r1) = basis.remainders(t_n, xi * h_n);
    Ok(DenseCoefficients {
        xi,
        b_xi: sys.solve_row(&r2),
        d_xi: sys.solve_row(&r1),
    })
}

/// Lower-order weights over a subset of the stages.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedTableau {
    pub c_tilde: Vec<f64>,
    /// `c_tilde[k] == c[index_map[k]]`
    pub index_map: Vec<usize>,
    pub b_tilde: Vec<f64>,
    pub d_tilde: Vec<f64>,
}

/// The embedded method built from the first `subset.len()` basis functions and
/// the nodes `c[subset]`.
pub fn solve_embedded(
    basis: &BasisSet,
    c: &[f64],
    subset: &[usize],
    t: f64,
    h: f64,
) -> Result<EmbeddedTableau> {
    let s = c.len();
    if subset.is_empty() || subset.len() >= s {
        return Err(Error::Config(format!(
            "embedded subset must be a strict nonempty subset of the {s} stages, got {subset:?}"
        )));
    }
    let mut seen = vec![false; s];
    for &k in subset {
        if k >= s || seen[k] {
            return Err(Error::Config(format!(
                "embedded subset {subset:?} has an out-of-range or repeated index"
            )));
        }
        seen[k] = true;
    }
    let sub = basis.prefix(subset.len())?;
    let c_tilde: Vec<f64> = subset.iter().map(|&k| c[k]).collect();
    let sys = CollocationSystem::new(&sub, &c_tilde, t, h)?;
    let (r2, r1) = sub.remainders(t, h);
    Ok(EmbeddedTableau {
        b_tilde: sys.solve_row(&r2),
        d_tilde: sys.solve_row(&r1),
        c_tilde,
        index_map: subset.to_vec(),
    })
}

/// Normwise relative residual of `x^T F = r^T`:
/// `max_j |(x^T F)_j - r_j| / max_j (sum_i |x_i F_ij| + |r_j|)`.
pub fn row_residual(x: &[f64], f: &Matrix, r: &[f64]) -> f64 {
    let xf = f.vecmat(x);
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for j in 0..r.len() {
        num = num.max((xf[j] - r[j]).abs());
        let mag: f64 = (0..x.len()).map(|i| (x[i] * f[(i, j)]).abs()).sum();
        den = den.max(mag + r[j].abs());
    }
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Largest relative residual of each defining system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableauResiduals {
    pub b: f64,
    pub d: f64,
    pub a: f64,
}

impl TableauResiduals {
    pub fn max(&self) -> f64 {
        self.b.max(self.d).max(self.a)
    }
}

/// Recomputes the defining systems of `tab` and reports their residuals.
pub fn tableau_residuals(
    basis: &BasisSet,
    c: &[f64],
    tab: &CoefficientTableau,
) -> TableauResiduals {
    let f = build_f(basis, c, tab.t, tab.h).f;
    let (r2, r1) = basis.remainders(tab.t, tab.h);
    let h_next = tab.h_next.unwrap_or(tab.h);
    let mut a_res: f64 = 0.0;
    for (i, &ci) in c.iter().enumerate() {
        let (q, _) = basis.remainders(tab.t + tab.h, ci * h_next);
        let rhs: Vec<f64> = q.iter().map(|v| ci * ci * v).collect();
        a_res = a_res.max(row_residual(tab.a.row(i), &f, &rhs));
    }
    TableauResiduals {
        b: row_residual(&tab.b, &f, &r2),
        d: row_residual(&tab.d, &f, &r1),
        a: a_res,
    }
}

/// Above this value of `max_frequency * h` the series form of a trigonometric
/// basis is no longer accurate and the original functions are used instead;
/// below it the original functions are the badly conditioned choice.
pub const LOCAL_FORM_LIMIT: f64 = 2.0;

/// Supplies the coefficients an integration needs, step by step.
///
/// For separable bases every solve happens at `t = 0` (coefficients depend on
/// `h` only), trigonometric bases switch to their well-conditioned equivalent
/// ([`BasisSet::local_equivalent`]) for small `h`, and tableaus are memoized on
/// the exact bit pattern of `h`. Non-separable bases are solved at the literal
/// `(t, h)` every time. One source belongs to one integration, so the cache needs
/// no locking.
#[derive(Debug, Clone)]
pub struct CoefficientSource {
    basis: BasisSet,
    local: Option<BasisSet>,
    c: Vec<f64>,
    subset: Vec<usize>,
    sub_basis: Option<BasisSet>,
    sub_local: Option<BasisSet>,
    tableaus: HashMap<u64, Arc<CoefficientTableau>>,
    embedded: HashMap<u64, Arc<EmbeddedTableau>>,
}

impl CoefficientSource {
    /// `subset` lists the embedded stages; pass an empty slice for none.
    pub fn new(basis: &BasisSet, c: &[f64], subset: &[usize]) -> Result<Self> {
        if c.len() != basis.len() {
            return Err(Error::Config(format!(
                "{} nodes supplied for a basis of {} functions",
                c.len(),
                basis.len()
            )));
        }
        let sub_basis = if subset.is_empty() {
            None
        } else {
            Some(basis.prefix(subset.len())?)
        };
        Ok(CoefficientSource {
            local: basis.local_equivalent(),
            sub_local: sub_basis.as_ref().and_then(BasisSet::local_equivalent),
            basis: basis.clone(),
            c: c.to_vec(),
            subset: subset.to_vec(),
            sub_basis,
            tableaus: HashMap::new(),
            embedded: HashMap::new(),
        })
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// The basis to solve with and the time to solve at.
    fn form<'a>(raw: &'a BasisSet, local: &'a Option<BasisSet>, t: f64, h: f64) -> (&'a BasisSet, f64) {
        if !raw.is_separable() {
            return (raw, t);
        }
        match local {
            Some(l) if raw.max_frequency() * h.abs() <= LOCAL_FORM_LIMIT => (l, 0.0),
            _ => (raw, 0.0),
        }
    }

    pub fn tableau(&mut self, t: f64, h: f64) -> Result<Arc<CoefficientTableau>> {
        let separable = self.basis.is_separable();
        if separable {
            if let Some(tab) = self.tableaus.get(&h.to_bits()) {
                return Ok(tab.clone());
            }
        }
        let (b, t0) = Self::form(&self.basis, &self.local, t, h);
        let mut tab = solve_tableau(b, &self.c, t0, h).map_err(|e| relabel(e, t, h))?;
        tab.t = t;
        let tab = Arc::new(tab);
        if separable {
            self.tableaus.insert(h.to_bits(), tab.clone());
        }
        Ok(tab)
    }

    pub fn variable_a(&mut self, t_n: f64, h_n: f64, h_next: f64) -> Result<Matrix> {
        if h_next == h_n {
            return Ok(self.tableau(t_n, h_n)?.a.clone());
        }
        let (b, t0) = Self::form(&self.basis, &self.local, t_n, h_n.max(h_next));
        solve_variable_a(b, &self.c, t0, h_n, h_next).map_err(|e| relabel(e, t_n, h_n))
    }

    pub fn dense(&self, t_n: f64, h_n: f64, xi: f64) -> Result<DenseCoefficients> {
        let (b, t0) = Self::form(&self.basis, &self.local, t_n, h_n);
        solve_dense(b, &self.c, t0, h_n, xi).map_err(|e| relabel(e, t_n, h_n))
    }

    pub fn embedded(&mut self, t: f64, h: f64) -> Result<Arc<EmbeddedTableau>> {
        let sub = self
            .sub_basis
            .as_ref()
            .ok_or_else(|| Error::Config("method has no embedded stage subset".into()))?;
        let separable = sub.is_separable();
        if separable {
            if let Some(e) = self.embedded.get(&h.to_bits()) {
                return Ok(e.clone());
            }
        }
        let shifted;
        let (b, t0) = match sub.local_prefix_at(t) {
            Some(l) if sub.max_frequency() * h.abs() <= LOCAL_FORM_LIMIT => {
                shifted = l;
                (&shifted, 0.0)
            }
            _ => Self::form(sub, &self.sub_local, t, h),
        };
        let c_tilde: Vec<f64> = self.subset.iter().map(|&k| self.c[k]).collect();
        let sys = CollocationSystem::new(b, &c_tilde, t0, h).map_err(|e| relabel(e, t, h))?;
        let (r2, r1) = b.remainders(t0, h);
        let emb = Arc::new(EmbeddedTableau {
            b_tilde: sys.solve_row(&r2),
            d_tilde: sys.solve_row(&r1),
            c_tilde,
            index_map: self.subset.clone(),
        });
        if separable {
            self.embedded.insert(h.to_bits(), emb.clone());
        }
        Ok(emb)
    }
}

/// Collocation failures are reported at the caller's `(t, h)`, not the shifted solve point.
fn relabel(e: Error, t: f64, h: f64) -> Error {
    match e {
        Error::Collocation { rcond, .. } => Error::Collocation { t, h, rcond },
        other => other,
    }
}
