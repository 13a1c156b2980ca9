//! Fitting-function sets `{u_1, ..., u_s}` with exact first and second derivatives.
//!
//! Three built-in families are provided:
//!
//! * `Monomial`: `{t^2, t^3, ..., t^{s+1}}`
//! * `TrigPure`: `{cos(k w t), sin(k w t)}` for `k = 1..s/2` (even `s`)
//! * `TrigMixed`: `{t^2}` followed by `{cos(k w t), sin(k w t)}` for `k = 1..(s-1)/2` (odd `s`)
//!
//! plus user-supplied `Custom` bases given as (value, first, second derivative) callables.
//! Together they cover the eight bases the named methods are built on.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};

/// Largest stage count accepted for the built-in families.
pub const MAX_STAGES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Monomial,
    TrigPure,
    TrigMixed,
    Custom,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisKind::Monomial => "monomial",
            BasisKind::TrigPure => "trig",
            BasisKind::TrigMixed => "trigmix",
            BasisKind::Custom => "custom",
        })
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-defined basis function with its two derivatives.
#[derive(Clone)]
pub struct CustomFn {
    pub name: String,
    pub value: ScalarFn,
    pub first: ScalarFn,
    pub second: ScalarFn,
}

impl CustomFn {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        first: impl Fn(f64) -> f64 + Send + Sync + 'static,
        second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CustomFn {
            name: name.into(),
            value: Arc::new(value),
            first: Arc::new(first),
            second: Arc::new(second),
        }
    }
}

#[derive(Clone)]
enum BasisFn {
    /// `t^p`, `p >= 2`
    Power(i32),
    /// `cos(freq * t)`
    Cos(f64),
    /// `sin(freq * t)`
    Sin(f64),
    Custom(CustomFn),
    /// `sum_n e[n] t^n` with `e[n] = g^(n)(0) / n!`; only accurate for moderate `|t|`.
    Series(Arc<Vec<f64>>),
}

impl BasisFn {
    #[inline]
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        match self {
            BasisFn::Power(p) => {
                let p = *p;
                let pf = p as f64;
                let tp2 = t.powi(p - 2);
                (tp2 * t * t, pf * tp2 * t, pf * (pf - 1.0) * tp2)
            }
            BasisFn::Cos(w) => {
                let (s, c) = (w * t).sin_cos();
                (c, -w * s, -w * w * c)
            }
            BasisFn::Sin(w) => {
                let (s, c) = (w * t).sin_cos();
                (s, w * c, -w * w * s)
            }
            BasisFn::Custom(f) => ((f.value)(t), (f.first)(t), (f.second)(t)),
            BasisFn::Series(e) => {
                let (mut u, mut u1, mut u2) = (0.0, 0.0, 0.0);
                for n in (0..e.len()).rev() {
                    let nf = n as f64;
                    u = u * t + e[n];
                    if n >= 1 {
                        u1 = u1 * t + nf * e[n];
                    }
                    if n >= 2 {
                        u2 = u2 * t + nf * (nf - 1.0) * e[n];
                    }
                }
                (u, u1, u2)
            }
        }
    }

    /// Divided Taylor remainders over an increment `dt`:
    /// `((u(t+dt) - u(t) - dt u'(t)) / dt^2, (u'(t+dt) - u'(t)) / dt)`,
    /// evaluated without the cancellation of the naive formula where possible.
    /// At `dt = 0` both take their limits `(u''(t)/2, u''(t))`.
    fn remainders(&self, t: f64, dt: f64) -> (f64, f64) {
        match self {
            BasisFn::Power(p) => {
                // binomial expansion of (t + dt)^p
                let p = *p;
                let mut r2 = 0.0;
                let mut r1 = 0.0;
                let mut binom = 1.0; // C(p, k)
                for k in 1..=p {
                    binom = binom * (p - k + 1) as f64 / k as f64;
                    let term = binom * t.powi(p - k);
                    if k >= 2 {
                        r2 += term * dt.powi(k - 2);
                    }
                    // (d/dt) part: p C(p-1, k-1) t^{p-k} dt^{k-2} = k C(p, k) t^{p-k} dt^{k-2}
                    if k >= 2 {
                        r1 += k as f64 * term * dt.powi(k - 2);
                    }
                }
                (r2, r1)
            }
            BasisFn::Cos(w) => {
                let x = w * dt;
                let (s, c) = (w * t).sin_cos();
                let w2 = w * w;
                (
                    w2 * (c * cos_m1_over_sq(x) - s * sin_mx_over_sq(x)),
                    -w2 * (s * x * cos_m1_over_sq(x) + c * sinc(x)),
                )
            }
            BasisFn::Sin(w) => {
                let x = w * dt;
                let (s, c) = (w * t).sin_cos();
                let w2 = w * w;
                (
                    w2 * (s * cos_m1_over_sq(x) + c * sin_mx_over_sq(x)),
                    w2 * (c * x * cos_m1_over_sq(x) - s * sinc(x)),
                )
            }
            BasisFn::Series(e) => {
                // With E_k = (t+dt)^k, the quotients S_k = (E_k - t^k)/dt and
                // R_k = (E_k - t^k - k t^(k-1) dt)/dt^2 obey
                // S_k = t S_{k-1} + E_{k-1} and R_k = t R_{k-1} + S_{k-1}.
                let (mut e_prev, mut s_prev, mut r_prev) = (1.0, 0.0, 0.0);
                let (mut r2, mut r1) = (0.0, 0.0);
                for (k, &ek) in e.iter().enumerate().skip(1) {
                    let s_k = t * s_prev + e_prev;
                    let r_k = t * r_prev + s_prev;
                    r1 += k as f64 * ek * s_prev;
                    r2 += ek * r_k;
                    e_prev *= t + dt;
                    s_prev = s_k;
                    r_prev = r_k;
                }
                (r2, r1)
            }
            BasisFn::Custom(f) => {
                if dt == 0.0 {
                    let u2 = (f.second)(t);
                    return (0.5 * u2, u2);
                }
                let (u, u1) = ((f.value)(t), (f.first)(t));
                (
                    ((f.value)(t + dt) - u - dt * u1) / (dt * dt),
                    ((f.first)(t + dt) - u1) / dt,
                )
            }
        }
    }

    fn label(&self) -> String {
        match self {
            BasisFn::Power(p) => format!("t^{p}"),
            BasisFn::Cos(w) => format!("cos({w}t)"),
            BasisFn::Sin(w) => format!("sin({w}t)"),
            BasisFn::Custom(f) => f.name.clone(),
            BasisFn::Series(e) => format!("g{}", e.iter().position(|v| *v != 0.0).unwrap_or(0)),
        }
    }
}

/// `(cos x - 1) / x^2`
fn cos_m1_over_sq(x: f64) -> f64 {
    if x == 0.0 {
        return -0.5;
    }
    let h = (0.5 * x).sin();
    -2.0 * h * h / (x * x)
}

/// `(sin x - x) / x^2`
fn sin_mx_over_sq(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return (x.sin() - x) / (x * x);
    }
    // -x/3! + x^3/5! - x^5/7! + ...
    let x2 = x * x;
    let mut term = -x / 6.0;
    let mut sum = term;
    let mut k = 3.0;
    while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
        term *= -x2 / ((2.0 * k - 2.0) * (2.0 * k - 1.0));
        sum += term;
        k += 1.0;
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// An immutable set of `s` basis functions.
#[derive(Clone)]
pub struct BasisSet {
    kind: BasisKind,
    omega: f64,
    separable: bool,
    funcs: Vec<BasisFn>,
}

/// Values and derivatives of every basis function at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisValues {
    pub u: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

fn valid_pairs() -> String {
    format!(
        "valid (kind, s): monomial with 1 <= s <= {MAX_STAGES}; trig with even 2 <= s <= {MAX_STAGES}; \
         trigmix with odd 3 <= s <= {}; custom with any s >= 1",
        MAX_STAGES - 1
    )
}

/// Builds one of the built-in bases.
///
/// `omega` is ignored for `Monomial` and must be finite and positive for the trig kinds.
pub fn make_basis(kind: BasisKind, s: usize, omega: f64) -> Result<BasisSet> {
    BasisSet::new(kind, s, omega)
}

impl BasisSet {
    pub fn new(kind: BasisKind, s: usize, omega: f64) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "unsupported basis ({kind}, s = {s}); {}",
                valid_pairs()
            ))
        };
        let needs_omega = matches!(kind, BasisKind::TrigPure | BasisKind::TrigMixed);
        if needs_omega && !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Config(format!(
                "basis {kind} needs a finite fitting frequency omega > 0, got {omega}"
            )));
        }
        let trig_pairs = |n: usize| -> Vec<BasisFn> {
            (1..=n)
                .flat_map(|k| {
                    let w = k as f64 * omega;
                    [BasisFn::Cos(w), BasisFn::Sin(w)]
                })
                .collect()
        };
        let funcs = match kind {
            BasisKind::Monomial => {
                if !(1..=MAX_STAGES).contains(&s) {
                    return Err(bad());
                }
                (2..=s as i32 + 1).map(BasisFn::Power).collect()
            }
            BasisKind::TrigPure => {
                if !(2..=MAX_STAGES).contains(&s) || !s.is_multiple_of(2) {
                    return Err(bad());
                }
                trig_pairs(s / 2)
            }
            BasisKind::TrigMixed => {
                if !(3..=MAX_STAGES).contains(&s) || s % 2 != 1 {
                    return Err(bad());
                }
                let mut f = vec![BasisFn::Power(2)];
                f.extend(trig_pairs((s - 1) / 2));
                f
            }
            BasisKind::Custom => {
                return Err(Error::Config(
                    "custom bases are built with BasisSet::custom".into(),
                ))
            }
        };
        Ok(BasisSet {
            kind,
            omega: if needs_omega { omega } else { 0.0 },
            separable: true,
            funcs,
        })
    }

    pub fn monomial(s: usize) -> Result<Self> {
        BasisSet::new(BasisKind::Monomial, s, 0.0)
    }

    pub fn trig(s: usize, omega: f64) -> Result<Self> {
        BasisSet::new(BasisKind::TrigPure, s, omega)
    }

    pub fn trig_mixed(s: usize, omega: f64) -> Result<Self> {
        BasisSet::new(BasisKind::TrigMixed, s, omega)
    }

    /// A user-defined basis. Coefficients are recomputed at every `t` unless
    /// `separable` is set, which asserts that the span of `{1, t, u_i}` is
    /// translation invariant.
    ///
    /// Rejects functions whose second derivative vanishes at every probe point
    /// (affine functions make the collocation matrix singular).
    pub fn custom(funcs: Vec<CustomFn>, separable: bool) -> Result<Self> {
        if funcs.is_empty() {
            return Err(Error::Config("custom basis needs at least one function".into()));
        }
        let probes = [-1.3, -0.2, 0.0, 0.37, 1.0, 2.9, 7.5];
        for f in &funcs {
            if probes.iter().all(|&t| (f.second)(t) == 0.0) {
                return Err(Error::Config(format!(
                    "basis function {} has zero second derivative at every probe point (affine?)",
                    f.name
                )));
            }
        }
        Ok(BasisSet {
            kind: BasisKind::Custom,
            omega: 0.0,
            separable,
            funcs: funcs.into_iter().map(BasisFn::Custom).collect(),
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    /// Fitting frequency; 0 for kinds that have none.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// True when method coefficients are independent of `t`.
    pub fn is_separable(&self) -> bool {
        self.separable
    }

    /// `(u_i(t), u_i'(t), u_i''(t))`.
    #[inline]
    pub fn eval_one(&self, i: usize, t: f64) -> (f64, f64, f64) {
        self.funcs[i].eval(t)
    }

    pub fn eval(&self, t: f64) -> BasisValues {
        let s = self.len();
        let mut out = BasisValues {
            u: Vec::with_capacity(s),
            u1: Vec::with_capacity(s),
            u2: Vec::with_capacity(s),
        };
        for f in &self.funcs {
            let (u, u1, u2) = f.eval(t);
            out.u.push(u);
            out.u1.push(u1);
            out.u2.push(u2);
        }
        out
    }

    /// For every function, `(u(t+dt) - u(t) - dt u'(t)) / dt^2` and `(u'(t+dt) - u'(t)) / dt`.
    ///
    /// These are the right-hand sides of the coefficient systems; the built-in
    /// families evaluate them in a cancellation-free form so coefficients stay
    /// accurate as `dt -> 0`.
    pub fn remainders(&self, t: f64, dt: f64) -> (Vec<f64>, Vec<f64>) {
        self.funcs.iter().map(|f| f.remainders(t, dt)).unzip()
    }

    /// Largest angular frequency present (0 for monomial bases).
    pub fn max_frequency(&self) -> f64 {
        match self.kind {
            // rounded up: a truncated prefix may end on an unpaired cosine
            BasisKind::TrigPure => self.len().div_ceil(2) as f64 * self.omega,
            BasisKind::TrigMixed => (self.len() / 2) as f64 * self.omega,
            _ => 0.0,
        }
    }

    /// A basis with the same span `{1, t, u_1, ..., u_s}` that stays well
    /// conditioned as the step shrinks, for the trigonometric families.
    ///
    /// The functions are the fundamental solutions `g_m`, `m = 2..=s+1`, of the
    /// linear ODE whose characteristic polynomial is `l^q prod_k (l^2 + k^2 w^2)`
    /// (`q = 2` for `trig`, `3` for `trigmix`), normalized so that
    /// `g_m(t) = t^m + O(t^(s+2))`. They are evaluated from their
    /// Taylor series, which is accurate while `max_frequency() * |t|` stays
    /// below about 10. Returns `None` for the other kinds and for truncated
    /// trigonometric sets that lost a sine/cosine partner.
    pub fn local_equivalent(&self) -> Option<BasisSet> {
        let q = match self.kind {
            BasisKind::TrigPure => 2,
            BasisKind::TrigMixed => 3,
            _ => return None,
        };
        // truncated trig sets (embedded prefixes) are not solution spaces of such an ODE
        if !self.separable {
            return None;
        }
        let s = self.len();
        let order = s + 2;
        // characteristic polynomial, ascending coefficients
        let mut p = vec![0.0; q + 1];
        p[q] = 1.0;
        for k in 1..=(s + 2 - q) / 2 {
            let w2 = (k as f64 * self.omega).powi(2);
            let mut next = vec![0.0; p.len() + 2];
            for (j, pj) in p.iter().enumerate() {
                next[j] += w2 * pj;
                next[j + 2] += pj;
            }
            p = next;
        }
        debug_assert_eq!(p.len(), order + 1);
        const TERMS: usize = 80;
        let funcs = (2..order)
            .map(|m| {
                // e[n] = g^(n)(0) / n!; the ODE gives sum_j p_j g^(n-N+j)(0) = 0, N = order
                let mut e = vec![0.0; TERMS];
                e[m] = 1.0;
                for n in order..TERMS {
                    let mut acc = 0.0;
                    let mut ratio = 1.0; // (n-N+j)! / n!
                    for j in (0..order).rev() {
                        ratio /= (n - order + j + 1) as f64;
                        acc += p[j] * e[n - order + j] * ratio;
                    }
                    e[n] = -acc;
                }
                BasisFn::Series(Arc::new(e))
            })
            .collect();
        Some(BasisSet {
            kind: self.kind,
            omega: self.omega,
            separable: true,
            funcs,
        })
    }

    /// Well-conditioned stand-in for a truncated trigonometric prefix that ends on
    /// an unpaired `cos(K t)`, expanded about `t`: functions of `tau = t' - t`
    /// spanning, together with `{1, tau}`, the same space as the prefix shifted to `t`.
    ///
    /// The completed set (with `sin(K t)` restored) has the local form `g_m`.
    /// Inside its span, the shifted prefix is the kernel of
    /// `l(v) = sin(K t) alpha_K(v) + cos(K t) beta_K(v)`, where `(alpha_K, beta_K)`
    /// are the coordinates of `v` on `(cos K tau, sin K tau)`. One `g_m` is
    /// eliminated against the others. Returns `None` when `self` is not such a prefix.
    pub fn local_prefix_at(&self, t: f64) -> Option<BasisSet> {
        if self.separable || !matches!(self.kind, BasisKind::TrigPure | BasisKind::TrigMixed) {
            return None;
        }
        let top = match self.funcs.last() {
            Some(BasisFn::Cos(w)) => *w,
            _ => return None,
        };
        let mut funcs = self.funcs.clone();
        funcs.push(BasisFn::Sin(top));
        let full = BasisSet {
            kind: self.kind,
            omega: self.omega,
            separable: true,
            funcs,
        };
        let local = full.local_equivalent()?;
        let order = full.len() + 2;

        // Taylor coefficients at 0 of 1, tau, [tau^2], cos(k w tau), sin(k w tau)
        let mut cols: Vec<Box<dyn Fn(usize) -> f64>> = vec![
            Box::new(|n| if n == 0 { 1.0 } else { 0.0 }),
            Box::new(|n| if n == 1 { 1.0 } else { 0.0 }),
        ];
        if self.kind == BasisKind::TrigMixed {
            cols.push(Box::new(|n| if n == 2 { 1.0 } else { 0.0 }));
        }
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        let n_freq = (order - cols.len()) / 2;
        for k in 1..=n_freq {
            let w = k as f64 * self.omega;
            cols.push(Box::new(move |n| match n % 4 {
                0 => w.powi(n as i32) / fact(n),
                2 => -w.powi(n as i32) / fact(n),
                _ => 0.0,
            }));
            cols.push(Box::new(move |n| match n % 4 {
                1 => w.powi(n as i32) / fact(n),
                3 => -w.powi(n as i32) / fact(n),
                _ => 0.0,
            }));
        }
        debug_assert_eq!(cols.len(), order);
        let d = Matrix::from_fn(order, order, |n, j| cols[j](n));
        let inv = Lu::factor(&d).ok()?.inverse();
        let (ia, ib) = (order - 2, order - 1);
        let (sk, ck) = (top * t).sin_cos();
        // l(g_m) from column m of D^-1, scaled by K^m to compare across m
        let ell = |m: usize| sk * inv[(ia, m)] + ck * inv[(ib, m)];
        let pivot = (order - 2..order)
            .max_by(|&a, &b| {
                let sa = (ell(a) * top.powi(a as i32)).abs();
                let sb = (ell(b) * top.powi(b as i32)).abs();
                sa.partial_cmp(&sb).unwrap()
            })
            .expect("nonempty range");
        let series = |m: usize| match &local.funcs[m - 2] {
            BasisFn::Series(e) => e.clone(),
            _ => unreachable!("local forms are series"),
        };
        let e_pivot = series(pivot);
        let funcs = (2..order)
            .filter(|&m| m != pivot)
            .map(|m| {
                let r = ell(m) / ell(pivot);
                let e: Vec<f64> = series(m).iter().zip(e_pivot.iter()).map(|(a, b)| a - r * b).collect();
                BasisFn::Series(Arc::new(e))
            })
            .collect();
        Some(BasisSet {
            kind: self.kind,
            omega: self.omega,
            separable: false,
            funcs,
        })
    }

    /// The first `n` functions, as used by embedded lower-order methods.
    pub fn prefix(&self, n: usize) -> Result<BasisSet> {
        if n == 0 || n > self.len() {
            return Err(Error::Config(format!(
                "basis prefix of length {n} requested from a basis of size {}",
                self.len()
            )));
        }
        // Dropping a sine without its cosine partner breaks translation invariance.
        let separable = match self.kind {
            BasisKind::Monomial => true,
            BasisKind::TrigPure => n.is_multiple_of(2),
            BasisKind::TrigMixed => n % 2 == 1,
            BasisKind::Custom => self.separable && n == self.len(),
        };
        Ok(BasisSet {
            kind: self.kind,
            omega: self.omega,
            separable,
            funcs: self.funcs[..n].to_vec(),
        })
    }

    pub fn labels(&self) -> Vec<String> {
        self.funcs.iter().map(BasisFn::label).collect()
    }

    /// Spec string such as `trigmix:s=3,omega=1`; custom bases render as `custom:s=N`.
    pub fn spec_string(&self) -> String {
        match self.kind {
            BasisKind::Monomial => format!("monomial:s={}", self.len()),
            BasisKind::Custom => format!("custom:s={}", self.len()),
            k => format!("{k}:s={},omega={}", self.len(), self.omega),
        }
    }
}

impl fmt::Debug for BasisSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BasisSet")
            .field("kind", &self.kind)
            .field("omega", &self.omega)
            .field("separable", &self.separable)
            .field("functions", &self.labels())
            .finish()
    }
}

/// Parsed form of a basis spec string: `monomial:s=3`, `trigmix:s=3,omega=1.0`, `trig:s=4,omega=1.0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub s: usize,
    pub omega: f64,
}

impl BasisSpec {
    pub fn build(&self) -> Result<BasisSet> {
        BasisSet::new(self.kind, self.s, self.omega)
    }
}

impl FromStr for BasisSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (head, params) = text.split_once(':').unwrap_or((text, ""));
        let kind = match head.trim() {
            "monomial" | "poly" => BasisKind::Monomial,
            "trig" => BasisKind::TrigPure,
            "trigmix" => BasisKind::TrigMixed,
            other => {
                return Err(Error::Config(format!(
                    "unknown basis kind '{other}' (expected monomial, trig or trigmix)"
                )))
            }
        };
        let mut s = None;
        let mut omega = 1.0;
        for kv in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("malformed basis parameter '{kv}'")))?;
            match k.trim() {
                "s" => {
                    s = Some(v.trim().parse::<usize>().map_err(|_| {
                        Error::Config(format!("basis stage count '{v}' is not an integer"))
                    })?)
                }
                "omega" | "w" => {
                    omega = v.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!("basis omega '{v}' is not a number"))
                    })?
                }
                other => {
                    return Err(Error::Config(format!("unknown basis parameter '{other}'")))
                }
            }
        }
        let s = s.ok_or_else(|| Error::Config(format!("basis spec '{text}' lacks s=<stages>")))?;
        Ok(BasisSpec { kind, s, omega })
    }
}
