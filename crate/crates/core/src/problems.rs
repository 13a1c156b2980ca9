//! Test problems `y'' = f(t, y)` with closed-form solutions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Right-hand side `f(t, y)`, written into the output slice.
pub type RhsFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync>;
/// Exact solution `t -> (y(t), y'(t))`.
pub type ExactFn = Arc<dyn Fn(f64) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// A second-order initial value problem on `[t0, t_end]`.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub t0: f64,
    pub t_end: f64,
    pub y0: Vec<f64>,
    pub yp0: Vec<f64>,
    f: RhsFn,
    exact: Option<ExactFn>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("t0", &self.t0)
            .field("t_end", &self.t_end)
            .field("y0", &self.y0)
            .field("yp0", &self.yp0)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        t0: f64,
        t_end: f64,
        y0: Vec<f64>,
        yp0: Vec<f64>,
        f: impl Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static,
    ) -> Result<Self> {
        if y0.is_empty() || y0.len() != yp0.len() {
            return Err(Error::Config(format!(
                "initial value has {} components and derivative {}",
                y0.len(),
                yp0.len()
            )));
        }
        if !(t0.is_finite() && t_end.is_finite() && t_end > t0) {
            return Err(Error::Config(format!("invalid window [{t0}, {t_end}]")));
        }
        Ok(Problem {
            name: name.into(),
            t0,
            t_end,
            y0,
            yp0,
            f: Arc::new(f),
            exact: None,
        })
    }

    pub fn with_exact(
        mut self,
        exact: impl Fn(f64) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static,
    ) -> Self {
        self.exact = Some(Arc::new(exact));
        self
    }

    /// Same problem over a different end time.
    pub fn with_end(mut self, t_end: f64) -> Result<Self> {
        if !(t_end.is_finite() && t_end > self.t0) {
            return Err(Error::Config(format!("invalid end time {t_end}")));
        }
        self.t_end = t_end;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    pub fn span(&self) -> f64 {
        self.t_end - self.t0
    }

    #[inline]
    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(t, y, out)
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact(&self, t: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        self.exact.as_ref().map(|e| e(t))
    }
}

/// `y1'' = -y1 + 0.001 cos t`, `y2'' = -y2 + 0.001 sin t` on `[0, 40]`.
pub fn bett() -> Problem {
    Problem::new("bett", 0.0, 40.0, vec![1.0, 0.0], vec![0.0, 0.9995], |t, y, out| {
        out[0] = -y[0] + 0.001 * t.cos();
        out[1] = -y[1] + 0.001 * t.sin();
        Ok(())
    })
    .expect("valid problem")
    .with_exact(|t| {
        let (s, c) = t.sin_cos();
        (
            vec![c + 0.0005 * t * s, s - 0.0005 * t * c],
            vec![
                -s + 0.0005 * (s + t * c),
                c - 0.0005 * (c - t * s),
            ],
        )
    })
}

/// Solves Kepler's equation `u = t + e sin u` for `0 <= e < 1`.
///
/// Newton's method from `u = t`, kept inside the bracket `[t - e, t + e]` by
/// bisection fallback, run to full precision. Fails if the final residual
/// `|u - e sin u - t|` exceeds `1e-14 max(1, |t|)`.
pub fn solve_kepler(t: f64, e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) || !t.is_finite() {
        return Err(Error::Config(format!(
            "Kepler's equation needs finite t and 0 <= e < 1 (t = {t}, e = {e})"
        )));
    }
    if e == 0.0 {
        return Ok(t);
    }
    let g = |u: f64| (u - t) - e * u.sin();
    let (mut lo, mut hi) = (t - e, t + e);
    let mut u = t;
    for _ in 0..100 {
        let gu = g(u);
        if gu == 0.0 {
            break;
        }
        if gu > 0.0 {
            hi = hi.min(u);
        } else {
            lo = lo.max(u);
        }
        let mut next = u - gu / (1.0 - e * u.cos());
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - u).abs() <= 4.0 * f64::EPSILON * u.abs().max(1.0);
        u = next;
        if done {
            break;
        }
    }
    let res = g(u).abs();
    if res > 1e-14 * t.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "Kepler iteration stalled at t = {t}, e = {e} (residual {res:.3e})"
        )));
    }
    Ok(u)
}

/// Two-body problem `y'' = -y / |y|^3` on `[0, 20]` with eccentricity `e`.
pub fn newt(e: f64) -> Result<Problem> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::Config(format!("eccentricity must satisfy 0 <= e < 1, got {e}")));
    }
    let v0 = ((1.0 + e) / (1.0 - e)).sqrt();
    let q = (1.0 - e * e).sqrt();
    Ok(Problem::new(
        format!("newt:e={e}"),
        0.0,
        20.0,
        vec![1.0 - e, 0.0],
        vec![0.0, v0],
        |t, y, out| {
            let r2 = y[0] * y[0] + y[1] * y[1];
            if r2 == 0.0 {
                return Err(Error::Singularity {
                    t,
                    reason: "orbit passed through the origin".into(),
                });
            }
            let k = -1.0 / (r2 * r2.sqrt());
            out[0] = k * y[0];
            out[1] = k * y[1];
            Ok(())
        },
    )?
    .with_exact(move |t| {
        let u = solve_kepler(t, e).expect("e < 1 and finite t");
        let (s, c) = u.sin_cos();
        let du = 1.0 / (1.0 - e * c);
        (vec![c - e, q * s], vec![-s * du, q * c * du])
    }))
}

/// Linear test equation `y'' = lambda y` on `[0, t_end]`.
pub fn dahlquist(lambda: f64, y0: f64, yp0: f64, t_end: f64) -> Result<Problem> {
    if !lambda.is_finite() {
        return Err(Error::Config(format!("lambda must be finite, got {lambda}")));
    }
    Ok(Problem::new(
        format!("dahlquist:lambda={lambda}"),
        0.0,
        t_end,
        vec![y0],
        vec![yp0],
        move |_, y, out| {
            out[0] = lambda * y[0];
            Ok(())
        },
    )?
    .with_exact(move |t| {
        if lambda < 0.0 {
            let w = (-lambda).sqrt();
            let (s, c) = (w * t).sin_cos();
            (vec![y0 * c + yp0 / w * s], vec![-y0 * w * s + yp0 * c])
        } else if lambda == 0.0 {
            (vec![y0 + yp0 * t], vec![yp0])
        } else {
            let w = lambda.sqrt();
            let (s, c) = ((w * t).sinh(), (w * t).cosh());
            (vec![y0 * c + yp0 / w * s], vec![y0 * w * s + yp0 * c])
        }
    }))
}

/// Parsed problem name: `bett`, `newt:e=0.01`, `dahlquist:lambda=-1[,y0=1,yp0=0,tend=10]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemSpec {
    Bett,
    Newt { e: f64 },
    Dahlquist { lambda: f64, y0: f64, yp0: f64, t_end: f64 },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem> {
        match *self {
            ProblemSpec::Bett => Ok(bett()),
            ProblemSpec::Newt { e } => newt(e),
            ProblemSpec::Dahlquist {
                lambda,
                y0,
                yp0,
                t_end,
            } => dahlquist(lambda, y0, yp0, t_end),
        }
    }
}

impl FromStr for ProblemSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (head, params) = text.split_once(':').unwrap_or((text, ""));
        let mut kv = Vec::new();
        for item in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("malformed problem parameter '{item}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("problem parameter '{item}' is not a number")))?;
            kv.push((k.trim().to_string(), v));
        }
        let take = |name: &str, default: Option<f64>| -> Result<f64> {
            kv.iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| *v)
                .or(default)
                .ok_or_else(|| Error::Config(format!("problem '{text}' needs {name}=<value>")))
        };
        let allow = |names: &[&str]| -> Result<()> {
            match kv.iter().find(|(k, _)| !names.contains(&k.as_str())) {
                Some((k, _)) => Err(Error::Config(format!(
                    "unknown parameter '{k}' for problem '{}'",
                    head.trim()
                ))),
                None => Ok(()),
            }
        };
        match head.trim() {
            "bett" => {
                allow(&[])?;
                Ok(ProblemSpec::Bett)
            }
            "newt" => {
                allow(&["e"])?;
                Ok(ProblemSpec::Newt {
                    e: take("e", Some(0.01))?,
                })
            }
            "dahlquist" => {
                allow(&["lambda", "y0", "yp0", "tend"])?;
                Ok(ProblemSpec::Dahlquist {
                    lambda: take("lambda", None)?,
                    y0: take("y0", Some(1.0))?,
                    yp0: take("yp0", Some(0.0))?,
                    t_end: take("tend", Some(10.0))?,
                })
            }
            other => Err(Error::Config(format!(
                "unknown problem '{other}' (expected bett, newt:e=<e> or dahlquist:lambda=<l>)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn bett_initial_data() {
        let p = bett();
        let (y, yp) = p.exact(0.0).unwrap();
        assert_eq!(y, p.y0);
        assert!((yp[1] - 0.9995).abs() < 1e-15 && yp[0] == 0.0);
        let (y, _) = p.exact(2.0 * PI).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15);
        let mut f = [0.0; 2];
        p.rhs(0.0, &[1.0, 0.0], &mut f).unwrap();
        assert_eq!(f, [-0.999, 0.0]);
        assert_eq!((p.t0, p.t_end), (0.0, 40.0));
    }

    #[test]
    fn kepler_trivial_cases() {
        assert_eq!(solve_kepler(3.7, 0.0).unwrap(), 3.7);
        assert_eq!(solve_kepler(0.0, 0.5).unwrap(), 0.0);
        let u = solve_kepler(20.0, 0.01).unwrap();
        assert!((u - 0.01 * u.sin() - 20.0).abs() <= 1e-14);
        assert!(solve_kepler(1.0, 1.0).is_err());
    }

    #[test]
    fn newt_initial_data_and_circle() {
        let p = newt(0.01).unwrap();
        let (y, yp) = p.exact(0.0).unwrap();
        assert!((y[0] - 0.99).abs() < 1e-15 && y[1] == 0.0);
        assert!((yp[1] - p.yp0[1]).abs() < 1e-15);
        let c = newt(0.0).unwrap();
        for k in 0..20 {
            let (y, _) = c.exact(k as f64).unwrap();
            assert!(((y[0] * y[0] + y[1] * y[1]).sqrt() - 1.0).abs() < 1e-15);
        }
        let mut out = [0.0; 2];
        assert!(matches!(
            p.rhs(1.0, &[0.0, 0.0], &mut out),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn dahlquist_exact() {
        let p = dahlquist(0.0, 1.0, 2.0, 3.0).unwrap();
        assert_eq!(p.exact(1.5).unwrap().0, vec![4.0]);
        let p = dahlquist(-1.0, 1.0, 0.0, 3.0).unwrap();
        assert!((p.exact(1.0).unwrap().0[0] - 1f64.cos()).abs() < 1e-16);
    }

    #[test]
    fn parse_specs() {
        assert_eq!("bett".parse::<ProblemSpec>().unwrap(), ProblemSpec::Bett);
        assert_eq!(
            "newt:e=0.01".parse::<ProblemSpec>().unwrap(),
            ProblemSpec::Newt { e: 0.01 }
        );
        assert_eq!(
            "dahlquist:lambda=-1".parse::<ProblemSpec>().unwrap(),
            ProblemSpec::Dahlquist {
                lambda: -1.0,
                y0: 1.0,
                yp0: 0.0,
                t_end: 10.0
            }
        );
        assert!("orbit".parse::<ProblemSpec>().is_err());
        assert!("newt:q=1".parse::<ProblemSpec>().is_err());
        assert!("dahlquist".parse::<ProblemSpec>().is_err());
    }
}
