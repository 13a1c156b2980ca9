//! The explicit pseudo two-step iteration
//!
//! ```text
//! y_{n+1}  = y_n + h y'_n + h^2 b^T F_n
//! y'_{n+1} = y'_n + h d^T F_n
//! Y_{n+1}  = e y_{n+1} + c h y'_{n+1} + h^2 A F_n
//! ```
//!
//! where `F_n[i] = f(t_n + c_i h, Y_n[i])` are the only right-hand side
//! evaluations of step `n`. Fixed-step and adaptive drivers, starting values,
//! dense output and error measures live here.

use crate::coeffs::{CoefficientSource, CoefficientTableau};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::methods::Method;
use crate::problems::Problem;
use crate::starter;

/// Everything carried from step `n` to step `n + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    /// Step counter `n`.
    pub index: usize,
    pub t: f64,
    /// Size of the step the stage values belong to.
    pub h: f64,
    pub y: Vec<f64>,
    pub yp: Vec<f64>,
    /// Rounding residues of `y` and `yp` carried by the compensated update.
    pub y_lo: Vec<f64>,
    pub yp_lo: Vec<f64>,
    /// `stages[i] ~ y(t + c_i h)`.
    pub stages: Vec<Vec<f64>>,
    /// `fev[i] = f(t + c_i h, stages[i])`.
    pub fev: Vec<Vec<f64>>,
}

/// How the first stage vector is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMode {
    /// Stage values from the problem's exact solution.
    Exact,
    /// A classical embedded one-step method run to local accuracy `h^(order_target + 1)`.
    Classical { order_target: u32 },
}

impl StartMode {
    /// Classical start accurate enough for the superconvergent step order (`s + 2`).
    pub fn classical(s: usize) -> Self {
        StartMode::Classical {
            order_target: s as u32 + 2,
        }
    }
}

/// Starter tolerance for a stage vector of step `h`: `h^(target+1)`, kept within
/// `[1e-14, 1e-12]` so that it is neither unreachable in double precision nor
/// coarser than the errors the tests measure.
pub fn starter_tolerance(h: f64, order_target: u32) -> f64 {
    h.abs().powi(order_target as i32 + 1).clamp(1e-14, 1e-12)
}

fn eval_stages(
    problem: &Problem,
    t: f64,
    h: f64,
    c: &[f64],
    stages: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let m = problem.dim();
    stages
        .iter()
        .zip(c)
        .map(|(y, ci)| {
            let mut out = vec![0.0; m];
            problem.rhs(t + ci * h, y, &mut out)?;
            Ok(out)
        })
        .collect()
}

/// Starting stage values at `(t, y, yp)` for a first step of size `h`; evaluates
/// `f` once per stage. Also returns the classical starter's own evaluation count.
pub fn start_stages_at(
    problem: &Problem,
    c: &[f64],
    t: f64,
    y: &[f64],
    yp: &[f64],
    h: f64,
    mode: StartMode,
) -> Result<(StepState, usize)> {
    let targets: Vec<f64> = c.iter().map(|ci| t + ci * h).collect();
    let (stages, extra) = match mode {
        StartMode::Exact => {
            if !problem.has_exact() {
                return Err(Error::UnsupportedMetric(format!(
                    "exact starting values need an exact solution, which {} lacks",
                    problem.name
                )));
            }
            let st: Vec<Vec<f64>> = targets.iter().map(|&tt| problem.exact(tt).unwrap().0).collect();
            (st, 0)
        }
        StartMode::Classical { order_target } => {
            if c.iter().any(|&ci| ci < 0.0) {
                return Err(Error::Startup("negative nodes need backward starting values".into()));
            }
            let tol = starter_tolerance(h, order_target);
            let (res, stats) = starter::integrate_to(problem, t, y, yp, &targets, tol)?;
            (res.into_iter().map(|(y, _)| y).collect(), stats.nfe)
        }
    };
    let fev = eval_stages(problem, t, h, c, &stages)?;
    Ok((
        StepState {
            index: 0,
            t,
            h,
            y: y.to_vec(),
            yp: yp.to_vec(),
            y_lo: vec![0.0; y.len()],
            yp_lo: vec![0.0; y.len()],
            stages,
            fev,
        },
        extra,
    ))
}

/// Starting stage values at the problem's initial point.
pub fn start_stages(problem: &Problem, c: &[f64], h: f64, mode: StartMode) -> Result<StepState> {
    start_stages_at(problem, c, problem.t0, &problem.y0, &problem.yp0, h, mode).map(|(s, _)| s)
}

impl StepState {
    /// A state whose values and stages all come from the exact solution at `t`.
    pub fn exact(problem: &Problem, c: &[f64], t: f64, h: f64) -> Result<StepState> {
        let (y, yp) = problem.exact(t).ok_or_else(|| {
            Error::UnsupportedMetric(format!("{} has no exact solution", problem.name))
        })?;
        start_stages_at(problem, c, t, &y, &yp, h, StartMode::Exact).map(|(s, _)| s)
    }
}

/// Error-free sum: `a + b = s + e` exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `(y_{n+1}, y'_{n+1})` with their rounding residues, from weights `b`, `d` over the
/// evaluations listed in `idx`.
fn advance_over(state: &StepState, idx: &[usize], b: &[f64], d: &[f64]) -> Advanced {
    let h = state.h;
    let m = state.y.len();
    let mut out = Advanced {
        y: vec![0.0; m],
        yp: vec![0.0; m],
        y_lo: vec![0.0; m],
        yp_lo: vec![0.0; m],
    };
    for k in 0..m {
        let fb: f64 = b.iter().zip(idx).map(|(bi, &j)| bi * state.fev[j][k]).sum();
        let fd: f64 = d.iter().zip(idx).map(|(di, &j)| di * state.fev[j][k]).sum();
        let yp_full = state.yp[k] + state.yp_lo[k];
        (out.y[k], out.y_lo[k]) = two_sum(state.y[k], h * yp_full + h * h * fb + state.y_lo[k]);
        (out.yp[k], out.yp_lo[k]) = two_sum(state.yp[k], h * fd + state.yp_lo[k]);
    }
    out
}

fn advance(state: &StepState, b: &[f64], d: &[f64]) -> Advanced {
    let idx: Vec<usize> = (0..b.len()).collect();
    advance_over(state, &idx, b, d)
}

/// Solution values after a step. The `_lo` parts hold the rounding residue of the
/// running sums, so that long fixed-step runs do not accumulate one rounding
/// error per step.
#[derive(Debug, Clone, PartialEq)]
struct Advanced {
    y: Vec<f64>,
    yp: Vec<f64>,
    y_lo: Vec<f64>,
    yp_lo: Vec<f64>,
}

/// `Y_{n+1} = e y_{n+1} + c h' y'_{n+1} + h'^2 A F_n`.
fn next_stages(
    y1: &[f64],
    yp1: &[f64],
    c: &[f64],
    h_next: f64,
    a: &Matrix,
    fev: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let m = y1.len();
    c.iter()
        .enumerate()
        .map(|(i, ci)| {
            (0..m)
                .map(|k| {
                    let af: f64 = a.row(i).iter().zip(fev).map(|(aij, f)| aij * f[k]).sum();
                    y1[k] + ci * h_next * yp1[k] + h_next * h_next * af
                })
                .collect()
        })
        .collect()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// One fixed step: new solution, new stage values and their `s` evaluations.
pub fn step_fixed(
    state: &StepState,
    tableau: &CoefficientTableau,
    c: &[f64],
    problem: &Problem,
) -> Result<StepState> {
    let Advanced { y, yp, y_lo, yp_lo } = advance(state, &tableau.b, &tableau.d);
    let h = state.h;
    let t = state.t + h;
    let stages = next_stages(&y, &yp, c, h, &tableau.a, &state.fev);
    let blow_up = Error::BlowUp {
        step: state.index + 1,
        t,
    };
    if !all_finite(&y) || !all_finite(&yp) || !stages.iter().all(|s| all_finite(s)) {
        return Err(blow_up);
    }
    let fev = eval_stages(problem, t, h, c, &stages)?;
    if !fev.iter().all(|f| all_finite(f)) {
        return Err(blow_up);
    }
    Ok(StepState {
        index: state.index + 1,
        t,
        h,
        y,
        yp,
        y_lo,
        yp_lo,
        stages,
        fev,
    })
}

/// One point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub y: Vec<f64>,
    pub yp: Vec<f64>,
    /// Size of the step that produced this point (0 for the initial point).
    pub h: f64,
    pub lte: Option<f64>,
    pub accepted: bool,
    /// Incremented whenever the two-step recursion is restarted from scratch.
    pub chain: usize,
}

/// Output of an integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub method: String,
    /// All attempted points in order; rejected attempts carry `accepted = false`.
    pub records: Vec<StepRecord>,
    pub nsteps: usize,
    pub nrejects: usize,
    /// Evaluations of `f` by the method itself (`s` per attempted step).
    pub nfe: usize,
    /// Evaluations spent inside the classical starter.
    pub starter_nfe: usize,
    /// Steps retried because the collocation matrix was singular.
    pub singular_retries: usize,
    /// Restarts of the two-step recursion after a rejection that could not be
    /// absorbed by halving within the ratio bounds.
    pub restarts: usize,
}

impl Trajectory {
    fn new(method: &str, problem: &Problem) -> Self {
        Trajectory {
            method: method.to_string(),
            records: vec![StepRecord {
                t: problem.t0,
                y: problem.y0.clone(),
                yp: problem.yp0.clone(),
                h: 0.0,
                lte: None,
                accepted: true,
                chain: 0,
            }],
            nsteps: 0,
            nrejects: 0,
            nfe: 0,
            starter_nfe: 0,
            singular_retries: 0,
            restarts: 0,
        }
    }

    pub fn accepted(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter(|r| r.accepted)
    }

    pub fn last(&self) -> &StepRecord {
        self.accepted().last().expect("trajectory holds the initial point")
    }

    /// Sizes of the accepted steps, in order.
    pub fn step_sizes(&self) -> Vec<f64> {
        self.accepted().skip(1).map(|r| r.h).collect()
    }

    /// `h_{n+1} / h_n` for all consecutive accepted steps.
    pub fn step_ratios(&self) -> Vec<f64> {
        let hs = self.step_sizes();
        hs.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Fixed-step integration over the problem's window.
///
/// `(t_end - t0) / h` must be an integer up to rounding; grid points are
/// `t0 + n h` and the last one is set to `t_end` exactly.
pub fn integrate_fixed(
    problem: &Problem,
    method: &Method,
    h: f64,
    start: StartMode,
) -> Result<Trajectory> {
    let span = problem.span();
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Config(format!("stepsize must be positive, got {h}")));
    }
    let n_steps = (span / h).round();
    if n_steps < 1.0 || ((span / h) - n_steps).abs() > 1e-10 * n_steps.max(1.0) {
        return Err(Error::Config(format!(
            "stepsize {h} does not divide the window length {span}"
        )));
    }
    let n_steps = n_steps as usize;
    let c = method.c();
    let s = c.len();
    let mut src = CoefficientSource::new(&method.basis, c, &[])?;
    let mut traj = Trajectory::new(&method.name, problem);
    let (mut state, extra) =
        start_stages_at(problem, c, problem.t0, &problem.y0, &problem.yp0, h, start)?;
    traj.starter_nfe = extra;
    traj.nfe += s;
    for n in 0..n_steps {
        let tab = src.tableau(state.t, h)?;
        let t_next = if n + 1 == n_steps {
            problem.t_end
        } else {
            problem.t0 + (n + 1) as f64 * h
        };
        if n + 1 == n_steps {
            // the final stage vector would never be used
            let next = advance(&state, &tab.b, &tab.d);
            if !all_finite(&next.y) || !all_finite(&next.yp) {
                return Err(Error::BlowUp { step: n + 1, t: t_next });
            }
            state.y = next.y;
            state.yp = next.yp;
        } else {
            state = step_fixed(&state, &tab, c, problem)?;
            traj.nfe += s;
        }
        state.t = t_next;
        state.index = n + 1;
        traj.nsteps += 1;
        traj.records.push(StepRecord {
            t: t_next,
            y: state.y.clone(),
            yp: state.yp.clone(),
            h,
            lte: None,
            accepted: true,
            chain: 0,
        });
    }
    Ok(traj)
}

/// Integration along a prescribed step sequence, using the variable-step
/// stage update between steps of different size. The steps must add up to the
/// window length (the last point is placed at `t_end`).
pub fn integrate_steps(
    problem: &Problem,
    method: &Method,
    steps: &[f64],
    start: StartMode,
) -> Result<Trajectory> {
    if steps.is_empty() || steps.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(Error::Config("step sequence must be nonempty and positive".into()));
    }
    let total: f64 = steps.iter().sum();
    let span = problem.span();
    if (total - span).abs() > 1e-10 * span {
        return Err(Error::Config(format!(
            "steps add up to {total}, window length is {span}"
        )));
    }
    let c = method.c();
    let s = c.len();
    let mut src = CoefficientSource::new(&method.basis, c, &[])?;
    let mut traj = Trajectory::new(&method.name, problem);
    let (mut state, extra) =
        start_stages_at(problem, c, problem.t0, &problem.y0, &problem.yp0, steps[0], start)?;
    traj.starter_nfe = extra;
    traj.nfe += s;
    for (n, &h) in steps.iter().enumerate() {
        let tab = src.tableau(state.t, h)?;
        let next = advance(&state, &tab.b, &tab.d);
        let t_next = if n + 1 == steps.len() {
            problem.t_end
        } else {
            state.t + h
        };
        if !all_finite(&next.y) || !all_finite(&next.yp) {
            return Err(Error::BlowUp { step: n + 1, t: t_next });
        }
        traj.nsteps += 1;
        traj.records.push(StepRecord {
            t: t_next,
            y: next.y.clone(),
            yp: next.yp.clone(),
            h,
            lte: None,
            accepted: true,
            chain: 0,
        });
        if let Some(&h_next) = steps.get(n + 1) {
            let a = src.variable_a(state.t, h, h_next)?;
            let stages = next_stages(&next.y, &next.yp, c, h_next, &a, &state.fev);
            if !stages.iter().all(|s| all_finite(s)) {
                return Err(Error::BlowUp { step: n + 1, t: t_next });
            }
            let fev = eval_stages(problem, t_next, h_next, c, &stages)?;
            traj.nfe += s;
            state = StepState {
                index: n + 1,
                t: t_next,
                h: h_next,
                y: next.y,
                yp: next.yp,
                y_lo: next.y_lo,
                yp_lo: next.yp_lo,
                stages,
                fev,
            };
        }
    }
    Ok(traj)
}

/// Which differences enter the local error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LteMode {
    /// `||y - y~||`
    Position,
    /// `sqrt(||y - y~||^2 + ||y' - y~'||^2)`
    PositionAndDerivative,
}

/// Step-size control parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepController {
    pub tol: f64,
    pub safety: f64,
    pub grow_max: f64,
    pub shrink_min: f64,
    /// Order of the embedded method.
    pub p_tilde: u32,
    pub lte_mode: LteMode,
    /// First trial step; defaults to `min(span / 10, 0.5 tol^(1/(p~+1)))`.
    pub h0: Option<f64>,
    /// Upper bound on attempted steps.
    pub max_attempts: usize,
}

impl StepController {
    pub fn new(tol: f64, p_tilde: u32) -> Result<Self> {
        let ctrl = StepController {
            tol,
            safety: 0.8,
            grow_max: 2.0,
            shrink_min: 0.5,
            p_tilde,
            lte_mode: LteMode::Position,
            h0: None,
            max_attempts: 10_000_000,
        };
        ctrl.validate()?;
        Ok(ctrl)
    }

    pub fn for_method(tol: f64, method: &Method) -> Result<Self> {
        StepController::new(tol, method.embedded_order)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.tol.is_finite()
            && self.tol > 0.0
            && 0.0 < self.shrink_min
            && self.shrink_min < 1.0
            && 1.0 < self.grow_max
            && self.safety > 0.0
            && self.p_tilde >= 1
            && self.h0.is_none_or(|h| h.is_finite() && h > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid step controller {self:?}")))
        }
    }
}

/// `h min{grow_max, max{shrink_min, safety (TOL/LTE)^(1/(p~+1))}}`; `lte = 0` grows maximally.
pub fn propose_stepsize(h: f64, lte: f64, ctrl: &StepController) -> f64 {
    let ratio = if lte == 0.0 {
        ctrl.grow_max
    } else {
        (ctrl.safety * (ctrl.tol / lte).powf(1.0 / (ctrl.p_tilde as f64 + 1.0)))
            .clamp(ctrl.shrink_min, ctrl.grow_max)
    };
    h * ratio
}

/// The local error estimate from the full and embedded results.
pub fn compute_lte(y: &[f64], yp: &[f64], y_emb: &[f64], yp_emb: &[f64], mode: LteMode) -> f64 {
    let sq = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, z)| (x - z) * (x - z)).sum() };
    match mode {
        LteMode::Position => sq(y, y_emb).sqrt(),
        LteMode::PositionAndDerivative => (sq(y, y_emb) + sq(yp, yp_emb)).sqrt(),
    }
}

/// Next step size given a proposal and the remaining distance: take the rest when it
/// fits, split it in two equal steps when it is less than two proposals, and
/// otherwise follow the proposal. This keeps the remaining distance at least one
/// step long, so the landing never forces a ratio outside `[1/2, 2]`.
fn land(h_prop: f64, remaining: f64) -> (f64, bool) {
    if remaining <= h_prop * (1.0 + 1e-12) {
        (remaining, true)
    } else if remaining < 2.0 * h_prop {
        (0.5 * remaining, false)
    } else {
        (h_prop, false)
    }
}

/// The previously accepted step, needed to rebuild stage values for a new `h`.
struct Accepted {
    t: f64,
    h: f64,
    fev: Vec<Vec<f64>>,
}

/// Adaptive integration with embedded error control.
///
/// After an accepted step `(t_n, h_n)` the next stage vector is built with the
/// variable-step `A(t_n, h_n, h_{n+1})`. A rejected trial is halved and only its
/// stage vector is recomputed; `y_{n+1}` and the previous evaluations stay.
/// Halving stops at `shrink_min * h_n`; if a trial of exactly that size is
/// rejected too, the recursion is restarted from the last accepted point with
/// the classical starter, which is the only way a ratio below `shrink_min`
/// can appear.
pub fn integrate_adaptive(
    problem: &Problem,
    method: &Method,
    ctrl: &StepController,
    start: StartMode,
) -> Result<Trajectory> {
    ctrl.validate()?;
    let c = method.c();
    let s = c.len();
    let span = problem.span();
    let h_min = 1e-12 * span;
    let restart_mode = StartMode::classical(s);
    let mut src = CoefficientSource::new(&method.basis, c, &method.embedded)?;
    let mut traj = Trajectory::new(&method.name, problem);

    let h_init = ctrl
        .h0
        .unwrap_or_else(|| (0.1 * span).min(0.5 * ctrl.tol.powf(1.0 / (ctrl.p_tilde as f64 + 1.0))));
    let (mut h, mut last) = land(h_init, span);
    let mut t = problem.t0;
    let m = problem.dim();
    let mut pos = Advanced {
        y: problem.y0.clone(),
        yp: problem.yp0.clone(),
        y_lo: vec![0.0; m],
        yp_lo: vec![0.0; m],
    };
    let mut prev: Option<Accepted> = None;
    let mut chain = 0;
    let mut first_start = true;

    loop {
        if h < h_min {
            return Err(Error::StepTooSmall { t, h });
        }
        if traj.nsteps + traj.nrejects + traj.singular_retries >= ctrl.max_attempts {
            return Err(Error::Numeric(format!(
                "adaptive integration exceeded {} attempts at t = {t}",
                ctrl.max_attempts
            )));
        }
        // coefficients first: a singular F costs no evaluations
        let coeffs = src
            .tableau(t, h)
            .and_then(|tab| Ok((tab, src.embedded(t, h)?)));
        let (tab, emb) = match coeffs {
            Ok(x) => x,
            Err(Error::Collocation { .. }) => {
                traj.singular_retries += 1;
                h *= 0.5;
                last = false;
                continue;
            }
            Err(e) => return Err(e),
        };
        let state = match &prev {
            None => {
                let mode = if first_start { start } else { restart_mode };
                let (mut st, extra) = start_stages_at(problem, c, t, &pos.y, &pos.yp, h, mode)?;
                traj.starter_nfe += extra;
                st.y_lo.clone_from(&pos.y_lo);
                st.yp_lo.clone_from(&pos.yp_lo);
                st
            }
            Some(p) => {
                let a = match src.variable_a(p.t, p.h, h) {
                    Ok(a) => a,
                    Err(Error::Collocation { .. }) => {
                        traj.singular_retries += 1;
                        h *= 0.5;
                        last = false;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let stages = next_stages(&pos.y, &pos.yp, c, h, &a, &p.fev);
                let fev = if stages.iter().all(|s| all_finite(s)) {
                    eval_stages(problem, t, h, c, &stages)?
                } else {
                    vec![vec![f64::NAN; m]; s]
                };
                StepState {
                    index: traj.nsteps,
                    t,
                    h,
                    y: pos.y.clone(),
                    yp: pos.yp.clone(),
                    y_lo: pos.y_lo.clone(),
                    yp_lo: pos.yp_lo.clone(),
                    stages,
                    fev,
                }
            }
        };
        traj.nfe += s;

        let next = advance(&state, &tab.b, &tab.d);
        let emb_next = advance_over(&state, &emb.index_map, &emb.b_tilde, &emb.d_tilde);
        let lte = compute_lte(&next.y, &next.yp, &emb_next.y, &emb_next.yp, ctrl.lte_mode);
        let t1 = if last { problem.t_end } else { t + h };

        if !(lte <= ctrl.tol) {
            traj.nrejects += 1;
            traj.records.push(StepRecord {
                t: t1,
                y: next.y,
                yp: next.yp,
                h,
                lte: Some(lte),
                accepted: false,
                chain,
            });
            h = match &prev {
                Some(p) if h <= ctrl.shrink_min * p.h * (1.0 + 1e-12) => {
                    prev = None;
                    chain += 1;
                    traj.restarts += 1;
                    0.5 * h
                }
                Some(p) => (0.5 * h).max(ctrl.shrink_min * p.h),
                None => 0.5 * h,
            };
            last = false;
            first_start = false;
            continue;
        }

        traj.nsteps += 1;
        traj.records.push(StepRecord {
            t: t1,
            y: next.y.clone(),
            yp: next.yp.clone(),
            h,
            lte: Some(lte),
            accepted: true,
            chain,
        });
        if last {
            break;
        }
        first_start = false;
        prev = Some(Accepted {
            t,
            h,
            fev: state.fev,
        });
        t = t1;
        pos = next;
        let h_prop = propose_stepsize(h, lte, ctrl);
        (h, last) = land(h_prop, problem.t_end - t);
    }
    Ok(traj)
}

/// Continuous extension at `t_n + xi h_n` from a state's cached evaluations.
pub fn dense_eval(method: &Method, state: &StepState, xi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if xi == 0.0 {
        return Ok((state.y.clone(), state.yp.clone()));
    }
    let src = CoefficientSource::new(&method.basis, method.c(), &[])?;
    let dc = src.dense(state.t, state.h, xi)?;
    let sub = StepState {
        h: xi * state.h,
        ..state.clone()
    };
    let out = advance(&sub, &dc.b_xi, &dc.d_xi);
    Ok((out.y, out.yp))
}

fn exact_or_err(problem: &Problem, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    problem.exact(t).ok_or_else(|| {
        Error::UnsupportedMetric(format!(
            "problem {} has no exact solution to measure errors against",
            problem.name
        ))
    })
}

/// `log10` of the largest absolute position error over accepted points and components.
/// A trajectory without error gives `-inf`.
pub fn compute_ncd(traj: &Trajectory, problem: &Problem) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for r in traj.accepted() {
        let (y, _) = exact_or_err(problem, r.t)?;
        for (a, b) in r.y.iter().zip(&y) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst.log10())
}

/// Euclidean norm of the position error at the final point.
pub fn endpoint_error(traj: &Trajectory, problem: &Problem) -> Result<f64> {
    let last = traj.last();
    let (y, _) = exact_or_err(problem, last.t)?;
    Ok(last
        .y
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods::method;
    use crate::problems::{bett, dahlquist};

    #[test]
    fn free_motion_step() {
        let p = dahlquist(0.0, 1.0, 2.0, 1.0).unwrap();
        let m = method("eptrkn52", 1.0).unwrap();
        let c = m.c().to_vec();
        let st = start_stages(&p, &c, 0.5, StartMode::Exact).unwrap();
        let mut src = CoefficientSource::new(&m.basis, &c, &[]).unwrap();
        let tab = src.tableau(0.0, 0.5).unwrap();
        let next = step_fixed(&st, &tab, &c, &p).unwrap();
        assert!((next.y[0] - 2.0).abs() < 1e-15);
        assert!((next.yp[0] - 2.0).abs() < 1e-15);
        for (i, ci) in c.iter().enumerate() {
            assert!((next.stages[i][0] - (2.0 + ci)).abs() < 1e-14);
        }
    }

    #[test]
    fn one_step_trajectory() {
        let p = dahlquist(-1.0, 1.0, 0.0, 0.5).unwrap();
        let m = method("eptrkn52", 1.0).unwrap();
        let tr = integrate_fixed(&p, &m, 0.5, StartMode::Exact).unwrap();
        assert_eq!(tr.records.len(), 2);
        assert_eq!(tr.nfe, 3);
        assert_eq!(tr.last().t, 0.5);
    }

    #[test]
    fn stepsize_must_divide_window() {
        let p = bett();
        let m = method("eptrkn52", 1.0).unwrap();
        assert!(matches!(
            integrate_fixed(&p, &m, 0.3, StartMode::Exact),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn proposal_formula() {
        let ctrl = StepController::new(1e-8, 4).unwrap();
        assert!((propose_stepsize(1.0, 1e-8, &ctrl) - 0.8).abs() < 1e-15);
        assert_eq!(propose_stepsize(1.0, 1e-14, &ctrl), 2.0);
        assert_eq!(propose_stepsize(1.0, 1e-2, &ctrl), 0.5);
        assert_eq!(propose_stepsize(1.0, 0.0, &ctrl), 2.0);
    }

    #[test]
    fn lte_modes() {
        let y = [1.0, 2.0];
        assert_eq!(compute_lte(&y, &y, &y, &y, LteMode::Position), 0.0);
        let e = compute_lte(&y, &y, &[1.0, 2.5], &y, LteMode::PositionAndDerivative);
        assert_eq!(e, compute_lte(&y, &y, &[1.0, 2.5], &y, LteMode::Position));
    }

    #[test]
    fn landing_keeps_ratio() {
        assert_eq!(land(1.0, 0.9), (0.9, true));
        assert_eq!(land(1.0, 1.5), (0.75, false));
        assert_eq!(land(1.0, 3.0), (1.0, false));
    }

    #[test]
    fn free_motion_adaptive_doubles() {
        let p = dahlquist(0.0, 1.0, 2.0, 100.0).unwrap();
        let m = method("eptrkn52", 1.0).unwrap();
        let ctrl = StepController::for_method(1e-8, &m).unwrap();
        let tr = integrate_adaptive(&p, &m, &ctrl, StartMode::Exact).unwrap();
        assert_eq!(tr.nrejects, 0);
        assert!(tr
            .step_ratios()
            .iter()
            .all(|r| (0.5 - 1e-12..=2.0 + 1e-12).contains(r)));
        assert_eq!(tr.last().t, 100.0);
        assert!(endpoint_error(&tr, &p).unwrap() < 1e-10);
    }
}
