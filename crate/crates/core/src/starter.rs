//! Classical one-step integrator used to generate starting stage values.
//!
//! Dormand-Prince 5(4) with local extrapolation, applied to the first-order
//! system `z = (y, y')`, `z' = (y', f(t, y))`.

use crate::error::{Error, Result};
use crate::problems::Problem;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 1_000_000;

/// Counters from one starter run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StarterStats {
    pub steps: usize,
    pub rejects: usize,
    pub nfe: usize,
}

fn deriv(problem: &Problem, t: f64, z: &[f64], out: &mut [f64]) -> Result<()> {
    let m = z.len() / 2;
    out[..m].copy_from_slice(&z[m..]);
    let (_, acc) = out.split_at_mut(m);
    problem.rhs(t, &z[..m], acc)
}

/// Integrates from `(t0, y0, yp0)` and returns `(y, y')` at each requested time.
///
/// Targets must be `>= t0`; they are visited in increasing order and hit exactly.
/// Mixed absolute/relative tolerance `tol` on every component of `(y, y')`.
pub fn integrate_to(
    problem: &Problem,
    t0: f64,
    y0: &[f64],
    yp0: &[f64],
    targets: &[f64],
    tol: f64,
) -> Result<(Vec<(Vec<f64>, Vec<f64>)>, StarterStats)> {
    let m = y0.len();
    let n = 2 * m;
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| targets[a].partial_cmp(&targets[b]).unwrap());
    if let Some(&first) = order.first() {
        if !(targets[first] >= t0) {
            return Err(Error::Startup(format!(
                "starter target {} precedes the start time {t0}",
                targets[first]
            )));
        }
    }

    let mut z: Vec<f64> = y0.iter().chain(yp0).copied().collect();
    let mut t = t0;
    let mut out = vec![(Vec::new(), Vec::new()); targets.len()];
    let mut stats = StarterStats::default();
    let mut k = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut z_new = vec![0.0; n];
    deriv(problem, t, &z, &mut k[0])?;
    stats.nfe += 1;

    let span = order.last().map(|&i| targets[i] - t0).unwrap_or(0.0);
    let mut h = (0.1 * tol.powf(0.2)).min(span).max(f64::MIN_POSITIVE);

    for &idx in &order {
        let target = targets[idx];
        while t < target {
            if stats.steps + stats.rejects >= MAX_STEPS {
                return Err(Error::Startup(format!(
                    "starter exceeded {MAX_STEPS} steps before t = {target}"
                )));
            }
            let last = t + h >= target;
            let step = if last { target - t } else { h };
            if step <= 4.0 * f64::EPSILON * t.abs().max(1.0) && !last {
                return Err(Error::Startup(format!(
                    "starter step size underflow at t = {t} (tolerance {tol:.1e})"
                )));
            }
            for s in 1..7 {
                for i in 0..n {
                    let acc: f64 = (0..s).map(|j| A[s][j] * k[j][i]).sum();
                    stage[i] = z[i] + step * acc;
                }
                deriv(problem, t + C[s] * step, &stage, &mut k[s])?;
                stats.nfe += 1;
            }
            // stage 7 is evaluated at the fifth-order solution itself
            z_new.copy_from_slice(&stage);
            let mut err: f64 = 0.0;
            for i in 0..n {
                let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * step;
                let sc = tol + tol * z[i].abs().max(z_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Startup(format!("starter produced non-finite values at t = {t}")));
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                stats.steps += 1;
                t = if last { target } else { t + step };
                z.copy_from_slice(&z_new);
                k.swap(0, 6);
                if !last {
                    h = step * fac;
                }
            } else {
                stats.rejects += 1;
                h = step * fac.min(1.0);
            }
        }
        out[idx] = (z[..m].to_vec(), z[m..].to_vec());
    }
    Ok((out, stats))
}
