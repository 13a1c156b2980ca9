//! Adaptive integration of an eccentric Kepler orbit.

use feptrkn::integrator::{endpoint_error, integrate_adaptive, StartMode, StepController};
use feptrkn::methods::method;
use feptrkn::problems::newt;

fn main() -> feptrkn::Result<()> {
    let p = newt(0.3)?;
    let m = method("feptrkn73", 1.0)?;
    for tol in [1e-6, 1e-8, 1e-10] {
        let ctrl = StepController::for_method(tol, &m)?;
        let tr = integrate_adaptive(&p, &m, &ctrl, StartMode::classical(m.stages()))?;
        let hs = tr.step_sizes();
        let (lo, hi) = hs.iter().fold((f64::MAX, 0.0f64), |(a, b), &h| (a.min(h), b.max(h)));
        println!(
            "tol {tol:.0e}: error {:.2e}, {} steps, {} rejected, {} evaluations, h in [{lo:.3}, {hi:.3}]",
            endpoint_error(&tr, &p)?,
            tr.nsteps,
            tr.nrejects,
            tr.nfe + tr.starter_nfe
        );
    }
    Ok(())
}
