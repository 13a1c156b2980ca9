//! Continuous output inside one step, checked against the exact orbit.

use feptrkn::integrator::{dense_eval, StepState};
use feptrkn::methods::method;
use feptrkn::problems::bett;

fn main() -> feptrkn::Result<()> {
    let p = bett();
    let m = method("feptrkn84", 1.0)?;
    let (t, h) = (3.0, 0.25);
    let state = StepState::exact(&p, m.c(), t, h)?;
    println!("{:>6} {:>12} {:>12}", "xi", "err y", "err y'");
    for k in 0..=8 {
        let xi = k as f64 / 8.0;
        let (y, yp) = dense_eval(&m, &state, xi)?;
        let (ey, eyp) = p.exact(t + xi * h).expect("bett has an exact solution");
        let e = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        println!("{xi:>6.3} {:>12.3e} {:>12.3e}", e(&y, &ey), e(&yp, &eyp));
    }
    Ok(())
}
