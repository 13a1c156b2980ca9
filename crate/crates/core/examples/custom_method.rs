//! A method built from a user basis: exact for y = cosh(t), y = sinh(t) and t^2.

use feptrkn::basis::{BasisSet, CustomFn};
use feptrkn::integrator::{endpoint_error, integrate_fixed, StartMode};
use feptrkn::methods::{named_nodes, Method};
use feptrkn::problems::Problem;

fn main() -> feptrkn::Result<()> {
    let basis = BasisSet::custom(
        vec![
            CustomFn::new("t^2", |t| t * t, |t| 2.0 * t, |_| 2.0),
            CustomFn::new("cosh", f64::cosh, f64::sinh, f64::cosh),
            CustomFn::new("sinh", f64::sinh, f64::cosh, f64::sinh),
        ],
        true,
    )?;
    let m = Method::new("hyp3", basis, named_nodes("eptrkn52")?, None, 3, 2)?;

    // y'' = y + 2 - t^2 with y = cosh t + t^2
    let p = Problem::new("hyp", 0.0, 4.0, vec![1.0], vec![0.0], |t, y, out| {
        out[0] = y[0] + 2.0 - t * t;
        Ok(())
    })?
    .with_exact(|t| (vec![t.cosh() + t * t], vec![t.sinh() + 2.0 * t]));

    for h in [0.5, 0.25, 0.125] {
        let tr = integrate_fixed(&p, &m, h, StartMode::Exact)?;
        println!("h = {h}: error {:.2e}", endpoint_error(&tr, &p)?);
    }
    Ok(())
}
