//! Error against function evaluations for fitted and unfitted methods.

use feptrkn::cli::{parse_tols, wp_rows};
use feptrkn::integrator::{LteMode, StartMode};
use feptrkn::methods::method;
use feptrkn::problems::bett;

fn main() -> feptrkn::Result<()> {
    let p = bett();
    let tols = parse_tols("1e-4:1e-10")?;
    for name in ["eptrkn84", "feptrkn84"] {
        let m = method(name, 1.0)?;
        println!("{name}");
        for r in wp_rows(&m, &p, &tols, LteMode::Position, StartMode::classical(m.stages()))? {
            println!("  tol {:.0e}: error {:.2e} with {} evaluations", r.tol, r.error, r.nfe);
        }
    }
    Ok(())
}
