//! Fixed-step convergence on the two-body orbit with exact starting values.

use feptrkn::cli::converge_rows;
use feptrkn::integrator::StartMode;
use feptrkn::methods::method;
use feptrkn::problems::bett;

fn main() -> feptrkn::Result<()> {
    let p = bett();
    for name in ["eptrkn52", "eptrkn73", "feptrkn52", "feptrkn73"] {
        let m = method(name, 1.0)?;
        println!("{name}");
        for r in converge_rows(&m, &p, 0.5, 7, StartMode::Exact)? {
            let est = r.order_est.map_or(String::new(), |e| format!("{e:.2}"));
            println!("  h = {:<10} ncd = {:>6.2}  nfe = {:>6}  order {est}", r.h, r.ncd, r.nfe);
        }
    }
    Ok(())
}
