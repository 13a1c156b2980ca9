//! Tableau of a fitted method, and how it approaches the polynomial one as h -> 0.

use feptrkn::coeffs::{tableau_residuals, CoefficientSource};
use feptrkn::methods::method;

fn main() -> feptrkn::Result<()> {
    let fitted = method("feptrkn52", 2.0)?;
    let plain = method("eptrkn52", 2.0)?;
    let mut src = CoefficientSource::new(&fitted.basis, fitted.c(), &fitted.embedded)?;
    let limit = CoefficientSource::new(&plain.basis, plain.c(), &[])?.tableau(0.0, 1.0)?;

    println!("{:>10} {:>12} {:>12}", "h", "|b - b0|", "residual");
    for k in 0..8 {
        let h = 0.8 / 4f64.powi(k);
        let tab = src.tableau(0.0, h)?;
        let gap = tab.b.iter().zip(&limit.b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let res = tableau_residuals(&fitted.basis, fitted.c(), &tab).max();
        println!("{h:>10.3e} {gap:>12.3e} {res:>12.3e}");
    }

    let tab = src.tableau(0.0, 0.5)?;
    println!("\nh = 0.5, omega = 2:\nb = {:?}\nd = {:?}", tab.b, tab.d);
    Ok(())
}
