//! Real stability intervals of a fitted method as omega h grows.

use feptrkn::methods::method;
use feptrkn::stability::{scan_region, scan_region_with};

fn main() -> feptrkn::Result<()> {
    let plain = scan_region(&method("eptrkn52", 1.0)?, 0.0, -20.0, 4000)?;
    println!("eptrkn52 boundary {:.4}", plain.boundary);
    let fitted = method("feptrkn52", 1.0)?;
    for k in 0..=8 {
        let nu = 0.5 * k as f64;
        let scan = scan_region(&fitted, nu, -20.0, 4000)?;
        // rho exceeds 1 by a tiny margin near z = 0; a looser test shows the interval beyond it
        let loose = scan_region_with(&fitted, nu, -20.0, 4000, 1e-2)?;
        println!("omega h = {nu:.1}: boundary {:>9.4}, with slack 1e-2 {:>9.4}", scan.boundary, loose.boundary);
    }
    Ok(())
}
