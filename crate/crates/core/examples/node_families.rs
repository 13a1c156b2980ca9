//! Collocation nodes for every built-in method, plus a few hand-picked families.

use feptrkn::methods::{named_nodes, METHOD_NAMES};
use feptrkn::nodes::{solve_nodes, NodeExtra};

fn main() -> feptrkn::Result<()> {
    for name in METHOD_NAMES.iter().filter(|n| !n.starts_with('f')) {
        let nv = named_nodes(name)?;
        println!("{name}: {:?}", nv.c);
    }

    // two stages with maximal boost are the Gauss points
    println!("gauss2: {:?}", solve_nodes(2, 2, &[])?.c);

    let nv = solve_nodes(6, 3, &[NodeExtra::ContainsZero, NodeExtra::ContainsOne])?;
    println!("s = 6 with c0, c1:");
    for (cond, r) in nv.residuals() {
        println!("  {cond:<24} residual {r:+.2e}");
    }
    Ok(())
}
