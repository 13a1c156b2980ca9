//! Collocation parameters from superconvergence orthogonality conditions.
//!
//! The node polynomial `p(x) = prod (x - c_i) = x^s + a_{s-1} x^{s-1} + ... + a_0`
//! is pinned down by `s` linear conditions on `(a_0, ..., a_{s-1})`:
//!
//! | boost | conditions                                                        |
//! |-------|-------------------------------------------------------------------|
//! | 1     | `int_0^1 p = 0`                                                   |
//! | 2     | `int_0^1 x^k p = 0`, k = 0, 1                                     |
//! | 3     | `int_0^1 x^k p = 0`, k = 0, 1, 2, and `int_1^2 (x - 2)^2 p = 0`   |
//!
//! with optional extras (`int_0^2 p = 0`, `p(0) = 0`, `p(1) = 0`) closing the
//! system when the boost alone gives fewer than `s` equations. Every moment is a
//! rational number; the system is assembled and solved exactly and only the
//! resulting coefficients are rounded. Then the roots of `p` are extracted from its companion matrix and
//! polished by Newton's method.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly;

type Q = Ratio<i128>;

/// Auxiliary constraint used to complete the node system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeExtra {
    /// `int_0^2 p(x) dx = 0`
    IntegralZeroToTwo,
    /// `0` is a node: `p(0) = 0`
    ContainsZero,
    /// `1` is a node: `p(1) = 0`
    ContainsOne,
}

impl fmt::Display for NodeExtra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeExtra::IntegralZeroToTwo => "int02",
            NodeExtra::ContainsZero => "c0",
            NodeExtra::ContainsOne => "c1",
        })
    }
}

impl FromStr for NodeExtra {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "int02" => Ok(NodeExtra::IntegralZeroToTwo),
            "c0" => Ok(NodeExtra::ContainsZero),
            "c1" => Ok(NodeExtra::ContainsOne),
            other => Err(Error::Config(format!(
                "unknown node constraint '{other}' (expected int02, c0 or c1)"
            ))),
        }
    }
}

/// One linear condition on the node polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeCondition {
    /// `int_0^1 x^k p(x) dx = 0`
    Moment(u32),
    /// `int_1^2 (x - 2)^2 p(x) dx = 0`
    ShiftedWeight,
    Extra(NodeExtra),
}

impl fmt::Display for NodeCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeCondition::Moment(0) => write!(f, "int_0^1 p"),
            NodeCondition::Moment(k) => write!(f, "int_0^1 x^{k} p"),
            NodeCondition::ShiftedWeight => write!(f, "int_1^2 (x-2)^2 p"),
            NodeCondition::Extra(NodeExtra::IntegralZeroToTwo) => write!(f, "int_0^2 p"),
            NodeCondition::Extra(NodeExtra::ContainsZero) => write!(f, "p(0)"),
            NodeCondition::Extra(NodeExtra::ContainsOne) => write!(f, "p(1)"),
        }
    }
}

impl NodeCondition {
    /// Exact value of the condition functional applied to `x^j`.
    fn on_monomial(&self, j: u32) -> Q {
        let pow2 = |e: u32| -> i128 { 1i128 << e };
        match *self {
            NodeCondition::Moment(k) => Q::new(1, (k + j + 1) as i128),
            NodeCondition::ShiftedWeight => {
                // int_1^2 (x^2 - 4x + 4) x^j dx
                let m = |e: u32| Q::new(pow2(e + 1) - 1, (e + 1) as i128);
                m(j + 2) - m(j + 1) * 4 + m(j) * 4
            }
            NodeCondition::Extra(NodeExtra::IntegralZeroToTwo) => {
                Q::new(pow2(j + 1), (j + 1) as i128)
            }
            NodeCondition::Extra(NodeExtra::ContainsZero) => {
                if j == 0 {
                    Q::from_integer(1)
                } else {
                    Q::from_integer(0)
                }
            }
            NodeCondition::Extra(NodeExtra::ContainsOne) => Q::from_integer(1),
        }
    }

    /// The functional applied to an arbitrary polynomial (ascending coefficients), in floating point.
    pub fn apply(&self, coeffs: &[f64]) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * to_f64(self.on_monomial(j as u32)))
            .sum()
    }
}

fn to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Orthogonality conditions implied by a boost level.
pub fn boost_conditions(boost: u8) -> Result<Vec<NodeCondition>> {
    Ok(match boost {
        0 => vec![],
        1 => vec![NodeCondition::Moment(0)],
        2 => vec![NodeCondition::Moment(0), NodeCondition::Moment(1)],
        3 => vec![
            NodeCondition::Moment(0),
            NodeCondition::Moment(1),
            NodeCondition::Moment(2),
            NodeCondition::ShiftedWeight,
        ],
        b => {
            return Err(Error::Config(format!(
                "order boost {b} not supported (0..=3)"
            )))
        }
    })
}

/// The exact linear system `M a = r` on the lower coefficients of the monic node polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSystem {
    pub s: usize,
    pub conditions: Vec<NodeCondition>,
    /// `matrix[i][j]` is condition `i` applied to `x^j`, as (numerator, denominator).
    pub matrix: Vec<Vec<(i128, i128)>>,
    /// Minus condition `i` applied to `x^s`.
    pub rhs: Vec<(i128, i128)>,
}

impl NodeSystem {
    pub fn matrix_f64(&self) -> Matrix {
        Matrix::from_fn(self.s, self.s, |i, j| {
            let (n, d) = self.matrix[i][j];
            n as f64 / d as f64
        })
    }

    pub fn rhs_f64(&self) -> Vec<f64> {
        self.rhs.iter().map(|&(n, d)| n as f64 / d as f64).collect()
    }
}

/// Assembles the node system from an explicit list of conditions.
pub fn conditions_system(s: usize, conditions: &[NodeCondition]) -> Result<NodeSystem> {
    if s == 0 {
        return Err(Error::Config("node count must be positive".into()));
    }
    if conditions.len() != s {
        return Err(Error::Config(format!(
            "{} node conditions given for {s} nodes; the count must equal s",
            conditions.len()
        )));
    }
    let pair = |q: Q| (*q.numer(), *q.denom());
    let matrix = conditions
        .iter()
        .map(|c| (0..s as u32).map(|j| pair(c.on_monomial(j))).collect())
        .collect();
    let rhs = conditions
        .iter()
        .map(|c| pair(-c.on_monomial(s as u32)))
        .collect();
    Ok(NodeSystem {
        s,
        conditions: conditions.to_vec(),
        matrix,
        rhs,
    })
}

/// Boost conditions followed by the extras, as a linear system.
pub fn node_conditions(s: usize, boost: u8, extras: &[NodeExtra]) -> Result<NodeSystem> {
    let mut conds = boost_conditions(boost)?;
    conds.extend(extras.iter().map(|&e| NodeCondition::Extra(e)));
    if conds.len() != s {
        return Err(Error::Config(format!(
            "boost {boost} gives {} conditions and {} extras were supplied, but s = {s} needs exactly {s}",
            boost_conditions(boost)?.len(),
            extras.len()
        )));
    }
    conditions_system(s, &conds)
}

/// Sorted, distinct collocation parameters together with how they were obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVector {
    pub c: Vec<f64>,
    pub boost: u8,
    pub extras: Vec<NodeExtra>,
    /// Ascending coefficients of the monic node polynomial (length s + 1).
    pub polynomial: Vec<f64>,
}

impl NodeVector {
    /// Wraps user-supplied nodes (boost 0, no extras); they must be finite and distinct.
    pub fn from_values(c: &[f64]) -> Result<Self> {
        let mut v = c.to_vec();
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config(format!("invalid node vector {c:?}")));
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("nodes must be distinct, got {c:?}")));
        }
        Ok(NodeVector {
            polynomial: poly::from_roots(&v),
            c: v,
            boost: 0,
            extras: vec![],
        })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// The conditions this vector was solved for.
    pub fn conditions(&self) -> Vec<NodeCondition> {
        let mut conds = boost_conditions(self.boost).unwrap_or_default();
        conds.extend(self.extras.iter().map(|&e| NodeCondition::Extra(e)));
        conds
    }

    /// Each claimed condition evaluated on `prod (x - c_i)` rebuilt from the returned nodes.
    pub fn residuals(&self) -> Vec<(NodeCondition, f64)> {
        let p = poly::from_roots(&self.c);
        self.conditions()
            .into_iter()
            .map(|cond| (cond, cond.apply(&p)))
            .collect()
    }
}

/// Solves the node system and extracts its real, distinct roots.
pub fn solve_nodes(s: usize, boost: u8, extras: &[NodeExtra]) -> Result<NodeVector> {
    let system = node_conditions(s, boost, extras)?;
    let mut nv = solve_system(&system)?;
    // nodes fixed by p(0) = 0 or p(1) = 0 are known exactly
    for (extra, target) in [(NodeExtra::ContainsZero, 0.0), (NodeExtra::ContainsOne, 1.0)] {
        if extras.contains(&extra) {
            let (k, dist) = nv
                .c
                .iter()
                .map(|c| (c - target).abs())
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .expect("s >= 1");
            if dist > 1e-10 {
                return Err(Error::Numeric(format!(
                    "constraint {extra} not met: nearest node is {dist:.3e} away"
                )));
            }
            nv.c[k] = target;
        }
    }
    nv.boost = boost;
    nv.extras = extras.to_vec();
    Ok(nv)
}

/// Gaussian elimination over the rationals; `None` when the system is singular.
fn exact_solve(system: &NodeSystem) -> Option<Vec<f64>> {
    let s = system.s;
    let big = |(n, d): (i128, i128)| BigRational::new(BigInt::from(n), BigInt::from(d));
    let mut m: Vec<Vec<BigRational>> = (0..s)
        .map(|i| {
            let mut row: Vec<BigRational> = system.matrix[i].iter().map(|&q| big(q)).collect();
            row.push(big(system.rhs[i]));
            row
        })
        .collect();
    for k in 0..s {
        let piv = (k..s).find(|&i| !m[i][k].is_zero())?;
        m.swap(k, piv);
        for i in 0..s {
            if i != k && !m[i][k].is_zero() {
                let f = &m[i][k] / &m[k][k];
                for j in k..=s {
                    let t = &f * &m[k][j];
                    m[i][j] -= t;
                }
            }
        }
    }
    (0..s).map(|i| (&m[i][s] / &m[i][i]).to_f64()).collect()
}

/// Roots of the node polynomial defined by an assembled system.
pub fn solve_system(system: &NodeSystem) -> Result<NodeVector> {
    let s = system.s;
    let mut coeffs = exact_solve(system).ok_or_else(|| Error::InfeasibleNodes {
        reason: "node conditions are linearly dependent".into(),
        coefficients: vec![],
    })?;
    coeffs.push(1.0);

    let infeasible = |reason: String| Error::InfeasibleNodes {
        reason,
        coefficients: coeffs.clone(),
    };
    let roots = poly::companion_roots(&coeffs[..s])?;
    let mut c = Vec::with_capacity(s);
    for z in &roots {
        if z.im.abs() > 1e-9 * z.norm().max(1.0) {
            return Err(infeasible(format!("complex root {z}")));
        }
        c.push(poly::polish_real_root(&coeffs, z.re));
    }
    c.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in c.windows(2) {
        if (w[1] - w[0]).abs() <= 1e-8 * w[0].abs().max(1.0) {
            return Err(infeasible(format!("repeated root near {}", w[0])));
        }
    }
    for &ci in &c {
        let r = poly::eval(&coeffs, ci).abs();
        if r > 1e-12 * ci.abs().powi(s as i32).max(1.0) {
            return Err(Error::Numeric(format!(
                "node {ci} leaves polynomial residual {r:.3e}"
            )));
        }
    }
    Ok(NodeVector {
        c,
        boost: 0,
        extras: vec![],
        polynomial: coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_is_midpoint() {
        let sys = node_conditions(1, 1, &[]).unwrap();
        assert_eq!(sys.matrix, vec![vec![(1, 1)]]);
        assert_eq!(sys.rhs, vec![(-1, 2)]);
        let nv = solve_nodes(1, 1, &[]).unwrap();
        assert!((nv.c[0] - 0.5).abs() < 1e-16);
    }

    #[test]
    fn condition_count_must_match() {
        assert!(matches!(node_conditions(3, 2, &[]), Err(Error::Config(_))));
        assert!(matches!(
            node_conditions(3, 3, &[NodeExtra::ContainsZero]),
            Err(Error::Config(_))
        ));
        assert!(matches!(node_conditions(2, 7, &[]), Err(Error::Config(_))));
    }

    #[test]
    fn shifted_weight_moments_exact() {
        // int_1^2 (x-2)^2 dx = 1/3, int_1^2 (x-2)^2 x dx = 5/12
        assert_eq!(NodeCondition::ShiftedWeight.on_monomial(0), Q::new(1, 3));
        assert_eq!(NodeCondition::ShiftedWeight.on_monomial(1), Q::new(5, 12));
    }

    #[test]
    fn three_stage_nodes() {
        let nv = solve_nodes(3, 2, &[NodeExtra::IntegralZeroToTwo]).unwrap();
        let want = [0.18677613705141, 0.75202972313575, 1.66119413981284];
        for (c, w) in nv.c.iter().zip(want) {
            assert!((c - w).abs() < 1e-10, "{c} vs {w}");
        }
        for (_, r) in nv.residuals() {
            assert!(r.abs() < 1e-14);
        }
    }

    #[test]
    fn zero_and_one_are_hit() {
        let nv = solve_nodes(
            6,
            3,
            &[NodeExtra::ContainsZero, NodeExtra::ContainsOne],
        )
        .unwrap();
        assert_eq!(nv.c[0], 0.0);
        assert_eq!(nv.c[4], 1.0);
    }

    #[test]
    fn complex_roots_are_infeasible() {
        // a0 = 1, a1 = 0: x^2 + 1
        let sys = NodeSystem {
            s: 2,
            conditions: vec![NodeCondition::Moment(0), NodeCondition::Moment(1)],
            matrix: vec![vec![(1, 1), (0, 1)], vec![(0, 1), (1, 1)]],
            rhs: vec![(1, 1), (0, 1)],
        };
        assert!(matches!(
            solve_system(&sys),
            Err(Error::InfeasibleNodes { .. })
        ));
    }

    #[test]
    fn repeated_roots_are_infeasible() {
        // x^2 - 2x + 1
        let sys = NodeSystem {
            s: 2,
            conditions: vec![NodeCondition::Moment(0), NodeCondition::Moment(1)],
            matrix: vec![vec![(1, 1), (0, 1)], vec![(0, 1), (1, 1)]],
            rhs: vec![(1, 1), (-2, 1)],
        };
        assert!(matches!(
            solve_system(&sys),
            Err(Error::InfeasibleNodes { .. })
        ));
    }

    #[test]
    fn dependent_conditions_are_infeasible() {
        let sys = conditions_system(2, &[NodeCondition::Moment(0), NodeCondition::Moment(0)]).unwrap();
        assert!(matches!(
            solve_system(&sys),
            Err(Error::InfeasibleNodes { .. })
        ));
    }

    #[test]
    fn parse_extras() {
        assert_eq!("int02".parse::<NodeExtra>().unwrap(), NodeExtra::IntegralZeroToTwo);
        assert_eq!("c0".parse::<NodeExtra>().unwrap(), NodeExtra::ContainsZero);
        assert_eq!("c1".parse::<NodeExtra>().unwrap(), NodeExtra::ContainsOne);
        assert!("c2".parse::<NodeExtra>().is_err());
    }
}
