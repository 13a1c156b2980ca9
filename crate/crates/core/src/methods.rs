//! Named methods: a basis, a node vector, an embedded stage subset and the
//! orders they are expected to reach.

use std::fmt;
use std::sync::OnceLock;

use crate::basis::{BasisKind, BasisSet};
use crate::error::{Error, Result};
use crate::nodes::{solve_nodes, NodeExtra, NodeVector};

/// A complete method definition.
#[derive(Debug, Clone)]
pub struct Method {
    pub name: String,
    pub basis: BasisSet,
    pub nodes: NodeVector,
    /// Stage indices used by the embedded lower-order method.
    pub embedded: Vec<usize>,
    /// Step order `p`.
    pub order: u32,
    /// Embedded order `p~`.
    pub embedded_order: u32,
}

impl Method {
    /// A method from explicit parts. The embedded subset defaults to the first `s - 1` stages.
    pub fn new(
        name: impl Into<String>,
        basis: BasisSet,
        nodes: NodeVector,
        embedded: Option<Vec<usize>>,
        order: u32,
        embedded_order: u32,
    ) -> Result<Self> {
        let s = nodes.len();
        if basis.len() != s {
            return Err(Error::Config(format!(
                "basis has {} functions but there are {s} nodes",
                basis.len()
            )));
        }
        let embedded = embedded.unwrap_or_else(|| (0..s.saturating_sub(1)).collect());
        if embedded.len() >= s || embedded.iter().any(|&k| k >= s) {
            return Err(Error::Config(format!(
                "embedded subset {embedded:?} is not a strict subset of {s} stages"
            )));
        }
        Ok(Method {
            name: name.into(),
            basis,
            nodes,
            embedded,
            order,
            embedded_order,
        })
    }

    pub fn stages(&self) -> usize {
        self.nodes.len()
    }

    pub fn c(&self) -> &[f64] {
        &self.nodes.c
    }

    /// True for the functionally fitted (non-monomial) members.
    pub fn is_fitted(&self) -> bool {
        self.basis.kind() != BasisKind::Monomial
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (s = {}, p = {}, embedded p = {}, basis {})",
            self.name,
            self.stages(),
            self.order,
            self.embedded_order,
            self.basis.spec_string()
        )
    }
}

/// Names accepted by [`method`].
pub const METHOD_NAMES: [&str; 8] = [
    "eptrkn52", "feptrkn52", "eptrkn73", "feptrkn73", "eptrkn84", "feptrkn84", "eptrkn95",
    "feptrkn95",
];

struct Family {
    suffix: &'static str,
    s: usize,
    boost: u8,
    extras: &'static [NodeExtra],
    fitted: BasisKind,
    order: u32,
}

const FAMILIES: [Family; 4] = [
    Family {
        suffix: "52",
        s: 3,
        boost: 2,
        extras: &[NodeExtra::IntegralZeroToTwo],
        fitted: BasisKind::TrigMixed,
        order: 5,
    },
    Family {
        suffix: "73",
        s: 4,
        boost: 3,
        extras: &[],
        fitted: BasisKind::TrigPure,
        order: 7,
    },
    Family {
        suffix: "84",
        s: 5,
        boost: 3,
        extras: &[NodeExtra::IntegralZeroToTwo],
        fitted: BasisKind::TrigMixed,
        order: 8,
    },
    Family {
        suffix: "95",
        s: 6,
        boost: 3,
        extras: &[NodeExtra::ContainsZero, NodeExtra::ContainsOne],
        fitted: BasisKind::TrigPure,
        order: 9,
    },
];

fn family_nodes() -> &'static [NodeVector] {
    static NODES: OnceLock<Vec<NodeVector>> = OnceLock::new();
    NODES.get_or_init(|| {
        FAMILIES
            .iter()
            .map(|f| solve_nodes(f.s, f.boost, f.extras).expect("built-in node sets are feasible"))
            .collect()
    })
}

fn unknown(name: &str) -> Error {
    Error::Config(format!(
        "unknown method '{name}'; registered methods: {}",
        METHOD_NAMES.join(", ")
    ))
}

fn split_name(name: &str) -> Option<(bool, usize)> {
    let (fitted, rest) = if let Some(r) = name.strip_prefix("feptrkn") {
        (true, r)
    } else {
        (false, name.strip_prefix("eptrkn")?)
    };
    FAMILIES
        .iter()
        .position(|f| f.suffix == rest)
        .map(|i| (fitted, i))
}

/// The node vector shared by `eptrknXY` and `feptrknXY`.
pub fn named_nodes(name: &str) -> Result<NodeVector> {
    let (_, i) = split_name(name.trim()).ok_or_else(|| unknown(name))?;
    Ok(family_nodes()[i].clone())
}

/// Looks up a registered method; `omega` is the fitting frequency of the fitted variants.
pub fn method(name: &str, omega: f64) -> Result<Method> {
    let name = name.trim();
    let (fitted, i) = split_name(name).ok_or_else(|| unknown(name))?;
    let fam = &FAMILIES[i];
    let basis = if fitted {
        BasisSet::new(fam.fitted, fam.s, omega)?
    } else {
        BasisSet::monomial(fam.s)?
    };
    Method::new(
        name,
        basis,
        family_nodes()[i].clone(),
        None,
        fam.order,
        fam.s as u32 - 1,
    )
}

/// One line per registered method.
pub fn registry_listing(omega: f64) -> String {
    METHOD_NAMES
        .iter()
        .map(|n| method(n, omega).map(|m| m.to_string()).unwrap_or_else(|e| e.to_string()))
        .collect::<Vec<_>>()
        .join("\n")
}
