//! Command-line front end: argument grammar, sweeps and CSV output.
//!
//! Sweeps run their independent jobs in parallel and write rows in input order.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::basis::{BasisSet, BasisSpec};
use crate::coeffs::{solve_dense, solve_embedded, solve_tableau, tableau_residuals};
use crate::error::{Error, Result};
use crate::integrator::{
    compute_ncd, endpoint_error, integrate_adaptive, integrate_fixed, LteMode, StartMode,
    StepController,
};
use crate::methods::{method, named_nodes, Method};
use crate::nodes::{solve_nodes, NodeExtra, NodeVector};
use crate::problems::{Problem, ProblemSpec};
use crate::stability::{scan_region_with, RHO_SLACK};

#[derive(Debug, Parser)]
#[command(name = "feptrkn", version, about = "Explicit pseudo two-step RKN integrators for y'' = f(t, y)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the node conditions and print the nodes
    Nodes(NodesArgs),
    /// Print the coefficient tableau for a basis and node set
    Coeffs(CoeffsArgs),
    /// Fixed-step convergence table (NCD per step size)
    Converge(ConvergeArgs),
    /// Adaptive work-precision sweep
    Wp(WpArgs),
    /// Spectral radius of the amplification matrix over (omega h, z)
    Stability(StabilityArgs),
}

#[derive(Debug, Args)]
pub struct NodesArgs {
    #[arg(long)]
    pub stages: usize,
    /// Number of orthogonality conditions (0-3)
    #[arg(long, default_value_t = 0)]
    pub boost: u8,
    /// Extra conditions: int02, c0, c1 (repeat or comma-separate)
    #[arg(long = "extra", value_delimiter = ',')]
    pub extra: Vec<String>,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    /// Registered method; supplies basis and nodes
    #[arg(long, conflicts_with_all = ["basis", "nodes"])]
    pub method: Option<String>,
    /// Basis spec such as `trigmix:s=3,omega=1`
    #[arg(long, requires = "nodes")]
    pub basis: Option<String>,
    /// A method name whose nodes to use, or comma-separated values
    #[arg(long)]
    pub nodes: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long)]
    pub h: f64,
    /// Also print dense-output weights at this fraction of the step
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Starter {
    /// Stage values from the exact solution
    Exact,
    /// Classical Runge-Kutta starter
    Rk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LteArg {
    /// `||y - y~||`
    Position,
    /// Adds the derivative difference
    Both,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub method: String,
    #[arg(long, default_value = "bett")]
    pub problem: String,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.5)]
    pub h0: f64,
    #[arg(long, default_value_t = 9)]
    pub levels: usize,
    #[arg(long, value_enum, default_value_t = Starter::Exact)]
    pub starter: Starter,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct WpArgs {
    #[arg(long)]
    pub method: String,
    #[arg(long, default_value = "bett")]
    pub problem: String,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// `hi:lo` (one per decade), `hi:lo:n` (n log-spaced values) or a comma list
    #[arg(long, default_value = "1e-4:1e-12")]
    pub tols: String,
    #[arg(long, value_enum, default_value_t = LteArg::Position)]
    pub lte: LteArg,
    #[arg(long, value_enum, default_value_t = Starter::Rk)]
    pub starter: Starter,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long)]
    pub method: String,
    /// `start:end:step` or a single value
    #[arg(long = "omega-h", default_value = "0")]
    pub omega_h: String,
    #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
    pub zmin: f64,
    #[arg(long, default_value_t = 4000)]
    pub n: usize,
    /// Tolerance above 1 still counted as stable when locating the boundary
    #[arg(long, default_value_t = RHO_SLACK)]
    pub slack: f64,
    /// Print `omega_h,boundary` instead of the full grid
    #[arg(long)]
    pub boundary: bool,
    #[arg(long, default_value = "-")]
    pub out: String,
}

/// Formats a float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn open_out(path: &str) -> Result<Box<dyn Write>> {
    if path == "-" {
        Ok(Box::new(io::stdout().lock()))
    } else {
        Ok(Box::new(File::create(PathBuf::from(path))?))
    }
}

fn resolve_method(name: &str, omega: f64) -> Result<Method> {
    method(name, omega)
}

fn resolve_problem(spec: &str) -> Result<Problem> {
    spec.parse::<ProblemSpec>()?.build()
}

fn start_mode(starter: Starter, method: &Method) -> StartMode {
    match starter {
        Starter::Exact => StartMode::Exact,
        Starter::Rk => StartMode::classical(method.stages()),
    }
}

/// Parses `hi:lo`, `hi:lo:n` or a comma list into a tolerance sequence.
pub fn parse_tols(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let bad = || Error::Config(format!("cannot parse tolerance range '{text}'"));
    let float = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let tols = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let (hi, lo) = match parts.as_slice() {
            [a, b] | [a, b, _] => (float(a)?, float(b)?),
            _ => return Err(bad()),
        };
        if !(hi > 0.0 && lo > 0.0) {
            return Err(bad());
        }
        let n = match parts.get(2) {
            Some(n) => n.trim().parse::<usize>().map_err(|_| bad())?,
            None => ((hi / lo).log10().abs().round() as usize) + 1,
        };
        if n == 1 {
            vec![hi]
        } else {
            (0..n)
                .map(|k| hi * (lo / hi).powf(k as f64 / (n - 1) as f64))
                .collect()
        }
    } else {
        text.split(',').map(float).collect::<Result<Vec<_>>>()?
    };
    if tols.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(bad());
    }
    Ok(tols)
}

/// Parses `start:end:step` (inclusive) or a single value.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("cannot parse grid '{text}'"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [v] => Ok(vec![*v]),
        [a, b, step] if *step > 0.0 && b >= a => {
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| a + k as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeRow {
    pub h: f64,
    pub ncd: f64,
    pub nfe: usize,
    /// `(ncd_prev - ncd) / 0.3`; absent on the first row.
    pub order_est: Option<f64>,
}

/// Fixed-step runs at `h0 / 2^k`, `k = 0..levels`.
pub fn converge_rows(
    method: &Method,
    problem: &Problem,
    h0: f64,
    levels: usize,
    start: StartMode,
) -> Result<Vec<ConvergeRow>> {
    if !problem.has_exact() {
        return Err(Error::UnsupportedMetric(format!(
            "convergence tables need an exact solution; {} has none",
            problem.name
        )));
    }
    let runs = (0..levels)
        .into_par_iter()
        .map(|k| {
            let h = h0 / 2f64.powi(k as i32);
            let tr = integrate_fixed(problem, method, h, start)?;
            Ok((h, compute_ncd(&tr, problem)?, tr.nfe))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<ConvergeRow> = Vec::with_capacity(runs.len());
    for (h, ncd, nfe) in runs {
        let order_est = rows.last().map(|p| (p.ncd - ncd) / 0.3);
        rows.push(ConvergeRow { h, ncd, nfe, order_est });
    }
    Ok(rows)
}

/// One row of a work-precision sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct WpRow {
    pub tol: f64,
    pub error: f64,
    pub nfe: usize,
    pub nsteps: usize,
    pub nrejects: usize,
}

/// Adaptive runs at each tolerance.
pub fn wp_rows(
    method: &Method,
    problem: &Problem,
    tols: &[f64],
    lte: LteMode,
    start: StartMode,
) -> Result<Vec<WpRow>> {
    if !problem.has_exact() && !tols.is_empty() {
        return Err(Error::UnsupportedMetric(format!(
            "work-precision errors need an exact solution; {} has none",
            problem.name
        )));
    }
    tols.par_iter()
        .map(|&tol| {
            let mut ctrl = StepController::for_method(tol, method)?;
            ctrl.lte_mode = lte;
            let tr = integrate_adaptive(problem, method, &ctrl, start)?;
            Ok(WpRow {
                tol,
                error: endpoint_error(&tr, problem)?,
                nfe: tr.nfe,
                nsteps: tr.nsteps,
                nrejects: tr.nrejects,
            })
        })
        .collect()
}

pub fn converge_csv(rows: &[ConvergeRow]) -> String {
    let mut s = String::from("h,ncd,nfe,order_est\n");
    for r in rows {
        let est = r.order_est.map(num).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{}", num(r.h), num(r.ncd), r.nfe, est);
    }
    s
}

pub fn wp_csv(rows: &[WpRow]) -> String {
    let mut s = String::from("tol,error,nfe,nsteps,nrejects\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", num(r.tol), num(r.error), r.nfe, r.nsteps, r.nrejects);
    }
    s
}

fn nodes_csv(nodes: &NodeVector) -> String {
    let mut s = String::from("index,c\n");
    for (i, c) in nodes.c.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i + 1, num(*c));
    }
    s
}

fn matrix_text(out: &mut String, name: &str, rows: &[Vec<f64>]) {
    let _ = writeln!(out, "{name}:");
    for r in rows {
        let cells: Vec<String> = r.iter().map(|x| format!("{x:>24.16e}")).collect();
        let _ = writeln!(out, "  {}", cells.join(" "));
    }
}

fn coeffs_text(args: &CoeffsArgs) -> Result<String> {
    let (basis, nodes, embedded): (BasisSet, Vec<f64>, Option<Vec<usize>>) = match &args.method {
        Some(name) => {
            let m = resolve_method(name, args.omega)?;
            (m.basis.clone(), m.c().to_vec(), Some(m.embedded.clone()))
        }
        None => {
            let spec: BasisSpec = args
                .basis
                .as_deref()
                .ok_or_else(|| Error::Config("give --method or --basis with --nodes".into()))?
                .parse()?;
            let nodes_arg = args.nodes.as_deref().unwrap_or_default();
            let c = if nodes_arg.contains(',') || nodes_arg.parse::<f64>().is_ok() {
                nodes_arg
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Config(format!("bad node value '{v}'")))
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                named_nodes(nodes_arg)?.c
            };
            (spec.build()?, c, None)
        }
    };
    let tab = solve_tableau(&basis, &nodes, args.t, args.h)?;
    let res = tableau_residuals(&basis, &nodes, &tab);
    let mut out = String::new();
    let _ = writeln!(out, "basis {}, t = {}, h = {}", basis.spec_string(), args.t, args.h);
    matrix_text(&mut out, "c", std::slice::from_ref(&nodes));
    matrix_text(&mut out, "A", &tab.a.to_rows());
    matrix_text(&mut out, "b", std::slice::from_ref(&tab.b));
    matrix_text(&mut out, "d", std::slice::from_ref(&tab.d));
    let _ = writeln!(
        out,
        "residuals: b {:.3e}, d {:.3e}, A {:.3e}; rcond {:.3e}",
        res.b, res.d, res.a, tab.rcond
    );
    if let Some(subset) = embedded {
        let emb = solve_embedded(&basis, &nodes, &subset, args.t, args.h)?;
        let _ = writeln!(out, "embedded stages {:?}", emb.index_map);
        matrix_text(&mut out, "b~", &[emb.b_tilde]);
        matrix_text(&mut out, "d~", &[emb.d_tilde]);
    }
    if let Some(xi) = args.xi {
        let dense = solve_dense(&basis, &nodes, args.t, args.h, xi)?;
        let _ = writeln!(out, "dense output at xi = {xi}");
        matrix_text(&mut out, "b(xi)", &[dense.b_xi]);
        matrix_text(&mut out, "d(xi)", &[dense.d_xi]);
    }
    Ok(out)
}

fn stability_csv(args: &StabilityArgs) -> Result<String> {
    let m = resolve_method(&args.method, 1.0)?;
    let grid = parse_grid(&args.omega_h)?;
    let scans = grid
        .par_iter()
        .map(|&nu| scan_region_with(&m, nu, args.zmin, args.n, args.slack))
        .collect::<Result<Vec<_>>>()?;
    let mut s = String::new();
    if args.boundary {
        s.push_str("omega_h,boundary\n");
        for sc in &scans {
            let _ = writeln!(s, "{},{}", num(sc.omega_h), num(sc.boundary));
        }
    } else {
        s.push_str("omega_h,z,rho\n");
        for sc in &scans {
            for (z, rho) in sc.z.iter().zip(&sc.rho) {
                let _ = writeln!(s, "{},{},{}", num(sc.omega_h), num(*z), num(*rho));
            }
        }
    }
    Ok(s)
}

/// Runs one command and returns the text it produces.
pub fn render(command: &Command) -> Result<String> {
    match command {
        Command::Nodes(a) => {
            let extras = a
                .extra
                .iter()
                .filter(|e| !e.trim().is_empty())
                .map(|e| e.parse::<NodeExtra>())
                .collect::<Result<Vec<_>>>()?;
            Ok(nodes_csv(&solve_nodes(a.stages, a.boost, &extras)?))
        }
        Command::Coeffs(a) => coeffs_text(a),
        Command::Converge(a) => {
            let m = resolve_method(&a.method, a.omega)?;
            let p = resolve_problem(&a.problem)?;
            let rows = converge_rows(&m, &p, a.h0, a.levels, start_mode(a.starter, &m))?;
            Ok(converge_csv(&rows))
        }
        Command::Wp(a) => {
            let m = resolve_method(&a.method, a.omega)?;
            let p = resolve_problem(&a.problem)?;
            let tols = parse_tols(&a.tols)?;
            let lte = match a.lte {
                LteArg::Position => LteMode::Position,
                LteArg::Both => LteMode::PositionAndDerivative,
            };
            let rows = wp_rows(&m, &p, &tols, lte, start_mode(a.starter, &m))?;
            Ok(wp_csv(&rows))
        }
        Command::Stability(a) => stability_csv(a),
    }
}

fn out_path(command: &Command) -> &str {
    match command {
        Command::Nodes(a) => &a.out,
        Command::Coeffs(a) => &a.out,
        Command::Converge(a) => &a.out,
        Command::Wp(a) => &a.out,
        Command::Stability(a) => &a.out,
    }
}

/// Runs a parsed command line, writing to `--out` (standard output for `-`).
pub fn run(cli: &Cli) -> Result<()> {
    let text = render(&cli.command)?;
    let mut out = open_out(out_path(&cli.command))?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}
