//! Small dense linear programs: construction, solving through HiGHS, and a
//! CPLEX-LP text dump for cross-checking with external solvers.

use std::fmt::Write as _;

use highs::{HighsModelStatus, RowProblem, Sense};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Largest tolerated constraint violation of a returned point.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("LP solver failed numerically: {0}")]
    Numerical(String),
    #[error("LP objective is unbounded")]
    Unbounded,
    #[error("LP has non-finite data in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    fn lhs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let v = self.lhs(x) - self.rhs;
        match self.relation {
            Relation::Le => v.max(0.0),
            Relation::Ge => (-v).max(0.0),
            Relation::Eq => v.abs(),
        }
    }
}

/// `minimize c.x` subject to linear constraints and variable bounds.
/// A zero objective makes it a pure feasibility problem.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    bounds: Vec<(f64, f64)>,
    objective: Vec<f64>,
    names: Vec<String>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with bounds `[lo, hi]` (infinite allowed) and objective weight.
    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64, cost: f64) -> usize {
        self.bounds.push((lo, hi));
        self.objective.push(cost);
        self.names.push(name.into());
        self.bounds.len() - 1
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { terms, relation, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(x));
        let boxes = self.bounds.iter().zip(x).map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0));
        rows.chain(boxes).fold(0.0, f64::max)
    }

    fn tighten_bound_var(&self, x: &mut [f64], var: usize) {
        for (j, (v, &(lo, hi))) in x.iter_mut().zip(&self.bounds).enumerate() {
            if j != var {
                *v = v.clamp(lo, hi);
            }
        }
        x[var] = 0.0;
        let mut need = self.bounds[var].0;
        for c in &self.constraints {
            let Some(&(_, a)) = c.terms.iter().find(|t| t.0 == var) else { continue };
            let rest = c.lhs(x);
            let required = match (c.relation, a < 0.0) {
                (Relation::Le, true) => (rest - c.rhs) / -a,
                (Relation::Ge, false) => (c.rhs - rest) / a,
                _ => continue,
            };
            need = need.max(required);
        }
        x[var] = need;
    }

    /// Text in CPLEX LP format.
    pub fn to_lp_format(&self) -> String {
        let mut s = String::from("\\ generated by geolocal\nMinimize\n obj:");
        let mut any = false;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                let _ = write!(s, " {} {:e} {}", if c < 0.0 { '-' } else { '+' }, c.abs(), self.names[j]);
                any = true;
            }
        }
        if !any {
            let _ = write!(s, " 0 {}", self.names.first().map(String::as_str).unwrap_or("x"));
        }
        s.push_str("\nSubject To\n");
        for (i, c) in self.constraints.iter().enumerate() {
            let _ = write!(s, " c{i}:");
            for &(j, a) in &c.terms {
                let _ = write!(s, " {} {:e} {}", if a < 0.0 { '-' } else { '+' }, a.abs(), self.names[j]);
            }
            let op = match c.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(s, " {op} {:e}", c.rhs);
        }
        s.push_str("Bounds\n");
        for (name, &(lo, hi)) in self.names.iter().zip(&self.bounds) {
            match (lo.is_finite(), hi.is_finite()) {
                (false, false) => {
                    let _ = writeln!(s, " {name} free");
                }
                (true, false) => {
                    let _ = writeln!(s, " {name} >= {lo:e}");
                }
                (false, true) => {
                    let _ = writeln!(s, " -inf <= {name} <= {hi:e}");
                }
                (true, true) => {
                    let _ = writeln!(s, " {lo:e} <= {name} <= {hi:e}");
                }
            }
        }
        s.push_str("End\n");
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    /// A point within [`FEASIBILITY_TOL`] of every constraint, minimizing the objective.
    Feasible(Vec<f64>),
    Infeasible,
}

/// Solves `lp`; a numerically inaccurate vertex is reported as an error rather
/// than silently returned.
pub fn solve_linear_feasibility(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    checked(lp, optimize(lp)?)
}

/// Solves a program whose variable `bound_var` only bounds the other rows (each
/// row has it with a unit coefficient on the relaxing side). The returned point
/// has every other variable clamped into its box and `bound_var` reset to the
/// smallest value satisfying all rows, so only its own cap can be violated.
pub fn solve_minimax(lp: &LinearProgram, bound_var: usize) -> Result<LpOutcome, LpError> {
    let out = optimize(lp)?.map(|mut x| {
        lp.tighten_bound_var(&mut x, bound_var);
        x
    });
    checked(lp, out)
}

fn checked(lp: &LinearProgram, out: Option<Vec<f64>>) -> Result<LpOutcome, LpError> {
    match out {
        Some(x) => {
            let viol = lp.max_violation(&x);
            if viol > FEASIBILITY_TOL {
                Err(LpError::Numerical(format!("returned point violates constraints by {viol:e}")))
            } else {
                Ok(LpOutcome::Feasible(x))
            }
        }
        None => Ok(LpOutcome::Infeasible),
    }
}

/// Optimal point after polishing, or `None` when infeasible.
fn optimize(lp: &LinearProgram) -> Result<Option<Vec<f64>>, LpError> {
    if lp.objective.iter().any(|c| !c.is_finite()) {
        return Err(LpError::NonFinite("objective"));
    }
    if lp.constraints.iter().any(|c| !c.rhs.is_finite() || c.terms.iter().any(|t| !t.1.is_finite())) {
        return Err(LpError::NonFinite("constraints"));
    }
    if lp.bounds.iter().any(|&(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi) {
        return Err(LpError::NonFinite("bounds"));
    }
    // presolve sometimes cannot tell infeasible from unbounded, and its
    // postsolve cleanup occasionally stalls; fall back to the plain simplex,
    // then to the interior-point method
    let mut last = LpError::Numerical("no strategy attempted".into());
    let mut status = None;
    for strategy in [Strategy::Default, Strategy::NoPresolve, Strategy::InteriorPoint] {
        match run_highs(lp, strategy) {
            Ok(Solved::Ambiguous) => last = LpError::Unbounded,
            Ok(s) => {
                status = Some(s);
                break;
            }
            Err(e) => last = e,
        }
    }
    match status.ok_or(last)? {
        Solved::Optimal(x) => Ok(Some(polish(lp, x))),
        Solved::Infeasible => Ok(None),
        Solved::Ambiguous | Solved::Unbounded => Err(LpError::Unbounded),
    }
}

/// Projects `x` onto the affine set of constraints and bounds that are active
/// at it, which removes the solver's own feasibility slack at a vertex. Tries
/// successively tighter activity thresholds and keeps the least violating point.
fn polish(lp: &LinearProgram, x: Vec<f64>) -> Vec<f64> {
    let mut best_viol = lp.max_violation(&x);
    let mut best = x;
    if best_viol == 0.0 {
        return best;
    }
    let start = best.clone();
    for threshold in [1e-5, 1e-6, 1e-7, 1e-8] {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for c in &lp.constraints {
            let gap = c.lhs(&start) - c.rhs;
            let scale = 1.0 + c.rhs.abs();
            if c.relation == Relation::Eq || gap.abs() <= threshold * scale {
                let mut row = vec![0.0; lp.num_vars()];
                for &(j, a) in &c.terms {
                    row[j] += a;
                }
                rows.push(row);
                rhs.push(-gap);
            }
        }
        for (j, (&(lo, hi), &v)) in lp.bounds.iter().zip(&start).enumerate() {
            for b in [lo, hi].into_iter().filter(|b| b.is_finite()) {
                if (v - b).abs() <= threshold * (1.0 + b.abs()) {
                    let mut row = vec![0.0; lp.num_vars()];
                    row[j] = 1.0;
                    rows.push(row);
                    rhs.push(b - v);
                }
            }
        }
        if rows.is_empty() {
            continue;
        }
        let a = DMatrix::from_fn(rows.len(), lp.num_vars(), |i, j| rows[i][j]);
        let svd = a.svd(true, true);
        let cutoff = svd.singular_values.max() * 1e-13;
        let Ok(dx) = svd.solve(&DVector::from_vec(rhs), cutoff) else { continue };
        let cand: Vec<f64> = start.iter().zip(dx.iter()).map(|(v, d)| v + d).collect();
        let viol = lp.max_violation(&cand);
        if cand.iter().all(|v| v.is_finite()) && viol < best_viol {
            best_viol = viol;
            best = cand;
        }
    }
    best
}

enum Solved {
    Optimal(Vec<f64>),
    Infeasible,
    Unbounded,
    Ambiguous,
}

#[derive(Clone, Copy)]
enum Strategy {
    Default,
    NoPresolve,
    InteriorPoint,
}

fn run_highs(lp: &LinearProgram, strategy: Strategy) -> Result<Solved, LpError> {
    let mut p = RowProblem::default();
    let cols: Vec<_> = lp.bounds.iter().zip(&lp.objective).map(|(&(lo, hi), &c)| p.add_column(c, lo..=hi)).collect();
    for c in &lp.constraints {
        let row = c.terms.iter().map(|&(j, a)| (cols[j], a));
        match c.relation {
            Relation::Le => p.add_row(..=c.rhs, row),
            Relation::Ge => p.add_row(c.rhs.., row),
            Relation::Eq => p.add_row(c.rhs..=c.rhs, row),
        }
    }
    let mut model = p.optimise(Sense::Minimise);
    model.make_quiet();
    match strategy {
        Strategy::Default => {}
        Strategy::NoPresolve => model.set_option("presolve", "off"),
        Strategy::InteriorPoint => {
            model.set_option("presolve", "off");
            model.set_option("solver", "ipm");
        }
    }
    let solved = model.try_solve().map_err(|e| LpError::Numerical(format!("{e:?}")))?;
    Ok(match solved.status() {
        HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => {
            let x = solved.get_solution().columns().to_vec();
            Solved::Optimal(if x.len() == lp.num_vars() { x } else { vec![0.0; lp.num_vars()] })
        }
        HighsModelStatus::Infeasible => Solved::Infeasible,
        HighsModelStatus::Unbounded => Solved::Unbounded,
        HighsModelStatus::UnboundedOrInfeasible => Solved::Ambiguous,
        other => return Err(LpError::Numerical(format!("solver status {other:?}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Ge, 0.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Le, 1.0);
        match solve_linear_feasibility(&lp).unwrap() {
            LpOutcome::Feasible(v) => assert!((-1e-9..=1.0 + 1e-9).contains(&v[0])),
            LpOutcome::Infeasible => panic!("feasible problem reported infeasible"),
        }
    }

    #[test]
    fn empty_interval() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Ge, 1.0);
        lp.add_constraint(vec![(x, 1.0)], Relation::Le, 0.0);
        assert_eq!(solve_linear_feasibility(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn minimizes() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 10.0, 1.0);
        let y = lp.add_var("y", 0.0, 10.0, 2.0);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Ge, 3.0);
        let LpOutcome::Feasible(v) = solve_linear_feasibility(&lp).unwrap() else { panic!() };
        assert!((v[0] - 3.0).abs() < 1e-9 && v[1].abs() < 1e-9);
    }

    #[test]
    fn lp_text() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        lp.add_constraint(vec![(x, 2.0)], Relation::Le, 1.0);
        let s = lp.to_lp_format();
        assert!(s.contains("Subject To"));
        assert!(s.contains("x free"));
        assert!(s.contains("<= 1e0"));
    }
}
