//! Berlekamp-Welch decoding with noisy values, posed as two linear programs.
//!
//! LP1 finds a monic locator `s` of degree `k` (coefficient `j` bounded by
//! `C(k, j)`) and `r` of degree `d + k` with `|r(x_i) - y_i s(x_i)|` within
//! `2^k eps` at every node. LP2 fixes `s` and finds `q` of degree `d` with
//! `|(q(x_i) - y_i) s(x_i)|` within `(10/delta)^n eps`. Both LPs minimize the
//! largest residual subject to those caps, so any returned point is feasible for
//! the stated constraints.
//!
//! Nodes are mapped affinely onto `[-1, 1]` by their hull before building the
//! LPs; `r` and `q` are expanded in Chebyshev polynomials, `s` in monomials.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::lp::{solve_minimax, LinearProgram, LpOutcome, Relation, FEASIBILITY_TOL};
use super::poly::{chebyshev_row, AffineMap, ChebyshevSeries, Polynomial};
use super::InterpError;

/// Nodes where `|s(x_i)|` falls below this fraction of its largest value are
/// treated as located errors and left out of the least-squares refit, as are
/// the `k` nodes with the smallest `|s(x_i)|`.
pub const TRUST_RATIO: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RebwOptions {
    /// Degree of `q`; defaults to `n - 2k - 1`.
    pub degree: Option<usize>,
    /// Added to every LP cap.
    pub tolerance: f64,
    /// Replace the LP2 solution by a least-squares fit on the nodes the locator
    /// trusts, when that fit is itself LP2-feasible.
    pub refit: bool,
}

impl Default for RebwOptions {
    fn default() -> Self {
        Self { degree: None, tolerance: FEASIBILITY_TOL, refit: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decoded {
    pub series: ChebyshevSeries,
    /// Monic locator in the unit variable, ascending coefficients.
    pub locator: Vec<f64>,
    /// `|s(x_i)| / max_j |s(x_j)|` per node, input order.
    pub locator_weights: Vec<f64>,
    /// Nodes the locator does not mark as errors, input order.
    pub trusted: Vec<bool>,
    pub lp1_residual: f64,
    pub lp2_residual: f64,
    pub refit: bool,
    /// Node separation the guarantee is stated for.
    pub delta: f64,
    /// Natural log of `(10/delta)^{2n} (eps + tolerance)`.
    pub ln_guarantee: f64,
}

impl Decoded {
    pub fn eval(&self, x: f64) -> f64 {
        self.series.eval(x)
    }

    pub fn polynomial(&self) -> Polynomial {
        self.series.to_polynomial()
    }

    /// Bound on `|q(x_i) - p(x_i)|` at `n - 2k` or more nodes (may overflow to infinity).
    pub fn guarantee(&self) -> f64 {
        self.ln_guarantee.exp()
    }

    pub fn num_located(&self) -> usize {
        self.trusted.iter().filter(|t| !**t).count()
    }
}

struct Prepared {
    map: AffineMap,
    t: Vec<f64>,
    y: Vec<f64>,
    degree: usize,
    delta: f64,
}

fn prepare(points: &[(f64, f64)], k: usize, delta: f64, eps: f64, opts: &RebwOptions) -> Result<Prepared, InterpError> {
    let n = points.len();
    if n == 0 || k >= n {
        return Err(InterpError::InsufficientNodes { have: n, need: k + 1 });
    }
    if !(delta > 0.0) || eps.is_nan() || eps < 0.0 {
        return Err(InterpError::InvalidArgument(format!("delta={delta}, eps={eps}")));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(InterpError::InvalidArgument("non-finite sample".into()));
    }
    let max_degree = (n - 1).checked_sub(2 * k);
    let degree = match (opts.degree, max_degree) {
        (Some(d), Some(m)) if d <= m => d,
        (None, Some(m)) => m,
        _ => {
            let d = opts.degree.unwrap_or(0);
            return Err(InterpError::InsufficientNodes { have: n, need: d + 2 * k + 1 });
        }
    };
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    if let Some(w) = xs.windows(2).find(|w| w[1] - w[0] < delta * (1.0 - 1e-12)) {
        return Err(InterpError::NotSeparated { a: w[0], b: w[1], delta });
    }
    let (lo, hi) = super::hull(points);
    let map = AffineMap::from_interval(lo, hi);
    let inside = lo >= -1.0 && hi <= 1.0;
    let delta = if inside { delta } else { delta / map.half_width };
    Ok(Prepared {
        map,
        t: points.iter().map(|p| map.to_unit(p.0)).collect(),
        y: points.iter().map(|p| p.1).collect(),
        degree,
        delta,
    })
}

fn binomial(k: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// LP1 over unit-variable nodes. Variables: `s_0..s_k` (with `s_k = 1`),
/// Chebyshev coefficients `r_0..r_{r_degree}`, then the residual bound.
pub fn lp1_program(t: &[f64], y: &[f64], k: usize, r_degree: usize, cap: f64) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let s: Vec<usize> = (0..=k)
        .map(|j| {
            let b = if j == k { 1.0 } else { binomial(k, j) };
            let lo = if j == k { 1.0 } else { -b };
            lp.add_var(format!("s{j}"), lo, b, 0.0)
        })
        .collect();
    let r: Vec<usize> = (0..=r_degree).map(|j| lp.add_var(format!("r{j}"), f64::NEG_INFINITY, f64::INFINITY, 0.0)).collect();
    let slack = lp.add_var("t", 0.0, cap, 1.0);
    for (&ti, &yi) in t.iter().zip(y) {
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(k + r_degree + 3);
        let mut pow = 1.0;
        for &sj in &s {
            terms.push((sj, -yi * pow));
            pow *= ti;
        }
        terms.extend(r.iter().zip(chebyshev_row(ti, r_degree)).map(|(&v, c)| (v, c)));
        let mut upper = terms.clone();
        upper.push((slack, -1.0));
        lp.add_constraint(upper, Relation::Le, 0.0);
        terms.push((slack, 1.0));
        lp.add_constraint(terms, Relation::Ge, 0.0);
    }
    lp
}

/// LP2 with the locator fixed. `weights` are `s(x_i)` divided by their largest
/// magnitude. Variables: Chebyshev coefficients `q_0..q_degree`, then the bound.
pub fn lp2_program(t: &[f64], y: &[f64], weights: &[f64], degree: usize, cap: f64) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let q: Vec<usize> = (0..=degree).map(|j| lp.add_var(format!("q{j}"), f64::NEG_INFINITY, f64::INFINITY, 0.0)).collect();
    let slack = lp.add_var("t", 0.0, cap, 1.0);
    for ((&ti, &yi), &wi) in t.iter().zip(y).zip(weights) {
        let mut terms: Vec<(usize, f64)> = q.iter().zip(chebyshev_row(ti, degree)).map(|(&v, c)| (v, wi * c)).collect();
        let mut upper = terms.clone();
        upper.push((slack, -1.0));
        lp.add_constraint(upper, Relation::Le, wi * yi);
        terms.push((slack, 1.0));
        lp.add_constraint(terms, Relation::Ge, wi * yi);
    }
    lp
}

fn least_squares(t: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>, InterpError> {
    let a = DMatrix::from_fn(t.len(), degree + 1, |i, j| chebyshev_row(t[i], degree)[j]);
    let b = DVector::from_column_slice(y);
    let sol = a.svd(true, true).solve(&b, 1e-14).map_err(|e| InterpError::Unrecoverable(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}

fn solve(lp: &LinearProgram, stage: &'static str) -> Result<Vec<f64>, InterpError> {
    // the residual bound is always the last variable
    match solve_minimax(lp, lp.num_vars() - 1)? {
        LpOutcome::Feasible(x) => Ok(x),
        LpOutcome::Infeasible => Err(InterpError::AssumptionViolated(stage)),
    }
}

fn trusted_nodes(weights: &[f64], k: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]));
    let mut trusted: Vec<bool> = weights.iter().map(|&w| w >= TRUST_RATIO).collect();
    for &i in order.iter().take(k) {
        trusted[i] = false;
    }
    trusted
}

fn ln_guarantee(delta: f64, n: usize, eps: f64) -> f64 {
    2.0 * n as f64 * (10.0 / delta).ln() + eps.ln()
}

/// Decodes `points` (at most `k` of them arbitrary, the rest within `eps` of a
/// polynomial of the target degree). `eps` may be infinite to drop the caps.
pub fn robust_berlekamp_welch(points: &[(f64, f64)], k: usize, delta: f64, eps: f64) -> Result<Decoded, InterpError> {
    robust_berlekamp_welch_with(points, k, delta, eps, &RebwOptions::default())
}

pub fn robust_berlekamp_welch_with(
    points: &[(f64, f64)],
    k: usize,
    delta: f64,
    eps: f64,
    opts: &RebwOptions,
) -> Result<Decoded, InterpError> {
    let p = prepare(points, k, delta, eps, opts)?;
    let n = points.len();
    let guarantee = ln_guarantee(p.delta, n, eps + opts.tolerance);
    if k == 0 {
        let coeffs = least_squares(&p.t, &p.y, p.degree)?;
        return Ok(Decoded {
            series: ChebyshevSeries::new(coeffs, p.map),
            locator: vec![1.0],
            locator_weights: vec![1.0; n],
            trusted: vec![true; n],
            lp1_residual: 0.0,
            lp2_residual: 0.0,
            refit: true,
            delta: p.delta,
            ln_guarantee: guarantee,
        });
    }

    let cap1 = 2f64.powi(k as i32) * eps + opts.tolerance;
    let x1 = solve(&lp1_program(&p.t, &p.y, k, p.degree + k, cap1), "LP1")?;
    let locator: Vec<f64> = x1[..=k].to_vec();
    let s_poly = Polynomial::new(locator.clone());
    let s_vals: Vec<f64> = p.t.iter().map(|&t| s_poly.eval(t)).collect();
    let s_max = s_vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(s_max > 0.0) {
        return Err(InterpError::Unrecoverable("locator vanishes at every node".into()));
    }
    let weights: Vec<f64> = s_vals.iter().map(|v| v / s_max).collect();

    let ln_cap2 = n as f64 * (10.0 / p.delta).ln() + eps.ln();
    let cap2 = (ln_cap2.exp() + opts.tolerance) / s_max;
    let x2 = solve(&lp2_program(&p.t, &p.y, &weights, p.degree, cap2), "LP2")?;
    let mut coeffs = x2[..=p.degree].to_vec();
    let lp2_residual = x2[p.degree + 1];

    let locator_weights: Vec<f64> = weights.iter().map(|w| w.abs()).collect();
    let trusted = trusted_nodes(&locator_weights, k);
    let mut refit = false;
    if opts.refit {
        let (tt, yy): (Vec<f64>, Vec<f64>) = p
            .t
            .iter()
            .zip(&p.y)
            .zip(&trusted)
            .filter(|(_, &ok)| ok)
            .map(|((&t, &y), _)| (t, y))
            .unzip();
        if tt.len() > p.degree {
            let ls = least_squares(&tt, &yy, p.degree)?;
            let series = ChebyshevSeries::new(ls.clone(), AffineMap::IDENTITY);
            let worst = p
                .t
                .iter()
                .zip(&p.y)
                .zip(&weights)
                .map(|((&t, &y), &w)| (w * (series.eval(t) - y)).abs())
                .fold(0.0, f64::max);
            if worst <= cap2 {
                coeffs = ls;
                refit = true;
            }
        }
    }

    Ok(Decoded {
        series: ChebyshevSeries::new(coeffs, p.map),
        locator,
        locator_weights,
        trusted,
        lp1_residual: x1[k + 1 + p.degree + k + 1],
        lp2_residual,
        refit,
        delta: p.delta,
        ln_guarantee: guarantee,
    })
}

/// The two LPs of a decoding run, for export. LP2 is built from the LP1 solution
/// and is absent when LP1 fails.
pub fn rebw_programs(
    points: &[(f64, f64)],
    k: usize,
    delta: f64,
    eps: f64,
    opts: &RebwOptions,
) -> Result<(LinearProgram, Option<LinearProgram>), InterpError> {
    let p = prepare(points, k, delta, eps, opts)?;
    let cap1 = 2f64.powi(k as i32) * eps + opts.tolerance;
    let lp1 = lp1_program(&p.t, &p.y, k, p.degree + k, cap1);
    let lp2 = match solve(&lp1, "LP1") {
        Ok(x1) => {
            let s = Polynomial::new(x1[..=k].to_vec());
            let vals: Vec<f64> = p.t.iter().map(|&t| s.eval(t)).collect();
            let s_max = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let w: Vec<f64> = vals.iter().map(|v| v / s_max).collect();
            let cap2 = ((points.len() as f64 * (10.0 / p.delta).ln() + eps.ln()).exp() + opts.tolerance) / s_max;
            Some(lp2_program(&p.t, &p.y, &w, p.degree, cap2))
        }
        Err(_) => None,
    };
    Ok((lp1, lp2))
}
