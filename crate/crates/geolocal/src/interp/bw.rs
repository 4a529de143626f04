//! Reference Berlekamp-Welch decoder over the reals: one linear system for the
//! error locator `E` and `Q = E p`, then polynomial division.

use nalgebra::{DMatrix, DVector};

use super::poly::{AffineMap, Polynomial};
use super::InterpError;

const CONSISTENCY_TOL: f64 = 1e-8;

/// Recovers `p` of degree at most `deg_bound` from exact values at all but at
/// most `k` of the nodes.
pub fn classic_berlekamp_welch(points: &[(f64, f64)], k: usize, deg_bound: usize) -> Result<Polynomial, InterpError> {
    let n = points.len();
    if n < deg_bound + 2 * k + 1 {
        return Err(InterpError::InsufficientNodes { have: n, need: deg_bound + 2 * k + 1 });
    }
    let (lo, hi) = super::hull(points);
    let map = AffineMap::from_interval(lo, hi);
    let t: Vec<f64> = points.iter().map(|p| map.to_unit(p.0)).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();

    // unknowns: e_0..e_{k-1} (E monic of degree k), q_0..q_{k+deg}
    let nq = k + deg_bound + 1;
    let mut a = DMatrix::zeros(n, k + nq);
    let mut b = DVector::zeros(n);
    for i in 0..n {
        let mut pow = 1.0;
        for j in 0..=(k + deg_bound) {
            if j < k {
                a[(i, j)] = -y[i] * pow;
            }
            if j == k {
                b[i] = y[i] * pow;
            }
            a[(i, k + j)] = pow;
            pow *= t[i];
        }
    }
    let svd = a.clone().svd(true, true);
    let sol = svd.solve(&b, 1e-13).map_err(|e| InterpError::Unrecoverable(e.to_string()))?;
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let resid = (&a * &sol - &b).amax();
    if resid > CONSISTENCY_TOL * scale {
        return Err(InterpError::Unrecoverable(format!("key equations inconsistent (residual {resid:e})")));
    }
    let mut e: Vec<f64> = sol.iter().take(k).copied().collect();
    e.push(1.0);
    let q = Polynomial::new(sol.iter().skip(k).copied().collect());
    let (p, rem) = q.div_rem(&Polynomial::new(e)).expect("monic locator is nonzero");
    if rem.coeffs().iter().any(|c| c.abs() > CONSISTENCY_TOL * scale) {
        return Err(InterpError::Unrecoverable("locator does not divide Q".into()));
    }
    let disagreements = t.iter().zip(&y).filter(|(&ti, &yi)| (p.eval(ti) - yi).abs() > CONSISTENCY_TOL * scale).count();
    if disagreements > k {
        return Err(InterpError::Unrecoverable(format!("{disagreements} disagreements exceed k={k}")));
    }
    let inv = 1.0 / map.half_width;
    Ok(p.compose_affine(inv, -map.center * inv))
}
