//! Remez-type growth factors for polynomials known on separated nodes.

use std::f64::consts::E;

use statrs::function::gamma::ln_gamma;

use super::InterpError;

/// `(e^2 L / (delta d))^d`: growth of a degree-`d` polynomial from its max on
/// `delta`-separated nodes in `[0, b]` to the point `L`.
pub fn remez_extrapolation_bound(delta: f64, d: usize, reach: f64) -> Result<f64, InterpError> {
    Ok(ln_remez_extrapolation_bound(delta, d, reach)?.exp())
}

pub fn ln_remez_extrapolation_bound(delta: f64, d: usize, reach: f64) -> Result<f64, InterpError> {
    if !(delta > 0.0) || !(reach > 0.0) || d == 0 {
        return Err(InterpError::InvalidArgument(format!("delta={delta}, d={d}, L={reach}")));
    }
    Ok(d as f64 * (E * E * reach / (delta * d as f64)).ln())
}

/// `2^d / (delta^d d!)`, evaluated in log space.
pub fn remez_interior_bound(delta: f64, d: usize) -> Result<f64, InterpError> {
    if !(delta > 0.0) {
        return Err(InterpError::InvalidArgument(format!("delta={delta}")));
    }
    let df = d as f64;
    Ok((df * 2f64.ln() - df * delta.ln() - ln_gamma(df + 1.0)).exp())
}

/// `delta^d / (d + 1)`: a monic degree-`d` polynomial reaches this magnitude on
/// any `d + 1` nodes that are `delta`-separated.
pub fn leading_coeff_floor(delta: f64, d: usize) -> Result<f64, InterpError> {
    if !(delta > 0.0) {
        return Err(InterpError::InvalidArgument(format!("delta={delta}")));
    }
    Ok(delta.powi(d as i32) / (d + 1) as f64)
}
