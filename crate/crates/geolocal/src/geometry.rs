//! The Gaussian coefficient ensemble with variance `1/l` per coordinate, random
//! planes through the worst-case point, and the radial and angular marginals.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::hamiltonian::{CoeffVector, HamiltonianError};
use crate::lattice::{BitString, TermTable};
use crate::stats::{chi_square_density, ChiSquareOutcome};

/// Gram-Schmidt residual below which a plane draw is rejected and retried.
pub const PLANE_RESIDUAL_FLOOR: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("worst-case point must be nonzero")]
    ZeroTarget,
    #[error("argument {0} outside the density's domain")]
    Domain(f64),
    #[error("dimension l={0} too small")]
    DimensionTooSmall(usize),
    #[error("frame axes are not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    l: usize,
    sigma2: f64,
}

impl EnsembleParams {
    pub fn new(l: usize) -> Result<Self, GeometryError> {
        if l == 0 {
            return Err(GeometryError::DimensionTooSmall(l));
        }
        Ok(Self { l, sigma2: 1.0 / l as f64 })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// `l` i.i.d. normals of variance `1/l`.
pub fn sample_values<R: Rng + ?Sized>(params: &EnsembleParams, rng: &mut R) -> Vec<f64> {
    let s = params.sigma();
    (0..params.l).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn sample_coeffs<R: Rng + ?Sized>(table: &Arc<TermTable>, rng: &mut R) -> CoeffVector {
    let params = EnsembleParams::new(table.len()).expect("tables are never empty");
    CoeffVector::new(table.clone(), sample_values(&params, rng)).expect("finite samples")
}

/// Orthonormal pair spanning a plane through the origin and the target point.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneFrame {
    table: Arc<TermTable>,
    e_z: Vec<f64>,
    e_x: Vec<f64>,
}

impl PlaneFrame {
    /// Builds a frame from explicit axes, orthonormalizing `x_dir` against `z_dir`.
    pub fn from_axes(table: Arc<TermTable>, z_dir: &[f64], x_dir: &[f64]) -> Result<Self, GeometryError> {
        let e_z = unit(z_dir).ok_or(GeometryError::ZeroTarget)?;
        let e_x = orthogonalize(x_dir, &e_z).ok_or(GeometryError::ZeroTarget)?;
        if e_z.len() != table.len() || e_x.len() != table.len() {
            return Err(HamiltonianError::LengthMismatch { got: e_z.len(), expected: table.len() }.into());
        }
        Ok(Self { table, e_z, e_x })
    }

    /// Uses the axes as given, which must already be orthonormal to within
    /// `1e-9`. Rebuilding a recorded frame this way reproduces its points bit
    /// for bit.
    pub fn from_orthonormal(table: Arc<TermTable>, e_z: Vec<f64>, e_x: Vec<f64>) -> Result<Self, GeometryError> {
        if e_z.len() != table.len() || e_x.len() != table.len() {
            let got = if e_z.len() != table.len() { e_z.len() } else { e_x.len() };
            return Err(HamiltonianError::LengthMismatch { got, expected: table.len() }.into());
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let worst = [dot(&e_z, &e_z) - 1.0, dot(&e_x, &e_x) - 1.0, dot(&e_z, &e_x)]
            .iter()
            .fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) });
        if !(worst <= 1e-9) {
            return Err(GeometryError::NotOrthonormal(worst));
        }
        Ok(Self { table, e_z, e_x })
    }

    pub fn e_z(&self) -> &[f64] {
        &self.e_z
    }

    pub fn e_x(&self) -> &[f64] {
        &self.e_x
    }

    pub fn table(&self) -> &Arc<TermTable> {
        &self.table
    }

    /// `r cos(theta) e_z + r sin(theta) e_x`.
    pub fn embed(&self, r: f64, theta: f64) -> CoeffVector {
        let (s, c) = theta.sin_cos();
        let values = self.e_z.iter().zip(&self.e_x).map(|(z, x)| r * (c * z + s * x)).collect();
        CoeffVector::new(self.table.clone(), values).expect("finite embedding")
    }
}

pub fn embed(frame: &PlaneFrame, r: f64, theta: f64) -> CoeffVector {
    frame.embed(r, theta)
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

fn orthogonalize(q: &[f64], e: &[f64]) -> Option<Vec<f64>> {
    let dot: f64 = q.iter().zip(e).map(|(a, b)| a * b).sum();
    let mut r: Vec<f64> = q.iter().zip(e).map(|(a, b)| a - dot * b).collect();
    // second pass keeps orthogonality at rounding level
    let dot2: f64 = r.iter().zip(e).map(|(a, b)| a * b).sum();
    r.iter_mut().zip(e).for_each(|(a, b)| *a -= dot2 * b);
    let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    (norm >= PLANE_RESIDUAL_FLOOR).then(|| r.iter().map(|x| x / norm).collect())
}

/// `e_z` along `g_worst`, `e_x` from a uniformly random direction.
pub fn sample_plane<R: Rng + ?Sized>(g_worst: &CoeffVector, rng: &mut R) -> Result<PlaneFrame, GeometryError> {
    let e_z = unit(g_worst.values()).ok_or(GeometryError::ZeroTarget)?;
    if e_z.len() < 2 {
        return Err(GeometryError::DimensionTooSmall(e_z.len()));
    }
    loop {
        let q: Vec<f64> = (0..e_z.len()).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(e_x) = unit(&q).and_then(|q| orthogonalize(&q, &e_z)) {
            return Ok(PlaneFrame { table: g_worst.table().clone(), e_z, e_x });
        }
    }
}

/// `sigma * sqrt(chi^2_l)`.
pub fn sample_radius<R: Rng + ?Sized>(params: &EnsembleParams, rng: &mut R) -> f64 {
    let ss: f64 = (0..params.l).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum();
    params.sigma() * ss.sqrt()
}

/// First coordinate of a uniform point on the sphere in `R^l`.
pub fn sample_angle_x<R: Rng + ?Sized>(l: usize, rng: &mut R) -> Result<f64, GeometryError> {
    if l < 2 {
        return Err(GeometryError::DimensionTooSmall(l));
    }
    let u: Vec<f64> = (0..l).map(|_| rng.sample(StandardNormal)).collect();
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((u[0] / norm).clamp(-1.0, 1.0))
}

/// `Gamma(l/2) / (sqrt(pi) Gamma((l-1)/2))`.
pub fn angular_constant(l: usize) -> f64 {
    let l = l as f64;
    (ln_gamma(l / 2.0) - 0.5 * PI.ln() - ln_gamma((l - 1.0) / 2.0)).exp()
}

/// Density of `cos(theta)` for a uniform direction in `R^l`.
pub fn angular_density(x: f64, l: usize) -> Result<f64, GeometryError> {
    if l <= 3 {
        return Err(GeometryError::DimensionTooSmall(l));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(GeometryError::Domain(x));
    }
    let c = angular_constant(l);
    let lf = l as f64;
    debug_assert!(((lf - 2.0) / (2.0 * PI)).sqrt() < c && c < (lf / (2.0 * PI)).sqrt());
    Ok(c * (1.0 - x * x).powf((lf - 3.0) / 2.0))
}

/// Scaled chi density of `|g|` under the ensemble.
pub fn radial_density(r: f64, params: &EnsembleParams) -> Result<f64, GeometryError> {
    if r < 0.0 || !r.is_finite() {
        return Err(GeometryError::Domain(r));
    }
    if r == 0.0 {
        return Ok(if params.l == 1 { (2.0 / PI).sqrt() / params.sigma() } else { 0.0 });
    }
    let l = params.l as f64;
    let s2 = params.sigma2;
    let ln = (l - 1.0) * r.ln() - r * r / (2.0 * s2) - (l / 2.0 - 1.0) * 2f64.ln() - ln_gamma(l / 2.0) - l / 2.0 * s2.ln();
    Ok(ln.exp())
}

/// Closed-form moments of the radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialMoments {
    pub mean: f64,
    pub second: f64,
    /// Leading terms of the large-`l` variance expansion.
    pub variance_expansion: f64,
    pub variance: f64,
}

pub fn radial_moments(params: &EnsembleParams) -> RadialMoments {
    let l = params.l as f64;
    let mean = params.sigma() * 2f64.sqrt() * (ln_gamma((l + 1.0) / 2.0) - ln_gamma(l / 2.0)).exp();
    let second = l * params.sigma2;
    RadialMoments {
        mean,
        second,
        variance_expansion: 1.0 / (2.0 * l) - 1.0 / (8.0 * l * l),
        variance: second - mean * mean,
    }
}

/// Multiplies entry `i` by the conjugation sign of term `i` under `Z^mask`.
pub fn conjugate_coeffs(coeffs: &CoeffVector, mask: &BitString) -> Result<CoeffVector, GeometryError> {
    Ok(coeffs.conjugated(mask)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerStats {
    pub l: usize,
    pub samples: usize,
    pub mean_r: f64,
    pub mean_r2: f64,
    pub var_r: f64,
    pub expected_mean_r: f64,
    pub expected_mean_r2: f64,
    pub expected_var_r: f64,
    pub chi2_angle: f64,
    pub chi2_dof: usize,
    pub chi2_p_value: f64,
}

/// Monte-Carlo moments of the radius and a chi-square test of the angle sampler.
pub fn sampler_stats<R: Rng + ?Sized>(l: usize, samples: usize, rng: &mut R) -> Result<SamplerStats, GeometryError> {
    let params = EnsembleParams::new(l)?;
    if l <= 3 {
        return Err(GeometryError::DimensionTooSmall(l));
    }
    let radii: Vec<f64> = (0..samples).map(|_| sample_radius(&params, rng)).collect();
    let xs = (0..samples).map(|_| sample_angle_x(l, rng)).collect::<Result<Vec<_>, _>>()?;
    let n = samples as f64;
    let mean_r = radii.iter().sum::<f64>() / n;
    let mean_r2 = radii.iter().map(|r| r * r).sum::<f64>() / n;
    let var_r = radii.iter().map(|r| (r - mean_r).powi(2)).sum::<f64>() / (n - 1.0);
    let chi = angle_chi_square(&xs, l);
    let m = radial_moments(&params);
    Ok(SamplerStats {
        l,
        samples,
        mean_r,
        mean_r2,
        var_r,
        expected_mean_r: m.mean,
        expected_mean_r2: m.second,
        expected_var_r: m.variance_expansion,
        chi2_angle: chi.statistic,
        chi2_dof: chi.dof,
        chi2_p_value: chi.p_value,
    })
}

/// Chi-square of angle samples against the exact density, 40 cells over the
/// central window of +-6 standard deviations (clipped to [-1, 1]).
pub fn angle_chi_square(xs: &[f64], l: usize) -> ChiSquareOutcome {
    let half = (6.0 / (l as f64).sqrt()).min(1.0);
    let inside: Vec<f64> = xs.iter().copied().filter(|x| x.abs() <= half).collect();
    let mass = crate::stats::simpson(|x| angular_density(x, l).unwrap_or(0.0), -half, half, 4000);
    chi_square_density(&inside, |x| angular_density(x, l).unwrap_or(0.0) / mass, -half, half, 40)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use crate::rng::SeedSource;

    #[test]
    fn constant_within_gautschi_bounds() {
        for l in [4usize, 5, 10, 100, 1000, 10_000] {
            let c = angular_constant(l);
            let lf = l as f64;
            assert!(((lf - 2.0) / (2.0 * PI)).sqrt() < c && c < (lf / (2.0 * PI)).sqrt(), "l={l}");
        }
    }

    #[test]
    fn densities_normalize() {
        let a = crate::stats::simpson(|x| angular_density(x, 50).unwrap(), -1.0, 1.0, 20_000);
        assert!((a - 1.0).abs() < 1e-8);
        let p = EnsembleParams::new(100).unwrap();
        let r = crate::stats::simpson(|r| radial_density(r, &p).unwrap(), 0.0, 5.0, 20_000);
        assert!((r - 1.0).abs() < 1e-8);
        assert_eq!(angular_density(1.0, 10).unwrap(), 0.0);
        assert!(angular_density(1.1, 10).is_err());
        assert!(radial_density(-0.1, &p).is_err());
    }

    #[test]
    fn frame_and_embed() {
        let t = Arc::new(TermTable::build(Lattice::open(1, 2).unwrap()));
        let mut rng = SeedSource::new(5).stream("t", "plane", 0);
        let g = sample_coeffs(&t, &mut rng);
        let f = sample_plane(&g, &mut rng).unwrap();
        let back = f.embed(g.norm2(), 0.0);
        for (a, b) in back.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(f.embed(0.0, 1.3).values().iter().all(|v| *v == 0.0));
        assert!(sample_plane(&CoeffVector::zeros(t), &mut rng).is_err());
    }
}
