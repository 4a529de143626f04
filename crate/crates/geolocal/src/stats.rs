//! Quadrature and goodness-of-fit helpers shared by samplers and tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Composite Simpson rule with `intervals` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals.max(2) + intervals % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            w * f(a + i as f64 * h)
        })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson test of `samples` against a density supported in `[lo, hi]`.
///
/// `cells` equal-width cells; expected counts come from Simpson quadrature of
/// `density`. Cells with expected count below 5 are pooled with a neighbour.
pub fn chi_square_density<F: Fn(f64) -> f64>(
    samples: &[f64],
    density: F,
    lo: f64,
    hi: f64,
    cells: usize,
) -> ChiSquareOutcome {
    let total = samples.len() as f64;
    let width = (hi - lo) / cells as f64;
    let mut observed = vec![0.0; cells];
    for &s in samples {
        let i = (((s - lo) / width).floor().max(0.0) as usize).min(cells - 1);
        observed[i] += 1.0;
    }
    let expected: Vec<f64> = (0..cells)
        .map(|i| {
            let a = lo + i as f64 * width;
            total * simpson(&density, a, a + width, 64)
        })
        .collect();

    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in observed.into_iter().zip(expected) {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    let statistic: f64 = pooled.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = pooled.len().saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64).map(|d| 1.0 - d.cdf(statistic)).unwrap_or(f64::NAN);
    ChiSquareOutcome { statistic, dof, p_value }
}
