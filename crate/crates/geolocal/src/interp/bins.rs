//! Families of equal-width, equally spaced bins and the one-sample-per-bin
//! selection that turns i.i.d. draws into a separated node set.

use serde::{Deserialize, Serialize};

use super::InterpError;
use crate::geometry::{angular_density, radial_density, EnsembleParams};
use crate::stats::simpson;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinFamily {
    intervals: Vec<(f64, f64)>,
    delta: f64,
    p_min: f64,
}

impl BinFamily {
    /// `count` bins of width `delta` with gaps `delta`, starting at `start`.
    pub fn regular(start: f64, delta: f64, count: usize, p_min: f64) -> Result<Self, InterpError> {
        if !(delta > 0.0) || count == 0 {
            return Err(InterpError::InvalidBins(format!("delta={delta}, count={count}")));
        }
        let intervals = (0..count)
            .map(|i| {
                let a = start + 2.0 * i as f64 * delta;
                (a, a + delta)
            })
            .collect();
        Ok(Self { intervals, delta, p_min })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Smallest probability mass of a single bin under the target density.
    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.intervals[0].0, self.intervals[self.intervals.len() - 1].1)
    }

    /// Index of the bin containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let i = self.intervals.partition_point(|&(a, _)| a <= x).checked_sub(1)?;
        let (a, b) = self.intervals[i];
        (a <= x && x <= b).then_some(i)
    }

    fn with_masses<F: Fn(f64) -> f64>(mut self, density: F) -> Self {
        self.p_min = self
            .intervals
            .iter()
            .map(|&(a, b)| simpson(&density, a, b, 32))
            .fold(f64::INFINITY, f64::min);
        self
    }
}

/// Bins of width `l^{-3/2}` centred on zero for the angular coordinate `x = cos(theta)`.
///
/// The half-width of the covered range is `(2B - 1) * delta / 2`, which equals
/// `1/sqrt(l)` up to half a bin when `B = l`.
pub fn make_bins_circumference(l: usize, bins: usize) -> Result<BinFamily, InterpError> {
    if l <= 3 || bins == 0 {
        return Err(InterpError::InvalidBins(format!("need l > 3 and B >= 1, got l={l}, B={bins}")));
    }
    let delta = (l as f64).powf(-1.5);
    let half = (2 * bins - 1) as f64 * delta / 2.0;
    if half >= 1.0 {
        return Err(InterpError::InvalidBins(format!("{bins} bins of width {delta:e} do not fit in (-1, 1)")));
    }
    Ok(BinFamily::regular(-half, delta, bins, 0.0)?.with_masses(|x| angular_density(x, l).unwrap_or(0.0)))
}

/// Bins of width `1/(2 l^{3/2})` ending at radius 1.
///
/// The covered range is `[1 - (2B - 1) delta, 1]`, which is `[1 - 1/sqrt(l), 1]`
/// up to one bin when `B = l`.
pub fn make_bins_radial(l: usize, bins: usize) -> Result<BinFamily, InterpError> {
    if l <= 3 || bins == 0 {
        return Err(InterpError::InvalidBins(format!("need l > 3 and B >= 1, got l={l}, B={bins}")));
    }
    let delta = 0.5 * (l as f64).powf(-1.5);
    let lo = 1.0 - (2 * bins - 1) as f64 * delta;
    if lo <= 0.0 {
        return Err(InterpError::InvalidBins(format!("{bins} bins of width {delta:e} reach below radius 0")));
    }
    let params = EnsembleParams::new(l).expect("l > 3");
    Ok(BinFamily::regular(lo, delta, bins, 0.0)?.with_masses(|r| radial_density(r, &params).unwrap_or(0.0)))
}

/// Keeps the first sample falling in each bin; returns `(bin, sample)` in bin order.
pub fn delta_separated_subset(samples: &[f64], bins: &BinFamily) -> Vec<(usize, f64)> {
    let mut chosen: Vec<Option<f64>> = vec![None; bins.len()];
    for &s in samples {
        if let Some(i) = bins.locate(s) {
            chosen[i].get_or_insert(s);
        }
    }
    chosen.into_iter().enumerate().filter_map(|(i, s)| s.map(|s| (i, s))).collect()
}

/// Draw count `ln(1/((1 - c) failure)) / p_min` after which at least a fraction
/// `c` of the bins is occupied except with probability `failure`.
pub fn occupancy_sample_count(p_min: f64, c: f64, failure: f64) -> usize {
    ((1.0 / ((1.0 - c) * failure)).ln() / p_min).ceil() as usize
}
