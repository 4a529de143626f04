//! Two-level reduction: circumference interpolation on circles of sampled radius
//! inside a random plane through `g_worst`, then radial interpolation along the
//! `g_worst` axis.

mod ledger;
mod oracle;

use std::f64::consts::E;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{sample_angle_x, sample_plane, sample_radius, EnsembleParams, GeometryError, PlaneFrame};
use crate::hamiltonian::{exact_spectral_norm, output_probability, spectral_norm_bound, CoeffVector, EvolutionSpec, HamiltonianError};
use crate::interp::{
    delta_separated_subset, ln_remez_extrapolation_bound, make_bins_circumference, make_bins_radial,
    robust_berlekamp_welch_with, InterpError, RebwOptions,
};
use crate::lattice::BitString;
use crate::rng::{SeedSource, Stream};

pub use ledger::{
    assemble_bound_ledger, extended_f64, log10_add, log10_taylor_bound, BoundLedger, LedgerEntry, LedgerInputs,
};
pub use oracle::{
    average_case_oracle, AverageCaseOracle, CorruptionFn, CorruptionModel, EvalRecord, OracleConfig,
    SimulatedOracle, Stage,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{stage}: {source}")]
    Interp { stage: String, source: InterpError },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{stage}: {have} separated nodes after {attempts} attempts, need {need}")]
    InsufficientNodes { stage: String, have: usize, need: usize, attempts: u32 },
    #[error("{stage}: {count} nodes disagree with the decoded polynomial beyond the noise level, budget {k}")]
    TooManyDisagreements { stage: String, count: usize, k: usize },
    #[error("bound ledger is missing the {0} stage")]
    MissingStage(&'static str),
}

/// `ceil(e sqrt(l) tau) + ceil(log2(1/eps_a))`, the degree suggested by the
/// Taylor tail estimate on the unit ball.
pub fn default_degree(l: usize, tau: f64, epsilon_a: f64) -> usize {
    let base = (E * (l as f64).sqrt() * tau).ceil() as usize;
    let acc = if epsilon_a > 0.0 { (1.0 / epsilon_a).log2().ceil().max(0.0) as usize } else { 0 };
    base + acc
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionParams {
    /// Interpolation degree `m` in both stages.
    pub degree: usize,
    pub tau: f64,
    pub radial_bins: usize,
    pub circumference_bins: usize,
    pub radial_samples: usize,
    pub circumference_samples: usize,
    /// Error budgets handed to the decoders.
    pub radial_k: usize,
    pub circumference_k: usize,
    /// Doublings of the sample count allowed when too few bins are occupied.
    pub max_doublings: u32,
    pub seed: u64,
}

impl ReductionParams {
    /// `B_radial = 2m`, `B_circ = ceil(m/0.4) + 1`, budgets `0.11 B` and `0.25 B`.
    pub fn for_degree(degree: usize) -> Self {
        let radial_bins = 2 * degree;
        let circumference_bins = (5 * degree).div_ceil(2) + 1;
        Self {
            degree,
            tau: 1.0,
            radial_bins,
            circumference_bins,
            radial_samples: 1000,
            circumference_samples: 400,
            radial_k: 11 * radial_bins / 100,
            circumference_k: circumference_bins / 4,
            max_doublings: 3,
            seed: 0,
        }
    }

    pub fn taylor_order(&self) -> usize {
        self.degree / 2
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.degree == 0 || !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(PipelineError::InvalidParams(format!("degree={}, tau={}", self.degree, self.tau)));
        }
        for (name, bins, k) in [
            ("radial", self.radial_bins, self.radial_k),
            ("circumference", self.circumference_bins, self.circumference_k),
        ] {
            if bins < self.degree + 2 * k + 1 {
                return Err(PipelineError::InvalidParams(format!(
                    "{name}: {bins} bins cannot hold degree {} with budget {k}",
                    self.degree
                )));
            }
        }
        Ok(())
    }
}

/// `(cos theta, (A(R, theta) + A(R, -theta)) / 2)`.
pub fn symmetrized_sample<O: AverageCaseOracle + ?Sized>(
    oracle: &O,
    frame: &PlaneFrame,
    radius: f64,
    theta: f64,
    stage: Stage,
) -> Result<(f64, f64), PipelineError> {
    let a = oracle.query(&frame.embed(radius, theta), stage)?;
    let b = oracle.query(&frame.embed(radius, -theta), stage)?;
    Ok((theta.cos(), 0.5 * (a + b)))
}

/// Everything a circumference stage leaves behind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircumferenceOutcome {
    pub index: usize,
    pub radius: f64,
    pub estimate: f64,
    /// Selected angle nodes `x = cos(theta)`.
    pub nodes: Vec<f64>,
    pub samples_drawn: usize,
    pub attempts: u32,
    pub k: usize,
    pub lp1_residual: f64,
    pub lp2_residual: f64,
    pub refit: bool,
    /// Nodes farther than the noise level from the decoded polynomial.
    pub disagreements: usize,
    /// Noise level assumed at the nodes, `eps_a` plus the largest Taylor
    /// truncation bound over the queried points, log10.
    #[serde(with = "extended_f64")]
    pub log10_node_noise: f64,
    /// Certified error of `estimate` against the degree-`m` surrogate at
    /// `(R, 0)`, log10.
    #[serde(with = "extended_f64")]
    pub log10_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircumferenceFailure {
    pub index: usize,
    pub radius: f64,
    pub message: String,
}

/// Nodes where `|q(x) - y|` exceeds `noise`. Callers pass the decoder's noise
/// level including its LP tolerance.
pub fn count_disagreements(points: &[(f64, f64)], q: impl Fn(f64) -> f64, noise: f64) -> usize {
    points.iter().filter(|&&(x, y)| (q(x) - y).abs() > noise).count()
}

/// Largest system size for which `||H(g)||` is computed exactly rather than
/// bounded through the coefficient norms.
pub const EXACT_NORM_QUBITS: usize = 8;

/// `||H(g)||`, exact for small systems.
pub fn hamiltonian_norm(g: &CoeffVector) -> Result<f64, PipelineError> {
    if g.table().num_qubits() <= EXACT_NORM_QUBITS {
        Ok(exact_spectral_norm(g)?.min(spectral_norm_bound(g)))
    } else {
        Ok(spectral_norm_bound(g))
    }
}

/// Estimates `D(embed(frame, R, 0))` from oracle values on the circle of radius `R`.
pub fn interpolate_circumference<O: AverageCaseOracle + ?Sized>(
    oracle: &O,
    frame: &PlaneFrame,
    radius: f64,
    params: &ReductionParams,
    epsilon_a: f64,
    index: usize,
    rng: &mut Stream,
) -> Result<CircumferenceOutcome, PipelineError> {
    if !(radius > 0.0) {
        return Err(PipelineError::InvalidParams(format!("radius {radius}")));
    }
    let l = frame.e_z().len();
    let tag = || format!("circumference {index}");
    let bins = make_bins_circumference(l, params.circumference_bins)
        .map_err(|source| PipelineError::Interp { stage: tag(), source })?;
    let need = params.degree + 2 * params.circumference_k + 1;
    let mut count = params.circumference_samples;
    let mut attempts = 0;
    let selected = loop {
        attempts += 1;
        let xs = (0..count).map(|_| sample_angle_x(l, rng)).collect::<Result<Vec<_>, _>>()?;
        let sel = delta_separated_subset(&xs, &bins);
        if sel.len() >= need {
            break sel;
        }
        if attempts > params.max_doublings {
            return Err(PipelineError::InsufficientNodes { stage: tag(), have: sel.len(), need, attempts });
        }
        count *= 2;
    };
    let stage = Stage::Circumference(index);
    let points = selected
        .iter()
        .map(|&(_, x)| symmetrized_sample(oracle, frame, radius, x.acos(), stage))
        .collect::<Result<Vec<_>, _>>()?;

    let mut h = 0.0f64;
    for &(_, x) in &selected {
        let th = x.acos();
        h = h.max(hamiltonian_norm(&frame.embed(radius, th))?).max(hamiltonian_norm(&frame.embed(radius, -th))?);
    }
    let log10_taylor = log10_taylor_bound(h, params.tau, params.taylor_order());
    let log10_noise = log10_add(epsilon_a.log10(), log10_taylor);
    let eps = 10f64.powf(log10_noise);
    let opts = RebwOptions { degree: Some(params.degree), ..Default::default() };
    let decoded = robust_berlekamp_welch_with(&points, params.circumference_k, bins.delta(), eps, &opts)
        .map_err(|source| PipelineError::Interp { stage: tag(), source })?;
    let disagreements = count_disagreements(&points, |x| decoded.eval(x), eps + opts.tolerance);
    if disagreements > params.circumference_k {
        return Err(PipelineError::TooManyDisagreements { stage: tag(), count: disagreements, k: params.circumference_k });
    }

    // nodes lie in [-half, half]; the target x = 1 sits 1 + half from the left end
    let half = bins.span().1;
    let remez = ln_remez_extrapolation_bound(bins.delta(), params.degree, 1.0 + half)
        .map_err(|source| PipelineError::Interp { stage: tag(), source })?
        / std::f64::consts::LN_10;
    let log10_guarantee = decoded.ln_guarantee / std::f64::consts::LN_10;
    let log10_bound = remez + log10_guarantee;

    Ok(CircumferenceOutcome {
        index,
        radius,
        estimate: decoded.eval(1.0),
        nodes: selected.iter().map(|&(_, x)| x).collect(),
        samples_drawn: count,
        attempts,
        k: params.circumference_k,
        lp1_residual: decoded.lp1_residual,
        lp2_residual: decoded.lp2_residual,
        refit: decoded.refit,
        disagreements,
        log10_node_noise: log10_noise,
        log10_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialStage {
    pub samples_drawn: usize,
    pub attempts: u32,
    pub occupancy: usize,
    pub bins: usize,
    pub k: usize,
    pub surviving_nodes: usize,
    pub delta: f64,
    pub lp1_residual: Option<f64>,
    pub lp2_residual: Option<f64>,
    pub disagreements: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum ReductionStatus {
    Ok,
    Failed { stage: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Frame {
    pub e_z: Vec<f64>,
    pub e_x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    pub schema_version: u32,
    pub status: ReductionStatus,
    pub estimate: Option<f64>,
    pub truth: Option<f64>,
    pub abs_error: Option<f64>,
    pub target_norm: f64,
    /// `None` when the bound overflows or is not certified.
    pub certified_bound: Option<f64>,
    #[serde(with = "extended_f64")]
    pub certified_bound_log10: f64,
    pub params: ReductionParams,
    pub oracle: OracleSummary,
    pub frame: Frame,
    pub radial: Option<RadialStage>,
    pub stages: Vec<CircumferenceOutcome>,
    pub failed_stages: Vec<CircumferenceFailure>,
    pub ledger_inputs: Option<LedgerInputs>,
    pub ledger: Vec<LedgerEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub epsilon_a: f64,
    pub delta_corrupt: f64,
    pub model: String,
}

impl ReductionReport {
    pub fn succeeded(&self) -> bool {
        matches!(self.status, ReductionStatus::Ok)
    }

    /// Exact value at the target, for test-mode comparisons.
    pub fn attach_truth(&mut self, g_worst: &CoeffVector, tau: f64) -> Result<(), PipelineError> {
        let n = g_worst.table().num_qubits();
        let truth = output_probability(&EvolutionSpec::new(g_worst.clone(), tau, BitString::zeros(n))?)?;
        self.truth = Some(truth);
        self.abs_error = self.estimate.map(|e| (e - truth).abs());
        Ok(())
    }
}

/// Runs the full reduction against `oracle`. Stage failures are recorded in the
/// report; only invalid inputs produce `Err`.
pub fn worst_to_average_reduce<O: AverageCaseOracle + ?Sized>(
    oracle: &O,
    oracle_summary: OracleSummary,
    g_worst: &CoeffVector,
    params: &ReductionParams,
) -> Result<ReductionReport, PipelineError> {
    params.validate()?;
    let target_norm = g_worst.norm2();
    if target_norm == 0.0 {
        return Err(GeometryError::ZeroTarget.into());
    }
    let l = g_worst.len();
    let seeds = SeedSource::new(params.seed);
    let frame = sample_plane(g_worst, &mut seeds.stream("reduce", "plane", 0))?;
    let mut report = ReductionReport {
        schema_version: REPORT_SCHEMA_VERSION,
        status: ReductionStatus::Ok,
        estimate: None,
        truth: None,
        abs_error: None,
        target_norm,
        certified_bound: None,
        certified_bound_log10: f64::INFINITY,
        params: params.clone(),
        oracle: oracle_summary.clone(),
        frame: Frame { e_z: frame.e_z().to_vec(), e_x: frame.e_x().to_vec() },
        radial: None,
        stages: Vec::new(),
        failed_stages: Vec::new(),
        ledger_inputs: None,
        ledger: Vec::new(),
    };
    let fail = |mut r: ReductionReport, stage: &str, message: String| {
        r.status = ReductionStatus::Failed { stage: stage.to_string(), message };
        Ok(r)
    };

    let ensemble = EnsembleParams::new(l)?;
    let bins = make_bins_radial(l, params.radial_bins)
        .map_err(|source| PipelineError::Interp { stage: "radial".into(), source })?;
    let need = params.degree + 2 * params.radial_k + 1;
    let mut rng = seeds.stream("reduce", "radial", 0);
    let mut count = params.radial_samples;
    let mut attempts = 0;
    let nodes = loop {
        attempts += 1;
        let rs: Vec<f64> = (0..count).map(|_| sample_radius(&ensemble, &mut rng)).collect();
        let sel = delta_separated_subset(&rs, &bins);
        if sel.len() >= need {
            break sel;
        }
        if attempts > params.max_doublings {
            let msg = PipelineError::InsufficientNodes { stage: "radial".into(), have: sel.len(), need, attempts };
            return fail(report, "radial", msg.to_string());
        }
        count *= 2;
    };
    let mut radial = RadialStage {
        samples_drawn: count,
        attempts,
        occupancy: nodes.len(),
        bins: bins.len(),
        k: params.radial_k,
        surviving_nodes: 0,
        delta: bins.delta(),
        lp1_residual: None,
        lp2_residual: None,
        disagreements: None,
    };

    let outcomes: Vec<Result<CircumferenceOutcome, PipelineError>> = nodes
        .par_iter()
        .enumerate()
        .map(|(i, &(_, r))| {
            let mut s = seeds.stream("reduce", "circ", i as u64);
            interpolate_circumference(oracle, &frame, r, params, oracle_summary.epsilon_a, i, &mut s)
        })
        .collect();
    for (i, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(o) => report.stages.push(o),
            Err(
                e @ (PipelineError::InsufficientNodes { .. }
                | PipelineError::Interp { .. }
                | PipelineError::TooManyDisagreements { .. }),
            ) => {
                report.failed_stages.push(CircumferenceFailure { index: i, radius: nodes[i].1, message: e.to_string() })
            }
            Err(e) => return Err(e),
        }
    }
    radial.surviving_nodes = report.stages.len();
    if report.stages.len() < need {
        report.radial = Some(radial);
        let msg = format!("{} circumference stages survived, need {need}", report.stages.len());
        return fail(report, "radial", msg);
    }

    let points: Vec<(f64, f64)> = report.stages.iter().map(|s| (s.radius, s.estimate)).collect();
    let circ_log10 = report.stages.iter().map(|s| s.log10_bound).fold(f64::NEG_INFINITY, f64::max);
    let eps = 10f64.powf(circ_log10);
    let opts = RebwOptions { degree: Some(params.degree), ..Default::default() };
    let decoded = match robust_berlekamp_welch_with(&points, params.radial_k, bins.delta(), eps, &opts) {
        Ok(d) => d,
        Err(e) => {
            report.radial = Some(radial);
            return fail(report, "radial", e.to_string());
        }
    };
    radial.lp1_residual = Some(decoded.lp1_residual);
    radial.lp2_residual = Some(decoded.lp2_residual);
    let disagreements = count_disagreements(&points, |x| decoded.eval(x), eps + opts.tolerance);
    radial.disagreements = Some(disagreements);
    report.radial = Some(radial);
    if disagreements > params.radial_k {
        let e = PipelineError::TooManyDisagreements { stage: "radial".into(), count: disagreements, k: params.radial_k };
        return fail(report, "radial", e.to_string());
    }
    report.estimate = Some(decoded.eval(target_norm));

    let inputs = LedgerInputs {
        degree: params.degree,
        taylor_order: params.taylor_order(),
        tau: params.tau,
        target_norm,
        target_h_bound: hamiltonian_norm(g_worst)?,
        radial_delta: bins.delta(),
        radial_rebw_delta: decoded.delta,
        radial_nodes: points.len(),
        lp_tolerance: opts.tolerance,
        log10_circumference_bound: Some(circ_log10),
    };
    let ledger = assemble_bound_ledger(&inputs)?;
    report.certified_bound_log10 = ledger.log10_total;
    report.certified_bound = Some(ledger.total()).filter(|t| t.is_finite());
    report.ledger = ledger.entries;
    report.ledger_inputs = Some(inputs);
    Ok(report)
}

/// Surviving corrupted nodes per stage, recomputed from the oracle's provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorruptionAudit {
    /// `(stage index, corrupted nodes, budget)`.
    pub circumference: Vec<(usize, usize, usize)>,
    /// Radial nodes whose circumference stage exceeded its budget.
    pub radial_bad: usize,
    pub radial_budget: usize,
}

impl CorruptionAudit {
    pub fn within_budgets(&self) -> bool {
        self.radial_bad <= self.radial_budget && self.circumference.iter().all(|&(_, c, k)| c <= k)
    }
}

/// Harness-side check of a finished report against the oracle's hidden labels.
pub fn audit_corruption(report: &ReductionReport, oracle: &SimulatedOracle, table: &std::sync::Arc<crate::lattice::TermTable>) -> Result<CorruptionAudit, PipelineError> {
    let frame = PlaneFrame::from_orthonormal(table.clone(), report.frame.e_z.clone(), report.frame.e_x.clone())?;
    let circumference: Vec<(usize, usize, usize)> = report
        .stages
        .iter()
        .map(|s| {
            let bad = s
                .nodes
                .iter()
                .filter(|&&x| {
                    let th = x.acos();
                    oracle.is_corrupted(&frame.embed(s.radius, th)) || oracle.is_corrupted(&frame.embed(s.radius, -th))
                })
                .count();
            (s.index, bad, s.k)
        })
        .collect();
    Ok(CorruptionAudit {
        radial_bad: circumference.iter().filter(|&&(_, c, k)| c > k).count(),
        circumference,
        radial_budget: report.params.radial_k,
    })
}

/// Draws a uniformly random bit string of length `n`.
pub fn random_mask<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitString {
    BitString::from_bits((0..n).map(|_| rng.random::<bool>()).collect())
}
