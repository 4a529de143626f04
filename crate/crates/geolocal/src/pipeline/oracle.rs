//! A simulated average-case solver: exact probabilities plus bounded noise,
//! replaced by garbage on a seeded random fraction of inputs.

use std::fmt;
use std::sync::{Arc, Mutex};

use rand::Rng;
use serde::Serialize;

use super::PipelineError;
use crate::hamiltonian::{plus_state, CoeffVector, Propagator};
use crate::lattice::BitString;
use crate::rng::{SeedSource, Stream};

pub type CorruptionFn = dyn Fn(&CoeffVector, f64, &mut Stream) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum CorruptionModel {
    /// `truth + offset`.
    Offset(f64),
    /// Uniform in `[0, 1]`, independent of the truth.
    Uniform,
    /// `f(point, truth, stream)`.
    Callback(Arc<CorruptionFn>),
}

impl Default for CorruptionModel {
    fn default() -> Self {
        CorruptionModel::Offset(1.0)
    }
}

impl fmt::Debug for CorruptionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorruptionModel::Offset(o) => write!(f, "Offset({o})"),
            CorruptionModel::Uniform => write!(f, "Uniform"),
            CorruptionModel::Callback(_) => write!(f, "Callback"),
        }
    }
}

impl CorruptionModel {
    pub fn describe(&self) -> String {
        match self {
            CorruptionModel::Offset(o) => format!("offset:{o}"),
            CorruptionModel::Uniform => "uniform".into(),
            CorruptionModel::Callback(_) => "callback".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub epsilon_a: f64,
    pub delta_corrupt: f64,
    pub model: CorruptionModel,
    pub seed: u64,
    pub tau: f64,
}

impl OracleConfig {
    pub fn exact(seed: u64) -> Self {
        Self { epsilon_a: 0.0, delta_corrupt: 0.0, model: CorruptionModel::default(), seed, tau: 1.0 }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..1.0).contains(&self.delta_corrupt) || !(self.epsilon_a >= 0.0 && self.epsilon_a.is_finite()) {
            return Err(PipelineError::InvalidParams(format!(
                "need 0 <= delta_corrupt < 1 and finite epsilon_a >= 0, got {} and {}",
                self.delta_corrupt, self.epsilon_a
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(PipelineError::InvalidParams(format!("tau={}", self.tau)));
        }
        Ok(())
    }
}

/// Where in the reduction an oracle call was made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum Stage {
    Circumference(usize),
    Radial,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub point: Vec<f64>,
    pub value: f64,
    pub stage: Stage,
    corrupted: bool,
}

impl EvalRecord {
    /// Provenance for post-hoc assertions.
    pub fn corrupted(&self) -> bool {
        self.corrupted
    }
}

/// What the reduction is allowed to see of a solver: values only.
pub trait AverageCaseOracle: Sync {
    fn query(&self, g: &CoeffVector, stage: Stage) -> Result<f64, PipelineError>;
}

pub struct SimulatedOracle {
    config: OracleConfig,
    seeds: SeedSource,
    trace: Option<Mutex<Vec<EvalRecord>>>,
}

struct Draw {
    corrupted: bool,
    value: f64,
}

impl SimulatedOracle {
    pub fn new(config: OracleConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let seeds = SeedSource::new(config.seed);
        Ok(Self { config, seeds, trace: None })
    }

    /// Also keeps every call as an [`EvalRecord`].
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    pub fn trace(&self) -> Vec<EvalRecord> {
        self.trace.as_ref().map(|t| t.lock().expect("trace lock").clone()).unwrap_or_default()
    }

    /// Whether the call at `g` returns a corrupted value. Harness use only.
    pub fn is_corrupted(&self, g: &CoeffVector) -> bool {
        let mut rng = self.seeds.keyed_stream("oracle", g.values());
        rng.random::<f64>() < self.config.delta_corrupt
    }

    fn draw(&self, g: &CoeffVector) -> Result<Draw, PipelineError> {
        let n = g.table().num_qubits();
        let plus = plus_state(&BitString::zeros(n));
        let truth = Propagator::new(g)?.amplitude(&plus, &plus, self.config.tau).norm_sqr();
        let mut rng = self.seeds.keyed_stream("oracle", g.values());
        let corrupted = rng.random::<f64>() < self.config.delta_corrupt;
        let noise = self.config.epsilon_a * (2.0 * rng.random::<f64>() - 1.0);
        let value = if corrupted {
            match &self.config.model {
                CorruptionModel::Offset(o) => truth + o,
                CorruptionModel::Uniform => rng.random::<f64>(),
                CorruptionModel::Callback(f) => f(g, truth, &mut rng),
            }
        } else {
            truth + noise
        };
        Ok(Draw { corrupted, value })
    }
}

impl AverageCaseOracle for SimulatedOracle {
    fn query(&self, g: &CoeffVector, stage: Stage) -> Result<f64, PipelineError> {
        let d = self.draw(g)?;
        if let Some(trace) = &self.trace {
            trace.lock().expect("trace lock").push(EvalRecord {
                point: g.values().to_vec(),
                value: d.value,
                stage,
                corrupted: d.corrupted,
            });
        }
        Ok(d.value)
    }
}

/// Convenience form of [`SimulatedOracle::query`].
pub fn average_case_oracle(oracle: &SimulatedOracle, g: &CoeffVector) -> Result<f64, PipelineError> {
    oracle.query(g, Stage::Direct)
}
