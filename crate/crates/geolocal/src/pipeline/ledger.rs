//! The chain of certified error factors, kept in log10 because realistic
//! inputs overflow double precision.

use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::hamiltonian::ln_taylor_error_bound;

/// `log10(10^a + 10^b)`, exact for infinite arguments.
pub fn log10_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY || hi == f64::INFINITY {
        return hi;
    }
    hi + (1.0 + 10f64.powf(lo - hi)).log10()
}

/// `log10` of the Taylor truncation bound; `+inf` when the order is too small
/// for the series tail estimate to apply.
pub fn log10_taylor_bound(h_norm: f64, tau: f64, order: usize) -> f64 {
    match ln_taylor_error_bound(h_norm, tau, order) {
        Ok(v) => v / std::f64::consts::LN_10,
        Err(_) => f64::INFINITY,
    }
}

/// Serializes infinities as the strings `"inf"` / `"-inf"`.
pub mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad number '{other}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub name: String,
    pub formula: String,
    pub inputs: BTreeMap<String, f64>,
    #[serde(with = "extended_f64")]
    pub log10_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerInputs {
    /// Interpolation degree `m`.
    pub degree: usize,
    /// Taylor truncation order behind the degree-`m` surrogate (`m / 2`).
    pub taylor_order: usize,
    pub tau: f64,
    pub target_norm: f64,
    /// Upper bound on `||H(g_worst)||`.
    pub target_h_bound: f64,
    /// Radial bin width.
    pub radial_delta: f64,
    /// Separation used in the radial decoding guarantee.
    pub radial_rebw_delta: f64,
    pub radial_nodes: usize,
    /// Slack added to every decoding noise level.
    pub lp_tolerance: f64,
    /// Worst per-node error entering the radial decoder, log10.
    #[serde(with = "option_extended")]
    pub log10_circumference_bound: Option<f64>,
}

mod option_extended {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => super::extended_f64::serialize(x, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::extended_f64")] f64);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundLedger {
    pub entries: Vec<LedgerEntry>,
    #[serde(with = "extended_f64")]
    pub log10_total: f64,
}

impl BoundLedger {
    pub fn entry(&self, name: &str) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Total as a plain number (infinite when it overflows).
    pub fn total(&self) -> f64 {
        10f64.powf(self.log10_total)
    }
}

fn inputs<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// `total = taylor(g_worst) + remez * (10/delta)^(2 n) * (circumference + tol)`.
pub fn assemble_bound_ledger(inp: &LedgerInputs) -> Result<BoundLedger, PipelineError> {
    let circ = inp.log10_circumference_bound.ok_or(PipelineError::MissingStage("circumference"))?;
    if inp.radial_nodes == 0 {
        return Err(PipelineError::MissingStage("radial"));
    }
    if !(inp.radial_delta > 0.0 && inp.radial_rebw_delta > 0.0 && inp.target_norm > 0.0) {
        return Err(PipelineError::InvalidParams("ledger needs positive deltas and target norm".into()));
    }
    let taylor = log10_taylor_bound(inp.target_h_bound, inp.tau, inp.taylor_order);
    let d = (inp.degree + 1) as f64;
    let remez = d * (E * E * inp.target_norm / (inp.radial_delta * 2.0 * d)).log10();
    let noise = log10_add(circ, inp.lp_tolerance.log10());
    let rebw = 2.0 * inp.radial_nodes as f64 * (10.0 / inp.radial_rebw_delta).log10() + noise;
    let total = log10_add(taylor, remez + rebw);

    let entries = vec![
        LedgerEntry {
            name: "taylor_target".into(),
            formula: "2*exp(h*tau)*(e*h*tau/m_T)^(m_T+1), infinite unless m_T > e*h*tau".into(),
            inputs: inputs([("h", inp.target_h_bound), ("tau", inp.tau), ("m_T", inp.taylor_order as f64)]),
            log10_value: taylor,
        },
        LedgerEntry {
            name: "circumference_stage".into(),
            formula: "max_i [taylor(r_i) + circumference bound(r_i)]".into(),
            inputs: BTreeMap::new(),
            log10_value: circ,
        },
        LedgerEntry {
            name: "rebw_radial".into(),
            formula: "(10/delta)^(2n) * (circumference_stage + tol)".into(),
            inputs: inputs([
                ("delta", inp.radial_rebw_delta),
                ("n", inp.radial_nodes as f64),
                ("tol", inp.lp_tolerance),
            ]),
            log10_value: rebw,
        },
        LedgerEntry {
            name: "remez_extrapolation".into(),
            formula: "(e^2*norm/(Delta*2*(m+1)))^(m+1)".into(),
            inputs: inputs([("norm", inp.target_norm), ("Delta", inp.radial_delta), ("m", inp.degree as f64)]),
            log10_value: remez,
        },
        LedgerEntry {
            name: "total".into(),
            formula: "taylor_target + remez_extrapolation * rebw_radial".into(),
            inputs: BTreeMap::new(),
            log10_value: total,
        },
    ];
    Ok(BoundLedger { entries, log10_total: total })
}
