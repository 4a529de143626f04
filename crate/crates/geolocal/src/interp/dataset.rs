//! Labelled sample sets and their CSV form. Labels exist for test assertions;
//! decoders only ever see the `(x, y)` pairs returned by [`points`].

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::InterpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Clean,
    Corrupted,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisySample {
    pub x: f64,
    pub y: f64,
    pub provenance: Provenance,
}

/// Strips provenance.
pub fn points(samples: &[NoisySample]) -> Vec<(f64, f64)> {
    samples.iter().map(|s| (s.x, s.y)).collect()
}

pub fn write_csv<W: Write>(samples: &[NoisySample], out: W) -> Result<(), InterpError> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s).map_err(|e| InterpError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| InterpError::Io(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<NoisySample>, InterpError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e| InterpError::Io(e.to_string())))
        .collect()
}
