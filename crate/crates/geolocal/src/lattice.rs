//! Lattice geometry and the geometrically-2-local Pauli terms living on it.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest qubit count for which dense operators are built.
pub const DENSE_QUBIT_CAP: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice dimensions must be positive, got {rows}x{cols}")]
    EmptyLattice { rows: usize, cols: usize },
    #[error("periodic lattice needs at least 3 sites per dimension, got {rows}x{cols}")]
    PeriodicTooSmall { rows: usize, cols: usize },
    #[error("{n} qubits exceeds the dense-matrix cap of {DENSE_QUBIT_CAP}")]
    TooManyQubits { n: usize },
    #[error("site {site} out of range for {n} qubits")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("mask has length {got}, expected {expected}")]
    MaskLength { got: usize, expected: usize },
    #[error("malformed term: {0}")]
    MalformedTerm(String),
    #[error("cannot parse lattice spec '{0}', expected ROWSxCOLS")]
    BadSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lattice {
    rows: usize,
    cols: usize,
    periodic: bool,
}

impl Lattice {
    pub fn new(rows: usize, cols: usize, periodic: bool) -> Result<Self, LatticeError> {
        if rows == 0 || cols == 0 {
            return Err(LatticeError::EmptyLattice { rows, cols });
        }
        if periodic && (rows < 3 || cols < 3) {
            return Err(LatticeError::PeriodicTooSmall { rows, cols });
        }
        Ok(Self { rows, cols, periodic })
    }

    pub fn open(rows: usize, cols: usize) -> Result<Self, LatticeError> {
        Self::new(rows, cols, false)
    }

    pub fn periodic(rows: usize, cols: usize) -> Result<Self, LatticeError> {
        Self::new(rows, cols, true)
    }

    /// Parses `"3x3"` (open) or `"3x3p"` (periodic).
    pub fn parse(spec: &str) -> Result<Self, LatticeError> {
        let bad = || LatticeError::BadSpec(spec.to_string());
        let (body, periodic) = match spec.strip_suffix('p') {
            Some(b) => (b, true),
            None => (spec, false),
        };
        let (r, c) = body.split_once(['x', 'X']).ok_or_else(bad)?;
        let rows = r.trim().parse().map_err(|_| bad())?;
        let cols = c.trim().parse().map_err(|_| bad())?;
        Self::new(rows, cols, periodic)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn num_sites(&self) -> usize {
        self.rows * self.cols
    }

    fn site(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    /// Unordered nearest-neighbour pairs `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let here = self.site(r, c);
                let right = if c + 1 < self.cols {
                    Some(self.site(r, c + 1))
                } else if self.periodic {
                    Some(self.site(r, 0))
                } else {
                    None
                };
                let down = if r + 1 < self.rows {
                    Some(self.site(r + 1, c))
                } else if self.periodic {
                    Some(self.site(0, c))
                } else {
                    None
                };
                for other in [right, down].into_iter().flatten() {
                    out.push((here.min(other), here.max(other)));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges().binary_search(&key).is_ok()
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}{}", self.rows, self.cols, if self.periodic { "p" } else { "" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::X => [[o, one], [one, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[one, o], [o, -one]],
        }
    }

    /// Whether this letter anticommutes with Z.
    pub fn flips_under_z(self) -> bool {
        !matches!(self, Pauli::Z)
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// A one- or two-site Pauli string, identity elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliTerm {
    sites: Vec<usize>,
    letters: Vec<Pauli>,
}

impl PauliTerm {
    pub fn single(site: usize, letter: Pauli) -> Self {
        Self { sites: vec![site], letters: vec![letter] }
    }

    /// Two-site term; sites are reordered ascending together with their letters.
    pub fn pair(a: usize, la: Pauli, b: usize, lb: Pauli) -> Result<Self, LatticeError> {
        if a == b {
            return Err(LatticeError::MalformedTerm(format!("repeated site {a}")));
        }
        Ok(if a < b {
            Self { sites: vec![a, b], letters: vec![la, lb] }
        } else {
            Self { sites: vec![b, a], letters: vec![lb, la] }
        })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    /// Letter acting on `site`, if any.
    pub fn letter_at(&self, site: usize) -> Option<Pauli> {
        self.sites.iter().position(|&s| s == site).map(|i| self.letters[i])
    }

    pub fn is_z_type(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::Z)
    }

    /// Dense `2^n x 2^n` operator. Site 0 is the most significant qubit.
    pub fn matrix(&self, n: usize) -> Result<DMatrix<Complex64>, LatticeError> {
        check_dense(n)?;
        if let Some(&s) = self.sites.iter().find(|&&s| s >= n) {
            return Err(LatticeError::SiteOutOfRange { site: s, n });
        }
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut row = col;
            let mut amp = Complex64::new(1.0, 0.0);
            for (&s, &p) in self.sites.iter().zip(&self.letters) {
                let shift = n - 1 - s;
                let bit = (col >> shift) & 1;
                let mat = p.matrix();
                let out_bit = if mat[0][bit] == Complex64::new(0.0, 0.0) { 1 } else { 0 };
                amp *= mat[out_bit][bit];
                row = (row & !(1 << shift)) | (out_bit << shift);
            }
            m[(row, col)] = amp;
        }
        Ok(m)
    }

    /// Sign `e` with `Z^y P Z^y = e P`.
    pub fn z_conjugation_sign(&self, mask: &BitString) -> Result<i8, LatticeError> {
        if let Some(&s) = self.sites.iter().find(|&&s| s >= mask.len()) {
            return Err(LatticeError::SiteOutOfRange { site: s, n: mask.len() });
        }
        let flips = self
            .sites
            .iter()
            .zip(&self.letters)
            .filter(|(&s, p)| mask.get(s) && p.flips_under_z())
            .count();
        Ok(if flips % 2 == 0 { 1 } else { -1 })
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, p) in self.sites.iter().zip(&self.letters) {
            write!(f, "{p}{s}")?;
        }
        Ok(())
    }
}

pub(crate) fn check_dense(n: usize) -> Result<(), LatticeError> {
    if n > DENSE_QUBIT_CAP {
        Err(LatticeError::TooManyQubits { n })
    } else {
        Ok(())
    }
}

/// Fixed-length bit string; bit `i` refers to site `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Bits taken from the low `n` bits of `value`, site 0 = most significant.
    pub fn from_index(value: usize, n: usize) -> Self {
        Self((0..n).map(|i| (value >> (n - 1 - i)) & 1 == 1).collect())
    }

    pub fn parse(s: &str) -> Result<Self, LatticeError> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(LatticeError::MalformedTerm(format!("bad mask '{s}'"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|b| !b)
    }

    /// Basis-state index with site 0 as most significant bit.
    pub fn to_index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString, LatticeError> {
        if self.len() != other.len() {
            return Err(LatticeError::MaskLength { got: other.len(), expected: self.len() });
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BitString::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Canonically ordered list of every 1- and 2-local term on a lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermTable {
    lattice: Lattice,
    terms: Vec<PauliTerm>,
}

impl TermTable {
    /// Single-site terms first (row-major, X<Y<Z), then edges in sorted order
    /// with their nine letter pairs.
    pub fn build(lattice: Lattice) -> Self {
        let n = lattice.num_sites();
        let mut terms = Vec::with_capacity(3 * n + 9 * lattice.edges().len());
        for site in 0..n {
            terms.extend(Pauli::ALL.iter().map(|&p| PauliTerm::single(site, p)));
        }
        for (a, b) in lattice.edges() {
            for &pa in &Pauli::ALL {
                for &pb in &Pauli::ALL {
                    terms.push(PauliTerm { sites: vec![a, b], letters: vec![pa, pb] });
                }
            }
        }
        Self { lattice, terms }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_qubits(&self) -> usize {
        self.lattice.num_sites()
    }

    pub fn term(&self, index: usize) -> Option<&PauliTerm> {
        self.terms.get(index)
    }

    pub fn index_of(&self, term: &PauliTerm) -> Option<usize> {
        let n = self.num_qubits();
        match term.sites.as_slice() {
            [s] if *s < n => Some(3 * s + term.letters[0] as usize),
            [a, b] => {
                let pos = self.lattice.edges().binary_search(&(*a, *b)).ok()?;
                Some(3 * n + 9 * pos + 3 * term.letters[0] as usize + term.letters[1] as usize)
            }
            _ => None,
        }
    }

    pub fn single_index(&self, site: usize, letter: Pauli) -> Option<usize> {
        self.index_of(&PauliTerm::single(site, letter))
    }

    pub fn pair_index(&self, a: usize, la: Pauli, b: usize, lb: Pauli) -> Option<usize> {
        self.index_of(&PauliTerm::pair(a, la, b, lb).ok()?)
    }

    /// Reads a table from its JSON form, checking it is the canonical one.
    pub fn from_json(s: &str) -> Result<Self, LatticeError> {
        #[derive(Deserialize)]
        struct Raw {
            rows: usize,
            cols: usize,
            periodic: bool,
            terms: Vec<PauliTerm>,
        }
        let raw: Raw =
            serde_json::from_str(s).map_err(|e| LatticeError::MalformedTerm(e.to_string()))?;
        let table = Self::build(Lattice::new(raw.rows, raw.cols, raw.periodic)?);
        if table.terms != raw.terms {
            return Err(LatticeError::MalformedTerm("terms are not in canonical order".into()));
        }
        Ok(table)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rows": self.lattice.rows,
            "cols": self.lattice.cols,
            "periodic": self.lattice.periodic,
            "l": self.len(),
            "terms": self.terms,
        })
    }
}

/// Number of terms predicted by the counting formula `3n + 9|E|`.
pub fn expected_term_count(lattice: &Lattice) -> usize {
    let (r, c) = (lattice.rows, lattice.cols);
    let edges = if lattice.periodic { 2 * r * c } else { r * (c - 1) + c * (r - 1) };
    3 * r * c + 9 * edges
}

/// Dense diagonal of `Z^mask`.
pub fn z_string_diagonal(mask: &BitString) -> Vec<f64> {
    let n = mask.len();
    (0..1usize << n)
        .map(|idx| {
            let parity = (idx & mask.to_index()).count_ones();
            if parity % 2 == 0 { 1.0 } else { -1.0 }
        })
        .collect()
}
