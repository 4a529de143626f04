//! Dense simulation of `exp(-i H(g) tau)`, the truncated Taylor surrogate, and
//! the worst-case Ising family.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{check_dense, z_string_diagonal, BitString, LatticeError, Pauli, TermTable};

/// Largest allowed |J| or |h| in the worst-case family.
pub const MAX_ISING_MAGNITUDE: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("coefficient vector has length {got}, table has {expected} terms")]
    LengthMismatch { got: usize, expected: usize },
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
    #[error("evolution time must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("Taylor order {m} must exceed e*|H|*t = {threshold}")]
    TaylorOrderTooSmall { m: usize, threshold: f64 },
    #[error("Ising parameter {0} exceeds the magnitude cap {MAX_ISING_MAGNITUDE}")]
    IsingOutOfRange(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Coefficients `g` of `H(g) = sum_i g_i P_i` in the table's canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    table: Arc<TermTable>,
    values: Vec<f64>,
}

impl CoeffVector {
    pub fn new(table: Arc<TermTable>, values: Vec<f64>) -> Result<Self, HamiltonianError> {
        if values.len() != table.len() {
            return Err(HamiltonianError::LengthMismatch { got: values.len(), expected: table.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(HamiltonianError::NonFinite { index });
        }
        Ok(Self { table, values })
    }

    pub fn zeros(table: Arc<TermTable>) -> Self {
        let l = table.len();
        Self { table, values: vec![0.0; l] }
    }

    pub fn table(&self) -> &Arc<TermTable> {
        &self.table
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// Same table, new values (length and finiteness checked).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, HamiltonianError> {
        Self::new(self.table.clone(), values)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { table: self.table.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// Coefficients of `Z^mask H Z^mask`: each entry times its term's conjugation sign.
    pub fn conjugated(&self, mask: &BitString) -> Result<Self, HamiltonianError> {
        let n = self.table.num_qubits();
        if mask.len() != n {
            return Err(LatticeError::MaskLength { got: mask.len(), expected: n }.into());
        }
        let values = self
            .table
            .terms()
            .iter()
            .zip(&self.values)
            .map(|(t, &v)| Ok(v * f64::from(t.z_conjugation_sign(mask)?)))
            .collect::<Result<Vec<_>, LatticeError>>()?;
        Ok(Self { table: self.table.clone(), values })
    }
}

/// `sum_i g_i P_i` as a dense Hermitian matrix.
pub fn build_hamiltonian(coeffs: &CoeffVector) -> Result<DMatrix<Complex64>, HamiltonianError> {
    let n = coeffs.table.num_qubits();
    check_dense(n)?;
    let dim = 1usize << n;
    let mut h = DMatrix::zeros(dim, dim);
    for (term, &g) in coeffs.table.terms().iter().zip(&coeffs.values) {
        if g != 0.0 {
            h += term.matrix(n)? * Complex64::new(g, 0.0);
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionSpec {
    pub coeffs: CoeffVector,
    pub tau: f64,
    /// Input state is `Z^mask |+^n>`.
    pub input_mask: BitString,
}

impl EvolutionSpec {
    pub fn new(coeffs: CoeffVector, tau: f64, input_mask: BitString) -> Result<Self, HamiltonianError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(HamiltonianError::InvalidTau(tau));
        }
        let n = coeffs.table.num_qubits();
        if input_mask.len() != n {
            return Err(LatticeError::MaskLength { got: input_mask.len(), expected: n }.into());
        }
        Ok(Self { coeffs, tau, input_mask })
    }

    /// `tau = 1`, input `|+^n>`.
    pub fn standard(coeffs: CoeffVector) -> Self {
        let n = coeffs.table.num_qubits();
        Self { coeffs, tau: 1.0, input_mask: BitString::zeros(n) }
    }
}

/// `Z^mask |+^n>` as a dense vector.
pub fn plus_state(mask: &BitString) -> DVector<Complex64> {
    let dim = 1usize << mask.len();
    let amp = (dim as f64).sqrt().recip();
    DVector::from_iterator(
        dim,
        z_string_diagonal(mask).into_iter().map(|s| Complex64::new(s * amp, 0.0)),
    )
}

/// Eigendecomposition of `H(g)`, reusable for several times and masks.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl Propagator {
    pub fn new(coeffs: &CoeffVector) -> Result<Self, HamiltonianError> {
        let eig = SymmetricEigen::new(build_hamiltonian(coeffs)?);
        Ok(Self { eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Dense `exp(-i H tau)`.
    pub fn unitary(&self, tau: f64) -> DMatrix<Complex64> {
        let phases = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -e * tau)),
        );
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * phases[j]);
        scaled * v.adjoint()
    }

    /// `<bra| exp(-i H tau) |ket>`.
    pub fn amplitude(&self, bra: &DVector<Complex64>, ket: &DVector<Complex64>, tau: f64) -> Complex64 {
        let v = &self.eigenvectors;
        let left = v.adjoint() * bra;
        let right = v.adjoint() * ket;
        left.iter()
            .zip(right.iter())
            .zip(self.eigenvalues.iter())
            .map(|((a, b), &e)| a.conj() * b * Complex64::from_polar(1.0, -e * tau))
            .sum()
    }
}

/// `|<+^n| exp(-i H tau) Z^y |+^n>|^2`.
pub fn output_probability(spec: &EvolutionSpec) -> Result<f64, HamiltonianError> {
    let prop = Propagator::new(&spec.coeffs)?;
    let n = spec.input_mask.len();
    let out = plus_state(&BitString::zeros(n));
    let inp = plus_state(&spec.input_mask);
    Ok(prop.amplitude(&out, &inp, spec.tau).norm_sqr())
}

/// Squared amplitude of the order-`m` truncated exponential series.
pub fn taylor_probability(spec: &EvolutionSpec, m: usize) -> Result<f64, HamiltonianError> {
    let h = build_hamiltonian(&spec.coeffs)?;
    let n = spec.input_mask.len();
    let out = plus_state(&BitString::zeros(n));
    let mut term = plus_state(&spec.input_mask);
    let mut acc = out.dotc(&term);
    let step = Complex64::new(0.0, -spec.tau);
    for k in 1..=m {
        term = &h * term * (step / k as f64);
        acc += out.dotc(&term);
    }
    Ok(acc.norm_sqr())
}

/// `2 exp(h t) (e h t / m)^(m+1)`, valid only for `m > e h t`.
pub fn taylor_error_bound(h_norm: f64, t: f64, m: usize) -> Result<f64, HamiltonianError> {
    let x = h_norm * t;
    if x == 0.0 {
        return Ok(0.0);
    }
    let threshold = E * x;
    if (m as f64) <= threshold {
        return Err(HamiltonianError::TaylorOrderTooSmall { m, threshold });
    }
    let mp1 = (m + 1) as f64;
    Ok(2.0 * (x + mp1 * (threshold / m as f64).ln()).exp())
}

/// Natural log of [`taylor_error_bound`]; `-inf` for a zero Hamiltonian.
pub fn ln_taylor_error_bound(h_norm: f64, t: f64, m: usize) -> Result<f64, HamiltonianError> {
    let x = h_norm * t;
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let threshold = E * x;
    if (m as f64) <= threshold {
        return Err(HamiltonianError::TaylorOrderTooSmall { m, threshold });
    }
    Ok(2f64.ln() + x + (m + 1) as f64 * (threshold / m as f64).ln())
}

/// `min(|g|_1, sqrt(l) |g|_2)`, an upper bound on the operator norm of `H(g)`.
pub fn spectral_norm_bound(coeffs: &CoeffVector) -> f64 {
    coeffs.norm1().min((coeffs.len() as f64).sqrt() * coeffs.norm2())
}

/// Exact `||H(g)||` from the spectrum.
pub fn exact_spectral_norm(coeffs: &CoeffVector) -> Result<f64, HamiltonianError> {
    Ok(Propagator::new(coeffs)?.spectral_norm())
}

/// Ising instance `sum J_e Z Z - sum h_i Z_i + pi/(8 tau) sum_{i in S} Z_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseSpec {
    pub subset: BitString,
    /// One coupling per lattice edge, in sorted edge order.
    pub couplings: Vec<f64>,
    pub fields: Vec<f64>,
    pub tau: f64,
}

impl WorstCaseSpec {
    /// `J = h = 1` everywhere.
    pub fn uniform(table: &TermTable, subset: BitString, tau: f64) -> Self {
        Self {
            subset,
            couplings: vec![1.0; table.lattice().edges().len()],
            fields: vec![1.0; table.num_qubits()],
            tau,
        }
    }

    pub fn validate(&self, table: &TermTable) -> Result<(), HamiltonianError> {
        let n = table.num_qubits();
        let edges = table.lattice().edges().len();
        if self.subset.len() != n || self.fields.len() != n || self.couplings.len() != edges {
            return Err(HamiltonianError::DimensionMismatch(format!(
                "spec has |S|={}, |h|={}, |J|={}; lattice has {n} sites and {edges} edges",
                self.subset.len(),
                self.fields.len(),
                self.couplings.len()
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(HamiltonianError::InvalidTau(self.tau));
        }
        if let Some(&v) = self
            .couplings
            .iter()
            .chain(&self.fields)
            .find(|v| !v.is_finite() || v.abs() > MAX_ISING_MAGNITUDE)
        {
            return Err(HamiltonianError::IsingOutOfRange(v));
        }
        Ok(())
    }
}

pub fn worst_case_coeffs(
    spec: &WorstCaseSpec,
    table: Arc<TermTable>,
) -> Result<CoeffVector, HamiltonianError> {
    spec.validate(&table)?;
    let mut values = vec![0.0; table.len()];
    for (i, &h) in spec.fields.iter().enumerate() {
        let idx = table.single_index(i, Pauli::Z).expect("site term exists");
        let boost = if spec.subset.get(i) { PI / (8.0 * spec.tau) } else { 0.0 };
        values[idx] = -h + boost;
    }
    for (&(a, b), &j) in table.lattice().edges().iter().zip(&spec.couplings) {
        let idx = table.pair_index(a, Pauli::Z, b, Pauli::Z).expect("edge term exists");
        values[idx] = j;
    }
    CoeffVector::new(table, values)
}

/// Adds `pi/(2 tau) y_k` to each single-site Z coefficient.
pub fn shift_coeffs(coeffs: &CoeffVector, y: &BitString, tau: f64) -> Result<CoeffVector, HamiltonianError> {
    let n = coeffs.table.num_qubits();
    if y.len() != n {
        return Err(LatticeError::MaskLength { got: y.len(), expected: n }.into());
    }
    let mut values = coeffs.values.clone();
    for k in (0..n).filter(|&k| y.get(k)) {
        let idx = coeffs.table.single_index(k, Pauli::Z).expect("site term exists");
        values[idx] += PI / (2.0 * tau);
    }
    coeffs.with_values(values)
}

/// Difference between `|<+|Z^x e^{-iH tau} Z^y|+>|^2` and the same amplitude
/// with `H` conjugated by `Z^x` and input mask `x xor y`.
pub fn hiding_identity_residual(
    coeffs: &CoeffVector,
    x: &BitString,
    y: &BitString,
    tau: f64,
) -> Result<f64, HamiltonianError> {
    let n = coeffs.table.num_qubits();
    let plus = plus_state(&BitString::zeros(n));
    let lhs = Propagator::new(coeffs)?.amplitude(&plus_state(x), &plus_state(y), tau).norm_sqr();
    let conj = coeffs.conjugated(x)?;
    let rhs = Propagator::new(&conj)?.amplitude(&plus, &plus_state(&x.xor(y)?), tau).norm_sqr();
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    fn table(r: usize, c: usize) -> Arc<TermTable> {
        Arc::new(TermTable::build(Lattice::open(r, c).unwrap()))
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let t = table(1, 2);
        let p = output_probability(&EvolutionSpec::standard(CoeffVector::zeros(t.clone()))).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        let h = build_hamiltonian(&CoeffVector::zeros(t)).unwrap();
        assert!(h.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn half_turn_z_kills_plus() {
        let t = table(1, 1);
        let mut v = vec![0.0; 3];
        v[2] = PI / 2.0;
        let spec = EvolutionSpec::standard(CoeffVector::new(t, v).unwrap());
        assert!(output_probability(&spec).unwrap() < 1e-28);
    }

    #[test]
    fn x_field_is_phase_only() {
        let t = table(1, 1);
        let spec = EvolutionSpec::standard(CoeffVector::new(t, vec![0.83, 0.0, 0.0]).unwrap());
        assert!((output_probability(&spec).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn taylor_bound_check_value() {
        let b = taylor_error_bound(1.0, 1.0, 10).unwrap();
        let hand = 2.0 * E * (E / 10.0).powi(11);
        assert!((b - hand).abs() / hand < 1e-13);
        // 40-digit reference value
        assert!((b / 3.255095828380073e-6 - 1.0).abs() < 1e-13);
        assert_eq!(taylor_error_bound(0.0, 1.0, 1).unwrap(), 0.0);
        assert!(matches!(taylor_error_bound(1.0, 1.0, 2), Err(HamiltonianError::TaylorOrderTooSmall { .. })));
    }

    #[test]
    fn worst_case_two_sites() {
        let t = table(1, 2);
        let spec = WorstCaseSpec::uniform(&t, BitString::parse("10").unwrap(), 1.0);
        let g = worst_case_coeffs(&spec, t.clone()).unwrap();
        let zz = t.pair_index(0, Pauli::Z, 1, Pauli::Z).unwrap();
        let z0 = t.single_index(0, Pauli::Z).unwrap();
        let z1 = t.single_index(1, Pauli::Z).unwrap();
        assert_eq!(g.values()[zz], 1.0);
        assert!((g.values()[z0] - (-1.0 + PI / 8.0)).abs() < 1e-15);
        assert_eq!(g.values()[z1], -1.0);
        assert_eq!(g.values().iter().filter(|v| **v != 0.0).count(), 3);
    }

    #[test]
    fn ising_magnitude_cap() {
        let t = table(1, 2);
        let mut spec = WorstCaseSpec::uniform(&t, BitString::zeros(2), 1.0);
        spec.fields[1] = 11.0;
        assert!(matches!(worst_case_coeffs(&spec, t), Err(HamiltonianError::IsingOutOfRange(_))));
    }

    #[test]
    fn length_checked() {
        assert!(matches!(
            CoeffVector::new(table(1, 1), vec![0.0; 4]),
            Err(HamiltonianError::LengthMismatch { .. })
        ));
        assert!(matches!(
            CoeffVector::new(table(1, 1), vec![0.0, f64::NAN, 0.0]),
            Err(HamiltonianError::NonFinite { index: 1 })
        ));
    }
}
