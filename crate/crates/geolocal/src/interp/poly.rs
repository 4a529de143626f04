use serde::{Deserialize, Serialize};

/// Real polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Trailing exact zeros are dropped.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `prod (x - r)` over `roots`.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots.iter().fold(Self::constant(1.0), |p, &r| p.mul(&Self::new(vec![-r, 1.0])))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Coefficient of `x^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Long division; `None` if the divisor is zero.
    pub fn div_rem(&self, divisor: &Self) -> Option<(Self, Self)> {
        let dd = divisor.degree()?;
        let lead = divisor.coeffs[dd];
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Some((Self::zero(), self.clone()));
        }
        let mut quot = vec![0.0; rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd] / lead;
            quot[k] = q;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= q * d;
            }
        }
        rem.truncate(dd);
        Some((Self::new(quot), Self::new(rem)))
    }

    /// `p(a x + b)`.
    pub fn compose_affine(&self, a: f64, b: f64) -> Self {
        let lin = Self::new(vec![b, a]);
        self.coeffs.iter().rev().fold(Self::zero(), |acc, &c| acc.mul(&lin).add(&Self::constant(c)))
    }
}

/// Maps an interval `[lo, hi]` onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub center: f64,
    pub half_width: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap { center: 0.0, half_width: 1.0 };

    pub fn from_interval(lo: f64, hi: f64) -> Self {
        let half = 0.5 * (hi - lo);
        Self { center: 0.5 * (hi + lo), half_width: if half > 0.0 { half } else { 1.0 } }
    }

    pub fn to_unit(&self, x: f64) -> f64 {
        (x - self.center) / self.half_width
    }

    pub fn from_unit(&self, t: f64) -> f64 {
        self.center + t * self.half_width
    }
}

/// `sum c_k T_k(t)` with `t` the image of `x` under an affine map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevSeries {
    coeffs: Vec<f64>,
    map: AffineMap,
}

impl ChebyshevSeries {
    pub fn new(coeffs: Vec<f64>, map: AffineMap) -> Self {
        Self { coeffs, map }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn map(&self) -> AffineMap {
        self.map
    }

    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.coeffs, self.map.to_unit(x))
    }

    /// Monomial form in the original variable.
    pub fn to_polynomial(&self) -> Polynomial {
        let mut t_prev = Polynomial::constant(1.0);
        let mut t_cur = Polynomial::new(vec![0.0, 1.0]);
        let mut acc = Polynomial::zero();
        for (k, &c) in self.coeffs.iter().enumerate() {
            let tk = match k {
                0 => t_prev.clone(),
                1 => t_cur.clone(),
                _ => {
                    let next = Polynomial::new(vec![0.0, 2.0]).mul(&t_cur).add(&t_prev.scale(-1.0));
                    t_prev = std::mem::replace(&mut t_cur, next);
                    t_cur.clone()
                }
            };
            acc = acc.add(&tk.scale(c));
        }
        let a = 1.0 / self.map.half_width;
        acc.compose_affine(a, -self.map.center * a)
    }
}

/// Chebyshev coefficients of the monomial series `coeffs` (same variable).
pub fn monomial_to_chebyshev(coeffs: &[f64]) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for &c in coeffs.iter().rev() {
        // acc <- t * acc + c, using t T_0 = T_1 and t T_j = (T_{j+1} + T_{j-1}) / 2
        let mut next = vec![0.0; acc.len() + 1];
        for (j, &a) in acc.iter().enumerate() {
            if j == 0 {
                next[1] += a;
            } else {
                next[j + 1] += 0.5 * a;
                next[j - 1] += 0.5 * a;
            }
        }
        next[0] += c;
        acc = next;
    }
    acc
}

pub(crate) fn clenshaw(c: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(0.0) + t * b1 - b2
}

/// `[T_0(t), ..., T_deg(t)]`.
pub(crate) fn chebyshev_row(t: f64, deg: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(deg + 1);
    row.push(1.0);
    if deg >= 1 {
        row.push(t);
    }
    for k in 2..=deg {
        let v = 2.0 * t * row[k - 1] - row[k - 2];
        row.push(v);
    }
    row
}
