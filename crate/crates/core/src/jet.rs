//! Truncated multivariate Taylor arithmetic through order 3.
//!
//! A [`Jet`] stores the Taylor coefficients (derivative / alpha!) of a scalar
//! function of 1 to 3 chart variables at an expansion point. Sums, products and
//! univariate compositions of jets are again jets, so every mixed partial up to
//! order 3 that the geometry needs comes out of plain arithmetic rather than
//! finite differences.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Truncation order of every jet in the crate.
pub const ORDER: usize = 3;

/// Multi-indices of total degree <= 3, graded lexicographic, padded to 3 slots.
const TABLE_1: [[u8; 3]; 4] = [[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]];

const TABLE_2: [[u8; 3]; 10] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [2, 0, 0],
    [1, 1, 0],
    [0, 2, 0],
    [3, 0, 0],
    [2, 1, 0],
    [1, 2, 0],
    [0, 3, 0],
];

const TABLE_3: [[u8; 3]; 20] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [0, 0, 1],
    [2, 0, 0],
    [1, 1, 0],
    [1, 0, 1],
    [0, 2, 0],
    [0, 1, 1],
    [0, 0, 2],
    [3, 0, 0],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [1, 1, 1],
    [1, 0, 2],
    [0, 3, 0],
    [0, 2, 1],
    [0, 1, 2],
    [0, 0, 3],
];

/// Multi-index table for the given number of variables.
pub fn index_table(dim: usize) -> &'static [[u8; 3]] {
    match dim {
        1 => &TABLE_1,
        2 => &TABLE_2,
        3 => &TABLE_3,
        _ => panic!("jet dimension must be 1, 2 or 3"),
    }
}

fn position(dim: usize, alpha: [u8; 3]) -> usize {
    index_table(dim)
        .iter()
        .position(|&a| a == alpha)
        .expect("multi-index within order")
}

fn factorial(k: u8) -> f64 {
    match k {
        0 | 1 => 1.0,
        2 => 2.0,
        3 => 6.0,
        _ => unreachable!(),
    }
}

fn multi_factorial(alpha: [u8; 3]) -> f64 {
    factorial(alpha[0]) * factorial(alpha[1]) * factorial(alpha[2])
}

/// Tagged univariate primitive for [`Jet::chain`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Univariate {
    Exp,
    Sin,
    Cos,
    Log,
    /// x^alpha for a strictly positive base.
    Pow(f64),
}

impl Univariate {
    /// Derivatives of orders 0..=3 at the given point.
    fn derivatives(self, x: f64) -> Result<[f64; 4]> {
        match self {
            Univariate::Exp => {
                let e = x.exp();
                Ok([e, e, e, e])
            }
            Univariate::Sin => {
                let (s, c) = x.sin_cos();
                Ok([s, c, -s, -c])
            }
            Univariate::Cos => {
                let (s, c) = x.sin_cos();
                Ok([c, -s, -c, s])
            }
            Univariate::Log => {
                if x <= 0.0 {
                    return Err(Error::Domain(format!("log of nonpositive base {x}")));
                }
                Ok([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)])
            }
            Univariate::Pow(a) => {
                if x <= 0.0 {
                    return Err(Error::Domain(format!("pow of nonpositive base {x}")));
                }
                let v = x.powf(a);
                Ok([
                    v,
                    a * v / x,
                    a * (a - 1.0) * v / (x * x),
                    a * (a - 1.0) * (a - 2.0) * v / (x * x * x),
                ])
            }
        }
    }
}

/// Order-3 truncated Taylor expansion of a scalar in `dim` chart variables.
///
/// Coefficients are Taylor coefficients (derivative / alpha!), so that
/// multiplication is a plain truncated convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    dim: usize,
    coeffs: Vec<f64>,
}

impl Jet {
    /// Constant jet: value at order 0, zeros elsewhere.
    pub fn constant(value: f64, dim: usize) -> Jet {
        let mut coeffs = vec![0.0; index_table(dim).len()];
        coeffs[0] = value;
        Jet { dim, coeffs }
    }

    /// Jet from raw Taylor coefficients in `index_table(dim)` order.
    pub fn from_coeffs(dim: usize, coeffs: Vec<f64>) -> Result<Jet> {
        let expected = index_table(dim).len();
        if coeffs.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "expected {expected} coefficients for dim {dim}, got {}",
                coeffs.len()
            )));
        }
        Ok(Jet { dim, coeffs })
    }

    /// Jet of the coordinate function `x_{var}` taking the given value.
    pub fn seed(value: f64, var: usize, dim: usize) -> Result<Jet> {
        if var >= dim {
            return Err(Error::InvalidArgument(format!(
                "seed variable index {var} out of range for dim {dim}"
            )));
        }
        let mut jet = Jet::constant(value, dim);
        let mut unit = [0u8; 3];
        unit[var] = 1;
        jet.coeffs[position(dim, unit)] = 1.0;
        Ok(jet)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Value at the expansion point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient of the multi-index.
    pub fn coeff(&self, alpha: [u8; 3]) -> f64 {
        self.coeffs[position(self.dim, alpha)]
    }

    /// Mixed partial derivative: coefficient times alpha!.
    pub fn derivative(&self, alpha: [u8; 3]) -> f64 {
        self.coeff(alpha) * multi_factorial(alpha)
    }

    /// Jet of the partial derivative with respect to variable `var`.
    ///
    /// The result has garbage-free zeros at order 3; its coefficients are
    /// trustworthy only through order 2, which is all downstream users read.
    pub fn partial(&self, var: usize) -> Jet {
        assert!(var < self.dim, "partial index out of range");
        let table = index_table(self.dim);
        let mut out = Jet::constant(0.0, self.dim);
        for (pos, &alpha) in table.iter().enumerate() {
            let total: u8 = alpha.iter().sum();
            if total >= ORDER as u8 {
                continue;
            }
            let mut shifted = alpha;
            shifted[var] += 1;
            out.coeffs[pos] = (alpha[var] + 1) as f64 * self.coeffs[position(self.dim, shifted)];
        }
        out
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|v| c * v).collect(),
        }
    }

    fn check_dim(&self, other: &Jet) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::InvalidArgument(format!(
                "jet dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    /// Truncated Cauchy product.
    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.check_dim(other)?;
        let table = index_table(self.dim);
        let mut out = Jet::constant(0.0, self.dim);
        for (ia, &alpha) in table.iter().enumerate() {
            let ca = self.coeffs[ia];
            if ca == 0.0 {
                continue;
            }
            let ta: u8 = alpha.iter().sum();
            for (ib, &beta) in table.iter().enumerate() {
                let tb: u8 = beta.iter().sum();
                if ta + tb > ORDER as u8 {
                    continue;
                }
                let cb = other.coeffs[ib];
                if cb == 0.0 {
                    continue;
                }
                let sum = [alpha[0] + beta[0], alpha[1] + beta[1], alpha[2] + beta[2]];
                out.coeffs[position(self.dim, sum)] += ca * cb;
            }
        }
        Ok(out)
    }

    /// Univariate Taylor composition through order 3.
    pub fn chain(prim: Univariate, a: &Jet) -> Result<Jet> {
        let d = prim.derivatives(a.value())?;
        // delta = a - a0 has no constant term, so powers of delta raise order.
        let mut delta = a.clone();
        delta.coeffs[0] = 0.0;
        let delta2 = delta.try_mul(&delta)?;
        let delta3 = delta2.try_mul(&delta)?;
        let mut out = Jet::constant(d[0], a.dim);
        out = &out + &delta.scale(d[1]);
        out = &out + &delta2.scale(d[2] / 2.0);
        out = &out + &delta3.scale(d[3] / 6.0);
        Ok(out)
    }

    /// Reciprocal; errors if the value is zero.
    pub fn recip(&self) -> Result<Jet> {
        let v = self.value();
        if v == 0.0 {
            return Err(Error::Domain("reciprocal of zero-valued jet".into()));
        }
        if v > 0.0 {
            Jet::chain(Univariate::Pow(-1.0), self)
        } else {
            // pow requires a positive base; route through the negation.
            Ok(Jet::chain(Univariate::Pow(-1.0), &-self)?.scale(-1.0))
        }
    }

    /// x^alpha for a strictly positive-valued jet.
    pub fn powf(&self, alpha: f64) -> Result<Jet> {
        Jet::chain(Univariate::Pow(alpha), self)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        assert_eq!(self.dim, rhs.dim, "jet dimension mismatch");
        Jet {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        assert_eq!(self.dim, rhs.dim, "jet dimension mismatch");
        Jet {
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.try_mul(rhs).expect("jet dimension mismatch")
    }
}
