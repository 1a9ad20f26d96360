use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::scalar::{is_finite, ZERO};

/// Norm index of a coordinate sequence space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum NormIndex {
    #[serde(rename = "1")]
    One,
    #[default]
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl NormIndex {
    /// Conjugate exponent: 1/p + 1/q = 1.
    pub fn dual(self) -> NormIndex {
        match self {
            NormIndex::One => NormIndex::Inf,
            NormIndex::Two => NormIndex::Two,
            NormIndex::Inf => NormIndex::One,
        }
    }

    /// The l^p norm of a coefficient slice.
    pub fn norm_of(self, coords: &[Complex64]) -> f64 {
        match self {
            NormIndex::One => coords.iter().map(|c| c.norm()).sum(),
            NormIndex::Two => {
                // scaled to avoid overflow in the squares
                let scale = coords
                    .iter()
                    .fold(0.0_f64, |m, c| m.max(c.re.abs()).max(c.im.abs()));
                if scale == 0.0 {
                    return 0.0;
                }
                let s: f64 = coords.iter().map(|c| (c / scale).norm_sqr()).sum();
                scale * s.sqrt()
            }
            NormIndex::Inf => coords.iter().fold(0.0, |m, c| m.max(c.norm())),
        }
    }
}

impl fmt::Display for NormIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormIndex::One => write!(f, "1"),
            NormIndex::Two => write!(f, "2"),
            NormIndex::Inf => write!(f, "inf"),
        }
    }
}

/// A vector of the truncated space X_d = (C^d, ||.||_p).
#[derive(Debug, Clone, PartialEq)]
pub struct CVec {
    coords: Vec<Complex64>,
    p: NormIndex,
}

impl CVec {
    pub fn new(coords: Vec<Complex64>, p: NormIndex) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Precondition(
                "vector dimension must be positive".into(),
            ));
        }
        if !coords.iter().all(|&c| is_finite(c)) {
            return Err(Error::NonFinite { what: "vector" });
        }
        Ok(CVec { coords, p })
    }

    pub fn from_real(coords: &[f64], p: NormIndex) -> Result<Self> {
        CVec::new(coords.iter().map(|&r| Complex64::new(r, 0.0)).collect(), p)
    }

    pub fn zeros(dim: usize, p: NormIndex) -> Self {
        assert!(dim > 0, "vector dimension must be positive");
        CVec {
            coords: vec![ZERO; dim],
            p,
        }
    }

    /// Basis vector e_m with 1-based index `m`.
    pub fn basis(dim: usize, m: usize, p: NormIndex) -> Self {
        assert!(
            (1..=dim).contains(&m),
            "basis index {m} out of range 1..={dim}"
        );
        let mut v = CVec::zeros(dim, p);
        v.coords[m - 1] = Complex64::new(1.0, 0.0);
        v
    }

    /// Internal constructor for results of arithmetic; finiteness is the
    /// caller's responsibility.
    pub(crate) fn from_parts(coords: Vec<Complex64>, p: NormIndex) -> Self {
        CVec { coords, p }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn p(&self) -> NormIndex {
        self.p
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<Complex64> {
        self.coords
    }

    pub fn norm(&self) -> f64 {
        self.p.norm_of(&self.coords)
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|&c| is_finite(c))
    }

    pub fn scaled(&self, s: Complex64) -> CVec {
        CVec::from_parts(self.coords.iter().map(|&c| c * s).collect(), self.p)
    }

    pub fn add(&self, other: &CVec) -> Result<CVec> {
        Error::check_dim(self.dim(), other.dim())?;
        Ok(CVec::from_parts(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
            self.p,
        ))
    }

    pub fn sub(&self, other: &CVec) -> Result<CVec> {
        Error::check_dim(self.dim(), other.dim())?;
        Ok(CVec::from_parts(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
            self.p,
        ))
    }

    /// `self + s * other`
    pub fn axpy(&self, s: Complex64, other: &CVec) -> Result<CVec> {
        Error::check_dim(self.dim(), other.dim())?;
        Ok(CVec::from_parts(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + s * b)
                .collect(),
            self.p,
        ))
    }

    pub fn distance(&self, other: &CVec) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Same coordinates, measured in a different norm.
    pub fn with_norm(mut self, p: NormIndex) -> CVec {
        self.p = p;
        self
    }
}

/// The l^p norm of `v`.
pub fn norm(v: &CVec) -> f64 {
    v.norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norm_examples() {
        let e1 = CVec::from_real(&[1.0, 0.0, 0.0], NormIndex::Two).unwrap();
        assert_eq!(norm(&e1), 1.0);
        let v = CVec::from_real(&[3.0, 4.0], NormIndex::Two).unwrap();
        assert!((norm(&v) - 5.0).abs() < 1e-15);
        let w = CVec::from_real(&[1.0, 1.0, 1.0], NormIndex::One).unwrap();
        assert_eq!(norm(&w), 3.0);
        let u = CVec::new(vec![c(0.0, 2.0), c(-1.0, 0.0)], NormIndex::Inf).unwrap();
        assert_eq!(norm(&u), 2.0);
    }

    #[test]
    fn zero_iff_zero_norm() {
        assert_eq!(CVec::zeros(4, NormIndex::One).norm(), 0.0);
        let tiny = CVec::new(vec![c(0.0, 1e-300)], NormIndex::Two).unwrap();
        assert!(tiny.norm() > 0.0);
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(
            CVec::new(vec![c(f64::NAN, 0.0)], NormIndex::Two),
            Err(Error::NonFinite { .. })
        ));
        assert!(CVec::new(vec![], NormIndex::Two).is_err());
    }

    #[test]
    fn two_norm_does_not_overflow() {
        let v = CVec::from_real(&[1e300, 1e300], NormIndex::Two).unwrap();
        assert!((v.norm() / (1e300 * 2f64.sqrt()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_in_add() {
        let a = CVec::zeros(2, NormIndex::Two);
        let b = CVec::zeros(3, NormIndex::Two);
        assert_eq!(
            a.add(&b),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 3
            })
        );
    }
}
