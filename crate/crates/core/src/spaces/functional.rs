use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spaces::scalar::{is_finite, ZERO};
use crate::spaces::vector::{CVec, NormIndex};

/// A bounded linear functional on X_d, stored by its coefficients.
///
/// `p` is the norm index of the space the functional acts on; its own norm
/// is the conjugate l^q norm of the coefficients. The pairing is bilinear
/// (no conjugation).
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    coords: Vec<Complex64>,
    p: NormIndex,
}

impl Functional {
    pub fn new(coords: Vec<Complex64>, p: NormIndex) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Precondition(
                "functional dimension must be positive".into(),
            ));
        }
        if !coords.iter().all(|&c| is_finite(c)) {
            return Err(Error::NonFinite { what: "functional" });
        }
        Ok(Functional { coords, p })
    }

    pub fn from_real(coords: &[f64], p: NormIndex) -> Result<Self> {
        Functional::new(coords.iter().map(|&r| Complex64::new(r, 0.0)).collect(), p)
    }

    /// phi_m = first * ratio^(m-1), m = 1..=dim
    pub fn geometric(dim: usize, first: f64, ratio: f64, p: NormIndex) -> Result<Self> {
        let coords = (0..dim)
            .map(|m| Complex64::new(first * ratio.powi(m as i32), 0.0))
            .collect();
        Functional::new(coords, p)
    }

    pub(crate) fn from_parts(coords: Vec<Complex64>, p: NormIndex) -> Self {
        Functional { coords, p }
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

    pub fn dual_norm(&self) -> f64 {
        self.p.dual().norm_of(&self.coords)
    }

    pub fn pairing(&self, v: &CVec) -> Result<Complex64> {
        Error::check_dim(self.dim(), v.dim())?;
        Ok(self.coords.iter().zip(v.coords()).map(|(f, x)| f * x).sum())
    }

    /// A unit vector `v` (in the l^p norm) with `pairing(v) = dual_norm`.
    ///
    /// Returns `None` for the zero functional.
    pub fn norming_vector(&self) -> Option<CVec> {
        let q_norm = self.dual_norm();
        if q_norm == 0.0 {
            return None;
        }
        let coords: Vec<Complex64> = match self.p {
            NormIndex::Two => self.coords.iter().map(|f| f.conj() / q_norm).collect(),
            NormIndex::Inf => self
                .coords
                .iter()
                .map(|f| {
                    if f.norm() > 0.0 {
                        f.conj() / f.norm()
                    } else {
                        ZERO
                    }
                })
                .collect(),
            NormIndex::One => {
                let (idx, f) = self
                    .coords
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                    .expect("non-empty");
                let mut c = vec![ZERO; self.dim()];
                c[idx] = f.conj() / f.norm();
                c
            }
        };
        Some(CVec::from_parts(coords, self.p))
    }
}

/// ||phi|| in the dual of l^p.
pub fn dual_norm(phi: &Functional) -> f64 {
    phi.dual_norm()
}

/// phi(v) = sum_m phi_m v_m
pub fn pairing(phi: &Functional, v: &CVec) -> Result<Complex64> {
    phi.pairing(v)
}
