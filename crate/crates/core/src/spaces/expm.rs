//! Dense matrix exponential by scaling and squaring with a Taylor core.
//!
//! The core works with `F = e^X - I` rather than `e^X` itself: squaring
//! becomes `F <- F^2 + 2F`, which keeps small increments accurate. That is
//! what the Trotter kernels need, since `c_n - 1 = phi((e^{A/n} - I)x)`
//! is multiplied by `n` afterwards.

use ndarray::Array2;
use num_complex::Complex64;

use crate::spaces::scalar::is_finite;
use crate::spaces::vector::NormIndex;

pub type CMatrix = Array2<Complex64>;

/// Scaled norm at which the Taylor core is applied.
pub const SCALED_NORM_TARGET: f64 = 0.5;

const MAX_TAYLOR_TERMS: usize = 40;

pub fn identity(d: usize) -> CMatrix {
    Array2::from_diag_elem(d, Complex64::new(1.0, 0.0))
}

/// Maximum absolute column sum.
pub fn one_norm(m: &CMatrix) -> f64 {
    m.columns()
        .into_iter()
        .map(|col| col.iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Operator norm induced by l^p. Exact for p in {1, inf}; power iteration
/// on `M^* M` for p = 2.
pub fn operator_norm(m: &CMatrix, p: NormIndex) -> f64 {
    match p {
        NormIndex::One => one_norm(m),
        NormIndex::Inf => m
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|c| c.norm()).sum::<f64>())
            .fold(0.0, f64::max),
        NormIndex::Two => spectral_norm(m),
    }
}

fn spectral_norm(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mh = m.t().mapv(|c| c.conj());
    let mut v: Vec<Complex64> = (0..d)
        .map(|i| Complex64::new(1.0, 0.1 * i as f64))
        .collect();
    let mut sigma = 0.0;
    for _ in 0..500 {
        let w = matvec(&mh, &matvec(m, &v));
        let nrm = NormIndex::Two.norm_of(&w);
        if nrm == 0.0 {
            return 0.0;
        }
        let next = nrm.sqrt();
        v = w.into_iter().map(|c| c / nrm).collect();
        if (next - sigma).abs() <= 1e-15 * next {
            sigma = next;
            break;
        }
        sigma = next;
    }
    sigma
}

/// Number of halvings needed to bring `||X||_1` down to the scaled target.
pub fn squaring_count(x: &CMatrix) -> u32 {
    let nrm = one_norm(x);
    if nrm <= SCALED_NORM_TARGET {
        0
    } else {
        (nrm / SCALED_NORM_TARGET).log2().ceil() as u32
    }
}

/// `e^X - I`.
pub fn expm_minus_identity(x: &CMatrix) -> CMatrix {
    let d = x.nrows();
    assert_eq!(d, x.ncols(), "matrix exponential needs a square matrix");
    let s = squaring_count(x);
    let y = x.mapv(|c| c / 2f64.powi(s as i32));

    let mut f = y.clone();
    let mut term = y.clone();
    for k in 2..=MAX_TAYLOR_TERMS {
        term = term.dot(&y).mapv(|c| c / k as f64);
        f += &term;
        let tn = one_norm(&term);
        if tn <= 1e-18 * one_norm(&f).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    for _ in 0..s {
        let sq = f.dot(&f);
        f = sq + f.mapv(|c| 2.0 * c);
    }
    f
}

/// `e^X`.
pub fn expm(x: &CMatrix) -> CMatrix {
    expm_minus_identity(x) + identity(x.nrows())
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|&c| is_finite(c))
}

pub fn matvec(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    m.rows()
        .into_iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Row vector times matrix: `(phi^T M)_j = sum_i phi_i M_ij`.
pub fn vecmat(phi: &[Complex64], m: &CMatrix) -> Vec<Complex64> {
    m.columns()
        .into_iter()
        .map(|col| col.iter().zip(phi).map(|(a, f)| a * f).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn nilpotent_exponential_is_exact() {
        let n = array![[c(0.0), c(1.0)], [c(0.0), c(0.0)]];
        let e = expm(&n);
        let expect = array![[c(1.0), c(1.0)], [c(0.0), c(1.0)]];
        assert!((e - expect).iter().all(|d| d.norm() < 1e-15));
    }

    #[test]
    fn diagonal_matches_scalar_exp() {
        let z = [
            Complex64::new(2.0, 1.0),
            Complex64::new(-3.0, 4.0),
            Complex64::new(0.0, -7.5),
        ];
        let m = Array2::from_diag(&ndarray::arr1(&z));
        let e = expm(&m);
        for (i, zi) in z.iter().enumerate() {
            let rel = (e[[i, i]] - zi.exp()).norm() / zi.exp().norm();
            assert!(rel < 1e-13, "entry {i}: {rel}");
        }
    }

    #[test]
    fn rotation_generator() {
        let t = 3.0_f64;
        let m = array![[c(0.0), c(-t)], [c(t), c(0.0)]];
        let e = expm(&m);
        assert!((e[[0, 0]] - c(t.cos())).norm() < 1e-13);
        assert!((e[[1, 0]] - c(t.sin())).norm() < 1e-13);
    }

    #[test]
    fn increment_is_accurate_for_tiny_argument() {
        let m = array![[c(1e-10), c(2e-10)], [c(0.0), c(-1e-10)]];
        let f = expm_minus_identity(&m);
        // first-order term dominates; relative error near machine precision
        assert!(((f[[0, 1]] - c(2e-10)).norm() / 2e-10) < 1e-9);
        assert!(((f[[0, 0]] - c(1e-10)).norm() / 1e-10) < 1e-9);
    }

    #[test]
    fn squaring_count_targets_half() {
        let m = array![[c(10.0)]];
        let s = squaring_count(&m);
        assert!(10.0 / 2f64.powi(s as i32) <= SCALED_NORM_TARGET);
        assert!(10.0 / 2f64.powi(s as i32 - 1) > SCALED_NORM_TARGET);
    }
}
