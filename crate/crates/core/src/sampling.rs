//! Seeded random inputs for audits, sweeps and tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::projections::{DenseProjection, Projector};
use crate::spaces::expm::{identity, CMatrix};
use crate::spaces::{CVec, Functional, Generator, NormIndex};

pub type LabRng = ChaCha8Rng;

pub fn rng(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_vector<R: Rng>(rng: &mut R, dim: usize, p: NormIndex) -> CVec {
    CVec::new((0..dim).map(|_| complex_normal(rng)).collect(), p).expect("finite samples")
}

pub fn random_unit_vector<R: Rng>(rng: &mut R, dim: usize, p: NormIndex) -> CVec {
    let v = random_vector(rng, dim, p);
    let n = v.norm();
    v.scaled(Complex64::new(1.0 / n, 0.0))
}

pub fn random_functional<R: Rng>(rng: &mut R, dim: usize, p: NormIndex) -> Functional {
    Functional::new((0..dim).map(|_| complex_normal(rng)).collect(), p).expect("finite samples")
}

pub fn random_matrix<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    CMatrix::from_shape_fn((dim, dim), |_| complex_normal(rng))
}

/// Random dense generator rescaled to operator norm `target` on l^p.
pub fn random_generator<R: Rng>(rng: &mut R, dim: usize, target: f64, p: NormIndex) -> Generator {
    let m = random_matrix(rng, dim);
    let g = Generator::dense(m.clone()).expect("finite samples");
    let s = target / g.operator_norm(p);
    Generator::dense(m.mapv(|c| c * s)).expect("finite samples")
}

/// `norm * normalize((1 - noise) u w^T + noise G)` with `u` the norming vector
/// of `phi`, so that `||phi o A||` nearly attains `||phi|| ||A||`.
pub fn near_rank_one_generator<R: Rng>(
    rng: &mut R,
    phi: &Functional,
    norm: f64,
    noise: f64,
) -> Option<Generator> {
    let (d, p) = (phi.dim(), phi.p());
    let u = phi.norming_vector()?;
    let w = random_functional(rng, d, p);
    let wn = w.dual_norm();
    let g = random_matrix(rng, d);
    let gn = crate::spaces::expm::operator_norm(&g, p);
    let m = CMatrix::from_shape_fn((d, d), |(i, j)| {
        u.coords()[i] * w.coords()[j] * ((1.0 - noise) / wn) + g[[i, j]] * (noise / gn)
    });
    let s = norm / crate::spaces::expm::operator_norm(&m, p);
    Generator::dense(m.mapv(|c| c * s)).ok()
}

/// Random oblique idempotent `S D S^{-1}` of rank `rank`, redrawn until its
/// operator norm is at most `max_norm`.
pub fn random_idempotent<R: Rng>(
    rng: &mut R,
    dim: usize,
    rank: usize,
    max_norm: f64,
    p: NormIndex,
) -> DenseProjection {
    assert!(rank <= dim);
    loop {
        let s = random_matrix(rng, dim) + identity(dim).mapv(|c| c * 2.0);
        let Some(s_inv) = invert(&s) else { continue };
        let mut d = CMatrix::zeros((dim, dim));
        for i in 0..rank {
            d[[i, i]] = Complex64::new(1.0, 0.0);
        }
        let m = s.dot(&d).dot(&s_inv);
        if let Ok(proj) = DenseProjection::new(m, p) {
            if proj.operator_norm() <= max_norm {
                return proj;
            }
        }
    }
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
pub fn invert(m: &CMatrix) -> Option<CMatrix> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut inv = identity(n);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[[i, col]].norm().total_cmp(&a[[j, col]].norm()))?;
        if a[[piv, col]].norm() < 1e-12 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap([piv, k], [col, k]);
                inv.swap([piv, k], [col, k]);
            }
        }
        let p = a[[col, col]];
        for k in 0..n {
            a[[col, k]] /= p;
            inv[[col, k]] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[[r, col]];
                if f != Complex64::new(0.0, 0.0) {
                    for k in 0..n {
                        let (ack, ick) = (a[[col, k]], inv[[col, k]]);
                        a[[r, k]] -= f * ack;
                        inv[[r, k]] -= f * ick;
                    }
                }
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let mut r = rng(7);
        let m = random_matrix(&mut r, 5);
        let inv = invert(&m).unwrap();
        let prod = m.dot(&inv) - identity(5);
        assert!(prod.iter().all(|c| c.norm() < 1e-10));
    }

    #[test]
    fn seeded_streams_repeat() {
        let a = random_vector(&mut rng(3), 4, NormIndex::Two);
        let b = random_vector(&mut rng(3), 4, NormIndex::Two);
        assert_eq!(a, b);
    }

    #[test]
    fn random_generator_has_target_norm() {
        let g = random_generator(&mut rng(11), 6, 2.0, NormIndex::Two);
        assert!((g.operator_norm(NormIndex::Two) - 2.0).abs() < 1e-8);
    }
}
