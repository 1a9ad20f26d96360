//! Rank-one projections along ker(phi) onto span{x}, and explicit dense
//! idempotents for the bounded-case comparisons.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spaces::expm::{self, matvec, CMatrix};
use crate::spaces::{CVec, Functional, NormIndex};

/// Smallest |phi(x)| accepted by [`make_rank_one`].
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Common surface of the projections fed to the Trotter product.
pub trait Projector {
    fn dim(&self) -> usize;
    fn apply(&self, z: &CVec) -> Result<CVec>;
    fn to_matrix(&self) -> CMatrix;
    fn operator_norm(&self) -> f64;
}

/// `P z = phi(z) x` with `phi(x) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneProjection {
    x: CVec,
    phi: Functional,
}

impl RankOneProjection {
    pub fn x(&self) -> &CVec {
        &self.x
    }

    pub fn phi(&self) -> &Functional {
        &self.phi
    }

    pub fn project(&self, z: &CVec) -> Result<CVec> {
        let s = self.phi.pairing(z)?;
        Ok(self.x.scaled(s))
    }

    /// `(I - P) z`
    pub fn complement_apply(&self, z: &CVec) -> Result<CVec> {
        let s = self.phi.pairing(z)?;
        z.axpy(-s, &self.x)
    }

    /// Exact operator norm of z -> phi(z) x.
    pub fn norm(&self) -> f64 {
        self.phi.dual_norm() * self.x.norm()
    }
}

impl Projector for RankOneProjection {
    fn dim(&self) -> usize {
        self.x.dim()
    }

    fn apply(&self, z: &CVec) -> Result<CVec> {
        self.project(z)
    }

    fn to_matrix(&self) -> CMatrix {
        let (x, f) = (self.x.coords(), self.phi.coords());
        CMatrix::from_shape_fn((x.len(), x.len()), |(i, j)| x[i] * f[j])
    }

    fn operator_norm(&self) -> f64 {
        self.norm()
    }
}

/// Normalizes `x` so that `phi(x) = 1` and returns `P_x`.
pub fn make_rank_one(x: &CVec, phi: &Functional) -> Result<RankOneProjection> {
    if x.p() != phi.p() {
        return Err(Error::NormMismatch);
    }
    let s = phi.pairing(x)?;
    if s.norm() < DEGENERACY_THRESHOLD {
        return Err(Error::DegeneratePair { pairing: s.norm() });
    }
    let x = x.scaled(Complex64::new(1.0, 0.0) / s);
    Ok(RankOneProjection {
        x,
        phi: phi.clone(),
    })
}

pub fn project(p: &RankOneProjection, z: &CVec) -> Result<CVec> {
    p.project(z)
}

pub fn complement_apply(p: &RankOneProjection, z: &CVec) -> Result<CVec> {
    p.complement_apply(z)
}

pub fn projection_norm(p: &RankOneProjection) -> f64 {
    p.norm()
}

/// An explicit idempotent matrix acting on l^p.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseProjection {
    matrix: CMatrix,
    p: NormIndex,
}

impl DenseProjection {
    /// Accepts `M` when `||M^2 - M|| <= 1e-10 (1 + ||M||^2)`.
    pub fn new(matrix: CMatrix, p: NormIndex) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::Precondition(
                "projection must be square and non-empty".into(),
            ));
        }
        if !expm::all_finite(&matrix) {
            return Err(Error::NonFinite {
                what: "projection matrix",
            });
        }
        let defect = expm::one_norm(&(matrix.dot(&matrix) - &matrix));
        let scale = expm::one_norm(&matrix);
        if defect > 1e-10 * (1.0 + scale * scale) {
            return Err(Error::NotIdempotent { defect });
        }
        Ok(DenseProjection { matrix, p })
    }

    pub fn identity(dim: usize, p: NormIndex) -> Self {
        DenseProjection {
            matrix: expm::identity(dim),
            p,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn p(&self) -> NormIndex {
        self.p
    }
}

impl Projector for DenseProjection {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, z: &CVec) -> Result<CVec> {
        Error::check_dim(self.dim(), z.dim())?;
        CVec::new(matvec(&self.matrix, z.coords()), z.p())
    }

    fn to_matrix(&self) -> CMatrix {
        self.matrix.clone()
    }

    fn operator_norm(&self) -> f64 {
        expm::operator_norm(&self.matrix, self.p)
    }
}

impl From<&RankOneProjection> for DenseProjection {
    fn from(p: &RankOneProjection) -> Self {
        DenseProjection {
            matrix: p.to_matrix(),
            p: p.x.p(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use proptest::prelude::*;

    const P2: NormIndex = NormIndex::Two;

    fn v(re: &[f64]) -> CVec {
        CVec::from_real(re, P2).unwrap()
    }

    fn f(re: &[f64]) -> Functional {
        Functional::from_real(re, P2).unwrap()
    }

    fn close(a: &CVec, b: &CVec, tol: f64) -> bool {
        a.distance(b).unwrap() <= tol
    }

    #[test]
    fn make_rank_one_examples() {
        let p = make_rank_one(&v(&[1.0, 0.0]), &f(&[1.0, 0.0])).unwrap();
        assert_eq!(p.project(&v(&[3.0, -2.0])).unwrap(), v(&[3.0, 0.0]));

        let p = make_rank_one(&v(&[2.0, 0.0]), &f(&[1.0, 0.0])).unwrap();
        assert_eq!(p.x(), &v(&[1.0, 0.0]));

        let p = make_rank_one(&v(&[1.0, 1.0]), &f(&[0.5, 0.5])).unwrap();
        let z = v(&[0.3, 1.7]);
        assert!(close(&p.project(&z).unwrap(), &v(&[1.0, 1.0]), 1e-15));
    }

    #[test]
    fn degenerate_pair_rejected() {
        let err = make_rank_one(&v(&[1.0, -1.0]), &f(&[1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::DegeneratePair { .. }));
    }

    #[test]
    fn project_examples() {
        let p = make_rank_one(&v(&[1.0, 1.0]), &f(&[0.5, 0.5])).unwrap();
        assert!(close(&project(&p, p.x()).unwrap(), p.x(), 1e-15));
        assert_eq!(project(&p, &v(&[1.0, -1.0])).unwrap().norm(), 0.0);
        assert!(close(
            &project(&p, &v(&[2.0, 0.0])).unwrap(),
            &v(&[1.0, 1.0]),
            1e-15
        ));
    }

    #[test]
    fn complement_examples() {
        let p = make_rank_one(&v(&[1.0, 1.0]), &f(&[0.5, 0.5])).unwrap();
        assert_eq!(complement_apply(&p, p.x()).unwrap().norm(), 0.0);
        let k = v(&[1.0, -1.0]);
        assert_eq!(complement_apply(&p, &k).unwrap(), k);
        assert!(close(
            &complement_apply(&p, &v(&[2.0, 0.0])).unwrap(),
            &v(&[1.0, -1.0]),
            1e-15
        ));
    }

    #[test]
    fn projection_norm_examples() {
        let p = make_rank_one(&v(&[1.0, 0.0]), &f(&[1.0, 0.0])).unwrap();
        assert_eq!(projection_norm(&p), 1.0);
        let p = make_rank_one(&v(&[1.0, 1.0]), &f(&[0.5, 0.5])).unwrap();
        assert!((projection_norm(&p) - 1.0).abs() < 1e-15);
    }

    // brute-force sup over random unit vectors, compared with ||phi|| ||x||
    #[test]
    fn projection_norm_matches_monte_carlo_sup() {
        let mut rng = sampling::rng(2024);
        let p = make_rank_one(&v(&[1.0, 1.0]), &f(&[1.5, -0.5])).unwrap();
        let exact = projection_norm(&p);
        let mut sup: f64 = 0.0;
        for _ in 0..100_000 {
            let z = sampling::random_unit_vector(&mut rng, 2, P2);
            sup = sup.max(p.project(&z).unwrap().norm());
        }
        assert!(sup <= exact * (1.0 + 1e-12));
        assert!(sup >= 0.98 * exact, "sup {sup} vs exact {exact}");
    }

    #[test]
    fn identity_and_rank_one_matrices() {
        let id = DenseProjection::identity(3, P2);
        let z = v(&[1.0, 2.0, 3.0]);
        assert_eq!(id.apply(&z).unwrap(), z);

        let p = make_rank_one(&v(&[1.0, 2.0, 0.0]), &f(&[0.2, 0.1, 0.7])).unwrap();
        let dense = DenseProjection::from(&p);
        assert!(close(
            &dense.apply(&z).unwrap(),
            &p.project(&z).unwrap(),
            1e-14
        ));
        assert!(DenseProjection::new(p.to_matrix(), P2).is_ok());
    }

    #[test]
    fn non_idempotent_rejected() {
        let m = CMatrix::from_shape_fn((2, 2), |(i, j)| Complex64::new((i + j) as f64, 0.0));
        assert!(matches!(
            DenseProjection::new(m, P2),
            Err(Error::NotIdempotent { .. })
        ));
    }

    #[test]
    fn ill_conditioned_oblique_idempotent_accepted() {
        // P = [[1, k], [0, 0]] has norm ~ k
        let k = 1e4;
        let m = CMatrix::from_shape_fn((2, 2), |(i, j)| match (i, j) {
            (0, 0) => Complex64::new(1.0, 0.0),
            (0, 1) => Complex64::new(k, 0.0),
            _ => Complex64::new(0.0, 0.0),
        });
        let p = DenseProjection::new(m, P2).unwrap();
        assert!(p.operator_norm() > k);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rank_one_invariants(seed in any::<u64>(), dim in 1usize..10) {
            let mut rng = sampling::rng(seed);
            let x = sampling::random_vector(&mut rng, dim, P2);
            let phi = sampling::random_functional(&mut rng, dim, P2);
            let Ok(p) = make_rank_one(&x, &phi) else { return Ok(()) };
            prop_assert!((phi.pairing(p.x()).unwrap() - Complex64::new(1.0, 0.0)).norm() <= 1e-12 * p.norm().max(1.0));
            for _ in 0..16 {
                let z = sampling::random_vector(&mut rng, dim, P2);
                let pz = p.project(&z).unwrap();
                let ppz = p.project(&pz).unwrap();
                let scale = p.norm() * p.norm() * z.norm();
                prop_assert!(ppz.distance(&pz).unwrap() <= 1e-12 * scale);
                let lhs = phi.pairing(&pz).unwrap();
                let rhs = phi.pairing(&z).unwrap();
                prop_assert!((lhs - rhs).norm() <= 1e-12 * phi.dual_norm() * p.norm() * z.norm());
                let recomposed = pz.add(&p.complement_apply(&z).unwrap()).unwrap();
                prop_assert!(recomposed.distance(&z).unwrap() <= 1e-14 * (1.0 + p.norm()) * z.norm());
                let k = p.complement_apply(&z).unwrap();
                prop_assert!(phi.pairing(&k).unwrap().norm() <= 1e-12 * phi.dual_norm() * (1.0 + p.norm()) * z.norm());
            }
        }
    }
}
