use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::expm::{self, all_finite, matvec, vecmat, CMatrix};
use crate::spaces::functional::Functional;
use crate::spaces::scalar::{self, is_finite, ZERO};
use crate::spaces::vector::{CVec, NormIndex};

/// Largest `Re(t a_m)` whose exponential is representable.
pub const OVERFLOW_EXPONENT: f64 = 709.0;

/// Concrete diagonal families a_m = g(m), m = 1..=d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum GrowthLaw {
    /// a_m = -m^alpha
    Poly {
        #[serde(with = "crate::hexfloat::f64_hex")]
        alpha: f64,
    },
    /// a_m = i m^alpha
    ImagPoly {
        #[serde(with = "crate::hexfloat::f64_hex")]
        alpha: f64,
    },
    /// a_m = i r^m
    Geom {
        #[serde(with = "crate::hexfloat::f64_hex")]
        r: f64,
    },
    /// a_m = i m!
    Factorial,
    /// a_m = i * scale * exp(rate^m)
    DoubleExp {
        #[serde(with = "crate::hexfloat::f64_hex")]
        scale: f64,
        #[serde(with = "crate::hexfloat::f64_hex")]
        rate: f64,
    },
}

impl GrowthLaw {
    pub fn entry(&self, m: usize) -> Complex64 {
        let mf = m as f64;
        match *self {
            GrowthLaw::Poly { alpha } => Complex64::new(-mf.powf(alpha), 0.0),
            GrowthLaw::ImagPoly { alpha } => Complex64::new(0.0, mf.powf(alpha)),
            GrowthLaw::Geom { r } => Complex64::new(0.0, r.powi(m as i32)),
            GrowthLaw::Factorial => Complex64::new(0.0, (1..=m).map(|k| k as f64).product()),
            GrowthLaw::DoubleExp { scale, rate } => {
                Complex64::new(0.0, scale * rate.powi(m as i32).exp())
            }
        }
    }

    pub fn entries(&self, dim: usize) -> Vec<Complex64> {
        (1..=dim).map(|m| self.entry(m)).collect()
    }

    /// The primary parameter, used by parameter sweeps.
    pub fn with_parameter(&self, value: f64) -> GrowthLaw {
        match *self {
            GrowthLaw::Poly { .. } => GrowthLaw::Poly { alpha: value },
            GrowthLaw::ImagPoly { .. } => GrowthLaw::ImagPoly { alpha: value },
            GrowthLaw::Geom { .. } => GrowthLaw::Geom { r: value },
            GrowthLaw::Factorial => GrowthLaw::Factorial,
            GrowthLaw::DoubleExp { scale, .. } => GrowthLaw::DoubleExp { scale, rate: value },
        }
    }
}

/// The truncated operator standing in for the generator A.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Diagonal {
        law: Option<GrowthLaw>,
        entries: Vec<Complex64>,
    },
    Dense {
        matrix: CMatrix,
    },
}

impl Generator {
    pub fn from_law(law: GrowthLaw, dim: usize) -> Result<Self> {
        let entries = law.entries(dim);
        let g = Generator::Diagonal {
            law: Some(law),
            entries,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn diagonal(entries: Vec<Complex64>) -> Result<Self> {
        let g = Generator::Diagonal { law: None, entries };
        g.validate()?;
        Ok(g)
    }

    pub fn diagonal_real(entries: &[f64]) -> Result<Self> {
        Generator::diagonal(entries.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub fn dense(matrix: CMatrix) -> Result<Self> {
        let g = Generator::Dense { matrix };
        g.validate()?;
        Ok(g)
    }

    pub fn zero(dim: usize) -> Self {
        Generator::Diagonal {
            law: None,
            entries: vec![ZERO; dim],
        }
    }

    /// Checks finiteness, squareness, and that stored diagonal entries are
    /// exactly what the growth law regenerates.
    pub fn validate(&self) -> Result<()> {
        match self {
            Generator::Diagonal { law, entries } => {
                if entries.is_empty() {
                    return Err(Error::Precondition(
                        "generator dimension must be positive".into(),
                    ));
                }
                if !entries.iter().all(|&c| is_finite(c)) {
                    return Err(Error::NonFinite {
                        what: "generator entries",
                    });
                }
                if let Some(law) = law {
                    for (i, &a) in entries.iter().enumerate() {
                        if law.entry(i + 1) != a {
                            return Err(Error::LawMismatch { index: i + 1 });
                        }
                    }
                }
                Ok(())
            }
            Generator::Dense { matrix } => {
                if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
                    return Err(Error::Precondition(
                        "dense generator must be square and non-empty".into(),
                    ));
                }
                if !all_finite(matrix) {
                    return Err(Error::NonFinite {
                        what: "generator matrix",
                    });
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Generator::Diagonal { entries, .. } => entries.len(),
            Generator::Dense { matrix } => matrix.nrows(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, Generator::Diagonal { .. })
    }

    pub fn to_matrix(&self) -> CMatrix {
        match self {
            Generator::Diagonal { entries, .. } => Array2::from_diag(&ndarray::arr1(entries)),
            Generator::Dense { matrix } => matrix.clone(),
        }
    }

    /// Av
    pub fn apply(&self, v: &CVec) -> Result<CVec> {
        Error::check_dim(self.dim(), v.dim())?;
        let coords = match self {
            Generator::Diagonal { entries, .. } => {
                entries.iter().zip(v.coords()).map(|(a, x)| a * x).collect()
            }
            Generator::Dense { matrix } => matvec(matrix, v.coords()),
        };
        Ok(CVec::from_parts(coords, v.p()))
    }

    /// e^{tA} v
    pub fn semigroup_apply(&self, t: f64, v: &CVec) -> Result<CVec> {
        self.check_time(t)?;
        Error::check_dim(self.dim(), v.dim())?;
        match self {
            Generator::Diagonal { entries, .. } => {
                let mut out = Vec::with_capacity(v.dim());
                for (a, x) in entries.iter().zip(v.coords()) {
                    if *x == ZERO {
                        out.push(ZERO);
                        continue;
                    }
                    let z = a * t;
                    if z.re > OVERFLOW_EXPONENT {
                        return Err(Error::Overflow { exponent: z.re });
                    }
                    out.push(z.exp() * x);
                }
                Ok(CVec::from_parts(out, v.p()))
            }
            Generator::Dense { .. } => {
                let e = self.semigroup_matrix(t)?;
                let w = CVec::from_parts(matvec(&e, v.coords()), v.p());
                self.finite_or_overflow(t, w)
            }
        }
    }

    /// (e^{tA} - I) v, accurate when `t A` is small.
    pub fn semigroup_increment(&self, t: f64, v: &CVec) -> Result<CVec> {
        self.check_time(t)?;
        Error::check_dim(self.dim(), v.dim())?;
        match self {
            Generator::Diagonal { entries, .. } => {
                let mut out = Vec::with_capacity(v.dim());
                for (a, x) in entries.iter().zip(v.coords()) {
                    if *x == ZERO {
                        out.push(ZERO);
                        continue;
                    }
                    let z = a * t;
                    if z.re > OVERFLOW_EXPONENT {
                        return Err(Error::Overflow { exponent: z.re });
                    }
                    out.push(scalar::expm1(z) * x);
                }
                Ok(CVec::from_parts(out, v.p()))
            }
            Generator::Dense { matrix } => {
                let f = expm::expm_minus_identity(&matrix.mapv(|c| c * t));
                let w = CVec::from_parts(matvec(&f, v.coords()), v.p());
                self.finite_or_overflow(t, w)
            }
        }
    }

    /// Dense matrix of e^{tA}.
    pub fn semigroup_matrix(&self, t: f64) -> Result<CMatrix> {
        self.check_time(t)?;
        let e = match self {
            Generator::Diagonal { entries, .. } => {
                if let Some(z) = entries
                    .iter()
                    .map(|a| a * t)
                    .find(|z| z.re > OVERFLOW_EXPONENT)
                {
                    return Err(Error::Overflow { exponent: z.re });
                }
                Array2::from_diag(&ndarray::arr1(
                    &entries.iter().map(|a| (a * t).exp()).collect::<Vec<_>>(),
                ))
            }
            Generator::Dense { matrix } => expm::expm(&matrix.mapv(|c| c * t)),
        };
        if !all_finite(&e) {
            return Err(Error::Overflow {
                exponent: t * self.growth_bound(NormIndex::Two),
            });
        }
        Ok(e)
    }

    /// The functional v -> phi(Av).
    pub fn adjoint_functional(&self, phi: &Functional) -> Result<Functional> {
        Error::check_dim(self.dim(), phi.dim())?;
        let coords = match self {
            Generator::Diagonal { entries, .. } => entries
                .iter()
                .zip(phi.coords())
                .map(|(a, f)| a * f)
                .collect(),
            Generator::Dense { matrix } => vecmat(phi.coords(), matrix),
        };
        Ok(Functional::from_parts(coords, phi.p()))
    }

    /// The functional v -> phi((e^{tA} - I) v).
    pub fn increment_functional(&self, phi: &Functional, t: f64) -> Result<Functional> {
        self.check_time(t)?;
        Error::check_dim(self.dim(), phi.dim())?;
        let coords = match self {
            Generator::Diagonal { entries, .. } => entries
                .iter()
                .zip(phi.coords())
                .map(|(a, f)| {
                    if *f == ZERO {
                        ZERO
                    } else {
                        scalar::expm1(a * t) * f
                    }
                })
                .collect(),
            Generator::Dense { matrix } => vecmat(
                phi.coords(),
                &expm::expm_minus_identity(&matrix.mapv(|c| c * t)),
            ),
        };
        let psi = Functional::from_parts(coords, phi.p());
        if !psi.coords().iter().all(|&c| is_finite(c)) {
            return Err(Error::Overflow {
                exponent: t * self.growth_bound(phi.p()),
            });
        }
        Ok(psi)
    }

    /// Operator norm on l^p. Exact for diagonal generators and for p in
    /// {1, inf}; for p = 2 on dense matrices a power-iteration estimate.
    pub fn operator_norm(&self, p: NormIndex) -> f64 {
        match self {
            Generator::Diagonal { entries, .. } => entries.iter().fold(0.0, |m, a| m.max(a.norm())),
            Generator::Dense { matrix } => expm::operator_norm(matrix, p),
        }
    }

    /// An upper bound mu with ||e^{tA}||_p <= e^{mu t} (logarithmic norm).
    pub fn growth_bound(&self, p: NormIndex) -> f64 {
        match self {
            Generator::Diagonal { entries, .. } => entries
                .iter()
                .map(|a| a.re)
                .fold(f64::NEG_INFINITY, f64::max),
            Generator::Dense { matrix } => {
                let d = matrix.nrows();
                let off = |i: usize, j: usize| -> f64 {
                    match p {
                        NormIndex::One => matrix[[j, i]].norm(),
                        NormIndex::Inf => matrix[[i, j]].norm(),
                        NormIndex::Two => (0.5 * (matrix[[i, j]] + matrix[[j, i]].conj())).norm(),
                    }
                };
                (0..d)
                    .map(|i| {
                        matrix[[i, i]].re
                            + (0..d).filter(|&j| j != i).map(|j| off(i, j)).sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Precondition(format!(
                "time must be finite and nonnegative, got {t}"
            )));
        }
        Ok(())
    }

    fn finite_or_overflow(&self, t: f64, w: CVec) -> Result<CVec> {
        if w.is_finite() {
            Ok(w)
        } else {
            Err(Error::Overflow {
                exponent: t * self.growth_bound(w.p()),
            })
        }
    }
}

/// A v
pub fn apply_generator(a: &Generator, v: &CVec) -> Result<CVec> {
    a.apply(v)
}

/// e^{tA} v
pub fn semigroup_apply(a: &Generator, t: f64, v: &CVec) -> Result<CVec> {
    a.semigroup_apply(t, v)
}

/// Dual norm of v -> phi(Av); grows without bound along a family in d
/// exactly when phi leaves the domain of the adjoint in the limit.
pub fn adjoint_defect(a: &Generator, phi: &Functional) -> Result<f64> {
    Ok(a.adjoint_functional(phi)?.dual_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const P: NormIndex = NormIndex::Two;

    #[test]
    fn apply_examples() {
        let a = Generator::diagonal_real(&[1.0, 2.0]).unwrap();
        let v = CVec::from_real(&[1.0, 1.0], P).unwrap();
        assert_eq!(
            apply_generator(&a, &v).unwrap().coords(),
            &[c(1.0, 0.0), c(2.0, 0.0)]
        );

        let id = Generator::dense(expm::identity(3)).unwrap();
        let v = CVec::new(vec![c(1.0, 2.0), c(-3.0, 0.0), c(0.0, 0.5)], P).unwrap();
        assert_eq!(apply_generator(&id, &v).unwrap(), v);

        let a = Generator::diagonal(vec![c(0.0, 1.0), c(0.0, 2.0)]).unwrap();
        let e1 = CVec::from_real(&[1.0, 0.0], P).unwrap();
        assert_eq!(
            apply_generator(&a, &e1).unwrap().coords(),
            &[c(0.0, 1.0), c(0.0, 0.0)]
        );
    }

    #[test]
    fn semigroup_examples() {
        let v = CVec::from_real(&[0.3, -2.0], P).unwrap();
        assert_eq!(semigroup_apply(&Generator::zero(2), 1.0, &v).unwrap(), v);
        let zero_dense = Generator::dense(Array2::zeros((2, 2))).unwrap();
        assert_eq!(semigroup_apply(&zero_dense, 1.0, &v).unwrap(), v);

        let a = Generator::diagonal_real(&[1.0]).unwrap();
        let one = CVec::from_real(&[1.0], P).unwrap();
        let w = semigroup_apply(&a, 1.0, &one).unwrap();
        assert!((w.coords()[0] - c(std::f64::consts::E, 0.0)).norm() < 1e-15);

        let n = Generator::dense(array![
            [c(0.0, 0.0), c(1.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0)]
        ])
        .unwrap();
        let e2 = CVec::from_real(&[0.0, 1.0], P).unwrap();
        let w = semigroup_apply(&n, 1.0, &e2).unwrap();
        assert!(
            w.distance(&CVec::from_real(&[1.0, 1.0], P).unwrap())
                .unwrap()
                < 1e-15
        );
    }

    #[test]
    fn overflow_is_reported() {
        let a = Generator::diagonal_real(&[1000.0]).unwrap();
        let v = CVec::from_real(&[1.0], P).unwrap();
        assert!(matches!(
            semigroup_apply(&a, 1.0, &v),
            Err(Error::Overflow { .. })
        ));
        let d = Generator::dense(array![[c(1000.0, 0.0)]]).unwrap();
        assert!(matches!(
            semigroup_apply(&d, 1.0, &v),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn negative_time_rejected() {
        let v = CVec::from_real(&[1.0], P).unwrap();
        assert!(semigroup_apply(&Generator::zero(1), -1.0, &v).is_err());
    }

    #[test]
    fn law_regeneration_checked() {
        let law = GrowthLaw::Geom { r: 2.0 };
        let g = Generator::from_law(law.clone(), 5).unwrap();
        assert!(g.validate().is_ok());
        let mut entries = law.entries(5);
        entries[3] += c(0.0, 1e-9);
        let bad = Generator::Diagonal {
            law: Some(law),
            entries,
        };
        assert_eq!(bad.validate(), Err(Error::LawMismatch { index: 4 }));
    }

    #[test]
    fn growth_law_entries() {
        assert_eq!(GrowthLaw::Poly { alpha: 2.0 }.entry(3), c(-9.0, 0.0));
        assert_eq!(GrowthLaw::ImagPoly { alpha: 1.0 }.entry(4), c(0.0, 4.0));
        assert_eq!(GrowthLaw::Geom { r: 3.0 }.entry(2), c(0.0, 9.0));
        assert_eq!(GrowthLaw::Factorial.entry(5), c(0.0, 120.0));
        let de = GrowthLaw::DoubleExp {
            scale: 0.5,
            rate: 2.0,
        }
        .entry(2);
        assert!((de.im - 0.5 * 4f64.exp()).abs() < 1e-12);
        for law in [
            GrowthLaw::Poly { alpha: 1.5 },
            GrowthLaw::Geom { r: 1.7 },
            GrowthLaw::Factorial,
            GrowthLaw::DoubleExp {
                scale: 0.01,
                rate: 1.2,
            },
        ] {
            let e = law.entries(12);
            assert!(e.windows(2).all(|w| w[0].norm() <= w[1].norm()), "{law:?}");
        }
    }

    #[test]
    fn adjoint_defect_examples() {
        let phi = Functional::from_real(&[0.3, 0.2], P).unwrap();
        assert_eq!(adjoint_defect(&Generator::zero(2), &phi).unwrap(), 0.0);

        // |a_m phi_m| = 1 for every m
        for d in [1usize, 4, 9, 16] {
            let a = Generator::from_law(GrowthLaw::Geom { r: 2.0 }, d).unwrap();
            let phi = Functional::geometric(d, 0.5, 0.5, P).unwrap();
            let got = adjoint_defect(&a, &phi).unwrap();
            assert!((got - (d as f64).sqrt()).abs() < 1e-12, "d={d}: {got}");
        }

        // |a_m phi_m| = 1/m: bounded by sqrt(pi^2/6) for all d
        let bound = (std::f64::consts::PI.powi(2) / 6.0).sqrt();
        let mut prev = 0.0;
        for d in [1usize, 10, 100, 1000] {
            let a = Generator::from_law(GrowthLaw::ImagPoly { alpha: 1.0 }, d).unwrap();
            let coords: Vec<f64> = (1..=d).map(|m| 1.0 / (m * m) as f64).collect();
            let phi = Functional::from_real(&coords, P).unwrap();
            let got = adjoint_defect(&a, &phi).unwrap();
            assert!(got <= bound && got >= prev);
            prev = got;
        }
    }

    #[test]
    fn operator_norm_of_dense() {
        let m = array![[c(3.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -4.0)]];
        let g = Generator::dense(m).unwrap();
        assert!((g.operator_norm(NormIndex::Two) - 4.0).abs() < 1e-9);
        assert_eq!(g.operator_norm(NormIndex::One), 4.0);
    }

    #[test]
    fn growth_bound_dominates_semigroup_norm() {
        let m = array![[c(-1.0, 0.0), c(0.5, 0.2)], [c(-0.3, 0.0), c(0.2, 1.0)]];
        let g = Generator::dense(m).unwrap();
        for p in [NormIndex::One, NormIndex::Two, NormIndex::Inf] {
            let mu = g.growth_bound(p);
            for t in [0.1, 0.5, 1.0, 3.0] {
                let e = Generator::dense(g.semigroup_matrix(t).unwrap()).unwrap();
                assert!(
                    e.operator_norm(p) <= (mu * t).exp() * (1.0 + 1e-9),
                    "{p} t={t}"
                );
            }
        }
    }
}
