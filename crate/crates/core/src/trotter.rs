//! The Trotter-projection product `(e^{tA/n} P)^n`, its scalar reduction
//! for rank-one `P`, and the limit laws `n(c_n - 1) -> phi(Ax)` and
//! `c_n^n -> e^{phi(Ax)}`.
//!
//! For `P = P_x` the product collapses: `phi((e^{hA} P_x)^n x) = c_n^n`
//! with `c_n = phi(e^{hA} x)`. Because `n` amplifies any error in `c_n - 1`,
//! that increment is computed directly as `phi((e^{hA} - I) x)` and the
//! power is taken in the log domain.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projections::Projector;
use crate::spaces::expm::{self, CMatrix};
use crate::spaces::scalar::{self, ONE};
use crate::spaces::{CVec, Functional, Generator};

/// Beyond this `|Re log|` the value is carried only in log form.
pub const MATERIALIZE_LIMIT: f64 = 700.0;

/// Principal-branch reduction is used while `|c_n - 1|` stays below this.
pub const BRANCH_RADIUS: f64 = 0.5;

/// Tolerance on `|phi(x) - 1|` for inputs that must lie on the slice.
pub const SLICE_TOLERANCE: f64 = 1e-9;

/// Magnitude at which the literal product is declared overflowed.
pub const PRODUCT_OVERFLOW: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerPath {
    /// `exp(n log c_n)` with the principal logarithm.
    Log,
    /// Binary powering of `c_n` (log carried as `n ln|c| + i n arg c`).
    BinaryPowering,
}

/// `c_n^n` with its log-domain carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarValue {
    pub n: u128,
    pub c_minus_one: Complex64,
    pub log_value: Complex64,
    pub value: Option<Complex64>,
    pub path: PowerPath,
    /// Set when `|c_n - 1| > 0.5`, where the principal branch is no longer
    /// justified by the large-n regime.
    pub branch_ambiguous: bool,
}

impl ScalarValue {
    pub fn c_n(&self) -> Complex64 {
        ONE + self.c_minus_one
    }

    /// `|value|`, from the log carrier.
    pub fn modulus(&self) -> f64 {
        self.log_value.re.exp()
    }

    pub fn ln_modulus(&self) -> f64 {
        self.log_value.re
    }
}

/// Per-n diagnostics of the limit laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrotterRecord {
    pub n: u128,
    pub c_n: Complex64,
    pub c_minus_one: Complex64,
    /// `n * c_minus_one`
    pub deriv_n: Complex64,
    pub log_value: Complex64,
    pub value: Option<Complex64>,
    pub path: PowerPath,
    pub err_vs_limit: f64,
    pub deriv_err: f64,
}

fn step(t: f64, n: u128) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(t / n as f64)
}

/// `c_n = phi(e^{tA/n} x)`.
pub fn c_n(a: &Generator, phi: &Functional, x: &CVec, t: f64, n: u128) -> Result<Complex64> {
    let h = step(t, n)?;
    let inc = a.semigroup_increment(h, x)?;
    Ok(phi.pairing(x)? + phi.pairing(&inc)?)
}

/// `c_n - 1` for the slice-normalized vector `x / phi(x)`.
pub fn c_minus_one(
    a: &Generator,
    phi: &Functional,
    x: &CVec,
    t: f64,
    n: u128,
) -> Result<Complex64> {
    let h = step(t, n)?;
    let s = phi.pairing(x)?;
    if (s - ONE).norm() > SLICE_TOLERANCE {
        return Err(Error::Precondition(format!("phi(x) = {s} is not 1")));
    }
    let inc = a.semigroup_increment(h, x)?;
    Ok(phi.pairing(&inc)? / s)
}

/// Raises `1 + c_minus_one` to the `n`-th power in the representation
/// dictated by the distance to 1.
pub fn power_from_increment(c_minus_one: Complex64, n: u128) -> ScalarValue {
    let nf = n as f64;
    let c = ONE + c_minus_one;
    let (log_value, path, ambiguous) = if c_minus_one.norm() <= BRANCH_RADIUS {
        (scalar::ln_1p(c_minus_one) * nf, PowerPath::Log, false)
    } else if c.norm() == 0.0 {
        (
            Complex64::new(f64::NEG_INFINITY, 0.0),
            PowerPath::BinaryPowering,
            true,
        )
    } else {
        (
            Complex64::new(nf * c.norm().ln(), nf * c.arg()),
            PowerPath::BinaryPowering,
            true,
        )
    };
    let value = if log_value.re.abs() < MATERIALIZE_LIMIT || c.norm() == 0.0 {
        Some(match path {
            PowerPath::Log => log_value.exp(),
            PowerPath::BinaryPowering => scalar::powu(c, n),
        })
    } else {
        None
    };
    ScalarValue {
        n,
        c_minus_one,
        log_value,
        value,
        path,
        branch_ambiguous: ambiguous,
    }
}

/// `c_n^n = phi((P_x e^{tA/n} P_x)^n x)`, requiring `phi(x) = 1`.
pub fn scalar_trotter_value(
    a: &Generator,
    phi: &Functional,
    x: &CVec,
    t: f64,
    n: u128,
) -> Result<ScalarValue> {
    Ok(power_from_increment(c_minus_one(a, phi, x, t, n)?, n))
}

/// `c^n` by repeated squaring, for cross-checking the log route.
pub fn direct_power(c: Complex64, n: u128) -> Complex64 {
    scalar::powu(c, n)
}

/// The literal alternating product `(e^{tA/n} P)^n x`, one projection and
/// one semigroup step per factor.
pub fn dense_trotter_apply<P: Projector + ?Sized>(
    a: &Generator,
    proj: &P,
    x: &CVec,
    t: f64,
    n: u128,
) -> Result<CVec> {
    let h = step(t, n)?;
    Error::check_dim(a.dim(), x.dim())?;
    Error::check_dim(proj.dim(), x.dim())?;
    let propagate: Box<dyn Fn(&CVec) -> Result<CVec>> = match a {
        Generator::Diagonal { .. } => Box::new(move |w: &CVec| a.semigroup_apply(h, w)),
        Generator::Dense { .. } => {
            let e = a.semigroup_matrix(h)?;
            Box::new(move |w: &CVec| CVec::new(expm::matvec(&e, w.coords()), w.p()))
        }
    };
    let mut w = x.clone();
    for k in 1..=n {
        w = proj
            .apply(&w)
            .and_then(|pw| propagate(&pw))
            .map_err(|e| match e {
                Error::NonFinite { .. } | Error::Overflow { .. } => Error::ProductOverflow {
                    step: k,
                    magnitude: f64::INFINITY,
                },
                other => other,
            })?;
        let mag = w.norm();
        if !(mag <= PRODUCT_OVERFLOW) {
            return Err(Error::ProductOverflow {
                step: k,
                magnitude: mag,
            });
        }
    }
    Ok(w)
}

/// Records along `schedule` with errors against `e^{t phi(Ax)}` and
/// `t phi(Ax)`.
pub fn limit_check(
    a: &Generator,
    phi: &Functional,
    x: &CVec,
    t: f64,
    schedule: &[u128],
) -> Result<Vec<TrotterRecord>> {
    let target = phi.pairing(&a.apply(x)?)? * t;
    schedule
        .par_iter()
        .map(|&n| {
            let sv = scalar_trotter_value(a, phi, x, t, n)?;
            let deriv_n = sv.c_minus_one * n as f64;
            Ok(TrotterRecord {
                n,
                c_n: sv.c_n(),
                c_minus_one: sv.c_minus_one,
                deriv_n,
                log_value: sv.log_value,
                value: sv.value,
                path: sv.path,
                err_vs_limit: scalar::exp_distance(sv.log_value, target),
                deriv_err: (deriv_n - target).norm(),
            })
        })
        .collect()
}

/// `n = 2^j` for `j` in `min_power..=max_power`.
pub fn doubling_schedule(min_power: u32, max_power: u32) -> Vec<u128> {
    (min_power..=max_power).map(|j| 1u128 << j).collect()
}

/// Strong limit target `e^{t PAP} P` for bounded `A` (used to check the
/// bounded case independently of the product).
pub fn bounded_limit_oracle<P: Projector + ?Sized>(
    a: &Generator,
    proj: &P,
    t: f64,
) -> Result<CMatrix> {
    Error::check_dim(a.dim(), proj.dim())?;
    let pm = proj.to_matrix();
    let compressed = pm.dot(&a.to_matrix()).dot(&pm);
    let e = expm::expm(&compressed.mapv(|c| c * t));
    if !expm::all_finite(&e) {
        return Err(Error::Overflow {
            exponent: t * expm::one_norm(&compressed),
        });
    }
    Ok(e.dot(&pm))
}
