//! Python bindings: generators, functionals, the scalar Trotter value,
//! witness certificates and the `||.||_0` norm.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use semigroup_lab::projections::make_rank_one;
use semigroup_lab::renorm;
use semigroup_lab::spaces::{self, CVec, GrowthLaw, NormIndex};
use semigroup_lab::trotter;
use semigroup_lab::witness::{self, WitnessOptions};

create_exception!(semigroup_lab_py, LabError, PyException);

fn lab_err(e: semigroup_lab::Error) -> PyErr {
    LabError::new_err(e.to_string())
}

fn norm_index(p: &str) -> PyResult<NormIndex> {
    match p {
        "1" => Ok(NormIndex::One),
        "2" => Ok(NormIndex::Two),
        "inf" => Ok(NormIndex::Inf),
        other => Err(LabError::new_err(format!(
            "norm index must be '1', '2' or 'inf', got {other:?}"
        ))),
    }
}

fn vector(coords: Vec<Complex64>, p: NormIndex) -> PyResult<CVec> {
    CVec::new(coords, p).map_err(lab_err)
}

#[pyclass(frozen, module = "semigroup_lab_py")]
pub struct Generator {
    inner: spaces::Generator,
}

#[pymethods]
impl Generator {
    #[staticmethod]
    fn diagonal(entries: Vec<Complex64>) -> PyResult<Self> {
        Ok(Generator {
            inner: spaces::Generator::diagonal(entries).map_err(lab_err)?,
        })
    }

    #[staticmethod]
    fn dense(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(LabError::new_err("dense generator must be square"));
        }
        let m = spaces::CMatrix::from_shape_fn((d, d), |(i, j)| rows[i][j]);
        Ok(Generator {
            inner: spaces::Generator::dense(m).map_err(lab_err)?,
        })
    }

    /// `a_m = i * scale * exp(rate^m)`
    #[staticmethod]
    fn double_exp(dim: usize, scale: f64, rate: f64) -> PyResult<Self> {
        let law = GrowthLaw::DoubleExp { scale, rate };
        Ok(Generator {
            inner: spaces::Generator::from_law(law, dim).map_err(lab_err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[pyo3(signature = (p = "2"))]
    fn operator_norm(&self, p: &str) -> PyResult<f64> {
        Ok(self.inner.operator_norm(norm_index(p)?))
    }

    #[pyo3(signature = (p = "2"))]
    fn growth_bound(&self, p: &str) -> PyResult<f64> {
        Ok(self.inner.growth_bound(norm_index(p)?))
    }

    fn apply(&self, x: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        Ok(self
            .inner
            .apply(&vector(x, NormIndex::Two)?)
            .map_err(lab_err)?
            .into_coords())
    }

    fn semigroup_apply(&self, t: f64, x: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        Ok(self
            .inner
            .semigroup_apply(t, &vector(x, NormIndex::Two)?)
            .map_err(lab_err)?
            .into_coords())
    }
}

#[pyclass(frozen, module = "semigroup_lab_py")]
pub struct Functional {
    inner: spaces::Functional,
}

#[pymethods]
impl Functional {
    #[new]
    #[pyo3(signature = (coords, p = "2"))]
    fn new(coords: Vec<Complex64>, p: &str) -> PyResult<Self> {
        Ok(Functional {
            inner: spaces::Functional::new(coords, norm_index(p)?).map_err(lab_err)?,
        })
    }

    /// `phi_m = first * ratio^(m-1)`
    #[staticmethod]
    #[pyo3(signature = (dim, first, ratio, p = "2"))]
    fn geometric(dim: usize, first: f64, ratio: f64, p: &str) -> PyResult<Self> {
        Ok(Functional {
            inner: spaces::Functional::geometric(dim, first, ratio, norm_index(p)?)
                .map_err(lab_err)?,
        })
    }

    #[getter]
    fn coords(&self) -> Vec<Complex64> {
        self.inner.coords().to_vec()
    }

    fn dual_norm(&self) -> f64 {
        self.inner.dual_norm()
    }

    fn pairing(&self, x: Vec<Complex64>) -> PyResult<Complex64> {
        self.inner
            .pairing(&vector(x, self.inner.p())?)
            .map_err(lab_err)
    }
}

/// `(log c_n^n, c_n^n or None, c_n - 1)` for `c_n = phi(e^{tA/n} x)`.
#[pyfunction]
#[pyo3(signature = (a, phi, x, n, t = 1.0))]
fn scalar_trotter_value(
    a: &Generator,
    phi: &Functional,
    x: Vec<Complex64>,
    n: u128,
    t: f64,
) -> PyResult<(Complex64, Option<Complex64>, Complex64)> {
    let x = vector(x, phi.inner.p())?;
    let sv = trotter::scalar_trotter_value(&a.inner, &phi.inner, &x, t, n).map_err(lab_err)?;
    Ok((sv.log_value, sv.value, sv.c_minus_one))
}

/// `phi((e^{tA/n} P_x)^n x)` by the literal alternating product.
#[pyfunction]
#[pyo3(signature = (a, phi, x, n, t = 1.0))]
fn dense_trotter_pairing(
    a: &Generator,
    phi: &Functional,
    x: Vec<Complex64>,
    n: u128,
    t: f64,
) -> PyResult<Complex64> {
    let x = vector(x, phi.inner.p())?;
    let p = make_rank_one(&x, &phi.inner).map_err(lab_err)?;
    let w = trotter::dense_trotter_apply(&a.inner, &p, &x, t, n).map_err(lab_err)?;
    phi.inner.pairing(&w).map_err(lab_err)
}

/// `||P z|| + ||(I - P) z||` with `P = P_y` along `ker phi`.
#[pyfunction]
fn norm0(y: Vec<Complex64>, phi: &Functional, z: Vec<Complex64>) -> PyResult<f64> {
    let p = make_rank_one(&vector(y, phi.inner.p())?, &phi.inner).map_err(lab_err)?;
    renorm::norm0(&p, &vector(z, phi.inner.p())?).map_err(lab_err)
}

#[pyclass(frozen, module = "semigroup_lab_py")]
pub struct Certificate {
    inner: witness::WitnessCertificate,
}

#[pymethods]
impl Certificate {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Certificate {
            inner: witness::WitnessCertificate::from_json(text).map_err(lab_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Raises `LabError` naming the first failing invariant.
    fn verify(&self) -> PyResult<()> {
        self.inner.verify().map_err(lab_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn k_target(&self) -> usize {
        self.inner.k_target
    }

    #[getter]
    fn y(&self) -> Vec<Complex64> {
        self.inner.y.coords().to_vec()
    }

    #[getter]
    fn n(&self) -> Vec<u128> {
        self.inner.stages.iter().map(|s| s.n).collect()
    }

    #[getter]
    fn re_pairings(&self) -> Vec<f64> {
        self.inner.stages.iter().map(|s| s.re_pairing).collect()
    }

    #[getter]
    fn deltas(&self) -> Vec<f64> {
        self.inner.stages.iter().map(|s| s.delta).collect()
    }

    fn final_moduli(&self) -> Vec<f64> {
        self.inner.final_moduli()
    }

    fn lambda_lower_bounds(&self) -> PyResult<Vec<(usize, f64)>> {
        renorm::lambda_lower_bounds(&self.inner).map_err(lab_err)
    }
}

#[pyfunction]
#[pyo3(signature = (a, phi, eps = 0.1, k = 5, seed = 0))]
fn build_certificate(
    a: &Generator,
    phi: &Functional,
    eps: f64,
    k: usize,
    seed: u64,
) -> PyResult<Certificate> {
    let z = witness::default_z(&phi.inner).map_err(lab_err)?;
    let opts = WitnessOptions {
        seed,
        ..WitnessOptions::default()
    };
    witness::build_certificate(&a.inner, &phi.inner, &z, eps, k, &opts)
        .map(|inner| Certificate { inner })
        .map_err(|f| lab_err(f.error))
}

/// Runs the command-line tool in-process and returns its exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    semigroup_lab::cli::run(std::iter::once("semigroup-lab".to_string()).chain(args))
}

#[pymodule]
fn semigroup_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LabError", m.py().get_type::<LabError>())?;
    m.add_class::<Generator>()?;
    m.add_class::<Functional>()?;
    m.add_class::<Certificate>()?;
    m.add_function(wrap_pyfunction!(scalar_trotter_value, m)?)?;
    m.add_function(wrap_pyfunction!(dense_trotter_pairing, m)?)?;
    m.add_function(wrap_pyfunction!(norm0, m)?)?;
    m.add_function(wrap_pyfunction!(build_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
