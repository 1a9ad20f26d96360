//! Finite-stage divergence witness.
//!
//! Starting from a seed `x_0` on the slice `phi(x) = 1`, each stage adds a
//! small correction `g` along the direction where `phi(A .)` is largest,
//! so that `Re phi(A x_k) >= k`. Each stage also records the Trotter index `n_k`
//! at which `c_n^n` is within `eps` of `e^{phi(A x_k)}`, and a certified
//! radius `delta_k` inside which that closeness survives (within `2 eps`).
//! The last stage `y = x_K` then lies in every ball, so
//! `|phi((e^{A/n_k} P_y)^{n_k} y)| >= e^k - 2 eps` for all `k <= K`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampling;
use crate::spaces::scalar::{self, ONE};
use crate::spaces::{CVec, Functional, Generator};
use crate::trotter::{self, ScalarValue};

/// Largest doubling exponent tried by [`choose_n_k`].
pub const DEFAULT_J_MAX: u32 = 127;

/// Below this `|phi(Av)|` no rotation is attempted.
pub const ZERO_PAIRING_THRESHOLD: f64 = 1e-14;

/// Radii below this are treated as lost to double precision.
pub const MIN_RADIUS: f64 = 1e-300;

/// Slice tolerance for stages and `y`.
pub const SLICE_TOLERANCE: f64 = 1e-10;

/// Random boundary points used to spot-check each certified radius.
pub const DEFAULT_VALIDATION_SAMPLES: usize = 100;

const BISECTION_STEPS: usize = 200;
const TARGET_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessOptions {
    pub j_max: u32,
    pub validation_samples: usize,
    pub seed: u64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        WitnessOptions {
            j_max: DEFAULT_J_MAX,
            validation_samples: DEFAULT_VALIDATION_SAMPLES,
            seed: 0,
        }
    }
}

/// One stage of the construction.
///
/// `gamma` is the radius bound the stage was built under: `1/(2||phi||)`
/// for the seed, `gamma_{k-1}` for later stages.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessStage {
    pub k: usize,
    pub x: CVec,
    pub re_pairing: f64,
    pub n: u128,
    pub delta: f64,
    pub gamma: f64,
    pub log_value: Complex64,
    pub value: Complex64,
}

/// `value_k(y) = phi((e^{A/n_k} P_y)^{n_k} y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalValue {
    pub k: usize,
    pub n: u128,
    pub log_value: Complex64,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessCertificate {
    pub generator: Generator,
    pub phi: Functional,
    pub z: CVec,
    pub epsilon: f64,
    pub k_target: usize,
    pub stages: Vec<WitnessStage>,
    pub y: CVec,
    pub final_values: Vec<FinalValue>,
}

/// A failed build, with whatever stages were completed.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildFailure {
    pub error: Error,
    pub partial: Option<WitnessCertificate>,
}

fn adjoint_pairing(psi: &Functional, v: &CVec) -> Result<Complex64> {
    psi.pairing(v)
}

/// `v = radius * e_m` for the smallest `m` with `radius |a_m phi_m| >= target`.
///
/// Dense generators have no basis preference; there the unit vector
/// attaining `||phi o A||` is used instead.
pub fn find_direction(a: &Generator, phi: &Functional, target: f64, radius: f64) -> Result<CVec> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Precondition(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if !(target >= 0.0) {
        return Err(Error::Precondition(format!(
            "target must be nonnegative, got {target}"
        )));
    }
    let psi = a.adjoint_functional(phi)?;
    let insufficient = |best: f64| Error::TruncationInsufficient {
        needed_target: target,
        best_available: best,
        radius,
        needed_coefficient: target / radius,
    };
    match a {
        Generator::Diagonal { .. } => {
            let coeffs: Vec<f64> = psi.coords().iter().map(|c| c.norm()).collect();
            match coeffs.iter().position(|&c| c > 0.0 && radius * c >= target) {
                Some(m) => {
                    Ok(CVec::basis(phi.dim(), m + 1, phi.p()).scaled(Complex64::new(radius, 0.0)))
                }
                None => Err(insufficient(
                    radius * coeffs.iter().fold(0.0f64, |m, &c| m.max(c)),
                )),
            }
        }
        Generator::Dense { .. } => {
            let best = radius * psi.dual_norm();
            match psi.norming_vector() {
                Some(u) if best >= target => Ok(u.scaled(Complex64::new(radius, 0.0))),
                _ => Err(insufficient(best)),
            }
        }
    }
}

/// `e^{-i arg phi(Av)} v`, making `phi(Av')` nonnegative real.
pub fn rotate_nonneg(v: &CVec, a: &Generator, phi: &Functional) -> Result<CVec> {
    let s = phi.pairing(&a.apply(v)?)?;
    if s.norm() < ZERO_PAIRING_THRESHOLD {
        return Err(Error::ZeroPairing { value: s.norm() });
    }
    Ok(v.scaled(Complex64::from_polar(1.0, -s.arg())))
}

/// `z / phi(z)` for the default `z = e_1 / phi_1`.
pub fn default_z(phi: &Functional) -> Result<CVec> {
    let f1 = phi.coords()[0];
    if f1.norm() < 1e-12 {
        return Err(Error::DegeneratePair { pairing: f1.norm() });
    }
    Ok(CVec::basis(phi.dim(), 1, phi.p()).scaled(ONE / f1))
}

fn normalize_on_slice(v: &CVec, phi: &Functional) -> Result<(CVec, Complex64)> {
    let s = phi.pairing(v)?;
    if s.norm() < 1e-12 {
        return Err(Error::DegeneratePair { pairing: s.norm() });
    }
    Ok((v.scaled(ONE / s), s))
}

/// `(x + g) / phi(x + g)` for `x` on the slice, written as
/// `x + (g - phi(g) x) / (1 + phi(g))` so that a tiny `g` moves `x` by
/// about `||g||` instead of by the rounding of a full renormalization.
fn shifted_on_slice(x: &CVec, g: &CVec, phi: &Functional) -> Result<CVec> {
    let pg = phi.pairing(g)?;
    let denom = ONE + pg;
    if denom.norm() < 0.5 {
        return Err(Error::Precondition(format!(
            "|1 + phi(g)| = {} is below 1/2",
            denom.norm()
        )));
    }
    let corr = g.axpy(-pg, x)?.scaled(ONE / denom);
    x.add(&corr)
}

/// `x_0 = (z + v') / phi(z + v')` with `|phi(Av')| >= 4 |phi(Az)|` and
/// `||v'|| <= 1/(2||phi||)`, giving `Re phi(A x_0) >= 0`.
pub fn seed_x0(a: &Generator, phi: &Functional, z: &CVec) -> Result<CVec> {
    let s = phi.pairing(z)?;
    if (s - ONE).norm() > SLICE_TOLERANCE {
        return Err(Error::Precondition(format!("phi(z) = {s} is not 1")));
    }
    let az = phi.pairing(&a.apply(z)?)?;
    let radius = 0.5 / phi.dual_norm();
    let v = find_direction(a, phi, 4.0 * az.norm(), radius)?;
    let v = rotate_nonneg(&v, a, phi)?;
    let (x0, scale) = normalize_on_slice(&z.add(&v)?, phi)?;
    if scale.norm() < 0.5 {
        return Err(Error::Precondition(format!(
            "|1 + phi(v')| = {} is below 1/2",
            scale.norm()
        )));
    }
    let re = phi.pairing(&a.apply(&x0)?)?.re;
    if re < 0.0 {
        return Err(Error::Precondition(format!("seed has Re phi(A x0) = {re}")));
    }
    Ok(x0)
}

/// Smallest `n = 2^j`, `j <= j_max`, with `|c_n^n - e^{phi(Ax)}| < eps`.
pub fn choose_n_k(
    a: &Generator,
    phi: &Functional,
    x: &CVec,
    eps: f64,
    j_max: u32,
) -> Result<(u128, ScalarValue)> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let j_max = j_max.min(127);
    let target = phi.pairing(&a.apply(x)?)?;
    let scan: Vec<Result<(u128, ScalarValue, f64)>> = (0..=j_max)
        .into_par_iter()
        .map(|j| {
            let n = 1u128 << j;
            let sv = trotter::scalar_trotter_value(a, phi, x, 1.0, n)?;
            Ok((n, sv, scalar::exp_distance(sv.log_value, target)))
        })
        .collect();
    let mut best = (f64::INFINITY, 1u128);
    for entry in scan {
        // small n can overflow where large n does not
        let (n, sv, err) = match entry {
            Ok(e) => e,
            Err(Error::Overflow { .. }) => continue,
            Err(e) => return Err(e),
        };
        if err < eps {
            return Ok((n, sv));
        }
        if err < best.0 {
            best = (err, n);
        }
    }
    Err(Error::ScheduleExhausted {
        j_max,
        best_error: best.0,
        best_n: best.1,
    })
}

/// Worst-case `ln` of `n (|c| + L r)^{n-1} L r`, the bound on
/// `|phi(e^{A/n} h)^n - c^n|` over `||h - x|| <= r` on the slice.
fn log_deviation_bound(n: u128, c_minus_one: Complex64, lip: f64, r: f64) -> f64 {
    let nf = n as f64;
    let c_abs = (ONE + c_minus_one).norm();
    let ln_c = scalar::ln_1p(c_minus_one).re;
    let ln_base = ln_c + (lip * r / c_abs).ln_1p();
    nf.ln() + (nf - 1.0) * ln_base + (lip * r).ln()
}

/// Certified radius around `x` on the slice within which
/// `|phi(e^{A/n} h)^n - c_n^n| <= eps`.
///
/// On the slice `h - x` lies in `ker phi`, so the affine map
/// `h -> phi(e^{A/n} h)` has slope `phi o (e^{A/n} - I)`; its dual norm
/// `L` is the Lipschitz constant used here.
pub fn stability_radius(
    a: &Generator,
    phi: &Functional,
    x: &CVec,
    n: u128,
    eps: f64,
    cap: f64,
    stage: usize,
) -> Result<f64> {
    let cm1 = trotter::c_minus_one(a, phi, x, 1.0, n)?;
    let lip = a.increment_functional(phi, 1.0 / n as f64)?.dual_norm();
    if lip == 0.0 {
        return Ok(cap.min(1.0));
    }
    let nf = n as f64;
    let c_abs = (ONE + cm1).norm();
    let bar = 1f64.min(0.5 / lip).min(c_abs / (nf * lip));
    let ln_grow = (nf - 1.0) * (scalar::ln_1p(cm1).re + (lip * bar / c_abs).ln_1p());
    let mut delta = (eps.ln() - nf.ln() - ln_grow - lip.ln())
        .exp()
        .min(bar)
        .min(cap);
    let ln_eps = eps.ln();
    while delta >= MIN_RADIUS && log_deviation_bound(n, cm1, lip, delta) > ln_eps {
        delta *= 0.5;
    }
    if !(delta >= MIN_RADIUS) {
        return Err(Error::UnderflowRadius {
            stage,
            radius: delta,
        });
    }
    Ok(delta)
}

/// Largest `|phi(e^{A/n} h)^n - e^{phi(Ax)}|` over random `h` on the slice
/// with `||h - x|| = delta`.
pub fn sampled_boundary_deviation(
    a: &Generator,
    phi: &Functional,
    x: &CVec,
    n: u128,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let target = phi.pairing(&a.apply(x)?)?;
    let mut rng = sampling::rng(seed);
    let mut hs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let r = sampling::random_vector(&mut rng, x.dim(), x.p());
        let u = r.axpy(-phi.pairing(&r)?, x)?;
        let nu = u.norm();
        if nu == 0.0 {
            continue;
        }
        hs.push(x.axpy(Complex64::new(delta / nu, 0.0), &u)?);
    }
    let devs: Vec<Result<f64>> = hs
        .par_iter()
        .map(|h| {
            // re-project onto the slice to absorb the rounding in phi(u)
            let (h, _) = normalize_on_slice(h, phi)?;
            let sv = trotter::scalar_trotter_value(a, phi, &h, 1.0, n)?;
            Ok(scalar::exp_distance(sv.log_value, target))
        })
        .collect();
    devs.into_iter().try_fold(0.0, |m, d| Ok(f64::max(m, d?)))
}

fn materialize(sv: &ScalarValue) -> Complex64 {
    sv.value.unwrap_or_else(|| sv.log_value.exp())
}

fn make_stage(
    a: &Generator,
    phi: &Functional,
    x: CVec,
    k: usize,
    gamma: f64,
    eps: f64,
    cap: f64,
    opts: &WitnessOptions,
) -> Result<WitnessStage> {
    let re_pairing = a.adjoint_functional(phi)?.pairing(&x)?.re;
    let (n, sv) = choose_n_k(a, phi, &x, eps, opts.j_max)?;
    let delta = stability_radius(a, phi, &x, n, eps, cap, k)?;
    if opts.validation_samples > 0 {
        let seed = opts.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let dev = sampled_boundary_deviation(a, phi, &x, n, delta, opts.validation_samples, seed)?;
        if !(dev < 2.0 * eps) {
            return Err(Error::InvalidCertificate {
                invariant: "stability_radius".into(),
                detail: format!("stage {k}: sampled deviation {dev:e} at radius {delta:e}"),
            });
        }
    }
    Ok(WitnessStage {
        k,
        x,
        re_pairing,
        n,
        delta,
        gamma,
        log_value: sv.log_value,
        value: materialize(&sv),
    })
}

fn chained_delta(stages: &[WitnessStage]) -> f64 {
    let k = stages.len() - 1;
    stages
        .iter()
        .enumerate()
        .map(|(j, s)| s.delta / 2f64.powi((k + 1 - j) as i32))
        .fold(f64::INFINITY, f64::min)
}

/// Builds stage `k + 1` from stages `0..=k`.
pub fn extend(
    a: &Generator,
    phi: &Functional,
    stages: &[WitnessStage],
    eps: f64,
    opts: &WitnessOptions,
) -> Result<WitnessStage> {
    let last = stages
        .last()
        .ok_or_else(|| Error::Precondition("no stages to extend".into()))?;
    let k = last.k;
    let goal = (k + 1) as f64;
    let nphi = phi.dual_norm();
    let delta = chained_delta(stages);
    let gamma = (delta / (2.0 * (last.x.norm() * nphi + 1.0))).min(0.5 / nphi);
    let radius = 0.5 * gamma;
    let cap = 0.5 * stages[0].x.norm();

    let psi = a.adjoint_functional(phi)?;
    let w = adjoint_pairing(&psi, &last.x)?;
    let zeta = nphi * radius;
    let r = zeta / (1.0 - zeta);
    let target = ((goal + TARGET_MARGIN - w.re + r * w.norm()) / (1.0 - r)).max(0.0);

    let x_next = if w.re >= goal && target == 0.0 {
        last.x.clone()
    } else {
        let v = rotate_nonneg(&find_direction(a, phi, target, radius)?, a, phi)?;
        let candidate = |s: f64| -> Result<(CVec, f64)> {
            let x = shifted_on_slice(&last.x, &v.scaled(Complex64::new(s, 0.0)), phi)?;
            let re = adjoint_pairing(&psi, &x)?.re;
            Ok((x, re))
        };
        // aim slightly above the goal so that any evaluation order of
        // phi(Ax) still clears it
        let aim = goal + TARGET_MARGIN;
        let (mut best, re_full) = candidate(1.0)?;
        if re_full < aim {
            return Err(Error::Precondition(format!(
                "full correction reaches only Re phi(Ax) = {re_full} < {aim}"
            )));
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (x, re) = candidate(mid)?;
            if re >= aim {
                hi = mid;
                best = x;
            } else {
                lo = mid;
            }
        }
        best
    };

    let step = x_next.distance(&last.x)?;
    if !(step < delta) {
        return Err(Error::Precondition(format!(
            "step {step:e} is not below chained radius {delta:e}"
        )));
    }
    let stage = make_stage(a, phi, x_next, k + 1, gamma, eps, cap, opts)?;
    if stage.re_pairing < goal {
        return Err(Error::Precondition(format!(
            "stage {} has Re phi(Ax) = {}",
            k + 1,
            stage.re_pairing
        )));
    }
    Ok(stage)
}

/// Seed stage followed by `k_target` extensions; `y = x_K`.
pub fn build_certificate(
    a: &Generator,
    phi: &Functional,
    z: &CVec,
    eps: f64,
    k_target: usize,
    opts: &WitnessOptions,
) -> std::result::Result<WitnessCertificate, Box<BuildFailure>> {
    let fail = |error: Error, partial: Option<WitnessCertificate>| {
        Box::new(BuildFailure { error, partial })
    };
    if !(eps > 0.0 && eps < 0.5) {
        return Err(fail(
            Error::Precondition(format!("eps must lie in (0, 1/2), got {eps}")),
            None,
        ));
    }
    if let Err(e) = a
        .validate()
        .and(Error::check_dim(a.dim(), phi.dim()))
        .and(Error::check_dim(a.dim(), z.dim()))
    {
        return Err(fail(e, None));
    }
    let seed = seed_x0(a, phi, z).and_then(|x0| {
        let cap = 0.5 * x0.norm();
        make_stage(a, phi, x0, 0, 0.5 / phi.dual_norm(), eps, cap, opts)
    });
    let mut stages = match seed {
        Ok(s) => vec![s],
        Err(e) => return Err(fail(e, None)),
    };
    while stages.len() <= k_target {
        match extend(a, phi, &stages, eps, opts) {
            Ok(s) => stages.push(s),
            Err(e) => {
                let partial = assemble(a, phi, z, eps, k_target, stages).ok();
                return Err(fail(e, partial));
            }
        }
    }
    let cert = assemble(a, phi, z, eps, k_target, stages).map_err(|e| fail(e, None))?;
    match cert.verify() {
        Ok(()) => Ok(cert),
        Err(e) => Err(fail(e, Some(cert))),
    }
}

fn final_values(
    a: &Generator,
    phi: &Functional,
    y: &CVec,
    stages: &[WitnessStage],
) -> Result<Vec<FinalValue>> {
    stages
        .iter()
        .map(|s| {
            let sv = trotter::scalar_trotter_value(a, phi, y, 1.0, s.n)?;
            Ok(FinalValue {
                k: s.k,
                n: s.n,
                log_value: sv.log_value,
                value: materialize(&sv),
            })
        })
        .collect()
}

fn assemble(
    a: &Generator,
    phi: &Functional,
    z: &CVec,
    eps: f64,
    k_target: usize,
    stages: Vec<WitnessStage>,
) -> Result<WitnessCertificate> {
    let y = stages.last().expect("at least the seed stage").x.clone();
    let final_values = final_values(a, phi, &y, &stages)?;
    Ok(WitnessCertificate {
        generator: a.clone(),
        phi: phi.clone(),
        z: z.clone(),
        epsilon: eps,
        k_target,
        stages,
        y,
        final_values,
    })
}

fn invalid(invariant: &str, detail: String) -> Error {
    Error::InvalidCertificate {
        invariant: invariant.into(),
        detail,
    }
}

fn same(a: Complex64, b: Complex64) -> bool {
    a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
}

impl WitnessCertificate {
    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    /// `|value_k(y)|` for each stage.
    pub fn final_moduli(&self) -> Vec<f64> {
        self.final_values.iter().map(|f| f.value.norm()).collect()
    }

    /// Re-derives every invariant from the stored data; the first failure
    /// is returned with its name.
    pub fn verify(&self) -> Result<()> {
        let (a, phi) = (&self.generator, &self.phi);
        let eps = self.epsilon;
        let d = phi.dim();
        if self.stages.len() != self.k_target + 1 || self.final_values.len() != self.stages.len() {
            return Err(invalid(
                "structure",
                format!(
                    "K = {} needs {} stages and final values, found {} and {}",
                    self.k_target,
                    self.k_target + 1,
                    self.stages.len(),
                    self.final_values.len()
                ),
            ));
        }
        if a.dim() != d || self.y.dim() != d || self.z.dim() != d {
            return Err(invalid("structure", "dimension mismatch in header".into()));
        }
        if let Some(bad) = self
            .stages
            .iter()
            .enumerate()
            .find(|(i, s)| s.k != *i || s.x.dim() != d)
        {
            return Err(invalid(
                "structure",
                format!("stage {} is malformed", bad.0),
            ));
        }
        if let Err(e) = a.validate() {
            return Err(invalid("generator", e.to_string()));
        }
        if !(eps > 0.0 && eps < 0.5) {
            return Err(invalid("epsilon", format!("eps = {eps} outside (0, 1/2)")));
        }
        let psi = a
            .adjoint_functional(phi)
            .map_err(|e| invalid("generator", e.to_string()))?;
        let replay = |what: &str, e: Error| invalid(what, e.to_string());

        for s in &self.stages {
            let k = s.k;
            let p = phi.pairing(&s.x).map_err(|e| replay("slice", e))?;
            if (p - ONE).norm() > SLICE_TOLERANCE {
                return Err(invalid("slice", format!("stage {k}: phi(x_k) = {p}")));
            }
            let w = psi.pairing(&s.x).map_err(|e| replay("re_pairing", e))?;
            if w.re.to_bits() != s.re_pairing.to_bits() {
                return Err(invalid(
                    "re_pairing",
                    format!("stage {k}: stored {} recomputed {}", s.re_pairing, w.re),
                ));
            }
            if w.re < k as f64 {
                return Err(invalid(
                    "re_pairing",
                    format!("stage {k}: Re phi(A x_k) = {} < {k}", w.re),
                ));
            }
            if s.n == 0 || !(s.delta > 0.0) || !(s.gamma > 0.0) {
                return Err(invalid(
                    "radius",
                    format!("stage {k}: n, delta and gamma must be positive"),
                ));
            }
            let sv = trotter::scalar_trotter_value(a, phi, &s.x, 1.0, s.n)
                .map_err(|e| replay("blow_up", e))?;
            if !same(sv.log_value, s.log_value) || !same(materialize(&sv), s.value) {
                return Err(invalid(
                    "blow_up",
                    format!("stage {k}: stored value_k does not replay"),
                ));
            }
            let err = scalar::exp_distance(sv.log_value, w);
            if !(err < eps) {
                return Err(invalid(
                    "stage_acceptance",
                    format!("stage {k}: |value_k - e^(phi(Ax_k))| = {err:e}"),
                ));
            }
            if k >= 1 {
                let chain = chained_delta(&self.stages[..k]);
                let step =
                    s.x.distance(&self.stages[k - 1].x)
                        .map_err(|e| replay("step_chain", e))?;
                if !(step < chain) {
                    return Err(invalid(
                        "step_chain",
                        format!("stage {k}: step {step:e} >= {chain:e}"),
                    ));
                }
            }
        }

        let last = &self.stages[self.k_target].x;
        if self.y.coords() != last.coords() {
            return Err(invalid("structure", "y differs from x_K".into()));
        }
        let py = phi.pairing(&self.y).map_err(|e| replay("slice", e))?;
        if (py - ONE).norm() > SLICE_TOLERANCE {
            return Err(invalid("slice", format!("phi(y) = {py}")));
        }
        for s in &self.stages {
            let dist = self
                .y
                .distance(&s.x)
                .map_err(|e| replay("ball_membership", e))?;
            if !(dist <= s.delta) {
                return Err(invalid(
                    "ball_membership",
                    format!("stage {}: ||y - x_k|| = {dist:e} > {:e}", s.k, s.delta),
                ));
            }
        }
        for (s, f) in self.stages.iter().zip(&self.final_values) {
            if f.k != s.k || f.n != s.n {
                return Err(invalid(
                    "structure",
                    format!("final value {} does not match its stage", f.k),
                ));
            }
            let sv = trotter::scalar_trotter_value(a, phi, &self.y, 1.0, f.n)
                .map_err(|e| replay("blow_up", e))?;
            if !same(sv.log_value, f.log_value) || !same(materialize(&sv), f.value) {
                return Err(invalid(
                    "blow_up",
                    format!("stage {}: stored value_k(y) does not replay", f.k),
                ));
            }
            let bound = (f.k as f64).exp() - 2.0 * eps;
            if !(f.value.norm() >= bound) {
                return Err(invalid(
                    "blow_up",
                    format!("stage {}: |value_k(y)| = {} < {bound}", f.k, f.value.norm()),
                ));
            }
        }
        let pz = phi.pairing(&self.z).map_err(|e| replay("slice", e))?;
        if (pz - ONE).norm() > SLICE_TOLERANCE {
            return Err(invalid("slice", format!("phi(z) = {pz}")));
        }
        Ok(())
    }
}
