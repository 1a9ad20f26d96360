//! The norm `||z||_0 = ||P_y z|| + ||(I - P_y) z||`, sampled audits of
//! `||e^{tA}||_kind <= e^{lambda t}`, lower bounds on any admissible
//! `lambda` extracted from a witness certificate, and the classical
//! renorming `|||z||| = sup_t e^{-omega t} ||e^{tA} z||` for contrast.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexfloat::Hex;
use crate::projections::{make_rank_one, RankOneProjection};
use crate::sampling::{self, LabRng};
use crate::serial::{CertificateDoc, GeneratorDoc, FORMAT_VERSION, REPORT_FORMAT};
use crate::spaces::scalar;
use crate::spaces::{CVec, Generator, NormIndex};
use crate::trotter;
use crate::witness::WitnessCertificate;

/// Slack allowed on the proved equivalence constants.
pub const EQUIVALENCE_SLACK: f64 = 1e-10;

/// Slack allowed on `||P z||_0 <= ||z||_0`.
pub const CONTRACTIVITY_SLACK: f64 = 1e-12;

/// Horizon numerator: `T = HORIZON_SCALE / (omega - mu)`.
pub const HORIZON_SCALE: f64 = 50.0;

pub fn norm0(p: &RankOneProjection, z: &CVec) -> Result<f64> {
    Ok(p.project(z)?.norm() + p.complement_apply(z)?.norm())
}

/// Extremes of `||z||_0 / ||z||` over a random sample, next to the proved
/// constants `1` and `2 ||P|| + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equivalence {
    pub c_low: f64,
    pub c_high: f64,
    pub observed_low: f64,
    pub observed_high: f64,
    pub samples: usize,
}

impl Equivalence {
    pub fn holds(&self) -> bool {
        self.observed_low >= self.c_low - EQUIVALENCE_SLACK
            && self.observed_high <= self.c_high + EQUIVALENCE_SLACK
    }
}

fn samples_for(p: &RankOneProjection, rng: &mut LabRng, count: usize) -> Vec<CVec> {
    (0..count)
        .map(|_| sampling::random_vector(rng, p.x().dim(), p.x().p()))
        .collect()
}

pub fn equivalence_audit(
    p: &RankOneProjection,
    samples: usize,
    rng: &mut LabRng,
) -> Result<Equivalence> {
    if samples == 0 {
        return Err(Error::Precondition(
            "at least one sample is required".into(),
        ));
    }
    let zs = samples_for(p, rng, samples);
    let ratios: Vec<f64> = zs
        .par_iter()
        .map(|z| Ok(norm0(p, z)? / z.norm()))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| {
        (lo.min(r), hi.max(r))
    });
    Ok(Equivalence {
        c_low: 1.0,
        c_high: 2.0 * p.norm() + 1.0,
        observed_low: lo,
        observed_high: hi,
        samples,
    })
}

/// `||P z||_0 <= ||z||_0` on random samples.
pub fn projection_contractivity_check(
    p: &RankOneProjection,
    samples: usize,
    rng: &mut LabRng,
) -> Result<bool> {
    let zs = samples_for(p, rng, samples);
    let ok = zs
        .par_iter()
        .map(|z| {
            let pz = p.project(z)?;
            Ok(norm0(p, &pz)? <= norm0(p, z)? + CONTRACTIVITY_SLACK * z.norm())
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(ok.into_iter().all(|b| b))
}

/// `lambda_k = ln(|value_k(y)| / (||phi|| ||y||))`: any `lambda` with
/// `||e^{tA}||_0 <= e^{lambda t}` on `[0, 1]` is at least this large.
pub fn lambda_lower_bounds(cert: &WitnessCertificate) -> Result<Vec<(usize, f64)>> {
    cert.verify()?;
    let scale = (cert.phi.dual_norm() * cert.y.norm()).ln();
    Ok(cert
        .final_values
        .iter()
        .map(|f| (f.k, f.log_value.re - scale))
        .collect())
}

/// `ln(||(e^{A/n} P_y)^n y||_0 / ||y||_0)` for each certificate stage.
///
/// For rank-one `P_y` the product is `c^{n-1} e^{A/n} y`, so the ratio
/// is computed as `(n-1) ln|c| + ln ||e^{A/n} y||_0 - ln ||y||_0` without
/// forming the product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathReplay {
    pub k: usize,
    #[serde(with = "crate::hexfloat::u128_str")]
    pub n: u128,
    pub ln_ratio: Hex,
    pub lambda_k: Hex,
}

pub fn replay_paths(cert: &WitnessCertificate) -> Result<Vec<PathReplay>> {
    let lambdas = lambda_lower_bounds(cert)?;
    let p = make_rank_one(&cert.y, &cert.phi)?;
    let y0 = norm0(&p, &cert.y)?;
    cert.stages
        .iter()
        .zip(lambdas)
        .map(|(s, (k, lambda_k))| {
            let h = 1.0 / s.n as f64;
            let cm1 = trotter::c_minus_one(&cert.generator, &cert.phi, &cert.y, 1.0, s.n)?;
            let step = cert.generator.semigroup_apply(h, &cert.y)?;
            let ln_c = scalar::ln_1p(cm1).re;
            let ln_ratio = (s.n as f64 - 1.0) * ln_c + norm0(&p, &step)?.ln() - y0.ln();
            Ok(PathReplay {
                k,
                n: s.n,
                ln_ratio: Hex(ln_ratio),
                lambda_k: Hex(lambda_k),
            })
        })
        .collect()
}

/// Time grid for the classical renorming: `t_j = j h`, `j = 0..=steps`.
///
/// Uniform so that shifting by a grid time maps the grid into itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub step: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn horizon(&self) -> f64 {
        self.step * self.steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        self.step * j as f64
    }
}

fn check_omega(a: &Generator, omega: f64, p: NormIndex) -> Result<f64> {
    let mu = a.growth_bound(p);
    if !(omega > mu) {
        return Err(Error::SpectralBoundViolated { omega, bound: mu });
    }
    Ok(mu)
}

/// Grid with horizon `50 / (omega - mu)` split into `steps` intervals.
pub fn classical_grid(a: &Generator, omega: f64, steps: usize, p: NormIndex) -> Result<TimeGrid> {
    let mu = check_omega(a, omega, p)?;
    if steps == 0 {
        return Err(Error::Precondition("grid needs at least one step".into()));
    }
    Ok(TimeGrid {
        step: HORIZON_SCALE / (omega - mu) / steps as f64,
        steps,
    })
}

/// Grid sup and an upper bracket for the sup over all `t >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalValue {
    pub value: f64,
    pub upper: f64,
    pub argmax: f64,
}

/// `sup_j e^{-omega t_j} ||e^{t_j A} z||`; the orbit is advanced by
/// repeated application of `e^{hA}`.
pub fn classical_renorm_value(
    a: &Generator,
    omega: f64,
    z: &CVec,
    grid: &TimeGrid,
) -> Result<ClassicalValue> {
    let mu = check_omega(a, omega, z.p())?;
    let e = a.semigroup_matrix(grid.step)?;
    let mut w = z.clone();
    let (mut best, mut arg) = (z.norm(), 0.0);
    for j in 1..=grid.steps {
        w = CVec::new(crate::spaces::expm::matvec(&e, w.coords()), z.p())?;
        let g = (-omega * grid.time(j)).exp() * w.norm();
        if g > best {
            best = g;
            arg = grid.time(j);
        }
    }
    // between grid points and past the horizon ||e^{sA}|| <= e^{mu s}
    // with mu < omega, so no value there exceeds the last grid point
    let upper = best * ((mu - omega).max(0.0) * grid.step).exp();
    Ok(ClassicalValue {
        value: best,
        upper,
        argmax: arg,
    })
}

#[derive(Debug, Clone)]
pub enum NormKind {
    Base,
    Norm0(RankOneProjection),
    Classical { omega: f64, grid: TimeGrid },
}

impl NormKind {
    pub fn eval(&self, a: &Generator, z: &CVec) -> Result<f64> {
        match self {
            NormKind::Base => Ok(z.norm()),
            NormKind::Norm0(p) => norm0(p, z),
            NormKind::Classical { omega, grid } => {
                Ok(classical_renorm_value(a, *omega, z, grid)?.value)
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NormKind::Base => "base",
            NormKind::Norm0(_) => "norm0",
            NormKind::Classical { .. } => "classical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t_index: usize,
    pub z_index: usize,
    pub t: Hex,
    /// `||e^{tA} z|| / (e^{lambda t} ||z||)` in the audited norm
    pub ratio: Hex,
}

/// Sampled pairs `(t, z)` with `||e^{tA} z|| > e^{lambda t} ||z|| + tol`.
/// An empty list only means that no violation was found at this sampling.
pub fn quasi_contractivity_audit(
    a: &Generator,
    kind: &NormKind,
    lambda: f64,
    t_samples: &[f64],
    z_samples: &[CVec],
    tolerance: f64,
) -> Result<Vec<Violation>> {
    let pairs: Vec<(usize, usize)> = (0..t_samples.len())
        .flat_map(|i| (0..z_samples.len()).map(move |j| (i, j)))
        .collect();
    let found = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (t, z) = (t_samples[i], &z_samples[j]);
            let lhs = kind.eval(a, &a.semigroup_apply(t, z)?)?;
            let rhs = (lambda * t).exp() * kind.eval(a, z)?;
            Ok((lhs > rhs + tolerance).then(|| Violation {
                t_index: i,
                z_index: j,
                t: Hex(t),
                ratio: Hex(lhs / rhs),
            }))
        })
        .collect::<Result<Vec<Option<Violation>>>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// Certificate stages whose replayed path already exceeds `e^{lambda}`
/// over unit time in `||.||_0`.
pub fn path_violations(replays: &[PathReplay], lambda: f64) -> Vec<PathReplay> {
    replays
        .iter()
        .filter(|r| r.ln_ratio.0 > lambda)
        .copied()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub k: usize,
    pub lambda_k: Hex,
}

/// Smallest stage whose lower bound exceeds a given `lambda*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exceedance {
    pub lambda_star: Hex,
    pub first_k: Option<usize>,
    pub path_violations: usize,
}

/// Certificate-derived part of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessAudit {
    pub c_low: Hex,
    pub c_high: Hex,
    pub observed_low: Hex,
    pub observed_high: Hex,
    pub projection_contractive: bool,
    pub samples: usize,
    pub seed: u64,
    pub lambda_lower_bounds: Vec<LambdaRow>,
    pub path_replays: Vec<PathReplay>,
    pub exceedances: Vec<Exceedance>,
    pub certificate: CertificateDoc,
}

/// Classical renorming on the grid, with everything needed to recompute it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalRow {
    pub generator: GeneratorDoc,
    pub p: NormIndex,
    pub omega: Hex,
    pub growth_bound: Hex,
    pub horizon: Hex,
    pub steps: usize,
    pub samples: usize,
    pub seed: u64,
    /// shift inequality failures over every grid-aligned `s`
    pub shift_violations: usize,
    /// `quasi_contractivity_audit` failures at `lambda = omega`, on a few
    /// grid times with `e^{sA} z` computed directly
    pub audit_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormReport {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessAudit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalRow>,
}

pub fn witness_audit(
    cert: &WitnessCertificate,
    samples: usize,
    lambda_stars: &[f64],
    seed: u64,
) -> Result<WitnessAudit> {
    let lambdas = lambda_lower_bounds(cert)?;
    let p = make_rank_one(&cert.y, &cert.phi)?;
    let mut rng = sampling::rng(seed);
    let eq = equivalence_audit(&p, samples, &mut rng)?;
    let contractive = projection_contractivity_check(&p, samples, &mut rng)?;
    let replays = replay_paths(cert)?;
    let exceedances = lambda_stars
        .iter()
        .map(|&ls| Exceedance {
            lambda_star: Hex(ls),
            first_k: lambdas.iter().find(|(_, l)| *l > ls).map(|(k, _)| *k),
            path_violations: path_violations(&replays, ls).len(),
        })
        .collect();
    Ok(WitnessAudit {
        c_low: Hex(eq.c_low),
        c_high: Hex(eq.c_high),
        observed_low: Hex(eq.observed_low),
        observed_high: Hex(eq.observed_high),
        projection_contractive: contractive,
        samples,
        seed,
        lambda_lower_bounds: lambdas
            .into_iter()
            .map(|(k, l)| LambdaRow {
                k,
                lambda_k: Hex(l),
            })
            .collect(),
        path_replays: replays,
        exceedances,
        certificate: CertificateDoc::from(cert),
    })
}

/// Shift inequality and the sampled audit at `lambda = omega` on random `z`.
pub fn classical_contrast(
    a: &Generator,
    omega: f64,
    steps: usize,
    samples: usize,
    seed: u64,
    p: NormIndex,
) -> Result<ClassicalRow> {
    let grid = classical_grid(a, omega, steps, p)?;
    let mut rng = sampling::rng(seed);
    let zs: Vec<CVec> = (0..samples)
        .map(|_| sampling::random_vector(&mut rng, a.dim(), p))
        .collect();
    let violations = shift_violations(a, omega, &grid, &zs)?;
    let shifts = grid_shifts(steps);
    let ts: Vec<f64> = shifts.iter().map(|&m| grid.time(m)).collect();
    let kind = NormKind::Classical { omega, grid };
    let audit = quasi_contractivity_audit(a, &kind, omega, &ts, &zs, 1e-9)?;
    Ok(ClassicalRow {
        generator: a.into(),
        p,
        omega: Hex(omega),
        growth_bound: Hex(a.growth_bound(p)),
        horizon: Hex(grid.horizon()),
        steps,
        samples,
        seed,
        shift_violations: violations.len(),
        audit_violations: audit.len(),
    })
}

fn grid_shifts(steps: usize) -> Vec<usize> {
    let mut s: Vec<usize> = [1usize, 2, 5, 10, steps / 4, steps / 2, steps]
        .into_iter()
        .filter(|&m| m >= 1 && m <= steps)
        .collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// Pairs `(m, sample index)` with
/// `|||e^{t_m A} z||| > e^{omega t_m} |||z||| + 1e-9`, over every grid shift
/// `m = 1..=steps`. One orbit `w_j = e^{t_j A} z`, `j <= 2 steps`, serves all
/// shifts since `e^{t_j A} e^{t_m A} z = w_{j+m}`.
pub fn shift_violations(
    a: &Generator,
    omega: f64,
    grid: &TimeGrid,
    zs: &[CVec],
) -> Result<Vec<(usize, usize)>> {
    check_omega(a, omega, grid_p(zs))?;
    let e = a.semigroup_matrix(grid.step)?;
    let steps = grid.steps;
    let found = zs
        .par_iter()
        .enumerate()
        .map(|(i, z)| {
            let mut norms = Vec::with_capacity(2 * steps + 1);
            let mut w = z.clone();
            norms.push(w.norm());
            for _ in 0..2 * steps {
                w = CVec::new(crate::spaces::expm::matvec(&e, w.coords()), z.p())?;
                norms.push(w.norm());
            }
            let weight = |j: usize| (-omega * grid.time(j)).exp();
            let base = (0..=steps)
                .map(|j| weight(j) * norms[j])
                .fold(0.0f64, f64::max);
            let mut bad = Vec::new();
            for m in 1..=steps {
                let moved = (0..=steps)
                    .map(|j| weight(j) * norms[j + m])
                    .fold(0.0f64, f64::max);
                if moved > (omega * grid.time(m)).exp() * base + 1e-9 {
                    bad.push((m, i));
                }
            }
            Ok(bad)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().flatten().collect())
}

fn grid_p(zs: &[CVec]) -> NormIndex {
    zs.first().map(CVec::p).unwrap_or_default()
}

fn invalid(invariant: &str, detail: String) -> Error {
    Error::InvalidCertificate {
        invariant: invariant.into(),
        detail,
    }
}

impl WitnessAudit {
    /// Re-checks the embedded certificate and recomputes every number.
    pub fn verify(&self) -> Result<()> {
        let cert = self.certificate.to_certificate()?;
        let stars: Vec<f64> = self.exceedances.iter().map(|e| e.lambda_star.0).collect();
        let fresh = witness_audit(&cert, self.samples, &stars, self.seed)?;
        if fresh.lambda_lower_bounds != self.lambda_lower_bounds {
            return Err(invalid(
                "lambda_lower_bounds",
                "stored bounds do not replay".into(),
            ));
        }
        if self
            .lambda_lower_bounds
            .windows(2)
            .any(|w| w[1].lambda_k.0 <= w[0].lambda_k.0)
        {
            return Err(invalid(
                "lambda_monotone",
                "lambda_k is not strictly increasing".into(),
            ));
        }
        if (fresh.c_low, fresh.c_high) != (self.c_low, self.c_high) {
            return Err(invalid(
                "equivalence",
                "constants differ from 1 and 2||P_y|| + 1".into(),
            ));
        }
        if (fresh.observed_low, fresh.observed_high) != (self.observed_low, self.observed_high)
            || self.observed_low.0 < self.c_low.0 - EQUIVALENCE_SLACK
            || self.observed_high.0 > self.c_high.0 + EQUIVALENCE_SLACK
        {
            return Err(invalid(
                "equivalence",
                "observed ratios do not replay or leave the proved interval".into(),
            ));
        }
        if !(self.projection_contractive && fresh.projection_contractive) {
            return Err(invalid(
                "projection_contractive",
                "P_y expanded some sample in ||.||_0".into(),
            ));
        }
        if fresh.path_replays != self.path_replays {
            return Err(invalid(
                "path_replay",
                "stored path ratios do not replay".into(),
            ));
        }
        if let Some(r) = self
            .path_replays
            .iter()
            .find(|r| r.lambda_k.0 > r.ln_ratio.0 + 1e-9 * (1.0 + r.ln_ratio.0.abs()))
        {
            return Err(invalid(
                "lower_bound_soundness",
                format!("stage {}: lambda_k exceeds the replayed ratio", r.k),
            ));
        }
        if fresh.exceedances != self.exceedances {
            return Err(invalid(
                "exceedances",
                "stored exceedances do not replay".into(),
            ));
        }
        Ok(())
    }
}

impl ClassicalRow {
    pub fn verify(&self) -> Result<()> {
        let a = self.generator.to_generator()?;
        let fresh = classical_contrast(
            &a,
            self.omega.0,
            self.steps,
            self.samples,
            self.seed,
            self.p,
        )?;
        if &fresh != self {
            return Err(invalid(
                "classical_replay",
                "classical contrast does not replay".into(),
            ));
        }
        if self.shift_violations != 0 || self.audit_violations != 0 {
            return Err(invalid(
                "classical_shift",
                format!(
                    "{} shift and {} audit violations",
                    self.shift_violations, self.audit_violations
                ),
            ));
        }
        Ok(())
    }
}

impl RenormReport {
    pub fn new(witness: Option<WitnessAudit>, classical: Option<ClassicalRow>) -> Self {
        RenormReport {
            format: REPORT_FORMAT.into(),
            version: FORMAT_VERSION,
            witness,
            classical,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("report: {e}")))
    }

    pub fn verify(&self) -> Result<()> {
        if self.format != REPORT_FORMAT || self.version != FORMAT_VERSION {
            return Err(invalid(
                "structure",
                format!("unsupported document {} v{}", self.format, self.version),
            ));
        }
        if self.witness.is_none() && self.classical.is_none() {
            return Err(invalid("structure", "report has no sections".into()));
        }
        if let Some(w) = &self.witness {
            w.verify()?;
        }
        if let Some(c) = &self.classical {
            c.verify()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{Functional, GrowthLaw};
    use crate::witness::{build_certificate, default_z, WitnessOptions};
    use num_complex::Complex64;

    const P2: NormIndex = NormIndex::Two;

    fn v(re: &[f64]) -> CVec {
        CVec::from_real(re, P2).unwrap()
    }

    fn f(re: &[f64]) -> Functional {
        Functional::from_real(re, P2).unwrap()
    }

    #[test]
    fn norm0_examples() {
        let p = make_rank_one(&v(&[1.0, 1.0]), &f(&[0.5, 0.5])).unwrap();
        let y = p.x().clone();
        assert!((norm0(&p, &y).unwrap() - y.norm()).abs() < 1e-15);
        let k = v(&[1.0, -1.0]);
        assert!((norm0(&p, &k).unwrap() - k.norm()).abs() < 1e-15);
        let z = v(&[0.3, -2.0]);
        assert!(norm0(&p, &z).unwrap() >= z.norm());
    }

    #[test]
    fn equivalence_examples() {
        let mut rng = sampling::rng(1);
        let p = make_rank_one(&v(&[1.0, 0.0]), &f(&[1.0, 0.0])).unwrap();
        let eq = equivalence_audit(&p, 2000, &mut rng).unwrap();
        assert_eq!(eq.c_high, 3.0);
        assert!(eq.holds());

        // ||P|| = ||phi|| ||x|| = 10 with phi(x) = 1
        let p = make_rank_one(&v(&[1.0, 0.0]), &f(&[1.0, 99f64.sqrt()])).unwrap();
        assert!((p.norm() - 10.0).abs() < 1e-12);
        let eq = equivalence_audit(&p, 2000, &mut rng).unwrap();
        assert!((eq.c_high - 21.0).abs() < 1e-11);
        assert!(eq.holds());
        assert!(projection_contractivity_check(&p, 2000, &mut rng).unwrap());

        let y = p.x().clone();
        assert_eq!(norm0(&p, &y).unwrap() / y.norm(), 1.0);
    }

    #[test]
    fn classical_examples() {
        let z = v(&[1.0, -0.5]);
        let zero = Generator::zero(2);
        let g = classical_grid(&zero, 1.0, 100, P2).unwrap();
        assert_eq!(
            classical_renorm_value(&zero, 1.0, &z, &g).unwrap().value,
            z.norm()
        );

        let decay = Generator::diagonal_real(&[-1.0]).unwrap();
        let g = classical_grid(&decay, 0.0, 100, P2).unwrap();
        let one = v(&[1.0]);
        assert_eq!(
            classical_renorm_value(&decay, 0.0, &one, &g).unwrap().value,
            1.0
        );

        let err = classical_grid(&decay, -2.0, 10, P2).unwrap_err();
        assert!(matches!(err, Error::SpectralBoundViolated { .. }));
    }

    #[test]
    fn classical_shift_inequality_on_grid() {
        let entries: Vec<Complex64> = (0..6)
            .map(|m| Complex64::new(-0.3 * m as f64, 1.0 + m as f64))
            .collect();
        let a = Generator::diagonal(entries).unwrap();
        let row = classical_contrast(&a, 0.5, 400, 50, 8, P2).unwrap();
        assert_eq!((row.shift_violations, row.audit_violations), (0, 0));
        row.verify().unwrap();
        assert!((row.horizon.0 - 100.0).abs() < 1e-12);
    }

    #[test]
    fn audit_examples() {
        let mut rng = sampling::rng(2);
        let zs: Vec<CVec> = (0..20)
            .map(|_| sampling::random_vector(&mut rng, 3, P2))
            .collect();
        let ts = [0.0, 0.1, 0.5, 1.0];
        let zero = Generator::zero(3);
        assert!(
            quasi_contractivity_audit(&zero, &NormKind::Base, 0.0, &ts, &zs, 1e-12)
                .unwrap()
                .is_empty()
        );

        let a = Generator::diagonal_real(&[0.0, -1.0, -2.0]).unwrap();
        let grid = classical_grid(&a, 0.5, 200, P2).unwrap();
        let kind = NormKind::Classical { omega: 0.5, grid };
        let grid_ts: Vec<f64> = [1, 3, 10].iter().map(|&j| grid.time(j)).collect();
        assert!(
            quasi_contractivity_audit(&a, &kind, 0.5, &grid_ts, &zs, 1e-9)
                .unwrap()
                .is_empty()
        );

        let grow = Generator::diagonal_real(&[1.0, 0.0, 0.0]).unwrap();
        let found =
            quasi_contractivity_audit(&grow, &NormKind::Base, 0.0, &ts, &zs, 1e-12).unwrap();
        assert!(!found.is_empty());
    }

    #[test]
    fn lambda_examples_from_certificate() {
        let d = 96;
        let a = Generator::from_law(
            GrowthLaw::DoubleExp {
                scale: 0.005,
                rate: 1.05,
            },
            d,
        )
        .unwrap();
        let phi = Functional::geometric(d, 1.0, 0.95, P2).unwrap();
        let cert = build_certificate(
            &a,
            &phi,
            &default_z(&phi).unwrap(),
            0.1,
            5,
            &WitnessOptions::default(),
        )
        .unwrap();
        let lambdas = lambda_lower_bounds(&cert).unwrap();
        assert!(lambdas.windows(2).all(|w| w[1].1 > w[0].1));
        let ny = (phi.dual_norm() * cert.y.norm()).ln();
        for &(k, l) in &lambdas {
            let floor = k as f64 - ny - (1.0 - 0.2 * (-(k as f64)).exp()).ln().abs();
            assert!(l >= floor - 1e-12, "k={k}");
        }
        let replays = replay_paths(&cert).unwrap();
        for r in &replays {
            assert!(r.lambda_k.0 <= r.ln_ratio.0 + 1e-9);
        }
        assert!(!path_violations(&replays, 2.0).is_empty());

        let audit = witness_audit(&cert, 500, &[1.0, 3.0], 3).unwrap();
        assert_eq!(audit.exceedances[1].first_k, Some(5));
        let report = RenormReport::new(Some(audit), None);
        report.verify().unwrap();
        let back = RenormReport::from_json(&report.to_json()).unwrap();
        assert_eq!(back, report);
        back.verify().unwrap();
    }
}
