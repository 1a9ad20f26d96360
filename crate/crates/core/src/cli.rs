//! Command-line runner. Each subcommand reads one config, computes, and
//! writes all of its files at the end.

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{self, ExperimentConfig, SweepCommand};
use crate::error::Error;
use crate::renorm::{self, RenormReport};
use crate::serial::{self, CERTIFICATE_FORMAT, REPORT_FORMAT};
use crate::trotter::{self, TrotterRecord};
use crate::witness::{self, WitnessCertificate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_OVERFLOW: i32 = 3;
pub const EXIT_TRUNCATION: i32 = 4;
pub const EXIT_UNDERFLOW: i32 = 5;
pub const EXIT_INVALID: i32 = 6;

pub const THREADS_ENV: &str = "SEMIGROUP_LAB_THREADS";
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "semigroup-lab",
    version,
    about = "Trotter-projection products, divergence witnesses and renormings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// overrides the config seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// overrides the config tolerance (decimal or hex float)
    #[arg(long, value_parser = parse_float)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// c_n, n(c_n - 1) and c_n^n along a doubling schedule
    LimitCheck(Common),
    /// Build and verify a divergence witness certificate
    Witness(Common),
    /// Lower bounds on quasi-contractivity constants and the classical renorming
    RenormAudit {
        #[command(flatten)]
        common: Common,
        /// use this certificate instead of building one
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Re-check a certificate or report from disk
    Verify { file: PathBuf },
    /// Repeat a subcommand over the config's dimension or law-parameter grid
    Sweep(Common),
}

fn parse_float(s: &str) -> Result<f64, String> {
    config::parse_scalar(s).ok_or_else(|| format!("not a number: {s:?}"))
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Overflow { .. } | Error::ProductOverflow { .. } | Error::NonFinite { .. } => {
            EXIT_OVERFLOW
        }
        Error::TruncationInsufficient { .. } => EXIT_TRUNCATION,
        Error::UnderflowRadius { .. } => EXIT_UNDERFLOW,
        Error::InvalidCertificate { .. } => EXIT_INVALID,
        Error::ScheduleExhausted { .. } | Error::ZeroPairing { .. } => EXIT_TOLERANCE,
        _ => EXIT_CONFIG,
    }
}

/// Result of one subcommand: exit code, files to write, printed lines.
#[derive(Debug, Default)]
struct Run {
    code: i32,
    files: Vec<(String, String)>,
    lines: Vec<String>,
    headline: String,
}

impl Run {
    fn failed(e: &Error) -> Self {
        Run {
            code: exit_code(e),
            lines: vec![format!("error: {e}")],
            headline: e.to_string(),
            ..Run::default()
        }
    }
}

struct Csv {
    w: csv::Writer<Vec<u8>>,
    schema: String,
}

impl Csv {
    fn new(kind: &str, columns: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(columns).expect("in-memory write");
        Csv {
            w,
            schema: format!("# semigroup-lab {kind} schema v{CSV_SCHEMA_VERSION}\n"),
        }
    }

    fn row(&mut self, fields: Vec<String>) {
        self.w.write_record(fields).expect("in-memory write");
    }

    fn finish(self) -> String {
        let body = String::from_utf8(self.w.into_inner().expect("in-memory flush")).expect("utf8");
        self.schema + &body
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt<T: Display>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn stem(config: &Path) -> String {
    let name = config
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    for suffix in [".config.json", ".json"] {
        if let Some(s) = name.strip_suffix(suffix) {
            return s.to_string();
        }
    }
    name
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.tolerance {
        cfg.tolerance = crate::hexfloat::Hex(t);
    }
    Ok(cfg)
}

fn limit_check(cfg: &ExperimentConfig, stem: &str) -> Run {
    let r = match cfg.resolve() {
        Ok(r) => r,
        Err(e) => return Run::failed(&e),
    };
    let s = &cfg.schedule;
    if s.min_pow > s.max_pow || s.max_pow > 127 {
        return Run::failed(&Error::Config(format!(
            "schedule 2^{}..2^{} is empty or too long",
            s.min_pow, s.max_pow
        )));
    }
    let schedule = trotter::doubling_schedule(s.min_pow, s.max_pow);
    let t = s.t.0;
    let results: Vec<Result<TrotterRecord, Error>> = schedule
        .par_iter()
        .map(|&n| trotter::limit_check(&r.generator, &r.phi, &r.x, t, &[n]).map(|v| v[0]))
        .collect();
    let mut rows = Vec::new();
    let mut failure = None;
    for res in results {
        match res {
            Ok(rec) => rows.push(rec),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    let oracle = match (&r.oracle_projection, &failure, rows.last()) {
        (Some(p), None, Some(last)) => {
            let dist =
                trotter::dense_trotter_apply(&r.generator, p, &r.x, t, last.n).and_then(|w| {
                    let m = trotter::bounded_limit_oracle(&r.generator, p, t)?;
                    let target = crate::spaces::CVec::new(
                        crate::spaces::expm::matvec(&m, r.x.coords()),
                        r.x.p(),
                    )?;
                    w.distance(&target)
                });
            match dist {
                Ok(d) => Some(d),
                Err(e) => {
                    failure = Some(e);
                    None
                }
            }
        }
        _ => None,
    };
    let mut csv = Csv::new(
        "limit-check",
        &[
            "n",
            "re_c_n",
            "im_c_n",
            "re_deriv_n",
            "im_deriv_n",
            "re_value",
            "im_value",
            "re_log_value",
            "im_log_value",
            "err_vs_limit",
            "deriv_err",
            "path",
            "oracle_distance",
        ],
    );
    for (i, rec) in rows.iter().enumerate() {
        let last = i + 1 == rows.len();
        csv.row(vec![
            rec.n.to_string(),
            num(rec.c_n.re),
            num(rec.c_n.im),
            num(rec.deriv_n.re),
            num(rec.deriv_n.im),
            opt(rec.value.map(|v| num(v.re))),
            opt(rec.value.map(|v| num(v.im))),
            num(rec.log_value.re),
            num(rec.log_value.im),
            num(rec.err_vs_limit),
            num(rec.deriv_err),
            format!("{:?}", rec.path).to_lowercase(),
            opt(if last { oracle.map(num) } else { None }),
        ]);
    }
    let mut run = match &failure {
        Some(e) => Run::failed(e),
        None => Run::default(),
    };
    run.files.push((format!("{stem}.limit.csv"), csv.finish()));
    if failure.is_none() {
        let Some(last) = rows.last() else {
            return Run::failed(&Error::Config("empty schedule".into()));
        };
        let tol = cfg.tolerance.0;
        let ok = last.err_vs_limit <= tol && oracle.is_none_or(|d| d <= tol);
        run.code = if ok { EXIT_OK } else { EXIT_TOLERANCE };
        run.headline = format!("n = {} err_vs_limit = {:e}", last.n, last.err_vs_limit);
        run.lines.push(format!(
            "limit-check: {} rows, final n = {}",
            rows.len(),
            last.n
        ));
        run.lines.push(format!(
            "  err_vs_limit = {:e} (tolerance {:e})",
            last.err_vs_limit, tol
        ));
        if let Some(d) = oracle {
            run.lines.push(format!(
                "  oracle distance ||(e^(tA/n)P)^n x - e^(tPAP)Px|| = {d:e}"
            ));
        }
    } else {
        run.lines
            .push(format!("  partial CSV kept: {} rows", rows.len()));
    }
    run
}

fn witness_csv(cert: &WitnessCertificate, eps: f64) -> String {
    let mut csv = Csv::new(
        "witness",
        &[
            "k",
            "re_phi_ax",
            "n",
            "log2_n",
            "delta",
            "gamma",
            "abs_value_y",
            "floor",
        ],
    );
    for (s, f) in cert.stages.iter().zip(&cert.final_values) {
        csv.row(vec![
            s.k.to_string(),
            num(s.re_pairing),
            s.n.to_string(),
            s.n.trailing_zeros().to_string(),
            num(s.delta),
            num(s.gamma),
            num(f.value.norm()),
            num((s.k as f64).exp() - 2.0 * eps),
        ]);
    }
    csv.finish()
}

fn build(
    cfg: &ExperimentConfig,
) -> Result<WitnessCertificate, (Error, Option<WitnessCertificate>)> {
    let r = cfg.resolve().map_err(|e| (e, None))?;
    let z = match &cfg.vector {
        Some(_) => r.x.clone(),
        None => witness::default_z(&r.phi).map_err(|e| (e, None))?,
    };
    witness::build_certificate(
        &r.generator,
        &r.phi,
        &z,
        cfg.witness.epsilon.0,
        cfg.witness.k,
        &cfg.witness_options(),
    )
    .map_err(|f| (f.error, f.partial))
}

fn witness_run(cfg: &ExperimentConfig, stem: &str) -> Run {
    let eps = cfg.witness.epsilon.0;
    match build(cfg) {
        Ok(cert) => {
            let mut run = Run::default();
            let moduli = cert.final_moduli();
            run.lines.push(format!(
                "witness: d = {}, K = {}, eps = {}",
                cert.dim(),
                cert.k_target,
                eps
            ));
            run.lines
                .push("  k  Re phi(Ax_k)   log2 n_k  delta_k      |value_k(y)|  e^k - 2eps".into());
            for (s, m) in cert.stages.iter().zip(&moduli) {
                run.lines.push(format!(
                    "  {:<2} {:<14.6e} {:<9} {:<12.4e} {:<13.6} {:.6}",
                    s.k,
                    s.re_pairing,
                    s.n.trailing_zeros(),
                    s.delta,
                    m,
                    (s.k as f64).exp() - 2.0 * eps
                ));
            }
            run.headline = format!(
                "K = {} |value_K(y)| = {:.6}",
                cert.k_target,
                moduli.last().copied().unwrap_or(0.0)
            );
            run.files
                .push((format!("{stem}.witness.csv"), witness_csv(&cert, eps)));
            run.files
                .push((format!("{stem}.cert.json"), cert.to_json()));
            run
        }
        Err((e, partial)) => {
            let mut run = Run::failed(&e);
            if let Error::TruncationInsufficient {
                needed_coefficient, ..
            } = e
            {
                run.lines.push(format!(
                    "  minimal needed |a_m phi_m| = {needed_coefficient:e}"
                ));
                run.lines.push(format!(
                    "  hint: increase space.dim (now {}) until some coefficient reaches it, or use a faster-growing law",
                    cfg.dim()
                ));
            }
            if let Some(p) = partial {
                run.lines
                    .push(format!("  stages built before failure: {}", p.stages.len()));
                run.files
                    .push((format!("{stem}.witness.csv"), witness_csv(&p, eps)));
            }
            run
        }
    }
}

fn renorm_run(cfg: &ExperimentConfig, stem: &str, certificate: Option<&Path>) -> Run {
    let cert = match certificate {
        Some(path) => {
            let loaded = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
                .and_then(|t| WitnessCertificate::from_json(&t));
            match loaded {
                Ok(c) => Some(c),
                Err(e) => return Run::failed(&e),
            }
        }
        None if cfg.renorm.certificate => match build(cfg) {
            Ok(c) => Some(c),
            Err((e, _)) => return Run::failed(&e),
        },
        None => None,
    };
    let stars: Vec<f64> = cfg.renorm.lambdas.iter().map(|h| h.0).collect();
    let mut run = Run::default();
    let mut ok = true;
    let audit = match &cert {
        Some(c) => match renorm::witness_audit(c, cfg.renorm.samples, &stars, cfg.seed) {
            Ok(a) => Some(a),
            Err(e) => return Run::failed(&e),
        },
        None => None,
    };
    let classical = match cfg.renorm.omega {
        Some(omega) => {
            let a = match (&cert, cfg.resolve()) {
                (Some(c), _) => c.generator.clone(),
                (None, Ok(r)) => r.generator,
                (None, Err(e)) => return Run::failed(&e),
            };
            match renorm::classical_contrast(
                &a,
                omega.0,
                cfg.renorm.grid_steps,
                cfg.renorm.classical_samples,
                cfg.seed,
                cfg.space.p,
            ) {
                Ok(row) => Some(row),
                Err(e) => return Run::failed(&e),
            }
        }
        None => None,
    };
    if audit.is_none() && classical.is_none() {
        return Run::failed(&Error::Config(
            "nothing to audit: no certificate and no renorm.omega".into(),
        ));
    }
    if let Some(a) = &audit {
        let mut csv = Csv::new("renorm-lambda", &["k", "n", "lambda_k", "path_ln_ratio"]);
        for (l, r) in a.lambda_lower_bounds.iter().zip(&a.path_replays) {
            csv.row(vec![
                l.k.to_string(),
                r.n.to_string(),
                num(l.lambda_k.0),
                num(r.ln_ratio.0),
            ]);
        }
        run.files.push((format!("{stem}.lambda.csv"), csv.finish()));
        let mut csv = Csv::new(
            "renorm-exceedance",
            &["lambda_star", "first_k", "path_violations"],
        );
        for e in &a.exceedances {
            csv.row(vec![
                num(e.lambda_star.0),
                opt(e.first_k),
                e.path_violations.to_string(),
            ]);
        }
        run.files.push((format!("{stem}.exceed.csv"), csv.finish()));
        let increasing = a
            .lambda_lower_bounds
            .windows(2)
            .all(|w| w[1].lambda_k.0 > w[0].lambda_k.0);
        let sandwich = a.observed_low.0 >= a.c_low.0 - renorm::EQUIVALENCE_SLACK
            && a.observed_high.0 <= a.c_high.0 + renorm::EQUIVALENCE_SLACK;
        ok &= increasing && sandwich && a.projection_contractive;
        run.lines.push(format!(
            "norm0: observed ||z||_0/||z|| in [{:.6}, {:.6}] against [{}, {:.6}] over {} samples; P_y contractive: {}",
            a.observed_low.0, a.observed_high.0, a.c_low.0, a.c_high.0, a.samples, a.projection_contractive
        ));
        run.lines.push("  k  lambda_k       path ln ratio".into());
        for (l, r) in a.lambda_lower_bounds.iter().zip(&a.path_replays) {
            run.lines.push(format!(
                "  {:<2} {:<14.6} {:.6}",
                l.k, l.lambda_k.0, r.ln_ratio.0
            ));
        }
        for e in &a.exceedances {
            run.lines.push(format!(
                "  lambda* = {}: first k with lambda_k > lambda* is {}, {} path violations",
                e.lambda_star.0,
                e.first_k.map_or("none".to_string(), |k| k.to_string()),
                e.path_violations
            ));
        }
        let last = a
            .lambda_lower_bounds
            .last()
            .map(|l| l.lambda_k.0)
            .unwrap_or(f64::NAN);
        run.headline = format!("lambda_K = {last:.6}");
    }
    if let Some(c) = &classical {
        let mut csv = Csv::new(
            "renorm-classical",
            &[
                "omega",
                "growth_bound",
                "horizon",
                "steps",
                "samples",
                "shift_violations",
                "audit_violations",
            ],
        );
        csv.row(vec![
            num(c.omega.0),
            num(c.growth_bound.0),
            num(c.horizon.0),
            c.steps.to_string(),
            c.samples.to_string(),
            c.shift_violations.to_string(),
            c.audit_violations.to_string(),
        ]);
        run.files
            .push((format!("{stem}.classical.csv"), csv.finish()));
        ok &= c.shift_violations == 0 && c.audit_violations == 0;
        run.lines.push(format!(
            "classical: omega = {}, growth bound {}, horizon {:.4}, {} grid steps, {} samples: {} shift and {} audit violations",
            c.omega.0, c.growth_bound.0, c.horizon.0, c.steps, c.samples, c.shift_violations, c.audit_violations
        ));
        if run.headline.is_empty() {
            run.headline = format!(
                "classical violations = {}",
                c.shift_violations + c.audit_violations
            );
        }
    }
    let report = RenormReport::new(audit, classical);
    run.files
        .push((format!("{stem}.report.json"), report.to_json()));
    run.code = if ok { EXIT_OK } else { EXIT_TOLERANCE };
    run
}

fn verify_file(path: &Path) -> Run {
    let checked = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        .and_then(|text| {
            let format = serial::document_format(&text)?;
            match format.as_str() {
                CERTIFICATE_FORMAT => WitnessCertificate::from_json(&text)?.verify(),
                REPORT_FORMAT => RenormReport::from_json(&text)?.verify(),
                other => Err(Error::Config(format!("unknown document format {other:?}"))),
            }?;
            Ok(format)
        });
    match checked {
        Ok(format) => Run {
            lines: vec![format!("ok: {} ({format})", path.display())],
            ..Run::default()
        },
        Err(e) => {
            let mut run = Run::failed(&e);
            if let Error::InvalidCertificate { invariant, .. } = &e {
                run.lines
                    .push(format!("  first failing invariant: {invariant}"));
            }
            run
        }
    }
}

fn sweep_run(cfg: &ExperimentConfig, stem: &str) -> Run {
    let Some(sweep) = cfg.sweep.clone() else {
        return Run::failed(&Error::Config("sweep needs a `sweep` section".into()));
    };
    let dims = if sweep.dims.is_empty() {
        vec![cfg.dim()]
    } else {
        sweep.dims.clone()
    };
    let params: Vec<Option<f64>> = if sweep.law_parameters.is_empty() {
        vec![None]
    } else {
        sweep.law_parameters.iter().map(|h| Some(h.0)).collect()
    };
    let mut csv = Csv::new("sweep", &["dim", "law_parameter", "exit_code", "headline"]);
    let mut run = Run::default();
    for &d in &dims {
        for &param in &params {
            let point = match param {
                Some(v) => cfg.with_dim(d).with_law_parameter(v),
                None => Ok(cfg.with_dim(d)),
            };
            let point = match point {
                Ok(p) => p,
                Err(e) => return Run::failed(&e),
            };
            let label = match param {
                Some(v) => format!("{stem}.d{d}.p{v}"),
                None => format!("{stem}.d{d}"),
            };
            let sub = match sweep.command {
                SweepCommand::LimitCheck => limit_check(&point, &label),
                SweepCommand::Witness => witness_run(&point, &label),
                SweepCommand::RenormAudit => renorm_run(&point, &label, None),
            };
            if sub.code == EXIT_CONFIG {
                return sub;
            }
            run.lines.push(format!(
                "  d = {d:<4} param = {:<8} exit {}  {}",
                opt(param),
                sub.code,
                sub.headline
            ));
            csv.row(vec![
                d.to_string(),
                opt(param.map(num)),
                sub.code.to_string(),
                sub.headline.clone(),
            ]);
            run.files.extend(sub.files);
        }
    }
    run.files.push((format!("{stem}.sweep.csv"), csv.finish()));
    run
}

fn write_all(out: &Path, files: &[(String, String)]) -> Result<(), Error> {
    std::fs::create_dir_all(out).map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
    for (name, content) in files {
        let target = out.join(name);
        let tmp = out.join(format!(".{name}.tmp"));
        std::fs::write(&tmp, content)
            .and_then(|_| std::fs::rename(&tmp, &target))
            .map_err(|e| Error::Config(format!("{}: {e}", target.display())))?;
    }
    Ok(())
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Config(format!(
            "{THREADS_ENV} must be a positive integer, got {v:?}"
        ))
    })?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Parses arguments, runs, prints, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let (result, out) = match &cli.command {
        Command::Verify { file } => (verify_file(file), None),
        Command::LimitCheck(c)
        | Command::Witness(c)
        | Command::Sweep(c)
        | Command::RenormAudit { common: c, .. } => {
            let cfg = match load(c) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            let s = stem(&c.config);
            let r = match &cli.command {
                Command::LimitCheck(_) => limit_check(&cfg, &s),
                Command::Witness(_) => witness_run(&cfg, &s),
                Command::Sweep(_) => sweep_run(&cfg, &s),
                Command::RenormAudit { certificate, .. } => {
                    renorm_run(&cfg, &s, certificate.as_deref())
                }
                Command::Verify { .. } => unreachable!(),
            };
            (r, Some(c.out.clone()))
        }
    };
    for line in &result.lines {
        if result.code == EXIT_OK {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    if let Some(out) = out {
        if let Err(e) = write_all(&out, &result.files) {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        for (name, _) in &result.files {
            println!("wrote {}", out.join(name).display());
        }
    }
    result.code
}
