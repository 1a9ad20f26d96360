//! Experiment configuration files (`*.config.json`).
//!
//! Every scalar may be given as a JSON number or as a hex-float string.
//! Random ingredients are drawn from one stream seeded by `seed`, in the
//! order generator, functional, projection (functional first for
//! `near_rank_one`, whose generator depends on it).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexfloat::{self, from_complex_list, Hex, HexC};
use crate::projections::{DenseProjection, Projector};
use crate::sampling::{self, LabRng};
use crate::serial::GeneratorDoc;
use crate::spaces::{CMatrix, CVec, Functional, Generator, GrowthLaw, NormIndex};
use crate::witness::{WitnessOptions, DEFAULT_J_MAX, DEFAULT_VALIDATION_SAMPLES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub dim: usize,
    #[serde(default)]
    pub p: NormIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    Law {
        law: GrowthLaw,
    },
    Diagonal {
        entries: Vec<HexC>,
    },
    Dense {
        rows: Vec<Vec<HexC>>,
    },
    /// JSON file holding `rows`, relative to the config file
    DenseFile {
        path: PathBuf,
    },
    RandomDense {
        norm: Hex,
    },
    /// Dense `A` whose adjoint nearly attains its norm at `phi`
    NearRankOne {
        norm: Hex,
        noise: Hex,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalConfig {
    /// `phi_m = first * ratio^(m-1)`
    Geometric {
        first: Hex,
        ratio: Hex,
    },
    Coords {
        coords: Vec<HexC>,
    },
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default)]
    pub min_pow: u32,
    #[serde(default = "default_max_pow")]
    pub max_pow: u32,
    #[serde(default = "default_t")]
    pub t: Hex,
}

fn default_max_pow() -> u32 {
    20
}

fn default_t() -> Hex {
    Hex(1.0)
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            min_pow: 0,
            max_pow: default_max_pow(),
            t: default_t(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProjectionConfig {
    /// `P_x` built from the configured `x` and `phi`
    RankOne,
    RandomIdempotent {
        rank: usize,
        max_norm: Hex,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: Hex,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_j_max")]
    pub j_max: u32,
    #[serde(default = "default_validation")]
    pub validation_samples: usize,
}

fn default_epsilon() -> Hex {
    Hex(0.1)
}

fn default_k() -> usize {
    5
}

fn default_j_max() -> u32 {
    DEFAULT_J_MAX
}

fn default_validation() -> usize {
    DEFAULT_VALIDATION_SAMPLES
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig {
            epsilon: default_epsilon(),
            k: default_k(),
            j_max: default_j_max(),
            validation_samples: default_validation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenormConfig {
    /// when absent, no classical contrast is computed
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Hex>,
    #[serde(default)]
    pub lambdas: Vec<Hex>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_grid_steps")]
    pub grid_steps: usize,
    #[serde(default = "default_classical_samples")]
    pub classical_samples: usize,
    /// build a certificate from this config when none is supplied
    #[serde(default = "default_true")]
    pub certificate: bool,
}

fn default_samples() -> usize {
    10_000
}

fn default_grid_steps() -> usize {
    1000
}

fn default_classical_samples() -> usize {
    1000
}

fn default_true() -> bool {
    true
}

impl Default for RenormConfig {
    fn default() -> Self {
        RenormConfig {
            omega: None,
            lambdas: Vec::new(),
            samples: default_samples(),
            grid_steps: default_grid_steps(),
            classical_samples: default_classical_samples(),
            certificate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepCommand {
    LimitCheck,
    Witness,
    RenormAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub command: SweepCommand,
    #[serde(default)]
    pub dims: Vec<usize>,
    /// values substituted for the growth law's primary parameter
    #[serde(default)]
    pub law_parameters: Vec<Hex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceConfig,
    pub generator: GeneratorConfig,
    pub functional: FunctionalConfig,
    /// `x` for limit checks; defaults to `e_1 / phi_1`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<HexC>>,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    /// compare the dense product with `e^{tPAP} P x` at the last `n`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<ProjectionConfig>,
    #[serde(default)]
    pub witness: WitnessConfig,
    #[serde(default)]
    pub renorm: RenormConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: Hex,
    /// directory that relative paths resolve against (not serialized)
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_tolerance() -> Hex {
    Hex(1e-3)
}

/// Concrete inputs resolved from a config.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub generator: Generator,
    pub phi: Functional,
    pub x: CVec,
    pub oracle_projection: Option<DenseProjection>,
}

fn vec_of(
    coords: &[HexC],
    dim: usize,
    p: NormIndex,
    what: &str,
) -> Result<Vec<num_complex::Complex64>> {
    if coords.len() != dim {
        return Err(Error::Config(format!(
            "{what} has {} entries, space.dim is {dim}",
            coords.len()
        )));
    }
    let v = from_complex_list(coords);
    CVec::new(v.clone(), p).map_err(|e| Error::Config(format!("{what}: {e}")))?;
    Ok(v)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn witness_options(&self) -> WitnessOptions {
        WitnessOptions {
            j_max: self.witness.j_max,
            validation_samples: self.witness.validation_samples,
            seed: self.seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    /// Same configuration at another truncation dimension.
    pub fn with_dim(&self, dim: usize) -> Self {
        let mut c = self.clone();
        c.space.dim = dim;
        c
    }

    /// Same configuration with the growth law's primary parameter replaced.
    pub fn with_law_parameter(&self, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match &mut c.generator {
            GeneratorConfig::Law { law } => *law = law.with_parameter(value),
            _ => {
                return Err(Error::Config(
                    "law_parameters sweep needs a law generator".into(),
                ))
            }
        }
        Ok(c)
    }

    fn generator(&self, rng: &mut LabRng, phi: Option<&Functional>) -> Result<Generator> {
        let (d, p) = (self.space.dim, self.space.p);
        let g = match &self.generator {
            GeneratorConfig::Law { law } => Generator::from_law(law.clone(), d)?,
            GeneratorConfig::Diagonal { entries } => {
                Generator::diagonal(vec_of(entries, d, p, "generator entries")?)?
            }
            GeneratorConfig::Dense { rows } => dense_rows(rows, d)?,
            GeneratorConfig::DenseFile { path } => {
                let full = self.base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::Config(format!("{}: {e}", full.display())))?;
                let doc: GeneratorDoc = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", full.display())))?;
                let g = doc.to_generator()?;
                Error::check_dim(d, g.dim()).map_err(|e| Error::Config(e.to_string()))?;
                g
            }
            GeneratorConfig::RandomDense { norm } => sampling::random_generator(rng, d, norm.0, p),
            GeneratorConfig::NearRankOne { norm, noise } => phi
                .and_then(|phi| sampling::near_rank_one_generator(rng, phi, norm.0, noise.0))
                .ok_or_else(|| Error::Config("near_rank_one needs a nonzero functional".into()))?,
        };
        g.validate()
            .map_err(|e| Error::Config(format!("generator: {e}")))?;
        Ok(g)
    }

    fn functional(&self, rng: &mut LabRng) -> Result<Functional> {
        let (d, p) = (self.space.dim, self.space.p);
        match &self.functional {
            FunctionalConfig::Geometric { first, ratio } => {
                Functional::geometric(d, first.0, ratio.0, p)
            }
            FunctionalConfig::Coords { coords } => {
                Functional::new(vec_of(coords, d, p, "functional")?, p)
            }
            FunctionalConfig::Random => Ok(sampling::random_functional(rng, d, p)),
        }
        .map_err(|e| Error::Config(format!("functional: {e}")))
    }

    /// Builds every concrete input. Random draws happen in a fixed order.
    pub fn resolve(&self) -> Result<Resolved> {
        if self.space.dim == 0 {
            return Err(Error::Config("space.dim must be positive".into()));
        }
        let mut rng = sampling::rng(self.seed);
        let (generator, phi) = if matches!(self.generator, GeneratorConfig::NearRankOne { .. }) {
            let phi = self.functional(&mut rng)?;
            (self.generator(&mut rng, Some(&phi))?, phi)
        } else {
            let g = self.generator(&mut rng, None)?;
            (g, self.functional(&mut rng)?)
        };
        let x = match &self.vector {
            Some(coords) => CVec::new(
                vec_of(coords, self.space.dim, self.space.p, "vector")?,
                self.space.p,
            )?,
            None => crate::witness::default_z(&phi)
                .map_err(|e| Error::Config(format!("default vector: {e}")))?,
        };
        let oracle_projection = match &self.oracle {
            None => None,
            Some(ProjectionConfig::RankOne) => Some(DenseProjection::from(
                &crate::projections::make_rank_one(&x, &phi)?,
            )),
            Some(ProjectionConfig::RandomIdempotent { rank, max_norm }) => {
                if *rank > self.space.dim {
                    return Err(Error::Config(format!("projection rank {rank} exceeds dim")));
                }
                Some(sampling::random_idempotent(
                    &mut rng,
                    self.space.dim,
                    *rank,
                    max_norm.0,
                    self.space.p,
                ))
            }
        };
        if let Some(pr) = &oracle_projection {
            Error::check_dim(self.space.dim, pr.dim())?;
        }
        Ok(Resolved {
            generator,
            phi,
            x,
            oracle_projection,
        })
    }
}

fn dense_rows(rows: &[Vec<HexC>], d: usize) -> Result<Generator> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Config(format!("dense generator must be {d} x {d}")));
    }
    Generator::dense(CMatrix::from_shape_fn((d, d), |(i, j)| rows[i][j].into()))
}

/// Parses a scalar the way config files do.
pub fn parse_scalar(s: &str) -> Option<f64> {
    hexfloat::parse(s)
}
