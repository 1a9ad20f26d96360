//! JSON documents for certificates and reports.
//!
//! Every float is written as a hex string so a document replays bit for
//! bit; `verify` works from these documents alone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexfloat::{self, complex_list, from_complex_list, Hex, HexC};
use crate::spaces::expm::CMatrix;
use crate::spaces::{CVec, Functional, Generator, GrowthLaw, NormIndex};
use crate::witness::{FinalValue, WitnessCertificate, WitnessStage};

pub const CERTIFICATE_FORMAT: &str = "semigroup-lab/witness-certificate";
pub const REPORT_FORMAT: &str = "semigroup-lab/renorm-report";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorDoc {
    Diagonal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        law: Option<GrowthLaw>,
        entries: Vec<HexC>,
    },
    Dense {
        rows: Vec<Vec<HexC>>,
    },
}

impl From<&Generator> for GeneratorDoc {
    fn from(g: &Generator) -> Self {
        match g {
            Generator::Diagonal { law, entries } => GeneratorDoc::Diagonal {
                law: law.clone(),
                entries: complex_list(entries),
            },
            Generator::Dense { matrix } => GeneratorDoc::Dense {
                rows: matrix
                    .rows()
                    .into_iter()
                    .map(|r| r.iter().map(|&c| c.into()).collect())
                    .collect(),
            },
        }
    }
}

impl GeneratorDoc {
    /// Rebuilds the generator without re-validating the growth law, so
    /// that a tampered document reaches `verify` and is named there.
    pub fn to_generator(&self) -> Result<Generator> {
        match self {
            GeneratorDoc::Diagonal { law, entries } => {
                if entries.is_empty() {
                    return Err(Error::Config("generator has no entries".into()));
                }
                Ok(Generator::Diagonal {
                    law: law.clone(),
                    entries: from_complex_list(entries),
                })
            }
            GeneratorDoc::Dense { rows } => {
                let d = rows.len();
                if d == 0 || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Config("dense generator must be square".into()));
                }
                let m = CMatrix::from_shape_fn((d, d), |(i, j)| rows[i][j].into());
                Generator::dense(m)
            }
        }
    }
}

fn vector(coords: &[HexC], p: NormIndex, what: &str) -> Result<CVec> {
    CVec::new(from_complex_list(coords), p).map_err(|e| Error::Config(format!("{what}: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateHeader {
    pub dim: usize,
    pub p: NormIndex,
    pub generator: GeneratorDoc,
    pub phi: Vec<HexC>,
    pub z: Vec<HexC>,
    pub epsilon: Hex,
    pub k_target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDoc {
    pub k: usize,
    pub x: Vec<HexC>,
    pub re_pairing: Hex,
    #[serde(with = "hexfloat::u128_str")]
    pub n: u128,
    pub delta: Hex,
    pub gamma: Hex,
    pub log_value: HexC,
    pub value: HexC,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalValueDoc {
    pub k: usize,
    #[serde(with = "hexfloat::u128_str")]
    pub n: u128,
    pub log_value: HexC,
    pub value: HexC,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDoc {
    pub format: String,
    pub version: u32,
    pub header: CertificateHeader,
    pub stages: Vec<StageDoc>,
    pub y: Vec<HexC>,
    pub final_values: Vec<FinalValueDoc>,
}

impl From<&WitnessCertificate> for CertificateDoc {
    fn from(c: &WitnessCertificate) -> Self {
        CertificateDoc {
            format: CERTIFICATE_FORMAT.into(),
            version: FORMAT_VERSION,
            header: CertificateHeader {
                dim: c.dim(),
                p: c.phi.p(),
                generator: (&c.generator).into(),
                phi: complex_list(c.phi.coords()),
                z: complex_list(c.z.coords()),
                epsilon: Hex(c.epsilon),
                k_target: c.k_target,
            },
            stages: c
                .stages
                .iter()
                .map(|s| StageDoc {
                    k: s.k,
                    x: complex_list(s.x.coords()),
                    re_pairing: Hex(s.re_pairing),
                    n: s.n,
                    delta: Hex(s.delta),
                    gamma: Hex(s.gamma),
                    log_value: s.log_value.into(),
                    value: s.value.into(),
                })
                .collect(),
            y: complex_list(c.y.coords()),
            final_values: c
                .final_values
                .iter()
                .map(|f| FinalValueDoc {
                    k: f.k,
                    n: f.n,
                    log_value: f.log_value.into(),
                    value: f.value.into(),
                })
                .collect(),
        }
    }
}

impl CertificateDoc {
    pub fn to_certificate(&self) -> Result<WitnessCertificate> {
        if self.format != CERTIFICATE_FORMAT || self.version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported document {} v{}",
                self.format, self.version
            )));
        }
        let h = &self.header;
        let p = h.p;
        let phi = Functional::new(from_complex_list(&h.phi), p)
            .map_err(|e| Error::Config(format!("phi: {e}")))?;
        let stages = self
            .stages
            .iter()
            .map(|s| {
                Ok(WitnessStage {
                    k: s.k,
                    x: vector(&s.x, p, "stage vector")?,
                    re_pairing: s.re_pairing.0,
                    n: s.n,
                    delta: s.delta.0,
                    gamma: s.gamma.0,
                    log_value: s.log_value.into(),
                    value: s.value.into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cert = WitnessCertificate {
            generator: h.generator.to_generator()?,
            phi,
            z: vector(&h.z, p, "z")?,
            epsilon: h.epsilon.0,
            k_target: h.k_target,
            stages,
            y: vector(&self.y, p, "y")?,
            final_values: self
                .final_values
                .iter()
                .map(|f| FinalValue {
                    k: f.k,
                    n: f.n,
                    log_value: f.log_value.into(),
                    value: f.value.into(),
                })
                .collect(),
        };
        if cert.dim() != h.dim {
            return Err(Error::Config(format!(
                "header dim {} but phi has {}",
                h.dim,
                cert.dim()
            )));
        }
        Ok(cert)
    }
}

impl WitnessCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CertificateDoc::from(self)).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CertificateDoc =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("certificate: {e}")))?;
        doc.to_certificate()
    }
}

/// Reads just the `format` field, to dispatch `verify`.
pub fn document_format(text: &str) -> Result<String> {
    #[derive(Deserialize)]
    struct Probe {
        format: String,
    }
    serde_json::from_str::<Probe>(text)
        .map(|p| p.format)
        .map_err(|e| Error::Config(format!("not a lab document: {e}")))
}
