//! Versioned key-value description of a [`ModelSpec`].
//!
//! ```toml
//! format = 1       # optional
//! kind = "XXZ"        # XY | XXZ | XYZ | Clock3
//! L = 10
//! Jx = -1.0           # spin chains (S = σ/2 convention)
//! Jy = -1.0
//! Jz = 4.0
//! field_axis = "x"    # x | z; XY requires z
//! ```
//!
//! XY chains take `gamma` (and optionally `J`, default 1) or, alternatively,
//! `Jx`/`Jy`, from which `J = (Jx+Jy)/4` and `γ = (Jx−Jy)/(Jx+Jy)`.
//! Clock3 takes an optional `J` (default 1). Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use super::{Couplings, FieldAxis, ModelKind, ModelSpec};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default = "default_format")]
    pub format: u32,
    pub kind: ModelKind,
    #[serde(rename = "L")]
    pub length: usize,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(rename = "Jx", default, skip_serializing_if = "Option::is_none")]
    pub jx: Option<f64>,
    #[serde(rename = "Jy", default, skip_serializing_if = "Option::is_none")]
    pub jy: Option<f64>,
    #[serde(rename = "Jz", default, skip_serializing_if = "Option::is_none")]
    pub jz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_axis: Option<FieldAxis>,
}

fn default_format() -> u32 {
    MODEL_FORMAT
}

fn required(value: Option<f64>, key: &str, kind: ModelKind) -> Result<f64> {
    value.ok_or_else(|| Error::Config(format!("{kind} requires key `{key}`")))
}

fn forbid(value: Option<f64>, key: &str, kind: ModelKind) -> Result<()> {
    match value {
        Some(_) => Err(Error::Config(format!("key `{key}` does not apply to {kind}"))),
        None => Ok(()),
    }
}

impl TryFrom<ModelFile> for ModelSpec {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        if file.format != MODEL_FORMAT {
            return Err(Error::Config(format!(
                "unsupported model format {} (expected {MODEL_FORMAT})",
                file.format
            )));
        }
        let kind = file.kind;
        let spec = match kind {
            ModelKind::XY => {
                forbid(file.jz.filter(|&v| v != 0.0), "Jz", kind)?;
                let couplings = match (file.gamma, file.jx, file.jy) {
                    (Some(gamma), None, None) => Couplings::Xy {
                        j: file.j.unwrap_or(1.0),
                        gamma,
                    },
                    (gamma, Some(jx), Some(jy)) => {
                        forbid(file.j, "J", kind)?;
                        if jx + jy == 0.0 {
                            return Err(Error::Config("XY requires Jx + Jy != 0".into()));
                        }
                        let derived = (jx - jy) / (jx + jy);
                        if let Some(g) = gamma {
                            if (g - derived).abs() > 1e-12 {
                                return Err(Error::Config(format!(
                                    "gamma = {g} disagrees with (Jx-Jy)/(Jx+Jy) = {derived}"
                                )));
                            }
                        }
                        Couplings::Xy {
                            j: (jx + jy) / 4.0,
                            gamma: derived,
                        }
                    }
                    _ => {
                        return Err(Error::Config(
                            "XY requires either `gamma` or both `Jx` and `Jy`".into(),
                        ))
                    }
                };
                ModelSpec {
                    kind,
                    length: file.length,
                    couplings,
                    field_axis: file.field_axis.unwrap_or(FieldAxis::Z),
                }
            }
            ModelKind::XXZ | ModelKind::XYZ => {
                forbid(file.gamma, "gamma", kind)?;
                forbid(file.j, "J", kind)?;
                ModelSpec {
                    kind,
                    length: file.length,
                    couplings: Couplings::Spin {
                        jx: required(file.jx, "Jx", kind)?,
                        jy: required(file.jy, "Jy", kind)?,
                        jz: required(file.jz, "Jz", kind)?,
                    },
                    field_axis: file
                        .field_axis
                        .ok_or_else(|| Error::Config(format!("{kind} requires key `field_axis`")))?,
                }
            }
            ModelKind::Clock3 => {
                for (v, key) in [(file.jx, "Jx"), (file.jy, "Jy"), (file.jz, "Jz"), (file.gamma, "gamma")] {
                    forbid(v, key, kind)?;
                }
                if file.field_axis.is_some() {
                    return Err(Error::Config("Clock3 has a single field term; drop `field_axis`".into()));
                }
                ModelSpec {
                    kind,
                    length: file.length,
                    couplings: Couplings::Clock {
                        j: file.j.unwrap_or(1.0),
                    },
                    field_axis: FieldAxis::Z,
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<&ModelSpec> for ModelFile {
    fn from(spec: &ModelSpec) -> Self {
        let mut file = ModelFile {
            format: MODEL_FORMAT,
            kind: spec.kind,
            length: spec.length,
            j: None,
            jx: None,
            jy: None,
            jz: None,
            gamma: None,
            field_axis: None,
        };
        match spec.couplings {
            Couplings::Xy { j, gamma } => {
                file.j = Some(j);
                file.gamma = Some(gamma);
                file.field_axis = Some(spec.field_axis);
            }
            Couplings::Spin { jx, jy, jz } => {
                file.jx = Some(jx);
                file.jy = Some(jy);
                file.jz = Some(jz);
                file.field_axis = Some(spec.field_axis);
            }
            Couplings::Clock { j } => file.j = Some(j),
        }
        file
    }
}

impl ModelSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.try_into()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&ModelFile::from(self)).expect("model file serialises")
    }
}
