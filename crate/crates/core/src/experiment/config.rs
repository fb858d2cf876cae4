//! Strict TOML description of one experiment.
//!
//! ```toml
//! [model]
//! kind = "XY"
//! L = 16
//! gamma = 0.8
//!
//! [scan]
//! mode = "circle"
//! g = [0.7, 1.5]
//!
//! [output]
//! directory = "out/xy-circle"
//! formats = ["csv", "structured"]
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ed::{KrylovConfig, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{ModelFile, ModelSpec};
use crate::scan::{default_n_theta, Backend, GridSpec, ScanOptions, DEFAULT_EDGE_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    Circle,
    Grid,
    Fss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Structured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub mode: ScanMode,
    /// Circle radii.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub g: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    /// Fixed reference field `[Re, Im]`; consecutive fidelities when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im_range: Option<[f64; 2]>,
    /// `[n_re, n_im]` sweep lines and samples per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<[usize; 2]>,
    #[serde(rename = "L_list", default, skip_serializing_if = "Vec::is_empty")]
    pub l_list: Vec<usize>,
    /// Narrow the grid around the extrapolated `h_L` once two sizes are known.
    #[serde(default)]
    pub track: bool,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default = "default_threshold")]
    pub edge_threshold: f64,
    #[serde(default)]
    pub options: ScanOptions,
}

fn default_threshold() -> f64 {
    DEFAULT_EDGE_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dense_cap: usize,
    pub dense_threshold: usize,
    pub krylov_subspace: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub verify: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        SolverSection {
            dense_cap: s.dense_cap,
            dense_threshold: s.dense_threshold,
            krylov_subspace: s.krylov.subspace,
            tolerance: s.krylov.tolerance,
            seed: s.krylov.seed,
            verify: s.krylov.verify,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self) -> SolverConfig {
        let base = SolverConfig::default();
        SolverConfig {
            dense_cap: self.dense_cap,
            dense_threshold: self.dense_threshold,
            krylov: KrylovConfig {
                subspace: self.krylov_subspace,
                keep: base.krylov.keep.min(self.krylov_subspace.saturating_sub(2)).max(1),
                tolerance: self.tolerance,
                seed: self.seed,
                verify: self.verify,
                ..base.krylov
            },
            ..base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: String,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Structured]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelFile,
    pub scan: ScanSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// The model at its configured length.
    pub fn spec(&self) -> Result<ModelSpec> {
        self.model.clone().try_into()
    }

    /// The model at another chain length.
    pub fn spec_at(&self, length: usize) -> Result<ModelSpec> {
        ModelFile { length, ..self.model.clone() }.try_into()
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let missing = |k: &str| Error::Config(format!("{:?} scan requires `scan.{k}`", self.scan.mode));
        let [n_re, n_im] = self.scan.resolution.ok_or_else(|| missing("resolution"))?;
        let grid = GridSpec {
            re_range: self.scan.re_range.ok_or_else(|| missing("re_range"))?,
            im_range: self.scan.im_range.ok_or_else(|| missing("im_range"))?,
            n_re,
            n_im,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn n_theta(&self, length: usize) -> usize {
        self.scan.n_theta.unwrap_or_else(|| default_n_theta(length))
    }

    pub fn reference(&self) -> Option<Complex64> {
        self.scan.reference.map(|[re, im]| Complex64::new(re, im))
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        let s = &self.scan;
        match s.mode {
            ScanMode::Circle => {
                if s.g.is_empty() {
                    return Err(Error::Config("circle scan requires `scan.g`".into()));
                }
                if let Some(g) = s.g.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
                    return Err(Error::Config(format!("circle radius must be finite and nonnegative, got {g}")));
                }
                let n = self.n_theta(spec.length);
                if n < 8 * spec.length {
                    return Err(Error::Config(format!("n_theta = {n} is below 8L = {}", 8 * spec.length)));
                }
            }
            ScanMode::Grid => {
                self.grid()?;
            }
            ScanMode::Fss => {
                self.grid()?;
                let mut ls = s.l_list.clone();
                ls.sort_unstable();
                ls.dedup();
                if ls.len() < 4 {
                    return Err(Error::Config(format!(
                        "fss requires at least 4 distinct sizes in `scan.L_list`, got {}",
                        ls.len()
                    )));
                }
                for &l in &ls {
                    self.spec_at(l)?;
                }
            }
        }
        if !(s.edge_threshold.is_finite() && s.edge_threshold > 0.0) {
            return Err(Error::Config("`scan.edge_threshold` must be positive".into()));
        }
        if self.solver.krylov_subspace < 4 {
            return Err(Error::Config("`solver.krylov_subspace` must be at least 4".into()));
        }
        if self.output.formats.is_empty() {
            return Err(Error::Config("`output.formats` is empty".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
