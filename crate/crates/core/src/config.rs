//! Run configuration: one JSON document with a section per concern. Unknown
//! keys are rejected and every error carries the dotted path of its field.

use std::path::PathBuf;

use log::info;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::blowup::SweepConfig;
use crate::error::{Error, FieldError, Result};
use crate::fd::{DetectionConfig, GridConfig, ModelParams};
use crate::linear::SourceSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSection {
    pub n: u32,
    /// `0` selects the classical wave equation; only this section accepts it.
    pub ell: f64,
    #[serde(default)]
    pub p: Option<f64>,
}

fn default_linear_tol() -> f64 {
    1e-10
}

/// Evaluation grid for the representation formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSection {
    pub times: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    #[serde(default = "default_linear_tol")]
    pub tol: f64,
    #[serde(default)]
    pub source: SourceSpec,
}

impl LinearSection {
    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.points)
    }
}

fn default_functional_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSection {
    pub z_min: f64,
    pub z_max: f64,
    pub points: usize,
    /// Allowed violation of the data-term bound (grid error).
    #[serde(default = "default_functional_tol")]
    pub tolerance: f64,
}

impl FunctionalSection {
    pub fn zs(&self) -> Vec<f64> {
        linspace(self.z_min, self.z_max, self.points)
    }
}

fn default_c() -> f64 {
    1.0
}
fn default_z_max() -> f64 {
    1e300
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSection {
    /// Not determined by the analysis; 1 unless given.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Overrides `K |u0 + u1|_1`.
    #[serde(default)]
    pub m: Option<f64>,
    /// Epsilons to evaluate; the sweep ladder when absent.
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    #[serde(default = "default_z_max")]
    pub z_max: f64,
}

impl Default for OdeSection {
    fn default() -> Self {
        Self {
            c: default_c(),
            m: None,
            eps: None,
            z_max: default_z_max(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Keep every `stride`-th node in field CSVs; 0 or 1 keeps all.
    #[serde(default)]
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub exponents: Option<ExponentsSection>,
    #[serde(default)]
    pub model: Option<ModelParams>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub detection: DetectionConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub linear: Option<LinearSection>,
    #[serde(default)]
    pub functional: Option<FunctionalSection>,
    #[serde(default)]
    pub ode: Option<OdeSection>,
    #[serde(default)]
    pub io: IoSection,
    /// Seed for randomized checks; the solvers themselves are deterministic.
    #[serde(default)]
    pub seed: u64,
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Parses and validates a config document. Fields filled from defaults are
/// logged at info level.
pub fn parse_config(document: &str) -> Result<RunConfig> {
    let raw: Value = serde_json::from_str(document)
        .map_err(|e| Error::config("<document>", format!("malformed JSON: {e}")))?;
    let mut de = serde_json::Deserializer::from_str(document);
    let config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;
    let errors = validate(&config);
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    let effective = serde_json::to_value(&config).expect("config serializes");
    for path in defaulted_fields(&raw, &effective) {
        match lookup(&effective, &path) {
            None | Some(Value::Null) => {}
            Some(v) => info!("config default: {path} = {v}"),
        }
    }
    Ok(config)
}

/// Dotted paths present in `effective` but absent from `raw`.
pub fn defaulted_fields(raw: &Value, effective: &Value) -> Vec<String> {
    fn walk(raw: Option<&Value>, eff: &Value, prefix: &str, out: &mut Vec<String>) {
        let Value::Object(map) = eff else { return };
        for (k, v) in map {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            match raw.and_then(|r| r.get(k)) {
                None => out.push(path),
                Some(r) => walk(Some(r), v, &path, out),
            }
        }
    }
    let mut out = Vec::new();
    walk(Some(raw), effective, "", &mut out);
    out
}

fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(v, |v, k| v.get(k))
}

fn validate(c: &RunConfig) -> Vec<FieldError> {
    let mut errs = Vec::new();
    let mut bad = |path: &str, message: String| {
        errs.push(FieldError {
            path: path.to_string(),
            message,
        })
    };
    if let Some(e) = &c.exponents {
        if e.n == 0 {
            bad("exponents.n", "n must be >= 1".into());
        }
        if !(e.ell >= 0.0) || !e.ell.is_finite() {
            bad("exponents.ell", format!("need ell >= 0, got {}", e.ell));
        }
        if let Some(p) = e.p {
            if !(p > 1.0) || !p.is_finite() {
                bad("exponents.p", format!("need p > 1, got {p}"));
            }
        }
    }
    if let Some(m) = &c.model {
        let mut field_ok = true;
        if m.ell == 0.0 {
            bad(
                "model.ell",
                "ell = 0 (classical wave equation) is supported by the exponents section only; solvers need ell > 0".into(),
            );
            field_ok = false;
        } else if !(m.ell > 0.0) || !m.ell.is_finite() {
            bad("model.ell", format!("need ell > 0, got {}", m.ell));
            field_ok = false;
        }
        if !(m.p > 1.0) || !m.p.is_finite() {
            bad("model.p", format!("need p > 1, got {}", m.p));
            field_ok = false;
        }
        if field_ok {
            if let Err(e) = m.validate() {
                bad("model", e.to_string());
            }
        }
    }
    if let Some(g) = &c.grid {
        if let Err(e) = g.validate() {
            bad("grid", e.to_string());
        }
    }
    if let Err(e) = c.detection.validate() {
        bad("detection", e.to_string());
    }
    if let Err(e) = c.sweep.validate() {
        bad("sweep", e.to_string());
    }
    if let Some(l) = &c.linear {
        if l.times.is_empty() || l.times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            bad("linear.times", "need a nonempty list of finite times >= 0".into());
        }
        if !(l.x_max >= l.x_min) || l.points == 0 {
            bad("linear.points", "need x_min <= x_max and points >= 1".into());
        }
        if !(l.tol > 0.0) {
            bad("linear.tol", format!("need tol > 0, got {}", l.tol));
        }
    }
    if let Some(f) = &c.functional {
        if let Some(m) = &c.model {
            if !(f.z_min >= m.radius) {
                bad("functional.z_min", format!("need z_min >= model.radius = {}", m.radius));
            }
        }
        if !(f.z_max >= f.z_min) || f.points == 0 {
            bad("functional.points", "need z_min <= z_max and points >= 1".into());
        }
    }
    if let Some(o) = &c.ode {
        if !(o.c >= 0.0) {
            bad("ode.c", format!("need C >= 0, got {}", o.c));
        }
        if o.m.is_some_and(|m| !(m > 0.0)) {
            bad("ode.m", "need M > 0".into());
        }
        if o.eps.as_ref().is_some_and(|e| e.is_empty() || e.iter().any(|x| !(*x > 0.0))) {
            bad("ode.eps", "need a nonempty list of positive epsilons".into());
        }
    }
    errs
}

/// SHA-256 of the canonical serialization of the effective config.
pub fn config_hash(config: &RunConfig) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(canonical_bytes(config)))
}

/// Pretty JSON of the effective config; stored next to the outputs.
pub fn canonical_bytes(config: &RunConfig) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(config).expect("config serializes");
    bytes.push(b'\n');
    bytes
}

impl RunConfig {
    pub fn require_model(&self) -> Result<&ModelParams> {
        self.model.as_ref().ok_or_else(|| Error::config("model", "section required by this command"))
    }

    pub fn require_grid(&self) -> Result<&GridConfig> {
        self.grid.as_ref().ok_or_else(|| Error::config("grid", "section required by this command"))
    }
}
