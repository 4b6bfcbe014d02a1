//! Scenario documents: parsing, overrides and validation.

use std::fmt;
use std::path::Path;

use ringrad::{Polarization, RingSpec, Stack};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackKind {
    Single,
    ZStack,
    RStack,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Spectrum,
    Weightings,
    Trace,
    Farfield,
    Symmetry,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    R,
    #[serde(rename = "d_z")]
    DZ,
    S,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::R => "r",
            Self::DZ => "d_z",
            Self::S => "s",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n_theta: usize,
    pub n_phi: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            t_min: 1e-3,
            t_max: 20.0,
            n_points: 200,
        }
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_outputs() -> Vec<Output> {
    vec![
        Output::Spectrum,
        Output::Weightings,
        Output::Trace,
        Output::Farfield,
        Output::Symmetry,
    ]
}

fn default_grid() -> Grid {
    Grid {
        n_theta: 181,
        n_phi: 360,
    }
}

fn default_quadrature() -> Grid {
    Grid {
        n_theta: 64,
        n_phi: 128,
    }
}

fn default_min_separation() -> f64 {
    ringrad::geometry::DEFAULT_MIN_SEPARATION
}

fn default_stack() -> StackKind {
    StackKind::Single
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub name: String,
    pub n_phi: usize,
    pub r: f64,
    #[serde(default = "default_stack")]
    pub stack: StackKind,
    #[serde(default)]
    pub n_z: Option<usize>,
    #[serde(default)]
    pub d_z: Option<f64>,
    #[serde(default)]
    pub s: Option<usize>,
    pub polarization: Polarization,
    pub oam: Vec<i64>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Output>,
    #[serde(default = "default_grid")]
    pub grid: Grid,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    /// Sphere quadrature for hemisphere powers.
    #[serde(default = "default_quadrature")]
    pub quadrature: Grid,
    #[serde(default = "default_min_separation")]
    pub min_separation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn warning(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
        }
    }

    fn error(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// One point of a sweep (or the unswept base scenario).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub label: String,
    pub axis: Option<SweepAxis>,
    pub value: Option<f64>,
    pub spec: RingSpec,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self, CliError> {
        serde_json::from_value(value).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Reads a config file and applies `KEY=VALUE` overrides before decoding.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        let mut value: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        // Expand defaults first so `grid.n_theta=...` works on a config without a grid.
        if let Ok(full) = Self::from_value(value.clone()) {
            value = serde_json::to_value(full).expect("config serializes");
        }
        for item in overrides {
            apply_override(&mut value, item)?;
        }
        Self::from_value(value)
    }

    fn ring_spec(&self, r: f64, d_z: Option<f64>, s: Option<usize>) -> RingSpec {
        let stack = match self.stack {
            StackKind::Single => Stack::Single,
            StackKind::ZStack => Stack::ZStack {
                n_z: self.n_z.unwrap_or(0),
                d_z: d_z.unwrap_or(f64::NAN),
            },
            StackKind::RStack => Stack::RStack { s: s.unwrap_or(0) },
        };
        RingSpec {
            n_phi: self.n_phi,
            radius: r,
            stack,
        }
    }

    /// Ring specs for every sweep value, in the order given.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        match &self.sweep {
            None => vec![SweepPoint {
                label: "base".into(),
                axis: None,
                value: None,
                spec: self.ring_spec(self.r, self.d_z, self.s),
            }],
            Some(sweep) => sweep
                .values
                .iter()
                .map(|&v| {
                    let spec = match sweep.axis {
                        SweepAxis::R => self.ring_spec(v, self.d_z, self.s),
                        SweepAxis::DZ => self.ring_spec(self.r, Some(v), self.s),
                        SweepAxis::S => self.ring_spec(self.r, self.d_z, Some(v as usize)),
                    };
                    SweepPoint {
                        label: format!("{}_{}", sweep.axis.as_str(), v),
                        axis: Some(sweep.axis),
                        value: Some(v),
                        spec,
                    }
                })
                .collect(),
        }
    }

    pub fn wants(&self, output: Output) -> bool {
        self.outputs.contains(&output)
    }
}

/// Sets the value at a dotted `KEY` path. The right-hand side is read as JSON
/// when it parses, otherwise as a plain string.
pub fn apply_override(root: &mut Value, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Parse(format!("override `{item}` is not KEY=VALUE")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Parse(format!("override `{item}` has an empty key")));
    }
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = match node {
            Value::Object(map) => map,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().unwrap()
            }
            _ => {
                return Err(CliError::Parse(format!(
                    "override `{key}`: `{}` is not an object",
                    parts[..i].join(".")
                )))
            }
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("split always yields at least one part")
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Checks a decoded config. Never fails; problems come back as diagnostics,
/// and any `Error` diagnostic blocks a run.
pub fn validate(config: &ScenarioConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if config.schema_version != SCHEMA_VERSION {
        out.push(Diagnostic::error(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            config.schema_version
        )));
    }
    if config.name.is_empty()
        || config.name.contains(['/', '\\'])
        || config.name == "."
        || config.name == ".."
    {
        out.push(Diagnostic::error(format!("invalid scenario name `{}`", config.name)));
    }
    if config.n_phi == 0 {
        out.push(Diagnostic::error("n_phi must be at least 1"));
    }
    if !positive(config.r) {
        out.push(Diagnostic::error(format!("r must be positive, got {}", config.r)));
    }

    let swept = config.sweep.as_ref().map(|s| s.axis);
    match config.stack {
        StackKind::Single => {
            if config.d_z.is_some() {
                out.push(Diagnostic::warning("d_z ignored for a single ring"));
            }
            if config.n_z.is_some() {
                out.push(Diagnostic::warning("n_z ignored for a single ring"));
            }
            if config.s.is_some() {
                out.push(Diagnostic::warning("s ignored for a single ring"));
            }
        }
        StackKind::ZStack => {
            match config.n_z {
                None => out.push(Diagnostic::error("z_stack requires n_z")),
                Some(0) => out.push(Diagnostic::error("n_z must be at least 1")),
                Some(_) => {}
            }
            if swept != Some(SweepAxis::DZ) {
                match config.d_z {
                    None => out.push(Diagnostic::error("z_stack requires d_z")),
                    Some(d) if !positive(d) => {
                        out.push(Diagnostic::error(format!("d_z must be positive, got {d}")))
                    }
                    Some(_) => {}
                }
            }
            if config.s.is_some() {
                out.push(Diagnostic::warning("s ignored for a z_stack"));
            }
        }
        StackKind::RStack => {
            if swept != Some(SweepAxis::S) {
                match config.s {
                    None => out.push(Diagnostic::error("r_stack requires s")),
                    Some(0) => out.push(Diagnostic::error("s must be at least 1")),
                    Some(_) => {}
                }
            }
            if config.d_z.is_some() {
                out.push(Diagnostic::warning("d_z ignored for an r_stack"));
            }
            if config.n_z.is_some() {
                out.push(Diagnostic::warning("n_z ignored for an r_stack"));
            }
        }
    }

    if let Some(sweep) = &config.sweep {
        if sweep.values.is_empty() {
            out.push(Diagnostic::error("sweep has no values"));
        }
        match sweep.axis {
            SweepAxis::DZ if config.stack != StackKind::ZStack => {
                out.push(Diagnostic::error("d_z sweep requires stack z_stack"))
            }
            SweepAxis::S if config.stack != StackKind::RStack => {
                out.push(Diagnostic::error("s sweep requires stack r_stack"))
            }
            _ => {}
        }
        for &v in &sweep.values {
            let ok = match sweep.axis {
                SweepAxis::S => v >= 1.0 && v.fract() == 0.0,
                _ => positive(v),
            };
            if !ok {
                out.push(Diagnostic::error(format!(
                    "invalid {} sweep value {v}",
                    sweep.axis.as_str()
                )));
            }
        }
        let mut sorted = sweep.values.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            out.push(Diagnostic::error("sweep values must be distinct"));
        }
    }

    if config.oam.is_empty() {
        out.push(Diagnostic::error("oam list is empty; give at least one l"));
    }
    if config.n_phi > 0 {
        let n = config.n_phi as i64;
        let mut seen = std::collections::BTreeSet::new();
        for &l in &config.oam {
            if l < 0 || l > n {
                out.push(Diagnostic::warning(format!(
                    "l = {l} reduced mod N_φ to {}",
                    l.rem_euclid(n)
                )));
            }
            if !seen.insert(l) {
                out.push(Diagnostic::error(format!("l = {l} listed twice")));
            }
        }
    }

    if config.outputs.is_empty() {
        out.push(Diagnostic::warning("no outputs requested; only manifests are written"));
    }
    if config.grid.n_theta < 2 || config.grid.n_phi < 2 {
        out.push(Diagnostic::error(format!(
            "grid must be at least 2x2, got {}x{}",
            config.grid.n_theta, config.grid.n_phi
        )));
    }
    if config.wants(Output::Symmetry) && config.n_phi.is_multiple_of(4) && !config.grid.n_phi.is_multiple_of(4) {
        out.push(Diagnostic::error(format!(
            "symmetry output needs a grid n_phi divisible by 4, got {}",
            config.grid.n_phi
        )));
    }
    if config.quadrature.n_theta == 0 || config.quadrature.n_phi == 0 {
        out.push(Diagnostic::error("quadrature sizes must be positive"));
    }
    let t = config.time;
    if !(positive(t.t_min) && t.t_max.is_finite() && t.t_max > t.t_min && t.n_points >= 2) {
        out.push(Diagnostic::error(format!(
            "time grid needs 0 < t_min < t_max and n_points ≥ 2, got {} .. {} with {} points",
            t.t_min, t.t_max, t.n_points
        )));
    }
    if !positive(config.min_separation) {
        out.push(Diagnostic::error("min_separation must be positive"));
    }

    if !out.iter().any(Diagnostic::is_error) {
        for point in config.sweep_points() {
            if let Err(e) = point.spec.validate() {
                out.push(Diagnostic::error(format!("{}: {e}", point.label)));
            }
        }
    }
    out
}
