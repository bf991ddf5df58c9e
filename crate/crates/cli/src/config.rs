//! Run configuration: a JSON document with `process`, `law`, `grid` and `run`
//! sections, loaded with located diagnostics and validated per command.

use std::fmt;
use std::path::Path;

use gbridge_core::compensator::Mode;
use gbridge_core::pathgen::{check_grid, ProcessParams, Sampler};
use gbridge_core::{LawSpec, MixingLaw};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Parsed configuration. Every field has a default except `law`, which only
/// the commands that need it require.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub process: ProcessParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub law: Option<LawSpec>,
    pub grid: GridSpec,
    pub run: RunOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            process: ProcessParams::default(),
            law: None,
            grid: GridSpec::default(),
            run: RunOptions::default(),
        }
    }
}

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Either an explicit list of times or `end` with `step` or `steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            end: Some(2.0),
            step: None,
            steps: Some(20),
            times: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpec {
    pub t: f64,
    pub x: f64,
    /// Realized stopping time, for stopped observations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    /// Ensemble size.
    pub paths: usize,
    pub sampler: Sampler,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationSpec>,
    /// Survival horizons reported by `filter`.
    pub horizons: Vec<f64>,
    pub quantiles: Vec<f64>,
    /// Prediction horizon `u` for `predict`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    pub density_points: usize,
    /// Observations within this distance of 1 count as stopped.
    pub stop_delta: f64,
    pub mode: Mode,
    /// Grid times at which `simulate` checks the stopped fraction.
    pub stopping_checks: Vec<f64>,
    /// Sample-size multiplier for `validate`.
    pub scale: f64,
    pub negative_controls: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sections: Option<Vec<String>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            paths: 1000,
            sampler: Sampler::Normalized,
            observation: None,
            horizons: Vec::new(),
            quantiles: vec![0.05, 0.5, 0.95],
            horizon: None,
            density_points: 100,
            stop_delta: gbridge_core::filter::DEFAULT_STOP_DELTA,
            mode: Mode::F,
            stopping_checks: Vec::new(),
            scale: 1.0,
            negative_controls: false,
            sections: None,
        }
    }
}

/// One problem with a configuration, located by field path and, when the
/// field appears in the source text, by line.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub field: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: ")?,
            (Some(l), None) => write!(f, "line {l}: ")?,
            _ => {}
        }
        if self.field.is_empty() || self.field == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "field `{}`: {}", self.field, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source_name: String,
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration {}", self.source_name)?;
        for d in &self.diagnostics {
            write!(f, "\n  {}: {d}", self.source_name)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Configuration together with the text it came from, used to locate fields.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub source_name: String,
    pub text: Option<String>,
}

impl LoadedConfig {
    pub fn defaults() -> Self {
        Self {
            config: RunConfig::default(),
            source_name: "<defaults>".into(),
            text: None,
        }
    }

    pub fn from_file(path: &Path) -> std::result::Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source_name: name.clone(),
            diagnostics: vec![Diagnostic {
                field: String::new(),
                line: None,
                column: None,
                message: format!("cannot read file: {e}"),
            }],
        })?;
        Self::from_str(&text, &name)
    }

    pub fn from_str(text: &str, source_name: &str) -> std::result::Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        match serde_path_to_error::deserialize::<_, RunConfig>(de) {
            Ok(config) => Ok(Self {
                config,
                source_name: source_name.into(),
                text: Some(text.into()),
            }),
            Err(e) => {
                let field = e.path().to_string();
                let inner = e.into_inner();
                let message = strip_position(&inner.to_string());
                Err(ConfigError {
                    source_name: source_name.into(),
                    diagnostics: vec![Diagnostic {
                        field,
                        line: Some(inner.line()),
                        column: Some(inner.column()),
                        message,
                    }],
                })
            }
        }
    }

    fn diagnostic(&self, field: &str, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            field: field.into(),
            line: self.text.as_deref().and_then(|t| locate(t, field)),
            column: None,
            message: message.into(),
        }
    }

    /// Checks the sections `command` uses and builds the runtime objects.
    pub fn validate(&self, command: Command) -> std::result::Result<Validated, ConfigError> {
        let cfg = &self.config;
        let mut diags = Vec::new();
        if let Err(e) = cfg.process.validate() {
            diags.push(self.diagnostic("process", e.to_string()));
        }
        let needs_law = command != Command::Validate;
        let law = match (&cfg.law, needs_law) {
            (Some(spec), _) => match spec.build() {
                Ok(l) => Some(l),
                Err(e) => {
                    diags.push(self.diagnostic("law", e.to_string()));
                    None
                }
            },
            (None, true) => {
                diags.push(self.diagnostic("law", "missing section; this command needs a mixing law"));
                None
            }
            (None, false) => None,
        };
        let grid = match self.grid(&mut diags) {
            Some(g) if matches!(command, Command::Simulate | Command::Compensate) => Some(g),
            _ => None,
        };
        let run = &cfg.run;
        if matches!(command, Command::Simulate | Command::Compensate) && run.paths == 0 {
            diags.push(self.diagnostic("run.paths", "must be at least 1"));
        }
        if let Sampler::Jumps { epsilon, .. } = run.sampler {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                diags.push(self.diagnostic("run.sampler.epsilon", "must be positive and finite"));
            }
        }
        if !(run.stop_delta >= 0.0 && run.stop_delta < 1.0) {
            diags.push(self.diagnostic("run.stop_delta", "must lie in [0, 1)"));
        }
        if matches!(command, Command::Filter | Command::Predict) {
            match run.observation {
                None => diags.push(self.diagnostic("run.observation", "missing; give t and x (and tau when stopped)")),
                Some(o) => {
                    if !(o.t >= 0.0 && o.t.is_finite()) {
                        diags.push(self.diagnostic("run.observation.t", "must be finite and >= 0"));
                    }
                    if !(0.0..=1.0).contains(&o.x) {
                        diags.push(self.diagnostic("run.observation.x", "must lie in [0, 1]"));
                    }
                    if let Some(tau) = o.tau {
                        if !(tau > 0.0 && tau <= o.t) {
                            diags.push(self.diagnostic("run.observation.tau", "must lie in (0, t]"));
                        }
                    }
                }
            }
        }
        if command == Command::Filter {
            for (i, &q) in run.quantiles.iter().enumerate() {
                if !(q > 0.0 && q <= 1.0) {
                    diags.push(self.diagnostic("run.quantiles", format!("entry {i} = {q} not in (0, 1]")));
                }
            }
            if run.horizons.iter().any(|u| !u.is_finite()) {
                diags.push(self.diagnostic("run.horizons", "entries must be finite"));
            }
        }
        if command == Command::Predict {
            match (run.horizon, run.observation) {
                (None, _) => diags.push(self.diagnostic("run.horizon", "missing prediction horizon u")),
                (Some(u), Some(o)) if !(u > o.t && u.is_finite()) => {
                    diags.push(self.diagnostic("run.horizon", format!("u = {u} must exceed t = {}", o.t)))
                }
                _ => {}
            }
            if run.density_points == 0 {
                diags.push(self.diagnostic("run.density_points", "must be at least 1"));
            }
        }
        if command == Command::Simulate {
            if let Some(g) = &grid {
                for &t in &run.stopping_checks {
                    if !g.contains(&t) {
                        diags.push(self.diagnostic("run.stopping_checks", format!("{t} is not a grid time")));
                    }
                }
            }
        }
        if command == Command::Validate {
            if !(run.scale > 0.0 && run.scale.is_finite()) {
                diags.push(self.diagnostic("run.scale", "must be positive"));
            }
            if let Some(sections) = &run.sections {
                for s in sections {
                    if !gbridge_core::harness::SUITE_SECTIONS.contains(&s.as_str()) {
                        diags.push(self.diagnostic(
                            "run.sections",
                            format!("unknown section '{s}'; known: {}", gbridge_core::harness::SUITE_SECTIONS.join(", ")),
                        ));
                    }
                }
            }
        }
        if !diags.is_empty() {
            return Err(ConfigError {
                source_name: self.source_name.clone(),
                diagnostics: diags,
            });
        }
        Ok(Validated {
            law,
            grid: grid.unwrap_or_default(),
        })
    }

    fn grid(&self, diags: &mut Vec<Diagnostic>) -> Option<Vec<f64>> {
        let g = &self.config.grid;
        let grid = match (&g.times, g.end, g.step, g.steps) {
            (Some(times), None, None, None) => times.clone(),
            (None, Some(end), step, steps) => {
                if !(end > 0.0 && end.is_finite()) {
                    diags.push(self.diagnostic("grid.end", "must be positive and finite"));
                    return None;
                }
                let n = match (step, steps) {
                    (Some(h), None) if h > 0.0 && h.is_finite() => {
                        let k = (end / h).round();
                        if ((k * h) - end).abs() > 1e-9 * end {
                            diags.push(self.diagnostic("grid.step", format!("{h} does not divide end {end}")));
                            return None;
                        }
                        k as usize
                    }
                    (None, Some(k)) if k > 0 => k,
                    (Some(_), Some(_)) => {
                        diags.push(self.diagnostic("grid", "give one of step and steps"));
                        return None;
                    }
                    (Some(_), None) => {
                        diags.push(self.diagnostic("grid.step", "must be positive"));
                        return None;
                    }
                    (None, Some(_)) => {
                        diags.push(self.diagnostic("grid.steps", "must be at least 1"));
                        return None;
                    }
                    (None, None) => {
                        diags.push(self.diagnostic("grid", "give step or steps with end"));
                        return None;
                    }
                };
                if n > 1_000_000 {
                    diags.push(self.diagnostic("grid", format!("{n} steps is more than 1000000")));
                    return None;
                }
                gbridge_core::pathgen::uniform_grid(end, n)
            }
            _ => {
                diags.push(self.diagnostic("grid", "give either times, or end with step or steps"));
                return None;
            }
        };
        if let Err(e) = check_grid(&grid) {
            diags.push(self.diagnostic("grid.times", e.to_string()));
            return None;
        }
        Some(grid)
    }
}

/// Runtime objects built from a valid configuration.
#[derive(Debug, Clone)]
pub struct Validated {
    pub law: Option<MixingLaw>,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Filter,
    Predict,
    Compensate,
    Validate,
}

impl RunConfig {
    /// Canonical serialization; the basis of the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// serde_json appends " at line L column C"; the diagnostic carries those.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Line of the last component of a dotted field path, following the
/// components in order through the text.
fn locate(text: &str, field: &str) -> Option<usize> {
    let mut pos = 0;
    for part in field.split('.') {
        let key = format!("\"{part}\"");
        pos += text[pos..].find(&key)?;
    }
    Some(text[..pos].matches('\n').count() + 1)
}
