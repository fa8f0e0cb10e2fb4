use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::LatticeParams;
use crate::propagator::{EvolutionSchedule, InitialState};

/// Environment variable holding the default output root.
pub const OUTPUT_ROOT_ENV: &str = "HNWALK_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "hnwalk-output";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "delta")]
    Delta,
    U,
    F,
}

impl SweepParameter {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "delta" => Some(SweepParameter::Delta),
            "U" => Some(SweepParameter::U),
            "F" => Some(SweepParameter::F),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Delta => "delta",
            SweepParameter::U => "U",
            SweepParameter::F => "F",
        }
    }

    pub fn apply(&self, params: LatticeParams, value: f64) -> LatticeParams {
        match self {
            SweepParameter::Delta => params.with_delta(value),
            SweepParameter::U => params.with_interaction(value),
            SweepParameter::F => params.with_tilt(value),
        }
    }

    pub fn read(&self, params: &LatticeParams) -> f64 {
        match self {
            SweepParameter::Delta => params.delta,
            SweepParameter::U => params.interaction,
            SweepParameter::F => params.tilt,
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfiOptions {
    /// Finite-difference step in `F`; default `max(|F|, 1) * 1e-3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Power-law fit window; default `[0.5, T_B / 2]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSelection {
    #[serde(default = "yes")]
    pub density: bool,
    /// Split the density into singly and doubly occupied parts.
    #[serde(default)]
    pub decomposition: bool,
    #[serde(default)]
    pub correlator: bool,
    /// Snapshot time for the exported correlator; the last snapshot if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlator_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qfi: Option<QfiOptions>,
}

impl Default for ObservableSelection {
    fn default() -> Self {
        ObservableSelection {
            density: true,
            decomposition: false,
            correlator: false,
            correlator_time: None,
            qfi: None,
        }
    }
}

/// Declarative description of one experiment, read from TOML.
///
/// ```toml
/// name = "walk"
/// initial_state = "neighboring"
///
/// [params]
/// L = 40
/// N = 2
/// delta = 0.04
/// U = 2.0
///
/// [schedule]
/// t_max = 10.0
/// n_snapshots = 101
///
/// [observables]
/// correlator = true
///
/// [[sweep]]
/// parameter = "U"
/// values = [0.0, 5.0]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub initial_state: InitialState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Sweep points run concurrently on this many threads; 0 uses all cores.
    #[serde(default)]
    pub workers: usize,
    pub params: LatticeParams,
    pub schedule: EvolutionSchedule,
    #[serde(default)]
    pub observables: ObservableSelection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepAxis>,
}

/// One point of the sweep grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub params: LatticeParams,
    pub coordinates: Vec<(SweepParameter, f64)>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::config(error_path(&e), e.message()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        if p.sites < 2 {
            return Err(Error::config(
                "params.L",
                format!("must be at least 2, got {}", p.sites),
            ));
        }
        if !(1..=2).contains(&p.particles) {
            return Err(Error::config(
                "params.N",
                format!("must be 1 or 2, got {}", p.particles),
            ));
        }
        check_value("params.delta", SweepParameter::Delta, p.delta)?;
        check_value("params.U", SweepParameter::U, p.interaction)?;
        check_value("params.F", SweepParameter::F, p.tilt)?;
        if self.initial_state.required_particles() != p.particles {
            return Err(Error::config(
                "initial_state",
                format!(
                    "`{}` needs N = {}, params.N = {}",
                    self.initial_state.name(),
                    self.initial_state.required_particles(),
                    p.particles
                ),
            ));
        }

        let s = &self.schedule;
        if !(s.t_max > 0.0 && s.t_max.is_finite()) {
            return Err(Error::config(
                "schedule.t_max",
                format!("must be positive, got {}", s.t_max),
            ));
        }
        if s.n_snapshots < 2 {
            return Err(Error::config(
                "schedule.n_snapshots",
                format!("need at least 2, got {}", s.n_snapshots),
            ));
        }
        if let Some(dt) = s.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::config(
                    "schedule.dt",
                    format!("must be positive, got {dt}"),
                ));
            }
        }

        let o = &self.observables;
        if p.particles == 1 && (o.correlator || o.decomposition) {
            let field = if o.correlator {
                "observables.correlator"
            } else {
                "observables.decomposition"
            };
            return Err(Error::config(field, "needs N = 2"));
        }
        if let Some(t) = o.correlator_time {
            if !(0.0..=s.t_max).contains(&t) {
                return Err(Error::config(
                    "observables.correlator_time",
                    format!("{t} is outside [0, {}]", s.t_max),
                ));
            }
        }
        if let Some(q) = &o.qfi {
            if let Some(eps) = q.epsilon {
                if !(eps > 0.0 && eps.is_finite()) {
                    return Err(Error::config(
                        "observables.qfi.epsilon",
                        format!("must be positive, got {eps}"),
                    ));
                }
            }
            if let Some([a, b]) = q.window {
                if !(a > 0.0 && b > a && b.is_finite()) {
                    return Err(Error::config(
                        "observables.qfi.window",
                        format!("need 0 < start < end, got [{a}, {b}]"),
                    ));
                }
            }
        }

        for (k, axis) in self.sweep.iter().enumerate() {
            let path = format!("sweep[{k}].values");
            if axis.values.is_empty() {
                return Err(Error::config(path, "empty value list"));
            }
            for v in &axis.values {
                check_value(&path, axis.parameter, *v)?;
            }
            if self.sweep[..k]
                .iter()
                .any(|a| a.parameter == axis.parameter)
            {
                return Err(Error::config(
                    format!("sweep[{k}].parameter"),
                    format!("`{}` swept twice", axis.parameter),
                ));
            }
        }
        Ok(())
    }

    /// Cartesian product of the sweep axes, first axis outermost.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut points = vec![SweepPoint {
            label: String::new(),
            params: self.params,
            coordinates: Vec::new(),
        }];
        for axis in &self.sweep {
            points = points
                .into_iter()
                .flat_map(|pt| {
                    axis.values.iter().map(move |&v| {
                        let mut coordinates = pt.coordinates.clone();
                        coordinates.push((axis.parameter, v));
                        SweepPoint {
                            label: String::new(),
                            params: axis.parameter.apply(pt.params, v),
                            coordinates,
                        }
                    })
                })
                .collect();
        }
        for pt in &mut points {
            pt.label = if pt.coordinates.is_empty() {
                "base".to_string()
            } else {
                pt.coordinates
                    .iter()
                    .map(|(p, v)| format!("{p}={v}"))
                    .collect::<Vec<_>>()
                    .join("_")
            };
        }
        points
    }

    /// `output_dir` if set, else `$HNWALK_OUTPUT_ROOT/<name>`.
    pub fn output_root(&self) -> PathBuf {
        if let Some(dir) = &self.output_dir {
            return dir.clone();
        }
        let root = std::env::var_os(OUTPUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
        root.join(self.name.as_deref().unwrap_or("run"))
    }

    /// Apply `key=value` overrides, then re-validate.
    ///
    /// Keys are dotted paths into the TOML document (`params.U=5`,
    /// `observables.qfi.epsilon=1e-4`). `sweep.<delta|U|F>=a,b,c` replaces
    /// that axis and an empty list removes it.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut doc = toml::Value::try_from(self).map_err(|e| Error::config("", e.to_string()))?;
        for raw in overrides {
            apply_override(&mut doc, raw.as_ref())?;
        }
        let config: ExperimentConfig = doc
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(error_path(&e), e.message()))?;
        config.validate()?;
        Ok(config)
    }
}

fn check_value(path: &str, parameter: SweepParameter, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::config(path, format!("value {v} is not finite")));
    }
    if parameter == SweepParameter::Delta && v.abs() >= 1.0 {
        return Err(Error::config(
            path,
            format!("|delta| must be below 1, got {v}"),
        ));
    }
    Ok(())
}

fn error_path(e: &toml::de::Error) -> String {
    // toml reports spans, not key paths; quote the offending key when present
    let msg = e.message();
    match (msg.find('`'), msg.rfind('`')) {
        (Some(a), Some(b)) if b > a + 1 => msg[a + 1..b].to_string(),
        _ => "<config>".to_string(),
    }
}

fn parse_scalar(raw: &str) -> toml::Value {
    let parsed = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"));
    parsed.unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(doc: &mut toml::Value, raw: &str) -> Result<()> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| Error::config(raw, "override must look like key=value"))?;
    let key = key.trim();
    let value = value.trim();
    let root = doc
        .as_table_mut()
        .ok_or_else(|| Error::config(key, "config is not a table"))?;

    if let Some(name) = key.strip_prefix("sweep.") {
        let parameter = SweepParameter::parse(name)
            .ok_or_else(|| Error::config(key, "sweep parameter must be one of delta, U, F"))?;
        let values = if value.is_empty() {
            Vec::new()
        } else {
            value
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::config(key, format!("`{v}` is not a number")))
                })
                .collect::<Result<Vec<f64>>>()?
        };
        let sweep = root
            .entry("sweep")
            .or_insert_with(|| toml::Value::Array(Vec::new()));
        let axes = sweep
            .as_array_mut()
            .ok_or_else(|| Error::config("sweep", "not an array"))?;
        let position = axes
            .iter()
            .position(|a| a.get("parameter").and_then(|p| p.as_str()) == Some(parameter.name()));
        let entry = toml::Value::try_from(SweepAxis {
            parameter,
            values: values.clone(),
        })
        .map_err(|e| Error::config(key, e.to_string()))?;
        match (position, values.is_empty()) {
            (Some(k), true) => {
                axes.remove(k);
            }
            (Some(k), false) => axes[k] = entry,
            (None, true) => {}
            (None, false) => axes.push(entry),
        }
        return Ok(());
    }

    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::config(key, "empty key"))?;
    let mut table = root;
    for part in parts {
        table = table
            .entry(part)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{part}` is not a table")))?;
    }
    table.insert(last.to_string(), parse_scalar(value));
    Ok(())
}
