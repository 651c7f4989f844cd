//! Trap configuration files: TOML with mandatory unit suffixes.
//!
//! ```toml
//! [ion]
//! charge = "1 e"
//! mass = "40 u"
//!
//! [trap]
//! order = 4
//! r0 = "1 cm"
//! rf_amplitude = "400 V"
//! rf_frequency = "1 MHz"
//!
//! [cloud]
//! temperature = "300 K"
//! linear_density = "4.2e4 /mm"
//! ```

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Spanned, Value};

use super::units::{Dimension, Quantity};
use super::CliError;
use crate::dynamics::{IntegratorControl, MotionModel, PhaseState};
use crate::model::{AxialConfinement, IonSpecies, LinearTrap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonInput {
    pub label: String,
    pub charge: Quantity,
    pub mass: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapInput {
    /// Pole-pair count k (2 for a quadrupole).
    pub order: u32,
    pub r0: Quantity,
    pub rf_amplitude: Quantity,
    /// Ω/2π.
    pub rf_frequency: Quantity,
    pub static_offset: Quantity,
    pub rf_phase: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxialInput {
    pub end_voltage: Quantity,
    pub kappa: f64,
    pub z0: Quantity,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CloudInput {
    pub temperature: Option<Quantity>,
    pub linear_density: Option<Quantity>,
    /// ω_x/2π override for quadrupole scaling.
    pub secular_frequency: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryInput {
    pub model: MotionModel,
    pub position: [Quantity; 3],
    pub velocity: [Quantity; 3],
    pub duration: Quantity,
    /// Start on the micromotion orbit belonging to the given secular state.
    pub micromotion: bool,
    pub samples_per_rf_period: usize,
    pub rtol: f64,
}

/// A validated configuration, echoing the values in the units they were
/// written in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub ion: IonInput,
    pub trap: TrapInput,
    pub axial: Option<AxialInput>,
    pub cloud: Option<CloudInput>,
    pub trajectory: Option<TrajectoryInput>,
}

fn si(q: &Quantity, dim: Dimension) -> f64 {
    q.si(dim).expect("units are checked at load time")
}

impl TrapConfig {
    pub fn ion(&self) -> crate::Result<IonSpecies> {
        IonSpecies::new(si(&self.ion.charge, Dimension::Charge), si(&self.ion.mass, Dimension::Mass), &self.ion.label)
    }

    pub fn trap(&self) -> crate::Result<LinearTrap> {
        let t = &self.trap;
        let mut trap = LinearTrap::new(
            t.order,
            si(&t.r0, Dimension::Length),
            si(&t.rf_amplitude, Dimension::Voltage),
            2.0 * std::f64::consts::PI * si(&t.rf_frequency, Dimension::Frequency),
        )?
        .with_static_offset(si(&t.static_offset, Dimension::Voltage))?
        .with_rf_phase(si(&t.rf_phase, Dimension::Angle));
        if let Some(ax) = &self.axial {
            trap = trap.with_axial(AxialConfinement::new(
                si(&ax.end_voltage, Dimension::Voltage),
                ax.kappa,
                si(&ax.z0, Dimension::Length),
            )?);
        }
        Ok(trap)
    }

    pub fn temperature(&self) -> Option<f64> {
        self.cloud.as_ref()?.temperature.as_ref().map(|q| si(q, Dimension::Temperature))
    }

    /// N/2L in ions per meter.
    pub fn linear_density(&self) -> Option<f64> {
        self.cloud.as_ref()?.linear_density.as_ref().map(|q| si(q, Dimension::LinearDensity))
    }

    /// ω_x override in rad/s.
    pub fn secular_override(&self) -> Option<f64> {
        self.cloud
            .as_ref()?
            .secular_frequency
            .as_ref()
            .map(|q| 2.0 * std::f64::consts::PI * si(q, Dimension::Frequency))
    }

    /// Initial state, duration (s) and integrator settings.
    pub fn trajectory_setup(&self) -> Option<(PhaseState, f64, IntegratorControl)> {
        let t = self.trajectory.as_ref()?;
        let p: Vec<f64> = t.position.iter().map(|q| si(q, Dimension::Length)).collect();
        let v: Vec<f64> = t.velocity.iter().map(|q| si(q, Dimension::Velocity)).collect();
        let init = PhaseState { t: 0.0, x: p[0], y: p[1], z: p[2], vx: v[0], vy: v[1], vz: v[2] };
        let control = IntegratorControl {
            rtol: t.rtol,
            samples_per_rf_period: t.samples_per_rf_period,
            ..Default::default()
        };
        Some((init, si(&t.duration, Dimension::Time), control))
    }
}

/// A configuration together with where each field was written.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: TrapConfig,
    pub origin: String,
    locations: HashMap<String, (usize, usize)>,
}

impl LoadedConfig {
    /// Validation error pointing at `path` when its location is known.
    pub fn error_at(&self, path: &str, reason: impl std::fmt::Display) -> CliError {
        match self.locations.get(path) {
            Some((line, col)) => CliError::validation(format!("{}:{line}:{col}: {path}: {reason}", self.origin)),
            None => CliError::validation(format!("{}: {path}: {reason}", self.origin)),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIon {
    label: Option<String>,
    charge: Spanned<Value>,
    mass: Spanned<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrap {
    order: Spanned<Value>,
    r0: Spanned<Value>,
    rf_amplitude: Spanned<Value>,
    rf_frequency: Spanned<Value>,
    static_offset: Option<Spanned<Value>>,
    rf_phase: Option<Spanned<Value>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxial {
    end_voltage: Spanned<Value>,
    kappa: Spanned<Value>,
    z0: Spanned<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCloud {
    temperature: Option<Spanned<Value>>,
    linear_density: Option<Spanned<Value>>,
    secular_frequency: Option<Spanned<Value>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrajectory {
    model: Option<Spanned<Value>>,
    position: Spanned<Value>,
    velocity: Option<Spanned<Value>>,
    duration: Spanned<Value>,
    micromotion: Option<Spanned<Value>>,
    samples_per_rf_period: Option<Spanned<Value>>,
    rtol: Option<Spanned<Value>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    ion: RawIon,
    trap: RawTrap,
    axial: Option<RawAxial>,
    cloud: Option<RawCloud>,
    trajectory: Option<RawTrajectory>,
}

struct Reader<'a> {
    origin: &'a str,
    source: &'a str,
    locations: HashMap<String, (usize, usize)>,
}

impl Reader<'_> {
    fn line_col(&self, span: Range<usize>) -> (usize, usize) {
        let before = &self.source[..span.start.min(self.source.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }

    fn fail(&self, path: &str, span: Range<usize>, reason: impl std::fmt::Display) -> CliError {
        let (line, col) = self.line_col(span);
        CliError::validation(format!("{}:{line}:{col}: {path}: {reason}", self.origin))
    }

    fn note(&mut self, path: &str, span: Range<usize>) {
        let at = self.line_col(span);
        self.locations.insert(path.to_string(), at);
    }

    fn quantity(&mut self, path: &str, v: &Spanned<Value>, dim: Dimension) -> Result<Quantity, CliError> {
        self.note(path, v.span());
        match v.get_ref() {
            Value::String(s) => Quantity::parse(s, dim).map_err(|e| self.fail(path, v.span(), e)),
            Value::Integer(_) | Value::Float(_) => Err(self.fail(
                path,
                v.span(),
                format!("missing unit; write the value as a string such as \"{} {}\"", v.get_ref(), dim_example(dim)),
            )),
            other => Err(self.fail(path, v.span(), format!("expected a {} such as \"1 {}\", got {}", dim.name(), dim_example(dim), other.type_str()))),
        }
    }

    fn opt_quantity(&mut self, path: &str, v: &Option<Spanned<Value>>, dim: Dimension, default: &str) -> Result<Quantity, CliError> {
        match v {
            Some(v) => self.quantity(path, v, dim),
            None => Ok(Quantity::parse(default, dim).expect("valid default")),
        }
    }

    fn number(&mut self, path: &str, v: &Spanned<Value>) -> Result<f64, CliError> {
        self.note(path, v.span());
        match v.get_ref() {
            Value::Integer(i) => Ok(*i as f64),
            Value::Float(f) => Ok(*f),
            other => Err(self.fail(path, v.span(), format!("expected a plain number, got {}", other.type_str()))),
        }
    }

    fn integer(&mut self, path: &str, v: &Spanned<Value>, min: i64) -> Result<i64, CliError> {
        self.note(path, v.span());
        match v.get_ref() {
            Value::Integer(i) if *i >= min => Ok(*i),
            Value::Integer(i) => Err(self.fail(path, v.span(), format!("must be >= {min}, got {i}"))),
            other => Err(self.fail(path, v.span(), format!("expected an integer, got {}", other.type_str()))),
        }
    }

    fn vector(&mut self, path: &str, v: &Spanned<Value>, dim: Dimension) -> Result<[Quantity; 3], CliError> {
        self.note(path, v.span());
        let Value::Array(items) = v.get_ref() else {
            return Err(self.fail(path, v.span(), "expected an array of three quantities"));
        };
        if items.len() != 3 {
            return Err(self.fail(path, v.span(), format!("expected three components, got {}", items.len())));
        }
        let mut out = Vec::with_capacity(3);
        for (i, item) in items.iter().enumerate() {
            let q = match item {
                Value::String(s) => Quantity::parse(s, dim),
                _ => Err(format!("component {i} must be a string with a {} unit", dim.name())),
            }
            .map_err(|e| self.fail(path, v.span(), e))?;
            out.push(q);
        }
        Ok(out.try_into().expect("three components"))
    }
}

fn dim_example(dim: Dimension) -> &'static str {
    match dim {
        Dimension::Length => "mm",
        Dimension::Voltage => "V",
        Dimension::Frequency => "MHz",
        Dimension::Mass => "u",
        Dimension::Charge => "e",
        Dimension::Temperature => "K",
        Dimension::LinearDensity => "/mm",
        Dimension::Time => "us",
        Dimension::Velocity => "m/s",
        Dimension::Angle => "rad",
    }
}

/// Config field holding the value a core constructor complained about.
fn config_path(core_field: &str) -> &str {
    match core_field {
        "trap.k" => "trap.order",
        "trap.v0" => "trap.rf_amplitude",
        "trap.omega" => "trap.rf_frequency",
        "trap.us" => "trap.static_offset",
        "axial.v_end" => "axial.end_voltage",
        other => other,
    }
}

/// Parses and validates configuration text. `origin` names the source in
/// error messages.
pub fn parse_config(source: &str, origin: &str) -> Result<LoadedConfig, CliError> {
    let raw: RawConfig =
        toml::from_str(source).map_err(|e| CliError::validation(format!("{origin}: {}", e.to_string().trim_end())))?;
    let mut r = Reader { origin, source, locations: HashMap::new() };

    let ion = IonInput {
        label: raw.ion.label.clone().unwrap_or_else(|| "ion".to_string()),
        charge: r.quantity("ion.charge", &raw.ion.charge, Dimension::Charge)?,
        mass: r.quantity("ion.mass", &raw.ion.mass, Dimension::Mass)?,
    };
    let order = r.integer("trap.order", &raw.trap.order, 2)?;
    let order = u32::try_from(order).map_err(|_| r.fail("trap.order", raw.trap.order.span(), "too large"))?;
    let trap = TrapInput {
        order,
        r0: r.quantity("trap.r0", &raw.trap.r0, Dimension::Length)?,
        rf_amplitude: r.quantity("trap.rf_amplitude", &raw.trap.rf_amplitude, Dimension::Voltage)?,
        rf_frequency: r.quantity("trap.rf_frequency", &raw.trap.rf_frequency, Dimension::Frequency)?,
        static_offset: r.opt_quantity("trap.static_offset", &raw.trap.static_offset, Dimension::Voltage, "0 V")?,
        rf_phase: r.opt_quantity("trap.rf_phase", &raw.trap.rf_phase, Dimension::Angle, "0 rad")?,
    };
    let axial = match &raw.axial {
        Some(a) => Some(AxialInput {
            end_voltage: r.quantity("axial.end_voltage", &a.end_voltage, Dimension::Voltage)?,
            kappa: r.number("axial.kappa", &a.kappa)?,
            z0: r.quantity("axial.z0", &a.z0, Dimension::Length)?,
        }),
        None => None,
    };
    let cloud = match &raw.cloud {
        Some(c) => {
            let mut opt = |path: &str, v: &Option<Spanned<Value>>, dim| v.as_ref().map(|v| r.quantity(path, v, dim)).transpose();
            Some(CloudInput {
                temperature: opt("cloud.temperature", &c.temperature, Dimension::Temperature)?,
                linear_density: opt("cloud.linear_density", &c.linear_density, Dimension::LinearDensity)?,
                secular_frequency: opt("cloud.secular_frequency", &c.secular_frequency, Dimension::Frequency)?,
            })
        }
        None => None,
    };
    let trajectory = match &raw.trajectory {
        Some(t) => {
            let model = match &t.model {
                None => MotionModel::Rf,
                Some(v) => {
                    r.note("trajectory.model", v.span());
                    match v.get_ref().as_str() {
                        Some("rf") => MotionModel::Rf,
                        Some("secular") => MotionModel::Secular,
                        _ => return Err(r.fail("trajectory.model", v.span(), "expected \"rf\" or \"secular\"")),
                    }
                }
            };
            let velocity = match &t.velocity {
                Some(v) => r.vector("trajectory.velocity", v, Dimension::Velocity)?,
                None => std::array::from_fn(|_| Quantity::new(0.0, "m/s")),
            };
            let micromotion = match &t.micromotion {
                None => false,
                Some(v) => {
                    r.note("trajectory.micromotion", v.span());
                    v.get_ref().as_bool().ok_or_else(|| r.fail("trajectory.micromotion", v.span(), "expected true or false"))?
                }
            };
            let defaults = IntegratorControl::default();
            let samples = match &t.samples_per_rf_period {
                Some(v) => r.integer("trajectory.samples_per_rf_period", v, 1)? as usize,
                None => defaults.samples_per_rf_period,
            };
            let rtol = match &t.rtol {
                Some(v) => r.number("trajectory.rtol", v)?,
                None => defaults.rtol,
            };
            Some(TrajectoryInput {
                model,
                position: r.vector("trajectory.position", &t.position, Dimension::Length)?,
                velocity,
                duration: r.quantity("trajectory.duration", &t.duration, Dimension::Time)?,
                micromotion,
                samples_per_rf_period: samples,
                rtol,
            })
        }
        None => None,
    };

    let loaded = LoadedConfig {
        config: TrapConfig { ion, trap, axial, cloud, trajectory },
        origin: origin.to_string(),
        locations: r.locations,
    };
    validate(&loaded)?;
    Ok(loaded)
}

fn validate(loaded: &LoadedConfig) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let core = |e: crate::Error| match e {
        crate::Error::InvalidParameter { field, reason } => loaded.error_at(config_path(field), reason),
        other => loaded.error_at("trap", other),
    };
    cfg.ion().map_err(core)?;
    cfg.trap().map_err(core)?;
    if let Some(t) = cfg.temperature() {
        if t <= 0.0 {
            return Err(loaded.error_at("cloud.temperature", "must be > 0"));
        }
    }
    if let Some(n) = cfg.linear_density() {
        if n <= 0.0 {
            return Err(loaded.error_at("cloud.linear_density", "must be > 0"));
        }
    }
    if let Some(w) = cfg.secular_override() {
        if w <= 0.0 {
            return Err(loaded.error_at("cloud.secular_frequency", "must be > 0"));
        }
        if cfg.trap.order != 2 {
            return Err(loaded.error_at("cloud.secular_frequency", "only applies to quadrupoles (order = 2)"));
        }
    }
    if let Some(t) = &cfg.trajectory {
        if !(si(&t.duration, Dimension::Time) > 0.0) {
            return Err(loaded.error_at("trajectory.duration", "must be > 0"));
        }
        if !(t.rtol > 0.0 && t.rtol < 1e-2) {
            return Err(loaded.error_at("trajectory.rtol", "must lie in (0, 1e-2)"));
        }
    }
    Ok(())
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: cannot read config: {e}", path.display())))?;
    parse_config(&source, &path.display().to_string())
}

/// Rebuilds a config from an echoed [`TrapConfig`], e.g. one read back from a report.
pub fn from_echo(config: &TrapConfig) -> Result<LoadedConfig, CliError> {
    let text = to_toml(config);
    parse_config(&text, "<echo>")
}

/// TOML text that parses back to `config`.
pub fn to_toml(config: &TrapConfig) -> String {
    let q = |q: &Quantity| Value::String(q.to_string());
    let mut root = toml::Table::new();
    let mut ion = toml::Table::new();
    ion.insert("label".into(), Value::String(config.ion.label.clone()));
    ion.insert("charge".into(), q(&config.ion.charge));
    ion.insert("mass".into(), q(&config.ion.mass));
    root.insert("ion".into(), Value::Table(ion));
    let t = &config.trap;
    let mut trap = toml::Table::new();
    trap.insert("order".into(), Value::Integer(t.order as i64));
    trap.insert("r0".into(), q(&t.r0));
    trap.insert("rf_amplitude".into(), q(&t.rf_amplitude));
    trap.insert("rf_frequency".into(), q(&t.rf_frequency));
    trap.insert("static_offset".into(), q(&t.static_offset));
    trap.insert("rf_phase".into(), q(&t.rf_phase));
    root.insert("trap".into(), Value::Table(trap));
    if let Some(a) = &config.axial {
        let mut ax = toml::Table::new();
        ax.insert("end_voltage".into(), q(&a.end_voltage));
        ax.insert("kappa".into(), Value::Float(a.kappa));
        ax.insert("z0".into(), q(&a.z0));
        root.insert("axial".into(), Value::Table(ax));
    }
    if let Some(c) = &config.cloud {
        let mut cl = toml::Table::new();
        for (key, v) in [("temperature", &c.temperature), ("linear_density", &c.linear_density), ("secular_frequency", &c.secular_frequency)] {
            if let Some(v) = v {
                cl.insert(key.into(), q(v));
            }
        }
        root.insert("cloud".into(), Value::Table(cl));
    }
    if let Some(tr) = &config.trajectory {
        let mut t = toml::Table::new();
        let model = match tr.model {
            MotionModel::Rf => "rf",
            MotionModel::Secular => "secular",
        };
        t.insert("model".into(), Value::String(model.into()));
        t.insert("position".into(), Value::Array(tr.position.iter().map(q).collect()));
        t.insert("velocity".into(), Value::Array(tr.velocity.iter().map(q).collect()));
        t.insert("duration".into(), q(&tr.duration));
        t.insert("micromotion".into(), Value::Boolean(tr.micromotion));
        t.insert("samples_per_rf_period".into(), Value::Integer(tr.samples_per_rf_period as i64));
        t.insert("rtol".into(), Value::Float(tr.rtol));
        root.insert("trajectory".into(), Value::Table(t));
    }
    toml::to_string(&root).expect("plain tables serialize")
}

/// Sets the value at a dotted `path` (for example `cloud.temperature`) in
/// configuration text, creating the table if needed.
pub fn with_field(source: &str, path: &str, value: Value) -> Result<String, CliError> {
    let mut root: toml::Table = source.parse().map_err(|e: toml::de::Error| CliError::validation(e.to_string()))?;
    let (table_name, key) = path
        .split_once('.')
        .ok_or_else(|| CliError::validation(format!("axis `{path}` must name a field as table.key")))?;
    let table = root
        .entry(table_name.to_string())
        .or_insert_with(|| Value::Table(toml::Table::new()))
        .as_table_mut()
        .ok_or_else(|| CliError::validation(format!("`{table_name}` is not a table")))?;
    table.insert(key.to_string(), value);
    toml::to_string(&root).map_err(|e| CliError::validation(e.to_string()))
}
