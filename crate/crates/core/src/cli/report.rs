//! Machine-readable reports. Every number carries its unit.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::config::TrapConfig;
use super::units::{de_number, ser_number};
use crate::io::fmt_number;

/// A derived number with its unit; `null` when not applicable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    #[serde(serialize_with = "ser_opt", deserialize_with = "de_opt")]
    pub value: Option<f64>,
    pub unit: String,
}

impl Measure {
    fn unit(unit: &str) -> Self {
        Measure { value: None, unit: unit.to_string() }
    }

    /// Stores `value`, normalizing −0 to 0.
    pub fn set(&mut self, value: f64) {
        self.value = Some(value + 0.0);
    }
}

fn ser_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_number(v, s),
        None => s.serialize_none(),
    }
}

fn de_opt<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    struct Wrap(#[serde(deserialize_with = "de_number")] f64);
    Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
}

/// Command-line settings that affect the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub eta_limit: Measure,
    pub edge_threshold: Measure,
}

impl Settings {
    pub fn new(eta_limit: f64, edge_threshold: f64) -> Self {
        let mut s = Settings { eta_limit: Measure::unit("1"), edge_threshold: Measure::unit("1") };
        s.eta_limit.set(eta_limit);
        s.edge_threshold.set(edge_threshold);
        s
    }
}

/// Closed-form trap quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub rf_period: Measure,
    pub characteristic_energy: Measure,
    pub characteristic_energy_ev: Measure,
    pub a_x: Measure,
    pub q_x: Measure,
    pub a_y: Measure,
    pub q_y: Measure,
    pub beta_x: Measure,
    pub beta_y: Measure,
    pub stable: Option<bool>,
    pub pseudopotential_frequency: Measure,
    pub secular_frequency: Measure,
    pub radial_frequency: Measure,
    pub axial_frequency: Measure,
    pub limit_density: Measure,
    pub coupling_limit: Measure,
    pub cold_density_at_r0: Measure,
    pub rf_minimum_radius: Measure,
    pub adiabaticity_quarter_r0: Measure,
    pub adiabaticity_half_r0: Measure,
    pub adiabaticity_r0: Measure,
    pub adiabatic_radius: Measure,
    pub linear_density_unit: Measure,
}

impl Derived {
    pub fn empty() -> Self {
        Derived {
            rf_period: Measure::unit("s"),
            characteristic_energy: Measure::unit("J"),
            characteristic_energy_ev: Measure::unit("eV"),
            a_x: Measure::unit("1"),
            q_x: Measure::unit("1"),
            a_y: Measure::unit("1"),
            q_y: Measure::unit("1"),
            beta_x: Measure::unit("1"),
            beta_y: Measure::unit("1"),
            stable: None,
            pseudopotential_frequency: Measure::unit("Hz"),
            secular_frequency: Measure::unit("Hz"),
            radial_frequency: Measure::unit("Hz"),
            axial_frequency: Measure::unit("Hz"),
            limit_density: Measure::unit("m^-3"),
            coupling_limit: Measure::unit("1"),
            cold_density_at_r0: Measure::unit("m^-3"),
            rf_minimum_radius: Measure::unit("m"),
            adiabaticity_quarter_r0: Measure::unit("1"),
            adiabaticity_half_r0: Measure::unit("1"),
            adiabaticity_r0: Measure::unit("1"),
            adiabatic_radius: Measure::unit("m"),
            linear_density_unit: Measure::unit("m^-1"),
        }
    }
}

/// Matched and scaled cloud profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solver {
    pub kind: String,
    /// `gamma` or `alpha`.
    pub shape_name: String,
    pub shape: Measure,
    pub rho_max: Measure,
    pub peak_to_center: Measure,
    pub temperature: Measure,
    pub linear_density: Measure,
    pub central_density: Measure,
    pub peak_density: Measure,
    pub mean_density: Measure,
    pub debye_length: Measure,
    pub radius: Measure,
    pub coupling: Measure,
    pub indicative: bool,
    pub poisson_residual: Measure,
    pub complete: bool,
}

impl Solver {
    pub fn empty() -> Self {
        Solver {
            kind: String::new(),
            shape_name: String::new(),
            shape: Measure::unit("1"),
            rho_max: Measure::unit("1"),
            peak_to_center: Measure::unit("1"),
            temperature: Measure::unit("K"),
            linear_density: Measure::unit("m^-1"),
            central_density: Measure::unit("m^-3"),
            peak_density: Measure::unit("m^-3"),
            mean_density: Measure::unit("m^-3"),
            debye_length: Measure::unit("m"),
            radius: Measure::unit("m"),
            coupling: Measure::unit("1"),
            indicative: false,
            poisson_residual: Measure::unit("1"),
            complete: false,
        }
    }
}

/// Cold-cloud size against the adiabatic region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub linear_density: Measure,
    pub cold_limit_radius: Measure,
    pub cold_density_at_edge: Measure,
    pub adiabatic_radius: Measure,
    pub ratio: Measure,
    pub verdict: String,
}

impl Fit {
    pub fn empty() -> Self {
        Fit {
            linear_density: Measure::unit("m^-1"),
            cold_limit_radius: Measure::unit("m"),
            cold_density_at_edge: Measure::unit("m^-3"),
            adiabatic_radius: Measure::unit("m"),
            ratio: Measure::unit("1"),
            verdict: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs: TrapConfig,
    pub settings: Settings,
    pub derived: Derived,
    pub solver: Option<Solver>,
    pub fit: Option<Fit>,
    pub warnings: Vec<String>,
}

/// A flattened scalar: dotted path, rendered value and unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalar {
    pub path: String,
    pub value: String,
    pub unit: String,
}

impl Scalar {
    /// Column name, with the unit in brackets when there is one.
    pub fn column(&self) -> String {
        if self.unit.is_empty() {
            self.path.clone()
        } else {
            format!("{}[{}]", self.path, self.unit)
        }
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.as_f64().map(fmt_number).unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn flatten_into(prefix: &str, v: &Value, out: &mut Vec<Scalar>) {
    match v {
        Value::Object(map) if map.len() == 2 && map.contains_key("value") && map.contains_key("unit") => {
            out.push(Scalar {
                path: prefix.to_string(),
                value: render(&map["value"]),
                unit: map["unit"].as_str().unwrap_or_default().to_string(),
            });
        }
        Value::Object(map) => {
            for (k, child) in map {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_into(&path, child, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten_into(&format!("{prefix}.{i}"), child, out);
            }
        }
        scalar => out.push(Scalar { path: prefix.to_string(), value: render(scalar), unit: String::new() }),
    }
}

/// All scalars of a serializable value, in field order.
pub fn flatten<T: Serialize>(value: &T, prefix: &str) -> Vec<Scalar> {
    let mut out = Vec::new();
    flatten_into(prefix, &serde_json::to_value(value).expect("reports serialize"), &mut out);
    out
}

impl Report {
    /// Result scalars (everything except the input echo and warnings).
    pub fn result_scalars(&self) -> Vec<Scalar> {
        let mut out = flatten(&self.derived, "derived");
        out.extend(flatten(self.solver.as_ref().unwrap_or(&Solver::empty()), "solver"));
        out.extend(flatten(self.fit.as_ref().unwrap_or(&Fit::empty()), "fit"));
        out
    }

    /// Column names matching [`Report::result_scalars`] for any report.
    pub fn result_columns() -> Vec<String> {
        let mut out = flatten(&Derived::empty(), "derived");
        out.extend(flatten(&Solver::empty(), "solver"));
        out.extend(flatten(&Fit::empty(), "fit"));
        out.iter().map(Scalar::column).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// Long-format CSV `section,quantity,value,unit`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["section", "quantity", "value", "unit"]).expect("in-memory write");
        let sections: [(&str, Vec<Scalar>); 5] = [
            ("inputs", flatten(&self.inputs, "")),
            ("settings", flatten(&self.settings, "")),
            ("derived", flatten(&self.derived, "")),
            ("solver", self.solver.as_ref().map(|s| flatten(s, "")).unwrap_or_default()),
            ("fit", self.fit.as_ref().map(|f| flatten(f, "")).unwrap_or_default()),
        ];
        for (section, scalars) in sections {
            for s in scalars {
                w.write_record([section, &s.path, &s.value, &s.unit]).expect("in-memory write");
            }
        }
        for (i, msg) in self.warnings.iter().enumerate() {
            w.write_record(["warning", &i.to_string(), msg, ""]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// Aligned text table for terminals.
    pub fn to_table(&self) -> String {
        let mut out = format!("{} report for {}\n", self.command, self.inputs.ion.label);
        let mut section = |name: &str, scalars: Vec<Scalar>| {
            let shown: Vec<_> = scalars.into_iter().filter(|s| !s.value.is_empty()).collect();
            if shown.is_empty() {
                return;
            }
            out.push_str(&format!("\n[{name}]\n"));
            for s in shown {
                let unit = if s.unit == "1" { "" } else { s.unit.as_str() };
                out.push_str(format!("  {:<28} {} {unit}", s.path, s.value).trim_end());
                out.push('\n');
            }
        };
        section("derived", flatten(&self.derived, ""));
        if let Some(s) = &self.solver {
            section("solver", flatten(s, ""));
        }
        if let Some(f) = &self.fit {
            section("fit", flatten(f, ""));
        }
        if !self.warnings.is_empty() {
            out.push_str("\n[warnings]\n");
            for w in &self.warnings {
                out.push_str(&format!("  {w}\n"));
            }
        }
        out
    }
}
