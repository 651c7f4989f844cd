//! Parameter sweeps over one configuration field.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value as Json;
use toml::Value;

use super::commands::{analyze, apply_overrides, to_json, write_file, Output};
use super::config::{parse_config, with_field, TrapConfig};
use super::report::Report;
use super::units::split_number;
use super::{Cli, CliError, CloudArgs, Format};
use crate::io::fmt_number;

/// A swept field and the values it takes, as config text.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub path: String,
    pub values: Vec<String>,
}

/// Parses `table.key=V1,V2,...` or `table.key=START..STOP:N[:log]`.
/// Range ends may carry a unit (`5 K..300 K:4`); an empty list or `N = 0`
/// gives no points.
pub fn parse_axis(spec: &str) -> Result<Axis, CliError> {
    let bad = |why: &str| CliError::validation(format!("--axis `{spec}`: {why}"));
    let (path, rest) = spec.split_once('=').ok_or_else(|| bad("expected table.key=VALUES"))?;
    let path = path.trim();
    if !path.contains('.') {
        return Err(bad("the field must be written as table.key"));
    }
    let rest = rest.trim();
    let values = if rest.is_empty() {
        Vec::new()
    } else if let Some((start, tail)) = rest.split_once("..") {
        let mut parts = tail.split(':');
        let stop = parts.next().unwrap_or_default();
        let n: usize = parts
            .next()
            .ok_or_else(|| bad("a range needs a point count, as in START..STOP:N"))?
            .trim()
            .parse()
            .map_err(|_| bad("the point count must be a non-negative integer"))?;
        let log = match parts.next().map(str::trim) {
            None | Some("lin") => false,
            Some("log") => true,
            Some(other) => return Err(bad(&format!("unknown spacing `{other}` (use lin or log)"))),
        };
        if parts.next().is_some() {
            return Err(bad("too many `:` fields"));
        }
        let end_error = |e: String| bad(if e.is_empty() { "range ends must be numbers" } else { &e });
        let (a, ua) = split_number(start).map_err(end_error)?;
        let (b, ub) = split_number(stop).map_err(end_error)?;
        let unit = match (ua, ub) {
            (u, "") | ("", u) => u,
            (u, v) if u == v => u,
            _ => return Err(bad("both range ends must use the same unit")),
        };
        if log && !(a > 0.0 && b > 0.0) {
            return Err(bad("log spacing needs positive ends"));
        }
        (0..n)
            .map(|i| {
                let x = if n == 1 {
                    a
                } else if i + 1 == n {
                    b
                } else {
                    let f = i as f64 / (n - 1) as f64;
                    if log {
                        a * (b / a).powf(f)
                    } else {
                        a + (b - a) * f
                    }
                };
                if unit.is_empty() {
                    fmt_number(x)
                } else {
                    format!("{} {unit}", fmt_number(x))
                }
            })
            .collect()
    } else {
        let items: Vec<String> = rest.split(',').map(|s| s.trim().to_string()).collect();
        if items.iter().any(String::is_empty) {
            return Err(bad("empty list item"));
        }
        items
    };
    Ok(Axis { path: path.to_string(), values })
}

/// TOML value for a sweep token: numbers with a unit become strings.
fn token_value(token: &str) -> Value {
    match token {
        "true" => Value::Boolean(true),
        "false" => Value::Boolean(false),
        _ => {
            if let Ok(i) = token.parse::<i64>() {
                Value::Integer(i)
            } else if let Ok(f) = token.parse::<f64>() {
                Value::Float(f)
            } else {
                Value::String(token.to_string())
            }
        }
    }
}

fn json_cell(text: &str) -> Json {
    match text {
        "" => Json::Null,
        "true" => Json::Bool(true),
        "false" => Json::Bool(false),
        _ => text
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .and_then(|x| serde_json::Number::from_f64(x).map(Json::Number))
            .unwrap_or_else(|| Json::String(text.to_string())),
    }
}

#[derive(Serialize)]
struct SweepDoc {
    axis: String,
    columns: Vec<String>,
    rows: Vec<Vec<Json>>,
}

pub(super) fn sweep_command(cli: &Cli, spec: &str, args: &CloudArgs) -> Result<Output, CliError> {
    let axis = parse_axis(spec)?;
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::validation("--config PATH is required for this command"))?;
    let source = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: cannot read config: {e}", path.display())))?;
    let overridden = [
        ("cloud.temperature", args.temperature.is_some()),
        ("cloud.linear_density", args.linear_density.is_some()),
    ];
    if overridden.iter().any(|(p, set)| *set && *p == axis.path) {
        return Err(CliError::validation(format!("the swept field {} is also set on the command line", axis.path)));
    }
    let configs: Vec<TrapConfig> = axis
        .values
        .iter()
        .map(|token| {
            let text = with_field(&source, &axis.path, token_value(token))?;
            let origin = format!("{} [{} = {token}]", path.display(), axis.path);
            let mut config = parse_config(&text, &origin)?.config;
            apply_overrides(&mut config, args)?;
            Ok(config)
        })
        .collect::<Result<_, CliError>>()?;

    let results: Vec<Result<Report, CliError>> = configs
        .par_iter()
        .map(|c| {
            let solve = c.temperature().is_some() && c.linear_density().is_some();
            analyze("sweep", c, cli.eta_lim, cli.edge_threshold, solve, cli.strict).map(|a| a.report)
        })
        .collect();

    let mut columns = vec!["index".to_string(), axis.path.clone(), "status".into(), "warnings".into()];
    columns.extend(Report::result_columns());
    let width = columns.len();
    let mut rows = Vec::with_capacity(results.len());
    let mut failed = 0;
    let mut unstable = None;
    for (i, (token, result)) in axis.values.iter().zip(&results).enumerate() {
        let mut row = vec![i.to_string(), token.clone()];
        match result {
            Ok(report) => {
                row.push("ok".into());
                row.push(report.warnings.join("; "));
                row.extend(report.result_scalars().into_iter().map(|s| s.value));
            }
            Err(e) => {
                failed += 1;
                if e.code == CliError::UNSTABLE && unstable.is_none() {
                    unstable = Some(format!("{} = {token}: {}", axis.path, e.message));
                }
                row.push(format!("error: {}", e.message));
                row.push(String::new());
            }
        }
        row.resize(width, String::new());
        rows.push(row);
    }

    let written = match cli.format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(&columns).expect("in-memory write");
            for row in &rows {
                w.write_record(row).expect("in-memory write");
            }
            let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input");
            write_file(&cli.out, "sweep.csv", &body)?
        }
        Format::Json => {
            let doc = SweepDoc {
                axis: axis.path.clone(),
                rows: rows
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .map(|(j, c)| if j == 1 || j == 2 { Json::String(c.clone()) } else { json_cell(c) })
                            .collect()
                    })
                    .collect(),
                columns,
            };
            write_file(&cli.out, "sweep.json", &to_json(&doc))?
        }
    };
    if let Some(msg) = unstable {
        return Err(CliError::unstable(format!("{msg}; table written to {}", written.display())));
    }
    let stdout = format!(
        "swept {} over {} points ({failed} failed)\nwrote {}\n",
        axis.path,
        axis.values.len(),
        written.display()
    );
    Ok(Output { stdout, warnings: Vec::new() })
}
