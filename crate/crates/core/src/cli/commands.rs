use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{load_config, LoadedConfig, TrapConfig};
use super::report::{Derived, Fit, Report, Settings, Solver};
use super::sweep;
use super::units::{Dimension, Num, Quantity};
use super::{Cli, CliError, CloudArgs, Command, Format};
use crate::constants::{mhz_to_angular, ELEMENTARY_CHARGE};
use crate::dynamics::{
    integrate_rf, integrate_secular, motional_spectrum, rf_initial_state, MotionModel, Spectrum, Trajectory,
};
use crate::fluid::{
    cold_limit_density, cold_limit_radius, quadrupole_limit_radius, solve_cloud, ProfileKind, ProfileOptions,
    ScaledCloud,
};
use crate::io::fmt_number;
use crate::model::{
    adiabaticity, axial_frequency_squared, beta_from_aq, characteristic_energy, coupling_limit, limit_density,
    linear_density_unit, mathieu_parameters, pseudopotential_frequency, rf_minimum_radius, IonSpecies,
    LinearTrap, RadialMinimum,
};

/// Text for stdout plus warnings for stderr.
pub(super) struct Output {
    pub stdout: String,
    pub warnings: Vec<String>,
}

/// Everything computed for one configuration.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: Report,
    pub cloud: Option<ScaledCloud>,
    /// Secular frequency ω_x (rad/s) used for quadrupole scaling.
    pub omega_x: Option<f64>,
    /// Why the operating point is unusable, if it is.
    pub unstable: Option<String>,
}

/// Builds the report for `config`. With `solve`, the cloud profile is
/// matched and scaled; this needs a temperature and a linear density.
/// With `strict`, an unstable operating point is an error.
pub fn analyze(
    command: &str,
    config: &TrapConfig,
    eta_limit: f64,
    edge_threshold: f64,
    solve: bool,
    strict: bool,
) -> Result<Analysis, CliError> {
    let ion = config.ion()?;
    let trap = config.trap()?;
    let temperature = config.temperature();
    let density = config.linear_density();
    let mut warnings = Vec::new();
    let mut unstable = None;
    let mut d = Derived::empty();

    d.rf_period.set(trap.rf_period());
    let ek = characteristic_energy(&trap, &ion).joules();
    d.characteristic_energy.set(ek);
    d.characteristic_energy_ev.set(ek / ELEMENTARY_CHARGE);
    let zero_drive = trap.v0() == 0.0;
    if zero_drive {
        warnings.push("RF amplitude is zero: no transverse confinement, all trap-strength quantities vanish".into());
    }
    let wz2 = axial_frequency_squared(&trap, &ion);
    if wz2 >= 0.0 {
        d.axial_frequency.set(wz2.sqrt() / TAU);
    } else {
        warnings.push("the end-electrode potential repels this species along the axis".into());
    }

    let mut omega_x = config.secular_override();
    if trap.is_quadrupole() {
        let p = mathieu_parameters(&trap, &ion)?;
        for (m, v) in [(&mut d.a_x, p.a_x), (&mut d.q_x, p.q_x), (&mut d.a_y, p.a_y), (&mut d.q_y, p.q_y)] {
            m.set(v);
        }
        let bx = beta_from_aq(p.a_x, p.q_x).ok();
        let by = beta_from_aq(p.a_y, p.q_y).ok();
        if let Some(b) = bx {
            d.beta_x.set(b);
        }
        if let Some(b) = by {
            d.beta_y.set(b);
        }
        let stable = bx.is_some() && by.is_some();
        d.stable = Some(stable);
        d.pseudopotential_frequency.set(pseudopotential_frequency(&trap, &ion)? / TAU);
        d.rf_minimum_radius.set(0.0);
        if !stable {
            let msg = format!(
                "unstable operating point: (a_x, q_x) = ({}, {}) lies outside the lowest stability region",
                fmt_number(p.a_x + 0.0),
                fmt_number(p.q_x)
            );
            warnings.push(msg.clone());
            unstable = Some(msg);
        } else {
            let w = bx.unwrap_or(0.0) * trap.omega() / 2.0;
            d.secular_frequency.set(w / TAU);
            let residual = w * w - wz2 / 2.0;
            if residual > 0.0 {
                d.radial_frequency.set(residual.sqrt() / TAU);
            } else if zero_drive {
                d.radial_frequency.set(0.0);
            } else {
                let msg = format!(
                    "unstable operating point: the axial field deconfines the ions radially \
                     (omega_x^2 - omega_z^2/2 = {} rad^2/s^2)",
                    fmt_number(residual)
                );
                warnings.push(msg.clone());
                unstable = Some(msg);
            }
            omega_x.get_or_insert(w);
        }
        if let Some(w) = omega_x {
            d.limit_density.set(limit_density(&ion, w));
            if let Some(t) = temperature {
                d.coupling_limit.set(coupling_limit(&ion, w, t));
            }
        }
    } else {
        d.cold_density_at_r0.set(cold_limit_density(&trap, &ion, trap.r0())?);
        match rf_minimum_radius(&trap, &ion) {
            RadialMinimum::Ring(r) => {
                d.rf_minimum_radius.set(r);
                if r >= trap.r0() {
                    let msg = format!(
                        "unstable operating point: the pseudopotential minimum ring ({} m) lies beyond r0",
                        fmt_number(r)
                    );
                    warnings.push(msg.clone());
                    unstable = Some(msg);
                } else {
                    warnings.push(format!(
                        "axial deconfinement moves the pseudopotential minimum onto a ring of radius {} m",
                        fmt_number(r)
                    ));
                }
            }
            _ => d.rf_minimum_radius.set(0.0),
        }
    }
    let r0 = trap.r0();
    d.adiabaticity_quarter_r0.set(adiabaticity(&trap, &ion, 0.25 * r0));
    d.adiabaticity_half_r0.set(adiabaticity(&trap, &ion, 0.5 * r0));
    d.adiabaticity_r0.set(adiabaticity(&trap, &ion, r0));
    let r_ad = crate::fluid::adiabatic_radius(&trap, &ion, eta_limit)?;
    d.adiabatic_radius.set(r_ad);
    if let Some(t) = temperature {
        d.linear_density_unit.set(linear_density_unit(&ion, t));
    }

    if strict {
        if let Some(msg) = &unstable {
            return Err(CliError::unstable(msg.clone()));
        }
    }

    let fit = match density {
        Some(_) if zero_drive => None,
        Some(n) => {
            let rm = if trap.is_quadrupole() {
                omega_x.map(|w| quadrupole_limit_radius(&ion, w, n))
            } else {
                Some(cold_limit_radius(&trap, &ion, n)?)
            };
            match rm {
                Some(rm) => Some(fit_section(&trap, &ion, n, rm, r_ad, &mut warnings)?),
                None => {
                    warnings.push("cold-limit radius needs a stable secular frequency".into());
                    None
                }
            }
        }
        None => None,
    };

    let mut cloud = None;
    let mut solver = None;
    if solve {
        let (Some(t), Some(n)) = (temperature, density) else {
            return Err(CliError::validation(format!(
                "`{command}` needs cloud.temperature and cloud.linear_density \
                 (set them in the config or pass --temperature and --linear-density)"
            )));
        };
        let opts = ProfileOptions::with_edge_threshold(edge_threshold);
        let c = solve_cloud(&trap, &ion, t, n, config.secular_override(), &opts)?;
        solver = Some(solver_section(&c));
        warnings.extend(c.warnings());
        if c.radius > trap.r0() {
            warnings.push(format!(
                "cloud radius {} m exceeds r0 = {} m: the cloud does not fit between the electrodes",
                fmt_number(c.radius),
                fmt_number(trap.r0())
            ));
        }
        cloud = Some(c);
    }

    let report = Report {
        command: command.to_string(),
        inputs: config.clone(),
        settings: Settings::new(eta_limit, edge_threshold),
        derived: d,
        solver,
        fit,
        warnings,
    };
    let omega_x = if trap.is_quadrupole() { omega_x } else { None };
    Ok(Analysis { report, cloud, omega_x, unstable })
}

fn fit_section(
    trap: &LinearTrap,
    ion: &IonSpecies,
    n: f64,
    rm: f64,
    r_ad: f64,
    warnings: &mut Vec<String>,
) -> Result<Fit, CliError> {
    let mut f = Fit::empty();
    f.linear_density.set(n);
    f.cold_limit_radius.set(rm);
    if !trap.is_quadrupole() {
        f.cold_density_at_edge.set(cold_limit_density(trap, ion, rm)?);
    }
    f.adiabatic_radius.set(r_ad);
    let ratio = rm / r_ad;
    f.ratio.set(ratio);
    f.verdict = if ratio <= 1.0 {
        "fits".into()
    } else {
        warnings.push(format!(
            "exceeds adiabatic volume: cold-cloud radius {} m is larger than the adiabatic radius {} m (ratio {})",
            fmt_number(rm),
            fmt_number(r_ad),
            fmt_number(ratio)
        ));
        "exceeds adiabatic volume".into()
    };
    Ok(f)
}

fn solver_section(c: &ScaledCloud) -> Solver {
    let mut s = Solver::empty();
    let quad = c.profile.kind == ProfileKind::Quadrupole;
    s.kind = if quad { "quadrupole" } else { "multipole" }.into();
    s.shape_name = if quad { "gamma" } else { "alpha" }.into();
    s.shape.set(c.shape());
    s.rho_max.set(c.profile.rho_max);
    s.peak_to_center.set(c.profile.peak_to_center());
    s.temperature.set(c.temperature);
    s.linear_density.set(c.linear_density);
    s.central_density.set(c.n0);
    s.peak_density.set(c.peak_density());
    s.mean_density.set(c.mean_density());
    s.debye_length.set(c.lambda_d);
    s.radius.set(c.radius);
    s.coupling.set(c.coupling());
    s.indicative = c.is_indicative();
    s.poisson_residual.set(c.profile.poisson_residual());
    s.complete = c.profile.complete;
    s
}

#[derive(Serialize)]
struct IonMeta {
    label: String,
    charge_e: Num,
    mass_u: Num,
}

#[derive(Serialize)]
struct AxialMeta {
    end_voltage_v: Num,
    kappa: Num,
    z0_m: Num,
}

#[derive(Serialize)]
struct TrapMeta {
    order: u32,
    r0_m: Num,
    rf_amplitude_v: Num,
    rf_frequency_hz: Num,
    static_offset_v: Num,
    rf_phase_rad: Num,
    axial: Option<AxialMeta>,
}

#[derive(Serialize)]
struct ProfileArrays {
    rho: Vec<Num>,
    r_m: Vec<Num>,
    psi: Vec<Num>,
    n_over_n0: Vec<Num>,
}

/// Summary written next to a profile table.
#[derive(Serialize)]
struct ProfileMeta {
    kind: &'static str,
    k: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<Num>,
    rho_max: Num,
    #[serde(rename = "T")]
    temperature: Num,
    n0: Num,
    #[serde(rename = "lambda_D_m")]
    lambda_d_m: Num,
    /// Cold-fluid (T → 0) radius.
    #[serde(rename = "R_m")]
    cold_limit_radius: Num,
    /// λ_D·ρ_max at this temperature.
    radius_m: Num,
    linear_density_per_m: Num,
    peak_to_center: Num,
    coupling: Num,
    indicative: bool,
    complete: bool,
    edge_threshold: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    secular_frequency_hz: Option<Num>,
    trap: TrapMeta,
    ion: IonMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<ProfileArrays>,
}

fn profile_meta(c: &ScaledCloud, omega_x: Option<f64>, with_arrays: bool) -> Result<ProfileMeta, CliError> {
    let quad = c.profile.kind == ProfileKind::Quadrupole;
    let rm = match (quad, omega_x) {
        (true, Some(w)) => quadrupole_limit_radius(&c.ion, w, c.linear_density),
        (true, None) => f64::NAN,
        (false, _) => cold_limit_radius(&c.trap, &c.ion, c.linear_density)?,
    };
    let t = &c.trap;
    let profile = with_arrays.then(|| ProfileArrays {
        rho: c.profile.rho.iter().copied().map(Num).collect(),
        r_m: c.radii().into_iter().map(Num).collect(),
        psi: c.profile.psi.iter().copied().map(Num).collect(),
        n_over_n0: c.profile.density().into_iter().map(Num).collect(),
    });
    Ok(ProfileMeta {
        kind: if quad { "quadrupole" } else { "multipole" },
        k: t.k(),
        gamma: quad.then_some(Num(c.shape())),
        alpha: (!quad).then_some(Num(c.shape())),
        rho_max: Num(c.profile.rho_max),
        temperature: Num(c.temperature),
        n0: Num(c.n0),
        lambda_d_m: Num(c.lambda_d),
        cold_limit_radius: Num(rm),
        radius_m: Num(c.radius),
        linear_density_per_m: Num(c.linear_density),
        peak_to_center: Num(c.profile.peak_to_center()),
        coupling: Num(c.coupling()),
        indicative: c.is_indicative(),
        complete: c.profile.complete,
        edge_threshold: Num(c.profile.edge_threshold),
        secular_frequency_hz: omega_x.filter(|_| quad).map(|w| Num(w / TAU)),
        trap: TrapMeta {
            order: t.k(),
            r0_m: Num(t.r0()),
            rf_amplitude_v: Num(t.v0()),
            rf_frequency_hz: Num(t.omega() / TAU),
            static_offset_v: Num(t.us()),
            rf_phase_rad: Num(t.rf_phase()),
            axial: t.axial().map(|a| AxialMeta { end_voltage_v: Num(a.v_end), kappa: Num(a.kappa), z0_m: Num(a.z0) }),
        },
        ion: IonMeta { label: c.ion.label().to_string(), charge_e: Num(c.ion.charge_e()), mass_u: Num(c.ion.mass_u()) },
        profile,
    })
}

pub(super) fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub(super) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn require_config(cli: &Cli) -> Result<LoadedConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::validation("--config PATH is required for this command"))?;
    load_config(path)
}

/// Applies `--temperature` and `--linear-density` to a loaded config.
pub(super) fn apply_overrides(config: &mut TrapConfig, args: &CloudArgs) -> Result<(), CliError> {
    let parse = |flag: &str, text: &str, dim: Dimension| -> Result<Quantity, CliError> {
        let q = Quantity::parse(text, dim).map_err(|e| CliError::validation(format!("{flag}: {e}")))?;
        if q.value > 0.0 {
            Ok(q)
        } else {
            Err(CliError::validation(format!("{flag}: must be > 0")))
        }
    };
    let cloud = config.cloud.get_or_insert_with(Default::default);
    if let Some(t) = &args.temperature {
        cloud.temperature = Some(parse("--temperature", t, Dimension::Temperature)?);
    }
    if let Some(n) = &args.linear_density {
        cloud.linear_density = Some(parse("--linear-density", n, Dimension::LinearDensity)?);
    }
    Ok(())
}

pub(super) fn check_settings(cli: &Cli) -> Result<(), CliError> {
    if !(cli.eta_lim.is_finite() && cli.eta_lim > 0.0) {
        return Err(CliError::validation("--eta-lim must be finite and > 0"));
    }
    if !(cli.edge_threshold > 0.0 && cli.edge_threshold < 1.0) {
        return Err(CliError::validation("--edge-threshold must lie in (0, 1)"));
    }
    Ok(())
}

pub(super) fn execute(cli: &Cli) -> Result<Output, CliError> {
    check_settings(cli)?;
    match &cli.command {
        Command::Params(args) => report_command(cli, "params", args, false),
        Command::Scale(args) => report_command(cli, "scale", args, true),
        Command::Profile(args) => profile_command(cli, args),
        Command::Trajectory => trajectory_command(cli),
        Command::Sweep { axis, cloud } => sweep::sweep_command(cli, axis, cloud),
        Command::Figures => figures_command(cli),
    }
}

fn report_command(cli: &Cli, command: &str, args: &CloudArgs, needs_density: bool) -> Result<Output, CliError> {
    let mut loaded = require_config(cli)?;
    apply_overrides(&mut loaded.config, args)?;
    if needs_density && loaded.config.linear_density().is_none() {
        return Err(CliError::validation(format!(
            "`{command}` needs cloud.linear_density (set it in the config or pass --linear-density)"
        )));
    }
    let a = analyze(command, &loaded.config, cli.eta_lim, cli.edge_threshold, false, cli.strict)?;
    let (name, body) = match cli.format {
        Format::Csv => (format!("{command}.csv"), a.report.to_csv()),
        Format::Json => (format!("{command}.json"), a.report.to_json()),
    };
    let path = write_file(&cli.out, &name, &body)?;
    let mut stdout = a.report.to_table();
    stdout.push_str(&format!("\nwrote {}\n", path.display()));
    Ok(Output { stdout, warnings: a.report.warnings })
}

fn profile_command(cli: &Cli, args: &CloudArgs) -> Result<Output, CliError> {
    let mut loaded = require_config(cli)?;
    apply_overrides(&mut loaded.config, args)?;
    let a = analyze("profile", &loaded.config, cli.eta_lim, cli.edge_threshold, true, cli.strict)?;
    let cloud = a.cloud.as_ref().expect("solve requested");
    let written = match cli.format {
        Format::Csv => vec![
            write_file(&cli.out, "profile.csv", &cloud.profile.to_csv())?,
            write_file(&cli.out, "profile.meta.json", &to_json(&profile_meta(cloud, a.omega_x, false)?))?,
        ],
        Format::Json => vec![write_file(&cli.out, "profile.json", &to_json(&profile_meta(cloud, a.omega_x, true)?))?],
    };
    let mut stdout = a.report.to_table();
    for p in written {
        stdout.push_str(&format!("wrote {}\n", p.display()));
    }
    Ok(Output { stdout, warnings: a.report.warnings })
}

#[derive(Serialize)]
struct SampleArrays {
    t: Vec<Num>,
    x: Vec<Num>,
    y: Vec<Num>,
    z: Vec<Num>,
    vx: Vec<Num>,
    vy: Vec<Num>,
    vz: Vec<Num>,
}

#[derive(Serialize)]
struct SpectrumArrays {
    freq_hz: Vec<Num>,
    power: Vec<Num>,
}

#[derive(Serialize)]
struct PeakMeta {
    freq_hz: Num,
    power: Num,
}

#[derive(Serialize)]
struct TrajectoryDoc {
    model: &'static str,
    escaped_at_s: Option<Num>,
    samples: SampleArrays,
    spectrum: SpectrumArrays,
    peaks: Vec<PeakMeta>,
}

fn trajectory_doc(traj: &Trajectory, spec: &Spectrum, escaped: Option<f64>) -> TrajectoryDoc {
    let col = |i: usize| traj.component(i).into_iter().map(Num).collect();
    TrajectoryDoc {
        model: match traj.model {
            MotionModel::Rf => "rf",
            MotionModel::Secular => "secular",
        },
        escaped_at_s: escaped.map(Num),
        samples: SampleArrays {
            t: traj.samples.iter().map(|s| Num(s.t)).collect(),
            x: col(0),
            y: col(1),
            z: col(2),
            vx: col(3),
            vy: col(4),
            vz: col(5),
        },
        spectrum: SpectrumArrays {
            freq_hz: spec.freqs.iter().copied().map(Num).collect(),
            power: spec.power.iter().copied().map(Num).collect(),
        },
        peaks: spec.peaks(5).into_iter().map(|p| PeakMeta { freq_hz: Num(p.freq), power: Num(p.power) }).collect(),
    }
}

fn trajectory_command(cli: &Cli) -> Result<Output, CliError> {
    let loaded = require_config(cli)?;
    let cfg = &loaded.config;
    let (init, duration, control) = cfg
        .trajectory_setup()
        .ok_or_else(|| loaded.error_at("trajectory", "the trajectory command needs a [trajectory] table"))?;
    let a = analyze("trajectory", cfg, cli.eta_lim, cli.edge_threshold, false, cli.strict)?;
    let mut warnings = a.report.warnings;
    let (ion, trap) = (cfg.ion()?, cfg.trap()?);
    let settings = cfg.trajectory.as_ref().expect("checked above");
    let result = match settings.model {
        MotionModel::Rf => {
            let init = if settings.micromotion { rf_initial_state(&trap, &ion, &init) } else { init };
            integrate_rf(&trap, &ion, &init, duration, &control)
        }
        MotionModel::Secular => {
            if settings.micromotion {
                warnings.push("trajectory.micromotion is ignored by the secular model".into());
            }
            integrate_secular(&trap, &ion, &init, duration, &control)
        }
    };
    let (traj, escaped) = match result {
        Ok(t) => (t, None),
        Err(crate::Error::Escaped { t, partial }) => (*partial, Some(t)),
        Err(e) => return Err(e.into()),
    };
    let spec = match motional_spectrum(&traj, 0) {
        Ok(s) => s,
        Err(e) => {
            if escaped.is_none() {
                warnings.push(format!("spectrum written without resolution guarantees: {e}"));
            }
            Spectrum::of_series(&traj.component(0), traj.dt_sample)
        }
    };
    let written = match cli.format {
        Format::Csv => vec![
            write_file(&cli.out, "trajectory.csv", &traj.to_csv())?,
            write_file(&cli.out, "spectrum.csv", &spec.to_csv())?,
        ],
        Format::Json => vec![write_file(&cli.out, "trajectory.json", &to_json(&trajectory_doc(&traj, &spec, escaped)))?],
    };
    if let Some(t) = escaped {
        return Err(CliError::solver(format!(
            "ion escaped at t={} s (r >= r0); partial trajectory written to {}",
            fmt_number(t),
            written[0].display()
        )));
    }
    let mut stdout = format!(
        "{} samples over {} s, max radius {} m\n",
        traj.len(),
        fmt_number(traj.duration()),
        fmt_number(traj.max_radius())
    );
    for p in spec.peaks(3) {
        stdout.push_str(&format!("line at {} Hz (power {})\n", fmt_number(p.freq), fmt_number(p.power)));
    }
    for p in written {
        stdout.push_str(&format!("wrote {}\n", p.display()));
    }
    Ok(Output { stdout, warnings })
}

/// Reference profile datasets: Ca+ clouds in a quadrupole (ω_x/2π = 1 MHz,
/// 10⁵ ions/mm) and in octopole and 12-pole traps (r0 = 1 cm, 800 V,
/// 10 MHz, 1.6·10⁴ ions/mm).
struct FigureCase {
    file: &'static str,
    order: u32,
    temperature: f64,
}

const FIGURE_CASES: [FigureCase; 7] = [
    FigureCase { file: "quadrupole_1e4K.csv", order: 2, temperature: 1e4 },
    FigureCase { file: "quadrupole_300K.csv", order: 2, temperature: 300.0 },
    FigureCase { file: "quadrupole_5K.csv", order: 2, temperature: 5.0 },
    FigureCase { file: "octopole_1e4K.csv", order: 4, temperature: 1e4 },
    FigureCase { file: "octopole_300K.csv", order: 4, temperature: 300.0 },
    FigureCase { file: "octopole_5K.csv", order: 4, temperature: 5.0 },
    FigureCase { file: "twelve_pole_5K.csv", order: 6, temperature: 5.0 },
];

#[derive(Serialize)]
struct FigureEntry {
    file: &'static str,
    #[serde(flatten)]
    meta: ProfileMeta,
}

#[derive(Serialize)]
struct FigureManifest {
    edge_threshold: Num,
    figures: Vec<FigureEntry>,
}

fn figure_csv(c: &ScaledCloud) -> String {
    let mut out = String::from("rho,r_m,psi,n_over_n0\n");
    for (((rho, r), psi), n) in c.profile.rho.iter().zip(c.radii()).zip(&c.profile.psi).zip(c.profile.density()) {
        out.push_str(&format!("{},{},{},{}\n", fmt_number(*rho), fmt_number(r), fmt_number(*psi), fmt_number(n)));
    }
    out
}

fn figures_command(cli: &Cli) -> Result<Output, CliError> {
    let ion = IonSpecies::calcium40();
    let opts = ProfileOptions::with_edge_threshold(cli.edge_threshold);
    let w = mhz_to_angular(1.0);
    let clouds: Vec<Result<(ScaledCloud, Option<f64>), CliError>> = FIGURE_CASES
        .par_iter()
        .map(|case| {
            if case.order == 2 {
                let trap = LinearTrap::new(2, 0.005, 100.0, mhz_to_angular(10.0))?;
                Ok((solve_cloud(&trap, &ion, case.temperature, 1e8, Some(w), &opts)?, Some(w)))
            } else {
                let trap = LinearTrap::new(case.order, 0.01, 800.0, mhz_to_angular(10.0))?;
                Ok((solve_cloud(&trap, &ion, case.temperature, 1.6e7, None, &opts)?, None))
            }
        })
        .collect();
    let mut entries = Vec::new();
    let mut stdout = String::new();
    for (case, result) in FIGURE_CASES.iter().zip(clouds) {
        let (cloud, omega_x) = result.map_err(|e| CliError { code: e.code, message: format!("{}: {}", case.file, e.message) })?;
        let path = write_file(&cli.out, case.file, &figure_csv(&cloud))?;
        stdout.push_str(&format!(
            "wrote {} ({} = {}, R = {} m)\n",
            path.display(),
            if case.order == 2 { "gamma" } else { "alpha" },
            fmt_number(cloud.shape()),
            fmt_number(cloud.radius)
        ));
        entries.push(FigureEntry { file: case.file, meta: profile_meta(&cloud, omega_x, false)? });
    }
    let manifest = FigureManifest { edge_threshold: Num(cli.edge_threshold), figures: entries };
    let path = write_file(&cli.out, "figures.json", &to_json(&manifest))?;
    stdout.push_str(&format!("wrote {}\n", path.display()));
    Ok(Output { stdout, warnings: Vec::new() })
}
