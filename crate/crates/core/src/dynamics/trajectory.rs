use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{complex_pow, pseudopotential, pseudopotential_gradient, IonSpecies, LinearTrap};
use crate::ode::{StepError, Stepper, System, Tolerances};

/// Position (m), velocity (m/s) and time (s) of a single ion.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl PhaseState {
    pub fn at_rest(x: f64, y: f64, z: f64) -> Self {
        PhaseState { x, y, z, ..Default::default() }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn velocity(&self) -> [f64; 3] {
        [self.vx, self.vy, self.vz]
    }

    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    fn to_array(self) -> [f64; 6] {
        [self.x, self.y, self.z, self.vx, self.vy, self.vz]
    }

    fn from_array(t: f64, s: &[f64; 6]) -> Self {
        PhaseState { t, x: s[0], y: s[1], z: s[2], vx: s[3], vy: s[4], vz: s[5] }
    }

    fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite()) && self.t.is_finite()
    }
}

/// Integrator settings for single-ion trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorControl {
    pub rtol: f64,
    /// Absolute position tolerance in units of r0; velocities use r0·Ω.
    pub atol_r0: f64,
    pub samples_per_rf_period: usize,
    /// Step floor in RF periods.
    pub step_floor_periods: f64,
}

impl Default for IntegratorControl {
    fn default() -> Self {
        IntegratorControl {
            rtol: 1e-9,
            atol_r0: 1e-12,
            samples_per_rf_period: 32,
            step_floor_periods: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionModel {
    /// Full time-dependent RF field.
    Rf,
    /// Time-averaged pseudopotential.
    Secular,
}

/// Uniformly resampled trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<PhaseState>,
    pub dt_sample: f64,
    pub model: MotionModel,
    pub trap: LinearTrap,
    pub ion: IonSpecies,
    pub control: IntegratorControl,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn last(&self) -> Option<&PhaseState> {
        self.samples.last()
    }

    pub fn max_radius(&self) -> f64 {
        self.samples.iter().map(PhaseState::radius).fold(0.0, f64::max)
    }

    /// One coordinate as a series: 0..3 positions, 3..6 velocities.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.to_array()[index]).collect()
    }

    /// Number of samples per RF period, when it is an integer.
    fn samples_per_period(&self) -> Option<usize> {
        let n = self.trap.rf_period() / self.dt_sample;
        let rounded = n.round();
        ((n - rounded).abs() < 1e-6 * n && rounded >= 2.0).then_some(rounded as usize)
    }

    /// Low-pass filters the trajectory with a triangular window spanning two
    /// RF periods (a one-period average applied twice), removing the
    /// micromotion together with its leakage into the averaged velocity.
    /// The returned series is shorter by two periods.
    pub fn rf_averaged(&self) -> Vec<PhaseState> {
        let Some(n) = self.samples_per_period() else {
            return self.samples.clone();
        };
        period_average(&period_average(&self.samples, n), n)
    }

    /// Secular energy ½m|v̄|² + V*(r̄) (J) along the trajectory, where bars
    /// denote RF-period averages for RF trajectories.
    pub fn secular_energy(&self) -> Vec<(f64, f64)> {
        let states = match self.model {
            MotionModel::Rf => self.rf_averaged(),
            MotionModel::Secular => self.samples.clone(),
        };
        let m = self.ion.mass();
        states
            .iter()
            .map(|s| {
                let v2 = s.vx * s.vx + s.vy * s.vy + s.vz * s.vz;
                let pot = pseudopotential(&self.trap, &self.ion, s.radius(), s.y.atan2(s.x), s.z);
                (s.t, 0.5 * m * v2 + pot)
            })
            .collect()
    }

    /// CSV with header `t,x,y,z,vx,vy,vz` (SI units).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,z,vx,vy,vz\n");
        for s in &self.samples {
            let row: Vec<String> = std::iter::once(s.t)
                .chain(s.to_array())
                .map(crate::io::fmt_number)
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Trapezoidal average over exactly `n` sample intervals, labelled with the
/// window centre.
fn period_average(samples: &[PhaseState], n: usize) -> Vec<PhaseState> {
    if samples.len() <= n {
        return Vec::new();
    }
    let half = n / 2;
    (0..samples.len() - n)
        .map(|start| {
            let window = &samples[start..=start + n];
            let mut acc = [0.0; 6];
            for (j, s) in window.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                for (a, v) in acc.iter_mut().zip(s.to_array()) {
                    *a += w * v;
                }
            }
            acc.iter_mut().for_each(|a| *a /= n as f64);
            PhaseState::from_array(samples[start + half].t, &acc)
        })
        .collect()
}

struct RfSystem {
    k: u32,
    r0: f64,
    /// k q /(2 m r0²)
    drive: f64,
    us: f64,
    v0: f64,
    omega: f64,
    phase: f64,
    /// q κ V_end /(m z0²)
    axial: f64,
    vel_scale: f64,
}

impl RfSystem {
    fn new(trap: &LinearTrap, ion: &IonSpecies) -> Self {
        let q = ion.charge();
        let m = ion.mass();
        RfSystem {
            k: trap.k(),
            r0: trap.r0(),
            drive: trap.k() as f64 * q / (2.0 * m * trap.r0().powi(2)),
            us: trap.us(),
            v0: trap.v0(),
            omega: trap.omega(),
            phase: trap.rf_phase(),
            axial: trap.axial().map(|a| q * a.strength() / (m * a.z0 * a.z0)).unwrap_or(0.0),
            vel_scale: trap.r0() * trap.omega(),
        }
    }
}

impl System<6> for RfSystem {
    fn rhs(&self, t: f64, s: &[f64; 6]) -> [f64; 6] {
        let fk = self.drive * (self.us - self.v0 * (self.omega * t + self.phase).cos());
        let (re, im) = complex_pow(s[0] / self.r0, s[1] / self.r0, self.k - 1);
        [
            s[3],
            s[4],
            s[5],
            self.r0 * fk * re + self.axial * s[0],
            -self.r0 * fk * im + self.axial * s[1],
            -2.0 * self.axial * s[2],
        ]
    }

    fn atol(&self, i: usize, tol: &Tolerances) -> f64 {
        if i < 3 {
            tol.atol
        } else {
            tol.atol * self.vel_scale
        }
    }
}

struct SecularSystem<'a> {
    trap: &'a LinearTrap,
    ion: &'a IonSpecies,
    inv_mass: f64,
    vel_scale: f64,
}

impl System<6> for SecularSystem<'_> {
    fn rhs(&self, _t: f64, s: &[f64; 6]) -> [f64; 6] {
        let g = pseudopotential_gradient(self.trap, self.ion, [s[0], s[1], s[2]]);
        [s[3], s[4], s[5], -g[0] * self.inv_mass, -g[1] * self.inv_mass, -g[2] * self.inv_mass]
    }

    fn atol(&self, i: usize, tol: &Tolerances) -> f64 {
        if i < 3 {
            tol.atol
        } else {
            tol.atol * self.vel_scale
        }
    }
}

enum Stop {
    Done,
    Escaped(f64),
    Underflow(f64),
}

/// Core propagation loop: steps to `t_end`, optionally sampling on the
/// uniform grid `t0 + j·dt`, and stops at the first r ≥ r0 crossing.
fn propagate<S: System<6>>(
    sys: &S,
    trap: &LinearTrap,
    init: &PhaseState,
    t_end: f64,
    control: &IntegratorControl,
    mut sampler: Option<(&mut Vec<PhaseState>, f64)>,
) -> (PhaseState, Stop) {
    let period = trap.rf_period();
    let r0 = trap.r0();
    let tol = Tolerances {
        rtol: control.rtol,
        atol: control.atol_r0 * r0,
        h_min: control.step_floor_periods * period,
        h_max: period / 4.0,
    };
    let dir = if t_end >= init.t { 1.0 } else { -1.0 };
    let mut st = Stepper::new(sys, init.t, init.to_array(), dir * period / 64.0, tol);
    let mut next_sample = 0usize;
    if let Some((buf, _)) = sampler.as_mut() {
        buf.push(*init);
        next_sample = 1;
    }
    let escaped = |s: &[f64; 6]| s[0].hypot(s[1]) >= r0;
    if escaped(&st.y) {
        return (*init, Stop::Escaped(init.t));
    }
    while (t_end - st.t) * dir > 0.0 {
        let dense = match st.step(t_end) {
            Ok(d) => d,
            Err(StepError::Underflow) | Err(StepError::NonFinite) => {
                return (PhaseState::from_array(st.t, &st.y), Stop::Underflow(st.t));
            }
        };
        let t_escape = escaped(&st.y).then(|| dense.locate(|_, s| s[0].hypot(s[1]) - r0));
        if let Some((buf, dt)) = sampler.as_mut() {
            let limit = t_escape.unwrap_or(st.t);
            loop {
                let ts = init.t + next_sample as f64 * *dt;
                if ts > limit + 1e-9 * *dt {
                    break;
                }
                let ts = ts.min(st.t);
                buf.push(PhaseState::from_array(ts, &dense.eval(ts)));
                next_sample += 1;
            }
        }
        if let Some(te) = t_escape {
            return (PhaseState::from_array(te, &dense.eval(te)), Stop::Escaped(te));
        }
    }
    (PhaseState::from_array(st.t, &st.y), Stop::Done)
}

fn check_init(trap: &LinearTrap, init: &PhaseState, duration: f64) -> Result<()> {
    if !init.is_finite() {
        return Err(Error::invalid("init", "initial state must be finite"));
    }
    if init.radius() >= trap.r0() {
        return Err(Error::invalid("init", "initial radius must be inside r0"));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid("duration", "must be positive"));
    }
    Ok(())
}

fn run<S: System<6>>(
    sys: &S,
    model: MotionModel,
    trap: &LinearTrap,
    ion: &IonSpecies,
    init: &PhaseState,
    duration: f64,
    control: &IntegratorControl,
) -> Result<Trajectory> {
    check_init(trap, init, duration)?;
    if control.samples_per_rf_period < 2 {
        return Err(Error::invalid("samples_per_rf_period", "must be >= 2"));
    }
    let dt = trap.rf_period() / control.samples_per_rf_period as f64;
    let mut samples = Vec::with_capacity((duration / dt) as usize + 2);
    let (_, stop) = propagate(sys, trap, init, init.t + duration, control, Some((&mut samples, dt)));
    let traj = Trajectory {
        samples,
        dt_sample: dt,
        model,
        trap: trap.clone(),
        ion: ion.clone(),
        control: *control,
    };
    match stop {
        Stop::Done => Ok(traj),
        Stop::Escaped(t) => Err(Error::Escaped { t, partial: Box::new(traj) }),
        Stop::Underflow(t) => Err(Error::TrajectoryStepUnderflow { t, partial: Box::new(traj) }),
    }
}

/// Integrates the full RF equations of motion of a 2k-pole,
/// ẍ = r0·F_k(t)·Re w^(k−1), ÿ = −r0·F_k(t)·Im w^(k−1), w = (x+iy)/r0,
/// F_k(t) = kq(U_s − V0 cos(Ωt+φ))/(2m r0²), plus the axial harmonic field.
pub fn integrate_rf(
    trap: &LinearTrap,
    ion: &IonSpecies,
    init: &PhaseState,
    duration: f64,
    control: &IntegratorControl,
) -> Result<Trajectory> {
    run(&RfSystem::new(trap, ion), MotionModel::Rf, trap, ion, init, duration, control)
}

/// Integrates the motion in the time-independent pseudopotential.
pub fn integrate_secular(
    trap: &LinearTrap,
    ion: &IonSpecies,
    init: &PhaseState,
    duration: f64,
    control: &IntegratorControl,
) -> Result<Trajectory> {
    let sys = SecularSystem {
        trap,
        ion,
        inv_mass: 1.0 / ion.mass(),
        vel_scale: trap.r0() * trap.omega(),
    };
    run(&sys, MotionModel::Secular, trap, ion, init, duration, control)
}

/// Final state of an RF propagation to `t_end` (forward or backward in
/// time), without sampling.
pub fn propagate_rf(
    trap: &LinearTrap,
    ion: &IonSpecies,
    init: &PhaseState,
    t_end: f64,
    control: &IntegratorControl,
) -> Result<PhaseState> {
    check_init(trap, init, (t_end - init.t).abs().max(f64::MIN_POSITIVE))?;
    let (state, stop) = propagate(&RfSystem::new(trap, ion), trap, init, t_end, control, None);
    let partial = || {
        Box::new(Trajectory {
            samples: vec![*init, state],
            dt_sample: (state.t - init.t).abs(),
            model: MotionModel::Rf,
            trap: trap.clone(),
            ion: ion.clone(),
            control: *control,
        })
    };
    match stop {
        Stop::Done => Ok(state),
        Stop::Escaped(t) => Err(Error::Escaped { t, partial: partial() }),
        Stop::Underflow(t) => Err(Error::TrajectoryStepUnderflow { t, partial: partial() }),
    }
}
