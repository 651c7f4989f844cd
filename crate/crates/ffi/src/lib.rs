//! C ABI for the multipole-trap library.
//!
//! Objects are opaque handles created by `mpt_*_new` / `mpt_*_solve` /
//! `mpt_*_run` and released with the matching `mpt_*_free`. Every fallible
//! call returns an [`MptStatus`]; on failure a description is kept per
//! thread and can be read with [`mpt_last_error`]. Results are written
//! through out-pointers only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use multipole_trap::dynamics::{
    integrate_rf, integrate_secular, micromotion_amplitude, IntegratorControl, PhaseState, Trajectory,
};
use multipole_trap::fluid::{solve_cloud, ProfileOptions, ScaledCloud};
use multipole_trap::model::{
    adiabaticity, beta_from_aq, characteristic_energy, mathieu_parameters, secular_frequencies,
    AxialConfinement, IonSpecies, LinearTrap,
};
use multipole_trap::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MptStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A physical parameter is out of range.
    InvalidParameter = 2,
    /// The operating point is outside the stability region or the
    /// transverse confinement is lost.
    Unstable = 3,
    /// The ion left the trap before the requested duration.
    Escaped = 4,
    /// The numerical solver could not produce a result.
    SolverFailure = 5,
    /// The caller's buffer is too small.
    BufferTooSmall = 6,
    /// Internal error; the library state is unchanged.
    Panic = 7,
}

pub struct MptIon(IonSpecies);
pub struct MptTrap(LinearTrap);
pub struct MptCloud(ScaledCloud);
pub struct MptTrajectory(Trajectory);

/// Mathieu parameters; the β fields are NaN outside the stable region.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MptMathieu {
    pub a_x: f64,
    pub q_x: f64,
    pub a_y: f64,
    pub q_y: f64,
    pub beta_x: f64,
    pub beta_y: f64,
    pub stable: bool,
}

/// Angular frequencies (rad/s).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MptSecular {
    pub omega_x: f64,
    pub omega_r: f64,
    pub omega_z: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MptCloudSummary {
    /// γ for quadrupoles, α for higher multipoles.
    pub shape: f64,
    /// Central density (m^-3).
    pub central_density: f64,
    /// Debye length at the centre (m).
    pub debye_length: f64,
    /// Cloud radius (m).
    pub radius: f64,
    /// Ions per metre.
    pub linear_density: f64,
    pub coupling: f64,
    pub peak_to_center: f64,
    /// Number of stored profile points.
    pub points: usize,
}

/// Position (m) and velocity (m/s) at time `t` (s).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MptState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MptModel {
    /// Full RF field.
    Rf = 0,
    /// Time-averaged pseudopotential.
    Secular = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> MptStatus {
    match err {
        Error::InvalidParameter { .. } | Error::QuadrupoleOnly { .. } | Error::MultipoleOnly { .. } => {
            MptStatus::InvalidParameter
        }
        Error::UnstablePoint { .. } | Error::Deconfined { .. } => MptStatus::Unstable,
        Error::Escaped { .. } => MptStatus::Escaped,
        _ => MptStatus::SolverFailure,
    }
}

fn fail(status: MptStatus, message: impl Into<String>) -> MptStatus {
    set_error(message.into());
    status
}

/// Runs `body`, converting library errors and panics to status codes.
fn guard(body: impl FnOnce() -> Result<(), MptStatus>) -> MptStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MptStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(MptStatus::Panic, "internal error"),
    }
}

fn lib<T>(r: multipole_trap::Result<T>) -> Result<T, MptStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn get<'a, T>(p: *const T, name: &str) -> Result<&'a T, MptStatus> {
    p.as_ref().ok_or_else(|| fail(MptStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), MptStatus> {
    if out.is_null() {
        return Err(fail(MptStatus::NullArgument, format!("`{name}` is null")));
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`) and returns the full message length
/// in bytes without the terminator, or 0 if the last call succeeded.
/// `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mpt_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            0
        }
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Creates an ion of the given charge (elementary charges) and mass (u).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mpt_ion_new(charge_e: f64, mass_u: f64, out: *mut *mut MptIon) -> MptStatus {
    guard(|| {
        let ion = lib(IonSpecies::new(charge_e, mass_u, ""))?;
        put(out, boxed(MptIon(ion)), "out")
    })
}

/// # Safety
/// `ion` must be null or a handle from [`mpt_ion_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpt_ion_free(ion: *mut MptIon) {
    release(ion);
}

/// Creates a linear 2k-pole trap of order `k` with inscribed radius `r0`
/// (m), RF amplitude `v0` (V) and angular drive frequency `omega` (rad/s).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mpt_trap_new(k: u32, r0: f64, v0: f64, omega: f64, out: *mut *mut MptTrap) -> MptStatus {
    guard(|| {
        let trap = lib(LinearTrap::new(k, r0, v0, omega))?;
        put(out, boxed(MptTrap(trap)), "out")
    })
}

/// Sets the static electrode offset (V).
///
/// # Safety
/// `trap` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpt_trap_set_static_offset(trap: *mut MptTrap, offset: f64) -> MptStatus {
    guard(|| {
        let t = trap.as_mut().ok_or_else(|| fail(MptStatus::NullArgument, "`trap` is null"))?;
        t.0 = lib(t.0.clone().with_static_offset(offset))?;
        Ok(())
    })
}

/// Adds axial confinement from end electrodes at `v_end` (V) with
/// geometric factor `kappa` and half-length `z0` (m).
///
/// # Safety
/// `trap` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mpt_trap_set_axial(trap: *mut MptTrap, v_end: f64, kappa: f64, z0: f64) -> MptStatus {
    guard(|| {
        let t = trap.as_mut().ok_or_else(|| fail(MptStatus::NullArgument, "`trap` is null"))?;
        let axial = lib(AxialConfinement::new(v_end, kappa, z0))?;
        t.0 = t.0.clone().with_axial(axial);
        Ok(())
    })
}

/// # Safety
/// `trap` must be null or a handle from [`mpt_trap_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpt_trap_free(trap: *mut MptTrap) {
    release(trap);
}

/// Characteristic energy m(Ω r0)²/(2k²) in joules.
///
/// # Safety
/// Handles must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mpt_characteristic_energy(
    trap: *const MptTrap,
    ion: *const MptIon,
    out: *mut f64,
) -> MptStatus {
    guard(|| {
        let (t, i) = (get(trap, "trap")?, get(ion, "ion")?);
        put(out, characteristic_energy(&t.0, &i.0).joules(), "out")
    })
}

/// Local adiabaticity parameter at radius `r` (m).
///
/// # Safety
/// Handles must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mpt_adiabaticity(trap: *const MptTrap, ion: *const MptIon, r: f64, out: *mut f64) -> MptStatus {
    guard(|| {
        let (t, i) = (get(trap, "trap")?, get(ion, "ion")?);
        put(out, adiabaticity(&t.0, &i.0, r), "out")
    })
}

/// Mathieu parameters of a quadrupole trap.
///
/// # Safety
/// Handles must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mpt_mathieu(trap: *const MptTrap, ion: *const MptIon, out: *mut MptMathieu) -> MptStatus {
    guard(|| {
        let (t, i) = (get(trap, "trap")?, get(ion, "ion")?);
        let p = lib(mathieu_parameters(&t.0, &i.0))?;
        let value = MptMathieu {
            a_x: p.a_x,
            q_x: p.q_x,
            a_y: p.a_y,
            q_y: p.q_y,
            beta_x: beta_from_aq(p.a_x, p.q_x).unwrap_or(f64::NAN),
            beta_y: beta_from_aq(p.a_y, p.q_y).unwrap_or(f64::NAN),
            stable: p.is_stable(),
        };
        put(out, value, "out")
    })
}

/// Secular angular frequencies of a quadrupole trap: transverse
/// `omega_x`, radial `omega_r` softened by the axial field, and axial
/// `omega_z`.
///
/// # Safety
/// Handles must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mpt_secular_frequencies(
    trap: *const MptTrap,
    ion: *const MptIon,
    out: *mut MptSecular,
) -> MptStatus {
    guard(|| {
        let (t, i) = (get(trap, "trap")?, get(ion, "ion")?);
        let f = lib(secular_frequencies(&t.0, &i.0))?;
        put(out, MptSecular { omega_x: f.omega_x, omega_r: f.omega_r, omega_z: f.omega_z }, "out")
    })
}

/// Micromotion amplitude (m) per axis at `pos` (m, 3 values).
///
/// # Safety
/// Handles must be live, `pos` readable and `out` writable for 3 values.
#[no_mangle]
pub unsafe extern "C" fn mpt_micromotion_amplitude(
    trap: *const MptTrap,
    ion: *const MptIon,
    pos: *const f64,
    out: *mut f64,
) -> MptStatus {
    guard(|| {
        let (t, i) = (get(trap, "trap")?, get(ion, "ion")?);
        let p = get(pos.cast::<[f64; 3]>(), "pos")?;
        put(out.cast::<[f64; 3]>(), micromotion_amplitude(&t.0, &i.0, *p), "out")
    })
}

/// Solves the thermal equilibrium cloud at `temperature` (K) holding
/// `linear_density` ions per metre. For quadrupoles `omega_x` (rad/s)
/// overrides the secular frequency; pass NaN to derive it from the trap.
/// `edge_threshold` is the density fraction defining the cloud edge.
///
/// # Safety
/// Handles must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mpt_cloud_solve(
    trap: *const MptTrap,
    ion: *const MptIon,
    temperature: f64,
    linear_density: f64,
    omega_x: f64,
    edge_threshold: f64,
    out: *mut *mut MptCloud,
) -> MptStatus {
    guard(|| {
        let (t, i) = (get(trap, "trap")?, get(ion, "ion")?);
        if !(edge_threshold > 0.0 && edge_threshold < 1.0) {
            return Err(fail(MptStatus::InvalidParameter, "edge_threshold must lie in (0, 1)"));
        }
        let opts = ProfileOptions::with_edge_threshold(edge_threshold);
        let omega_x = (!omega_x.is_nan()).then_some(omega_x);
        let cloud = lib(solve_cloud(&t.0, &i.0, temperature, linear_density, omega_x, &opts))?;
        put(out, boxed(MptCloud(cloud)), "out")
    })
}

/// # Safety
/// `cloud` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mpt_cloud_summary(cloud: *const MptCloud, out: *mut MptCloudSummary) -> MptStatus {
    guard(|| {
        let c = &get(cloud, "cloud")?.0;
        let value = MptCloudSummary {
            shape: c.shape(),
            central_density: c.n0,
            debye_length: c.lambda_d,
            radius: c.radius,
            linear_density: c.linear_density,
            coupling: c.coupling(),
            peak_to_center: c.profile.peak_to_center(),
            points: c.profile.len(),
        };
        put(out, value, "out")
    })
}

/// Copies the radial profile: radii (m) and density relative to the
/// centre. Either array may be null; non-null arrays need `len` at least
/// the number of points reported by [`mpt_cloud_summary`].
///
/// # Safety
/// `cloud` must be live and each non-null array writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn mpt_cloud_profile(
    cloud: *const MptCloud,
    radius: *mut f64,
    density: *mut f64,
    len: usize,
) -> MptStatus {
    guard(|| {
        let c = &get(cloud, "cloud")?.0;
        let n = c.profile.len();
        if len < n {
            return Err(fail(MptStatus::BufferTooSmall, format!("profile has {n} points, buffer holds {len}")));
        }
        if !radius.is_null() {
            ptr::copy_nonoverlapping(c.radii().as_ptr(), radius, n);
        }
        if !density.is_null() {
            ptr::copy_nonoverlapping(c.profile.density().as_ptr(), density, n);
        }
        Ok(())
    })
}

/// # Safety
/// `cloud` must be null or a handle from [`mpt_cloud_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpt_cloud_free(cloud: *mut MptCloud) {
    release(cloud);
}

/// Integrates a single ion from `initial` for `duration` seconds,
/// sampling `samples_per_rf_period` times per RF period with relative
/// tolerance `rtol`. If the ion escapes, the status is
/// [`MptStatus::Escaped`] and `out` still receives the partial trajectory.
///
/// # Safety
/// Handles must be live, `initial` readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mpt_trajectory_run(
    trap: *const MptTrap,
    ion: *const MptIon,
    model: MptModel,
    initial: *const MptState,
    duration: f64,
    samples_per_rf_period: usize,
    rtol: f64,
    out: *mut *mut MptTrajectory,
) -> MptStatus {
    guard(|| {
        let (t, i) = (get(trap, "trap")?, get(ion, "ion")?);
        let s = get(initial, "initial")?;
        if out.is_null() {
            return Err(fail(MptStatus::NullArgument, "`out` is null"));
        }
        let init = PhaseState { t: s.t, x: s.x, y: s.y, z: s.z, vx: s.vx, vy: s.vy, vz: s.vz };
        let control = IntegratorControl { rtol, samples_per_rf_period, ..IntegratorControl::default() };
        let result = match model {
            MptModel::Rf => integrate_rf(&t.0, &i.0, &init, duration, &control),
            MptModel::Secular => integrate_secular(&t.0, &i.0, &init, duration, &control),
        };
        match result {
            Ok(traj) => put(out, boxed(MptTrajectory(traj)), "out"),
            Err(Error::Escaped { t: at, partial }) => {
                out.write(boxed(MptTrajectory(*partial)));
                Err(fail(MptStatus::Escaped, format!("ion escaped at t={at:.6e} s (r >= r0)")))
            }
            Err(e) => Err(fail(status_of(&e), e.to_string())),
        }
    })
}

/// Number of stored samples, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn mpt_trajectory_len(traj: *const MptTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// Copies up to `len` samples into `out` and returns how many were written.
///
/// # Safety
/// `traj` must be live and `out` writable for `len` states.
#[no_mangle]
pub unsafe extern "C" fn mpt_trajectory_samples(traj: *const MptTrajectory, out: *mut MptState, len: usize) -> usize {
    let (Some(t), false) = (traj.as_ref(), out.is_null()) else {
        return 0;
    };
    let n = t.0.len().min(len);
    for (k, s) in t.0.samples.iter().take(n).enumerate() {
        out.add(k).write(MptState { t: s.t, x: s.x, y: s.y, z: s.z, vx: s.vx, vy: s.vy, vz: s.vz });
    }
    n
}

/// # Safety
/// `traj` must be null or a handle from [`mpt_trajectory_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mpt_trajectory_free(traj: *mut MptTrajectory) {
    release(traj);
}
