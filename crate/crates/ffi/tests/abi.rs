use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use multipole_trap::constants::mhz_to_angular;
use multipole_trap::fluid::{solve_cloud, ProfileOptions};
use multipole_trap::model::{characteristic_energy, secular_frequencies, IonSpecies, LinearTrap};
use multipole_trap_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 512];
    unsafe {
        mpt_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

struct Fixture {
    ion: *mut MptIon,
    trap: *mut MptTrap,
}

impl Fixture {
    fn new(k: u32, r0: f64, v0: f64, f_mhz: f64) -> Self {
        let mut ion = ptr::null_mut();
        let mut trap = ptr::null_mut();
        unsafe {
            assert_eq!(mpt_ion_new(1.0, 40.0, &mut ion), MptStatus::Ok);
            assert_eq!(mpt_trap_new(k, r0, v0, mhz_to_angular(f_mhz), &mut trap), MptStatus::Ok);
        }
        Fixture { ion, trap }
    }
}

impl Drop for Fixture {
    fn drop(&mut self) {
        unsafe {
            mpt_trap_free(self.trap);
            mpt_ion_free(self.ion);
        }
    }
}

#[test]
fn scalar_queries_match_the_library() {
    let f = Fixture::new(4, 0.01, 800.0, 10.0);
    let trap = LinearTrap::new(4, 0.01, 800.0, mhz_to_angular(10.0)).unwrap();
    let ion = IonSpecies::new(1.0, 40.0, "").unwrap();
    let mut e = 0.0;
    unsafe {
        assert_eq!(mpt_characteristic_energy(f.trap, f.ion, &mut e), MptStatus::Ok);
    }
    assert_eq!(e, characteristic_energy(&trap, &ion).joules());
    assert_eq!(last_error(), "");

    let mut w = MptSecular::default();
    unsafe {
        assert_eq!(mpt_secular_frequencies(f.trap, f.ion, &mut w), MptStatus::InvalidParameter);
    }
    assert!(last_error().contains("quadrupole"));

    let q = Fixture::new(2, 0.005, 40.916, 1.0);
    let trap = LinearTrap::new(2, 0.005, 40.916, mhz_to_angular(1.0)).unwrap();
    unsafe {
        assert_eq!(mpt_secular_frequencies(q.trap, q.ion, &mut w), MptStatus::Ok);
    }
    let expected = secular_frequencies(&trap, &ion).unwrap();
    assert_eq!((w.omega_x, w.omega_r, w.omega_z), (expected.omega_x, expected.omega_r, expected.omega_z));
}

#[test]
fn mathieu_parameters_flag_instability() {
    let f = Fixture::new(2, 0.005, 40.916, 1.0);
    let mut m = MptMathieu::default();
    unsafe {
        assert_eq!(mpt_mathieu(f.trap, f.ion, &mut m), MptStatus::Ok);
    }
    assert!((m.q_x - 0.2).abs() < 1e-3 && m.stable && m.beta_x > 0.0);

    let g = Fixture::new(2, 0.005, 200.0, 1.0);
    unsafe {
        assert_eq!(mpt_mathieu(g.trap, g.ion, &mut m), MptStatus::Ok);
    }
    assert!(!m.stable && m.beta_x.is_nan());

    let h = Fixture::new(4, 0.01, 800.0, 10.0);
    unsafe {
        assert_eq!(mpt_mathieu(h.trap, h.ion, &mut m), MptStatus::InvalidParameter);
    }
    assert!(last_error().contains("quadrupole"));
}

#[test]
fn invalid_arguments_leave_outputs_untouched() {
    let mut trap = ptr::null_mut();
    unsafe {
        assert_eq!(mpt_trap_new(1, 0.01, 1.0, 1.0, &mut trap), MptStatus::InvalidParameter);
        assert!(trap.is_null());
        assert_eq!(mpt_trap_new(4, 0.01, 1.0, 1.0, ptr::null_mut()), MptStatus::NullArgument);
        let mut e = 7.0;
        assert_eq!(mpt_characteristic_energy(ptr::null(), ptr::null(), &mut e), MptStatus::NullArgument);
        assert_eq!(e, 7.0);
    }
    assert!(last_error().contains("`trap` is null"));
    assert!(unsafe { mpt_last_error(ptr::null_mut(), 0) } > 0);
    unsafe {
        mpt_trap_free(ptr::null_mut());
        mpt_ion_free(ptr::null_mut());
        mpt_cloud_free(ptr::null_mut());
        mpt_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn last_error_truncates_to_the_buffer() {
    let mut trap = ptr::null_mut();
    unsafe {
        mpt_trap_new(4, -1.0, 1.0, 1.0, &mut trap);
        let mut buf = [1 as std::ffi::c_char; 8];
        let full = mpt_last_error(buf.as_mut_ptr(), buf.len());
        assert!(full > 7);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_bytes().len(), 7);
    }
}

#[test]
fn cloud_solution_matches_the_library() {
    let f = Fixture::new(4, 0.01, 800.0, 10.0);
    let mut cloud = ptr::null_mut();
    let mut s = MptCloudSummary::default();
    unsafe {
        assert_eq!(mpt_cloud_solve(f.trap, f.ion, 5.0, 1.6e7, f64::NAN, 1e-3, &mut cloud), MptStatus::Ok);
        assert_eq!(mpt_cloud_summary(cloud, &mut s), MptStatus::Ok);
    }
    let trap = LinearTrap::new(4, 0.01, 800.0, mhz_to_angular(10.0)).unwrap();
    let c = solve_cloud(&trap, &IonSpecies::new(1.0, 40.0, "").unwrap(), 5.0, 1.6e7, None, &ProfileOptions::default())
        .unwrap();
    assert_eq!(s.shape, c.shape());
    assert_eq!(s.radius, c.radius);
    assert_eq!(s.points, c.profile.len());

    let mut r = vec![0.0; s.points];
    let mut n = vec![0.0; s.points];
    unsafe {
        assert_eq!(mpt_cloud_profile(cloud, r.as_mut_ptr(), n.as_mut_ptr(), s.points - 1), MptStatus::BufferTooSmall);
        assert_eq!(mpt_cloud_profile(cloud, r.as_mut_ptr(), n.as_mut_ptr(), s.points), MptStatus::Ok);
        mpt_cloud_free(cloud);
    }
    assert_eq!(r, c.radii());
    assert_eq!(n, c.profile.density());
}

#[test]
fn unreachable_cloud_reports_solver_failure() {
    let f = Fixture::new(4, 0.01, 800.0, 10.0);
    let mut cloud = ptr::null_mut();
    unsafe {
        assert_eq!(mpt_cloud_solve(f.trap, f.ion, 0.1, 1.6e7, f64::NAN, 1e-3, &mut cloud), MptStatus::SolverFailure);
        assert_eq!(mpt_cloud_solve(f.trap, f.ion, 5.0, 1.6e7, f64::NAN, 2.0, &mut cloud), MptStatus::InvalidParameter);
    }
    assert!(cloud.is_null());
}

#[test]
fn trajectories_run_and_report_escapes() {
    let f = Fixture::new(2, 0.005, 40.916, 1.0);
    let init = MptState { x: 5e-4, y: 3e-4, ..MptState::default() };
    let mut traj = ptr::null_mut();
    unsafe {
        let status = mpt_trajectory_run(f.trap, f.ion, MptModel::Rf, &init, 1e-4, 32, 1e-9, &mut traj);
        assert_eq!(status, MptStatus::Ok);
        let len = mpt_trajectory_len(traj);
        assert_eq!(len, 3201);
        let mut states = vec![MptState::default(); len];
        assert_eq!(mpt_trajectory_samples(traj, states.as_mut_ptr(), len), len);
        assert_eq!(states[0], init);
        assert!(states.iter().all(|s| s.x.hypot(s.y) < 0.005));
        mpt_trajectory_free(traj);
    }

    let g = Fixture::new(2, 0.005, 200.0, 1.0);
    let mut traj = ptr::null_mut();
    unsafe {
        let status = mpt_trajectory_run(g.trap, g.ion, MptModel::Rf, &init, 1e-3, 32, 1e-9, &mut traj);
        assert_eq!(status, MptStatus::Escaped);
        assert!(!traj.is_null() && mpt_trajectory_len(traj) > 1);
        mpt_trajectory_free(traj);
    }
    assert!(last_error().starts_with("ion escaped at t="));
}

#[test]
fn axial_confinement_and_offsets_validate() {
    let f = Fixture::new(4, 0.01, 400.0, 1.0);
    unsafe {
        assert_eq!(mpt_trap_set_axial(f.trap, 0.0, 0.3, 0.02), MptStatus::Ok);
        assert_eq!(mpt_trap_set_axial(f.trap, 1.0, 0.3, -0.02), MptStatus::InvalidParameter);
        assert_eq!(mpt_trap_set_static_offset(f.trap, 1.0), MptStatus::Ok);
        let mut a = [0.0; 3];
        let pos = [1e-3, 0.0, 0.0];
        assert_eq!(mpt_micromotion_amplitude(f.trap, f.ion, pos.as_ptr(), a.as_mut_ptr()), MptStatus::Ok);
        assert!(a[0] > 0.0 && a[2] == 0.0);
    }
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libmultipole_trap_ffi.a");
    if !lib.exists() {
        panic!("static library not found at {}", lib.display());
    }
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-D_DEFAULT_SOURCE", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl"])
        .status()
        .expect("a C compiler is required for this test");
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
}
