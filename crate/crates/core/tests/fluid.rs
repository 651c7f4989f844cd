use multipole_trap::constants::mhz_to_angular;
use multipole_trap::fluid::*;
use multipole_trap::model::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn ca() -> IonSpecies {
    IonSpecies::calcium40()
}

#[test]
fn gamma_five_linear_density_at_ten_thousand_kelvin() {
    // Independent scipy solve (DOP853, rtol 1e-13, adaptive quadrature): 1.12897e8 m⁻¹.
    let p = integrate_profile_quadrupole(5.0, DEFAULT_EDGE_THRESHOLD).unwrap();
    let n = reduced_linear_density(&p).unwrap() * linear_density_unit(&ca(), 1e4);
    assert!(rel(n, 1.1290e8) < 1e-3, "{n}");
    assert!(rel(n, 1e8) < 0.15);
}

#[test]
fn cold_quadrupole_radius_scales_with_well_strength() {
    let opts = ProfileOptions::default();
    let m = match_gamma(1e8, 5.0, &ca(), &opts).unwrap();
    let trap = LinearTrap::new(2, 0.005, 100.0, mhz_to_angular(10.0)).unwrap();
    let a = scale_quadrupole_with_frequency(m.profile.clone(), mhz_to_angular(1.0), &trap, &ca(), 5.0).unwrap();
    let b = scale_quadrupole_with_frequency(m.profile, mhz_to_angular(2.0), &trap, &ca(), 5.0).unwrap();
    assert!(rel(a.radius / b.radius, 2.0) < 1e-3);
    // Heavier ion at the same ω_x: R ∝ m^(-1/2).
    let heavy = IonSpecies::new(1.0, 160.0, "heavy").unwrap();
    let mh = match_gamma(1e8, 5.0, &heavy, &opts).unwrap();
    let c = scale_quadrupole_with_frequency(mh.profile, mhz_to_angular(1.0), &trap, &heavy, 5.0).unwrap();
    assert!(rel(a.radius / c.radius, 2.0) < 1e-3);
}

#[test]
fn endcaps_do_not_change_the_cloud() {
    let ion = ca();
    let opts = ProfileOptions::default();
    let bare = LinearTrap::new(2, 0.005, 300.0, mhz_to_angular(10.0)).unwrap();
    let capped = bare.clone().with_axial(AxialConfinement::new(0.5, 0.3, 0.01).unwrap());
    let a = solve_cloud(&bare, &ion, 300.0, 1e8, None, &opts).unwrap();
    let b = solve_cloud(&capped, &ion, 300.0, 1e8, None, &opts).unwrap();
    assert_eq!(a.shape(), b.shape());
    assert_eq!(a.profile.rho, b.profile.rho);
    assert_eq!(a.radius, b.radius);
}

#[test]
fn cold_limit_is_temperature_independent() {
    let ion = ca();
    let w = mhz_to_angular(1.0);
    let trap = LinearTrap::new(2, 0.005, 100.0, mhz_to_angular(10.0)).unwrap();
    let m = match_gamma(1e8, 0.1, &ion, &ProfileOptions::default()).unwrap();
    let c = scale_quadrupole_with_frequency(m.profile, w, &trap, &ion, 0.1).unwrap();
    let rm = quadrupole_limit_radius(&ion, w, 1e8);
    assert!(rel(c.radius, rm) < 0.02, "{} vs {rm}", c.radius);
}

#[test]
fn density_never_exceeds_limit() {
    let ion = ca();
    let w = mhz_to_angular(1.0);
    let trap = LinearTrap::new(2, 0.005, 100.0, mhz_to_angular(10.0)).unwrap();
    let nc = limit_density(&ion, w);
    for t in [1e4, 300.0, 5.0, 0.1] {
        for target in [1e6, 1e8] {
            let m = match_gamma(target, t, &ion, &ProfileOptions::default()).unwrap();
            let c = scale_quadrupole_with_frequency(m.profile, w, &trap, &ion, t).unwrap();
            assert!(c.mean_density() <= nc * (1.0 + 1e-3), "T={t}");
            assert!(c.n0 <= nc);
        }
    }
}

#[test]
fn octopole_peak_density_approaches_cold_limit() {
    let ion = ca();
    let trap = LinearTrap::new(4, 0.01, 800.0, mhz_to_angular(10.0)).unwrap();
    let rm = cold_limit_radius(&trap, &ion, 1.6e7).unwrap();
    let closed = cold_limit_density(&trap, &ion, rm).unwrap();
    let ratio = |t: f64| {
        let c = solve_cloud(&trap, &ion, t, 1.6e7, None, &ProfileOptions::default()).unwrap();
        c.peak_density() / closed
    };
    let (warm, cold) = (ratio(5.0), ratio(1.0));
    // Independent scipy solve of the same configuration: 0.62448.
    assert!((warm - 0.6245).abs() < 2e-3, "{warm}");
    assert!(cold > warm && cold < 1.0, "{cold}");
}

#[test]
fn octopole_below_resolvable_temperature_is_reported() {
    let err = match_alpha(1.6e7, 0.1, &ca(), 4, &ProfileOptions::default()).unwrap_err();
    assert!(matches!(err, multipole_trap::Error::IllConditioned { .. }), "{err:?}");
}

#[test]
fn shipped_profiles_satisfy_poisson() {
    let ion = ca();
    let opts = ProfileOptions::default();
    let mut profiles = Vec::new();
    for t in [1e4, 300.0, 5.0] {
        profiles.push(match_gamma(1e8, t, &ion, &opts).unwrap().profile);
        profiles.push(match_alpha(1.6e7, t, &ion, 4, &opts).unwrap().profile);
    }
    profiles.push(match_alpha(1.6e7, 5.0, &ion, 6, &opts).unwrap().profile);
    for p in &profiles {
        let r = p.poisson_residual();
        assert!(r < 1e-4, "{:?} {}: {r}", p.kind, p.shape);
    }
}

#[test]
fn profile_csv_has_header_and_monotone_radius() {
    let p = integrate_profile_multipole(1.9, 4, DEFAULT_EDGE_THRESHOLD).unwrap();
    let csv = p.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("rho,psi,n_over_n0"));
    let radii: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(radii.len(), p.len());
    assert!(radii.windows(2).all(|w| w[1] > w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadrupole_edge_meets_threshold(lg in -20.0f64..3.0, thr in 1e-6f64..0.5) {
        let p = integrate_profile_quadrupole(10f64.powf(lg), thr).unwrap();
        prop_assert!(p.psi[0] == 0.0);
        prop_assert!(p.rho.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(p.psi.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        prop_assert!(p.psi.last().unwrap().exp() <= thr * (1.0 + 1e-9));
        prop_assert!((p.rho_max - p.rho.last().unwrap()).abs() < 1e-12 * p.rho_max);
    }

    #[test]
    fn multipole_edge_meets_threshold(alpha in 0.2f64..1e4, k in 3u32..7) {
        let p = integrate_profile_multipole(alpha, k, DEFAULT_EDGE_THRESHOLD).unwrap();
        prop_assert!(p.psi[0] == 0.0);
        prop_assert!(p.peak_psi >= 0.0);
        prop_assert!((p.psi.last().unwrap() - p.peak_psi).exp() <= 1e-3 * (1.0 + 1e-9));
    }

    #[test]
    fn matched_density_round_trips(lg_target in 5.0f64..9.0, lg_t in -1.0f64..4.0) {
        let (target, t) = (10f64.powf(lg_target), 10f64.powf(lg_t));
        let m = match_gamma(target, t, &ca(), &ProfileOptions::default()).unwrap();
        prop_assert!(rel(m.linear_density, target) < MATCH_TOLERANCE);
    }
}
