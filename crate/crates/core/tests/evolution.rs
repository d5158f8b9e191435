use std::f64::consts::PI;

use annloewner::evolution::{
    check_index_preservation, evolve_point, evolve_trajectory, flow, reflected_evolve, reparametrize,
    semigroup_defect, univalence_spot_check, winding_index, SolverConfig, TrajectoryStatus,
};
use annloewner::kernel::circle_nodes;
use annloewner::presets::{self, MIXED_THRESHOLD, ROTATION_SPEED};
use annloewner::{CanonicalSystem, CircleMeasure, DrivingData, MeasureSegment, ScalarFn, TimeChange};
use num_complex::Complex64;
use proptest::prelude::*;

// r(t) for HarmonicDecay(1, 1), written out independently of the library
fn r_harmonic(t: f64) -> f64 {
    (-PI * (1.0 + t)).exp()
}

fn sample_points(r: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let frac = (k as f64 + 0.5) / n as f64;
            let m = r + (1.0 - r) * (0.05 + 0.9 * frac);
            Complex64::from_polar(m, 2.399 * k as f64)
        })
        .collect()
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn identity_at_equal_times() {
    let d = presets::atomic_family().unwrap();
    let z = Complex64::new(0.3, -0.4);
    let (w, traj) = evolve_point(&d, &cfg(), 0.8, 0.8, z).unwrap();
    assert_eq!(w, z);
    assert_eq!(traj.times, vec![0.8]);
    assert_eq!(reflected_evolve(&d, &cfg(), 0.8, 0.8, z).unwrap(), z);
}

#[test]
fn scaling_family_matches_closed_form() {
    let d = presets::preset("scaling").unwrap();
    for &(s, t) in &[(0.0, 1.0), (0.5, 2.0), (1.0, 4.0)] {
        for z in sample_points(r_harmonic(s), 20) {
            let (w, traj) = evolve_point(&d, &cfg(), s, t, z).unwrap();
            let exact = z * r_harmonic(t) / r_harmonic(s);
            assert!((w - exact).norm() <= 1e-8, "{s} {t} {z}");
            for (tt, rho) in traj.times.iter().zip(&traj.rho) {
                let closed = z.norm() * r_harmonic(*tt) / r_harmonic(s);
                assert!((rho - closed).abs() <= 1e-9 * closed.max(1e-3));
            }
        }
    }
}

#[test]
fn rotation_family_matches_closed_form() {
    let d = presets::preset("rotation").unwrap();
    for &(s, t) in &[(0.0, 1.0), (0.5, 2.0), (1.0, 4.0)] {
        for z in sample_points(r_harmonic(s), 20) {
            let (w, _) = evolve_point(&d, &cfg(), s, t, z).unwrap();
            let exact = z * Complex64::new(0.0, ROTATION_SPEED * (t - s)).exp();
            assert!((w - exact).norm() <= 1e-8);
        }
    }
}

#[test]
fn degenerate_families_match_closed_form() {
    let radial = presets::preset("degenerate_radial").unwrap();
    let decaying = presets::preset("degenerate_exp").unwrap();
    for &t in &[0.5, 2.0, 10.0] {
        for z in sample_points(0.0, 10) {
            let w = flow(&radial, &cfg(), 0.0, t, z).unwrap();
            assert!((w - z * (-t).exp()).norm() <= 1e-8);
            // ζ′ = 0.3i − e^{−t}
            let w = flow(&decaying, &cfg(), 0.0, t, z).unwrap();
            let exact = z * Complex64::new(-(1.0 - (-t).exp()), 0.3 * t).exp();
            assert!((w - exact).norm() <= 1e-8);
        }
    }
}

#[test]
fn reflected_family_closed_forms() {
    let scaling = presets::preset("scaling").unwrap();
    let rotation = presets::preset("rotation").unwrap();
    for &(s, t) in &[(0.0, 1.0), (0.5, 2.0)] {
        for z in sample_points(r_harmonic(s), 8) {
            let w = reflected_evolve(&scaling, &cfg(), s, t, z).unwrap();
            assert!((w - z).norm() <= 1e-8);
            let w = reflected_evolve(&rotation, &cfg(), s, t, z).unwrap();
            let exact = z * Complex64::new(0.0, -ROTATION_SPEED * (t - s)).exp() * r_harmonic(t) / r_harmonic(s);
            assert!((w - exact).norm() <= 1e-8);
        }
    }
    let deg = presets::preset("degenerate_radial").unwrap();
    assert!(reflected_evolve(&deg, &cfg(), 0.0, 1.0, Complex64::new(0.5, 0.0)).is_err());
}

#[test]
fn semigroup_on_atomic_family() {
    let d = presets::atomic_family().unwrap();
    let z = Complex64::new(0.5, 0.2);
    let defect = semigroup_defect(&d, &cfg(), 0.0, 0.7, 1.3, z).unwrap();
    assert!(defect <= 1e-6, "{defect}");
    let scaling = presets::preset("scaling").unwrap();
    assert!(semigroup_defect(&scaling, &cfg(), 0.2, 0.9, 2.5, z).unwrap() <= 1e-8);
    assert_eq!(semigroup_defect(&d, &cfg(), 0.0, 0.0, 1.3, z).unwrap(), 0.0);
    assert_eq!(semigroup_defect(&d, &cfg(), 0.0, 1.3, 1.3, z).unwrap(), 0.0);
    assert!(semigroup_defect(&d, &cfg(), 1.0, 0.5, 1.3, z).is_err());
}

#[test]
fn winding_index_examples() {
    let circle = circle_nodes(0.5, 256);
    assert_eq!(winding_index(&circle).unwrap(), 1);
    let reversed: Vec<_> = circle.iter().rev().copied().collect();
    assert_eq!(winding_index(&reversed).unwrap(), -1);
    let shifted: Vec<_> = circle.iter().map(|w| w + 2.0).collect();
    assert_eq!(winding_index(&shifted).unwrap(), 0);
    let twice: Vec<_> = circle_nodes(0.5, 256).iter().map(|w| w * w).collect();
    assert_eq!(winding_index(&twice).unwrap(), 2);
    assert!(winding_index(&circle_nodes(0.5, 3)).is_err());

    let d = presets::preset("scaling").unwrap();
    let image: Vec<_> = circle_nodes(0.5, 256)
        .into_iter()
        .map(|z| flow(&d, &cfg(), 0.0, 1.0, z).unwrap())
        .collect();
    assert_eq!(winding_index(&image).unwrap(), 1);
}

#[test]
fn index_preservation_and_univalence() {
    let families = [
        presets::preset("scaling").unwrap(),
        presets::preset("rotation").unwrap(),
        presets::atomic_family().unwrap(),
        presets::seeded_family(7).unwrap(),
    ];
    for d in &families {
        assert!(check_index_preservation(d, &cfg(), 0.0, 1.5, 0.5).unwrap());
        assert!(univalence_spot_check(d, &cfg(), 0.0, 1.5, 12).unwrap());
    }
    assert!(univalence_spot_check(&presets::seeded_family(3).unwrap(), &cfg(), 0.0, 1.0, 20).unwrap());
}

#[test]
fn reparametrization_doubles_time() {
    let d = presets::preset("scaling").unwrap();
    let fast = reparametrize(&d, &TimeChange::Linear { slope: 2.0 }).unwrap();
    let z = Complex64::new(0.4, 0.1);
    let a = flow(&fast, &cfg(), 0.0, 1.0, z).unwrap();
    let b = flow(&d, &cfg(), 0.0, 2.0, z).unwrap();
    assert!((a - b).norm() <= 1e-7);
    assert!((b - z * r_harmonic(2.0) / r_harmonic(0.0)).norm() <= 1e-8);
    assert_eq!(reparametrize(&d, &TimeChange::Identity).unwrap(), d);
}

#[test]
fn saturating_time_change_removes_the_threshold() {
    let d = presets::preset("mixed_radial").unwrap();
    let tau = TimeChange::ExpSaturate { horizon: MIXED_THRESHOLD };
    let slow = reparametrize(&d, &tau).unwrap();
    for &t in &[1.0, 5.0, 30.0] {
        assert!(slow.system().r(t) > 0.0 || slow.system().omega(t) > 0.0);
    }
    let z = Complex64::new(0.2, 0.5);
    for &(s, t) in &[(0.0, 1.0), (0.3, 2.5)] {
        let a = flow(&slow, &cfg(), s, t, z).unwrap();
        let b = flow(&d, &cfg(), tau.eval(s), tau.eval(t), z).unwrap();
        assert!((a - b).norm() <= 1e-6, "{a} {b}");
    }
}

#[test]
fn mixed_flow_crosses_threshold() {
    let d = presets::preset("mixed_radial").unwrap();
    let z = Complex64::new(0.6, -0.2);
    let at_threshold = flow(&d, &cfg(), 0.0, MIXED_THRESHOLD, z).unwrap();
    let beyond = flow(&d, &cfg(), 0.0, 2.5, z).unwrap();
    // after the threshold ζ′ = 0.5i − 1
    let exact = at_threshold * Complex64::new(-1.5, 0.75).exp();
    assert!((beyond - exact).norm() <= 1e-9);

    // uniform measures before the threshold: pure rotation up to 𝒯
    let uniform = DrivingData::new(
        CanonicalSystem::AffineToZero { omega0: 1.0, threshold: 1.0 },
        ScalarFn::constant(0.5),
        vec![
            MeasureSegment::new(0.0, CircleMeasure::zero(), CircleMeasure::uniform(1.0).unwrap()),
            MeasureSegment::new(1.0, CircleMeasure::uniform(1.0).unwrap(), CircleMeasure::zero()),
        ],
        ScalarFn::constant(1.0),
    )
    .unwrap();
    for &t in &[0.5, 0.9995, 1.0, 1.7] {
        let w = flow(&uniform, &cfg(), 0.0, t, z).unwrap();
        let exact = z * Complex64::new(-(t - 1.0).max(0.0), 0.5 * t).exp();
        assert!((w - exact).norm() <= 1e-10, "{t}");
    }
}

#[test]
fn guard_reports_instead_of_clamping() {
    let d = presets::preset("scaling").unwrap();
    let tight = SolverConfig {
        boundary_guard: 0.5,
        ..SolverConfig::default()
    };
    let traj = evolve_trajectory(&d, &tight, 0.0, 1.0, Complex64::new(0.5, 0.0)).unwrap();
    assert!(matches!(traj.status, TrajectoryStatus::Completed));
    // log|w| stays inside the outer guard band
    let rot = presets::preset("rotation").unwrap();
    let traj = evolve_trajectory(&rot, &tight, 0.0, 1.0, Complex64::new(0.9, 0.0)).unwrap();
    assert!(matches!(traj.status, TrajectoryStatus::GuardHit { .. }));
    assert!(evolve_point(&rot, &tight, 0.0, 1.0, Complex64::new(0.9, 0.0)).is_err());
}

#[test]
fn trajectory_csv_columns() {
    let d = presets::preset("scaling").unwrap();
    let (_, traj) = evolve_point(&d, &cfg(), 0.0, 1.0, Complex64::new(0.5, 0.0)).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&d, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,re_w,im_w,rho,r_of_t");
    assert_eq!(lines.count(), traj.times.len());
}

#[test]
fn invalid_starts_rejected() {
    let d = presets::preset("scaling").unwrap();
    assert!(flow(&d, &cfg(), 0.0, 1.0, Complex64::new(1.0, 0.0)).is_err());
    assert!(flow(&d, &cfg(), 0.0, 1.0, Complex64::new(1e-3, 0.0)).is_err());
    assert!(flow(&d, &cfg(), 1.0, 0.5, Complex64::new(0.5, 0.0)).is_err());
    let bad = SolverConfig {
        rel_tol: 0.0,
        ..SolverConfig::default()
    };
    assert!(flow(&d, &bad, 0.0, 1.0, Complex64::new(0.5, 0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn completed_trajectories_stay_in_the_annulus(
        seed in 0u64..50,
        frac in 0.05f64..0.95,
        theta in 0.0f64..6.28,
        t in 0.1f64..3.0,
    ) {
        let d = presets::seeded_family(seed).unwrap();
        let r0 = d.system().r(0.0);
        let z = Complex64::from_polar(r0 + (1.0 - r0) * frac, theta);
        let traj = evolve_trajectory(&d, &cfg(), 0.0, t, z).unwrap();
        prop_assert!(traj.is_completed());
        prop_assert_eq!(traj.times[0], 0.0);
        prop_assert_eq!(traj.points[0], z);
        for w in traj.times.windows(2) {
            prop_assert!(w[1] > w[0]);
        }
        for (tt, rho) in traj.times.iter().zip(&traj.rho) {
            prop_assert!(*rho > d.system().r(*tt) && *rho < 1.0);
        }
    }

    #[test]
    fn flows_compose(seed in 0u64..50, u in 0.1f64..1.0, extra in 0.1f64..1.0) {
        let d = presets::seeded_family(seed).unwrap();
        let z = Complex64::new(0.45, 0.25);
        let defect = semigroup_defect(&d, &cfg(), 0.0, u, u + extra, z).unwrap();
        prop_assert!(defect <= 1e-6);
    }
}
