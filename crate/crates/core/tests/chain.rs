use std::f64::consts::PI;

use annloewner::chain::{
    boundary_bound, boundary_bound_check, chain_compat_defect, chain_eval, chain_eval_reflected, loewner_range_estimate,
    out_domain_check, pde_residual_check, write_image_csv, ChainApproximation,
};
use annloewner::classify::ConformalType;
use annloewner::evolution::{check_index_preservation, univalence_spot_check, SolverConfig};
use annloewner::presets::{self, split_family, ROTATION_SPEED};
use annloewner::{CanonicalSystem, DrivingData};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chain(data: DrivingData, horizon: f64) -> ChainApproximation {
    ChainApproximation::new(data, horizon, SolverConfig::default()).unwrap()
}

fn r_harmonic(t: f64) -> f64 {
    (-PI * (1.0 + t)).exp()
}

fn random_samples(c: &ChainApproximation, n: usize, seed: u64) -> Vec<(f64, Complex64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let t = rng.gen_range(0.0..c.horizon);
            let r = c.data.system().r(t);
            let m = r + (1.0 - r) * rng.gen_range(0.02..0.98);
            (t, Complex64::from_polar(m, rng.gen_range(0.0..6.283)))
        })
        .collect()
}

#[test]
fn closed_form_chains() {
    let scaling = chain(presets::preset("scaling").unwrap(), 2.0);
    let rotation = chain(presets::preset("rotation").unwrap(), 2.0);
    let z = Complex64::new(0.35, 0.3);
    for &t in &[0.0, 0.5, 1.7] {
        let f = chain_eval(&scaling, t, z).unwrap();
        assert!((f - z * r_harmonic(2.0) / r_harmonic(t)).norm() <= 1e-10);
        let f = chain_eval(&rotation, t, z).unwrap();
        assert!((f - z * Complex64::new(0.0, ROTATION_SPEED * (2.0 - t)).exp()).norm() <= 1e-10);
    }
    assert_eq!(chain_eval(&scaling, 2.0, z).unwrap(), z);
    assert!(chain_eval(&scaling, 2.5, z).is_err());
    // orientation-reversing companion of the scaling chain is the identity
    assert!((chain_eval_reflected(&scaling, 0.5, z).unwrap() - z).norm() <= 1e-10);
    assert_eq!(scaling.orientation(), 1);
}

#[test]
fn compatibility_defect() {
    let z = Complex64::new(0.5, 0.2);
    let scaling = chain(presets::preset("scaling").unwrap(), 1.3);
    assert!(chain_compat_defect(&scaling, 0.0, 0.7, z).unwrap() <= 1e-8);
    let atomic = chain(presets::atomic_family().unwrap(), 1.3);
    assert!(chain_compat_defect(&atomic, 0.0, 0.7, z).unwrap() <= 1e-6);
    assert_eq!(chain_compat_defect(&atomic, 0.4, 0.4, z).unwrap(), 0.0);
    assert!(chain_compat_defect(&atomic, 0.9, 0.4, z).is_err());
}

#[test]
fn boundary_bound_examples() {
    // r(T)/r(0) = 0.1 for the harmonic decay
    let horizon = 10f64.ln() / PI;
    let scaling = chain(presets::preset("scaling").unwrap(), horizon);
    let z = Complex64::new(0.5, 0.0);
    let f = chain_eval(&scaling, 0.0, z).unwrap();
    assert!((f.norm() - 0.05).abs() < 1e-10);
    assert!((boundary_bound(z) - PI / (2.0 * 2f64.ln()).sqrt()).abs() < 1e-15);
    assert!((boundary_bound(z) - 2.668).abs() < 1e-3);
    assert!(boundary_bound_check(&scaling, &[(0.0, z), (0.1, Complex64::new(0.0, 0.999))]).unwrap());

    let atomic = chain(presets::atomic_family().unwrap(), 1.5);
    let samples = random_samples(&atomic, 100, 11);
    assert!(boundary_bound_check(&atomic, &samples).unwrap());
}

#[test]
fn out_domain_examples() {
    let z = Complex64::from_polar(0.7, 0.3);
    for d in [
        presets::preset("scaling").unwrap(),
        presets::preset("rotation").unwrap(),
        presets::seeded_family(5).unwrap(),
    ] {
        let c = chain(d, 1.0);
        assert!(out_domain_check(&c, 0.0, 0.4, z, 512).unwrap());
    }
    let c = chain(presets::preset("scaling").unwrap(), 1.0);
    assert!(out_domain_check(&c, 0.0, 0.8, z, 512).is_err());
}

fn empirical_order(c: &ChainApproximation, s: f64, z: Complex64) -> (Vec<f64>, f64) {
    let hs = [1e-2, 1e-3, 1e-4];
    let res: Vec<f64> = hs.iter().map(|&h| pde_residual_check(c, s, z, h).unwrap()).collect();
    let order = (res[0] / res[2]).log10() / 2.0;
    (res, order)
}

#[test]
fn pde_residual_orders() {
    let z = Complex64::new(0.3, 0.4);
    for name in ["scaling", "rotation"] {
        let c = chain(presets::preset(name).unwrap(), 2.0);
        let (res, order) = empirical_order(&c, 0.8, z);
        assert!(order >= 1.8, "{name}: {res:?}");
    }
    let still = chain(presets::scaling_family(CanonicalSystem::ConstantOmega { omega0: 1.0 }).unwrap(), 2.0);
    assert!(pde_residual_check(&still, 0.8, z, 1e-3).unwrap() < 1e-12);
    let c = chain(presets::preset("scaling").unwrap(), 2.0);
    assert!(pde_residual_check(&c, 0.001, z, 1e-2).is_err());
}

#[test]
fn pde_residual_small_on_atomic_chain() {
    let c = chain(presets::atomic_family().unwrap(), 2.0);
    let res = pde_residual_check(&c, 0.8, Complex64::new(0.3, 0.4), 1e-3).unwrap();
    assert!(res < 1e-5, "{res}");
}

#[test]
fn chain_axioms_on_presets() {
    for d in [
        presets::preset("scaling").unwrap(),
        presets::preset("rotation").unwrap(),
        presets::atomic_family().unwrap(),
    ] {
        let horizon = 1.5;
        let c = chain(d.clone(), horizon);
        // univalence and index preservation of f_0 = φ_{0,T}
        assert!(univalence_spot_check(&d, &c.cfg, 0.0, horizon, 10).unwrap());
        assert!(check_index_preservation(&d, &c.cfg, 0.0, horizon, 0.5).unwrap());
        // images of f_s stay inside D_T
        let r_t = d.system().r(horizon);
        for (t, z) in random_samples(&c, 30, 3) {
            let m = chain_eval(&c, t, z).unwrap().norm();
            assert!(m > r_t && m < 1.0);
        }
    }
}

#[test]
fn range_estimates() {
    let sys = CanonicalSystem::ExpApproach { omega0: 2.0, omega_inf: 1.0, lambda: 1.0 };
    let grid = |r0: f64| -> Vec<(f64, Complex64)> {
        (1..20)
            .map(|k| (0.0, Complex64::from_polar(r0 + (1.0 - r0) * k as f64 / 20.0, k as f64)))
            .collect()
    };
    let mut inner = Vec::new();
    for &horizon in &[2.0, 5.0] {
        let c = chain(split_family(sys.clone(), 1.0, 0.0).unwrap(), horizon);
        let report = loewner_range_estimate(&c, &grid(sys.r(0.0))).unwrap();
        assert_eq!(report.declared_type, ConformalType::I);
        assert!(report.min_modulus > sys.r(horizon));
        inner.push(report.min_modulus);
    }
    assert!(inner[1] < inner[0]);

    let still = chain(
        presets::scaling_family(CanonicalSystem::ConstantOmega { omega0: 1.0 }).unwrap(),
        1.0,
    );
    let g = grid((-PI).exp());
    let report = loewner_range_estimate(&still, &g).unwrap();
    assert_eq!(report.declared_type, ConformalType::I);
    let (lo, hi) = g.iter().fold((1.0f64, 0.0f64), |(a, b), (_, z)| (a.min(z.norm()), b.max(z.norm())));
    assert!((report.min_modulus - lo).abs() < 1e-12 && (report.max_modulus - hi).abs() < 1e-12);
}

#[test]
fn image_csv() {
    let c = chain(presets::preset("rotation").unwrap(), 1.0);
    let grid = vec![(0.0, Complex64::new(0.5, 0.0)), (0.5, Complex64::new(0.0, 0.3))];
    let mut buf = Vec::new();
    write_image_csv(&c, &grid, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,re_f,im_f,abs_f\n"));
    assert_eq!(text.lines().count(), 3);
}
