use std::f64::consts::TAU;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use annloewner::chain::{
    boundary_bound_check, chain_compat_defect, loewner_range_estimate, out_domain_check, pde_residual_check,
    write_image_csv, ChainApproximation, RangeReport,
};
use annloewner::classify::{classify_type, TypeReport};
use annloewner::evolution::{
    annulus_grid, check_index_preservation, evolve_trajectory, SolverConfig, TrajectoryStatus,
};
use annloewner::export::to_json_string;
use annloewner::kernel::circle_nodes;
use annloewner::selftest::{run_all, CriterionResult, DEFAULT_SEED};
use annloewner::{free_term, herglotz_eval, validate_driving, villat_eval, villat_reconstruct, ValidationReport};
use annloewner::{CircleMeasure, KernelTolerance};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, ChainConfig, ClassifyRunConfig, EvolveConfig, KernelConfig, ValidateConfig};
use crate::Failure;

pub struct Options {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

impl Options {
    fn tol(&self) -> Result<Option<f64>, Failure> {
        match self.tol {
            Some(t) if !(t.is_finite() && t > 0.0) => Err(Failure::Usage(format!("--tol must be positive, got {t}"))),
            t => Ok(t),
        }
    }

    fn solver(&self, base: SolverConfig) -> Result<SolverConfig, Failure> {
        let cfg = match self.tol()? {
            Some(t) => base.scaled_tolerances(t / base.rel_tol),
            None => base,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Path of `name` inside `--out`, creating the directory on first use.
    fn output(&self, name: &str) -> Result<Option<PathBuf>, Failure> {
        let Some(dir) = &self.out else { return Ok(None) };
        fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Some(dir.join(name)))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Failure> {
        if let Some(path) = self.output(name)? {
            let text = to_json_string(value)?;
            fs::write(&path, text).map_err(|e| io_failure(&path, e))?;
        }
        Ok(())
    }

    fn create(&self, name: &str) -> Result<Option<BufWriter<File>>, Failure> {
        match self.output(name)? {
            Some(path) => Ok(Some(BufWriter::new(File::create(&path).map_err(|e| io_failure(&path, e))?))),
            None => Ok(None),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("cannot write {}: {e}", path.display()))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn kernel_points(cfg: &KernelConfig) -> Vec<Complex64> {
    if let Some(points) = &cfg.points {
        return points.clone();
    }
    let r = cfg.r;
    let mut pts = Vec::with_capacity(cfg.grid.moduli * cfg.grid.angles);
    for i in 0..cfg.grid.moduli {
        let m = r + (1.0 - r) * (i as f64 + 0.5) / cfg.grid.moduli as f64;
        for j in 0..cfg.grid.angles {
            pts.push(Complex64::from_polar(m, TAU * (j as f64 + 0.25) / cfg.grid.angles as f64));
        }
    }
    pts
}

#[derive(Serialize)]
struct KernelReport {
    r: f64,
    points: usize,
    free_term: Complex64,
    free_term_error: f64,
    reconstruction_max_error: Option<f64>,
    passed: bool,
}

pub fn kernel(opts: &Options) -> Result<(), Failure> {
    let mut cfg: KernelConfig = config::load(opts.config.as_deref())?;
    if let Some(t) = opts.tol()? {
        cfg.tolerance = KernelTolerance::new(t, cfg.tolerance.max_terms)?;
    }
    let tol = cfg.tolerance;
    let r = cfg.r;
    let points = kernel_points(&cfg);
    let measures = match (&cfg.mu1, &cfg.mu2) {
        (None, None) => None,
        (a, b) => Some((
            a.clone().unwrap_or_else(CircleMeasure::zero),
            b.clone().unwrap_or_else(CircleMeasure::zero),
        )),
    };
    let rows: Vec<(Complex64, Complex64, Option<Complex64>)> = points
        .par_iter()
        .map(|&z| {
            let k = villat_eval(r, z, &tol)?;
            let p = match &measures {
                Some((m1, m2)) => Some(herglotz_eval(r, m1, m2, z, &tol)?),
                None => None,
            };
            Ok((z, k, p))
        })
        .collect::<annloewner::Result<_>>()?;

    let radius = if r > 0.0 { r.sqrt() } else { 0.5 };
    let samples: Vec<Complex64> = circle_nodes(radius, cfg.free_term_nodes.max(8))
        .into_iter()
        .map(|z| villat_eval(r, z, &tol))
        .collect::<annloewner::Result<_>>()?;
    let n_k = free_term(&samples)?;
    let free_term_error = (n_k - 1.0).norm();

    // test function 2z + 3 + r²/z, whose real part is known on both circles
    let reconstruction_max_error = if r > 0.0 && cfg.reconstruction_nodes > 0 {
        let f = |z: Complex64| 2.0 * z + 3.0 + r * r / z;
        let n = cfg.reconstruction_nodes;
        let outer: Vec<f64> = circle_nodes(1.0, n).into_iter().map(|z| f(z).re).collect();
        let inner: Vec<f64> = circle_nodes(r, n).into_iter().map(|z| f(z).re).collect();
        let errs = points
            .par_iter()
            .filter(|z| z.norm() > r && z.norm() < 1.0)
            .map(|&z| Ok((villat_reconstruct(r, &outer, &inner, 0.0, z, &tol)? - f(z)).norm()))
            .collect::<annloewner::Result<Vec<f64>>>()?;
        Some(errs.into_iter().fold(0.0, f64::max))
    } else {
        None
    };

    let passed = free_term_error <= 1e-9 && reconstruction_max_error.is_none_or(|e| e <= 1e-8);
    let report = KernelReport {
        r,
        points: rows.len(),
        free_term: n_k,
        free_term_error,
        reconstruction_max_error,
        passed,
    };

    if let Some(out) = opts.create("kernel.csv")? {
        let io = |e: csv::Error| Failure::Usage(format!("csv output failed: {e}"));
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["re_z", "im_z", "re_k", "im_k"];
        if measures.is_some() {
            header.extend(["re_p", "im_p"]);
        }
        wtr.write_record(&header).map_err(io)?;
        for (z, k, p) in &rows {
            let mut rec = vec![z.re, z.im, k.re, k.im];
            if let Some(p) = p {
                rec.extend([p.re, p.im]);
            }
            wtr.write_record(rec.iter().map(|v| format!("{v:.16e}"))).map_err(io)?;
        }
        wtr.flush().map_err(|e| Failure::Usage(format!("csv output failed: {e}")))?;
    }
    opts.write_json("kernel.json", &report)?;

    println!("kernel r = {r}: {} points evaluated", rows.len());
    println!("  free term of K_r   {:.3e} from 1  {}", free_term_error, verdict(free_term_error <= 1e-9));
    match reconstruction_max_error {
        Some(e) => println!("  reconstruction     max error {e:.3e}  {}", verdict(e <= 1e-8)),
        None => println!("  reconstruction     skipped"),
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification("kernel checks out of tolerance".into()))
    }
}

#[derive(Serialize)]
struct EvolvedPoint {
    z: Complex64,
    end: Complex64,
    status: TrajectoryStatus,
    steps: usize,
}

pub fn evolve(opts: &Options) -> Result<(), Failure> {
    let cfg: EvolveConfig = config::load(opts.config.as_deref())?;
    let solver = opts.solver(cfg.solver)?;
    let data = &cfg.driving.0;
    let trajectories = cfg
        .points
        .par_iter()
        .map(|&z| evolve_trajectory(data, &solver, cfg.s, cfg.t, z))
        .collect::<annloewner::Result<Vec<_>>>()?;

    let mut results = Vec::with_capacity(trajectories.len());
    for (k, (traj, &z)) in trajectories.iter().zip(&cfg.points).enumerate() {
        results.push(EvolvedPoint {
            z,
            end: traj.end(),
            status: traj.status,
            steps: traj.times.len().saturating_sub(1),
        });
        if cfg.write_trajectories {
            if let Some(out) = opts.create(&format!("trajectory_{k:03}.csv"))? {
                traj.write_csv(data, out)?;
            }
        }
    }
    opts.write_json("evolve.json", &results)?;

    println!("evolve s = {} -> t = {}: {} points", cfg.s, cfg.t, results.len());
    for p in &results {
        println!(
            "  z = {:+.6}{:+.6}i  ->  {:+.12}{:+.12}i  {:?}",
            p.z.re, p.z.im, p.end.re, p.end.im, p.status
        );
    }
    let failed = results.iter().filter(|p| p.status != TrajectoryStatus::Completed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Solver(format!("{failed} trajectories did not complete")))
    }
}

fn print_validation(report: &ValidationReport) {
    for c in &report.conditions {
        println!("  ({:>3}) {:<44} {}  {}", c.id, c.description, verdict(c.passed), c.detail);
    }
}

pub fn validate(opts: &Options) -> Result<(), Failure> {
    let cfg: ValidateConfig = config::load(opts.config.as_deref())?;
    let report = validate_driving(&cfg.driving.0, &cfg.quad);
    opts.write_json("validate.json", &report)?;
    println!("validation: {}", if report.passed { "accepted" } else { "rejected" });
    print_validation(&report);
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verification("driving data rejected".into()))
    }
}

#[derive(Serialize)]
struct ClassifyOutput {
    validation: ValidationReport,
    report: Option<TypeReport>,
}

pub fn classify(opts: &Options) -> Result<(), Failure> {
    let mut cfg: ClassifyRunConfig = config::load(opts.config.as_deref())?;
    cfg.classify.solver = opts.solver(cfg.classify.solver)?;
    let data = &cfg.driving.0;
    let validation = validate_driving(data, &cfg.classify.quad);
    if !validation.passed {
        println!("validation: rejected");
        print_validation(&validation);
        opts.write_json("classify.json", &ClassifyOutput { validation, report: None })?;
        return Err(Failure::Verification("driving data rejected".into()));
    }
    let report = classify_type(data, &cfg.classify)?;
    println!("{}", report.summary());
    let consistent = report.consistent;
    opts.write_json(
        "classify.json",
        &ClassifyOutput {
            validation,
            report: Some(report),
        },
    )?;
    if consistent {
        Ok(())
    } else {
        Err(Failure::Verification("trajectory probes disagree with the integral criteria".into()))
    }
}

#[derive(Serialize)]
struct PdeReport {
    s: f64,
    z: Complex64,
    steps: Vec<f64>,
    residuals: Vec<f64>,
    order: Option<f64>,
    passed: bool,
}

#[derive(Serialize)]
struct ChainReport {
    horizon: f64,
    seed: u64,
    samples: usize,
    max_compat_defect: f64,
    compat_passed: bool,
    boundary_bound_passed: bool,
    out_domain_passed: bool,
    index_preserved: bool,
    pde: Option<PdeReport>,
    range: RangeReport,
    passed: bool,
}

pub fn chain(opts: &Options) -> Result<(), Failure> {
    let cfg: ChainConfig = config::load(opts.config.as_deref())?;
    let solver = opts.solver(cfg.solver)?;
    let data = cfg.driving.0.clone();
    let chain = ChainApproximation::new(data.clone(), cfg.horizon, solver)?;
    let seed = opts.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sys = data.system();

    let mut sampled = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let s = rng.gen_range(0.0..cfg.horizon);
        let t = rng.gen_range(s..=cfg.horizon);
        let r = sys.r(s);
        let m = r + (1.0 - r) * rng.gen_range(0.3..0.95);
        let radius = r + (m - r) * rng.gen_range(0.2..0.8);
        sampled.push((s, t, radius, Complex64::from_polar(m, rng.gen_range(0.0..TAU))));
    }

    let defects = sampled
        .par_iter()
        .map(|&(s, t, _, z)| chain_compat_defect(&chain, s, t, z))
        .collect::<annloewner::Result<Vec<f64>>>()?;
    let max_compat_defect = defects.into_iter().fold(0.0, f64::max);
    let bound_samples: Vec<(f64, Complex64)> = sampled.iter().map(|&(s, _, _, z)| (s, z)).collect();
    let boundary_bound_passed = boundary_bound_check(&chain, &bound_samples)?;
    let mut out_domain_passed = true;
    for &(s, _, radius, z) in &sampled {
        out_domain_passed &= out_domain_check(&chain, s, radius, z, 256)?;
    }
    let r0 = sys.r(0.0);
    let index_preserved = check_index_preservation(&data, &solver, 0.0, cfg.horizon, r0 + 0.5 * (1.0 - r0))?;

    let pde = match &cfg.pde {
        None => None,
        Some(spec) => {
            let residuals = spec
                .steps
                .iter()
                .map(|&h| pde_residual_check(&chain, spec.s, spec.z, h))
                .collect::<annloewner::Result<Vec<f64>>>()?;
            let order = (residuals.len() >= 2).then(|| {
                residuals
                    .windows(2)
                    .zip(spec.steps.windows(2))
                    .map(|(r, h)| (r[0] / r[1]).ln() / (h[0] / h[1]).ln())
                    .fold(f64::INFINITY, f64::min)
            });
            let passed = match (spec.min_order, order) {
                (Some(want), Some(got)) => got >= want,
                (Some(_), None) => false,
                (None, _) => true,
            };
            Some(PdeReport {
                s: spec.s,
                z: spec.z,
                steps: spec.steps.clone(),
                residuals,
                order,
                passed,
            })
        }
    };

    let grid: Vec<(f64, Complex64)> = annulus_grid(r0, cfg.grid_size).into_iter().map(|z| (0.0, z)).collect();
    let range = loewner_range_estimate(&chain, &grid)?;
    if let Some(out) = opts.create("chain_image.csv")? {
        write_image_csv(&chain, &grid, out)?;
    }

    let compat_passed = max_compat_defect <= 1e-6;
    let passed = compat_passed
        && boundary_bound_passed
        && out_domain_passed
        && index_preserved
        && pde.as_ref().is_none_or(|p| p.passed);
    let report = ChainReport {
        horizon: cfg.horizon,
        seed,
        samples: cfg.samples,
        max_compat_defect,
        compat_passed,
        boundary_bound_passed,
        out_domain_passed,
        index_preserved,
        pde,
        range,
        passed,
    };
    opts.write_json("chain.json", &report)?;

    println!("chain on [0, {}] with {} samples (seed {seed})", cfg.horizon, cfg.samples);
    println!("  compatibility defect  {:.3e}  {}", max_compat_defect, verdict(compat_passed));
    println!("  boundary bound        {}", verdict(boundary_bound_passed));
    println!("  outer component       {}", verdict(out_domain_passed));
    println!("  index preservation    {}", verdict(index_preserved));
    if let Some(p) = &report.pde {
        let order = p.order.map_or("-".to_string(), |o| format!("{o:.2}"));
        println!("  pde residual order    {order}  {}", verdict(p.passed));
    }
    println!(
        "  range                 |f_t| in [{:.6e}, {:.6e}], type {} ({})",
        report.range.min_modulus, report.range.max_modulus, report.range.declared_type, report.range.label
    );
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification("chain checks failed".into()))
    }
}

pub fn selftest(opts: &Options) -> Result<(), Failure> {
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let results: Vec<CriterionResult> = run_all(seed);
    for r in &results {
        println!("{}", r.line());
    }
    opts.write_json("selftest.json", &results)?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        println!("all {} criteria passed", results.len());
        Ok(())
    } else {
        Err(Failure::Verification(format!("{failed} of {} criteria failed", results.len())))
    }
}
