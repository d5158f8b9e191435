//! Evolution families generated by the Carathéodory ODE `ẇ = G(w,t)`.
//!
//! Trajectories are integrated in the logarithmic coordinate `ζ = log w`,
//! where the equation reads `ζ′ = G(e^ζ,t)/e^ζ`. This keeps relative accuracy
//! for orbits that shrink towards the origin and turns the scaling and
//! rotation families into linear motions. Steps never straddle a driving
//! breakpoint.

mod dopri;

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain_system::SystemKind;
use crate::error::{Error, Result};
use crate::kernel::{circle_nodes, KernelTolerance};
use crate::timefn::TimeChange;
use crate::vector_field::DrivingData;

use dopri::StepControl;

/// Below this log-modulus a trajectory in the punctured disk is treated as
/// having reached the puncture.
const PUNCTURE_LOG_MODULUS: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Guard width `ε`, applied to `log|w|`: integration halts when
    /// `log|w| ≥ −ε` or `log|w| ≤ log r(t) + ε`.
    pub boundary_guard: f64,
    pub max_steps: usize,
    pub kernel: KernelTolerance,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 1.0,
            boundary_guard: 1e-9,
            max_steps: 200_000,
            kernel: KernelTolerance::new(1e-14, 1_000_000).expect("valid kernel tolerance"),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.rel_tol) || !positive(self.abs_tol) || !positive(self.max_step) {
            return Err(Error::InvalidInput("solver tolerances and max_step must be positive".into()));
        }
        if !(self.boundary_guard > 0.0 && self.boundary_guard < 1.0) {
            return Err(Error::InvalidInput("boundary_guard must lie in (0, 1)".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be positive".into()));
        }
        Ok(())
    }

    /// Same settings with both tolerances multiplied by `factor`.
    pub fn scaled_tolerances(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }

    fn control(&self) -> StepControl {
        StepControl {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    GuardHit { t: f64 },
    StepFailure { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Complex64>,
    pub rho: Vec<f64>,
    pub status: TrajectoryStatus,
    /// Diagnostic attached to a non-completed status.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Trajectory {
    fn start(s: f64, z: Complex64) -> Self {
        Self {
            times: vec![s],
            points: vec![z],
            rho: vec![z.norm()],
            status: TrajectoryStatus::Completed,
            message: None,
        }
    }

    fn push(&mut self, t: f64, log_w: Complex64) {
        let w = log_w.exp();
        self.times.push(t);
        self.points.push(w);
        self.rho.push(log_w.re.exp());
    }

    pub fn is_completed(&self) -> bool {
        self.status == TrajectoryStatus::Completed
    }

    pub fn end(&self) -> Complex64 {
        *self.points.last().expect("trajectory is never empty")
    }

    /// Writes the columns `t, re_w, im_w, rho, r_of_t`.
    pub fn write_csv<W: Write>(&self, data: &DrivingData, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv output failed: {e}"));
        wtr.write_record(["t", "re_w", "im_w", "rho", "r_of_t"]).map_err(io)?;
        for ((t, w), rho) in self.times.iter().zip(&self.points).zip(&self.rho) {
            wtr.write_record([
                format!("{t:.16e}"),
                format!("{:.16e}", w.re),
                format!("{:.16e}", w.im),
                format!("{rho:.16e}"),
                format!("{:.16e}", data.system().r(*t)),
            ])
            .map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::InvalidInput(format!("csv output failed: {e}")))
    }
}

fn check_start(data: &DrivingData, s: f64, t: f64, z: Complex64) -> Result<()> {
    if !(s >= 0.0 && t >= s && t.is_finite()) {
        return Err(Error::InvalidInput(format!("need 0 <= s <= t < inf, got s = {s}, t = {t}")));
    }
    let r = data.system().r(s);
    let m = z.norm();
    if !(m > r && m < 1.0) {
        return Err(Error::Domain(format!("|z| = {m} outside D_s = ({r}, 1) at s = {s}")));
    }
    Ok(())
}

struct Guard<'a> {
    data: &'a DrivingData,
    eps: f64,
}

impl Guard<'_> {
    fn check(&self, t: f64, log_w: Complex64) -> Result<()> {
        if !(log_w.re < -self.eps) {
            return Err(Error::GuardHit { t });
        }
        let ln_r = self.data.system().ln_r(t);
        let inner = if ln_r == f64::NEG_INFINITY {
            PUNCTURE_LOG_MODULUS
        } else {
            ln_r + self.eps
        };
        if !(log_w.re > inner) {
            return Err(Error::GuardHit { t });
        }
        Ok(())
    }
}

/// Pieces `[a, b]` of `[s, t]` on which the field is smooth.
fn pieces(data: &DrivingData, s: f64, t: f64) -> Vec<(f64, f64)> {
    let mut knots = vec![s];
    knots.extend(data.breakpoints().into_iter().filter(|&k| k > s && k < t));
    knots.push(t);
    knots.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Integrates `log w` from `(s, log z)` to `t`, recording each accepted step.
fn integrate_log(data: &DrivingData, cfg: &SolverConfig, s: f64, t: f64, z: Complex64, traj: &mut Trajectory) -> Result<Complex64> {
    let guard = Guard { data, eps: cfg.boundary_guard };
    let ctl = cfg.control();
    let threshold = match data.system().kind() {
        SystemKind::Mixed { threshold } => Some(threshold),
        _ => None,
    };
    let mut zeta = z.ln();
    let mut h_hint = None;
    let mut steps = 0usize;
    for (a, b) in pieces(data, s, t) {
        let locator = 0.5 * (a + b);
        let segment = data.segment_at(locator);
        // last stretch before the mixed threshold, handled in closed form
        let exact_from = threshold.filter(|&th| {
            a < th && segment.is_uniform() && next_breakpoint_after(data, a) == Some(th)
        })
        .map(|th| th - (1e-3 * th).min(0.5 * (th - a)));
        let numeric_end = exact_from.map_or(b, |e| e.min(b));
        if numeric_end > a {
            let (zeta_end, h) = dopri::integrate(
                |tt, y| data.log_field(y.exp(), tt, locator, &cfg.kernel),
                a,
                numeric_end,
                zeta,
                h_hint,
                &ctl,
                &mut steps,
                |tt, y| {
                    guard.check(tt, y)?;
                    traj.push(tt, y);
                    Ok(())
                },
            )?;
            zeta = zeta_end;
            h_hint = Some(h);
        }
        if let Some(e) = exact_from {
            let lo = e.max(a);
            if b > lo {
                zeta += uniform_increment(data, lo, b, locator);
                guard.check(b, zeta)?;
                traj.push(b, zeta);
            }
        }
    }
    Ok(zeta)
}

fn next_breakpoint_after(data: &DrivingData, a: f64) -> Option<f64> {
    data.breakpoints().into_iter().find(|&k| k > a)
}

/// Exact `∫_a^b G(w,t)/w dt` for uniform measures, where `G/w` does not
/// depend on `w`: `i∫C + ν·log(r(b)/r(a))`.
fn uniform_increment(data: &DrivingData, a: f64, b: f64, locator: f64) -> Complex64 {
    let nu = data.segment_at(locator).nu();
    let radial = if nu == 0.0 { 0.0 } else { nu * data.system().log_ratio(a, b) };
    Complex64::new(radial, data.rotation().integral(a, b))
}

/// Integrates `φ_{s,t}(z)` and returns the full trajectory. Preconditions
/// are reported as errors; solver trouble is reported through the
/// trajectory status.
pub fn evolve_trajectory(data: &DrivingData, cfg: &SolverConfig, s: f64, t: f64, z: Complex64) -> Result<Trajectory> {
    cfg.validate()?;
    check_start(data, s, t, z)?;
    let mut traj = Trajectory::start(s, z);
    if t == s {
        return Ok(traj);
    }
    if let Err(e) = integrate_log(data, cfg, s, t, z, &mut traj) {
        match e {
            Error::GuardHit { t } => traj.status = TrajectoryStatus::GuardHit { t },
            Error::StepFailure { t, ref reason } => {
                traj.status = TrajectoryStatus::StepFailure { t };
                traj.message = Some(reason.clone());
            }
            other => {
                traj.status = TrajectoryStatus::StepFailure { t: *traj.times.last().unwrap() };
                traj.message = Some(other.to_string());
            }
        }
    }
    Ok(traj)
}

fn log_evolve(data: &DrivingData, cfg: &SolverConfig, s: f64, t: f64, z: Complex64) -> Result<Complex64> {
    cfg.validate()?;
    check_start(data, s, t, z)?;
    if t == s {
        return Ok(z.ln());
    }
    let mut traj = Trajectory::start(s, z);
    integrate_log(data, cfg, s, t, z, &mut traj)
}

/// `φ_{s,t}(z)` together with the trajectory of accepted steps.
pub fn evolve_point(data: &DrivingData, cfg: &SolverConfig, s: f64, t: f64, z: Complex64) -> Result<(Complex64, Trajectory)> {
    let traj = evolve_trajectory(data, cfg, s, t, z)?;
    match traj.status {
        TrajectoryStatus::Completed => Ok((if t == s { z } else { traj.end() }, traj)),
        TrajectoryStatus::GuardHit { t } => Err(Error::GuardHit { t }),
        TrajectoryStatus::StepFailure { t } => Err(Error::StepFailure {
            t,
            reason: traj.message.clone().unwrap_or_default(),
        }),
    }
}

/// `φ_{s,t}(z)` without keeping the trajectory.
pub fn flow(data: &DrivingData, cfg: &SolverConfig, s: f64, t: f64, z: Complex64) -> Result<Complex64> {
    if t == s {
        check_start(data, s, t, z)?;
        return Ok(z);
    }
    Ok(log_evolve(data, cfg, s, t, z)?.exp())
}

/// Reflected family `φ̃_{s,t}(z) = r(t)/φ_{s,t}(r(s)/z)`.
pub fn reflected_evolve(data: &DrivingData, cfg: &SolverConfig, s: f64, t: f64, z: Complex64) -> Result<Complex64> {
    let sys = data.system();
    for &u in &[s, t] {
        if sys.omega(u) <= 0.0 {
            return Err(Error::DegenerateTime(u));
        }
    }
    check_start(data, s, t, z)?;
    if t == s {
        return Ok(z);
    }
    let ln_rs = sys.ln_r(s);
    let ln_rt = sys.ln_r(t);
    let inner = Complex64::new(ln_rs, 0.0) - z.ln();
    let zeta = log_evolve(data, cfg, s, t, inner.exp())?;
    Ok((Complex64::new(ln_rt, 0.0) - zeta).exp())
}

/// `|φ_{s,t}(z) − φ_{u,t}(φ_{s,u}(z))|`.
pub fn semigroup_defect(data: &DrivingData, cfg: &SolverConfig, s: f64, u: f64, t: f64, z: Complex64) -> Result<f64> {
    if !(s <= u && u <= t) {
        return Err(Error::InvalidInput(format!("need s <= u <= t, got ({s}, {u}, {t})")));
    }
    let direct = flow(data, cfg, s, t, z)?;
    let mid = flow(data, cfg, s, u, z)?;
    let composed = flow(data, cfg, u, t, mid)?;
    Ok((direct - composed).norm())
}

/// Index of the origin with respect to the closed polygon through `curve`.
pub fn winding_index(curve: &[Complex64]) -> Result<i64> {
    if curve.len() < 3 {
        return Err(Error::SamplingTooCoarse("a closed curve needs at least 3 samples".into()));
    }
    if curve.iter().any(|w| w.norm() == 0.0 || !w.re.is_finite() || !w.im.is_finite()) {
        return Err(Error::InvalidInput("curve passes through the origin".into()));
    }
    let mut total = 0.0;
    for k in 0..curve.len() {
        let a = curve[k];
        let b = curve[(k + 1) % curve.len()];
        let d = (b / a).arg();
        if d.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(Error::SamplingTooCoarse(format!(
                "argument jumps by {d:.3} between samples {k} and {}",
                (k + 1) % curve.len()
            )));
        }
        total += d;
    }
    let turns = total / std::f64::consts::TAU;
    let n = turns.round();
    if (turns - n).abs() > 0.1 {
        return Err(Error::SamplingTooCoarse(format!("winding sum {turns} is not near an integer")));
    }
    Ok(n as i64)
}

/// Samples of `φ_{s,t}` on the circle `|z| = radius`, computed in parallel.
pub fn image_of_circle(data: &DrivingData, cfg: &SolverConfig, s: f64, t: f64, radius: f64, samples: usize) -> Result<Vec<Complex64>> {
    circle_nodes(radius, samples)
        .into_par_iter()
        .map(|z| flow(data, cfg, s, t, z))
        .collect()
}

/// True iff `φ_{s,t}∘C(0,R)` winds once around the origin.
pub fn check_index_preservation(data: &DrivingData, cfg: &SolverConfig, s: f64, t: f64, radius: f64) -> Result<bool> {
    let r = data.system().r(s);
    if !(radius > r && radius < 1.0) {
        return Err(Error::Domain(format!("R = {radius} outside (r(s), 1) = ({r}, 1)")));
    }
    let image = image_of_circle(data, cfg, s, t, radius, 256)?;
    Ok(winding_index(&image)? == 1)
}

/// Points of a polar grid on a compact sub-annulus of `D_s`, with moduli
/// equally spaced in `log|z|`.
pub fn annulus_grid(inner: f64, grid_size: usize) -> Vec<Complex64> {
    let lo = if inner > 0.0 { inner.powf(0.9) } else { 0.1 };
    let hi = 0.9_f64.max(lo.sqrt());
    let mut points = Vec::with_capacity(grid_size * grid_size);
    for i in 0..grid_size {
        let frac = (i as f64 + 0.5) / grid_size as f64;
        let m = (lo.ln() + frac * (hi.ln() - lo.ln())).exp();
        for j in 0..grid_size {
            let theta = std::f64::consts::TAU * (j as f64 + 0.5 * (i % 2) as f64) / grid_size as f64;
            points.push(Complex64::from_polar(m, theta));
        }
    }
    points
}

/// Pairwise-distinctness test for `φ_{s,t}` on a `grid_size × grid_size`
/// polar grid. Images must be separated by at least `10⁻³·d·L`, where `d`
/// is the least input separation and `L` the least difference quotient
/// along grid edges.
pub fn univalence_spot_check(data: &DrivingData, cfg: &SolverConfig, s: f64, t: f64, grid_size: usize) -> Result<bool> {
    if grid_size < 2 {
        return Err(Error::InvalidInput("grid_size must be at least 2".into()));
    }
    let inputs = annulus_grid(data.system().r(s), grid_size);
    let images: Vec<Complex64> = inputs
        .par_iter()
        .map(|&z| flow(data, cfg, s, t, z))
        .collect::<Result<_>>()?;
    let n = inputs.len();
    let mut d_in = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            d_in = d_in.min((inputs[i] - inputs[j]).norm());
        }
    }
    let mut lip = f64::INFINITY;
    for i in 0..grid_size {
        for j in 0..grid_size {
            let k = i * grid_size + j;
            let right = i * grid_size + (j + 1) % grid_size;
            lip = lip.min((images[k] - images[right]).norm() / (inputs[k] - inputs[right]).norm());
            if i + 1 < grid_size {
                let up = (i + 1) * grid_size + j;
                lip = lip.min((images[k] - images[up]).norm() / (inputs[k] - inputs[up]).norm());
            }
        }
    }
    let threshold = 1e-3 * d_in * lip;
    for i in 0..n {
        for j in i + 1..n {
            if (images[i] - images[j]).norm() < threshold {
                return Ok(false);
            }
        }
    }
    Ok(lip > 0.0)
}

/// Driving data of the time-changed field `G*(z,t) = G(z,τ(t))·τ′(t)`,
/// whose evolution family is `φ*_{s,t} = φ_{τ(s),τ(t)}`.
pub fn reparametrize(data: &DrivingData, tau: &TimeChange) -> Result<DrivingData> {
    data.time_changed(tau)
}
