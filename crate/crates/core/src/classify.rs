//! Conformal type of an evolution family from the integrals `I₁`, `I₂`
//! (non-degenerate systems) or `I` (mixed and degenerate systems), checked
//! against the long-time behaviour of sample trajectories.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain_system::SystemKind;
use crate::error::{Error, Result};
use crate::evolution::{evolve_trajectory, SolverConfig, Trajectory, TrajectoryStatus};
use crate::quadrature::{integrate_with_divergence, IntegralVerdict, QuadConfig};
use crate::vector_field::{DrivingData, MeasureSegment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    /// Upper end of the numerical quadrature.
    pub t_max: f64,
    /// Partial integrals above this value count as divergent.
    pub lambda: f64,
    pub quad: QuadConfig,
    pub solver: SolverConfig,
    pub t_big: f64,
    pub theta_zero: f64,
    /// Probe points; defaults to [`default_probe_points`].
    pub z_set: Option<Vec<Complex64>>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            lambda: 30.0,
            quad: QuadConfig::default(),
            solver: SolverConfig::default(),
            t_big: 40.0,
            theta_zero: 0.02,
            z_set: None,
        }
    }
}

impl ClassifyConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        for (name, v) in [("t_max", self.t_max), ("lambda", self.lambda), ("t_big", self.t_big), ("theta_zero", self.theta_zero)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConformalType {
    I,
    II,
    III,
    IV,
}

impl ConformalType {
    /// Label of the Loewner range of chains of this type.
    pub fn range_label(self) -> &'static str {
        match self {
            ConformalType::I => "A_{r_inf}",
            ConformalType::II => "D*",
            ConformalType::III => "C \\ closed D",
            ConformalType::IV => "C*",
        }
    }

    /// Expected limits of `(φ_{0,t}, φ̃_{0,t})`.
    pub fn expected_probes(self) -> (ProbeOutcome, ProbeOutcome) {
        use ProbeOutcome::*;
        match self {
            ConformalType::I => (BoundedAway, BoundedAway),
            ConformalType::II => (BoundedAway, TendsToZero),
            ConformalType::III => (TendsToZero, BoundedAway),
            ConformalType::IV => (TendsToZero, TendsToZero),
        }
    }
}

impl std::fmt::Display for ConformalType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConformalType::I => "I",
            ConformalType::II => "II",
            ConformalType::III => "III",
            ConformalType::IV => "IV",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOutcome {
    TendsToZero,
    BoundedAway,
}

/// A classification integral with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub verdict: IntegralVerdict,
    /// Closed-form value over `[0, ∞)`, `+∞` when divergent.
    pub exact: f64,
    /// Smallest integrand value seen at a quadrature node.
    pub min_integrand: f64,
}

/// Decision table for non-degenerate systems.
pub fn decide_nondegenerate(i1_divergent: bool, i2_divergent: bool) -> ConformalType {
    match (i1_divergent, i2_divergent) {
        (false, false) => ConformalType::I,
        (false, true) => ConformalType::II,
        (true, false) => ConformalType::III,
        (true, true) => ConformalType::IV,
    }
}

/// Decision rule for mixed and degenerate systems.
pub fn decide_mixed(i_divergent: bool) -> ConformalType {
    if i_divergent {
        ConformalType::IV
    } else {
        ConformalType::II
    }
}

fn weighted_integral<W: Fn(&MeasureSegment) -> f64 + Sync>(
    data: &DrivingData,
    t_max: f64,
    lambda: f64,
    quad: &QuadConfig,
    weight: W,
    include_alpha: bool,
) -> IntegralEstimate {
    let cfg = QuadConfig {
        divergence_threshold: lambda,
        ..*quad
    };
    let deg = data.system().degeneration_time();
    let mut knots = vec![0.0];
    knots.extend(data.breakpoints().into_iter().filter(|&k| k > 0.0 && k < t_max));
    knots.push(t_max);
    let singular: Vec<f64> = match data.system().kind() {
        SystemKind::Mixed { threshold } => vec![threshold],
        _ => vec![],
    };
    let integrand = |t: f64, loc: f64| -> f64 {
        if loc < deg {
            let w = weight(data.segment_at(loc));
            if w == 0.0 {
                0.0
            } else {
                -data.system().log_deriv_at(t, loc) * w
            }
        } else if include_alpha {
            data.alpha_post().eval_at(t, loc)
        } else {
            0.0
        }
    };
    let mut min_integrand = f64::INFINITY;
    let numeric = integrate_with_divergence(integrand, &knots, &singular, &cfg, &mut min_integrand);
    let exact = data.exact_radial_tail(0.0, &weight, include_alpha);
    let tail = data.exact_radial_tail(t_max, &weight, include_alpha);
    let verdict = match numeric {
        IntegralVerdict::Divergent { .. } => numeric,
        IntegralVerdict::Finite { value } if !tail.is_finite() || !exact.is_finite() => {
            IntegralVerdict::Divergent { partial: value }
        }
        IntegralVerdict::Finite { value } => IntegralVerdict::Finite { value: value + tail },
    };
    IntegralEstimate {
        verdict,
        exact,
        min_integrand,
    }
}

fn require_nondegenerate(data: &DrivingData) -> Result<()> {
    match data.system().kind() {
        SystemKind::NonDegenerate => Ok(()),
        _ => Err(Error::InvalidInput("I1 and I2 are defined for non-degenerate systems only".into())),
    }
}

/// `I₁ = −∫₀^∞ (r′/r)·ν dt`.
pub fn integral_i1(data: &DrivingData, t_max: f64, lambda: f64, quad: &QuadConfig) -> Result<IntegralEstimate> {
    require_nondegenerate(data)?;
    Ok(weighted_integral(data, t_max, lambda, quad, |s| s.nu(), false))
}

/// `I₂ = −∫₀^∞ (r′/r)·(1 − ν) dt`.
pub fn integral_i2(data: &DrivingData, t_max: f64, lambda: f64, quad: &QuadConfig) -> Result<IntegralEstimate> {
    require_nondegenerate(data)?;
    Ok(weighted_integral(data, t_max, lambda, quad, |s| 1.0 - s.nu(), false))
}

/// `I = −∫₀^∞ Re N(w ↦ G(w,t)/w) dt` for mixed and degenerate systems.
pub fn integral_i_mixed(data: &DrivingData, t_max: f64, lambda: f64, quad: &QuadConfig) -> Result<IntegralEstimate> {
    if data.system().kind() == SystemKind::NonDegenerate {
        return Err(Error::InvalidInput("I is defined for mixed and degenerate systems only".into()));
    }
    Ok(free_term_integral(data, t_max, lambda, quad))
}

/// `−∫₀^∞ Re N(w ↦ G(w,t)/w) dt` for any system; equals `I₁` when the system
/// never degenerates and `I` otherwise.
pub fn free_term_integral(data: &DrivingData, t_max: f64, lambda: f64, quad: &QuadConfig) -> IntegralEstimate {
    weighted_integral(data, t_max, lambda, quad, |s| s.nu(), true)
}

/// Probe points: moduli `r₀^{1/4}, r₀^{1/2}, r₀^{3/4}` (or `0.3, 0.5, 0.7`
/// when `r₀ = 0`) at three angles each.
pub fn default_probe_points(r0: f64) -> Vec<Complex64> {
    let moduli: Vec<f64> = if r0 > 0.0 {
        vec![r0.powf(0.25), r0.sqrt(), r0.powf(0.75)]
    } else {
        vec![0.3, 0.5, 0.7]
    };
    let mut pts = Vec::with_capacity(9);
    for (i, m) in moduli.into_iter().enumerate() {
        for k in 0..3 {
            let theta = 0.4 + 2.1 * k as f64 + 0.7 * i as f64;
            pts.push(Complex64::from_polar(m, theta));
        }
    }
    pts
}

/// Per-point summary of a probe: final log-modulus and whether the modulus
/// is non-increasing over the last quarter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub z: Complex64,
    pub final_modulus: f64,
    pub monotone_tail: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub outcome: ProbeOutcome,
    pub samples: Vec<ProbeSample>,
}

fn solved(traj: Trajectory) -> Result<Trajectory> {
    match traj.status {
        TrajectoryStatus::Completed => Ok(traj),
        TrajectoryStatus::GuardHit { t } => Err(Error::GuardHit { t }),
        TrajectoryStatus::StepFailure { t } => Err(Error::StepFailure {
            t,
            reason: traj.message.unwrap_or_default(),
        }),
    }
}

fn summarize(z: Complex64, times: &[f64], log_moduli: &[f64], t_big: f64) -> ProbeSample {
    let tail_start = 0.75 * t_big;
    let tail: Vec<f64> = times
        .iter()
        .zip(log_moduli)
        .filter(|(t, _)| **t >= tail_start)
        .map(|(_, m)| *m)
        .collect();
    let monotone_tail = tail.len() >= 2 && tail.windows(2).all(|p| p[1] <= p[0] + 1e-12);
    ProbeSample {
        z,
        final_modulus: log_moduli.last().copied().unwrap_or(f64::NAN).exp(),
        monotone_tail,
    }
}

fn verdict_from(samples: Vec<ProbeSample>, theta_zero: f64) -> ProbeReport {
    let zero = samples.iter().all(|s| s.final_modulus < theta_zero && s.monotone_tail);
    ProbeReport {
        outcome: if zero { ProbeOutcome::TendsToZero } else { ProbeOutcome::BoundedAway },
        samples,
    }
}

/// Decides whether `φ_{0,t}` tends to zero by integrating every point of
/// `z_set` up to `t_big`.
pub fn trajectory_limit_probe(
    data: &DrivingData,
    cfg: &SolverConfig,
    z_set: &[Complex64],
    t_big: f64,
    theta_zero: f64,
) -> Result<ProbeReport> {
    let samples = z_set
        .par_iter()
        .map(|&z| {
            let traj = solved(evolve_trajectory(data, cfg, 0.0, t_big, z)?)?;
            let logs: Vec<f64> = traj.rho.iter().map(|r| r.ln()).collect();
            Ok(summarize(z, &traj.times, &logs, t_big))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(verdict_from(samples, theta_zero))
}

/// Same probe for the reflected family `φ̃_{0,t}(z) = r(t)/φ_{0,t}(r(0)/z)`.
pub fn reflected_limit_probe(
    data: &DrivingData,
    cfg: &SolverConfig,
    z_set: &[Complex64],
    t_big: f64,
    theta_zero: f64,
) -> Result<ProbeReport> {
    let sys = data.system();
    if sys.omega(t_big) <= 0.0 {
        return Err(Error::DegenerateTime(sys.degeneration_time()));
    }
    let ln_r0 = sys.ln_r(0.0);
    let samples = z_set
        .par_iter()
        .map(|&z| {
            let start = (Complex64::new(ln_r0, 0.0) - z.ln()).exp();
            let traj = solved(evolve_trajectory(data, cfg, 0.0, t_big, start)?)?;
            let logs: Vec<f64> = traj
                .times
                .iter()
                .zip(&traj.rho)
                .map(|(t, rho)| sys.ln_r(*t) - rho.ln())
                .collect();
            Ok(summarize(z, &traj.times, &logs, t_big))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(verdict_from(samples, theta_zero))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeReport {
    pub kind: SystemKind,
    #[serde(rename = "I1")]
    pub i1: Option<IntegralEstimate>,
    #[serde(rename = "I2")]
    pub i2: Option<IntegralEstimate>,
    #[serde(rename = "I")]
    pub i: Option<IntegralEstimate>,
    pub declared_type: ConformalType,
    pub range_label: String,
    pub r_infinity: f64,
    pub probe: ProbeReport,
    pub reflected_probe: Option<ProbeReport>,
    pub consistent: bool,
}

impl TypeReport {
    /// One-line verdict for terminal output.
    pub fn summary(&self) -> String {
        let fmt = |e: &Option<IntegralEstimate>| match e {
            None => "-".to_string(),
            Some(e) => match e.verdict {
                IntegralVerdict::Finite { value } => format!("finite({value:.6})"),
                IntegralVerdict::Divergent { partial } => format!("divergent(>{partial:.3})"),
            },
        };
        format!(
            "type {} (range {}): I1={} I2={} I={} probe={:?} reflected={} consistent={}",
            self.declared_type,
            self.range_label,
            fmt(&self.i1),
            fmt(&self.i2),
            fmt(&self.i),
            self.probe.outcome,
            self.reflected_probe
                .as_ref()
                .map_or("-".to_string(), |p| format!("{:?}", p.outcome)),
            self.consistent
        )
    }
}

/// Decides the conformal type and cross-checks it against trajectory probes.
pub fn classify_type(data: &DrivingData, cfg: &ClassifyConfig) -> Result<TypeReport> {
    cfg.validate()?;
    let kind = data.system().kind();
    let r0 = data.system().r(0.0);
    let z_set = cfg.z_set.clone().unwrap_or_else(|| default_probe_points(r0));
    let probe = trajectory_limit_probe(data, &cfg.solver, &z_set, cfg.t_big, cfg.theta_zero)?;
    let (i1, i2, i, declared, reflected) = match kind {
        SystemKind::NonDegenerate => {
            let i1 = integral_i1(data, cfg.t_max, cfg.lambda, &cfg.quad)?;
            let i2 = integral_i2(data, cfg.t_max, cfg.lambda, &cfg.quad)?;
            let ty = decide_nondegenerate(i1.verdict.is_divergent(), i2.verdict.is_divergent());
            let refl = reflected_limit_probe(data, &cfg.solver, &z_set, cfg.t_big, cfg.theta_zero)?;
            (Some(i1), Some(i2), None, ty, Some(refl))
        }
        _ => {
            let i = integral_i_mixed(data, cfg.t_max, cfg.lambda, &cfg.quad)?;
            let ty = decide_mixed(i.verdict.is_divergent());
            (None, None, Some(i), ty, None)
        }
    };
    let (want, want_reflected) = declared.expected_probes();
    let consistent = probe.outcome == want && reflected.as_ref().is_none_or(|p| p.outcome == want_reflected);
    Ok(TypeReport {
        kind,
        i1,
        i2,
        i,
        declared_type: declared,
        range_label: declared.range_label().to_string(),
        r_infinity: data.system().r_infinity(),
        probe,
        reflected_probe: reflected,
        consistent,
    })
}
