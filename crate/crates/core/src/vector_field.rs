//! Semicomplete weak holomorphic vector fields over a canonical domain system.
//!
//! While the annulus is non-degenerate the field is
//! `G(w,t) = w·[iC(t) + (r′/r)(t)·p(w,t)]` with `p(·,t)` built from the
//! measure pair `(μ₁ᵗ, μ₂ᵗ)`; once `r(t) = 0` it becomes
//! `G(w,t) = w·[iC(t) − α(t)·p(w,t)]` with `p` in the normalized
//! Carathéodory class.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain_system::{merge_breakpoints, CanonicalSystem, SystemKind};
use crate::error::{Error, Result};
use crate::kernel::{herglotz_unchecked, CircleMeasure, KernelTolerance};
use crate::quadrature::{integrate_with_divergence, IntegralVerdict, QuadConfig};
use crate::timefn::{piece_index, ScalarFn, TimeChange};

/// Tolerance on `μ₁(T) + μ₂(T) = 1` for stored driving data.
pub const MASS_TOL: f64 = 1e-9;

/// Measure pair in force from `start` until the next segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSegment {
    #[serde(rename = "t")]
    pub start: f64,
    pub mu1: CircleMeasure,
    pub mu2: CircleMeasure,
}

impl MeasureSegment {
    pub fn new(start: f64, mu1: CircleMeasure, mu2: CircleMeasure) -> Self {
        Self { start, mu1, mu2 }
    }

    /// `ν = μ₁(T)`.
    pub fn nu(&self) -> f64 {
        self.mu1.total_mass()
    }

    pub fn is_uniform(&self) -> bool {
        !self.mu1.has_atoms() && !self.mu2.has_atoms()
    }
}

/// Complete description of a vector field: the domain system, rotation
/// coefficient `C(t)`, piecewise-constant measure pairs, and the
/// post-degeneration rate `α(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DrivingRepr", into = "DrivingRepr")]
pub struct DrivingData {
    system: CanonicalSystem,
    rotation: ScalarFn,
    measures: Vec<MeasureSegment>,
    alpha_post: ScalarFn,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DrivingRepr {
    system: CanonicalSystem,
    #[serde(rename = "C", default = "zero_fn")]
    rotation: ScalarFn,
    measures: Vec<MeasureSegment>,
    #[serde(default = "zero_fn")]
    alpha_post: ScalarFn,
}

fn zero_fn() -> ScalarFn {
    ScalarFn::constant(0.0)
}

impl TryFrom<DrivingRepr> for DrivingData {
    type Error = Error;

    fn try_from(r: DrivingRepr) -> Result<Self> {
        DrivingData::new(r.system, r.rotation, r.measures, r.alpha_post)
    }
}

impl From<DrivingData> for DrivingRepr {
    fn from(d: DrivingData) -> Self {
        DrivingRepr {
            system: d.system,
            rotation: d.rotation,
            measures: d.measures,
            alpha_post: d.alpha_post,
        }
    }
}

impl DrivingData {
    /// Builds driving data, rejecting configurations that violate the mass
    /// conditions or ordering invariants.
    pub fn new(
        system: CanonicalSystem,
        rotation: ScalarFn,
        measures: Vec<MeasureSegment>,
        alpha_post: ScalarFn,
    ) -> Result<Self> {
        system.validate()?;
        rotation.validate()?;
        alpha_post.validate()?;
        if measures.is_empty() || measures[0].start != 0.0 {
            return Err(Error::InvalidInput(
                "measure schedule must start at t = 0".into(),
            ));
        }
        for w in measures.windows(2) {
            if !(w[1].start > w[0].start) || !w[1].start.is_finite() {
                return Err(Error::InvalidInput(
                    "measure breakpoints must be strictly increasing".into(),
                ));
            }
        }
        let data = Self {
            system,
            rotation,
            measures,
            alpha_post,
        };
        data.check_masses()?;
        let horizon = data.breakpoints().last().copied().unwrap_or(0.0) + 100.0;
        let alpha_min = data.alpha_post.sampled_min(horizon, 64);
        if alpha_min < -1e-12 {
            return Err(Error::InvalidInput(format!(
                "alpha_post must be nonnegative, sampled minimum {alpha_min}"
            )));
        }
        Ok(data)
    }

    fn check_masses(&self) -> Result<()> {
        let deg = self.system.degeneration_time();
        for (i, seg) in self.measures.iter().enumerate() {
            let end = self.measures.get(i + 1).map_or(f64::INFINITY, |n| n.start);
            let m1 = seg.mu1.total_mass();
            let m2 = seg.mu2.total_mass();
            if seg.start < deg && (m1 + m2 - 1.0).abs() > MASS_TOL {
                return Err(Error::MassCondition(format!(
                    "segment at t = {}: mu1(T) + mu2(T) = {} on a non-degenerate stretch",
                    seg.start,
                    m1 + m2
                )));
            }
            if end > deg && (m2 > 1e-12 || (m1 - 1.0).abs() > MASS_TOL) {
                return Err(Error::MassCondition(format!(
                    "segment at t = {}: after degeneration mu1(T) must be 1 and mu2 = 0, got ({m1}, {m2})",
                    seg.start
                )));
            }
        }
        Ok(())
    }

    pub fn system(&self) -> &CanonicalSystem {
        &self.system
    }

    pub fn rotation(&self) -> &ScalarFn {
        &self.rotation
    }

    pub fn alpha_post(&self) -> &ScalarFn {
        &self.alpha_post
    }

    pub fn measures(&self) -> &[MeasureSegment] {
        &self.measures
    }

    pub fn segment_at(&self, locator: f64) -> &MeasureSegment {
        &self.measures[piece_index(self.measures.iter().map(|m| m.start), locator)]
    }

    /// `ν(t) = μ₁ᵗ(T)`.
    pub fn nu(&self, t: f64) -> f64 {
        self.segment_at(t).nu()
    }

    /// All times where some ingredient of the field is not smooth, including
    /// the degeneration time of a mixed system.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut lists = vec![
            self.system.breakpoints(),
            self.rotation.breakpoints(),
            self.alpha_post.breakpoints(),
            self.measures.iter().map(|m| m.start).collect(),
        ];
        if let SystemKind::Mixed { threshold } = self.system.kind() {
            lists.push(vec![threshold]);
        }
        merge_breakpoints(lists)
    }

    /// Whether the piece selected by `locator` lies in the degenerate regime.
    pub(crate) fn degenerate_at(&self, locator: f64) -> bool {
        self.system.omega_at(locator, locator) <= 0.0
    }

    /// `G(w,t)/w` on the smooth piece selected by `locator`.
    pub(crate) fn log_field(
        &self,
        w: Complex64,
        t: f64,
        locator: f64,
        tol: &KernelTolerance,
    ) -> Result<Complex64> {
        let seg = self.segment_at(locator);
        let rot = Complex64::new(0.0, self.rotation.eval_at(t, locator));
        if self.degenerate_at(locator) {
            let alpha = self.alpha_post.eval_at(t, locator);
            if alpha == 0.0 {
                return Ok(rot);
            }
            let p = herglotz_unchecked(0.0, &seg.mu1, &CircleMeasure::zero(), w, tol)?;
            return Ok(rot - alpha * p);
        }
        let ld = self.system.log_deriv_at(t, locator);
        if ld == 0.0 {
            return Ok(rot);
        }
        let r = self.system.r_at(t, locator);
        let p = herglotz_unchecked(r, &seg.mu1, &seg.mu2, w, tol)?;
        if p == Complex64::new(0.0, 0.0) {
            return Ok(rot);
        }
        let radial = ld * p;
        if !radial.re.is_finite() || !radial.im.is_finite() {
            return Err(Error::StepFailure {
                t,
                reason: "radial coefficient blew up near the degeneration time".into(),
            });
        }
        Ok(rot + radial)
    }

    /// `Re N(G(·,t)/·)` on the piece selected by `locator`.
    pub(crate) fn free_term_at(&self, t: f64, locator: f64) -> f64 {
        if self.degenerate_at(locator) {
            return -self.alpha_post.eval_at(t, locator);
        }
        let nu = self.segment_at(locator).nu();
        if nu == 0.0 {
            return 0.0;
        }
        self.system.log_deriv_at(t, locator) * nu
    }

    /// Closed-form `∫_a^b w(seg)·(−r′/r) dt` over the non-degenerate part plus
    /// `∫ α` over the degenerate part, where `weight` picks the measure mass
    /// that multiplies `−r′/r` on each segment.
    pub(crate) fn exact_radial_integral<W: Fn(&MeasureSegment) -> f64>(
        &self,
        a: f64,
        b: f64,
        weight: W,
        include_alpha: bool,
    ) -> f64 {
        let deg = self.system.degeneration_time();
        let mut knots: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .filter(|&k| k > a && k < b)
            .collect();
        knots.insert(0, a);
        knots.push(b);
        let mut total = 0.0;
        for w in knots.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let loc = 0.5 * (lo + hi);
            if loc < deg {
                let wt = weight(self.segment_at(loc));
                if wt != 0.0 {
                    total += -wt * self.system.log_ratio(lo, hi);
                }
            } else if include_alpha {
                total += self.alpha_post.integral(lo, hi);
            }
        }
        total
    }

    /// Closed-form `∫_a^∞` counterpart of [`Self::exact_radial_integral`];
    /// `+∞` when the tail does not converge.
    pub(crate) fn exact_radial_tail<W: Fn(&MeasureSegment) -> f64>(
        &self,
        a: f64,
        weight: W,
        include_alpha: bool,
    ) -> f64 {
        let last = self.breakpoints().last().copied().unwrap_or(0.0).max(a);
        let head = self.exact_radial_integral(a, last, &weight, include_alpha);
        let deg = self.system.degeneration_time();
        let tail = if last < deg {
            let wt = weight(self.segment_at(last));
            if wt == 0.0 {
                0.0
            } else {
                let r_inf = self.system.r_infinity();
                if r_inf == 0.0 {
                    f64::INFINITY
                } else {
                    wt * (self.system.ln_r(last) - r_inf.ln())
                }
            }
        } else if include_alpha {
            self.alpha_post.tail_integral(last)
        } else {
            0.0
        };
        head + tail
    }

    /// Driving data of `G*(z,t) = G(z,τ(t))·τ′(t)`.
    pub fn time_changed(&self, tau: &TimeChange) -> Result<Self> {
        tau.validate()?;
        if tau.is_identity() {
            return Ok(self.clone());
        }
        let mut measures = Vec::with_capacity(self.measures.len());
        for seg in &self.measures {
            if let Some(start) = tau.inverse(seg.start) {
                measures.push(MeasureSegment::new(start, seg.mu1.clone(), seg.mu2.clone()));
            }
        }
        DrivingData::new(
            self.system.time_changed(tau),
            self.rotation.time_changed(tau),
            measures,
            self.alpha_post.time_changed(tau),
        )
    }
}

/// `G(w,t)`; requires `r(t) < |w| < 1`.
pub fn eval_g(data: &DrivingData, w: Complex64, t: f64, tol: &KernelTolerance) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    let r = data.system.r(t);
    let m = w.norm();
    if !(m > r && m < 1.0) {
        return Err(Error::Domain(format!(
            "|w| = {m} outside D_t = ({r}, 1) at t = {t}"
        )));
    }
    Ok(w * data.log_field(w, t, t, tol)?)
}

/// `Re N(w ↦ G(w,t)/w)`: `(r′/r)(t)·ν(t)` before degeneration, `−α(t)` after.
pub fn field_free_term(data: &DrivingData, t: f64) -> f64 {
    data.free_term_at(t, t)
}

/// Verdict for one condition of the mixed-type characterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub id: String,
    pub description: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub conditions: Vec<ConditionVerdict>,
    /// Numerical `∫ α(t)ν(t) dt` over `[0, 𝒯)` (or `[0, horizon]` for
    /// non-degenerate systems).
    pub alpha_nu_integral: IntegralVerdict,
    /// Closed-form value of the same integral (`+∞` if divergent).
    pub alpha_nu_exact: f64,
    pub integration_end: f64,
    pub nu_in_unit_interval: bool,
    pub passed: bool,
}

impl ValidationReport {
    pub fn condition(&self, id: &str) -> Option<&ConditionVerdict> {
        self.conditions.iter().find(|c| c.id == id)
    }
}

fn verdict(id: &str, description: &str, passed: bool, detail: String) -> ConditionVerdict {
    ConditionVerdict {
        id: id.into(),
        description: description.into(),
        passed,
        detail,
    }
}

/// Checks driving data against the admissibility conditions `ii` to `vi`
/// under which the field is semicomplete.
pub fn validate_driving(data: &DrivingData, quad: &QuadConfig) -> ValidationReport {
    let kind = data.system.kind();
    let deg = data.system.degeneration_time();
    let knots_all = data.breakpoints();
    let last = knots_all.last().copied().unwrap_or(0.0);

    let mut conditions = Vec::new();
    conditions.push(verdict(
        "ii",
        "measurability of p(w, .)",
        true,
        format!("piecewise-constant measures on {} segments", data.measures.len()),
    ));

    let mut class_ok = true;
    let mut class_detail = String::from("mass conditions hold on every segment");
    if let Err(e) = data.check_masses() {
        class_ok = false;
        class_detail = e.to_string();
    }
    conditions.push(verdict("iii", "p(., t) in the class V_r(t)", class_ok, class_detail));

    let c_ok = data.rotation.validate().is_ok()
        && data.rotation.sampled_min(last + 10.0, 16).is_finite();
    conditions.push(verdict(
        "iv",
        "C locally integrable",
        c_ok,
        "piecewise closed-form coefficient".into(),
    ));

    let alpha_min = data.alpha_post.sampled_min(last + 100.0, 64);
    conditions.push(verdict(
        "v",
        "alpha = -r'/r before degeneration, alpha >= 0 locally integrable after",
        alpha_min >= -1e-12,
        format!("alpha before degeneration is -r'/r by construction; sampled min of alpha_post = {alpha_min}"),
    ));

    let end = match kind {
        SystemKind::NonDegenerate => (2.0 * last).max(10.0),
        SystemKind::Mixed { threshold } => threshold,
        SystemKind::Degenerate => 0.0,
    };
    let mut knots: Vec<f64> = knots_all.iter().copied().filter(|&k| k < end).collect();
    knots.push(end);
    let singular: Vec<f64> = match kind {
        SystemKind::Mixed { threshold } => vec![threshold],
        _ => vec![],
    };
    // a compact window of a non-degenerate system only needs finiteness
    let local_quad = match kind {
        SystemKind::NonDegenerate => QuadConfig {
            divergence_threshold: f64::INFINITY,
            ..*quad
        },
        _ => *quad,
    };
    let mut min_integrand = f64::INFINITY;
    let numeric = if end > 0.0 {
        integrate_with_divergence(
            |t, loc| -data.free_term_at(t, loc),
            &knots,
            &singular,
            &local_quad,
            &mut min_integrand,
        )
    } else {
        IntegralVerdict::Finite { value: 0.0 }
    };
    let exact = data.exact_radial_integral(0.0, end.min(deg), |s| s.nu(), false);
    let vi_ok = numeric.is_finite() && exact.is_finite();
    conditions.push(verdict(
        "vi",
        "P(t) = alpha(t) N(p(., t)) locally integrable",
        vi_ok,
        match numeric {
            IntegralVerdict::Finite { value } => {
                format!("integral over [0, {end}) = {value:.6e} (closed form {exact:.6e})")
            }
            IntegralVerdict::Divergent { partial } => format!(
                "integral over [0, {end}) exceeds {} (partial {partial:.6e}, closed form {exact:.6e})",
                quad.divergence_threshold
            ),
        },
    ));

    let nu_ok = data
        .measures
        .iter()
        .all(|s| (-MASS_TOL..=1.0 + MASS_TOL).contains(&s.nu()));
    let passed = conditions.iter().all(|c| c.passed) && nu_ok;
    ValidationReport {
        conditions,
        alpha_nu_integral: numeric,
        alpha_nu_exact: exact,
        integration_end: end,
        nu_in_unit_interval: nu_ok,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{circle_nodes, free_term};
    use std::f64::consts::PI;

    fn tol() -> KernelTolerance {
        KernelTolerance::default()
    }

    fn uniform_pair(nu: f64) -> MeasureSegment {
        MeasureSegment::new(
            0.0,
            CircleMeasure::uniform(nu).unwrap(),
            CircleMeasure::uniform(1.0 - nu).unwrap(),
        )
    }

    fn harmonic(nu: f64, c: f64) -> DrivingData {
        DrivingData::new(
            CanonicalSystem::HarmonicDecay { omega0: 1.0, lambda: 1.0 },
            ScalarFn::constant(c),
            vec![uniform_pair(nu)],
            ScalarFn::constant(0.0),
        )
        .unwrap()
    }

    fn atomic() -> DrivingData {
        DrivingData::new(
            CanonicalSystem::HarmonicDecay { omega0: 1.2, lambda: 0.7 },
            ScalarFn::poly(vec![0.3, -0.1]),
            vec![
                MeasureSegment::new(
                    0.0,
                    CircleMeasure::new(vec![(0.4, 0.2)], 0.25).unwrap(),
                    CircleMeasure::new(vec![(2.5, 0.15)], 0.4).unwrap(),
                ),
                MeasureSegment::new(
                    1.0,
                    CircleMeasure::new(vec![(4.0, 0.3)], 0.3).unwrap(),
                    CircleMeasure::new(vec![(1.0, 0.1)], 0.3).unwrap(),
                ),
            ],
            ScalarFn::constant(0.0),
        )
        .unwrap()
    }

    fn mixed(nu: f64) -> DrivingData {
        DrivingData::new(
            CanonicalSystem::AffineToZero { omega0: 1.0, threshold: 1.0 },
            ScalarFn::constant(0.0),
            vec![
                uniform_pair(nu),
                MeasureSegment::new(1.0, CircleMeasure::uniform(1.0).unwrap(), CircleMeasure::zero()),
            ],
            ScalarFn::constant(1.0),
        )
        .unwrap()
    }

    fn degenerate(alpha: ScalarFn) -> DrivingData {
        DrivingData::new(
            CanonicalSystem::IdenticallyZero,
            ScalarFn::constant(0.0),
            vec![MeasureSegment::new(0.0, CircleMeasure::uniform(1.0).unwrap(), CircleMeasure::zero())],
            alpha,
        )
        .unwrap()
    }

    #[test]
    fn g_examples() {
        let d = DrivingData::new(
            CanonicalSystem::ConstantOmega { omega0: 1.0 },
            ScalarFn::constant(0.0),
            vec![uniform_pair(0.3)],
            ScalarFn::constant(0.0),
        )
        .unwrap();
        assert_eq!(eval_g(&d, Complex64::new(0.5, 0.0), 1.0, &tol()).unwrap(), Complex64::new(0.0, 0.0));

        let s = harmonic(1.0, 0.0);
        let w = Complex64::new(0.3, 0.2);
        for &t in &[0.0, 0.5, 2.0] {
            let g = eval_g(&s, w, t, &tol()).unwrap();
            let ld = s.system().log_deriv(t).unwrap();
            assert!((g - w * ld).norm() < 1e-14);
        }

        let deg = degenerate(ScalarFn::constant(1.0));
        let g = eval_g(&deg, w, 3.0, &tol()).unwrap();
        assert!((g + w).norm() < 1e-15);
    }

    #[test]
    fn g_rejects_points_outside_the_annulus() {
        let s = harmonic(1.0, 0.0);
        let r0 = s.system().r(0.0);
        assert!(eval_g(&s, Complex64::new(r0 * 0.9, 0.0), 0.0, &tol()).is_err());
        assert!(eval_g(&s, Complex64::new(1.0, 0.0), 0.0, &tol()).is_err());
    }

    fn quadrature_free_term(d: &DrivingData, t: f64) -> f64 {
        let r = d.system().r(t);
        let rho = if r > 0.0 { r.sqrt() } else { 0.5 };
        let samples: Vec<_> = circle_nodes(rho, 1024)
            .into_iter()
            .map(|w| eval_g(d, w, t, &tol()).unwrap() / w)
            .collect();
        free_term(&samples).unwrap().re
    }

    #[test]
    fn free_term_identity() {
        let cases = [harmonic(1.0, 0.0), harmonic(0.0, 0.7), atomic(), mixed(0.0), degenerate(ScalarFn::constant(1.0))];
        for d in &cases {
            for &t in &[0.0, 0.25, 0.5, 1.5, 3.0] {
                let exact = field_free_term(d, t);
                let quad = quadrature_free_term(d, t);
                assert!((exact - quad).abs() < 1e-8, "{t}: {exact} vs {quad}");
            }
        }
        assert!((field_free_term(&harmonic(1.0, 0.0), 1.0) + PI).abs() < 1e-14);
        assert_eq!(field_free_term(&harmonic(0.0, 0.3), 1.0), 0.0);
        assert_eq!(field_free_term(&degenerate(ScalarFn::constant(1.0)), 2.0), -1.0);
    }

    #[test]
    fn field_has_locally_integrable_majorant() {
        let d = atomic();
        for &t in &[0.0, 0.5, 1.5, 4.0] {
            let r = d.system().r(t);
            let ld = d.system().log_deriv(t).unwrap().abs();
            let c = d.rotation().eval(t).abs();
            for k in 1..10 {
                let m = r + (1.0 - r) * k as f64 / 10.0;
                let a = 1.0 + 2.0 / (1.0 - r * r) * (m / (1.0 - m) + r / (m - r));
                let b = 2.0 * r / (1.0 - r * r) * (1.0 / (1.0 - m) + 1.0 / (m - r));
                for w in circle_nodes(m, 32) {
                    let g = eval_g(&d, w, t, &tol()).unwrap();
                    assert!(g.norm() <= c + ld * (a + b) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn holomorphic_in_w() {
        let d = atomic();
        let h = 1e-5;
        for &t in &[0.2, 1.3] {
            for &w in &[Complex64::new(0.4, 0.3), Complex64::new(-0.2, 0.6)] {
                let dx = (eval_g(&d, w + h, t, &tol()).unwrap() - eval_g(&d, w - h, t, &tol()).unwrap()) / (2.0 * h);
                let i = Complex64::new(0.0, h);
                let dy = (eval_g(&d, w + i, t, &tol()).unwrap() - eval_g(&d, w - i, t, &tol()).unwrap()) / (2.0 * h);
                // Cauchy–Riemann: ∂G/∂y = i ∂G/∂x
                let resid = (dy - Complex64::new(0.0, 1.0) * dx).norm();
                assert!(resid <= 1e-6 * dx.norm().max(1.0), "{resid}");
            }
        }
    }

    #[test]
    fn mass_condition_rejected() {
        let bad = DrivingData::new(
            CanonicalSystem::HarmonicDecay { omega0: 1.0, lambda: 1.0 },
            ScalarFn::constant(0.0),
            vec![MeasureSegment::new(
                0.0,
                CircleMeasure::uniform(0.5).unwrap(),
                CircleMeasure::uniform(0.5 + 1e-8).unwrap(),
            )],
            ScalarFn::constant(0.0),
        );
        assert!(matches!(bad, Err(Error::MassCondition(_))));
        // mu2 must vanish once degenerate
        let bad = DrivingData::new(
            CanonicalSystem::AffineToZero { omega0: 1.0, threshold: 1.0 },
            ScalarFn::constant(0.0),
            vec![uniform_pair(0.0)],
            ScalarFn::constant(1.0),
        );
        assert!(matches!(bad, Err(Error::MassCondition(_))));
        let bad = DrivingData::new(
            CanonicalSystem::IdenticallyZero,
            ScalarFn::constant(0.0),
            vec![MeasureSegment::new(0.0, CircleMeasure::uniform(1.0).unwrap(), CircleMeasure::zero())],
            ScalarFn::constant(-1.0),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn validator_condition_vi() {
        let ok = validate_driving(&mixed(0.0), &QuadConfig::default());
        assert!(ok.passed);
        assert_eq!(ok.alpha_nu_integral, IntegralVerdict::Finite { value: 0.0 });
        let bad = validate_driving(&mixed(0.5), &QuadConfig::default());
        assert!(!bad.passed);
        assert!(!bad.condition("vi").unwrap().passed);
        assert!(bad.alpha_nu_integral.is_divergent());
        assert!(bad.alpha_nu_exact.is_infinite());
        let nd = validate_driving(&atomic(), &QuadConfig::default());
        assert!(nd.passed, "{nd:?}");
        let exact = nd.alpha_nu_exact;
        assert!((nd.alpha_nu_integral.value() - exact).abs() < 1e-8 * exact.max(1.0));
    }

    #[test]
    fn driving_json_schema() {
        let json = r#"{
            "system": {"kind": "harmonic_decay", "omega0": 1.0, "lambda": 1.0},
            "C": 0.5,
            "measures": [{"t": 0.0, "mu1": {"atoms": [[0.5, 0.25]], "uniform": 0.25},
                          "mu2": {"uniform": 0.5}}],
            "alpha_post": 0.0
        }"#;
        let d: DrivingData = serde_json::from_str(json).unwrap();
        assert_eq!(d.nu(3.0), 0.5);
        let back: DrivingData = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        let unknown = json.replace("\"alpha_post\"", "\"alpha\"");
        assert!(serde_json::from_str::<DrivingData>(&unknown).is_err());
        let bad_mass = json.replace("\"uniform\": 0.5", "\"uniform\": 0.6");
        assert!(serde_json::from_str::<DrivingData>(&bad_mass).is_err());
    }

    #[test]
    fn identity_time_change_is_bit_identical() {
        let d = atomic();
        assert_eq!(d.time_changed(&TimeChange::Identity).unwrap(), d);
        assert!(d.time_changed(&TimeChange::Linear { slope: -1.0 }).is_err());
    }
}
