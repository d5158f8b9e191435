//! Canonical domain systems `D_t = A_{r(t)}` parametrized by the conformal
//! width `ω(t) = −π/log r(t)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timefn::{piece_index, sort_dedup, TimeChange};

/// Degeneration pattern of a canonical system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemKind {
    /// `r(t) > 0` for all `t`.
    NonDegenerate,
    /// `r > 0` on `[0, threshold)` and `r = 0` afterwards.
    Mixed { threshold: f64 },
    /// `r ≡ 0`.
    Degenerate,
}

/// Family of annuli described through `ω(t)`, non-increasing and continuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CanonicalSystem {
    ConstantOmega {
        omega0: f64,
    },
    /// `ω(t) = ω₀·max(0, 1 − t/threshold)`.
    AffineToZero {
        omega0: f64,
        threshold: f64,
    },
    /// `ω(t) = ω₀/(1 + λt)`.
    HarmonicDecay {
        omega0: f64,
        lambda: f64,
    },
    /// `ω(t) = ω_∞ + (ω₀ − ω_∞)e^{−λt}`.
    ExpApproach {
        omega0: f64,
        omega_inf: f64,
        lambda: f64,
    },
    IdenticallyZero,
    /// Linear interpolation through `(t, ω)` knots, constant after the last.
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
    },
    /// `ω(τ(t))` for a base system and an increasing time change `τ`.
    TimeChanged {
        base: Box<CanonicalSystem>,
        tau: TimeChange,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")))
    }
}

impl CanonicalSystem {
    pub fn validate(&self) -> Result<()> {
        match self {
            CanonicalSystem::ConstantOmega { omega0 } => positive("omega0", *omega0),
            CanonicalSystem::AffineToZero { omega0, threshold } => {
                positive("omega0", *omega0)?;
                positive("threshold", *threshold)
            }
            CanonicalSystem::HarmonicDecay { omega0, lambda } => {
                positive("omega0", *omega0)?;
                positive("lambda", *lambda)
            }
            CanonicalSystem::ExpApproach {
                omega0,
                omega_inf,
                lambda,
            } => {
                positive("omega_inf", *omega_inf)?;
                positive("lambda", *lambda)?;
                if !(omega0 > omega_inf) || !omega0.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "ExpApproach needs omega0 > omega_inf, got {omega0} <= {omega_inf}"
                    )));
                }
                Ok(())
            }
            CanonicalSystem::IdenticallyZero => Ok(()),
            CanonicalSystem::PiecewiseLinear { knots } => {
                if knots.is_empty() || knots[0].0 != 0.0 {
                    return Err(Error::InvalidInput(
                        "piecewise omega needs a first knot at t = 0".into(),
                    ));
                }
                if knots.iter().any(|&(t, w)| !t.is_finite() || !w.is_finite() || w < 0.0) {
                    return Err(Error::InvalidInput(
                        "omega knots must be finite with omega >= 0".into(),
                    ));
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::InvalidInput(
                            "omega knot times must be strictly increasing".into(),
                        ));
                    }
                    if w[1].1 > w[0].1 {
                        return Err(Error::InvalidInput(
                            "omega must be non-increasing".into(),
                        ));
                    }
                }
                Ok(())
            }
            CanonicalSystem::TimeChanged { base, tau } => {
                tau.validate()?;
                base.validate()
            }
        }
    }

    /// `ω(t)`.
    pub fn omega(&self, t: f64) -> f64 {
        self.omega_at(t, t)
    }

    pub(crate) fn omega_at(&self, t: f64, locator: f64) -> f64 {
        match self {
            CanonicalSystem::ConstantOmega { omega0 } => *omega0,
            CanonicalSystem::AffineToZero { omega0, threshold } => {
                if locator < *threshold {
                    (omega0 * (1.0 - t / threshold)).max(0.0)
                } else {
                    0.0
                }
            }
            CanonicalSystem::HarmonicDecay { omega0, lambda } => omega0 / (1.0 + lambda * t),
            CanonicalSystem::ExpApproach {
                omega0,
                omega_inf,
                lambda,
            } => omega_inf + (omega0 - omega_inf) * (-lambda * t).exp(),
            CanonicalSystem::IdenticallyZero => 0.0,
            CanonicalSystem::PiecewiseLinear { knots } => {
                let i = piece_index(knots.iter().map(|k| k.0), locator);
                if i + 1 >= knots.len() {
                    return knots[i].1;
                }
                let (t0, w0) = knots[i];
                let (t1, w1) = knots[i + 1];
                (w0 + (w1 - w0) / (t1 - t0) * (t - t0)).max(0.0)
            }
            CanonicalSystem::TimeChanged { base, tau } => {
                base.omega_at(tau.eval(t), tau.eval(locator))
            }
        }
    }

    pub(crate) fn omega_deriv_at(&self, t: f64, locator: f64) -> f64 {
        match self {
            CanonicalSystem::ConstantOmega { .. } | CanonicalSystem::IdenticallyZero => 0.0,
            CanonicalSystem::AffineToZero { omega0, threshold } => {
                if locator < *threshold {
                    -omega0 / threshold
                } else {
                    0.0
                }
            }
            CanonicalSystem::HarmonicDecay { omega0, lambda } => {
                let d = 1.0 + lambda * t;
                -lambda * omega0 / (d * d)
            }
            CanonicalSystem::ExpApproach {
                omega0,
                omega_inf,
                lambda,
            } => -lambda * (omega0 - omega_inf) * (-lambda * t).exp(),
            CanonicalSystem::PiecewiseLinear { knots } => {
                let i = piece_index(knots.iter().map(|k| k.0), locator);
                if i + 1 >= knots.len() {
                    return 0.0;
                }
                let (t0, w0) = knots[i];
                let (t1, w1) = knots[i + 1];
                (w1 - w0) / (t1 - t0)
            }
            CanonicalSystem::TimeChanged { base, tau } => {
                base.omega_deriv_at(tau.eval(t), tau.eval(locator)) * tau.deriv_at(t, locator)
            }
        }
    }

    /// `log r(t) = −π/ω(t)`, `−∞` once degenerate.
    pub fn ln_r(&self, t: f64) -> f64 {
        ln_r_from_omega(self.omega(t))
    }

    pub(crate) fn r_at(&self, t: f64, locator: f64) -> f64 {
        r_from_omega(self.omega_at(t, locator))
    }

    /// `r(t)`.
    pub fn r(&self, t: f64) -> f64 {
        r_from_omega(self.omega(t))
    }

    /// `r′(t)/r(t) = π·ω′(t)/ω(t)²` on the piece selected by `locator`.
    /// Returns `−∞` where `ω` reaches zero from a strictly decreasing piece.
    pub(crate) fn log_deriv_at(&self, t: f64, locator: f64) -> f64 {
        let w = self.omega_at(t, locator);
        let dw = self.omega_deriv_at(t, locator);
        if dw == 0.0 {
            return 0.0;
        }
        PI * dw / (w * w)
    }

    /// `r′(t)/r(t)`; right-hand derivative at breakpoints.
    pub fn log_deriv(&self, t: f64) -> Result<f64> {
        if self.omega(t) <= 0.0 {
            return Err(Error::DegenerateTime(t));
        }
        Ok(self.log_deriv_at(t, t))
    }

    /// `log(r(t)/r(s))` in closed form, `−∞` if `r(t) = 0`.
    pub fn log_ratio(&self, s: f64, t: f64) -> f64 {
        let ws = self.omega(s);
        let wt = self.omega(t);
        if wt <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if ws == wt {
            return 0.0;
        }
        PI * (1.0 / ws - 1.0 / wt)
    }

    pub fn kind(&self) -> SystemKind {
        match self {
            CanonicalSystem::ConstantOmega { .. }
            | CanonicalSystem::HarmonicDecay { .. }
            | CanonicalSystem::ExpApproach { .. } => SystemKind::NonDegenerate,
            CanonicalSystem::AffineToZero { threshold, .. } => SystemKind::Mixed {
                threshold: *threshold,
            },
            CanonicalSystem::IdenticallyZero => SystemKind::Degenerate,
            CanonicalSystem::PiecewiseLinear { knots } => {
                if knots[0].1 == 0.0 {
                    SystemKind::Degenerate
                } else if let Some(&(t, _)) = knots.iter().find(|k| k.1 == 0.0) {
                    SystemKind::Mixed { threshold: t }
                } else {
                    SystemKind::NonDegenerate
                }
            }
            CanonicalSystem::TimeChanged { base, tau } => match base.kind() {
                SystemKind::Mixed { threshold } => match tau.inverse(threshold) {
                    Some(t) => SystemKind::Mixed { threshold: t },
                    None => SystemKind::NonDegenerate,
                },
                other => other,
            },
        }
    }

    /// First time with `r = 0` (0 for degenerate systems, `∞` if never).
    pub fn degeneration_time(&self) -> f64 {
        match self.kind() {
            SystemKind::NonDegenerate => f64::INFINITY,
            SystemKind::Mixed { threshold } => threshold,
            SystemKind::Degenerate => 0.0,
        }
    }

    /// `lim_{t→∞} ω(t)`.
    pub fn omega_infinity(&self) -> f64 {
        match self {
            CanonicalSystem::ConstantOmega { omega0 } => *omega0,
            CanonicalSystem::ExpApproach { omega_inf, .. } => *omega_inf,
            CanonicalSystem::AffineToZero { .. }
            | CanonicalSystem::HarmonicDecay { .. }
            | CanonicalSystem::IdenticallyZero => 0.0,
            CanonicalSystem::PiecewiseLinear { knots } => knots[knots.len() - 1].1,
            CanonicalSystem::TimeChanged { base, tau } => {
                let sup = tau.supremum();
                if sup.is_infinite() {
                    base.omega_infinity()
                } else {
                    base.omega(sup)
                }
            }
        }
    }

    /// `r_∞ = lim_{t→∞} r(t)`.
    pub fn r_infinity(&self) -> f64 {
        r_from_omega(self.omega_infinity())
    }

    /// Times where `ω` is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            CanonicalSystem::AffineToZero { threshold, .. } => vec![0.0, *threshold],
            CanonicalSystem::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
            CanonicalSystem::TimeChanged { base, tau } => tau.pull_back(&base.breakpoints()),
            _ => vec![0.0],
        }
    }

    /// Applies `τ`, returning the system `t ↦ D_{τ(t)}`.
    pub fn time_changed(&self, tau: &TimeChange) -> Self {
        if tau.is_identity() {
            return self.clone();
        }
        CanonicalSystem::TimeChanged {
            base: Box::new(self.clone()),
            tau: tau.clone(),
        }
    }
}

fn r_from_omega(w: f64) -> f64 {
    if w > 0.0 {
        (-PI / w).exp()
    } else {
        0.0
    }
}

fn ln_r_from_omega(w: f64) -> f64 {
    if w > 0.0 {
        -PI / w
    } else {
        f64::NEG_INFINITY
    }
}

/// `r(t) = e^{−π/ω(t)}` (0 once degenerate).
pub fn r_of_t(sys: &CanonicalSystem, t: f64) -> f64 {
    sys.r(t)
}

/// `r′(t)/r(t)`; fails with a degenerate-time error where `ω(t) = 0`.
pub fn log_deriv(sys: &CanonicalSystem, t: f64) -> Result<f64> {
    sys.log_deriv(t)
}

/// Conformal module `(1/2π)·log(r₂/r₁)` of `{r₁ < |z| < r₂}`.
pub fn module_of_annulus(r1: f64, r2: f64) -> Result<f64> {
    if !(r1 > 0.0) || !r1.is_finite() || !r2.is_finite() {
        return Err(Error::InvalidInput(format!(
            "annulus radii must be positive, got ({r1}, {r2})"
        )));
    }
    if !(r1 < r2) {
        return Err(Error::InvalidInput(format!(
            "annulus radii out of order: {r1} >= {r2}"
        )));
    }
    Ok((r2 / r1).ln() / TAU)
}

/// Sorted union of breakpoint lists.
pub(crate) fn merge_breakpoints<I: IntoIterator<Item = Vec<f64>>>(lists: I) -> Vec<f64> {
    let mut all: Vec<f64> = lists.into_iter().flatten().filter(|t| t.is_finite()).collect();
    all.push(0.0);
    sort_dedup(&mut all);
    all.retain(|&t| t >= 0.0);
    all
}
