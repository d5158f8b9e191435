//! Piecewise-smooth functions of time used as driving coefficients, and the
//! increasing time changes that act on them.
//!
//! Every lookup takes a *locator* time alongside the evaluation time. The
//! locator selects the smooth piece; the formula of that piece is then
//! evaluated at the actual time. Integrators pass the midpoint of the current
//! step segment as locator so that evaluation at a segment end uses the
//! one-sided value of the piece being integrated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Increasing change of variable `τ` with `τ(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeChange {
    Identity,
    /// `τ(t) = slope·t`.
    Linear { slope: f64 },
    /// `τ(t) = horizon·(1 − e^{−t})`.
    ExpSaturate { horizon: f64 },
    /// Piecewise linear through `(t, τ)` knots starting at `(0, 0)`; the last
    /// slope continues past the final knot.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl TimeChange {
    pub fn validate(&self) -> Result<()> {
        match self {
            TimeChange::Identity => Ok(()),
            TimeChange::Linear { slope } => {
                if *slope > 0.0 && slope.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "time change slope must be positive, got {slope}"
                    )))
                }
            }
            TimeChange::ExpSaturate { horizon } => {
                if *horizon > 0.0 && horizon.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "saturating time change needs a positive horizon, got {horizon}"
                    )))
                }
            }
            TimeChange::PiecewiseLinear { knots } => {
                if knots.len() < 2 || knots[0] != (0.0, 0.0) {
                    return Err(Error::InvalidInput(
                        "piecewise time change needs >= 2 knots starting at (0, 0)".into(),
                    ));
                }
                for w in knots.windows(2) {
                    let (t0, u0) = w[0];
                    let (t1, u1) = w[1];
                    if !(t1 > t0) || !(u1 > u0) || !t1.is_finite() || !u1.is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "time change slope nonpositive between knots {t0} and {t1}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, TimeChange::Identity)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeChange::Identity => t,
            TimeChange::Linear { slope } => slope * t,
            TimeChange::ExpSaturate { horizon } => -horizon * (-t).exp_m1(),
            TimeChange::PiecewiseLinear { knots } => {
                let i = piece_index(knots.iter().map(|k| k.0), t).min(knots.len() - 2);
                let (t0, u0) = knots[i];
                let (t1, u1) = knots[i + 1];
                u0 + (u1 - u0) / (t1 - t0) * (t - t0)
            }
        }
    }

    /// `τ'(t)` on the piece selected by `locator`.
    pub fn deriv_at(&self, t: f64, locator: f64) -> f64 {
        match self {
            TimeChange::Identity => 1.0,
            TimeChange::Linear { slope } => *slope,
            TimeChange::ExpSaturate { horizon } => horizon * (-t).exp(),
            TimeChange::PiecewiseLinear { knots } => {
                let i = piece_index(knots.iter().map(|k| k.0), locator).min(knots.len() - 2);
                let (t0, u0) = knots[i];
                let (t1, u1) = knots[i + 1];
                (u1 - u0) / (t1 - t0)
            }
        }
    }

    /// `sup τ = lim_{t→∞} τ(t)`.
    pub fn supremum(&self) -> f64 {
        match self {
            TimeChange::ExpSaturate { horizon } => *horizon,
            _ => f64::INFINITY,
        }
    }

    /// `τ⁻¹(u)`, or `None` when `u` is not attained.
    pub fn inverse(&self, u: f64) -> Option<f64> {
        if u < 0.0 || u >= self.supremum() {
            return None;
        }
        Some(match self {
            TimeChange::Identity => u,
            TimeChange::Linear { slope } => u / slope,
            TimeChange::ExpSaturate { horizon } => -(-u / horizon).ln_1p(),
            TimeChange::PiecewiseLinear { knots } => {
                let i = piece_index(knots.iter().map(|k| k.1), u).min(knots.len() - 2);
                let (t0, u0) = knots[i];
                let (t1, u1) = knots[i + 1];
                t0 + (t1 - t0) / (u1 - u0) * (u - u0)
            }
        })
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            TimeChange::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
            _ => vec![0.0],
        }
    }

    /// Maps breakpoints of a function of `τ`-time to breakpoints in `t`.
    pub fn pull_back(&self, points: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = points.iter().filter_map(|&u| self.inverse(u)).collect();
        out.extend(self.breakpoints());
        sort_dedup(&mut out);
        out
    }
}

/// Index `i` of the last start `<= t` (0 if `t` precedes every start).
pub(crate) fn piece_index(starts: impl Iterator<Item = f64>, t: f64) -> usize {
    let mut idx = 0;
    for (i, s) in starts.enumerate() {
        if s <= t {
            idx = i;
        } else {
            break;
        }
    }
    idx
}

pub(crate) fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
}

/// Closed-form expression of a single piece, written in the local time
/// `x = t − start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Expr {
    /// `Σ c_k x^k`.
    Poly(Vec<f64>),
    /// `scale·e^{rate·x}`.
    Exp { scale: f64, rate: f64 },
}

impl Expr {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Poly(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
            Expr::Exp { scale, rate } => scale * (rate * x).exp(),
        }
    }

    /// `∫_{x0}^{x1}` of the piece.
    fn integral(&self, x0: f64, x1: f64) -> f64 {
        match self {
            Expr::Poly(c) => {
                let anti = |x: f64| {
                    c.iter()
                        .enumerate()
                        .rev()
                        .fold(0.0, |acc, (k, &ck)| acc * x + ck / (k + 1) as f64)
                        * x
                };
                anti(x1) - anti(x0)
            }
            Expr::Exp { scale, rate } => {
                if *rate == 0.0 {
                    scale * (x1 - x0)
                } else {
                    scale * ((rate * x1).exp() - (rate * x0).exp()) / rate
                }
            }
        }
    }

    /// `∫_{x0}^{∞}` when the expression is the last piece.
    fn tail_integral(&self, x0: f64) -> f64 {
        match self {
            Expr::Poly(c) => {
                if c.iter().all(|&ck| ck == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Expr::Exp { scale, rate } => {
                if *scale == 0.0 {
                    0.0
                } else if *rate < 0.0 {
                    -scale * (rate * x0).exp() / rate
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Expr::Poly(c) => c.iter().all(|x| x.is_finite()),
            Expr::Exp { scale, rate } => scale.is_finite() && rate.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub start: f64,
    pub expr: Expr,
}

impl Piece {
    pub fn constant(start: f64, value: f64) -> Self {
        Self { start, expr: Expr::Poly(vec![value]) }
    }
}

/// Real coefficient function of time: piecewise closed-form expressions,
/// possibly composed with a time change as `f(τ(t))·τ'(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarFn {
    Constant(f64),
    Piecewise(PiecewiseRepr),
    TimeChanged(TimeChangedRepr),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseRepr {
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeChangedRepr {
    pub base: Box<ScalarFn>,
    pub tau: TimeChange,
}

impl ScalarFn {
    pub fn constant(c: f64) -> Self {
        ScalarFn::Constant(c)
    }

    pub fn pieces(pieces: Vec<Piece>) -> Result<Self> {
        let f = ScalarFn::Piecewise(PiecewiseRepr { pieces });
        f.validate()?;
        Ok(f)
    }

    /// `scale·e^{rate·t}` on `[0, ∞)`.
    pub fn exp(scale: f64, rate: f64) -> Self {
        ScalarFn::Piecewise(PiecewiseRepr {
            pieces: vec![Piece {
                start: 0.0,
                expr: Expr::Exp { scale, rate },
            }],
        })
    }

    pub fn poly(coeffs: Vec<f64>) -> Self {
        ScalarFn::Piecewise(PiecewiseRepr {
            pieces: vec![Piece {
                start: 0.0,
                expr: Expr::Poly(coeffs),
            }],
        })
    }

    pub fn time_changed(&self, tau: &TimeChange) -> Self {
        if tau.is_identity() {
            return self.clone();
        }
        ScalarFn::TimeChanged(TimeChangedRepr {
            base: Box::new(self.clone()),
            tau: tau.clone(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarFn::Constant(c) => {
                if c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput("constant coefficient is not finite".into()))
                }
            }
            ScalarFn::Piecewise(p) => {
                if p.pieces.is_empty() || p.pieces[0].start != 0.0 {
                    return Err(Error::InvalidInput(
                        "piecewise function must have a first piece starting at t = 0".into(),
                    ));
                }
                for w in p.pieces.windows(2) {
                    if !(w[1].start > w[0].start) || !w[1].start.is_finite() {
                        return Err(Error::InvalidInput(
                            "piece starts must be strictly increasing".into(),
                        ));
                    }
                }
                if p.pieces.iter().any(|pc| !pc.expr.is_finite()) {
                    return Err(Error::InvalidInput("non-finite piece coefficient".into()));
                }
                Ok(())
            }
            ScalarFn::TimeChanged(tc) => {
                tc.tau.validate()?;
                tc.base.validate()
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_at(t, t)
    }

    pub fn eval_at(&self, t: f64, locator: f64) -> f64 {
        match self {
            ScalarFn::Constant(c) => *c,
            ScalarFn::Piecewise(p) => {
                let i = piece_index(p.pieces.iter().map(|pc| pc.start), locator);
                let pc = &p.pieces[i];
                pc.expr.eval(t - pc.start)
            }
            ScalarFn::TimeChanged(tc) => {
                let u = tc.tau.eval(t);
                let u_loc = tc.tau.eval(locator);
                tc.base.eval_at(u, u_loc) * tc.tau.deriv_at(t, locator)
            }
        }
    }

    /// Exact `∫_a^b f(t) dt` for `0 <= a <= b`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            ScalarFn::Constant(c) => c * (b - a),
            ScalarFn::Piecewise(p) => {
                let mut total = 0.0;
                for (i, pc) in p.pieces.iter().enumerate() {
                    let end = p.pieces.get(i + 1).map_or(f64::INFINITY, |n| n.start);
                    let lo = a.max(pc.start);
                    let hi = b.min(end);
                    if hi > lo {
                        total += pc.expr.integral(lo - pc.start, hi - pc.start);
                    }
                }
                total
            }
            ScalarFn::TimeChanged(tc) => tc.base.integral(tc.tau.eval(a), tc.tau.eval(b)),
        }
    }

    /// Exact `∫_a^∞ f(t) dt`; `+∞` when the tail does not decay.
    pub fn tail_integral(&self, a: f64) -> f64 {
        match self {
            ScalarFn::Constant(c) => {
                if *c == 0.0 {
                    0.0
                } else {
                    f64::INFINITY * c.signum()
                }
            }
            ScalarFn::Piecewise(p) => {
                let last = p.pieces.last().expect("validated nonempty");
                let from = a.max(last.start);
                self.integral(a, from) + last.expr.tail_integral(from - last.start)
            }
            ScalarFn::TimeChanged(tc) => {
                let sup = tc.tau.supremum();
                if sup.is_infinite() {
                    tc.base.tail_integral(tc.tau.eval(a))
                } else {
                    tc.base.integral(tc.tau.eval(a), sup)
                }
            }
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            ScalarFn::Constant(_) => vec![0.0],
            ScalarFn::Piecewise(p) => p.pieces.iter().map(|pc| pc.start).collect(),
            ScalarFn::TimeChanged(tc) => tc.tau.pull_back(&tc.base.breakpoints()),
        }
    }

    /// Whether the function is identically zero (syntactically).
    pub fn is_zero(&self) -> bool {
        match self {
            ScalarFn::Constant(c) => *c == 0.0,
            ScalarFn::Piecewise(p) => p.pieces.iter().all(|pc| match &pc.expr {
                Expr::Poly(c) => c.iter().all(|&x| x == 0.0),
                Expr::Exp { scale, .. } => *scale == 0.0,
            }),
            ScalarFn::TimeChanged(tc) => tc.base.is_zero(),
        }
    }

    /// Lower bound check: samples each piece (and the asymptotic sign of the
    /// last one) and returns the smallest value seen.
    pub fn sampled_min(&self, horizon: f64, samples_per_piece: usize) -> f64 {
        let mut knots = self.breakpoints();
        knots.retain(|&b| b < horizon);
        knots.push(horizon);
        let mut min = f64::INFINITY;
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let loc = 0.5 * (a + b);
            for j in 0..=samples_per_piece {
                let t = a + (b - a) * j as f64 / samples_per_piece as f64;
                min = min.min(self.eval_at(t, loc));
            }
        }
        if let ScalarFn::Piecewise(p) = self {
            if let Some(last) = p.pieces.last() {
                let asymptotic = match &last.expr {
                    Expr::Poly(c) => c.iter().rev().find(|&&x| x != 0.0).copied().unwrap_or(0.0),
                    Expr::Exp { scale, .. } => *scale,
                };
                min = min.min(asymptotic.min(0.0));
            }
        }
        min
    }
}
