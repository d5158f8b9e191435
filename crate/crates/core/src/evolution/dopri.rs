//! Dormand–Prince 5(4) embedded pair with FSAL for a single complex unknown.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

struct Stages {
    y_new: Complex64,
    k7: Complex64,
    err: Complex64,
}

fn attempt<F>(f: &mut F, t: f64, y: Complex64, k1: Complex64, h: f64) -> Result<Stages>
where
    F: FnMut(f64, Complex64) -> Result<Complex64>,
{
    let k2 = f(t + C2 * h, y + h * A21 * k1)?;
    let k3 = f(t + C3 * h, y + h * (A31 * k1 + A32 * k2))?;
    let k4 = f(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
    let k5 = f(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))?;
    let k6 = f(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))?;
    let y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
    let k7 = f(t + h, y_new)?;
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    Ok(Stages { y_new, k7, err })
}

/// Integrates `y′ = f(t, y)` from `t0` to `t1`, calling `on_step` after each
/// accepted step. Returns the final state and a suggested next step size.
///
/// A stage evaluation that fails (for instance because the trial point left
/// the domain of the field) is treated like an oversized error estimate and
/// the step is retried with a quarter of its length.
pub(crate) fn integrate<F, S>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: Complex64,
    h_hint: Option<f64>,
    ctl: &StepControl,
    steps: &mut usize,
    mut on_step: S,
) -> Result<(Complex64, f64)>
where
    F: FnMut(f64, Complex64) -> Result<Complex64>,
    S: FnMut(f64, Complex64) -> Result<()>,
{
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok((y0, h_hint.unwrap_or(ctl.max_step)));
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, y)?;
    let scale = |y: Complex64| ctl.abs_tol + ctl.rel_tol * y.norm();
    let mut h = match h_hint {
        Some(h) => h,
        None => {
            let d0 = y.norm() / scale(y);
            let d1 = k1.norm() / scale(y);
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-3 * span
            } else {
                0.01 * d0 / d1
            }
        }
    }
    .min(ctl.max_step)
    .min(span);
    let h_min = 1e-14 * (1.0 + t1.abs());

    while t < t1 {
        if *steps >= ctl.max_steps {
            return Err(Error::StepFailure {
                t,
                reason: format!("step budget of {} exhausted", ctl.max_steps),
            });
        }
        let last = t + h >= t1 - 1e-15 * (1.0 + t1.abs());
        if last {
            h = t1 - t;
        }
        match attempt(&mut f, t, y, k1, h) {
            Ok(st) => {
                let sc = ctl.abs_tol + ctl.rel_tol * y.norm().max(st.y_new.norm());
                let e = st.err.norm() / sc;
                if e <= 1.0 && st.y_new.re.is_finite() && st.y_new.im.is_finite() {
                    t = if last { t1 } else { t + h };
                    y = st.y_new;
                    k1 = st.k7;
                    *steps += 1;
                    on_step(t, y)?;
                    let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                    h = (h * factor).min(ctl.max_step);
                } else {
                    let factor = if e.is_finite() { (0.9 * e.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
                    h *= factor;
                }
            }
            Err(_) => h *= 0.25,
        }
        if t < t1 && h < h_min {
            return Err(Error::StepFailure {
                t,
                reason: format!("step size fell below {h_min:e}"),
            });
        }
    }
    Ok((y, h))
}
