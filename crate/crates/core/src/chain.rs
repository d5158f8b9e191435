//! Finite-horizon Loewner chains `f_t = φ_{t,T}` together with checks of the
//! chain axioms and the Loewner PDE.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify_type, ClassifyConfig, ConformalType};
use crate::error::{Error, Result};
use crate::evolution::{flow, reflected_evolve, winding_index, SolverConfig};
use crate::kernel::circle_nodes;
use crate::vector_field::{eval_g, DrivingData};

/// Approximate Loewner chain `f_t := φ_{t,T}` on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainApproximation {
    pub data: DrivingData,
    pub horizon: f64,
    pub cfg: SolverConfig,
}

impl ChainApproximation {
    pub fn new(data: DrivingData, horizon: f64, cfg: SolverConfig) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        cfg.validate()?;
        Ok(Self { data, horizon, cfg })
    }

    /// Orientation of the chain: images of circles wind once around 0.
    pub fn orientation(&self) -> i32 {
        1
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::InvalidInput(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }
}

/// `f_t(z) = φ_{t,T}(z)`.
pub fn chain_eval(chain: &ChainApproximation, t: f64, z: Complex64) -> Result<Complex64> {
    chain.check_time(t)?;
    flow(&chain.data, &chain.cfg, t, chain.horizon, z)
}

/// Orientation-reversing companion `r(T)/f_t(r(t)/z)`, built from the
/// reflected evolution family.
pub fn chain_eval_reflected(chain: &ChainApproximation, t: f64, z: Complex64) -> Result<Complex64> {
    chain.check_time(t)?;
    reflected_evolve(&chain.data, &chain.cfg, t, chain.horizon, z)
}

/// `|f_s(z) − f_t(φ_{s,t}(z))|`.
pub fn chain_compat_defect(chain: &ChainApproximation, s: f64, t: f64, z: Complex64) -> Result<f64> {
    chain.check_time(s)?;
    chain.check_time(t)?;
    if s > t {
        return Err(Error::InvalidInput(format!("need s <= t, got s = {s}, t = {t}")));
    }
    let direct = chain_eval(chain, s, z)?;
    let moved = flow(&chain.data, &chain.cfg, s, t, z)?;
    Ok((direct - chain_eval(chain, t, moved)?).norm())
}

/// Bound `π/√(2 log(1/|z|))` on univalent index-preserving maps into `D*`.
pub fn boundary_bound(z: Complex64) -> f64 {
    PI / (2.0 * (1.0 / z.norm()).ln()).sqrt()
}

/// True iff `|f_t(z)| ≤ π/√(2 log(1/|z|)) + 10⁻⁹` for every sample `(t, z)`.
pub fn boundary_bound_check(chain: &ChainApproximation, samples: &[(f64, Complex64)]) -> Result<bool> {
    let ok = samples
        .par_iter()
        .map(|&(t, z)| Ok(chain_eval(chain, t, z)?.norm() <= boundary_bound(z) + 1e-9))
        .collect::<Result<Vec<bool>>>()?;
    Ok(ok.into_iter().all(|b| b))
}

/// True iff `f_t(z)` lies in the outer component of the complement of
/// `f_t(C(0,R))`, measured by the winding number of the image curve about
/// `f_t(z)` on `samples` points.
pub fn out_domain_check(chain: &ChainApproximation, t: f64, radius: f64, z: Complex64, samples: usize) -> Result<bool> {
    let r = chain.data.system().r(t);
    if !(r < radius && radius < z.norm() && z.norm() < 1.0) {
        return Err(Error::Domain(format!(
            "need r(t) < R < |z| < 1, got r(t) = {r}, R = {radius}, |z| = {}",
            z.norm()
        )));
    }
    let center = chain_eval(chain, t, z)?;
    let curve: Vec<Complex64> = circle_nodes(radius, samples)
        .into_par_iter()
        .map(|w| Ok(chain_eval(chain, t, w)? - center))
        .collect::<Result<_>>()?;
    Ok(winding_index(&curve)? == 0)
}

/// Residual of the Loewner PDE `∂f_s/∂s = −G(z,s)·f_s′(z)`, with a centred
/// difference of step `h` in `s` and a fourth-order difference in `z`.
pub fn pde_residual_check(chain: &ChainApproximation, s: f64, z: Complex64, h: f64) -> Result<f64> {
    if !(h > 0.0 && s - h >= 0.0 && s + h <= chain.horizon) {
        return Err(Error::Domain(format!("time stencil [{}, {}] leaves [0, T]", s - h, s + h)));
    }
    if chain.data.breakpoints().iter().any(|&k| k > s - h && k < s + h) {
        return Err(Error::Domain(format!("time stencil around s = {s} crosses a driving breakpoint")));
    }
    let sys = chain.data.system();
    let inner = sys.r(s + h);
    let m = z.norm();
    let d = 1e-3 * (m - inner).min(1.0 - m);
    if !(m - 2.0 * d > inner && m + 2.0 * d < 1.0 && d > 0.0) {
        return Err(Error::Domain(format!("space stencil around |z| = {m} leaves D_(s+h)")));
    }
    let ds = (chain_eval(chain, s + h, z)? - chain_eval(chain, s - h, z)?) / (2.0 * h);
    let f = |w: Complex64| chain_eval(chain, s, w);
    let dz = (f(z - 2.0 * d)? - 8.0 * f(z - d)? + 8.0 * f(z + d)? - f(z + 2.0 * d)?) / (12.0 * d);
    let g = eval_g(&chain.data, z, s, &chain.cfg.kernel)?;
    Ok((ds + g * dz).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub min_modulus: f64,
    pub max_modulus: f64,
    pub declared_type: ConformalType,
    pub label: String,
}

/// Modulus bounds of `f_t(z)` over `grid` together with the type label.
pub fn loewner_range_estimate(chain: &ChainApproximation, grid: &[(f64, Complex64)]) -> Result<RangeReport> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let moduli: Vec<f64> = grid
        .par_iter()
        .map(|&(t, z)| Ok(chain_eval(chain, t, z)?.norm()))
        .collect::<Result<_>>()?;
    let cfg = ClassifyConfig {
        solver: chain.cfg,
        ..ClassifyConfig::default()
    };
    let report = classify_type(&chain.data, &cfg)?;
    Ok(RangeReport {
        min_modulus: moduli.iter().copied().fold(f64::INFINITY, f64::min),
        max_modulus: moduli.iter().copied().fold(0.0, f64::max),
        declared_type: report.declared_type,
        label: report.range_label,
    })
}

/// Writes `t, re_f, im_f, abs_f` for every grid point.
pub fn write_image_csv<W: Write>(chain: &ChainApproximation, grid: &[(f64, Complex64)], out: W) -> Result<()> {
    let values: Vec<Complex64> = grid
        .par_iter()
        .map(|&(t, z)| chain_eval(chain, t, z))
        .collect::<Result<_>>()?;
    let io = |e: csv::Error| Error::InvalidInput(format!("csv output failed: {e}"));
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["t", "re_f", "im_f", "abs_f"]).map_err(io)?;
    for (&(t, _), f) in grid.iter().zip(&values) {
        wtr.write_record([
            format!("{t:.16e}"),
            format!("{:.16e}", f.re),
            format!("{:.16e}", f.im),
            format!("{:.16e}", f.norm()),
        ])
        .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::InvalidInput(format!("csv output failed: {e}")))
}
