//! Villat kernel of the annulus `A_r = {r < |z| < 1}` and the Herglotz-type
//! class built from it.
//!
//! The kernel is evaluated from its Laurent development
//!
//! ```text
//! K_r(z) = 1 + 2 Σ_{k≥1} (z^k − (r²/z)^k) / (1 − r^{2k}),
//! ```
//!
//! truncated once the geometric tail bound drops below the requested
//! absolute tolerance. At `r = 0` it degenerates to the Schwarz kernel
//! `(1 + z)/(1 − z)`, which is returned in closed form.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Evaluation closer than this fraction of `1 − r` to either boundary circle
/// is refused.
const BOUNDARY_MARGIN: f64 = 1e-6;

/// Truncation control for the kernel series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTolerance {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for KernelTolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_terms: 1_000_000,
        }
    }
}

impl KernelTolerance {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        let tol = Self { abs_tol, max_terms };
        tol.check()?;
        Ok(tol)
    }

    fn check(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::InvalidInput(format!(
                "kernel abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidInput("kernel max_terms must be >= 1".into()));
        }
        Ok(())
    }
}

/// Positive measure on the unit circle made of finitely many atoms plus a
/// multiple of normalized arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct CircleMeasure {
    atoms: Vec<(f64, f64)>,
    uniform_mass: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureRepr {
    #[serde(default)]
    atoms: Vec<(f64, f64)>,
    #[serde(default)]
    uniform: f64,
}

impl TryFrom<MeasureRepr> for CircleMeasure {
    type Error = Error;

    fn try_from(repr: MeasureRepr) -> Result<Self> {
        CircleMeasure::new(repr.atoms, repr.uniform)
    }
}

impl From<CircleMeasure> for MeasureRepr {
    fn from(m: CircleMeasure) -> Self {
        MeasureRepr {
            atoms: m.atoms,
            uniform: m.uniform_mass,
        }
    }
}

impl CircleMeasure {
    /// Builds a measure from `(angle, weight)` atoms and a uniform mass.
    ///
    /// Angles are reduced to `[0, 2π)` and sorted; atoms sharing an angle are
    /// merged and zero-weight atoms dropped, so the stored list is strictly
    /// increasing in angle.
    pub fn new(atoms: Vec<(f64, f64)>, uniform_mass: f64) -> Result<Self> {
        if !(uniform_mass >= 0.0) || !uniform_mass.is_finite() {
            return Err(Error::InvalidInput(format!(
                "uniform mass must be finite and nonnegative, got {uniform_mass}"
            )));
        }
        let mut canon: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (angle, weight) in atoms {
            if !angle.is_finite() || !weight.is_finite() || weight < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "atom ({angle}, {weight}) must have finite angle and nonnegative weight"
                )));
            }
            if weight > 0.0 {
                let mut a = angle.rem_euclid(TAU);
                if a >= TAU {
                    a = 0.0;
                }
                canon.push((a, weight));
            }
        }
        canon.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(canon.len());
        for (a, w) in canon {
            match merged.last_mut() {
                Some(last) if last.0 == a => last.1 += w,
                _ => merged.push((a, w)),
            }
        }
        Ok(Self {
            atoms: merged,
            uniform_mass,
        })
    }

    pub fn zero() -> Self {
        Self {
            atoms: Vec::new(),
            uniform_mass: 0.0,
        }
    }

    pub fn uniform(mass: f64) -> Result<Self> {
        Self::new(Vec::new(), mass)
    }

    pub fn atom(angle: f64, weight: f64) -> Result<Self> {
        Self::new(vec![(angle, weight)], 0.0)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn uniform_mass(&self) -> f64 {
        self.uniform_mass
    }

    pub fn total_mass(&self) -> f64 {
        self.uniform_mass + self.atoms.iter().map(|&(_, w)| w).sum::<f64>()
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    /// Same measure with every weight multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.atoms.iter().map(|&(a, w)| (a, w * factor)).collect(),
            self.uniform_mass * factor,
        )
    }
}

/// Villat kernel `K_r(z)` for `r ∈ [0, 1)` and `r < |z| < 1`.
pub fn villat_eval(r: f64, z: Complex64, tol: &KernelTolerance) -> Result<Complex64> {
    tol.check()?;
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("annulus radius r = {r} not in [0, 1)")));
    }
    let modulus = z.norm();
    if !(modulus > r && modulus < 1.0) {
        return Err(Error::Domain(format!(
            "|z| = {modulus} not inside the annulus ({r}, 1)"
        )));
    }
    if r > 0.0 && modulus - r < BOUNDARY_MARGIN * (1.0 - r) {
        return Err(Error::Truncation(format!(
            "|z| = {modulus} lies within {:e} of the inner circle of A_{r}",
            BOUNDARY_MARGIN * (1.0 - r)
        )));
    }
    villat_unchecked(r, z, tol)
}

/// Kernel evaluation once the caller has established `r < |z| < 1`.
///
/// Only the unit circle carries poles of `K_r`; the Laurent series converges
/// across `|z| = r`, so this path guards the outer circle alone.
pub(crate) fn villat_unchecked(r: f64, z: Complex64, tol: &KernelTolerance) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    if r == 0.0 {
        return Ok((one + z) / (one - z));
    }
    let modulus = z.norm();
    let margin = BOUNDARY_MARGIN * (1.0 - r);
    if 1.0 - modulus < margin {
        return Err(Error::Truncation(format!(
            "|z| = {modulus} lies within {margin:e} of the unit circle"
        )));
    }

    let r2 = r * r;
    // polar form: a complex division would underflow |z|² for tiny z
    let q_mod = (r / modulus) * r;
    let q = Complex64::from_polar(q_mod, -z.arg());
    // r²/|z| < r < |z|, so |z| dominates the geometric tail.
    let denom = (1.0 - r2) * (1.0 - modulus);

    let mut zk = one;
    let mut qk = one;
    let mut zk_mod = 1.0;
    let mut qk_mod = 1.0;
    let mut r2k = 1.0;
    let mut sum = Complex64::new(0.0, 0.0);
    for _ in 0..tol.max_terms {
        zk *= z;
        qk *= q;
        zk_mod *= modulus;
        qk_mod *= q_mod;
        r2k *= r2;
        sum += (zk - qk) / (1.0 - r2k);
        let tail = 2.0 * (zk_mod * modulus + qk_mod * q_mod) / denom;
        if tail < tol.abs_tol {
            return Ok(one + 2.0 * sum);
        }
    }
    Err(Error::Truncation(format!(
        "tail bound not met after {} terms at |z| = {modulus}, r = {r}",
        tol.max_terms
    )))
}

/// Evaluates `p(z) = ∫ K_r(z/ξ) dμ₁(ξ) + ∫ [1 − K_r(rξ/z)] dμ₂(ξ)`.
///
/// The measures must have combined mass 1; at `r = 0` the second measure
/// must vanish.
pub fn herglotz_eval(
    r: f64,
    mu1: &CircleMeasure,
    mu2: &CircleMeasure,
    z: Complex64,
    tol: &KernelTolerance,
) -> Result<Complex64> {
    tol.check()?;
    let total = mu1.total_mass() + mu2.total_mass();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::MassCondition(format!(
            "mu1(T) + mu2(T) = {total}, expected 1"
        )));
    }
    if r == 0.0 && mu2.total_mass() != 0.0 {
        return Err(Error::MassCondition(
            "mu2 must vanish on the punctured disk (r = 0)".into(),
        ));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("annulus radius r = {r} not in [0, 1)")));
    }
    let modulus = z.norm();
    if !(modulus > r && modulus < 1.0) {
        return Err(Error::Domain(format!(
            "|z| = {modulus} not inside the annulus ({r}, 1)"
        )));
    }
    herglotz_unchecked(r, mu1, mu2, z, tol)
}

/// Herglotz evaluation without the mass and domain checks.
///
/// When `r == 0` the μ₂ bracket is replaced by its limit `1 − K_0(0) = 0`;
/// the vector field relies on this when `r(t)` underflows before the
/// degeneration time.
pub(crate) fn herglotz_unchecked(
    r: f64,
    mu1: &CircleMeasure,
    mu2: &CircleMeasure,
    z: Complex64,
    tol: &KernelTolerance,
) -> Result<Complex64> {
    let mut value = Complex64::new(mu1.uniform_mass(), 0.0);
    for &(angle, weight) in mu1.atoms() {
        let xi_inv = Complex64::from_polar(1.0, -angle);
        value += weight * villat_unchecked(r, z * xi_inv, tol)?;
    }
    if r > 0.0 {
        for &(angle, weight) in mu2.atoms() {
            let xi = Complex64::from_polar(1.0, angle);
            value += weight * (1.0 - villat_unchecked(r, r * xi / z, tol)?);
        }
    }
    Ok(value)
}

/// Laurent free term of a function sampled at `n` equispaced points of a
/// circle: the trapezoid-rule circle average.
pub fn free_term(samples: &[Complex64]) -> Result<Complex64> {
    if samples.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "free term needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    let sum: Complex64 = samples.iter().sum();
    Ok(sum / samples.len() as f64)
}

/// Equispaced nodes `ρ·e^{2πij/n}`, `j = 0..n`.
pub fn circle_nodes(radius: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|j| Complex64::from_polar(radius, TAU * j as f64 / n as f64))
        .collect()
}

/// Reconstructs a function holomorphic on the closed annulus from the real
/// part of its boundary values and the mean of its imaginary part.
///
/// `boundary_re_outer[j]` is `Re f(e^{2πij/n})` and `boundary_re_inner[j]` is
/// `Re f(r·e^{2πij/m})`; both circle integrals use the trapezoid rule.
pub fn villat_reconstruct(
    r: f64,
    boundary_re_outer: &[f64],
    boundary_re_inner: &[f64],
    im_mean: f64,
    z: Complex64,
    tol: &KernelTolerance,
) -> Result<Complex64> {
    tol.check()?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("reconstruction needs r in (0, 1), got {r}")));
    }
    for (name, len) in [
        ("outer", boundary_re_outer.len()),
        ("inner", boundary_re_inner.len()),
    ] {
        if len < 64 {
            return Err(Error::InvalidInput(format!(
                "{name} boundary needs at least 64 samples, got {len}"
            )));
        }
    }
    let modulus = z.norm();
    if !(modulus > r && modulus < 1.0) {
        return Err(Error::Domain(format!(
            "|z| = {modulus} not inside the annulus ({r}, 1)"
        )));
    }

    let n = boundary_re_outer.len();
    let mut outer = Complex64::new(0.0, 0.0);
    for (xi, &re_f) in circle_nodes(1.0, n).into_iter().zip(boundary_re_outer) {
        outer += villat_unchecked(r, z / xi, tol)? * re_f;
    }
    outer /= n as f64;

    let m = boundary_re_inner.len();
    let mut inner = Complex64::new(0.0, 0.0);
    for (xi, &re_f) in circle_nodes(1.0, m).into_iter().zip(boundary_re_inner) {
        inner += (villat_unchecked(r, r * xi / z, tol)? - 1.0) * re_f;
    }
    inner /= m as f64;

    Ok(outer + inner + Complex64::new(0.0, im_mean))
}
