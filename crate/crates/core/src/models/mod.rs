//! Reference spacing laws, eigenvalue densities, and the semi-analytic
//! distributions of 2x2 real symmetric ensembles.

pub mod quad;
pub mod special;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampler::PdfFamily;
use quad::integrate;
use special::{bessel_i0e, erf, gamma};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{0} outside the model's domain")]
    Domain(&'static str),
    #[error("no 2x2 spacing law for ({0}, {1})")]
    Unsupported(TwoByTwo, PdfFamily),
    #[error("normalization failed: {0}")]
    Normalization(&'static str),
}

/// Absolute tolerance used for every normalization integral.
pub const QUAD_TOL: f64 = 1e-9;
/// Tighter tolerance for the inner integrals of the nested quadratures.
const INNER_TOL: f64 = 1e-11;

pub fn p_wigner(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    FRAC_PI_2 * s * (-FRAC_PI_4 * s * s).exp()
}

pub fn p_poisson(mu: f64, s: f64) -> Result<f64, ModelError> {
    if !(mu > 0.0) {
        return Err(ModelError::Domain("mu"));
    }
    Ok(if s < 0.0 { 0.0 } else { mu * (-mu * s).exp() })
}

#[allow(non_snake_case)]
pub fn p_AB(A: f64, B: f64, s: f64) -> Result<f64, ModelError> {
    if !(A > 0.0) || !(B > 0.0) {
        return Err(ModelError::Domain("A or B"));
    }
    Ok(if s < 0.0 { 0.0 } else { A * s * (-B * s * s).exp() })
}

/// Normalized sub-exponential law `a^{1/b}/Gamma(1+1/b) e^{-a s^b}`.
pub fn p_sub_exp(a: f64, b: f64, s: f64) -> Result<f64, ModelError> {
    if !(a > 0.0) {
        return Err(ModelError::Domain("a"));
    }
    if !(b > 0.0 && b < 1.0) {
        return Err(ModelError::Domain("b"));
    }
    if s < 0.0 {
        return Ok(0.0);
    }
    Ok(a.powf(1.0 / b) / gamma(1.0 + 1.0 / b) * (-a * s.powf(b)).exp())
}

pub fn semicircle(eps: f64) -> Result<f64, ModelError> {
    if !(eps.abs() <= 1.0) {
        return Err(ModelError::Domain("eps"));
    }
    Ok(2.0 / PI * (1.0 - eps * eps).sqrt())
}

pub fn bose_mitra(eps: f64) -> f64 {
    FRAC_PI_4 * eps.abs() * (-FRAC_PI_4 * eps * eps).exp()
}

/// Limiting density of symmetric cyclic matrices on `[-1, 1]`.
pub fn d_cyclic(a: f64, eps: f64) -> Result<f64, ModelError> {
    if !(a > 0.0) {
        return Err(ModelError::Domain("a"));
    }
    if !(eps.abs() <= 1.0) {
        return Err(ModelError::Domain("eps"));
    }
    Ok(a / (1.0 - (-a).exp()) * eps.abs() * (-a * eps * eps).exp())
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A density built from an unnormalized profile `raw`, rescaled so that
/// `p(x) = scale * raw(scale * x) / mass`.
///
/// For spacing laws `scale` is the mean spacing, so `p` has unit mass and
/// unit mean; for eigenvalue densities it is the mean positive eigenvalue.
#[derive(Clone)]
pub struct ModelCurve {
    name: String,
    raw: Evaluator,
    /// Integration breakpoints of `raw` (kinks, support ends).
    breaks: Vec<f64>,
    /// Support of `raw` in the unscaled variable.
    raw_support: (f64, f64),
    scale: f64,
    mass: f64,
    /// Support of `p` after rescaling; infinite tails truncated where the
    /// remaining mass drops below 1e-8.
    pub support: (f64, f64),
}

impl fmt::Debug for ModelCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelCurve")
            .field("name", &self.name)
            .field("scale", &self.scale)
            .field("mass", &self.mass)
            .field("support", &self.support)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rescale {
    /// Unit mean over the whole support (spacing laws).
    MeanSpacing,
    /// Mean of the positive half (eigenvalue densities).
    MeanPositive,
    None,
}

fn integrate_pieces<F: Fn(f64) -> f64>(f: F, pts: &[f64]) -> f64 {
    pts.windows(2)
        .map(|w| integrate(&f, w[0], w[1], QUAD_TOL).value)
        .sum()
}

impl ModelCurve {
    fn build(
        name: impl Into<String>,
        raw: Evaluator,
        raw_support: (f64, f64),
        breaks: Vec<f64>,
        rescale: Rescale,
    ) -> Result<ModelCurve, ModelError> {
        let mut pts = vec![raw_support.0];
        pts.extend(breaks.iter().copied().filter(|b| *b > raw_support.0 && *b < raw_support.1));
        pts.push(raw_support.1);
        let mass = integrate_pieces(|x| raw(x), &pts);
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(ModelError::Normalization("mass is not positive"));
        }
        let scale = match rescale {
            Rescale::MeanSpacing => integrate_pieces(|x| x * raw(x), &pts) / mass,
            Rescale::MeanPositive => {
                let mut pos: Vec<f64> = pts.iter().map(|p| p.max(0.0)).collect();
                pos.dedup();
                let m0 = integrate_pieces(|x| raw(x), &pos);
                integrate_pieces(|x| x * raw(x), &pos) / m0
            }
            Rescale::None => 1.0,
        };
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(ModelError::Normalization("scale is not positive"));
        }
        let mut curve = ModelCurve {
            name: name.into(),
            raw,
            breaks,
            raw_support,
            scale,
            mass,
            support: (raw_support.0 / scale, raw_support.1 / scale),
        };
        curve.support = (curve.truncate_low(), curve.truncate_high());
        Ok(curve)
    }

    fn truncate_high(&self) -> f64 {
        let hi = self.raw_support.1 / self.scale;
        if hi.is_finite() {
            return hi;
        }
        let lo = self.raw_support.0 / self.scale;
        let start = if lo.is_finite() { lo } else { 0.0 };
        let tail = |x: f64| integrate(|t| self.eval(t), x, f64::INFINITY, 1e-12).value;
        let mut x = start.max(0.0) + 1.0;
        while tail(x) > 1e-8 && x < 1e6 {
            x *= 1.25;
        }
        x
    }

    fn truncate_low(&self) -> f64 {
        let lo = self.raw_support.0 / self.scale;
        if lo.is_finite() {
            return lo;
        }
        let tail = |x: f64| integrate(|t| self.eval(t), f64::NEG_INFINITY, x, 1e-12).value;
        let mut x = -1.0;
        while tail(x) > 1e-8 && x > -1e6 {
            x *= 1.25;
        }
        x
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The rescaling length: mean spacing S-bar, or mean positive
    /// eigenvalue E-bar.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Mass of the unnormalized profile.
    pub fn raw_mass(&self) -> f64 {
        self.mass
    }

    /// Unnormalized profile in the original variable (`P(S)` or `g(E)`).
    pub fn raw(&self, x: f64) -> f64 {
        (self.raw)(x)
    }

    /// Normalized, rescaled density.
    pub fn eval(&self, x: f64) -> f64 {
        let y = self.scale * x;
        if y < self.raw_support.0 || y > self.raw_support.1 {
            return 0.0;
        }
        self.scale * (self.raw)(y) / self.mass
    }

    fn scaled_breaks(&self) -> Vec<f64> {
        let mut pts = vec![self.raw_support.0 / self.scale];
        pts.extend(self.breaks.iter().map(|b| b / self.scale));
        pts.push(self.raw_support.1 / self.scale);
        pts.retain(|p| p.is_finite() || p.is_infinite());
        pts.dedup();
        pts
    }

    /// Integral of `p` over its support.
    pub fn mass(&self) -> f64 {
        integrate_pieces(|x| self.eval(x), &self.scaled_breaks())
    }

    /// First moment of `p` over its support.
    pub fn mean(&self) -> f64 {
        integrate_pieces(|x| x * self.eval(x), &self.scaled_breaks())
    }

    /// Mean of the positive part, `int_0 x p / int_0 p`.
    pub fn mean_positive(&self) -> f64 {
        let mut pts: Vec<f64> = self.scaled_breaks().into_iter().map(|p| p.max(0.0)).collect();
        pts.dedup();
        integrate_pieces(|x| x * self.eval(x), &pts) / integrate_pieces(|x| self.eval(x), &pts)
    }

    /// `count` evenly spaced `(x, p(x))` pairs over `[lo, hi]`.
    pub fn tabulate(&self, lo: f64, hi: f64, count: usize) -> Vec<(f64, f64)> {
        let count = count.max(2);
        (0..count)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (count - 1) as f64;
                (x, self.eval(x))
            })
            .collect()
    }

    /// Wigner surmise as a curve (already unit mass and mean).
    pub fn wigner() -> ModelCurve {
        ModelCurve::build("wigner", Arc::new(p_wigner), (0.0, f64::INFINITY), vec![], Rescale::MeanSpacing)
            .expect("wigner normalizes")
    }
}

/// The two 2x2 real symmetric parametrizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoByTwo {
    /// `[[a, b], [b, c]]`
    R1,
    /// `[[a + b, c], [c, a - b]]`
    R2,
}

impl fmt::Display for TwoByTwo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TwoByTwo::R1 => "r1",
            TwoByTwo::R2 => "r2",
        })
    }
}

impl FromStr for TwoByTwo {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "r1" => Ok(TwoByTwo::R1),
            "r2" => Ok(TwoByTwo::R2),
            other => Err(format!("unknown 2x2 family `{other}`")),
        }
    }
}

/// `P(S)` of R1 with elements uniform on `[-1, 1]`; zero beyond `2 sqrt 2`.
pub fn r1_uniform_raw(s: f64) -> f64 {
    if s < 0.0 || s >= 2.0 * SQRT_2 {
        0.0
    } else if s <= 2.0 {
        s * (PI - s) / 4.0
    } else {
        let r = (s * s - 4.0).sqrt();
        s / 2.0 * ((2.0 / s).asin() - (r / s).asin()) + s / 4.0 * (r - 2.0)
    }
}

/// `P(S)` of R2 with elements uniform on `[-1, 1]`; zero beyond `sqrt 2`.
pub fn r2_uniform_raw(s: f64) -> f64 {
    if s < 0.0 || s > SQRT_2 {
        0.0
    } else if s <= 1.0 {
        PI * s / 2.0
    } else {
        2.0 * s * (FRAC_PI_4 - (1.0 / s).acos())
    }
}

/// `P(S)` of R1 for an element density `f`, using that the spacing is the
/// length of `(u, w) = (a - c, 2b)` with `u` and `w` independent:
/// `P(S) = S int_0^{2pi} f_u(S cos t) f_w(S sin t) dt`.
///
/// Both marginals are even, so the angular integral folds onto `[0, pi/2]`.
fn r1_from_marginals<U: Fn(f64) -> f64, W: Fn(f64) -> f64>(s: f64, f_u: U, f_w: W) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let g = |t: f64| {
        let (st, ct) = t.sin_cos();
        f_u(s * ct) * f_w(s * st)
    };
    4.0 * s * integrate(g, 0.0, FRAC_PI_2, INNER_TOL).value
}

/// `P(S)` of R1 with elements drawn from `e^{-|x|}` (unnormalized).
///
/// `a - c` has density proportional to `(1 + |u|) e^{-|u|}` and `2b` to
/// `e^{-|w|/2}`.
pub fn r1_exponential_raw(s: f64) -> f64 {
    r1_from_marginals(
        s,
        |u: f64| (1.0 + u.abs()) * (-u.abs()).exp(),
        |w: f64| (-w.abs() / 2.0).exp(),
    )
}

/// Density of `a - c` for `a, c ~ e^{-x^4}` (unnormalized):
/// `int e^{-x^4 - (x - u)^4} dx`, centred on the symmetric point `u/2`.
fn super_gaussian_difference(u: f64) -> f64 {
    let h = u.abs() / 2.0;
    // with x = h + y the exponent is -(h + y)^4 - (y - h)^4, even in y
    let f = |y: f64| (-(h + y).powi(4) - (y - h).powi(4)).exp();
    2.0 * integrate(f, 0.0, f64::INFINITY, INNER_TOL).value
}

/// `P(S)` of R1 with elements drawn from `e^{-x^4}` (unnormalized).
pub fn r1_super_gaussian_raw(s: f64) -> f64 {
    r1_from_marginals(s, super_gaussian_difference, |w: f64| (-w.powi(4) / 16.0).exp())
}

/// `P(S)` of R2 with elements drawn from `e^{-|x|}`.
pub fn r2_exponential_raw(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    s * integrate(|t: f64| (-s * (t.sin() + t.cos())).exp(), 0.0, FRAC_PI_2, INNER_TOL).value
}

/// `P(S)` of R2 with elements drawn from `e^{-x^4}`:
/// `(pi S / 2) e^{-3 S^4/4} I0(S^4/4)`, evaluated as
/// `(pi S / 2) e^{-S^4/2} I0e(S^4/4)` to avoid overflow.
pub fn r2_super_gaussian_raw(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let q = s.powi(4) / 4.0;
    FRAC_PI_2 * s * (-2.0 * q).exp() * bessel_i0e(q)
}

/// `P(S)` of R2 with elements drawn from `x e^{-x^2}`, `x >= 0`.
pub fn r2_maxwellian_raw(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    s.powi(3) * (-s * s).exp()
}

/// Normalized spacing law of a 2x2 ensemble.
pub fn p2x2(family: TwoByTwo, pdf: PdfFamily) -> Result<ModelCurve, ModelError> {
    use PdfFamily::*;
    use TwoByTwo::*;
    let name = format!("p2x2_{family}_{}", pdf.token());
    let inf = f64::INFINITY;
    let (raw, support, breaks): (Evaluator, (f64, f64), Vec<f64>) = match (family, pdf) {
        (R1, Uniform) => (Arc::new(r1_uniform_raw), (0.0, 2.0 * SQRT_2), vec![2.0]),
        (R2, Uniform) => (Arc::new(r2_uniform_raw), (0.0, SQRT_2), vec![1.0]),
        (R1, Exponential) => (Arc::new(r1_exponential_raw), (0.0, inf), vec![1.0, 5.0]),
        (R2, Exponential) => (Arc::new(r2_exponential_raw), (0.0, inf), vec![1.0, 5.0]),
        (R1, SuperGaussian) => (Arc::new(r1_super_gaussian_raw), (0.0, inf), vec![1.0, 3.0]),
        (R2, SuperGaussian) => (Arc::new(r2_super_gaussian_raw), (0.0, inf), vec![1.0, 3.0]),
        (R2, Maxwellian) => (Arc::new(r2_maxwellian_raw), (0.0, inf), vec![1.0, 3.0]),
        _ => return Err(ModelError::Unsupported(family, pdf)),
    };
    ModelCurve::build(name, raw, support, breaks, Rescale::MeanSpacing)
}

/// Behaviour of a spacing law at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    /// `p(s) ~ alpha s`.
    Linear(f64),
    /// `p(s)` vanishes faster than linearly, with the estimated power.
    SuperLinear(f64),
    /// `p(s)/s` diverges, with the estimated power (< 1).
    SubLinear(f64),
}

impl Slope {
    pub fn alpha(self) -> Option<f64> {
        match self {
            Slope::Linear(a) => Some(a),
            _ => None,
        }
    }
}

/// `lim p(s)/s` by Richardson extrapolation of `p(s)/s` at
/// `s = 1e-2, 5e-3, 2.5e-3`. The local power law `log2(p(h)/p(h/2))` decides
/// whether the limit is finite.
pub fn slope_at_zero(curve: &ModelCurve) -> Slope {
    let h = [1e-2, 5e-3, 2.5e-3];
    let p: Vec<f64> = h.iter().map(|&s| curve.eval(s)).collect();
    let order = (p[1] / p[2]).log2();
    if !order.is_finite() || order > 1.5 {
        return Slope::SuperLinear(order);
    }
    if order < 0.5 {
        return Slope::SubLinear(order);
    }
    let r: Vec<f64> = h.iter().zip(&p).map(|(s, v)| v / s).collect();
    let r1 = 2.0 * r[1] - r[0];
    let r2 = 2.0 * r[2] - r[1];
    Slope::Linear((4.0 * r2 - r1) / 3.0)
}

/// `g(E)` of R1 with Gaussian elements: `e^{-2E^2} int r cosh(2Er)
/// e^{-7r^2/8} I0(r^2/8) dr`, with the exponentials merged so nothing
/// overflows.
pub fn g_r1_raw(e: f64) -> f64 {
    let f = |r: f64| {
        let q = r * r / 8.0;
        let base = -2.0 * e * e - 6.0 * q;
        r * bessel_i0e(q) * ((base + 2.0 * e * r).exp() + (base - 2.0 * e * r).exp()) / 2.0
    };
    let peak = (4.0 * e.abs() / 3.0).max(1.0);
    integrate(f, 0.0, peak, INNER_TOL).value + integrate(f, peak, f64::INFINITY, INNER_TOL).value
}

/// `g(E)` of R2 with Gaussian elements (closed form with erf).
pub fn g_r2_raw(e: f64) -> f64 {
    let a = (-e * e).exp() * 2.0;
    let b = (2.0 * PI).sqrt() * e * erf(e / SQRT_2) * (-e * e / 2.0).exp();
    (a + b) / (4.0 * PI.sqrt())
}

/// Eigenvalue density `D(eps)` of a 2x2 Gaussian ensemble, rescaled by the
/// mean positive eigenvalue.
pub fn g2x2(family: TwoByTwo) -> ModelCurve {
    let raw: Evaluator = match family {
        TwoByTwo::R1 => Arc::new(g_r1_raw),
        TwoByTwo::R2 => Arc::new(g_r2_raw),
    };
    ModelCurve::build(
        format!("g2x2_{family}"),
        raw,
        (f64::NEG_INFINITY, f64::INFINITY),
        vec![0.0],
        Rescale::MeanPositive,
    )
    .expect("gaussian 2x2 densities normalize")
}

/// Eigenvalue density `g(E)` itself (no rescaling), normalized to unit mass.
pub fn g2x2_unscaled(family: TwoByTwo) -> ModelCurve {
    let raw: Evaluator = match family {
        TwoByTwo::R1 => Arc::new(g_r1_raw),
        TwoByTwo::R2 => Arc::new(g_r2_raw),
    };
    ModelCurve::build(
        format!("g_{family}"),
        raw,
        (f64::NEG_INFINITY, f64::INFINITY),
        vec![0.0],
        Rescale::None,
    )
    .expect("gaussian 2x2 densities normalize")
}
