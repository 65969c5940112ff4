//! Element distributions for random matrix entries.
//!
//! Every family is sampled from its density normalized to unit mass. The
//! `scale` parameter stretches the unit-width density: `f_scale(x) = f(x / scale) / scale`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use crate::models::special::gamma;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdfError {
    #[error("unknown pdf family `{0}`")]
    UnknownFamily(String),
    #[error("pdf scale must be positive and finite, got {0}")]
    BadScale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdfFamily {
    Gaussian,
    Uniform,
    Exponential,
    #[serde(rename = "supergaussian")]
    SuperGaussian,
    Maxwellian,
    Triangular,
    Parabolic,
    #[serde(rename = "semicircle")]
    SemiCircle,
    HalfGaussian,
    HalfUniform,
    HalfExponential,
    #[serde(rename = "half_supergaussian")]
    HalfSuperGaussian,
    HalfTriangular,
    P2,
    P3,
}

impl PdfFamily {
    pub const ALL: [PdfFamily; 15] = [
        PdfFamily::Gaussian,
        PdfFamily::Uniform,
        PdfFamily::Exponential,
        PdfFamily::SuperGaussian,
        PdfFamily::Maxwellian,
        PdfFamily::Triangular,
        PdfFamily::Parabolic,
        PdfFamily::SemiCircle,
        PdfFamily::HalfGaussian,
        PdfFamily::HalfUniform,
        PdfFamily::HalfExponential,
        PdfFamily::HalfSuperGaussian,
        PdfFamily::HalfTriangular,
        PdfFamily::P2,
        PdfFamily::P3,
    ];

    pub fn token(self) -> &'static str {
        match self {
            PdfFamily::Gaussian => "gaussian",
            PdfFamily::Uniform => "uniform",
            PdfFamily::Exponential => "exponential",
            PdfFamily::SuperGaussian => "supergaussian",
            PdfFamily::Maxwellian => "maxwellian",
            PdfFamily::Triangular => "triangular",
            PdfFamily::Parabolic => "parabolic",
            PdfFamily::SemiCircle => "semicircle",
            PdfFamily::HalfGaussian => "half_gaussian",
            PdfFamily::HalfUniform => "half_uniform",
            PdfFamily::HalfExponential => "half_exponential",
            PdfFamily::HalfSuperGaussian => "half_supergaussian",
            PdfFamily::HalfTriangular => "half_triangular",
            PdfFamily::P2 => "p2",
            PdfFamily::P3 => "p3",
        }
    }

    /// True when `f(x) = f(-x)`.
    pub fn is_symmetric(self) -> bool {
        use PdfFamily::*;
        matches!(
            self,
            Gaussian | Uniform | Exponential | SuperGaussian | Triangular | Parabolic | SemiCircle
        )
    }
}

impl fmt::Display for PdfFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for PdfFamily {
    type Err = PdfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        PdfFamily::ALL
            .iter()
            .copied()
            .find(|f| f.token() == lower)
            .ok_or_else(|| PdfError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdfSpec {
    pub family: PdfFamily,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

impl PdfSpec {
    pub fn new(family: PdfFamily) -> Self {
        PdfSpec { family, scale: 1.0 }
    }

    pub fn with_scale(family: PdfFamily, scale: f64) -> Self {
        PdfSpec { family, scale }
    }
}

/// Gamma(5/4); the mass of `e^{-x^4}` over `[0, inf)`.
fn gamma_5_4() -> f64 {
    gamma(1.25)
}

/// Half-width of the rejection box for the quartic-exponential families.
/// `e^{-x^4}` at the edge is below 1e-150.
const QUARTIC_CUTOFF: f64 = 6.0;

/// A normalized, immutable element distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pdf {
    family: PdfFamily,
    scale: f64,
    // normalization of the unit-width density
    norm: f64,
    // peak of the unit-width normalized density, for rejection sampling
    peak: f64,
}

pub fn make_pdf(spec: PdfSpec) -> Result<Pdf, PdfError> {
    if !(spec.scale > 0.0 && spec.scale.is_finite()) {
        return Err(PdfError::BadScale(spec.scale));
    }
    use PdfFamily::*;
    let (norm, peak) = match spec.family {
        Gaussian => (1.0 / (2.0 * PI).sqrt(), 1.0 / (2.0 * PI).sqrt()),
        Uniform => (0.5, 0.5),
        Exponential => (0.5, 0.5),
        SuperGaussian => {
            let c = 1.0 / (2.0 * gamma_5_4());
            (c, c)
        }
        Maxwellian => (2.0, 2.0 * (0.5f64).sqrt() * (-0.5f64).exp()),
        Triangular => (1.0, 1.0),
        Parabolic => (0.75, 0.75),
        SemiCircle => (2.0 / PI, 2.0 / PI),
        HalfGaussian => (2.0 / (2.0 * PI).sqrt(), 2.0 / (2.0 * PI).sqrt()),
        HalfUniform => (1.0, 1.0),
        HalfExponential => (1.0, 1.0),
        HalfSuperGaussian => {
            let c = 1.0 / gamma_5_4();
            (c, c)
        }
        HalfTriangular => (2.0, 2.0),
        // (1-x^2)(1+x) peaks at x = 1/3 with value 32/27
        P2 => (0.75, 0.75 * 32.0 / 27.0),
        // (1-x^2)(1+x)^2 peaks at x = 1/2 with value 27/16
        P3 => (0.625, 0.625 * 27.0 / 16.0),
    };
    Ok(Pdf {
        family: spec.family,
        scale: spec.scale,
        norm,
        peak,
    })
}

impl Pdf {
    pub fn family(&self) -> PdfFamily {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn spec(&self) -> PdfSpec {
        PdfSpec::with_scale(self.family, self.scale)
    }

    /// Support of the scaled density; infinite ends are `f64::INFINITY`.
    pub fn support(&self) -> (f64, f64) {
        use PdfFamily::*;
        let (lo, hi) = match self.family {
            Gaussian | Exponential | SuperGaussian => (f64::NEG_INFINITY, f64::INFINITY),
            Uniform | Triangular | Parabolic | SemiCircle | P2 | P3 => (-1.0, 1.0),
            Maxwellian | HalfGaussian | HalfExponential | HalfSuperGaussian => (0.0, f64::INFINITY),
            HalfUniform | HalfTriangular => (0.0, 1.0),
        };
        (lo * self.scale, hi * self.scale)
    }

    /// Unnormalized unit-width shape.
    fn shape(&self, x: f64) -> f64 {
        use PdfFamily::*;
        let inside = |lo: f64, hi: f64| x >= lo && x <= hi;
        match self.family {
            Gaussian => (-0.5 * x * x).exp(),
            Uniform => f64::from(inside(-1.0, 1.0)),
            Exponential => (-x.abs()).exp(),
            SuperGaussian => (-(x * x) * (x * x)).exp(),
            Maxwellian if x >= 0.0 => x * (-x * x).exp(),
            Triangular if inside(-1.0, 1.0) => 1.0 - x.abs(),
            Parabolic if inside(-1.0, 1.0) => 1.0 - x * x,
            SemiCircle if inside(-1.0, 1.0) => (1.0 - x * x).max(0.0).sqrt(),
            HalfGaussian if x >= 0.0 => (-0.5 * x * x).exp(),
            HalfUniform => f64::from(inside(0.0, 1.0)),
            HalfExponential if x >= 0.0 => (-x).exp(),
            HalfSuperGaussian if x >= 0.0 => (-(x * x) * (x * x)).exp(),
            HalfTriangular if inside(0.0, 1.0) => 1.0 - x,
            P2 if inside(-1.0, 1.0) => (1.0 - x * x) * (1.0 + x),
            P3 if inside(-1.0, 1.0) => (1.0 - x * x) * (1.0 + x) * (1.0 + x),
            _ => 0.0,
        }
    }

    /// Normalized density; zero outside the support.
    pub fn density(&self, x: f64) -> f64 {
        let u = x / self.scale;
        self.norm * self.shape(u) / self.scale
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * self.sample_unit(rng)
    }

    fn sample_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use PdfFamily::*;
        match self.family {
            Gaussian => box_muller(rng),
            HalfGaussian => box_muller(rng).abs(),
            Uniform => 2.0 * rng.gen::<f64>() - 1.0,
            HalfUniform => rng.gen::<f64>(),
            Exponential => {
                let e = -open_unit(rng).ln();
                if rng.gen::<bool>() {
                    e
                } else {
                    -e
                }
            }
            HalfExponential => -open_unit(rng).ln(),
            Maxwellian => (-open_unit(rng).ln()).sqrt(),
            Triangular => {
                let m = 1.0 - open_unit(rng).sqrt();
                if rng.gen::<bool>() {
                    m
                } else {
                    -m
                }
            }
            HalfTriangular => 1.0 - open_unit(rng).sqrt(),
            SuperGaussian => self.reject(rng, -QUARTIC_CUTOFF, QUARTIC_CUTOFF),
            HalfSuperGaussian => self.reject(rng, 0.0, QUARTIC_CUTOFF),
            Parabolic | SemiCircle | P2 | P3 => self.reject(rng, -1.0, 1.0),
        }
    }

    fn reject<R: Rng + ?Sized>(&self, rng: &mut R, lo: f64, hi: f64) -> f64 {
        loop {
            let x = lo + (hi - lo) * rng.gen::<f64>();
            let y = self.peak * rng.gen::<f64>();
            if y < self.norm * self.shape(x) {
                return x;
            }
        }
    }
}

/// Uniform draw on (0, 1].
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.gen::<f64>()
}

fn box_muller<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1 = open_unit(rng);
    let u2 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}
