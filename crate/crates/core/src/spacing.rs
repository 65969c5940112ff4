//! Spacing extraction protocols, eigenvalue-density samples and histograms.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::Spectrum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpacingError {
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("no usable spacings: {0}")]
    Empty(&'static str),
    #[error("no positive eigenvalues to fix the mean-positive scale")]
    NoPositive,
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("invalid histogram range [{0}, {1}]")]
    BadRange(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Nearest levels within each matrix.
    Nlm,
    /// Nearest levels after pooling the whole ensemble.
    Nle,
    /// Complex eigenvalues ordered by real part, `|E_{k+1} - E_k|`.
    ComplexOrdered,
    RealPart,
    ImagPart,
    Modulus,
    /// Eigenvalues with positive imaginary part only.
    UpperHalfPlane,
    FalsRealReal,
    FalsRealComplex,
    FalsComplexComplex,
}

impl Protocol {
    pub const ALL: [Protocol; 10] = [
        Protocol::Nlm,
        Protocol::Nle,
        Protocol::ComplexOrdered,
        Protocol::RealPart,
        Protocol::ImagPart,
        Protocol::Modulus,
        Protocol::UpperHalfPlane,
        Protocol::FalsRealReal,
        Protocol::FalsRealComplex,
        Protocol::FalsComplexComplex,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Protocol::Nlm => "nlm",
            Protocol::Nle => "nle",
            Protocol::ComplexOrdered => "complex",
            Protocol::RealPart => "re",
            Protocol::ImagPart => "im",
            Protocol::Modulus => "mod",
            Protocol::UpperHalfPlane => "upper",
            Protocol::FalsRealReal => "fals_rr",
            Protocol::FalsRealComplex => "fals_rc",
            Protocol::FalsComplexComplex => "fals_cc",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Protocol {
    type Err = SpacingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Protocol::ALL
            .iter()
            .copied()
            .find(|p| p.token() == lower)
            .ok_or_else(|| SpacingError::UnknownToken(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// Each matrix's spacings divided by their own mean.
    PerMatrixMean,
    /// Per-matrix scaling followed by division by the pooled mean.
    #[default]
    PerMatrixThenGlobal,
}

impl Scaling {
    pub fn token(self) -> &'static str {
        match self {
            Scaling::PerMatrixMean => "per_matrix",
            Scaling::PerMatrixThenGlobal => "global",
        }
    }
}

impl FromStr for Scaling {
    type Err = SpacingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "per_matrix" | "per_matrix_mean" => Ok(Scaling::PerMatrixMean),
            "global" | "per_matrix_then_global" => Ok(Scaling::PerMatrixThenGlobal),
            _ => Err(SpacingError::UnknownToken(s.to_string())),
        }
    }
}

/// What happens to coincident values: the duplicate a conjugate pair leaves
/// in the real-part and modulus statistics, and exactly degenerate levels
/// (e.g. the paired moduli of a circulant) in NLM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairPolicy {
    /// Collapse values equal within 1e-9 relative before differencing.
    Dedup,
    /// Keep both members, scale with the zero spacings included, then drop
    /// the zero spacings.
    #[default]
    KeepThenDropZeros,
    /// Keep everything, zero spacings included.
    Keep,
}

impl PairPolicy {
    pub fn token(self) -> &'static str {
        match self {
            PairPolicy::Dedup => "dedup",
            PairPolicy::KeepThenDropZeros => "drop_zeros",
            PairPolicy::Keep => "keep",
        }
    }
}

impl FromStr for PairPolicy {
    type Err = SpacingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dedup" => Ok(PairPolicy::Dedup),
            "drop_zeros" | "keep_then_drop_zeros" => Ok(PairPolicy::KeepThenDropZeros),
            "keep" | "keep_all" => Ok(PairPolicy::Keep),
            _ => Err(SpacingError::UnknownToken(s.to_string())),
        }
    }
}

/// Which real number each eigenvalue contributes to an NLM statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extraction {
    /// Real eigenvalues (those classified real by the spectrum's tolerance).
    Values,
    Re,
    /// Imaginary parts of the eigenvalues with `Im > 0`.
    Im,
    Modulus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpacingSample {
    pub values: Vec<f64>,
    pub protocol: Protocol,
    pub scaling: Scaling,
    /// Length of each matrix's block in `values` (a single block for pooled
    /// protocols).
    pub blocks: Vec<usize>,
    /// Matrices skipped because a precondition failed.
    pub skipped: usize,
}

impl SpacingSample {
    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn diffs(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Collapses runs of values equal within `rel` (relative to magnitude).
fn dedup_close(v: Vec<f64>, rel: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&last) if (x - last).abs() <= rel * x.abs().max(last.abs()) => {}
            _ => out.push(x),
        }
    }
    out
}

fn extract(s: &Spectrum, part: Extraction) -> Vec<f64> {
    match part {
        Extraction::Values => s.classified_real(),
        Extraction::Re => s.values.iter().map(|v| v.re).collect(),
        Extraction::Im => s.values.iter().filter(|v| v.im > 0.0).map(|v| v.im).collect(),
        Extraction::Modulus => s.values.iter().map(|v| v.norm()).collect(),
    }
}

/// Divides each block by its own mean and, for `PerMatrixThenGlobal`, the
/// pooled result by its mean.
fn assemble(
    blocks: Vec<Vec<f64>>,
    protocol: Protocol,
    scaling: Scaling,
    mut skipped: usize,
) -> Result<SpacingSample, SpacingError> {
    let mut values = Vec::new();
    let mut lens = Vec::new();
    for b in blocks {
        let m = mean(&b);
        if b.is_empty() || !(m > 0.0) || !m.is_finite() {
            skipped += 1;
            continue;
        }
        lens.push(b.len());
        values.extend(b.into_iter().map(|v| v / m));
    }
    if values.is_empty() {
        return Err(SpacingError::Empty("every matrix was skipped"));
    }
    if scaling == Scaling::PerMatrixThenGlobal {
        let g = mean(&values);
        for v in values.iter_mut() {
            *v /= g;
        }
    }
    Ok(SpacingSample {
        values,
        protocol,
        scaling,
        blocks: lens,
        skipped,
    })
}

/// Nearest levels of each matrix: sort the extracted reals, difference,
/// scale by the per-matrix mean. Matrices with fewer than two values are
/// skipped and counted.
pub fn spacings_nlm(
    spectra: &[Spectrum],
    part: Extraction,
    scaling: Scaling,
) -> Result<SpacingSample, SpacingError> {
    let protocol = match part {
        Extraction::Values => Protocol::Nlm,
        Extraction::Re => Protocol::RealPart,
        Extraction::Im => Protocol::ImagPart,
        Extraction::Modulus => Protocol::Modulus,
    };
    let mut skipped = 0;
    let mut blocks = Vec::with_capacity(spectra.len());
    for s in spectra {
        let v = sorted(extract(s, part));
        if v.len() < 2 {
            skipped += 1;
            continue;
        }
        blocks.push(diffs(&v));
    }
    assemble(blocks, protocol, scaling, skipped)
}

/// Nearest levels of the pooled ensemble, scaled by the global mean.
pub fn spacings_nle(spectra: &[Spectrum]) -> Result<SpacingSample, SpacingError> {
    let pooled = sorted(spectra.iter().flat_map(|s| s.classified_real()).collect());
    if pooled.len() < 2 {
        return Err(SpacingError::Empty("fewer than two pooled eigenvalues"));
    }
    let d = diffs(&pooled);
    let m = mean(&d);
    if !(m > 0.0) {
        return Err(SpacingError::Empty("all pooled eigenvalues coincide"));
    }
    let values: Vec<f64> = d.into_iter().map(|v| v / m).collect();
    Ok(SpacingSample {
        blocks: vec![values.len()],
        values,
        protocol: Protocol::Nle,
        scaling: Scaling::PerMatrixThenGlobal,
        skipped: 0,
    })
}

fn by_real_part(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

fn complex_gaps(v: &[Complex64]) -> Vec<f64> {
    v.windows(2).map(|w| (w[1] - w[0]).norm()).collect()
}

/// Statistics of non-symmetric spectra.
pub fn spacings_complex(
    spectra: &[Spectrum],
    mode: Protocol,
    scaling: Scaling,
    policy: PairPolicy,
) -> Result<SpacingSample, SpacingError> {
    if !spectra.iter().any(|s| s.values.iter().any(|v| v.im != 0.0)) {
        return Err(SpacingError::Empty("no complex eigenvalues present"));
    }
    match mode {
        Protocol::ComplexOrdered | Protocol::UpperHalfPlane => {
            let mut skipped = 0;
            let mut blocks = Vec::new();
            for s in spectra {
                let vals: Vec<Complex64> = if mode == Protocol::UpperHalfPlane {
                    s.values.iter().copied().filter(|v| v.im > 0.0).collect()
                } else {
                    s.values.clone()
                };
                let gaps: Vec<f64> = complex_gaps(&by_real_part(vals))
                    .into_iter()
                    .filter(|&g| mode == Protocol::UpperHalfPlane || g != 0.0)
                    .collect();
                if gaps.is_empty() {
                    skipped += 1;
                    continue;
                }
                blocks.push(gaps);
            }
            assemble(blocks, mode, scaling, skipped)
        }
        Protocol::ImagPart => spacings_nlm(spectra, Extraction::Im, scaling),
        Protocol::RealPart | Protocol::Modulus => {
            let part = if mode == Protocol::RealPart {
                Extraction::Re
            } else {
                Extraction::Modulus
            };
            match policy {
                PairPolicy::Dedup => {
                    let mut skipped = 0;
                    let mut blocks = Vec::new();
                    for s in spectra {
                        let v = dedup_close(sorted(extract(s, part)), 1e-9);
                        if v.len() < 2 {
                            skipped += 1;
                            continue;
                        }
                        blocks.push(diffs(&v));
                    }
                    assemble(blocks, mode, scaling, skipped)
                }
                PairPolicy::KeepThenDropZeros | PairPolicy::Keep => {
                    let mut sample = spacings_nlm(spectra, part, scaling)?;
                    sample.protocol = mode;
                    if policy == PairPolicy::KeepThenDropZeros {
                        drop_zeros(&mut sample);
                    }
                    Ok(sample)
                }
            }
        }
        other => Err(SpacingError::UnknownToken(other.token().to_string())),
    }
}

/// Removes spacings that vanish after scaling (1e-9 of the unit mean).
fn drop_zeros(sample: &mut SpacingSample) {
    let mut out = Vec::with_capacity(sample.values.len());
    let mut lens = Vec::with_capacity(sample.blocks.len());
    let mut at = 0;
    for &len in &sample.blocks {
        let block = &sample.values[at..at + len];
        let kept: Vec<f64> = block.iter().copied().filter(|v| *v > 1e-9).collect();
        lens.push(kept.len());
        out.extend(kept);
        at += len;
    }
    sample.values = out;
    sample.blocks = lens;
}

/// First adjacent level spacing of each matrix, pooled and scaled by the
/// pooled mean.
///
/// With eigenvalues ordered by real part:
/// * real-real: the first two real eigenvalues;
/// * real-complex: the first adjacent real / non-real pair;
/// * complex-complex: the first two eigenvalues of the upper half plane.
pub fn fals(spectra: &[Spectrum], kind: Protocol) -> Result<SpacingSample, SpacingError> {
    let mut skipped = 0;
    let mut raw = Vec::with_capacity(spectra.len());
    for s in spectra {
        let is_real = |v: &Complex64| v.im.abs() <= crate::eigen::REAL_TOL * s.norm;
        let ordered = by_real_part(s.values.clone());
        let gap = match kind {
            Protocol::FalsRealReal => {
                let reals: Vec<f64> = ordered.iter().filter(|v| is_real(v)).map(|v| v.re).collect();
                (reals.len() >= 2).then(|| (reals[1] - reals[0]).abs())
            }
            Protocol::FalsRealComplex => {
                // drop lower-half members so each conjugate pair appears once
                let view: Vec<Complex64> =
                    ordered.iter().copied().filter(|v| is_real(v) || v.im > 0.0).collect();
                view.windows(2)
                    .find(|w| is_real(&w[0]) != is_real(&w[1]))
                    .map(|w| (w[1] - w[0]).norm())
            }
            Protocol::FalsComplexComplex => {
                let upper: Vec<Complex64> =
                    ordered.iter().copied().filter(|v| !is_real(v) && v.im > 0.0).collect();
                (upper.len() >= 2).then(|| (upper[1] - upper[0]).norm())
            }
            other => return Err(SpacingError::UnknownToken(other.token().to_string())),
        };
        match gap {
            Some(g) => raw.push(g),
            None => skipped += 1,
        }
    }
    let m = mean(&raw);
    if raw.is_empty() || !(m > 0.0) {
        return Err(SpacingError::Empty("requested pair type absent in every matrix"));
    }
    let values: Vec<f64> = raw.into_iter().map(|v| v / m).collect();
    Ok(SpacingSample {
        blocks: vec![values.len()],
        values,
        protocol: kind,
        scaling: Scaling::PerMatrixThenGlobal,
        skipped,
    })
}

/// Dispatches a protocol token to its extractor.
pub fn extract_spacings(
    spectra: &[Spectrum],
    protocol: Protocol,
    scaling: Scaling,
    policy: PairPolicy,
) -> Result<SpacingSample, SpacingError> {
    match protocol {
        Protocol::Nlm => match policy {
            PairPolicy::Dedup => {
                let mut skipped = 0;
                let mut blocks = Vec::new();
                for s in spectra {
                    let v = dedup_close(sorted(extract(s, Extraction::Values)), 1e-9);
                    if v.len() < 2 {
                        skipped += 1;
                        continue;
                    }
                    blocks.push(diffs(&v));
                }
                assemble(blocks, protocol, scaling, skipped)
            }
            PairPolicy::KeepThenDropZeros => {
                let mut sample = spacings_nlm(spectra, Extraction::Values, scaling)?;
                drop_zeros(&mut sample);
                Ok(sample)
            }
            PairPolicy::Keep => spacings_nlm(spectra, Extraction::Values, scaling),
        },
        Protocol::Nle => spacings_nle(spectra),
        Protocol::FalsRealReal | Protocol::FalsRealComplex | Protocol::FalsComplexComplex => {
            fals(spectra, protocol)
        }
        other => spacings_complex(spectra, other, scaling, policy),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityScaling {
    /// Divide by the mean of the positive eigenvalues.
    #[default]
    MeanPositive,
    /// Divide by the largest |E| in the ensemble.
    MaxAbs,
}

impl DensityScaling {
    pub fn token(self) -> &'static str {
        match self {
            DensityScaling::MeanPositive => "mean_positive",
            DensityScaling::MaxAbs => "max_abs",
        }
    }
}

impl FromStr for DensityScaling {
    type Err = SpacingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean_positive" => Ok(DensityScaling::MeanPositive),
            "max_abs" => Ok(DensityScaling::MaxAbs),
            _ => Err(SpacingError::UnknownToken(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySample {
    pub values: Vec<f64>,
    pub scaling: DensityScaling,
    /// The divisor used (mean positive eigenvalue or max |E|).
    pub scale: f64,
}

/// Scaled real eigenvalues of the whole ensemble (every eigenvalue of a
/// real-spectrum family; the real ones otherwise).
pub fn density_sample(
    spectra: &[Spectrum],
    scaling: DensityScaling,
) -> Result<DensitySample, SpacingError> {
    let all: Vec<f64> = spectra.iter().flat_map(|s| s.classified_real()).collect();
    if all.is_empty() {
        return Err(SpacingError::Empty("no eigenvalues"));
    }
    let scale = match scaling {
        DensityScaling::MeanPositive => {
            let pos: Vec<f64> = all.iter().copied().filter(|v| *v > 0.0).collect();
            if pos.is_empty() {
                return Err(SpacingError::NoPositive);
            }
            mean(&pos)
        }
        DensityScaling::MaxAbs => all.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    };
    if !(scale > 0.0) {
        return Err(SpacingError::Empty("all eigenvalues are zero"));
    }
    Ok(DensitySample {
        values: all.into_iter().map(|v| v / scale).collect(),
        scaling,
        scale,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub density: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples that fell into a bin.
    pub n_samples: u64,
    /// Samples outside an explicitly requested range.
    pub n_outside: u64,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.bin_edges[i + 1] - self.bin_edges[i]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Density relative to every sample, including those outside the range.
    /// Matches `density` when nothing fell outside.
    pub fn absolute_density(&self) -> Vec<f64> {
        let total = (self.n_samples + self.n_outside) as f64;
        (0..self.bins())
            .map(|i| self.counts[i] as f64 / (total * self.width(i)))
            .collect()
    }

    /// Merges counts of another histogram with identical edges.
    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.bin_edges, other.bin_edges, "bin edges differ");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n_samples += other.n_samples;
        self.n_outside += other.n_outside;
        self.refresh_density();
    }

    fn refresh_density(&mut self) {
        let n = self.n_samples.max(1) as f64;
        self.density = (0..self.bins())
            .map(|i| self.counts[i] as f64 / (n * self.width(i)))
            .collect();
    }
}

/// Equal-width histogram. Without a range, spacing-like (nonnegative)
/// samples use `[0, max]` and signed samples `[-r, r]` with `r = max |x|`.
pub fn histogram(
    values: &[f64],
    bins: usize,
    range: Option<(f64, f64)>,
) -> Result<Histogram, SpacingError> {
    if bins == 0 {
        return Err(SpacingError::NoBins);
    }
    if values.is_empty() {
        return Err(SpacingError::Empty("empty sample"));
    }
    let (lo, hi) = match range {
        Some(r) => r,
        None => {
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let r = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let r = if r > 0.0 { r } else { 1.0 };
            if min >= 0.0 {
                (0.0, r)
            } else {
                (-r, r)
            }
        }
    };
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(SpacingError::BadRange(lo, hi));
    }
    let width = (hi - lo) / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; bins];
    let mut outside = 0u64;
    for &v in values {
        if !(v >= lo && v <= hi) {
            outside += 1;
            continue;
        }
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let n_samples = counts.iter().sum();
    if n_samples == 0 {
        return Err(SpacingError::Empty("no samples inside the histogram range"));
    }
    let mut h = Histogram {
        bin_edges,
        density: Vec::new(),
        counts,
        n_samples,
        n_outside: outside,
    };
    h.refresh_density();
    Ok(h)
}
