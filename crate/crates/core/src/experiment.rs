//! Experiment runner: ensembles, statistics, fits and file outputs.
//!
//! Every run writes into an existing directory:
//! * `histogram.csv` — `bin_left,bin_right,density,count`
//! * `fit.toml` — one `[[fit]]` table per fitted model, plus the reference
//!   law's goodness of fit when one was requested
//! * `curve_<model>.csv` / `reference.csv` — `s,p` tabulations
//! * `manifest.toml` — the full configuration, counters and wall time
//!
//! Everything except the wall time is a pure function of the configuration.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{spectrum_of, EigenError, SolverPath, Spectrum};
use crate::fitting::{fit_weighted, goodness, FitModel, FitResult, FitSummary, Weighting};
use crate::matrices::{draw, EnsembleSpec, MatrixError, MatrixFamily};
use crate::models::{self, p2x2, slope_at_zero, ModelCurve, ModelError, Slope, TwoByTwo};
use crate::sampler::{PdfFamily, PdfSpec};
use crate::spacing::{
    density_sample, extract_spacings, histogram, DensityScaling, Histogram, PairPolicy, Protocol,
    Scaling, SpacingError,
};

/// Non-symmetric families solved by the dense general solver are capped at
/// this order unless the run explicitly allows more.
pub const NONSYMMETRIC_CAP: usize = 200;

/// Points in each tabulated curve file.
pub const CURVE_POINTS: usize = 201;

#[derive(Debug, thiserror::Error)]
pub enum EnsembleError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("replica {index}: {source}")]
    Eigen { index: usize, source: EigenError },
}

/// Spectra of every replica, in replica order. Each replica draws from its
/// own substream, so the result does not depend on scheduling.
pub fn ensemble_spectra(spec: &EnsembleSpec, path: SolverPath) -> Result<Vec<Spectrum>, EnsembleError> {
    spec.validate()?;
    (0..spec.count)
        .into_par_iter()
        .map(|i| replica_spectrum(spec, path, i))
        .collect()
}

/// Same as [`ensemble_spectra`] on the calling thread only.
pub fn ensemble_spectra_serial(spec: &EnsembleSpec, path: SolverPath) -> Result<Vec<Spectrum>, EnsembleError> {
    spec.validate()?;
    (0..spec.count).map(|i| replica_spectrum(spec, path, i)).collect()
}

fn replica_spectrum(spec: &EnsembleSpec, path: SolverPath, i: usize) -> Result<Spectrum, EnsembleError> {
    let d = draw(spec, i)?;
    spectrum_of(&d, path).map_err(|source| EnsembleError::Eigen { index: i, source })
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io { .. } => 2,
            RunError::Numerical(_) => 3,
        }
    }
}

fn config_err(e: impl fmt::Display) -> RunError {
    RunError::Config(e.to_string())
}

/// What gets histogrammed: a spacing protocol or the eigenvalue density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Spacing(Protocol),
    Density(DensityScaling),
}

impl Statistic {
    pub fn token(self) -> &'static str {
        match self {
            Statistic::Spacing(p) => p.token(),
            Statistic::Density(DensityScaling::MaxAbs) => "density",
            Statistic::Density(DensityScaling::MeanPositive) => "density_mean",
        }
    }

    /// Protocols that only make sense when some eigenvalues are complex.
    fn needs_complex(self) -> bool {
        matches!(
            self,
            Statistic::Spacing(
                Protocol::ComplexOrdered
                    | Protocol::RealPart
                    | Protocol::ImagPart
                    | Protocol::Modulus
                    | Protocol::UpperHalfPlane
                    | Protocol::FalsRealComplex
                    | Protocol::FalsComplexComplex
            )
        )
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Statistic {
    type Err = SpacingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "density" | "density_max" => Ok(Statistic::Density(DensityScaling::MaxAbs)),
            "density_mean" => Ok(Statistic::Density(DensityScaling::MeanPositive)),
            other => other.parse().map(Statistic::Spacing),
        }
    }
}

/// Parameter-free laws a histogram can be compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// `(pi/2) s exp(-pi s^2 / 4)`
    Wigner,
    /// `exp(-s)`
    Poisson,
    /// `(2/pi) sqrt(1 - e^2)` on `[-1, 1]`
    Semicircle,
    /// `(2/pi) exp(-s^2 / pi)`
    HalfGaussian,
    /// `(pi/4) |e| exp(-pi e^2 / 4)`
    BoseMitra,
}

impl Reference {
    pub const ALL: [Reference; 5] = [
        Reference::Wigner,
        Reference::Poisson,
        Reference::Semicircle,
        Reference::HalfGaussian,
        Reference::BoseMitra,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Reference::Wigner => "wigner",
            Reference::Poisson => "poisson",
            Reference::Semicircle => "semicircle",
            Reference::HalfGaussian => "half_gaussian",
            Reference::BoseMitra => "bose_mitra",
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            Reference::Wigner => models::p_wigner(x),
            Reference::Poisson => models::p_poisson(1.0, x).unwrap_or(0.0),
            Reference::Semicircle => models::semicircle(x).unwrap_or(0.0),
            Reference::HalfGaussian if x >= 0.0 => 2.0 / PI * (-x * x / PI).exp(),
            Reference::HalfGaussian => 0.0,
            Reference::BoseMitra => models::bose_mitra(x),
        }
    }
}

impl FromStr for Reference {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        Reference::ALL
            .into_iter()
            .find(|r| r.token() == t)
            .ok_or_else(|| format!("unknown reference law `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleSpec,
    pub statistic: Statistic,
    pub bins: usize,
    /// Histogram range; `None` picks `[0, max]` or `[-max|x|, max|x|]`.
    pub range: Option<(f64, f64)>,
    pub scaling: Scaling,
    pub pair_policy: PairPolicy,
    pub fit: Vec<FitModel>,
    pub weighting: Weighting,
    pub reference: Option<Reference>,
    pub solver: SolverPath,
    /// Lift the order cap on dense non-symmetric solves.
    pub allow_large: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ensemble: EnsembleSpec {
                family: MatrixFamily::Rsym,
                n: 100,
                count: 1000,
                pdf: PdfSpec::new(PdfFamily::Gaussian),
                seed: 42,
            },
            statistic: Statistic::Spacing(Protocol::Nlm),
            bins: 50,
            range: None,
            scaling: Scaling::default(),
            pair_policy: PairPolicy::default(),
            fit: Vec::new(),
            weighting: Weighting::default(),
            reference: None,
            solver: SolverPath::default(),
            allow_large: false,
        }
    }
}

/// Whether this family/solver combination goes through the dense general
/// (Hessenberg QR) solver.
fn uses_general_solver(family: MatrixFamily, solver: SolverPath) -> bool {
    match (solver, family) {
        (SolverPath::Structured, MatrixFamily::C | MatrixFamily::Tprime) => false,
        (_, f) => !f.is_symmetric(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let e = &self.ensemble;
        e.validate().map_err(config_err)?;
        if self.bins == 0 {
            return Err(config_err("bins must be at least 1"));
        }
        if let Some((lo, hi)) = self.range {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(config_err(format!("bad histogram range [{lo}, {hi}]")));
            }
        }
        if !self.allow_large && e.n > NONSYMMETRIC_CAP && uses_general_solver(e.family, self.solver) {
            return Err(config_err(format!(
                "{} at n={} needs the O(n^3) general solver; orders above {NONSYMMETRIC_CAP} need --allow-large",
                e.family, e.n
            )));
        }
        if self.statistic.needs_complex() && e.family.has_real_spectrum() {
            return Err(config_err(format!(
                "statistic {} needs complex eigenvalues but {} has a real spectrum",
                self.statistic, e.family
            )));
        }
        Ok(())
    }

    fn to_doc(&self) -> ConfigDoc {
        let e = &self.ensemble;
        ConfigDoc {
            ensemble: e.family.token().to_string(),
            n: e.n,
            replicas: e.count,
            pdf: e.pdf.family.token().to_string(),
            pdf_scale: e.pdf.scale,
            seed: e.seed,
            stat: self.statistic.token().to_string(),
            bins: self.bins,
            range: self.range.map(|(a, b)| [a, b]),
            scaling: self.scaling.token().to_string(),
            pair_policy: self.pair_policy.token().to_string(),
            fit: self.fit.iter().map(|m| m.token().to_string()).collect(),
            weighting: self.weighting.token().to_string(),
            reference: self.reference.map(|r| r.token().to_string()),
            solver: self.solver.token().to_string(),
            allow_large: self.allow_large,
        }
    }

    fn from_doc(d: &ConfigDoc) -> Result<Self, RunError> {
        Ok(ExperimentConfig {
            ensemble: EnsembleSpec {
                family: d.ensemble.parse().map_err(config_err)?,
                n: d.n,
                count: d.replicas,
                pdf: PdfSpec::with_scale(d.pdf.parse().map_err(config_err)?, d.pdf_scale),
                seed: d.seed,
            },
            statistic: d.stat.parse().map_err(config_err)?,
            bins: d.bins,
            range: d.range.map(|[a, b]| (a, b)),
            scaling: d.scaling.parse().map_err(config_err)?,
            pair_policy: d.pair_policy.parse().map_err(config_err)?,
            fit: d
                .fit
                .iter()
                .map(|m| m.parse())
                .collect::<Result<_, _>>()
                .map_err(config_err)?,
            weighting: d.weighting.parse().map_err(config_err)?,
            reference: d.reference.as_deref().map(str::parse).transpose().map_err(config_err)?,
            solver: d.solver.parse().map_err(config_err)?,
            allow_large: d.allow_large,
        })
    }

    /// Reads the configuration back out of a run manifest.
    pub fn from_manifest(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let doc: ManifestDoc = toml::from_str(&text).map_err(config_err)?;
        let cfg = ExperimentConfig::from_doc(&doc.config)?;
        if doc.seed != cfg.ensemble.seed {
            return Err(config_err("manifest seed disagrees with its configuration"));
        }
        Ok(cfg)
    }
}

/// Token-level mirror of [`ExperimentConfig`] as stored in manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ConfigDoc {
    ensemble: String,
    n: usize,
    replicas: usize,
    pdf: String,
    pdf_scale: f64,
    seed: u64,
    stat: String,
    bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range: Option<[f64; 2]>,
    scaling: String,
    pair_policy: String,
    fit: Vec<String>,
    weighting: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference: Option<String>,
    solver: String,
    allow_large: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestDoc {
    tool: String,
    status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    seed: u64,
    samples: usize,
    skipped_matrices: usize,
    outside_range: u64,
    outputs: Vec<String>,
    wall_time_s: f64,
    config: ConfigDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFit {
    pub sse: f64,
    pub sup_norm: f64,
    pub chi2: f64,
}

#[derive(Debug, Serialize)]
struct FitDoc {
    fit: Vec<FitSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<ReferenceDoc>,
}

#[derive(Debug, Serialize)]
struct ReferenceDoc {
    name: String,
    #[serde(flatten)]
    goodness: ReferenceFit,
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub histogram: Histogram,
    pub fits: Vec<FitResult>,
    pub reference: Option<ReferenceFit>,
    pub samples: usize,
    pub skipped_matrices: usize,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn require_dir(out: &Path) -> Result<(), RunError> {
    if out.is_dir() {
        Ok(())
    } else {
        Err(config_err(format!("output directory {} does not exist", out.display())))
    }
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut s = String::from("bin_left,bin_right,density,count\n");
    for i in 0..h.bins() {
        s.push_str(&format!("{},{},{},{}\n", h.bin_edges[i], h.bin_edges[i + 1], h.density[i], h.counts[i]));
    }
    s
}

pub fn curve_csv(points: &[(f64, f64)]) -> String {
    let mut s = String::from("s,p\n");
    for (x, y) in points {
        s.push_str(&format!("{x},{y}\n"));
    }
    s
}

fn tabulate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, count: usize) -> Vec<(f64, f64)> {
    let count = count.max(2);
    (0..count)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (count - 1) as f64;
            (x, f(x))
        })
        .collect()
}

/// The values a run histograms, with the number of skipped matrices.
fn sample_values(cfg: &ExperimentConfig, spectra: &[Spectrum]) -> Result<(Vec<f64>, usize), RunError> {
    let numeric = |e: SpacingError| RunError::Numerical(e.to_string());
    match cfg.statistic {
        Statistic::Spacing(p) => {
            let s = extract_spacings(spectra, p, cfg.scaling, cfg.pair_policy).map_err(numeric)?;
            Ok((s.values, s.skipped))
        }
        Statistic::Density(scaling) => {
            let d = density_sample(spectra, scaling).map_err(numeric)?;
            Ok((d.values, 0))
        }
    }
}

/// Runs one experiment into the existing directory `out`.
///
/// Configuration errors are reported before anything is written. A
/// numerical failure leaves whatever was already written plus a manifest
/// recording the failure.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport, RunError> {
    require_dir(out)?;
    cfg.validate()?;
    let start = Instant::now();
    let mut outputs: Vec<PathBuf> = Vec::new();
    let mut samples = 0;
    let mut skipped = 0;
    let mut outside = 0;

    let result = (|| -> Result<RunReport, RunError> {
        let spectra = ensemble_spectra(&cfg.ensemble, cfg.solver).map_err(|e| RunError::Numerical(e.to_string()))?;
        let (values, sk) = sample_values(cfg, &spectra)?;
        samples = values.len();
        skipped = sk;
        let hist = histogram(&values, cfg.bins, cfg.range).map_err(|e| RunError::Numerical(e.to_string()))?;
        outside = hist.n_outside;
        let path = out.join("histogram.csv");
        write(&path, &histogram_csv(&hist))?;
        outputs.push(path);

        let (lo, hi) = (hist.bin_edges[0], hist.bin_edges[hist.bins()]);
        let mut fits = Vec::with_capacity(cfg.fit.len());
        for &model in &cfg.fit {
            let f = fit_weighted(&hist, model, cfg.weighting).map_err(|e| RunError::Numerical(format!("{model}: {e}")))?;
            let path = out.join(format!("curve_{}.csv", model.token()));
            write(&path, &curve_csv(&tabulate(|x| f.eval(x), lo, hi, CURVE_POINTS)))?;
            outputs.push(path);
            fits.push(f);
        }
        let reference = cfg.reference.map(|r| {
            let g = goodness(&hist, |x| r.eval(x));
            ReferenceFit {
                sse: g.sse,
                sup_norm: g.sup_norm,
                chi2: g.chi2,
            }
        });
        if let Some(r) = cfg.reference {
            let path = out.join("reference.csv");
            write(&path, &curve_csv(&tabulate(|x| r.eval(x), lo, hi, CURVE_POINTS)))?;
            outputs.push(path);
        }
        let doc = FitDoc {
            fit: fits.iter().map(FitResult::summary).collect(),
            reference: cfg.reference.zip(reference).map(|(r, g)| ReferenceDoc {
                name: r.token().to_string(),
                goodness: g,
            }),
        };
        let path = out.join("fit.toml");
        write(&path, &toml::to_string(&doc).map_err(|e| RunError::Numerical(e.to_string()))?)?;
        outputs.push(path);
        Ok(RunReport {
            histogram: hist,
            fits,
            reference,
            samples,
            skipped_matrices: skipped,
            outputs: Vec::new(),
            wall_time_s: 0.0,
        })
    })();

    let wall = start.elapsed().as_secs_f64();
    let mut names: Vec<String> = outputs
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    names.push("manifest.toml".to_string());
    let manifest = ManifestDoc {
        tool: concat!("rmspec ", env!("CARGO_PKG_VERSION")).to_string(),
        status: if result.is_ok() { "ok" } else { "failed" }.to_string(),
        error: result.as_ref().err().map(|e| e.to_string()),
        seed: cfg.ensemble.seed,
        samples,
        skipped_matrices: skipped,
        outside_range: outside,
        outputs: names,
        wall_time_s: wall,
        config: cfg.to_doc(),
    };
    let path = out.join("manifest.toml");
    write(&path, &toml::to_string(&manifest).expect("manifests serialize"))?;
    outputs.push(path);

    result.map(|mut r| {
        r.outputs = outputs;
        r.wall_time_s = wall;
        r
    })
}

/// What a 2x2 analytic run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quantity {
    /// Spacing distribution `p(s)`, unit mean.
    #[default]
    Spacing,
    /// Eigenvalue density in units of the mean positive eigenvalue.
    Density,
}

impl FromStr for Quantity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spacing" | "p" => Ok(Quantity::Spacing),
            "density" | "d" => Ok(Quantity::Density),
            other => Err(format!("unknown quantity `{other}`")),
        }
    }
}

impl Quantity {
    pub fn token(self) -> &'static str {
        match self {
            Quantity::Spacing => "spacing",
            Quantity::Density => "density",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticConfig {
    pub matrix: TwoByTwo,
    pub pdf: PdfFamily,
    pub quantity: Quantity,
    /// Points in the tabulated curve.
    pub grid: usize,
    /// Monte Carlo matrices for the overlay histogram (0 = none).
    pub mc: usize,
    pub bins: usize,
    pub seed: u64,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        AnalyticConfig {
            matrix: TwoByTwo::R1,
            pdf: PdfFamily::Uniform,
            quantity: Quantity::Spacing,
            grid: 401,
            mc: 0,
            bins: 50,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalyticReport {
    pub curve: ModelCurve,
    /// Behaviour at `s = 0` (spacing runs only).
    pub slope: Option<Slope>,
    /// Mean spacing, or mean positive eigenvalue, in the elements' units.
    pub raw_scale: f64,
    pub mc: Option<McOverlay>,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct McOverlay {
    pub histogram: Histogram,
    /// Largest |histogram - curve| over the bin centres, with the histogram
    /// normalized against every sample (including any out of range).
    pub sup_norm: f64,
    /// Mean positive eigenvalue of the sample, unscaled (density runs).
    pub mean_positive: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AnalyticDoc {
    matrix: String,
    pdf: String,
    quantity: String,
    curve: String,
    raw_scale: f64,
    support: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    slope: Option<SlopeDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc: Option<McDoc>,
}

#[derive(Debug, Serialize)]
struct SlopeDoc {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<f64>,
}

#[derive(Debug, Serialize)]
struct McDoc {
    matrices: usize,
    seed: u64,
    bins: usize,
    sup_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_positive: Option<f64>,
}

/// Element scale for Gaussian densities: the closed forms assume
/// `f(x) ~ exp(-x^2)`, i.e. variance 1/2.
const DENSITY_GAUSSIAN_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn two_by_two_family(m: TwoByTwo) -> MatrixFamily {
    match m {
        TwoByTwo::R1 => MatrixFamily::R1,
        TwoByTwo::R2 => MatrixFamily::R2,
    }
}

/// Unit-mean spacings of `count` 2x2 matrices.
pub fn mc_spacings_2x2(matrix: TwoByTwo, pdf: PdfSpec, count: usize, seed: u64) -> Result<Vec<f64>, RunError> {
    let spec = EnsembleSpec {
        family: two_by_two_family(matrix),
        n: 2,
        count,
        pdf,
        seed,
    };
    let spectra = ensemble_spectra(&spec, SolverPath::Structured).map_err(|e| RunError::Numerical(e.to_string()))?;
    let raw: Vec<f64> = spectra.iter().map(|s| s.values[1].re - s.values[0].re).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    if !(mean > 0.0) {
        return Err(RunError::Numerical("all 2x2 spacings vanish".into()));
    }
    Ok(raw.into_iter().map(|v| v / mean).collect())
}

/// Pooled eigenvalues of `count` 2x2 matrices, unscaled.
pub fn mc_eigenvalues_2x2(matrix: TwoByTwo, pdf: PdfSpec, count: usize, seed: u64) -> Result<Vec<f64>, RunError> {
    let spec = EnsembleSpec {
        family: two_by_two_family(matrix),
        n: 2,
        count,
        pdf,
        seed,
    };
    let spectra = ensemble_spectra(&spec, SolverPath::Structured).map_err(|e| RunError::Numerical(e.to_string()))?;
    Ok(spectra.iter().flat_map(|s| s.real_values()).collect())
}

/// Sup-norm between a histogram (normalized against all samples) and a
/// curve, over the bin centres.
pub fn sup_distance<F: Fn(f64) -> f64>(h: &Histogram, f: F) -> f64 {
    h.centers()
        .iter()
        .zip(h.absolute_density())
        .map(|(&c, d)| (d - f(c)).abs())
        .fold(0.0, f64::max)
}

fn curve_for(cfg: &AnalyticConfig) -> Result<ModelCurve, RunError> {
    match cfg.quantity {
        Quantity::Spacing => p2x2(cfg.matrix, cfg.pdf).map_err(|e| match e {
            ModelError::Unsupported(TwoByTwo::R1, PdfFamily::Gaussian) => config_err(
                "p(s) of r1 with gaussian elements is the Wigner surmise; use the `wigner` reference law",
            ),
            other => config_err(other),
        }),
        Quantity::Density if cfg.pdf == PdfFamily::Gaussian => Ok(models::g2x2(cfg.matrix)),
        Quantity::Density => Err(config_err(format!(
            "2x2 eigenvalue densities are derived for gaussian elements only, not {}",
            cfg.pdf
        ))),
    }
}

/// Evaluates a 2x2 law, writes `curve.csv`, `analytic.toml` and, when
/// requested, `mc_histogram.csv`.
pub fn analytic2x2(cfg: &AnalyticConfig, out: &Path) -> Result<AnalyticReport, RunError> {
    require_dir(out)?;
    if cfg.grid < 2 {
        return Err(config_err("grid needs at least 2 points"));
    }
    if cfg.mc > 0 && cfg.bins == 0 {
        return Err(config_err("bins must be at least 1"));
    }
    let curve = curve_for(cfg)?;
    let (lo, hi) = curve.support;
    let mut outputs = Vec::new();
    let path = out.join("curve.csv");
    write(&path, &curve_csv(&curve.tabulate(lo, hi, cfg.grid)))?;
    outputs.push(path);

    let slope = (cfg.quantity == Quantity::Spacing).then(|| slope_at_zero(&curve));
    let mc = if cfg.mc > 0 {
        let overlay = match cfg.quantity {
            Quantity::Spacing => {
                let v = mc_spacings_2x2(cfg.matrix, PdfSpec::new(cfg.pdf), cfg.mc, cfg.seed)?;
                let h = histogram(&v, cfg.bins, Some((0.0, hi.min(5.0))))
                    .map_err(|e| RunError::Numerical(e.to_string()))?;
                McOverlay {
                    sup_norm: sup_distance(&h, |x| curve.eval(x)),
                    histogram: h,
                    mean_positive: None,
                }
            }
            Quantity::Density => {
                let pdf = PdfSpec::with_scale(PdfFamily::Gaussian, DENSITY_GAUSSIAN_SCALE);
                let v = mc_eigenvalues_2x2(cfg.matrix, pdf, cfg.mc, cfg.seed)?;
                let pos: Vec<f64> = v.iter().copied().filter(|x| *x > 0.0).collect();
                let ebar = pos.iter().sum::<f64>() / pos.len().max(1) as f64;
                let scaled: Vec<f64> = v.iter().map(|x| x / ebar).collect();
                let r = hi.min(4.0);
                let h = histogram(&scaled, cfg.bins, Some((-r, r))).map_err(|e| RunError::Numerical(e.to_string()))?;
                McOverlay {
                    sup_norm: sup_distance(&h, |x| curve.eval(x)),
                    histogram: h,
                    mean_positive: Some(ebar),
                }
            }
        };
        let path = out.join("mc_histogram.csv");
        write(&path, &histogram_csv(&overlay.histogram))?;
        outputs.push(path);
        Some(overlay)
    } else {
        None
    };

    let doc = AnalyticDoc {
        matrix: cfg.matrix.to_string(),
        pdf: cfg.pdf.token().to_string(),
        quantity: cfg.quantity.token().to_string(),
        curve: curve.name().to_string(),
        raw_scale: curve.scale(),
        support: [lo, hi],
        slope: slope.map(|s| match s {
            Slope::Linear(a) => SlopeDoc {
                kind: "linear".into(),
                alpha: Some(a),
                order: None,
            },
            Slope::SuperLinear(o) => SlopeDoc {
                kind: "super_linear".into(),
                alpha: None,
                order: Some(o),
            },
            Slope::SubLinear(o) => SlopeDoc {
                kind: "sub_linear".into(),
                alpha: None,
                order: Some(o),
            },
        }),
        mc: mc.as_ref().map(|m| McDoc {
            matrices: cfg.mc,
            seed: cfg.seed,
            bins: cfg.bins,
            sup_norm: m.sup_norm,
            mean_positive: m.mean_positive,
        }),
    };
    let path = out.join("analytic.toml");
    write(&path, &toml::to_string(&doc).expect("analytic documents serialize"))?;
    outputs.push(path);

    Ok(AnalyticReport {
        raw_scale: curve.scale(),
        curve,
        slope,
        mc,
        outputs,
    })
}
