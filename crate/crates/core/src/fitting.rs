//! Least-squares fits of the parametric spacing and density laws to
//! histograms (Levenberg-Marquardt with numerical Jacobians).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::quad::integrate;
use crate::models::special::gamma;
use crate::spacing::Histogram;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("unknown fit model `{0}`")]
    UnknownModel(String),
    #[error("{bins} bins cannot constrain {params} parameters (need at least params + 2)")]
    TooFewBins { bins: usize, params: usize },
    #[error("histogram contains non-finite densities")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `A s e^{-B s^2}`
    PAB,
    /// `mu e^{-mu s}`
    Poisson,
    /// `a^{1/b}/Gamma(1+1/b) e^{-a s^b}`
    SubExp,
    /// `a s e^{-b s^2}`
    WignerLike,
    /// `a s^b e^{-c s^d}`
    PowerStretched,
    /// `a (s + c) e^{-(s - d)^2 / w}`
    ShiftedGaussianLinear,
    /// `a e^{-b x^2}`
    Gaussian,
    /// `a e^{-b x^4}`
    SuperGaussianQuartic,
    /// `b e^{-b x}`
    ExponentialD,
    /// `(2c/pi) e^{-c^2 s^2 / pi}`; `c = 1` is the unit-mean half-Gaussian.
    HalfGaussian,
    /// `a (1 - e^{-a})^{-1} |x| e^{-a x^2}`
    BoseMitraFit,
}

impl FitModel {
    pub const ALL: [FitModel; 11] = [
        FitModel::PAB,
        FitModel::Poisson,
        FitModel::SubExp,
        FitModel::WignerLike,
        FitModel::PowerStretched,
        FitModel::ShiftedGaussianLinear,
        FitModel::Gaussian,
        FitModel::SuperGaussianQuartic,
        FitModel::ExponentialD,
        FitModel::HalfGaussian,
        FitModel::BoseMitraFit,
    ];

    pub fn token(self) -> &'static str {
        match self {
            FitModel::PAB => "pab",
            FitModel::Poisson => "poisson",
            FitModel::SubExp => "subexp",
            FitModel::WignerLike => "wigner_like",
            FitModel::PowerStretched => "power_stretched",
            FitModel::ShiftedGaussianLinear => "shifted_gaussian_linear",
            FitModel::Gaussian => "gaussian",
            FitModel::SuperGaussianQuartic => "supergaussian_quartic",
            FitModel::ExponentialD => "exponential",
            FitModel::HalfGaussian => "half_gaussian",
            FitModel::BoseMitraFit => "bose_mitra",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            FitModel::PAB => &["A", "B"],
            FitModel::Poisson => &["mu"],
            FitModel::SubExp => &["a", "b"],
            FitModel::WignerLike => &["a", "b"],
            FitModel::PowerStretched => &["a", "b", "c", "d"],
            FitModel::ShiftedGaussianLinear => &["a", "c", "d", "w"],
            FitModel::Gaussian => &["a", "b"],
            FitModel::SuperGaussianQuartic => &["a", "b"],
            FitModel::ExponentialD => &["b"],
            FitModel::HalfGaussian => &["c"],
            FitModel::BoseMitraFit => &["a"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    /// Parameters that must stay positive; these are optimized on a log
    /// scale.
    fn positive(self) -> &'static [bool] {
        match self {
            FitModel::ShiftedGaussianLinear => &[true, false, false, true],
            FitModel::PowerStretched => &[true, true, true, true],
            _ => &[true, true],
        }
    }

    /// Model value at `x`.
    pub fn eval(self, p: &[f64], x: f64) -> f64 {
        let nonneg = |v: f64| if x < 0.0 { 0.0 } else { v };
        match self {
            FitModel::PAB | FitModel::WignerLike => nonneg(p[0] * x * (-p[1] * x * x).exp()),
            FitModel::Poisson => nonneg(p[0] * (-p[0] * x).exp()),
            FitModel::SubExp => {
                let (a, b) = (p[0], p[1]);
                nonneg(a.powf(1.0 / b) / gamma(1.0 + 1.0 / b) * (-a * x.abs().powf(b)).exp())
            }
            FitModel::PowerStretched => {
                nonneg(p[0] * x.abs().powf(p[1]) * (-p[2] * x.abs().powf(p[3])).exp())
            }
            FitModel::ShiftedGaussianLinear => {
                nonneg(p[0] * (x + p[1]) * (-(x - p[2]).powi(2) / p[3]).exp())
            }
            FitModel::Gaussian => p[0] * (-p[1] * x * x).exp(),
            FitModel::SuperGaussianQuartic => p[0] * (-p[1] * x.powi(4)).exp(),
            FitModel::ExponentialD => nonneg(p[0] * (-p[0] * x).exp()),
            FitModel::HalfGaussian => {
                let c = p[0];
                nonneg(2.0 * c / std::f64::consts::PI * (-c * c * x * x / std::f64::consts::PI).exp())
            }
            FitModel::BoseMitraFit => {
                let a = p[0];
                a / (-(-a).exp_m1()) * x.abs() * (-a * x * x).exp()
            }
        }
    }
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for FitModel {
    type Err = FitError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        FitModel::ALL
            .iter()
            .copied()
            .find(|m| m.token() == t)
            .ok_or_else(|| FitError::UnknownModel(s.to_string()))
    }
}

/// How residuals of the bins are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Each bin weighted by its count.
    Counts,
    /// Every bin weighted equally.
    #[default]
    Uniform,
}

impl Weighting {
    pub fn token(self) -> &'static str {
        match self {
            Weighting::Counts => "counts",
            Weighting::Uniform => "uniform",
        }
    }
}

impl FromStr for Weighting {
    type Err = FitError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "counts" => Ok(Weighting::Counts),
            "uniform" => Ok(Weighting::Uniform),
            _ => Err(FitError::UnknownModel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// Parameter names in the model's order, with values.
    pub params: Vec<(String, f64)>,
    /// Weighted least-squares objective at the optimum.
    pub objective: f64,
    /// Unweighted sum of squared density residuals.
    pub sse: f64,
    pub sup_norm: f64,
    pub chi2: f64,
    pub n_bins: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|(_, v)| *v).collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.model.eval(&self.values(), x)
    }

    /// Flat, serializable view of the result.
    pub fn summary(&self) -> FitSummary {
        FitSummary {
            model: self.model.token().to_string(),
            converged: self.converged,
            n_bins: self.n_bins,
            sse: self.sse,
            sup_norm: self.sup_norm,
            chi2: self.chi2,
            objective: self.objective,
            params: self.params.iter().cloned().collect(),
        }
    }

    /// Key-value text document (TOML).
    pub fn to_text(&self) -> String {
        toml::to_string(&self.summary()).expect("fit documents serialize")
    }
}

/// What a fit file records for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub model: String,
    pub converged: bool,
    pub n_bins: usize,
    pub sse: f64,
    pub sup_norm: f64,
    pub chi2: f64,
    pub objective: f64,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Goodness {
    pub sse: f64,
    pub sup_norm: f64,
    pub chi2: f64,
}

/// Residual statistics of a curve against a histogram: squared and maximal
/// density residuals at bin centres, and Pearson chi-square on counts with
/// adjacent bins merged until every expected count is at least 5.
pub fn goodness<F: Fn(f64) -> f64>(hist: &Histogram, curve: F) -> Goodness {
    let dens = hist.absolute_density();
    let centers = hist.centers();
    let mut sse = 0.0;
    let mut sup: f64 = 0.0;
    for (c, d) in centers.iter().zip(&dens) {
        let r = d - curve(*c);
        sse += r * r;
        sup = sup.max(r.abs());
    }
    let total = (hist.n_samples + hist.n_outside) as f64;
    let expected: Vec<f64> = (0..hist.bins())
        .map(|i| {
            let (a, b) = (hist.bin_edges[i], hist.bin_edges[i + 1]);
            total * integrate(&curve, a, b, 1e-10).value
        })
        .collect();
    let groups = merge_groups(&expected, &hist.counts);
    let chi2 = groups
        .iter()
        .filter(|(e, _)| *e > 0.0)
        .map(|(e, o)| (o - e) * (o - e) / e)
        .sum();
    Goodness {
        sse,
        sup_norm: sup,
        chi2,
    }
}

/// Groups adjacent bins left to right until each expected count reaches 5;
/// a short remainder joins the last group.
fn merge_groups(expected: &[f64], observed: &[u64]) -> Vec<(f64, f64)> {
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut e, mut o) = (0.0, 0.0);
    for (ei, oi) in expected.iter().zip(observed) {
        e += ei;
        o += *oi as f64;
        if e >= 5.0 {
            groups.push((e, o));
            e = 0.0;
            o = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += e;
                last.1 += o;
            }
            None => groups.push((e, o)),
        }
    }
    groups
}

struct Data {
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Data {
    fn from_hist(hist: &Histogram, weighting: Weighting) -> Data {
        let y = hist.absolute_density();
        let w = match weighting {
            Weighting::Counts => hist.counts.iter().map(|&c| c as f64).collect(),
            Weighting::Uniform => vec![1.0; y.len()],
        };
        Data {
            x: hist.centers(),
            y,
            w,
        }
    }

    fn mean(&self) -> f64 {
        let mass: f64 = self.y.iter().sum();
        self.x.iter().zip(&self.y).map(|(x, y)| x * y).sum::<f64>() / mass
    }
}

fn to_internal(model: FitModel, p: &[f64]) -> Vec<f64> {
    p.iter()
        .zip(model.positive())
        .map(|(v, pos)| if *pos { v.max(1e-300).ln() } else { *v })
        .collect()
}

fn to_external(model: FitModel, t: &[f64]) -> Vec<f64> {
    t.iter()
        .zip(model.positive())
        .map(|(v, pos)| if *pos { v.exp() } else { *v })
        .collect()
}

const MAX_ITER: usize = 300;
const JAC_STEP: f64 = 1e-6;

/// Solves the small dense system `a x = b` by Gaussian elimination with
/// partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

struct LmOutcome {
    params: Vec<f64>,
    objective: f64,
    converged: bool,
}

/// Residual vector `sqrt(w) (f - y)` in internal coordinates.
fn residuals(data: &Data, model: FitModel, t: &[f64]) -> Vec<f64> {
    let p = to_external(model, t);
    (0..data.x.len())
        .map(|i| data.w[i].sqrt() * (model.eval(&p, data.x[i]) - data.y[i]))
        .collect()
}

fn jacobian(data: &Data, model: FitModel, t: &[f64]) -> Vec<Vec<f64>> {
    let m = data.x.len();
    let mut jac = vec![vec![0.0; t.len()]; m];
    for k in 0..t.len() {
        let h = JAC_STEP * t[k].abs().max(1.0);
        let mut up = t.to_vec();
        let mut dn = t.to_vec();
        up[k] += h;
        dn[k] -= h;
        let ru = residuals(data, model, &up);
        let rd = residuals(data, model, &dn);
        for i in 0..m {
            jac[i][k] = (ru[i] - rd[i]) / (2.0 * h);
        }
    }
    jac
}

fn gradient_norm(jac: &[Vec<f64>], r: &[f64]) -> f64 {
    let n = jac.first().map_or(0, |row| row.len());
    (0..n)
        .map(|k| {
            let g: f64 = 2.0 * jac.iter().zip(r).map(|(row, ri)| row[k] * ri).sum::<f64>();
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

fn levenberg_marquardt(data: &Data, model: FitModel, start: &[f64]) -> LmOutcome {
    let mut t = to_internal(model, start);
    let mut r = residuals(data, model, &t);
    let mut obj: f64 = r.iter().map(|v| v * v).sum();
    if !obj.is_finite() {
        return LmOutcome {
            params: start.to_vec(),
            objective: f64::INFINITY,
            converged: false,
        };
    }
    let mut lambda = 1e-3;
    let n = t.len();
    let mut small_steps = 0;
    for _ in 0..MAX_ITER {
        let jac = jacobian(data, model, &t);
        if gradient_norm(&jac, &r) <= 1e-8 * (1.0 + obj) {
            break;
        }
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for (row, ri) in jac.iter().zip(&r) {
            for a in 0..n {
                jtr[a] -= row[a] * ri;
                for b in 0..n {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[k][k] += lambda * jtj[k][k].max(1e-12);
            }
            let Some(delta) = solve(a, jtr.clone()) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = t.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let rt = residuals(data, model, &trial);
            let ot: f64 = rt.iter().map(|v| v * v).sum();
            if ot.is_finite() && ot < obj {
                let rel = (obj - ot) / obj.max(1e-300);
                let step: f64 = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
                t = trial;
                r = rt;
                obj = ot;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                small_steps = if rel < 1e-14 && step < 1e-12 { small_steps + 1 } else { 0 };
                break;
            }
            lambda *= 10.0;
        }
        if !improved || small_steps >= 3 {
            break;
        }
    }
    let jac = jacobian(data, model, &t);
    let g = gradient_norm(&jac, &r);
    LmOutcome {
        params: to_external(model, &t),
        objective: obj,
        // floating-point floor: a gradient at the noise level of the
        // objective also counts as stationary
        converged: g <= 1e-8 * (1.0 + obj) || g <= 1e-6 * obj.sqrt() * (1.0 + obj).sqrt(),
    }
}

fn mode_center(hist: &Histogram) -> (f64, usize) {
    let dens = hist.absolute_density();
    let centers = hist.centers();
    let mut best = 0;
    for i in 1..dens.len() {
        if dens[i] > dens[best] {
            best = i;
        }
    }
    (centers[best], best)
}

fn is_flat(hist: &Histogram) -> bool {
    let dens = hist.absolute_density();
    let max = dens.iter().copied().fold(0.0, f64::max);
    let min = dens.iter().copied().fold(f64::INFINITY, f64::min);
    max <= 0.0 || min >= 0.8 * max
}

/// Starting points for the optimizer, the moment/mode-based guess first.
pub fn init_guess(hist: &Histogram, model: FitModel) -> Vec<Vec<f64>> {
    let data = Data::from_hist(hist, Weighting::Uniform);
    let mean = data.mean().max(1e-6);
    let dens = hist.absolute_density();
    let peak = dens.iter().copied().fold(0.0, f64::max).max(1e-6);
    let (mode, mode_idx) = mode_center(hist);
    let grid = [0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0, 3.0];
    match model {
        FitModel::Poisson | FitModel::ExponentialD => vec![vec![1.0 / mean]],
        FitModel::HalfGaussian => vec![vec![1.0 / mean]],
        FitModel::PAB | FitModel::WignerLike => {
            let mut starts = Vec::new();
            if !is_flat(hist) && mode_idx > 0 {
                let b0 = 1.0 / (2.0 * mode * mode);
                starts.push(vec![2.0 * b0, b0]);
            }
            for b in [0.1, 0.3, 1.0, 3.0, 10.0] {
                starts.push(vec![2.0 * b, b]);
            }
            starts
        }
        FitModel::SubExp => grid
            .iter()
            .map(|&b| {
                let a = (gamma(2.0 / b) / (gamma(1.0 / b) * mean)).powf(b);
                vec![a, b]
            })
            .collect(),
        FitModel::PowerStretched => {
            let mut starts = Vec::new();
            for &b in &[0.5, 1.0, 2.0, 3.0] {
                for &d in &grid {
                    let c = 1.0;
                    // unit mass: a Gamma((b+1)/d) / (d c^{(b+1)/d}) = 1
                    let a = d / gamma((b + 1.0) / d);
                    starts.push(vec![a, b, c, d]);
                }
            }
            starts
        }
        FitModel::ShiftedGaussianLinear => {
            let mut starts = Vec::new();
            for &w in &[0.5, 1.0, 2.0] {
                for &c in &[0.1, 1.0, 5.0] {
                    let mass = integrate(|s| (s + c) * (-(s - mode).powi(2) / w).exp(), 0.0, f64::INFINITY, 1e-10)
                        .value;
                    starts.push(vec![1.0 / mass.max(1e-12), c, mode, w]);
                }
            }
            starts
        }
        FitModel::Gaussian => {
            let a = dens_at_zero(hist).unwrap_or(peak);
            let mut v = vec![vec![a, std::f64::consts::PI * a * a]];
            for b in [1.0, 4.0, 10.0] {
                v.push(vec![a, b]);
            }
            v
        }
        FitModel::SuperGaussianQuartic => {
            let a = dens_at_zero(hist).unwrap_or(peak);
            let b0 = (2.0 * a * gamma(1.25)).powi(4);
            vec![vec![a, b0], vec![a, 1.0], vec![a, 10.0]]
        }
        FitModel::BoseMitraFit => [1.0, 3.0, 7.0, 15.0].iter().map(|&a| vec![a]).collect(),
    }
}

fn dens_at_zero(hist: &Histogram) -> Option<f64> {
    let dens = hist.absolute_density();
    hist.centers()
        .iter()
        .zip(&dens)
        .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
        .map(|(_, d)| *d)
        .filter(|d| *d > 0.0)
}

/// Fits `model` to a histogram's densities at the bin centres, weighting
/// each bin by its count; the best optimum over all starts wins (lowest
/// objective, ties broken by the parameter vector).
pub fn fit(hist: &Histogram, model: FitModel) -> Result<FitResult, FitError> {
    fit_weighted(hist, model, Weighting::default())
}

pub fn fit_weighted(hist: &Histogram, model: FitModel, weighting: Weighting) -> Result<FitResult, FitError> {
    let bins = hist.bins();
    if bins < model.n_params() + 2 {
        return Err(FitError::TooFewBins {
            bins,
            params: model.n_params(),
        });
    }
    if hist.density.iter().any(|d| !d.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let data = Data::from_hist(hist, weighting);
    let mut best: Option<LmOutcome> = None;
    for start in init_guess(hist, model) {
        let out = levenberg_marquardt(&data, model, &start);
        let better = match &best {
            None => true,
            Some(b) => match out.objective.total_cmp(&b.objective) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Equal => lexicographic_less(&out.params, &b.params),
                std::cmp::Ordering::Greater => false,
            },
        };
        if better {
            best = Some(out);
        }
    }
    let best = best.expect("every model has at least one start");
    let p = best.params.clone();
    let g = goodness(hist, |x| model.eval(&p, x));
    Ok(FitResult {
        model,
        params: model
            .param_names()
            .iter()
            .zip(&best.params)
            .map(|(n, v)| (n.to_string(), *v))
            .collect(),
        objective: best.objective,
        sse: g.sse,
        sup_norm: g.sup_norm,
        chi2: g.chi2,
        n_bins: bins,
        converged: best.converged && best.objective.is_finite(),
    })
}

fn lexicographic_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}
