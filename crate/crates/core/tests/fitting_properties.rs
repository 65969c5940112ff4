mod common;

use common::Tabulated;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rmspec::eigen::SolverPath;
use rmspec::experiment::ensemble_spectra;
use rmspec::fitting::{fit, FitModel};
use rmspec::matrices::{EnsembleSpec, MatrixFamily};
use rmspec::sampler::{PdfFamily, PdfSpec};
use rmspec::spacing::{extract_spacings, histogram, PairPolicy, Protocol, Scaling};

/// A model with parameters, the interval it lives on, and whether its first
/// parameter is a free amplitude to be fixed by normalization.
struct Case {
    model: FitModel,
    params: Vec<f64>,
    range: (f64, f64),
    amplitude: bool,
}

fn cases() -> Vec<Case> {
    use FitModel::*;
    let c = |model, params: &[f64], range, amplitude| Case {
        model,
        params: params.to_vec(),
        range,
        amplitude,
    };
    vec![
        c(PAB, &[1.0, 0.9], (0.0, 5.0), true),
        c(Poisson, &[1.3], (0.0, 14.0), false),
        c(SubExp, &[1.5, 0.8], (0.0, 25.0), false),
        c(WignerLike, &[1.0, 1.2], (0.0, 5.0), true),
        c(PowerStretched, &[1.0, 1.5, 1.0, 2.0], (0.0, 5.0), true),
        c(ShiftedGaussianLinear, &[1.0, 0.2, 0.8, 0.6], (0.0, 5.0), true),
        c(Gaussian, &[1.0, 2.0], (-3.0, 3.0), true),
        c(SuperGaussianQuartic, &[1.0, 3.0], (-2.0, 2.0), true),
        c(ExponentialD, &[2.5], (0.0, 8.0), false),
        c(HalfGaussian, &[1.2], (0.0, 5.0), false),
        c(BoseMitraFit, &[1.5], (-1.0, 1.0), false),
    ]
}

#[test]
fn every_model_recovers_its_own_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    for mut case in cases() {
        let model = case.model;
        let (lo, hi) = case.range;
        let raw = case.params.clone();
        let table = Tabulated::new(|x| model.eval(&raw, x), lo, hi, 200_001);
        if case.amplitude {
            case.params[0] /= table.mass;
        }
        let draws = table.sample(&mut rng, 1_000_000);
        let h = histogram(&draws, 200, Some((lo, hi))).unwrap();
        let got = fit(&h, model).unwrap();
        for ((name, v), want) in got.params.iter().zip(&case.params) {
            let rel = (v - want).abs() / want.abs().max(0.1);
            assert!(rel < 0.03, "{model} {name}: fitted {v}, true {want}");
        }
    }
}

fn nlm_histogram(family: MatrixFamily, pdf: PdfFamily, bins: usize) -> (rmspec::spacing::Histogram, f64) {
    let spec = EnsembleSpec {
        family,
        n: 100,
        count: 1000,
        pdf: PdfSpec::new(pdf),
        seed: 42,
    };
    let spectra = ensemble_spectra(&spec, SolverPath::Structured).unwrap();
    let s = extract_spacings(&spectra, Protocol::Nlm, Scaling::default(), PairPolicy::default()).unwrap();
    (histogram(&s.values, bins, Some((0.0, 4.0))).unwrap(), s.mean())
}

#[test]
fn binning_barely_moves_the_fit() {
    for pdf in [PdfFamily::Gaussian, PdfFamily::Uniform] {
        let p: Vec<Vec<f64>> = [40, 60]
            .into_iter()
            .map(|b| fit(&nlm_histogram(MatrixFamily::Rsym, pdf, b).0, FitModel::PAB).unwrap().values())
            .collect();
        for (a, b) in p[0].iter().zip(&p[1]) {
            assert!((a - b).abs() / b < 0.05, "{pdf}: {a} vs {b}");
        }
    }
}

#[test]
fn good_poisson_fits_match_the_inverse_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for mu in [0.8, 1.0, 1.3, 2.0] {
        let table = Tabulated::new(|x| (-mu * x).exp(), 0.0, 30.0 / mu, 300_001);
        let draws = table.sample(&mut rng, 100_000);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let h = histogram(&draws, 50, Some((0.0, 4.0))).unwrap();
        let f = fit(&h, FitModel::Poisson).unwrap();
        assert!(f.sup_norm < 0.05, "mu {mu}: sup {}", f.sup_norm);
        let got = f.param("mu").unwrap();
        assert!((got * mean - 1.0).abs() < 0.10, "mu {mu}: fitted {got}, mean {mean}");
    }
}

#[test]
fn tridiagonal_ensembles_fit_poisson_with_unit_mean() {
    // the moment and least-squares estimates of the rate are close for T
    let (h, mean) = nlm_histogram(MatrixFamily::Tsym, PdfFamily::Uniform, 50);
    let f = fit(&h, FitModel::Poisson).unwrap();
    assert!((mean - 1.0).abs() < 1e-12);
    assert!((f.param("mu").unwrap() - 1.0).abs() < 0.10);
}
