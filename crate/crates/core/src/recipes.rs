//! Named experiment presets (`table1`-`table4`, `fig1`-`fig11`) at desk scale.
//!
//! A recipe is a list of cells; each cell is one experiment or one 2x2
//! analytic evaluation and gets its own subdirectory of the output
//! directory. `summary.toml` at the top collects every cell's fits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::eigen::SolverPath;
use crate::experiment::{
    analytic2x2, run, AnalyticConfig, ExperimentConfig, Quantity, Reference, RunError, Statistic,
};
use crate::fitting::{FitModel, FitSummary};
use crate::matrices::{EnsembleSpec, MatrixFamily};
use crate::models::{Slope, TwoByTwo};
use crate::sampler::{PdfFamily, PdfSpec};
use crate::spacing::{DensityScaling, Protocol};

pub const RECIPES: [(&str, &str); 15] = [
    ("table1", "p_AB fits, R+R^t and direct symmetric, six symmetric PDFs (NLM)"),
    ("table2", "p_AB fits, R+R^t and direct symmetric, seven asymmetric PDFs (NLM)"),
    ("table3", "Poisson fits: NLE for both symmetric ensembles, NLM for Q, cyclic, tridiagonal, T', Toeplitz"),
    ("table4", "Poisson fits to Re, Im and |E| spacings of R, C and T"),
    ("fig1", "2x2 p(s), uniform elements, with Monte Carlo overlay"),
    ("fig2", "2x2 p(s), exponential elements, with Monte Carlo overlay"),
    ("fig3", "2x2 p(s), super-Gaussian elements, with Monte Carlo overlay"),
    ("fig4", "2x2 eigenvalue densities, Gaussian elements, 8e4 matrices"),
    ("fig5", "p_AB for parabolic P and its asymmetric P2, P3"),
    ("fig6", "Poisson fit, Re spacings of T, Gaussian"),
    ("fig7", "two real eigenvalues of C: FALS spacing and density, n=1000, N=5000"),
    ("fig8", "sub-exponential spacings of T T^t (uniform) and C C^t (Gaussian)"),
    ("fig9", "complex spacings ordered by real part: C, T, R with uniform elements"),
    ("fig10", "upper-half-plane spacings: C, T, R with Gaussian elements"),
    ("fig11", "eigenvalue densities of single large symmetric matrices"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Run(ExperimentConfig),
    Analytic(AnalyticConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecipeCell {
    pub label: String,
    pub cell: Cell,
}

const SEED: u64 = 42;

fn spacing_run(family: MatrixFamily, pdf: PdfFamily, stat: Protocol, fit: &[FitModel]) -> ExperimentConfig {
    ExperimentConfig {
        ensemble: EnsembleSpec {
            family,
            n: 100,
            count: 1000,
            pdf: PdfSpec::new(pdf),
            seed: SEED,
        },
        statistic: Statistic::Spacing(stat),
        bins: 50,
        range: Some((0.0, 4.0)),
        fit: fit.to_vec(),
        ..ExperimentConfig::default()
    }
}

fn density_run(family: MatrixFamily, n: usize, fit: &[FitModel], reference: Option<Reference>) -> ExperimentConfig {
    let range = if matches!(family, MatrixFamily::Q | MatrixFamily::D | MatrixFamily::S) {
        (0.0, 1.0)
    } else {
        (-1.0, 1.0)
    };
    ExperimentConfig {
        ensemble: EnsembleSpec {
            family,
            n,
            count: 1,
            pdf: PdfSpec::new(PdfFamily::Gaussian),
            seed: SEED,
        },
        statistic: Statistic::Density(DensityScaling::MaxAbs),
        bins: 50,
        range: Some(range),
        fit: fit.to_vec(),
        reference,
        solver: SolverPath::Structured,
        ..ExperimentConfig::default()
    }
}

fn cell(label: String, cfg: ExperimentConfig) -> RecipeCell {
    RecipeCell {
        label,
        cell: Cell::Run(cfg),
    }
}

fn label(cfg: &ExperimentConfig) -> String {
    format!(
        "{}_{}_{}",
        cfg.ensemble.family.token(),
        cfg.statistic.token(),
        cfg.ensemble.pdf.family.token()
    )
}

fn analytic(matrix: TwoByTwo, pdf: PdfFamily, quantity: Quantity, mc: usize) -> RecipeCell {
    RecipeCell {
        label: format!("{matrix}_{}_{}", pdf.token(), quantity.token()),
        cell: Cell::Analytic(AnalyticConfig {
            matrix,
            pdf,
            quantity,
            grid: 401,
            mc,
            bins: 50,
            seed: SEED,
        }),
    }
}

fn table(families: &[(MatrixFamily, Protocol)], pdfs: &[PdfFamily], fit: FitModel) -> Vec<RecipeCell> {
    let mut out = Vec::new();
    for &pdf in pdfs {
        for &(f, stat) in families {
            let cfg = spacing_run(f, pdf, stat, &[fit]);
            out.push(cell(label(&cfg), cfg));
        }
    }
    out
}

/// Cells of recipe `name`; `pdf` keeps only cells using that element PDF.
pub fn recipe_cells(name: &str, pdf: Option<PdfFamily>) -> Result<Vec<RecipeCell>, RunError> {
    use MatrixFamily::*;
    use PdfFamily as P;
    use Protocol::*;
    let symmetric = [P::Gaussian, P::Uniform, P::Exponential, P::SuperGaussian, P::Triangular, P::Parabolic];
    let asymmetric = [
        P::HalfGaussian,
        P::HalfUniform,
        P::HalfExponential,
        P::HalfSuperGaussian,
        P::HalfTriangular,
        P::P2,
        P::P3,
    ];
    let table34 = [P::Gaussian, P::Uniform, P::Exponential, P::Triangular, P::Parabolic, P::SemiCircle, P::SuperGaussian];
    let cells = match name {
        "table1" => table(&[(Rsym, Nlm), (RsymDirect, Nlm)], &symmetric, FitModel::PAB),
        "table2" => table(&[(Rsym, Nlm), (RsymDirect, Nlm)], &asymmetric, FitModel::PAB),
        "table3" => table(
            &[(Rsym, Nle), (RsymDirect, Nle), (Q, Nlm), (Csym, Nlm), (Tsym, Nlm), (Tprime, Nlm), (Toeplitz, Nlm)],
            &table34,
            FitModel::Poisson,
        ),
        "table4" => table(
            &[
                (R, RealPart),
                (R, ImagPart),
                (R, Modulus),
                (C, RealPart),
                (C, ImagPart),
                (C, Modulus),
                (T, RealPart),
                (T, ImagPart),
                (T, Modulus),
            ],
            &table34,
            FitModel::Poisson,
        ),
        "fig1" | "fig2" | "fig3" => {
            let pdf = match name {
                "fig1" => P::Uniform,
                "fig2" => P::Exponential,
                _ => P::SuperGaussian,
            };
            vec![
                analytic(TwoByTwo::R1, pdf, Quantity::Spacing, 100_000),
                analytic(TwoByTwo::R2, pdf, Quantity::Spacing, 100_000),
            ]
        }
        "fig4" => vec![
            analytic(TwoByTwo::R1, P::Gaussian, Quantity::Density, 80_000),
            analytic(TwoByTwo::R2, P::Gaussian, Quantity::Density, 80_000),
        ],
        "fig5" => table(&[(Rsym, Nlm)], &[P::Parabolic, P::P2, P::P3], FitModel::PAB),
        "fig6" => table(&[(T, RealPart)], &[P::Gaussian], FitModel::Poisson),
        "fig7" => {
            let mut fals = spacing_run(C, P::Uniform, FalsRealReal, &[FitModel::HalfGaussian]);
            fals.ensemble.n = 1000;
            fals.ensemble.count = 5000;
            fals.reference = Some(Reference::HalfGaussian);
            let mut dens = fals.clone();
            dens.statistic = Statistic::Density(DensityScaling::MaxAbs);
            dens.range = Some((-1.0, 1.0));
            dens.fit = vec![FitModel::Gaussian];
            dens.reference = None;
            vec![cell(label(&fals), fals), cell(label(&dens), dens)]
        }
        "fig8" => {
            let s = spacing_run(S, P::Uniform, Nlm, &[FitModel::SubExp]);
            let d = spacing_run(D, P::Gaussian, Nlm, &[FitModel::SubExp]);
            vec![cell(label(&s), s), cell(label(&d), d)]
        }
        "fig9" => {
            let c = spacing_run(C, P::Uniform, ComplexOrdered, &[FitModel::ShiftedGaussianLinear]);
            let t = spacing_run(T, P::Uniform, ComplexOrdered, &[FitModel::ShiftedGaussianLinear]);
            let r = spacing_run(R, P::Uniform, ComplexOrdered, &[FitModel::PowerStretched]);
            vec![cell(label(&c), c), cell(label(&t), t), cell(label(&r), r)]
        }
        "fig10" => {
            let mut c = spacing_run(C, P::Gaussian, UpperHalfPlane, &[FitModel::WignerLike, FitModel::PowerStretched]);
            c.reference = Some(Reference::Wigner);
            let mut t = spacing_run(T, P::Gaussian, UpperHalfPlane, &[FitModel::WignerLike]);
            t.reference = Some(Reference::Wigner);
            let mut r = spacing_run(R, P::Gaussian, UpperHalfPlane, &[FitModel::PowerStretched]);
            r.reference = Some(Reference::Wigner);
            vec![cell(label(&c), c), cell(label(&t), t), cell(label(&r), r)]
        }
        "fig11" => {
            // dense symmetric solves (R+R^t, direct symmetric, Toeplitz) run
            // at n=2000; the structured families at the full n=10^4
            let cfgs = [
                density_run(Rsym, 2000, &[], Some(Reference::Semicircle)),
                density_run(RsymDirect, 2000, &[], Some(Reference::Semicircle)),
                density_run(Csym, 10_000, &[FitModel::BoseMitraFit], None),
                density_run(Toeplitz, 2000, &[FitModel::Gaussian], None),
                density_run(Tsym, 10_000, &[FitModel::SuperGaussianQuartic], None),
                density_run(Tprime, 10_000, &[FitModel::SuperGaussianQuartic], None),
                density_run(D, 10_000, &[FitModel::ExponentialD], None),
            ];
            cfgs.into_iter().map(|c| cell(label(&c), c)).collect()
        }
        other => return Err(RunError::Config(format!("unknown recipe `{other}`"))),
    };
    let cells: Vec<RecipeCell> = match pdf {
        None => cells,
        Some(p) => cells
            .into_iter()
            .filter(|c| match &c.cell {
                Cell::Run(cfg) => cfg.ensemble.pdf.family == p,
                Cell::Analytic(a) => a.pdf == p,
            })
            .collect(),
    };
    if cells.is_empty() {
        return Err(RunError::Config(format!("recipe `{name}` has no cell for that PDF")));
    }
    Ok(cells)
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub label: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_sup_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_sup_norm: Option<f64>,
    pub fit: Vec<FitSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecipeSummary {
    pub recipe: String,
    pub cell: Vec<CellSummary>,
}

/// Runs every cell of a recipe under `out`, which must exist. A failing
/// cell is recorded and the rest still run; the first failure is returned
/// after `summary.toml` has been written.
pub fn run_recipe(name: &str, pdf: Option<PdfFamily>, out: &Path) -> Result<RecipeSummary, RunError> {
    if !out.is_dir() {
        return Err(RunError::Config(format!("output directory {} does not exist", out.display())));
    }
    let cells = recipe_cells(name, pdf)?;
    let mut summary = RecipeSummary {
        recipe: name.to_string(),
        cell: Vec::with_capacity(cells.len()),
    };
    let mut first_err = None;
    for c in cells {
        let dir: PathBuf = out.join(&c.label);
        fs::create_dir_all(&dir).map_err(|source| RunError::Io {
            path: dir.clone(),
            source,
        })?;
        let mut s = CellSummary {
            label: c.label.clone(),
            status: "ok".into(),
            error: None,
            reference_sup_norm: None,
            alpha: None,
            mc_sup_norm: None,
            fit: Vec::new(),
        };
        let outcome = match &c.cell {
            Cell::Run(cfg) => run(cfg, &dir).map(|r| {
                s.fit = r.fits.iter().map(|f| f.summary()).collect();
                s.reference_sup_norm = r.reference.map(|g| g.sup_norm);
            }),
            Cell::Analytic(a) => analytic2x2(a, &dir).map(|r| {
                s.alpha = r.slope.and_then(Slope::alpha);
                s.mc_sup_norm = r.mc.map(|m| m.sup_norm);
            }),
        };
        if let Err(e) = outcome {
            s.status = "failed".into();
            s.error = Some(e.to_string());
            first_err.get_or_insert(e);
        }
        summary.cell.push(s);
    }
    let path = out.join("summary.toml");
    let text = toml::to_string(&summary).expect("summaries serialize");
    fs::write(&path, text).map_err(|source| RunError::Io { path, source })?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}
