use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rmspec::eigen::SolverPath;
use rmspec::experiment::{
    analytic2x2, run, AnalyticConfig, ExperimentConfig, Quantity, Reference, RunError, Statistic,
};
use rmspec::fitting::{FitModel, Weighting};
use rmspec::matrices::{EnsembleSpec, MatrixFamily};
use rmspec::models::{Slope, TwoByTwo};
use rmspec::recipes::{recipe_cells, run_recipe, RECIPES};
use rmspec::sampler::{PdfFamily, PdfSpec};
use rmspec::spacing::{PairPolicy, Scaling};

#[derive(Parser)]
#[command(name = "rmspec", version, about = "Spacing statistics and eigenvalue densities of real random matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an ensemble, histogram a statistic and fit models to it.
    Run(RunArgs),
    /// Evaluate a 2x2 spacing law or eigenvalue density.
    Analytic2x2(AnalyticArgs),
    /// Named experiment presets (table1-table4, fig1-fig11).
    Recipes {
        #[command(subcommand)]
        action: RecipeAction,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Matrix family (r, rsym, rsym_direct, r1, r2, c, csym, t, tsym, tprime, toeplitz, q, d, s).
    #[arg(long, default_value = "rsym")]
    ensemble: MatrixFamily,
    /// Matrix order.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Number of replicas.
    #[arg(long = "N", default_value_t = 1000)]
    replicas: usize,
    /// Element PDF.
    #[arg(long, default_value = "gaussian")]
    pdf: PdfFamily,
    /// Width parameter of the element PDF.
    #[arg(long, default_value_t = 1.0)]
    pdf_scale: f64,
    /// Statistic: nlm, nle, complex, re, im, mod, upper, fals_rr, fals_rc, fals_cc, density, density_mean.
    #[arg(long, default_value = "nlm")]
    stat: Statistic,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Histogram range as `lo,hi`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    range: Option<(f64, f64)>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// per_matrix or global.
    #[arg(long, default_value = "global")]
    scaling: Scaling,
    /// drop_zeros, dedup or keep.
    #[arg(long, default_value = "drop_zeros")]
    pair_policy: PairPolicy,
    /// Comma-separated models to fit.
    #[arg(long, value_delimiter = ',')]
    fit: Vec<FitModel>,
    /// uniform or counts.
    #[arg(long, default_value = "uniform")]
    weighting: Weighting,
    /// Parameter-free law to compare against (wigner, poisson, semicircle, half_gaussian, bose_mitra).
    #[arg(long)]
    reference: Option<Reference>,
    /// structured or dense.
    #[arg(long, default_value = "structured")]
    solver: SolverPath,
    /// Allow dense non-symmetric solves above the default order cap.
    #[arg(long)]
    allow_large: bool,
    /// Re-run the configuration stored in a manifest (other options ignored).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Existing output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyticArgs {
    #[arg(long)]
    matrix: TwoByTwo,
    #[arg(long)]
    pdf: PdfFamily,
    /// spacing or density.
    #[arg(long, default_value = "spacing")]
    quantity: Quantity,
    /// Points in the tabulated curve.
    #[arg(long, default_value_t = 401)]
    grid: usize,
    /// Monte Carlo matrices for an overlay histogram (0 for none).
    #[arg(long, default_value_t = 0)]
    mc: usize,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum RecipeAction {
    /// List the recipes.
    List,
    /// Run every cell of a recipe.
    Run {
        name: String,
        /// Only the cells using this element PDF.
        #[arg(long)]
        pdf: Option<PdfFamily>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `lo,hi`")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lo, hi))
}

fn run_command(a: RunArgs) -> Result<(), RunError> {
    let cfg = match &a.manifest {
        Some(m) => ExperimentConfig::from_manifest(m)?,
        None => ExperimentConfig {
            ensemble: EnsembleSpec {
                family: a.ensemble,
                n: a.n,
                count: a.replicas,
                pdf: PdfSpec::with_scale(a.pdf, a.pdf_scale),
                seed: a.seed,
            },
            statistic: a.stat,
            bins: a.bins,
            range: a.range,
            scaling: a.scaling,
            pair_policy: a.pair_policy,
            fit: a.fit,
            weighting: a.weighting,
            reference: a.reference,
            solver: a.solver,
            allow_large: a.allow_large,
        },
    };
    let report = run(&cfg, &a.out)?;
    println!(
        "{} samples ({} matrices skipped, {} outside range) in {:.2} s",
        report.samples, report.skipped_matrices, report.histogram.n_outside, report.wall_time_s
    );
    for f in &report.fits {
        let params: Vec<String> = f.params.iter().map(|(n, v)| format!("{n}={v:.4}")).collect();
        println!("{}: {}  sup={:.4}", f.model, params.join(" "), f.sup_norm);
    }
    if let (Some(r), Some(g)) = (cfg.reference, report.reference) {
        println!("{}: sup={:.4}", r.token(), g.sup_norm);
    }
    Ok(())
}

fn analytic_command(a: AnalyticArgs) -> Result<(), RunError> {
    let cfg = AnalyticConfig {
        matrix: a.matrix,
        pdf: a.pdf,
        quantity: a.quantity,
        grid: a.grid,
        mc: a.mc,
        bins: a.bins,
        seed: a.seed,
    };
    let report = analytic2x2(&cfg, &a.out)?;
    match report.slope {
        Some(Slope::Linear(alpha)) => println!("alpha = {alpha:.4}"),
        Some(Slope::SuperLinear(o)) => println!("super-linear at s=0, order {o:.2}"),
        Some(Slope::SubLinear(o)) => println!("sub-linear at s=0, order {o:.2}"),
        None => {}
    }
    println!("raw scale = {:.6}", report.raw_scale);
    if let Some(mc) = &report.mc {
        println!("Monte Carlo sup-norm = {:.4}", mc.sup_norm);
        if let Some(e) = mc.mean_positive {
            println!("Monte Carlo mean positive eigenvalue = {e:.4}");
        }
    }
    Ok(())
}

fn recipes_command(action: RecipeAction) -> Result<(), RunError> {
    match action {
        RecipeAction::List => {
            for (name, what) in RECIPES {
                let n = recipe_cells(name, None)?.len();
                println!("{name:<8} {n:>3} cells  {what}");
            }
            Ok(())
        }
        RecipeAction::Run { name, pdf, out } => {
            let summary = run_recipe(&name, pdf, &out)?;
            for c in &summary.cell {
                let fits: Vec<String> = c
                    .fit
                    .iter()
                    .map(|f| {
                        let p: Vec<String> = f.params.iter().map(|(n, v)| format!("{n}={v:.3}")).collect();
                        format!("{} {}", f.model, p.join(" "))
                    })
                    .collect();
                println!("{:<32} {}", c.label, fits.join("; "));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run_command(a),
        Command::Analytic2x2(a) => analytic_command(a),
        Command::Recipes { action } => recipes_command(action),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
