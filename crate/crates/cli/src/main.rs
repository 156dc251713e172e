use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riesne::config::{load_config, resolve, FileConfig};
use riesne::error::{CliError, Result};
use riesne::ingest::{self, ManifoldChoice};
use riesne::{metrics, outputs};
use riesne_core::affinity::{build_p, CalibrationReport, PMode};
use riesne_core::embedding::{
    build_q, kl_cost, optimize, EmbeddingState, OptimizerConfig, SimilarityFamily, TargetSpace,
};
use riesne_core::{DatasetTable, Manifold};

/// Embeds data living on Riemannian manifolds (Euclidean space, spheres,
/// SPD matrices) into low-dimensional Euclidean or spherical views using
/// heat-kernel neighbor affinities.
#[derive(Parser)]
#[command(name = "riesne", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a dataset and write low-dimensional coordinates.
    Embed(EmbedArgs),
    /// Tangent-space PCA comparison embedding.
    Baseline(BaselineArgs),
    /// Score an embedding against its source data (JSON on stdout).
    Eval(EvalArgs),
    /// Build rolling-window covariance matrices from a time-series CSV.
    IngestCov(IngestCovArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum TargetChoice {
    Euclidean,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum FamilyChoice {
    /// Student-t with one degree of freedom (Euclidean targets).
    #[value(name = "student-t")]
    StudentT,
    /// von Mises-Fisher with kappa = 1 (sphere targets).
    Vmf,
    /// Brownian heat kernel with t = 1 (any target).
    Brownian,
}

#[derive(Args)]
struct EmbedArgs {
    /// Input CSV: header row, feature columns, optional id/label columns.
    #[arg(long)]
    input: PathBuf,
    /// Manifold the input data lives on.
    #[arg(long, value_enum)]
    manifold: ManifoldChoice,
    /// Project rows onto the manifold instead of validating them.
    #[arg(long)]
    project: bool,
    /// Target space for the embedding [default: euclidean].
    #[arg(long, value_enum)]
    target: Option<TargetChoice>,
    /// Low-dimensional similarity family [default: student-t for euclidean
    /// targets, vmf for sphere targets].
    #[arg(long, value_enum)]
    family: Option<FamilyChoice>,
    /// Intrinsic target dimension: d for R^d, d for S^d [default: 2].
    #[arg(long)]
    dim: Option<usize>,
    /// Target perplexity (effective neighbor count) [default: 30].
    #[arg(long)]
    perplexity: Option<f64>,
    /// Sparse P over each point's 3*perplexity VP-tree neighbors.
    #[arg(long)]
    sparse: bool,
    /// Barnes-Hut cell criterion; 0 = exact gradients [default: 0.5].
    #[arg(long)]
    theta: Option<f64>,
    /// Gradient-descent iterations [default: 1000].
    #[arg(long)]
    iters: Option<usize>,
    /// Learning rate [default: 200].
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Momentum during early exaggeration [default: 0.5].
    #[arg(long)]
    momentum_early: Option<f64>,
    /// Momentum after early exaggeration [default: 0.8].
    #[arg(long)]
    momentum_late: Option<f64>,
    /// Early-exaggeration multiplier on P [default: 12].
    #[arg(long)]
    exaggeration_factor: Option<f64>,
    /// Iterations of early exaggeration [default: 250].
    #[arg(long)]
    exaggeration_iters: Option<usize>,
    /// RNG seed for the VP tree and the initialization [default: 42].
    #[arg(long)]
    seed: Option<u64>,
    /// Output coordinates CSV (id,label,y1..yd).
    #[arg(long)]
    output: PathBuf,
    /// Optional SVG scatter of the embedding.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Optional per-iteration KL history CSV.
    #[arg(long)]
    kl_history: Option<PathBuf>,
    /// JSON config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    /// Input CSV: header row, feature columns, optional id/label columns.
    #[arg(long)]
    input: PathBuf,
    /// Manifold the input data lives on.
    #[arg(long, value_enum)]
    manifold: ManifoldChoice,
    /// Project rows onto the manifold instead of validating them.
    #[arg(long)]
    project: bool,
    /// Number of principal components [default: 2].
    #[arg(long)]
    dim: Option<usize>,
    /// Output coordinates CSV (id,label,y1..yd).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// The original data CSV.
    #[arg(long)]
    input: PathBuf,
    /// Manifold the input data lives on [default: euclidean].
    #[arg(long, value_enum)]
    manifold: Option<ManifoldChoice>,
    /// Project input rows onto the manifold.
    #[arg(long)]
    project: bool,
    /// Embedding CSV produced by `embed` or `baseline`.
    #[arg(long)]
    embedding: PathBuf,
    /// Neighborhood size for both metrics [default: 10].
    #[arg(long)]
    k: Option<usize>,
    /// Target space the embedding lives on [default: euclidean].
    #[arg(long, value_enum)]
    target: Option<TargetChoice>,
    /// Similarity family for the KL score [default: student-t for
    /// euclidean targets, vmf for sphere targets].
    #[arg(long, value_enum)]
    family: Option<FamilyChoice>,
    /// Perplexity for the reference P of the KL score [default: 30].
    #[arg(long)]
    perplexity: Option<f64>,
}

#[derive(Args)]
struct IngestCovArgs {
    /// Time-series CSV: one row per step, one numeric column per variable,
    /// optional id/date column.
    #[arg(long)]
    input: PathBuf,
    /// Sliding window length [default: 20].
    #[arg(long)]
    window: Option<usize>,
    /// Output CSV of upper-triangle SPD rows.
    #[arg(long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Embed(args) => run_embed(args),
        Command::Baseline(args) => run_baseline(args),
        Command::Eval(args) => run_eval(args),
        Command::IngestCov(args) => run_ingest_cov(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn target_space(
    target: Option<TargetChoice>,
    family: Option<FamilyChoice>,
    dim: usize,
) -> Result<TargetSpace> {
    if dim == 0 {
        return Err(CliError::Usage("target dimension must be >= 1".into()));
    }
    let target = target.unwrap_or(TargetChoice::Euclidean);
    let manifold = match target {
        TargetChoice::Euclidean => Manifold::euclidean(dim)?,
        // S^dim lives in R^{dim+1}.
        TargetChoice::Sphere => Manifold::sphere(dim + 1)?,
    };
    let family = match family {
        Some(FamilyChoice::StudentT) => SimilarityFamily::StudentT,
        Some(FamilyChoice::Vmf) => SimilarityFamily::VonMisesFisher,
        Some(FamilyChoice::Brownian) => SimilarityFamily::Brownian,
        None => match target {
            TargetChoice::Euclidean => SimilarityFamily::StudentT,
            TargetChoice::Sphere => SimilarityFamily::VonMisesFisher,
        },
    };
    Ok(TargetSpace::new(manifold, family)?)
}

fn warn_unconverged(report: &CalibrationReport) {
    if !report.all_converged() {
        eprintln!(
            "warning: {} of {} rows did not reach the perplexity tolerance within the step budget",
            report.unconverged.len(),
            report.t.len()
        );
    }
}

fn build_affinities(
    data: &DatasetTable,
    perplexity: f64,
    sparse: bool,
    seed: u64,
) -> Result<riesne_core::affinity::AffinityMatrix> {
    let n = data.len();
    if !(perplexity >= 2.0) {
        return Err(CliError::Usage(format!("perplexity must be >= 2, got {perplexity}")));
    }
    let mode = if sparse {
        let tau = (3.0 * perplexity).floor() as usize;
        if tau > n - 1 {
            return Err(CliError::Usage(format!(
                "sparse mode needs floor(3*perplexity) = {tau} <= n-1 = {}",
                n - 1
            )));
        }
        PMode::Sparse { neighbors: None, seed }
    } else {
        PMode::Dense
    };
    let (p, report) = build_p(data, perplexity, mode)?;
    warn_unconverged(&report);
    Ok(p)
}

fn run_embed(args: EmbedArgs) -> Result<()> {
    let file: FileConfig = load_config(args.config.as_deref())?;
    let data = ingest::ingest_csv(&args.input, args.manifold, args.project)?;

    let perplexity = resolve(args.perplexity, file.perplexity, 30.0);
    let dim = resolve(args.dim, file.dim, 2);
    let sparse = args.sparse || file.sparse.unwrap_or(false);
    let seed = resolve(args.seed, file.seed, 42);
    let target = target_space(args.target, args.family, dim)?;

    let config = OptimizerConfig {
        iters: resolve(args.iters, file.iters, 1000),
        learning_rate: resolve(args.learning_rate, file.learning_rate, 200.0),
        momentum_early: resolve(args.momentum_early, file.momentum_early, 0.5),
        momentum_late: resolve(args.momentum_late, file.momentum_late, 0.8),
        exaggeration_factor: resolve(args.exaggeration_factor, file.exaggeration_factor, 12.0),
        exaggeration_iters: resolve(args.exaggeration_iters, file.exaggeration_iters, 250),
        bh_theta: resolve(args.theta, file.theta, 0.5),
        sphere_exact_exp: false,
        seed,
    };
    let p = build_affinities(&data, perplexity, sparse, seed)?;
    let result = optimize(&p, &target, &config)?;

    outputs::write_coords_csv(&args.output, data.ids(), data.labels(), result.state.coords())?;
    if let Some(svg) = &args.svg {
        outputs::write_svg(svg, target.manifold(), result.state.coords(), data.labels())?;
    }
    if let Some(hist) = &args.kl_history {
        outputs::write_kl_history_csv(hist, &result.kl_history)?;
    }
    if let Some(kl) = result.kl_history.last() {
        eprintln!(
            "embedded {} points in {} iterations, final KL {kl:.6}",
            data.len(),
            result.state.iteration
        );
    }
    Ok(())
}

fn run_baseline(args: BaselineArgs) -> Result<()> {
    let data = ingest::ingest_csv(&args.input, args.manifold, args.project)?;
    let dim = args.dim.unwrap_or(2);
    let model = riesne_core::tangent_pca::fit_tangent_pca(&data, dim)?;
    if !model.mean_converged() {
        eprintln!("warning: intrinsic mean did not converge; using the best iterate");
    }
    let projected = model.transform(&data)?;
    let coords: Vec<nalgebra::DVector<f64>> =
        (0..projected.nrows()).map(|i| projected.row(i).transpose()).collect();
    outputs::write_coords_csv(&args.output, data.ids(), data.labels(), &coords)?;
    eprintln!(
        "tangent PCA: {} points, explained variance {:?}",
        data.len(),
        model.explained_variance()
    );
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let manifold = args.manifold.unwrap_or(ManifoldChoice::Euclidean);
    let data = ingest::ingest_csv(&args.input, manifold, args.project)?;
    let (ids, emb_labels, coords) = ingest::read_embedding_csv(&args.embedding)?;
    if coords.len() != data.len() {
        return Err(CliError::Data(format!(
            "embedding has {} rows but the data has {}",
            coords.len(),
            data.len()
        )));
    }
    if ids != data.ids() {
        return Err(CliError::Data(
            "embedding ids do not match the input data ids".into(),
        ));
    }
    let k = args.k.unwrap_or(10);
    let dim = coords.first().map(|c| c.len()).unwrap_or(0);
    let intrinsic = match args.target.unwrap_or(TargetChoice::Euclidean) {
        TargetChoice::Euclidean => dim,
        TargetChoice::Sphere => dim.saturating_sub(1),
    };
    let target = target_space(args.target, args.family, intrinsic)?;
    let labels = emb_labels.or_else(|| data.labels().map(|l| l.to_vec()));
    let embedding = DatasetTable::from_rows(
        target.manifold(),
        &coords,
        false,
        labels,
        Some(ids),
    )
    .map_err(|e| CliError::Data(format!("embedding rows: {e}")))?;

    let knn_accuracy = match embedding.labels() {
        Some(_) => Some(metrics::knn_label_accuracy(&embedding, k)?),
        None => None,
    };
    let trust = metrics::trustworthiness(&data, &embedding, k)?;

    let perplexity = args.perplexity.unwrap_or(30.0);
    let p = build_affinities(&data, perplexity, data.len() > 2000, 0)?;
    let state = EmbeddingState::new(target.manifold(), embedding.points().iter().map(|p| p.coords().clone()).collect())?;
    let q = build_q(&state, &target)?;
    let final_kl = kl_cost(&p, &q)?;

    let json = serde_json::json!({
        "knn_accuracy": knn_accuracy,
        "trustworthiness": trust,
        "final_kl": final_kl,
    });
    println!("{}", serde_json::to_string_pretty(&json).expect("serializable"));
    Ok(())
}

fn run_ingest_cov(args: IngestCovArgs) -> Result<()> {
    let (series, ids) = ingest::read_series_csv(&args.input)?;
    let window = args.window.unwrap_or(20);
    let table = ingest::rolling_covariance(&series, &ids, window)?;
    ingest::write_spd_csv(&args.output, &table)?;
    eprintln!(
        "wrote {} covariance matrices ({}x{}) to {}",
        table.len(),
        table.manifold().ambient_dim(),
        table.manifold().ambient_dim(),
        args.output.display()
    );
    Ok(())
}
