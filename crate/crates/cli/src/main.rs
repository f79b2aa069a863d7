use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use locgauss::assignment::{self, FilterParams};
use locgauss::io::{self, Format};
use locgauss::testkit::{gen_blobs, BlobSpec};
use locgauss::{run, ClusterConfig, DensityForm, Error, ModelArtifact};
use locgauss_bench::{scaling_run, to_csv, Geometry};

/// Overrides the worker count when `--threads` is absent.
const THREADS_ENV: &str = "LOCGAUSS_THREADS";

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NO_CLUSTERS: u8 = 3;

#[derive(Parser)]
#[command(name = "locgauss", version, about = "Local Gaussian clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a point file and write the model, labels and report.
    Fit(FitArgs),
    /// Label points with a previously saved model.
    Assign(AssignArgs),
    /// Generate Gaussian blobs as CSV.
    Gen(GenArgs),
    /// Time the pipeline over growing inputs and print a CSV table.
    Bench(BenchArgs),
}

#[derive(Args)]
struct FitArgs {
    /// CSV or JSON point file.
    #[arg(long)]
    input: PathBuf,
    /// Separation distance.
    #[arg(long)]
    ds: f64,
    /// Force the input format instead of guessing from the extension.
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    /// Seed count threshold.
    #[arg(long, default_value_t = 0)]
    l: usize,
    /// Convergence threshold for both loops.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 100)]
    max_iter_centroid: usize,
    #[arg(long, default_value_t = 50)]
    max_iter_sigma: usize,
    /// Drop points whose density is below this value.
    #[arg(long)]
    lp: Option<f64>,
    /// Drop this fraction of lowest-density points per cluster.
    #[arg(long)]
    lpct: Option<f64>,
    /// Drop points whose separation ratio is below this value.
    #[arg(long)]
    ls: Option<f64>,
    /// `standard` or `paper-literal`.
    #[arg(long, default_value = "standard")]
    density_form: DensityForm,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Defaults to `<input stem>.model.json` next to the input.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Defaults to `<input stem>.labels.csv` next to the input.
    #[arg(long)]
    labels_out: Option<PathBuf>,
    /// Full JSON report including step timings.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct AssignArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    #[arg(long)]
    labels_out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dimension of every blob.
    #[arg(long)]
    k: usize,
    /// Blobs as `MEAN:STD:COUNT` separated by `;`, MEAN comma-separated,
    /// e.g. `0,0:1:500;10,0:1:500`.
    #[arg(long)]
    clusters: String,
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV of generating blob per point.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated point counts.
    #[arg(long, value_delimiter = ',', default_values_t = [25_000usize, 50_000, 100_000, 200_000])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    clusters: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 10.0)]
    spacing: f64,
    #[arg(long, default_value_t = 1.0)]
    std: f64,
    /// Defaults to 0.45 × spacing.
    #[arg(long)]
    ds: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Write the table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s.to_ascii_lowercase().as_str() {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        other => Err(format!("unknown format `{other}`")),
    }
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoClusters => EXIT_NO_CLUSTERS,
            Error::InvalidParameter { .. } | Error::TooManySeeds { .. } => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn sibling(input: &Path, suffix: &str) -> PathBuf {
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("points");
    input.with_file_name(format!("{stem}{suffix}"))
}

fn thread_count(flag: Option<usize>) -> Result<usize, Failure> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            usage(format!(
                "{THREADS_ENV} must be a non-negative integer, got `{v}`"
            ))
        }),
        Err(_) => Ok(0),
    }
}

fn fit(args: FitArgs) -> Result<(), Failure> {
    let format = args
        .format
        .unwrap_or_else(|| Format::from_path(&args.input));
    let points = io::read_points(&args.input, format)?;
    let mut config = ClusterConfig::new(args.ds).with_epsilon(args.eps);
    config.min_count = args.l;
    config.max_iter_centroid = args.max_iter_centroid;
    config.max_iter_sigma = args.max_iter_sigma;
    config.density_form = args.density_form;
    config.filters = FilterParams {
        l_p: args.lp,
        l_pct: args.lpct,
        l_s: args.ls,
    };
    config.thread_count = thread_count(args.threads)?;
    config.validate()?;

    let result = run(&points, &config)?;
    let model_out = args
        .model_out
        .unwrap_or_else(|| sibling(&args.input, ".model.json"));
    let labels_out = args
        .labels_out
        .unwrap_or_else(|| sibling(&args.input, ".labels.csv"));
    ModelArtifact::from_clustering(&result, &config).save(&model_out)?;
    io::write_labels(&labels_out, &result.labeling)?;
    if let Some(path) = &args.report_out {
        let json = serde_json::to_string_pretty(&result.report).map_err(Error::from)?;
        std::fs::write(path, json).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
    }

    let s = &result.report.summary;
    println!(
        "{} points, {} seeds ({} after prune), {} clusters, {} dropped, {:.1} ms",
        s.points,
        s.seeds,
        s.after_prune,
        s.clusters,
        result.labeling.dropped(),
        result.report.total_millis()
    );
    for (i, (m, st)) in result.models.iter().zip(&s.cluster_stats).enumerate() {
        let mu: Vec<String> = m.mu().iter().map(|v| format!("{v:.4}")).collect();
        println!(
            "  cluster {i}: mu=({}) N_c={} T_mu={} T_sigma={}{}",
            mu.join(", "),
            st.local_count,
            st.centroid_iterations,
            st.sigma_iterations,
            if st.sigma_converged {
                ""
            } else {
                " (sigma not converged)"
            }
        );
    }
    println!("model: {}", model_out.display());
    println!("labels: {}", labels_out.display());
    Ok(())
}

fn assign(args: AssignArgs) -> Result<(), Failure> {
    let artifact = ModelArtifact::load(&args.model)?;
    let models = artifact.models()?;
    let format = args
        .format
        .unwrap_or_else(|| Format::from_path(&args.input));
    let points = io::read_points(&args.input, format)?;
    let mut labeling = assignment::assign_all(&points, &models, artifact.config.density_form)?;
    assignment::apply_filters(&mut labeling, &artifact.config.filters);
    io::write_labels(&args.labels_out, &labeling)?;
    Ok(())
}

fn parse_blobs(spec: &str, k: usize) -> Result<Vec<BlobSpec>, Failure> {
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|blob| {
            let parts: Vec<&str> = blob.trim().split(':').collect();
            let [mean, std, count] = parts[..] else {
                return Err(usage(format!("blob `{blob}` is not MEAN:STD:COUNT")));
            };
            let mean: Vec<f64> = mean
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| usage(format!("bad mean in `{blob}`")))?;
            if mean.len() != k {
                return Err(usage(format!(
                    "blob `{blob}` has {} coordinates, expected {k}",
                    mean.len()
                )));
            }
            let std: f64 = std
                .trim()
                .parse()
                .map_err(|_| usage(format!("bad std in `{blob}`")))?;
            if !(std > 0.0 && std.is_finite()) {
                return Err(usage(format!("std must be positive in `{blob}`")));
            }
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| usage(format!("bad count in `{blob}`")))?;
            Ok(BlobSpec::isotropic(mean, std, count))
        })
        .collect()
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    if args.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let specs = parse_blobs(&args.clusters, args.k)?;
    if specs.is_empty() {
        return Err(usage("--clusters names no blobs"));
    }
    let (points, truth) = gen_blobs(args.seed, &specs).map_err(|e| usage(e.to_string()))?;
    io::write_points(&args.out, &points)?;
    if let Some(path) = &args.truth_out {
        let mut out = String::from("point_id,blob\n");
        for (i, t) in truth.iter().enumerate() {
            out.push_str(&format!("{i},{t}\n"));
        }
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    if args.sizes.is_empty() || args.clusters == 0 || args.k == 0 {
        return Err(usage(
            "--sizes, --clusters and --k must be non-empty/positive",
        ));
    }
    let geometry = Geometry {
        clusters: args.clusters,
        k: args.k,
        spacing: args.spacing,
        std: args.std,
    };
    let config = ClusterConfig::new(args.ds.unwrap_or_else(|| geometry.default_ds()))
        .with_threads(args.threads);
    let rows = scaling_run(&args.sizes, &geometry, &config, args.seed)?;
    let table = to_csv(&rows);
    match &args.out {
        Some(path) => std::fs::write(path, table).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?,
        None => print!("{table}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Fit(a) => fit(a),
        Command::Assign(a) => assign(a),
        Command::Gen(a) => gen(a),
        Command::Bench(a) => bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
