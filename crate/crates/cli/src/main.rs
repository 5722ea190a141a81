//! Command-line front end: dataset generation, LID estimation, surrogate
//! attack directions, the perturbation sweep, and sweep-file summaries.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lidbounds::dataset::{
    generate_synthetic, load_cifar10, load_csv, load_mnist, write_csv, Dataset, SynthKind,
    SynthSpec,
};
use lidbounds::experiment::{
    aggregate_by_delta, direction_stats, emit_csv, emit_plotdata, read_sweep_csv, run_sweep,
    select_queries, working_sample, DirectionSource, ExperimentConfig,
};
use lidbounds::lid::mle_lid;
use lidbounds::metric::knn;
use lidbounds::perturb::{read_directions_csv, train_surrogate, write_directions_csv};
use lidbounds::{Error, Result};

#[derive(Parser)]
#[command(
    name = "lidbounds",
    version,
    about = "Local intrinsic dimensionality bounds under adversarial perturbations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic low-dimensional dataset and save it as CSV
    Synth(SynthArgs),
    /// Estimate LID at seeded query points and print a summary
    Lid(LidArgs),
    /// Train the surrogate classifier and export attack directions
    Attack(AttackArgs),
    /// Run the full perturbation sweep and write per-row CSV
    Sweep(SweepArgs),
    /// Summarize an existing sweep CSV
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// Directory of IDX files (t10k-* or train-* image/label pairs)
    Mnist,
    /// CIFAR-10 binary batch file, or a directory of *.bin batches
    Cifar10,
    /// Headerless numeric CSV, one point per row
    Csv,
    /// Generate synthetic data in-process instead of loading
    Synth,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset location; not used with --format synth
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Format,
    /// Treat the last CSV column as integer class labels
    #[arg(long, default_value_t = false)]
    csv_labels: bool,
    /// Working sample size: subsample loaded data, or synthetic count
    #[arg(long)]
    n: Option<usize>,
    /// Synthetic manifold dimension
    #[arg(long, default_value_t = 4)]
    intrinsic_dim: usize,
    /// Synthetic embedding dimension
    #[arg(long, default_value_t = 50)]
    ambient_dim: usize,
    /// Synthetic kind: uniform-ball or gaussian
    #[arg(long, default_value = "uniform-ball")]
    kind: String,
}

impl DataArgs {
    fn path(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| Error::Argument("--dataset is required for this format".into()))
    }

    /// Loads (or generates) the full dataset. `seed` feeds only the
    /// synthetic generator; subsampling happens later in each command.
    fn load(&self, seed: u64) -> Result<Dataset> {
        match self.format {
            Format::Mnist => {
                let dir = self.path()?;
                load_idx_dir(dir)
            }
            Format::Cifar10 => {
                let path = self.path()?;
                let batches = cifar_batches(path)?;
                load_cifar10(&batches)
            }
            Format::Csv => load_csv(self.path()?, self.csv_labels),
            Format::Synth => {
                let spec = SynthSpec {
                    intrinsic_dim: self.intrinsic_dim,
                    ambient_dim: self.ambient_dim,
                    n: self.n.unwrap_or(5000),
                    kind: self.kind.parse::<SynthKind>()?,
                    seed,
                };
                generate_synthetic(&spec)
            }
        }
    }

    /// Subsample size to apply after loading; synthetic data is already
    /// generated at the requested size.
    fn subsample_size(&self) -> Option<usize> {
        match self.format {
            Format::Synth => None,
            _ => self.n,
        }
    }
}

/// Finds an IDX image/label pair in `dir`, preferring the evaluation
/// split's conventional file names over the training split's.
fn load_idx_dir(dir: &Path) -> Result<Dataset> {
    let candidates = [
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    ];
    for (images, labels) in candidates {
        let ip = dir.join(images);
        let lp = dir.join(labels);
        if ip.is_file() && lp.is_file() {
            return load_mnist(&ip, &lp);
        }
    }
    Err(Error::Argument(format!(
        "no IDX pair (t10k-* or train-*) found in {}",
        dir.display()
    )))
}

fn cifar_batches(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut batches: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "bin"))
        .collect();
    batches.sort();
    if batches.is_empty() {
        return Err(Error::Argument(format!(
            "no .bin batches found in {}",
            path.display()
        )));
    }
    Ok(batches)
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    intrinsic_dim: usize,
    #[arg(long, default_value_t = 50)]
    ambient_dim: usize,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value = "uniform-ball")]
    kind: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LidArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 100)]
    k: usize,
    /// Query count; defaults to every point
    #[arg(long)]
    nq: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional per-query CSV output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    /// Queries to export directions for; defaults to every point
    #[arg(long)]
    nq: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV of unit directions, one row per query
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, default_value_t = 50)]
    nq: usize,
    /// Comma-separated ascending perturbation sizes
    #[arg(
        long,
        value_delimiter = ',',
        default_values_t = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5]
    )]
    delta_grid: Vec<f64>,
    /// Candidates per eta feasibility grid
    #[arg(long, default_value_t = 50)]
    eta_grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-row CSV output path
    #[arg(long)]
    out: PathBuf,
    /// Optional per-delta aggregate output
    #[arg(long)]
    plot_out: Option<PathBuf>,
    /// CSV of precomputed unit directions, one per query, in query order
    #[arg(long)]
    directions: Option<PathBuf>,
    /// Use seeded random directions instead of the surrogate
    #[arg(long, default_value_t = false)]
    random_directions: bool,
    /// Surrogate training epochs
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    /// Surrogate learning rate
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
}

#[derive(Args)]
struct StatsArgs {
    /// Sweep CSV produced by the sweep subcommand
    #[arg(long = "in")]
    input: PathBuf,
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        intrinsic_dim: args.intrinsic_dim,
        ambient_dim: args.ambient_dim,
        n: args.n,
        kind: args.kind.parse::<SynthKind>()?,
        seed: args.seed,
    };
    let data = generate_synthetic(&spec)?;
    write_csv(&data, &args.out, false)?;
    println!(
        "wrote {} points of intrinsic dimension {} in ambient dimension {} to {}",
        data.len(),
        args.intrinsic_dim,
        args.ambient_dim,
        args.out.display()
    );
    Ok(())
}

fn cmd_lid(args: &LidArgs) -> Result<()> {
    let data = args.data.load(args.seed)?;
    let sample = working_sample(&data, args.data.subsample_size(), args.seed)?;
    let queries = match args.nq {
        Some(nq) => select_queries(sample.len(), nq, args.seed)?,
        None => (0..sample.len()).collect(),
    };
    let mut estimates = Vec::with_capacity(queries.len());
    for &qi in &queries {
        let neighbors = knn(&sample, sample.point(qi), args.k, Some(qi))?;
        let est = mle_lid(&neighbors)?;
        estimates.push((qi, est));
    }
    if let Some(out) = &args.out {
        let mut writer = csv::Writer::from_path(out)
            .map_err(|e| Error::io(out, std::io::Error::new(std::io::ErrorKind::Other, e)))?;
        writer
            .write_record(["query_index", "k", "lid_estimate", "r_max"])
            .map_err(|e| Error::format(out, e.to_string()))?;
        for (qi, est) in &estimates {
            writer
                .write_record([
                    qi.to_string(),
                    est.k.to_string(),
                    est.value.to_string(),
                    est.r_max.to_string(),
                ])
                .map_err(|e| Error::format(out, e.to_string()))?;
        }
        writer.flush().map_err(|e| Error::io(out, e))?;
    }
    let mut values: Vec<f64> = estimates.iter().map(|(_, e)| e.value).collect();
    values.sort_by(f64::total_cmp);
    let median = values[values.len() / 2];
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    println!(
        "dataset={} n={} k={} queries={} median={:.4} mean={:.4} min={:.4} max={:.4}",
        sample.name(),
        sample.len(),
        args.k,
        values.len(),
        median,
        mean,
        values[0],
        values[values.len() - 1]
    );
    Ok(())
}

fn cmd_attack(args: &AttackArgs) -> Result<()> {
    let data = args.data.load(args.seed)?;
    let sample = working_sample(&data, args.data.subsample_size(), args.seed)?;
    let model = train_surrogate(&sample, args.epochs, args.lr, args.seed)?;
    let accuracy = model.accuracy(&sample)?;
    let queries = match args.nq {
        Some(nq) => select_queries(sample.len(), nq, args.seed)?,
        None => (0..sample.len()).collect(),
    };
    let mut directions = Vec::with_capacity(queries.len());
    for &qi in &queries {
        let label = sample.label(qi).ok_or(Error::MissingLabels)?;
        directions.push(model.attack_direction(sample.point(qi), label)?);
    }
    write_directions_csv(&args.out, &directions)?;
    println!(
        "trained on {} points, accuracy {:.4}; wrote {} directions to {}",
        sample.len(),
        accuracy,
        directions.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let data = args.data.load(args.seed)?;
    let direction_source = if let Some(path) = &args.directions {
        DirectionSource::Provided(read_directions_csv(path, data.dim())?)
    } else if args.random_directions {
        DirectionSource::Random
    } else {
        DirectionSource::Surrogate {
            epochs: args.epochs,
            learning_rate: args.lr,
        }
    };
    let config = ExperimentConfig {
        subsample: args.data.subsample_size(),
        k: args.k,
        n_q: args.nq,
        delta_grid: args.delta_grid.clone(),
        eta_grid_size: args.eta_grid,
        seed: args.seed,
        direction_source,
    };
    let rows = run_sweep(&data, &config)?;
    emit_csv(&rows, &args.out)?;
    if let Some(plot) = &args.plot_out {
        emit_plotdata(&rows, plot)?;
    }
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    if let Ok(stats) = direction_stats(&rows) {
        println!(
            "directions: toward {:.4} away {:.4} boundary {:.4} (classified {})",
            stats.toward, stats.away, stats.boundary, stats.n
        );
    }
    print_aggregates(&rows);
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let rows = read_sweep_csv(&args.input)?;
    println!("rows: {}", rows.len());
    let stats = direction_stats(&rows)?;
    println!(
        "directions: toward {:.4} away {:.4} boundary {:.4} (classified {})",
        stats.toward, stats.away, stats.boundary, stats.n
    );
    print_aggregates(&rows);
    Ok(())
}

fn print_aggregates(rows: &[lidbounds::experiment::SweepRow]) {
    let fmt = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
    println!("delta  rows  mean_lower  mean_lid  mean_upper");
    for p in aggregate_by_delta(rows) {
        println!(
            "{:<6} {:<5} {:<11} {:<9} {}",
            p.delta,
            p.n_rows,
            fmt(p.mean_lower),
            fmt(p.mean_lid),
            fmt(p.mean_upper)
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Lid(args) => cmd_lid(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => ExitCode::from(3),
                Error::Argument(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
