//! The `opdr` command line.
//!
//! Exit codes: 0 on success, 2 on usage errors (including flag combinations
//! that fail validation), 1 on runtime errors. Data goes to files or stdout,
//! diagnostics to stderr. Output files are written atomically.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::fit::{fit_law, recommend_dim, FitResult, Sample};
use crate::harness::{read_sweep_csv, run_sweep, write_sweep_csv, DimGrid, SweepConfig, SweepMeta};
use crate::io::{load_vectors, save_vectors, write_atomic, Format};
use crate::knn::knn_table;
use crate::metrics::Metric;
use crate::opm::{accuracy, AccuracyReport};
use crate::reduce::{reduce, Method, ReducerConfig};
use crate::vectors::VectorSet;

#[derive(Debug, Parser)]
#[command(name = "opdr", version, about = "k-nearest-neighbor preservation under dimension reduction")]
pub struct Cli {
    /// Worker threads for parallel work (default: all available cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    L1,
    L2,
    Cosine,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::L1 => Metric::L1,
            MetricArg::L2 => Metric::L2,
            MetricArg::Cosine => Metric::Cosine,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Pca,
    Mds,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pca => Method::Pca,
            MethodArg::Mds => Method::Mds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Binary,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a CSV or binary vector file into an OPDR-VEC float64 file.
    Ingest {
        #[arg(long, value_enum)]
        format: FormatArg,
        input: PathBuf,
        output: PathBuf,
    },
    /// Reduce a vector file to a lower dimension.
    Reduce {
        #[arg(long, value_enum, default_value = "pca")]
        method: MethodArg,
        /// Target dimension.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        dim: u64,
        /// Input distance for MDS (ignored by PCA).
        #[arg(long, value_enum, default_value = "l2")]
        metric: MetricArg,
        input: PathBuf,
        output: PathBuf,
    },
    /// Neighbor-preservation accuracy of Y relative to X, as JSON.
    Eval {
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        #[arg(long, value_enum, default_value = "l2")]
        metric: MetricArg,
        x: PathBuf,
        y: PathBuf,
    },
    /// Accuracy over a grid of subsample sizes and target dimensions, as CSV.
    Sweep {
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        #[arg(long, value_enum, default_value = "l2")]
        metric: MetricArg,
        #[arg(long, value_enum, default_value = "pca")]
        method: MethodArg,
        /// Subsample sizes, strictly ascending.
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50,60,70,80")]
        sizes: Vec<usize>,
        /// Target dimensions: `all` or a comma-separated list.
        #[arg(long, default_value = "all")]
        dims: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        repeats: u64,
        input: PathBuf,
        output: PathBuf,
    },
    /// Fit accuracy = c0 * ln(n/m) + c1 to a sweep CSV, as JSON.
    Fit {
        input: PathBuf,
        /// Write the JSON here instead of stdout.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Recommend a target dimension from a fitted law, as JSON.
    Recommend {
        /// JSON written by `opdr fit`.
        #[arg(long)]
        fit: PathBuf,
        /// Target accuracy in (0, 1].
        #[arg(long)]
        accuracy: f64,
        /// Number of points.
        #[arg(long)]
        m: usize,
        /// Dimension of the original vectors.
        #[arg(long)]
        max_dim: usize,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn runtime(module: &str) -> impl Fn(&dyn std::fmt::Display) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{module}: {e}"))
}

/// Vector files ending in `.csv` are read as CSV, everything else as binary.
pub fn format_for(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Binary,
    }
}

fn load(path: &Path, format: Format) -> Result<VectorSet<f64>, CliError> {
    load_vectors(path, format).map_err(|e| runtime("io")(&e))
}

fn print_json<S: serde::Serialize>(value: &S) -> Result<(), CliError> {
    let text = serde_json::to_string(value).map_err(|e| runtime("json")(&e))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| runtime("io")(&e))
}

fn parse_dims(text: &str) -> Result<DimGrid, CliError> {
    if text.eq_ignore_ascii_case("all") {
        return Ok(DimGrid::All);
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("sweep: bad --dims entry '{s}'")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(DimGrid::List)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n as usize);
    }
    let pool = builder.build().map_err(|e| runtime("threads")(&e))?;
    pool.install(|| execute(cli.command))
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest { format, input, output } => {
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Binary => Format::Binary,
            };
            let vs = load(&input, format)?;
            save_vectors(&vs, &output, Format::Binary).map_err(|e| runtime("io")(&e))?;
            eprintln!("ingested {} points of dimension {}", vs.count(), vs.dim());
        }
        Command::Reduce {
            method,
            dim,
            metric,
            input,
            output,
        } => {
            let x = load(&input, format_for(&input))?;
            let cfg = ReducerConfig {
                method: method.into(),
                target_dim: dim as usize,
                metric: metric.into(),
            };
            let result = reduce(&x, &cfg).map_err(|e| runtime("reduce")(&e))?;
            if result.zero_padded > 0 {
                eprintln!(
                    "reduce: warning: {} trailing dimension(s) padded with zeros (too few positive eigenvalues)",
                    result.zero_padded
                );
            }
            save_vectors(&result.y, &output, format_for(&output)).map_err(|e| runtime("io")(&e))?;
        }
        Command::Eval { k, metric, x, y } => {
            let metric: Metric = metric.into();
            let xs = load(&x, format_for(&x))?;
            let ys = load(&y, format_for(&y))?;
            if xs.count() != ys.count() {
                return Err(CliError::Runtime(format!(
                    "eval: X has {} points but Y has {}",
                    xs.count(),
                    ys.count()
                )));
            }
            let tx = knn_table(&xs, k as usize, metric).map_err(|e| runtime("knn")(&e))?;
            let ty = knn_table(&ys, k as usize, metric).map_err(|e| runtime("knn")(&e))?;
            let report: AccuracyReport<f64> = accuracy(&tx, &ty).map_err(|e| runtime("opm")(&e))?;
            print_json(&report)?;
        }
        Command::Sweep {
            k,
            metric,
            method,
            sizes,
            dims,
            seed,
            repeats,
            input,
            output,
        } => {
            let cfg = SweepConfig {
                sample_sizes: sizes,
                dims: parse_dims(&dims)?,
                k: k as usize,
                metric: metric.into(),
                method: method.into(),
                seed,
                repeats: repeats as usize,
            };
            cfg.validate().map_err(|e| CliError::Usage(format!("sweep: {e}")))?;
            let x = load(&input, format_for(&input))?;
            let records = run_sweep(&x, &cfg).map_err(|e| runtime("sweep")(&e))?;
            let meta = SweepMeta {
                seed,
                dataset: input.display().to_string(),
                k: cfg.k,
            };
            write_atomic(&output, |w| write_sweep_csv(w, &records, &meta)).map_err(|e| runtime("io")(&e))?;
        }
        Command::Fit { input, output } => {
            let file = std::fs::File::open(&input).map_err(|e| runtime("fit")(&format!("{}: {e}", input.display())))?;
            let records = read_sweep_csv::<f64, _>(std::io::BufReader::new(file)).map_err(|e| runtime("fit")(&e))?;
            let samples: Vec<Sample<f64>> = records.iter().map(|r| r.sample()).collect();
            let fit = fit_law(&samples).map_err(|e| runtime("fit")(&e))?;
            match output {
                Some(path) => {
                    let text = serde_json::to_string(&fit).map_err(|e| runtime("json")(&e))?;
                    write_atomic(&path, |w| writeln!(w, "{text}")).map_err(|e| runtime("io")(&e))?;
                }
                None => print_json(&fit)?,
            }
        }
        Command::Recommend {
            fit,
            accuracy,
            m,
            max_dim,
        } => {
            let text = std::fs::read_to_string(&fit)
                .map_err(|e| runtime("recommend")(&format!("{}: {e}", fit.display())))?;
            let fit: FitResult<f64> = serde_json::from_str(&text).map_err(|e| runtime("recommend")(&e))?;
            let rec = recommend_dim(&fit, accuracy, m, max_dim).map_err(|e| runtime("recommend")(&e))?;
            print_json(&rec)?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            let (CliError::Usage(msg) | CliError::Runtime(msg)) = &err;
            eprintln!("opdr: {msg}");
            err.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn dims_parsing() {
        assert_eq!(parse_dims("all").unwrap(), DimGrid::All);
        assert_eq!(parse_dims("1, 4,9").unwrap(), DimGrid::List(vec![1, 4, 9]));
        assert!(matches!(parse_dims("1,x"), Err(CliError::Usage(_))));
    }

    #[test]
    fn zero_dim_is_usage_error() {
        let code = main_with_args(["opdr", "reduce", "--method", "pca", "--dim", "0", "a.vec", "b.vec"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn help_lists_defaults() {
        for sub in ["eval", "sweep", "reduce"] {
            let mut cmd = Cli::command();
            let help = cmd
                .find_subcommand_mut(sub)
                .unwrap()
                .render_long_help()
                .to_string();
            if sub != "reduce" {
                assert!(help.contains("[default: 5]"), "{sub}");
            }
            assert!(help.contains("[default: l2]"), "{sub}");
            if sub != "eval" {
                assert!(help.contains("[default: pca]"), "{sub}");
            }
        }
    }
}
