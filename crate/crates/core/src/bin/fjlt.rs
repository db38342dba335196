use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fjlt::bench::{bench_csv, run_bench, BenchConfig};
use fjlt::dataset::{generate, pad, DataFormat, DatasetKind, VectorDataset};
use fjlt::experiments::{
    embed, replay, run, DistortConfig, EAlphaConfig, ExperimentConfig, RipConfig, SplitConfig, TransformChoice,
};
use fjlt::report::Report;
use fjlt::transform::RowSampling;

#[derive(Parser)]
#[command(name = "fjlt", version, about = "Fast Johnson-Lindenstrauss transform experiments")]
struct Cli {
    /// Base seed; every random draw derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output path (stdout for reports and tables when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dataset output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Bin)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Bin,
    Csv,
}

impl From<Format> for DataFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Bin => DataFormat::Bin,
            Format::Csv => DataFormat::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen {
        /// unit-sphere | sparse(R) | clustered | near-duplicate
        #[arg(long)]
        kind: DatasetKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
    },
    /// Zero-pad a dataset to the next power-of-two dimension.
    Pad {
        #[arg(long)]
        input: PathBuf,
    },
    /// Embed a dataset into k dimensions.
    Embed {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        transform: TransformArgs,
    },
    /// Time the fast transform against a dense multiply.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [16384usize, 32768, 65536, 131072, 262144])]
        n_list: Vec<usize>,
        /// k = n / k_divisor.
        #[arg(long, default_value_t = 4)]
        k_divisor: usize,
        #[arg(long, default_value_t = 21)]
        repeats: usize,
        #[arg(long, default_value_t = 3)]
        dense_repeats: usize,
        #[arg(long, default_value_t = 65536)]
        dense_max_n: usize,
    },
    /// Run an estimator experiment and write a report.
    #[command(subcommand)]
    Verify(Verify),
    /// Rerun the experiment recorded in a report's header.
    Replay { report: PathBuf },
}

#[derive(Args, Clone)]
struct TransformArgs {
    /// Ambient dimension (taken from the dataset where one is given).
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Target dimension; derived from --points/--delta/--c-k when omitted.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1024)]
    points: u64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    c_k: f64,
    #[arg(long, default_value_t = 1.0)]
    c_r: f64,
    /// Select every row once (k = n).
    #[arg(long)]
    full: bool,
    /// Draw distinct rows.
    #[arg(long)]
    without_replacement: bool,
}

impl TransformArgs {
    fn choice(&self) -> TransformChoice {
        TransformChoice {
            n: self.n,
            k: self.k,
            points: self.points,
            delta: self.delta,
            c_k: self.c_k,
            c_r: self.c_r,
            full_selection: self.full,
            sampling: if self.without_replacement {
                RowSampling::WithoutReplacement
            } else {
                RowSampling::WithReplacement
            },
        }
    }
}

#[derive(Subcommand)]
enum Verify {
    /// Restricted-isometry constant by support enumeration or sampling.
    Rip {
        #[command(flatten)]
        transform: TransformArgs,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        phi_seeds: usize,
    },
    /// Lower bound on the deviation supremum over B2 ∩ αB∞.
    Ealpha {
        #[command(flatten)]
        transform: TransformArgs,
        #[arg(long)]
        alpha: Option<f64>,
        /// α = 1/sqrt(r) when --alpha is absent (r from the formula when both are).
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, default_value_t = 32)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        ascent_iters: usize,
        #[arg(long, default_value_t = 1)]
        phi_seeds: usize,
    },
    /// Squared-norm distortion over a dataset.
    Distort {
        #[command(flatten)]
        transform: TransformArgs,
        #[arg(long)]
        data: PathBuf,
        /// Measure M sampled difference vectors instead of the vectors themselves.
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Zero-mean check of the heavy/light cross term.
    Cross {
        #[command(flatten)]
        transform: TransformArgs,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 10)]
        vectors: usize,
    },
    /// Median-vs-RMS and tail behaviour of the light part.
    Conc {
        #[command(flatten)]
        transform: TransformArgs,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 20)]
        vectors: usize,
    },
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn require_out(out: &Option<PathBuf>, what: &str) -> Result<PathBuf, String> {
    out.clone().ok_or_else(|| format!("{what} needs --out"))
}

fn emit_report(report: &Report, out: &Option<PathBuf>) -> Result<bool, String> {
    match out {
        Some(path) => {
            report.write(path).map_err(|e| e.to_string())?;
        }
        None => print!("{}", report.to_text()),
    }
    for f in &report.failures {
        eprintln!("validation failed: {f}");
    }
    Ok(report.passed())
}

fn verify_config(v: Verify, seed: u64) -> Result<ExperimentConfig, String> {
    Ok(match v {
        Verify::Rip { transform, r, budget, phi_seeds } => {
            ExperimentConfig::Rip(RipConfig { transform: transform.choice(), r, budget, phi_seeds, seed })
        }
        Verify::Ealpha { transform, alpha, r, samples, ascent_iters, phi_seeds } => ExperimentConfig::Ealpha(EAlphaConfig {
            transform: transform.choice(),
            alpha,
            r,
            samples,
            ascent_iters,
            phi_seeds,
            seed,
        }),
        Verify::Distort { transform, data, pairs } => {
            let n = VectorDataset::load(&data).map_err(|e| format!("{}: {e}", data.display()))?.n();
            let mut choice = transform.choice();
            choice.n = n;
            ExperimentConfig::Distort(DistortConfig { transform: choice, data, pairs, seed })
        }
        Verify::Cross { transform, r, trials, vectors } => {
            ExperimentConfig::Cross(SplitConfig { transform: transform.choice(), r, trials, vectors, seed })
        }
        Verify::Conc { transform, r, trials, vectors } => {
            ExperimentConfig::Conc(SplitConfig { transform: transform.choice(), r, trials, vectors, seed })
        }
    })
}

fn execute(cli: Cli) -> Result<bool, String> {
    let err = |e: fjlt::Error| e.to_string();
    match cli.command {
        Command::Gen { kind, n, count } => {
            let out = require_out(&cli.out, "gen")?;
            let data = generate(kind, n, count, cli.seed).map_err(err)?;
            data.save(&out, cli.format.into()).map_err(err)?;
        }
        Command::Pad { input } => {
            let out = require_out(&cli.out, "pad")?;
            let data = VectorDataset::load(&input).map_err(err)?;
            let (padded, original_n) = pad(&data);
            padded.save(&out, cli.format.into()).map_err(err)?;
            let meta = format!("original_n = {original_n}\nn = {}\ncount = {}\n", padded.n(), padded.count());
            std::fs::write(with_suffix(&out, ".meta"), meta).map_err(|e| e.to_string())?;
        }
        Command::Embed { input, transform } => {
            let out = require_out(&cli.out, "embed")?;
            let data = VectorDataset::load(&input).map_err(err)?;
            let choice = TransformChoice { n: data.n(), ..transform.choice() };
            let (embedded, meta) = embed(&data, &choice, cli.seed).map_err(err)?;
            embedded.save(&out, cli.format.into()).map_err(err)?;
            std::fs::write(with_suffix(&out, ".meta"), meta.to_text()).map_err(|e| e.to_string())?;
            if !choice.full_selection {
                let t = choice.build(cli.seed).map_err(err)?;
                std::fs::write(with_suffix(&out, ".transform"), t.to_bytes()).map_err(|e| e.to_string())?;
            }
        }
        Command::Bench { n_list, k_divisor, repeats, dense_repeats, dense_max_n } => {
            let cfg = BenchConfig { n_list, k_divisor, repeats, dense_repeats, dense_max_n, seed: cli.seed, ..Default::default() };
            let table = bench_csv(&run_bench(&cfg).map_err(err)?);
            match &cli.out {
                Some(p) => std::fs::write(p, table).map_err(|e| e.to_string())?,
                None => print!("{table}"),
            }
        }
        Command::Verify(v) => {
            let cfg = verify_config(v, cli.seed)?;
            let report = run(&cfg).map_err(err)?;
            return emit_report(&report, &cli.out);
        }
        Command::Replay { report } => {
            let text = std::fs::read_to_string(&report).map_err(|e| format!("{}: {e}", report.display()))?;
            let rerun = replay(&text).map_err(err)?;
            return emit_report(&rerun, &cli.out);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
