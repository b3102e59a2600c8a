use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smoothlab::experiment::{
    run, write_outputs, ExperimentConfig, ExperimentKind, LoQueryFile, MaskSpec, MatrixSpec, NoiseSpec, Precision,
    WitnessFile,
};
use smoothlab::gap::{discretize_rank1, verify_discretization, DiscretizationResult, Gap};
use smoothlab::witness::greedy_net;
use smoothlab::{Error, Result};

/// Smoothed analysis of linear algebra under discrete noise.
#[derive(Debug, Parser)]
#[command(name = "smoothlab", version)]
struct Cli {
    /// TOML config; `[<experiment>]` sections override the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output base path; experiments write `<out>.csv` and `<out>.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tail of the inverse norm, P(|(M+N)^-1| >= x).
    Tail(ExperimentArgs),
    /// P(kappa(M+N) >= n^B) for a sweep of B.
    CondTail(ExperimentArgs),
    /// Exact singularity probability by enumeration.
    Singularity(ExperimentArgs),
    /// Gaussian elimination error against eps * kappa.
    GeCheck(ExperimentArgs),
    /// Conditioning of all leading minors.
    Minors(ExperimentArgs),
    /// Condition tail with frozen entries.
    Frozen(ExperimentArgs),
    /// Exact concentration of a query file against its Fourier bound.
    LoCheck { file: PathBuf },
    /// Check a discretization of a progression, or build one with --r0/--s.
    GapVerify {
        gap: PathBuf,
        result: Option<PathBuf>,
        #[arg(long, requires = "s")]
        r0: Option<u64>,
        #[arg(long, requires = "r0")]
        s: Option<u64>,
    },
    /// Greedy epsilon-net on the unit sphere, one point per CSV row.
    Net {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        eps: f64,
        /// Rejections in a row before the net is declared maximal.
        #[arg(long, default_value_t = 100_000)]
        patience: u64,
    },
    /// Classify a witness file as poor, rich-singular or rich-nonsingular.
    Classify { file: PathBuf },
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Matrix sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<u64>,
    /// gaussian[:sigma], bernoulli, lazy:<alpha>, dgauss:<radius> or file:<path>.
    #[arg(long)]
    noise: Option<NoiseSpec>,
    /// zero, identity, graded:<C>, ones, dup, band:<w>:<d>:<o> or file:<path>.
    #[arg(long)]
    matrix: Option<MatrixSpec>,
    /// none, zeros, all, row:<i> or file:<path>.
    #[arg(long)]
    mask: Option<MaskSpec>,
    /// Exponents B, comma separated.
    #[arg(long, value_delimiter = ',')]
    b_values: Option<Vec<f64>>,
    /// single, double or exact.
    #[arg(long)]
    precision: Option<Precision>,
    #[arg(long)]
    compare_gaussian: bool,
}

fn experiment_config(cli: &Cli, kind: ExperimentKind, args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path, kind)?,
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.threads {
        cfg.threads = v;
    }
    if let Some(v) = &cli.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = &args.n {
        cfg.n = v.clone();
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = &args.noise {
        cfg.noise = v.clone();
    }
    if let Some(v) = &args.matrix {
        cfg.matrix = v.clone();
    }
    if let Some(v) = &args.mask {
        cfg.mask = v.clone();
    }
    if let Some(v) = &args.b_values {
        cfg.b_values = v.clone();
    }
    if let Some(v) = args.precision {
        cfg.precision = v;
    }
    cfg.compare_gaussian |= args.compare_gaussian;
    cfg.validate()?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Print to stdout, or write to `--out` when given.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_experiment(cli: &Cli, kind: ExperimentKind, args: &ExperimentArgs) -> Result<()> {
    let cfg = experiment_config(cli, kind, args)?;
    log::info!(
        "running {kind} with n = {:?}, {} trials, seed {}",
        cfg.n,
        cfg.trials,
        cfg.seed
    );
    let out = run(&cfg)?;
    match &cfg.out {
        Some(base) => {
            let (csv, json) = write_outputs(&out, base)?;
            eprintln!("wrote {} and {}", csv.display(), json.display());
            println!("{}", out.json());
        }
        None => print!("{}", out.csv()),
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let kind = match &cli.command {
        Command::Tail(a) => Some((ExperimentKind::Tail, a)),
        Command::CondTail(a) => Some((ExperimentKind::CondTail, a)),
        Command::Singularity(a) => Some((ExperimentKind::Singularity, a)),
        Command::GeCheck(a) => Some((ExperimentKind::GeCheck, a)),
        Command::Minors(a) => Some((ExperimentKind::Minors, a)),
        Command::Frozen(a) => Some((ExperimentKind::Frozen, a)),
        _ => None,
    };
    if let Some((kind, args)) = kind {
        return run_experiment(cli, kind, args);
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::LoCheck { file } => {
            let row = LoQueryFile::parse(&read(file)?)?.evaluate()?;
            emit(
                out,
                &format!("{}\n{}\n", smoothlab::experiment::LoCheckRow::CSV_HEADER, row.to_csv()),
            )
        }
        Command::GapVerify { gap, result, r0, s } => {
            let p = Gap::parse(&read(gap)?)?;
            let (text, d) = match (result, r0, s) {
                (Some(path), _, _) => (String::new(), DiscretizationResult::parse(&read(path)?)?),
                (None, Some(r0), Some(s)) => {
                    let d = discretize_rank1(&p, *r0, *s)?;
                    (d.to_text(), d)
                }
                _ => return Err(Error::Validation("give a result file or both --r0 and --s".into())),
            };
            let c = verify_discretization(&p, &d)?;
            let flag = |b: bool| u8::from(b);
            emit(
                out,
                &format!(
                    "{text}scale,smallness,sparseness,covering\n{},{},{},{}\n",
                    flag(c.scale),
                    flag(c.smallness),
                    flag(c.sparseness),
                    flag(c.covering)
                ),
            )
        }
        Command::Net { dim, eps, patience } => {
            let net = greedy_net(*dim, *eps, cli.seed.unwrap_or(0), *patience)?;
            log::info!(
                "{} points after {} proposals; uncovered fraction <= {:e}",
                net.points.len(),
                net.proposals,
                net.uncovered_bound
            );
            emit(out, &net.to_csv())
        }
        Command::Classify { file } => {
            let f = WitnessFile::parse(&read(file)?)?;
            let r = f.classify()?;
            emit(
                out,
                &format!(
                    "class,sup,rich_threshold,large_count,count_threshold\n{},{:e},{:e},{},{}\n",
                    r.class, r.sup, r.rich_threshold, r.large_count, r.count_threshold
                ),
            )
        }
        _ => unreachable!("experiments handled above"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
