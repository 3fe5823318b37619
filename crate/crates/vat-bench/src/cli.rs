//! The `vat` command line: generate synthetic instances, run configured
//! benchmark sweeps, and inspect tensor files.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::{read_tensors, tensors_from_instance, write_tensors};
use crate::run::run;
use crate::synth::{generate_synthetic, QkDist, SyntheticSpec, VDist};

#[derive(Parser, Debug)]
#[command(
    name = "vat",
    about = "Kernel attention approximation benchmarks",
    version
)]
struct Cli {
    /// Seed override for generation and randomized approximators.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override for reports.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker thread count. Must not change any numeric output.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic instance and write it as a VAT1 tensor file.
    Gen(GenArgs),
    /// Execute a run config and emit CSV/JSON reports.
    Run(RunArgs),
    /// Execute a run config with the r sweep replaced from the command line.
    Sweep(SweepArgs),
    /// Print shape and value statistics for a tensor file.
    Inspect(InspectArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum QkMode {
    Gaussian,
    Clustered,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum VMode {
    Gaussian,
    HeavyTailed,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Sequence length.
    #[arg(long = "L")]
    l: usize,

    /// Vector dimension.
    #[arg(long = "d")]
    d: usize,

    /// Query/key distribution.
    #[arg(long, value_enum, default_value = "gaussian")]
    mode: QkMode,

    /// Scale for gaussian queries/keys.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,

    /// Cluster count for clustered queries/keys.
    #[arg(long, default_value_t = 8)]
    n_clusters: usize,

    /// Within-cluster noise scale.
    #[arg(long, default_value_t = 0.05)]
    intra_scale: f64,

    /// Value distribution.
    #[arg(long, value_enum, default_value = "gaussian")]
    v_mode: VMode,

    /// Scale for gaussian values.
    #[arg(long, default_value_t = 1.0)]
    v_scale: f64,

    /// Pareto shape for heavy-tailed value norms.
    #[arg(long, default_value_t = 1.5)]
    pareto_shape: f64,

    /// Restrict every query to keys at or before its own position.
    #[arg(long)]
    causal: bool,

    /// Output tensor file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run config path.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON run config path.
    #[arg(long)]
    config: PathBuf,

    /// Comma-separated r values overriding the config's sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    r_list: Vec<usize>,
}

#[derive(Args, Debug)]
struct InspectArgs {
    /// Tensor file to summarize.
    file: PathBuf,
}

/// Parse and execute; returns the process exit code. Usage problems exit 2,
/// computation failures exit 1.
pub fn main_with(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };

    let threads = cli.threads;
    let outcome = with_thread_pool(threads, || dispatch(&cli));
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            // unreadable inputs and bad configs are usage errors
            match err {
                crate::error::BenchError::ConfigIo { .. }
                | crate::error::BenchError::ConfigParse(_) => 2,
                _ => 1,
            }
        }
    }
}

fn with_thread_pool<T>(threads: Option<usize>, body: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match threads {
        None => body(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(body),
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(args) => gen(args, cli.seed),
        Command::Run(args) => {
            let mut config = RunConfig::load(&args.config)?;
            apply_overrides(&mut config, cli);
            let outcome = run(&config)?;
            println!("wrote {}", outcome.csv_path.display());
            println!("wrote {}", outcome.json_path.display());
            Ok(())
        }
        Command::Sweep(args) => {
            let mut config = RunConfig::load(&args.config)?;
            config.r_values = args.r_list.clone();
            apply_overrides(&mut config, cli);
            let outcome = run(&config)?;
            println!("wrote {}", outcome.csv_path.display());
            println!("wrote {}", outcome.json_path.display());
            Ok(())
        }
        Command::Inspect(args) => inspect(args),
    }
}

fn apply_overrides(config: &mut RunConfig, cli: &Cli) {
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        config.out_dir = dir.clone();
    }
}

fn gen(args: &GenArgs, seed: Option<u64>) -> Result<()> {
    let qk = match args.mode {
        QkMode::Gaussian => QkDist::Gaussian { scale: args.scale },
        QkMode::Clustered => QkDist::Clustered {
            n_clusters: args.n_clusters,
            intra_scale: args.intra_scale,
        },
    };
    let v = match args.v_mode {
        VMode::Gaussian => VDist::Gaussian {
            scale: args.v_scale,
        },
        VMode::HeavyTailed => VDist::HeavyTailed {
            shape: args.pareto_shape,
        },
    };
    let spec = SyntheticSpec {
        l: args.l,
        d: args.d,
        qk,
        v,
        causal: args.causal,
        seed: seed.unwrap_or(0),
    };
    let inst = generate_synthetic(&spec)?;
    write_tensors(&args.out, &tensors_from_instance(&inst))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn inspect(args: &InspectArgs) -> Result<()> {
    let tensors = read_tensors(&args.file)?;
    println!("{}: {} tensors", args.file.display(), tensors.len());
    for t in &tensors {
        let shape = t
            .dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("x");
        if t.values.is_empty() {
            println!("{}: {shape} (empty)", t.name);
            continue;
        }
        let mut min = f32::INFINITY;
        let mut max = f32::NEG_INFINITY;
        let mut sum = 0.0f64;
        for &x in &t.values {
            min = min.min(x);
            max = max.max(x);
            sum += x as f64;
        }
        let mean = sum / t.values.len() as f64;
        println!("{}: {shape} min={min} max={max} mean={mean:.6}", t.name);
    }
    Ok(())
}
