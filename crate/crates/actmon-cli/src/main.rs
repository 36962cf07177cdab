use actmon_cli::{
    cmd_build, cmd_eval, cmd_extend, cmd_gen, cmd_inspect, parse_neurons, BuildOpts, CliError,
    EvalOpts, ExtendOpts, GenOpts, InspectOpts, MonitorKind, ThresholdArg,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// Build and evaluate runtime monitors over neural network activations.
#[derive(Parser)]
#[command(name = "actmon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a monitor from a network and a training dataset.
    Build(BuildArgs),
    /// Evaluate a dataset against a stored monitor and print a report.
    Eval(EvalArgs),
    /// Generate synthetic train/held-out/OOD datasets from a spec file.
    Gen(GenArgs),
    /// Continue a stored monitor's build loop over additional data.
    Extend(ExtendArgs),
    /// Print a stored monitor's configuration and contents.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Minmax,
    Pattern,
}

#[derive(Args)]
struct BuildArgs {
    /// Network file (JSON).
    #[arg(long)]
    network: PathBuf,
    /// Training dataset (CSV or raw f32).
    #[arg(long)]
    data: PathBuf,
    /// Monitored layer k (1-based).
    #[arg(long)]
    layer: usize,
    /// Perturbation layer k_p (0 = input); must be below --layer.
    #[arg(long)]
    kp: usize,
    /// L-infinity perturbation radius at layer k_p.
    #[arg(long, allow_negative_numbers = true)]
    delta: f64,
    /// Monitor family.
    #[arg(long = "type", value_enum)]
    kind: KindArg,
    /// Bits per monitored neuron (pattern monitors).
    #[arg(long, default_value_t = 1)]
    bits: u32,
    /// zero | quantile:p1,p2,... | explicit:PATH
    #[arg(long, default_value = "zero")]
    thresholds: String,
    /// Comma-separated 0-based neuron indices (default: all).
    #[arg(long)]
    neurons: Option<String>,
    /// Output monitor file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    monitor: PathBuf,
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Also write one verdict line per input to this file.
    #[arg(long)]
    verdicts: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Overrides the spec file's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the spec file's dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Cluster spec file (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Datasets are written to <prefix>_{train,held_out,ood}.csv.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct ExtendArgs {
    #[arg(long)]
    monitor: PathBuf,
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    monitor: PathBuf,
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Build(args) => {
            let thresholds = ThresholdArg::parse(&args.thresholds)?;
            let neurons = args.neurons.as_deref().map(parse_neurons).transpose()?;
            cmd_build(BuildOpts {
                network: args.network,
                data: args.data,
                layer_k: args.layer,
                layer_kp: args.kp,
                delta: args.delta,
                kind: match args.kind {
                    KindArg::Minmax => MonitorKind::MinMax,
                    KindArg::Pattern => MonitorKind::Pattern,
                },
                bits: args.bits,
                thresholds,
                neurons,
                out: args.out,
            })
        }
        Command::Eval(args) => cmd_eval(EvalOpts {
            monitor: args.monitor,
            network: args.network,
            data: args.data,
            verdicts: args.verdicts,
        })
        .map(|report| report.render()),
        Command::Gen(args) => cmd_gen(GenOpts {
            seed: args.seed,
            dim: args.dim,
            spec: args.spec,
            out_prefix: args.out_prefix,
        }),
        Command::Extend(args) => cmd_extend(ExtendOpts {
            monitor: args.monitor,
            network: args.network,
            data: args.data,
            out: args.out,
        }),
        Command::Inspect(args) => cmd_inspect(InspectOpts {
            monitor: args.monitor,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
