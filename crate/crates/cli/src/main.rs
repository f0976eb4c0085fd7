use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fastconv::block::BlockKind;
use fastconv::data::MotionClass;
use fastconv::Shape5;
use fastconv_cli::check::Target;
use fastconv_cli::run::{EvalConfig, Split, TrainRun};
use fastconv_cli::{
    audit, bench, check, load_config, parse_dims, run, slices, synth, write_json, Outcome,
};

/// Spatio-temporal convolution blocks: audits, gradient checks, training,
/// benchmarks and XT/YT slices. Reports go to stdout as JSON, logs to stderr.
///
/// Exit status: 0 success, 1 a check failed, 2 usage or configuration error.
#[derive(Parser)]
#[command(name = "fastconv", version)]
struct Cli {
    /// Worker threads for convolution and batch loading.
    #[arg(long, global = true, env = "FASTCONV_THREADS")]
    threads: Option<usize>,
    /// Also write the resolved options of this run to a file.
    #[arg(long, global = true, value_name = "PATH")]
    resolved_config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parameter, depth, FLOP and activation accounting of a preset network.
    Audit(AuditArgs),
    /// Finite-difference gradient checks in f64.
    Gradcheck(GradcheckArgs),
    /// Train on the synthetic motion set; writes record.csv, record.json,
    /// resolved_config.json and model/ under --out.
    Train(TrainArgs),
    /// Accuracy and loss of a saved model on a synthetic split.
    Eval(EvalArgs),
    /// Block throughput and optimized-vs-oracle convolution timing.
    Bench(BenchArgs),
    /// Write the XT and YT slices of a clip as xt.pgm and yt.pgm.
    Slices(SlicesArgs),
    /// Render one synthetic clip.
    Synth(SynthArgs),
}

fn kind(s: &str) -> Result<BlockKind, String> {
    s.parse().map_err(|e: fastconv::Error| e.to_string())
}

#[derive(Clone)]
struct Kinds(Vec<BlockKind>);

fn kinds(s: &str) -> Result<Kinds, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Kinds(BlockKind::ALL.to_vec()));
    }
    s.split(',')
        .map(|k| kind(k.trim()))
        .collect::<Result<_, _>>()
        .map(Kinds)
}

fn class(s: &str) -> Result<MotionClass, String> {
    s.parse().map_err(|e: fastconv::Error| e.to_string())
}

#[derive(Clone)]
struct Classes(Vec<MotionClass>);

fn classes(s: &str) -> Result<Classes, String> {
    s.split(',')
        .map(|c| class(c.trim()))
        .collect::<Result<_, _>>()
        .map(Classes)
}

fn dims3(s: &str) -> Result<[usize; 3], String> {
    parse_dims::<3>(s)
}

fn shape(s: &str) -> Result<Shape5, String> {
    let [n, c, t, h, w] = parse_dims::<5>(s)?;
    Ok(Shape5::new(n, c, t, h, w))
}

#[derive(Args)]
struct AuditArgs {
    /// JSON options; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `tiny` or `resnet34`.
    #[arg(long)]
    arch: Option<String>,
    #[arg(long, value_parser = kind)]
    kind: Option<BlockKind>,
    #[arg(long)]
    classes: Option<usize>,
    /// Input clip extent as T,H,W.
    #[arg(long, value_parser = dims3)]
    input: Option<[usize; 3]>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// A block kind, a comma-separated list, or `all`.
    #[arg(long, value_parser = kinds)]
    kind: Option<Kinds>,
    #[arg(long, value_enum)]
    target: Option<Target>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Scale every analytic gradient by this factor; the check must then fail.
    #[arg(long)]
    corrupt: Option<f64>,
    /// Entries sampled per tensor in network checks.
    #[arg(long)]
    entries: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "train_out")]
    out: PathBuf,
    #[arg(long, value_parser = kind)]
    kind: Option<BlockKind>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Shuffle seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    net_seed: Option<u64>,
    #[arg(long)]
    data_seed: Option<u64>,
    /// Comma-separated motion classes, e.g. move_up,move_down.
    #[arg(long, value_parser = classes)]
    classes: Option<Classes>,
    #[arg(long)]
    train_per_class: Option<usize>,
    #[arg(long)]
    val_per_class: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Stop once validation accuracy reaches this value.
    #[arg(long)]
    target_acc: Option<f64>,
    /// Record wall time per epoch (makes records differ between runs).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Model directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Training config (typically the run's resolved_config.json) providing the data settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "val")]
    split: Split,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// A block kind, a comma-separated list, or `all`.
    #[arg(long, value_parser = kinds)]
    kind: Option<Kinds>,
    /// Block input as N,C,T,H,W.
    #[arg(long, value_parser = shape)]
    shape: Option<Shape5>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Skip the oracle comparison.
    #[arg(long)]
    no_oracle: bool,
}

#[derive(Args)]
struct SlicesArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Clip as .t5b or a frame directory.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    row: Option<usize>,
    #[arg(long)]
    col: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = class)]
    class: Option<MotionClass>,
    #[arg(long)]
    seed: Option<u64>,
    /// A .t5b file, or a directory for PPM frames.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    speed: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    /// Canvas as T,H,W.
    #[arg(long, value_parser = dims3)]
    canvas: Option<[usize; 3]>,
}

fn dispatch(command: Command, threads: Option<usize>) -> anyhow::Result<Outcome> {
    match command {
        Command::Audit(a) => {
            let mut cfg: audit::AuditConfig = load_config(a.config.as_deref(), "audit")?;
            set(&mut cfg.arch, a.arch);
            set(&mut cfg.kind, a.kind);
            cfg.classes = a.classes.or(cfg.classes);
            cfg.input = a.input.or(cfg.input);
            audit::audit(&cfg)
        }
        Command::Gradcheck(a) => {
            let mut cfg: check::CheckConfig = load_config(a.config.as_deref(), "gradcheck")?;
            set(&mut cfg.kinds, a.kind.map(|k| k.0));
            set(&mut cfg.target, a.target);
            set(&mut cfg.seed, a.seed);
            set(&mut cfg.tolerance, a.tolerance);
            set(&mut cfg.network_entries, a.entries);
            cfg.corrupt = a.corrupt.or(cfg.corrupt);
            check::gradcheck(&cfg)
        }
        Command::Train(a) => {
            let mut cfg: TrainRun = load_config(a.config.as_deref(), "train")?;
            if let Some(k) = a.kind {
                cfg.kind = k;
                if let Some(n) = &mut cfg.network {
                    n.block_kind = k;
                }
            }
            set(&mut cfg.train.epochs, a.epochs);
            set(&mut cfg.train.seed, a.seed);
            set(&mut cfg.net_seed, a.net_seed);
            set(&mut cfg.data.seed, a.data_seed);
            set(&mut cfg.data.spec.classes, a.classes.map(|c| c.0));
            set(&mut cfg.data.train_per_class, a.train_per_class);
            set(&mut cfg.data.val_per_class, a.val_per_class);
            set(&mut cfg.train.batch_size, a.batch_size);
            cfg.train.target_val_acc = a.target_acc.or(cfg.train.target_val_acc);
            cfg.train.timing |= a.timing;
            if let Some(t) = threads {
                cfg.train.loader_workers = cfg.train.loader_workers.min(t);
            }
            run::train(cfg, &a.out)
        }
        Command::Eval(a) => {
            let run: TrainRun = load_config(a.config.as_deref(), "train")?;
            let cfg = EvalConfig {
                model: a.model,
                data: run.data,
                split: a.split,
                batch_size: a.batch_size,
            };
            run::eval(&cfg)
        }
        Command::Bench(a) => {
            let mut cfg: bench::BenchConfig = load_config(a.config.as_deref(), "bench")?;
            set(&mut cfg.kinds, a.kind.map(|k| k.0));
            set(&mut cfg.shape, a.shape);
            set(&mut cfg.repeats, a.repeats);
            cfg.oracle &= !a.no_oracle;
            bench::bench(&cfg)
        }
        Command::Slices(a) => {
            let mut cfg: slices::SlicesConfig = load_config(a.config.as_deref(), "slices")?;
            set(&mut cfg.input, a.input);
            set(&mut cfg.row, a.row);
            set(&mut cfg.col, a.col);
            set(&mut cfg.out, a.out);
            anyhow::ensure!(!cfg.input.as_os_str().is_empty(), "slices needs --in");
            anyhow::ensure!(!cfg.out.as_os_str().is_empty(), "slices needs --out");
            slices::slices(&cfg)
        }
        Command::Synth(a) => {
            let mut cfg: synth::SynthConfig = load_config(a.config.as_deref(), "synth")?;
            set(&mut cfg.class, a.class);
            set(&mut cfg.seed, a.seed);
            set(&mut cfg.out, a.out);
            set(&mut cfg.spec.speed, a.speed);
            set(&mut cfg.spec.noise, a.noise);
            set(&mut cfg.spec.canvas, a.canvas);
            synth::synth(&cfg)
        }
    }
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match dispatch(cli.command, cli.threads) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(path) = &cli.resolved_config {
        if let Err(e) = write_json(path, &outcome.resolved) {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    let text = match serde_json::to_string_pretty(&outcome.report) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = writeln!(stdout, "{text}").and_then(|_| stdout.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
