//! Command-line driver for the accelerator model.
//!
//! Subcommands: `gen` (synthetic tensors), `run` (functional tiled forward),
//! `sim` (cycle-level simulation), `sweep` (size x tile cross product),
//! `profile` (operation-count hot spots), `resources` (BRAM/DSP estimate).
//!
//! Exit codes: 0 success, 2 usage or config error, 3 input-file error,
//! 4 internal simulation error. Errors go to stderr; data goes to files or
//! stdout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dlau_core::io::{gen_synthetic, load_run_config, read_tensor, write_tensor};
use dlau_core::nn::{matvec_naive, profile_ops, NetworkSpec, Workload};
use dlau_core::perf::{estimate_resources, resources_csv, speedup_report, RunRecord};
use dlau_core::pwl::{build_pwl_table, Activation};
use dlau_core::sim::{sim_run, stats_csv_header, stats_csv_row, SimConfig};
use dlau_core::tiling::{tiled_forward, TileConfig};
use dlau_core::{Error, Tensor2D};

#[derive(Parser)]
#[command(
    name = "dlau",
    version,
    about = "Cycle-level model of a tiled three-stage FPGA neural-network accelerator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic tensor (uniform in [-0.5, 0.5)) as DLT1.
    Gen {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Functional tiled forward pass over tensors from files.
    Run {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 32)]
        tile_size: usize,
        /// Use the exact sigmoid instead of the piecewise-linear table.
        #[arg(long)]
        exact_sigmoid: bool,
        /// Segment width of the piecewise-linear table.
        #[arg(long, default_value_t = 0.5)]
        pwl_k: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the max abs difference against the untiled reference.
        #[arg(long)]
        check: bool,
    },
    /// Cycle-level simulation on synthetic data (weights from `seed`,
    /// inputs from `seed + 1`). Flags override config-file values.
    Sim {
        /// Config file in key = value format.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: SimOverrides,
        /// Keep weight tiles banked across batch rows instead of
        /// re-streaming them per row.
        #[arg(long)]
        weights_resident: bool,
        /// Write the activated outputs as DLT1.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the stats CSV here instead of stdout.
        #[arg(long)]
        stats_out: Option<PathBuf>,
    },
    /// Simulate every size x tile combination and report cycle ratios.
    Sweep(SweepArgs),
    /// Exact operation counts of a reference workload.
    Profile {
        /// One of: feedforward, rbm, bp.
        #[arg(long)]
        workload: String,
        /// Layer sizes, comma separated (e.g. 784,256,256,10).
        #[arg(long, value_delimiter = ',', required = true)]
        layers: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        batch: usize,
    },
    /// Calibrated BRAM/DSP estimate for a tile size.
    Resources {
        #[arg(long, default_value_t = 32)]
        tile_size: usize,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Square network sizes (Ni = No), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Tile sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    tiles: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long, default_value_t = 32.0)]
    dma_bw: f64,
    #[arg(long, default_value_t = 0.5)]
    pwl_k: f64,
    /// Label of the ratio baseline (default: first run in sorted order).
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Flag-level overrides of the run config keys.
#[derive(Args)]
struct SimOverrides {
    #[arg(long)]
    ni: Option<usize>,
    #[arg(long)]
    no: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    tile_size: Option<usize>,
    #[arg(long)]
    fifo_depth: Option<usize>,
    #[arg(long)]
    dma_bw: Option<f64>,
    #[arg(long)]
    pwl_k: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    clock_mhz: Option<f64>,
}

impl SimOverrides {
    fn as_pairs(&self) -> Vec<(String, String)> {
        let mut pairs = Vec::new();
        let mut push = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                pairs.push((key.to_string(), v));
            }
        };
        push("ni", self.ni.map(|v| v.to_string()));
        push("no", self.no.map(|v| v.to_string()));
        push("batch", self.batch.map(|v| v.to_string()));
        push("tile_size", self.tile_size.map(|v| v.to_string()));
        push("fifo_depth", self.fifo_depth.map(|v| v.to_string()));
        push("dma_words_per_cycle", self.dma_bw.map(|v| v.to_string()));
        push("pwl_k", self.pwl_k.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("clock_mhz", self.clock_mhz.map(|v| v.to_string()));
        pairs
    }
}

/// Usage/config errors exit 2, input-file errors 3, simulation errors 4.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_)
        | Error::BadMagic { .. }
        | Error::UnsupportedRank(_)
        | Error::UnsupportedDtype(_)
        | Error::TruncatedPayload { .. }
        | Error::NonFinite { .. }
        | Error::DimensionMismatch(_)
        | Error::LayerShape { .. } => 3,
        Error::Deadlock { .. } => 4,
        _ => 2,
    }
}

fn usage_error(msg: &str) -> (u8, String) {
    (2, msg.to_string())
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn activation_for(exact: bool, pwl_k: f64) -> Result<Activation, Error> {
    if exact {
        Ok(Activation::ExactSigmoid)
    } else {
        Ok(Activation::PwlSigmoid(build_pwl_table(pwl_k)?))
    }
}

fn cmd_run(
    weights: &Path,
    input: &Path,
    tile_size: usize,
    exact_sigmoid: bool,
    pwl_k: f64,
    out: Option<&Path>,
    check: bool,
) -> Result<(), Error> {
    let w = read_tensor(weights)?;
    let x = read_tensor(input)?;
    let activation = activation_for(exact_sigmoid, pwl_k)?;
    let cfg = TileConfig::new(tile_size, x.rows())?;
    let y = tiled_forward(&w, &x, &cfg, &activation)?;
    if let Some(path) = out {
        write_tensor(path, &y)?;
    }
    if check {
        let mut oracle = Tensor2D::zeros(x.rows(), w.cols());
        for n in 0..x.rows() {
            let pre = matvec_naive(&w, x.row(n))?;
            for (j, &v) in pre.iter().enumerate() {
                oracle.set(n, j, activation.apply_f32(v));
            }
        }
        println!("max_abs_diff={}", y.max_abs_diff(&oracle)?);
    }
    Ok(())
}

fn cmd_sim(
    config: Option<&Path>,
    overrides: &SimOverrides,
    weights_resident: bool,
    out: Option<&Path>,
    stats_out: Option<&Path>,
) -> Result<(), Error> {
    let run = load_run_config(config, &overrides.as_pairs())?;
    let mut cfg = run.sim_config();
    cfg.weights_resident = weights_resident;
    let table = build_pwl_table(run.pwl_k)?;
    let w = gen_synthetic(run.ni, run.no, run.seed);
    let x = gen_synthetic(run.batch, run.ni, run.seed.wrapping_add(1));
    let (y, stats) = sim_run(&cfg, &w, &x, &table)?;
    if let Some(path) = out {
        write_tensor(path, &y)?;
    }
    let csv = format!(
        "{}\n{}\n",
        stats_csv_header(),
        stats_csv_row(run.ni, run.no, run.batch, &cfg, &stats)
    );
    write_or_print(stats_out, &csv)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Error> {
    let table = build_pwl_table(args.pwl_k)?;
    let mut runs = Vec::with_capacity(args.sizes.len() * args.tiles.len());
    for &size in &args.sizes {
        for &tile in &args.tiles {
            let mut cfg = SimConfig::new(tile);
            cfg.dma_words_per_cycle = args.dma_bw;
            let w = gen_synthetic(size, size, args.seed);
            let x = gen_synthetic(args.batch, size, args.seed.wrapping_add(1));
            let (_, stats) = sim_run(&cfg, &w, &x, &table)?;
            runs.push(RunRecord {
                label: format!("n{size}_t{tile}"),
                ni: size,
                no: size,
                batch: args.batch,
                cfg,
                stats,
            });
        }
    }
    let default_baseline = runs
        .iter()
        .min_by_key(|r| (r.ni, r.no, r.cfg.tile_size, r.label.clone()))
        .map(|r| r.label.clone())
        .expect("sizes and tiles are non-empty");
    let baseline = args.baseline.as_deref().unwrap_or(&default_baseline);
    let csv = speedup_report(&runs, baseline)?;
    write_or_print(args.out.as_deref(), &csv)
}

fn cmd_profile(workload: &str, layers: &[usize], batch: usize) -> Result<(), (u8, String)> {
    let workload: Workload = workload.parse().map_err(|e: String| usage_error(&e))?;
    if layers.len() < 2 {
        return Err(usage_error("--layers needs at least two sizes"));
    }
    if batch == 0 {
        return Err(usage_error("--batch must be >= 1"));
    }
    let spec = NetworkSpec::new(layers.to_vec(), Activation::ExactSigmoid)
        .map_err(|e| usage_error(&e.to_string()))?;
    let r = profile_ops(workload, &spec, batch);
    let layers_tag = layers
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("x");
    println!("workload,layers,batch,mm_ops,activation_ops,vector_ops,mm_share,activation_share,vector_share");
    println!(
        "{},{layers_tag},{batch},{},{},{},{},{},{}",
        match workload {
            Workload::Feedforward => "feedforward",
            Workload::Rbm => "rbm",
            Workload::Backprop => "bp",
        },
        r.mm_ops,
        r.activation_ops,
        r.vector_ops,
        r.mm_share,
        r.activation_share,
        r.vector_share
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), (u8, String)> {
    let lift = |r: Result<(), Error>| r.map_err(|e| (exit_code_for(&e), e.to_string()));
    match cli.command {
        Command::Gen {
            rows,
            cols,
            seed,
            out,
        } => {
            if rows == 0 || cols == 0 {
                return Err(usage_error("--rows and --cols must be >= 1"));
            }
            lift(write_tensor(&out, &gen_synthetic(rows, cols, seed)))
        }
        Command::Run {
            weights,
            input,
            tile_size,
            exact_sigmoid,
            pwl_k,
            out,
            check,
        } => {
            if tile_size == 0 {
                return Err(usage_error("--tile-size must be >= 1"));
            }
            lift(cmd_run(
                &weights,
                &input,
                tile_size,
                exact_sigmoid,
                pwl_k,
                out.as_deref(),
                check,
            ))
        }
        Command::Sim {
            config,
            overrides,
            weights_resident,
            out,
            stats_out,
        } => lift(cmd_sim(
            config.as_deref(),
            &overrides,
            weights_resident,
            out.as_deref(),
            stats_out.as_deref(),
        )),
        Command::Sweep(args) => {
            if args.sizes.iter().chain(&args.tiles).any(|&v| v == 0) {
                return Err(usage_error("--sizes and --tiles entries must be >= 1"));
            }
            if args.batch == 0 {
                return Err(usage_error("--batch must be >= 1"));
            }
            lift(cmd_sweep(&args))
        }
        Command::Profile {
            workload,
            layers,
            batch,
        } => cmd_profile(&workload, &layers, batch),
        Command::Resources { tile_size } => {
            if tile_size == 0 {
                return Err(usage_error("--tile-size must be >= 1"));
            }
            print!("{}", resources_csv(&estimate_resources(tile_size)));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
