//! `udcs` — command-line front end for the dyadic distributed-sampling codec.
//!
//! Exit codes: 0 ok, 2 bad spec/arguments, 3 encoding gave up, 4 I/O error,
//! 5 malformed codeword stream.

mod cmds;
mod spec;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use udcs::codec::Variant;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Unbounded,
    Bounded,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Unbounded => Variant::Unbounded,
            VariantArg::Bounded => Variant::Bounded,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "udcs",
    version,
    about = "Dyadic codec for one-shot sampling of continuous distributions",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw samples from a distribution spec and write a codeword stream
    Encode {
        /// Path to a distribution spec (JSON)
        #[arg(long)]
        spec: PathBuf,
        /// Number of codewords to emit
        #[arg(long, default_value_t = 1000)]
        count: u64,
        #[arg(long, value_enum, default_value_t = VariantArg::Unbounded)]
        variant: VariantArg,
        /// Deepest refinement level before a draw is retried
        #[arg(long = "k-max", default_value_t = 40)]
        k_max: i32,
        /// RNG seed (random if omitted; always echoed to stderr)
        #[arg(long)]
        seed: Option<u64>,
        /// Output stream file
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a stream file into samples, one CSV row per codeword
    Decode {
        /// Path to a stream file produced by `encode`
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact expected-length and entropy report for a distribution spec
    Explen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = VariantArg::Unbounded)]
        variant: VariantArg,
        /// Enumeration depth; deeper is tighter but slower
        #[arg(long = "k-max", default_value_t = 16)]
        k_max: i32,
    },
    /// Closed-form mean-length bounds applicable to a distribution spec
    Bounds {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Erosion entropy of a region spec and the norm inequality check
    Erosion {
        /// Path to a region spec (JSON)
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Relative-entropy lower bound against the codec's implied distribution
    Lb {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = VariantArg::Unbounded)]
        variant: VariantArg,
        /// Shallowest level of the implied-distribution table
        #[arg(long = "k-lo", default_value_t = -12, allow_hyphen_values = true)]
        k_lo: i32,
        /// Deepest level of the implied-distribution table
        #[arg(long = "k-hi", default_value_t = 30)]
        k_hi: i32,
        /// Per-axis index cap, as a power of two (>= 63 means unlimited)
        #[arg(long = "v-max-log2", default_value_t = 62)]
        v_max_log2: u32,
        /// Quadrature cells (default 2^16 in 1-D, 2^20 split across axes)
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Two-party correlation protocol built on the bounded codec
    Bell {
        #[command(subcommand)]
        mode: BellMode,
    },
    /// Regenerate every report artifact into a directory
    Figures {
        #[arg(long)]
        outdir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum BellMode {
    /// Estimate the outcome correlation over many protocol rounds
    Experiment {
        /// First party's detector angle (radians)
        #[arg(long = "theta-a", allow_hyphen_values = true)]
        theta_a: f64,
        /// Second party's detector angle (radians)
        #[arg(long = "theta-b", allow_hyphen_values = true)]
        theta_b: f64,
        #[arg(long, default_value_t = 100_000)]
        rounds: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Expected message length over a uniform grid of phases (CSV)
    Sweep {
        /// Number of grid points in [0, 1)
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long = "k-max", default_value_t = 17)]
        k_max: i32,
        /// Output CSV (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Encode { spec, count, variant, k_max, seed, out } => {
            cmds::encode(&spec, variant.into(), count, k_max, seed, &out)
        }
        Cmd::Decode { input, seed, out } => cmds::decode(&input, seed, out.as_deref()),
        Cmd::Explen { spec, variant, k_max } => cmds::explen(&spec, variant.into(), k_max),
        Cmd::Bounds { spec, seed } => cmds::bounds(&spec, seed),
        Cmd::Erosion { spec, seed } => cmds::erosion(&spec, seed),
        Cmd::Lb { spec, variant, k_lo, k_hi, v_max_log2, steps } => {
            cmds::lower_bound(&spec, variant.into(), k_lo, k_hi, v_max_log2, steps)
        }
        Cmd::Bell { mode } => match mode {
            BellMode::Experiment { theta_a, theta_b, rounds, seed } => {
                cmds::bell_experiment(theta_a, theta_b, rounds, seed)
            }
            BellMode::Sweep { grid, k_max, out } => cmds::bell_sweep(grid, k_max, out.as_deref()),
        },
        Cmd::Figures { outdir, seed } => cmds::figures(&outdir, seed),
    };
    if let Err(f) = result {
        eprintln!("error: {}", f.message);
        std::process::exit(f.code);
    }
}
